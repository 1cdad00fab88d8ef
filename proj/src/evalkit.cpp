#include "reid/evalkit.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace reid {

CmcMapResult cmc_map(const std::vector<EvalPoint>& probe, const std::vector<EvalPoint>& gallery) {
    if (probe.empty() || gallery.empty()) {
        throw std::invalid_argument("cmc_map: probe and gallery must be nonempty");
    }

    CmcMapResult out;
    out.cmc.assign(gallery.size(), 0.0);
    double ap_sum = 0.0;

    struct Ranked {
        double dist;
        TrackletId id;
        bool positive;
    };

    for (const EvalPoint& q : probe) {
        std::vector<Ranked> ranked;
        ranked.reserve(gallery.size());
        for (const EvalPoint& g : gallery) {
            if (g.identity == q.identity && g.camera == q.camera) {
                continue;  // same id + same camera excluded
            }
            ranked.push_back({l2_distance(q.emb, g.emb), g.id, g.identity == q.identity});
        }
        std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
            if (a.dist != b.dist) {
                return a.dist < b.dist;
            }
            return a.id < b.id;
        });

        std::size_t first_rank = 0;
        std::size_t positives_seen = 0;
        std::size_t total_positives = 0;
        double ap = 0.0;
        for (std::size_t r = 0; r < ranked.size(); ++r) {
            if (ranked[r].positive) {
                ++total_positives;
                ++positives_seen;
                ap += static_cast<double>(positives_seen) / static_cast<double>(r + 1);
                if (first_rank == 0) {
                    first_rank = r + 1;
                }
            }
        }
        if (total_positives == 0) {
            throw std::runtime_error("cmc_map: probe " + std::to_string(q.id) + " (identity " +
                                     std::to_string(q.identity) +
                                     ") has no cross-camera positive in the gallery");
        }
        ap /= static_cast<double>(total_positives);
        ap_sum += ap;
        out.cmc[first_rank - 1] += 1.0;
    }

    // Turn first-match counts into a cumulative fraction.
    double cum = 0.0;
    for (double& v : out.cmc) {
        cum += v;
        v = cum / static_cast<double>(probe.size());
    }
    out.map = ap_sum / static_cast<double>(probe.size());
    return out;
}

double label_accuracy(const std::map<TrackletId, IdentityId>& pseudo,
                      const std::map<TrackletId, IdentityId>& gt) {
    if (pseudo.empty()) {
        return 1.0;
    }
    std::size_t correct = 0;
    for (const auto& [id, identity] : pseudo) {
        auto it = gt.find(id);
        if (it == gt.end()) {
            throw std::invalid_argument("label_accuracy: id " + std::to_string(id) +
                                        " has no ground truth");
        }
        if (it->second == identity) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(pseudo.size());
}

SelectionQuality selection_quality(const std::set<TrackletId>& selected,
                                   const std::map<TrackletId, IdentityId>& pseudo,
                                   const std::map<TrackletId, IdentityId>& gt) {
    std::size_t all_correct = 0;
    for (const auto& [id, identity] : pseudo) {
        auto it = gt.find(id);
        if (it == gt.end()) {
            throw std::invalid_argument("selection_quality: id " + std::to_string(id) +
                                        " has no ground truth");
        }
        if (it->second == identity) {
            ++all_correct;
        }
    }

    std::size_t selected_correct = 0;
    for (TrackletId id : selected) {
        auto it = pseudo.find(id);
        if (it == pseudo.end()) {
            throw std::invalid_argument("selection_quality: selected id " + std::to_string(id) +
                                        " is not in the pseudo table");
        }
        if (gt.at(id) == it->second) {
            ++selected_correct;
        }
    }

    SelectionQuality q;
    q.precision = selected.empty()
                      ? 1.0
                      : static_cast<double>(selected_correct) / static_cast<double>(selected.size());
    q.recall = all_correct == 0
                   ? 1.0
                   : static_cast<double>(selected_correct) / static_cast<double>(all_correct);
    return q;
}

std::pair<std::vector<EvalPoint>, std::vector<EvalPoint>> build_reid_protocol(
    const Dataset& data, const std::map<TrackletId, Embedding>& embeddings) {
    std::vector<EvalPoint> probe;
    std::vector<EvalPoint> gallery;
    for (const Tracklet& t : data.tracklets) {
        if (!t.identity_gt) {
            throw std::invalid_argument("build_reid_protocol: tracklet " + std::to_string(t.id) +
                                        " has no ground-truth identity");
        }
        EvalPoint p{t.id, embeddings.at(t.id), *t.identity_gt, t.camera_id};
        gallery.push_back(p);

        bool has_cross_camera_peer = false;
        for (const Tracklet& other : data.tracklets) {
            if (other.id != t.id && other.identity_gt == t.identity_gt &&
                other.camera_id != t.camera_id) {
                has_cross_camera_peer = true;
                break;
            }
        }
        if (has_cross_camera_peer) {
            probe.push_back(std::move(p));
        }
    }
    return {std::move(probe), std::move(gallery)};
}

}  // namespace reid
