#include "reid/pseudo_label.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>

namespace reid {

std::map<TrackletId, PseudoEntry> estimate_labels(const std::vector<LabeledPoint>& labeled,
                                                  const std::vector<UnlabeledPoint>& unlabeled) {
    if (labeled.empty()) {
        throw std::invalid_argument("estimate_labels: no labeled points");
    }
    std::set<IdentityId> identities;
    for (const LabeledPoint& p : labeled) {
        identities.insert(p.identity);
    }
    if (identities.size() < 2) {
        throw std::invalid_argument(
            "estimate_labels: need at least 2 labeled identities, have " +
            std::to_string(identities.size()));
    }
    const std::size_t dim = labeled.front().emb.dim();
    for (const LabeledPoint& p : labeled) {
        if (p.emb.dim() != dim) {
            throw std::invalid_argument("estimate_labels: labeled embedding dim mismatch");
        }
    }
    for (const UnlabeledPoint& p : unlabeled) {
        if (p.emb.dim() != dim) {
            throw std::invalid_argument("estimate_labels: unlabeled embedding dim mismatch");
        }
    }

    // Canonical id order makes the smallest-id tie-break a strict-less scan.
    std::vector<const LabeledPoint*> anchors;
    anchors.reserve(labeled.size());
    for (const LabeledPoint& p : labeled) {
        anchors.push_back(&p);
    }
    std::sort(anchors.begin(), anchors.end(),
              [](const LabeledPoint* a, const LabeledPoint* b) { return a->id < b->id; });

    // d_inter depends only on the anchor and the labeled set.
    std::map<TrackletId, double> inter;
    for (const LabeledPoint* a : anchors) {
        double best = std::numeric_limits<double>::infinity();
        for (const LabeledPoint* b : anchors) {
            if (b->identity == a->identity) {
                continue;
            }
            best = std::min(best, l2_distance(a->emb, b->emb));
        }
        inter[a->id] = best;  // finite: >= 2 identities exist
    }

    std::map<TrackletId, PseudoEntry> out;
    for (const UnlabeledPoint& u : unlabeled) {
        const LabeledPoint* nearest = nullptr;
        double best = std::numeric_limits<double>::infinity();
        for (const LabeledPoint* a : anchors) {
            const double d = l2_distance(u.emb, a->emb);
            if (d < best) {
                best = d;
                nearest = a;
            }
        }
        PseudoEntry e;
        e.identity = nearest->identity;
        e.record = DistanceRecord{nearest->id, best, inter.at(nearest->id)};
        out[u.id] = e;
    }
    return out;
}

}  // namespace reid
