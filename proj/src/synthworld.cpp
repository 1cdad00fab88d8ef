#include "reid/synthworld.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include "reid/pam.hpp"
#include "reid/rng.hpp"

namespace reid {

namespace {

constexpr std::uint64_t kCenterStream = 0x1D;
constexpr std::uint64_t kTrackletStream = 0x7C;
constexpr std::uint64_t kOneExampleStream = 0x51;
constexpr std::uint64_t kRatioStream = 0xA3;

std::vector<double> gaussian_vector(std::mt19937_64& rng, std::size_t n, double scale) {
    std::vector<double> v(n);
    for (double& x : v) {
        x = gaussian(rng) * scale;
    }
    return v;
}

}  // namespace

void WorldConfig::validate() const {
    if (n_identities < 2) {
        throw std::invalid_argument("WorldConfig: need at least 2 identities");
    }
    if (n_cameras < 1 || tracklets_per_identity_per_camera < 1 || frames < 1) {
        throw std::invalid_argument("WorldConfig: counts must be positive");
    }
    if (height == 0 || width == 0 || channels == 0) {
        throw std::invalid_argument("WorldConfig: map dimensions must be positive");
    }
    if (identity_spread <= 0.0) {
        throw std::invalid_argument("WorldConfig: identity_spread must be positive");
    }
    if (camera_offset_scale < 0.0 || frame_noise < 0.0 || cell_noise < 0.0) {
        throw std::invalid_argument("WorldConfig: noise scales must be non-negative");
    }
    if (distractor_count < 0) {
        throw std::invalid_argument("WorldConfig: distractor_count must be non-negative");
    }
    if (confusable_delta < 0.0) {
        throw std::invalid_argument("WorldConfig: confusable_delta must be non-negative");
    }
    if (striped) {
        split_rows(height);  // rejects heights the default ratio cannot slice
    }
}

Dataset generate(const WorldConfig& cfg) {
    cfg.validate();

    const std::size_t n_centers =
        static_cast<std::size_t>(cfg.n_identities + cfg.distractor_count);

    std::mt19937_64 master(mix_seed(cfg.seed, kCenterStream));
    std::vector<std::vector<double>> centers;
    centers.reserve(n_centers);
    for (std::size_t i = 0; i < n_centers; ++i) {
        centers.push_back(gaussian_vector(master, cfg.channels, cfg.identity_spread));
    }
    std::vector<std::vector<double>> camera_offsets;
    for (int c = 0; c < cfg.n_cameras; ++c) {
        camera_offsets.push_back(gaussian_vector(master, cfg.channels, cfg.camera_offset_scale));
    }

    const PartRanges stripes = cfg.striped ? split_rows(cfg.height) : PartRanges{};
    std::vector<std::vector<std::vector<double>>> part_deltas;  // [identity][part][channel]
    if (cfg.striped) {
        part_deltas.reserve(n_centers);
        for (std::size_t i = 0; i < n_centers; ++i) {
            std::vector<std::vector<double>> deltas;
            for (std::size_t p = 0; p < stripes.parts.size(); ++p) {
                deltas.push_back(gaussian_vector(master, cfg.channels, cfg.identity_spread));
            }
            part_deltas.push_back(std::move(deltas));
        }
    }

    if (cfg.confusable_delta > 0.0) {
        centers[1] = centers[0];
        centers[1][0] += cfg.confusable_delta;
        if (cfg.striped) {
            part_deltas[1] = part_deltas[0];
        }
    }

    // Row -> part index, for striped means.
    std::vector<std::size_t> row_part(cfg.height, 0);
    if (cfg.striped) {
        for (std::size_t p = 0; p < stripes.parts.size(); ++p) {
            for (std::size_t r = stripes.parts[p].begin; r < stripes.parts[p].end; ++r) {
                row_part[r] = p;
            }
        }
    }

    Dataset data;
    data.n_identities = cfg.n_identities;
    data.n_cameras = cfg.n_cameras;
    data.distractor_count = cfg.distractor_count;

    const auto make_tracklet = [&](TrackletId tid, IdentityId identity, int camera) {
        std::mt19937_64 rng(
            mix_seed(cfg.seed, kTrackletStream + static_cast<std::uint64_t>(tid)));
        Tracklet t;
        t.id = tid;
        t.identity_gt = identity;
        t.camera_id = camera;
        t.frames.reserve(static_cast<std::size_t>(cfg.frames));
        const auto& center = centers[static_cast<std::size_t>(identity)];
        const auto& offset = camera_offsets[static_cast<std::size_t>(camera - 1)];
        for (int f = 0; f < cfg.frames; ++f) {
            const auto jitter = gaussian_vector(rng, cfg.channels, cfg.frame_noise);
            FrameFeatureMap map;
            map.rows = cfg.height;
            map.cols = cfg.width;
            map.channels = cfg.channels;
            map.values.resize(cfg.height * cfg.width * cfg.channels);
            for (std::size_t r = 0; r < cfg.height; ++r) {
                for (std::size_t w = 0; w < cfg.width; ++w) {
                    for (std::size_t ch = 0; ch < cfg.channels; ++ch) {
                        double v = center[ch] + offset[ch] + jitter[ch];
                        if (cfg.striped) {
                            v += part_deltas[static_cast<std::size_t>(identity)][row_part[r]][ch];
                        }
                        if (cfg.cell_noise > 0.0) {
                            v += gaussian(rng) * cfg.cell_noise;
                        }
                        map.at(r, w, ch) = static_cast<float>(v);
                    }
                }
            }
            t.frames.push_back(std::move(map));
        }
        data.tracklets.push_back(std::move(t));
    };

    TrackletId tid = 0;
    for (IdentityId identity = 0; identity < cfg.n_identities; ++identity) {
        for (int camera = 1; camera <= cfg.n_cameras; ++camera) {
            for (int j = 0; j < cfg.tracklets_per_identity_per_camera; ++j) {
                make_tracklet(tid++, identity, camera);
            }
        }
    }
    for (std::int64_t d = 0; d < cfg.distractor_count; ++d) {
        const IdentityId identity = cfg.n_identities + d;
        const int camera = static_cast<int>(d % cfg.n_cameras) + 1;
        make_tracklet(tid++, identity, camera);
    }
    return data;
}

LabelBook split_one_example(const Dataset& data, std::uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, kOneExampleStream));
    LabelBook book;

    // Tracklets of each real identity, grouped by camera, ids ascending.
    std::map<IdentityId, std::map<int, std::vector<TrackletId>>> by_identity;
    for (const Tracklet& t : data.tracklets) {
        if (!t.identity_gt) {
            throw std::invalid_argument("split_one_example: tracklet " + std::to_string(t.id) +
                                        " has no ground-truth identity");
        }
        if (!data.is_distractor(t)) {
            by_identity[*t.identity_gt][t.camera_id].push_back(t.id);
        }
        book.unlabeled.insert(t.id);
    }
    if (static_cast<std::int64_t>(by_identity.size()) != data.n_identities) {
        throw std::invalid_argument("split_one_example: an identity has no tracklets");
    }

    for (const auto& [identity, cameras] : by_identity) {
        const std::vector<TrackletId>* pool = nullptr;
        for (const auto& [camera, ids] : cameras) {
            (void)camera;
            if (!ids.empty()) {
                pool = &ids;  // cameras iterate ascending; first nonempty wins
                break;
            }
        }
        const TrackletId chosen = (*pool)[uniform_index(rng, pool->size())];
        book.labeled[chosen] = identity;
        book.unlabeled.erase(chosen);
    }
    book.validate();
    return book;
}

LabelBook split_ratio(const Dataset& data, double ratio, std::uint64_t seed) {
    if (ratio <= 0.0 || ratio >= 1.0) {
        throw std::invalid_argument("split_ratio: ratio must be in (0, 1)");
    }
    const std::size_t n_total = data.tracklets.size();
    const auto n_labeled = static_cast<std::size_t>(
        std::min<double>(static_cast<double>(n_total),
                         std::ceil(ratio * static_cast<double>(n_total) - 1e-9)));

    std::vector<TrackletId> ids;
    ids.reserve(n_total);
    for (const Tracklet& t : data.tracklets) {
        ids.push_back(t.id);
    }

    for (int attempt = 0; attempt < 100; ++attempt) {
        std::mt19937_64 rng(
            mix_seed(seed, kRatioStream + static_cast<std::uint64_t>(attempt)));
        std::vector<TrackletId> shuffled = ids;
        for (std::size_t i = shuffled.size(); i > 1; --i) {
            std::swap(shuffled[i - 1], shuffled[uniform_index(rng, i)]);
        }

        std::set<IdentityId> labeled_identities;
        for (std::size_t i = 0; i < n_labeled; ++i) {
            labeled_identities.insert(*data.find(shuffled[i])->identity_gt);
        }
        if (labeled_identities.size() < 2) {
            continue;
        }

        LabelBook book;
        for (std::size_t i = 0; i < n_labeled; ++i) {
            book.labeled[shuffled[i]] = *data.find(shuffled[i])->identity_gt;
        }
        for (TrackletId id : ids) {
            if (!book.labeled.count(id)) {
                book.unlabeled.insert(id);
            }
        }
        book.validate();
        return book;
    }
    throw std::invalid_argument(
        "split_ratio: could not draw a split with >= 2 labeled identities in 100 attempts");
}

}  // namespace reid
