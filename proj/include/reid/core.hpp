#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

namespace reid {

using TrackletId = std::int64_t;
using IdentityId = std::int64_t;

// One frame's feature map: H x W x C reals stored in (row, col, channel)
// order, f32 on disk and in memory; all arithmetic downstream is double.
struct FrameFeatureMap {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t channels = 0;
    std::vector<float> values;

    float at(std::size_t r, std::size_t c, std::size_t ch) const {
        return values[(r * cols + c) * channels + ch];
    }
    float& at(std::size_t r, std::size_t c, std::size_t ch) {
        return values[(r * cols + c) * channels + ch];
    }

    static FrameFeatureMap filled(std::size_t h, std::size_t w, std::size_t c, float v);

    // Positive dims, size match, all values finite.
    void validate() const;
};

// The unit of labeling: a frame sequence with camera metadata and an
// optional ground-truth identity (present for synthetic worlds).
struct Tracklet {
    TrackletId id = 0;
    std::optional<IdentityId> identity_gt;
    int camera_id = 0;
    std::vector<FrameFeatureMap> frames;

    // Nonempty frames, identical (H, W, C) across frames, frames valid.
    void validate() const;
};

struct Embedding {
    std::vector<double> values;
    std::size_t dim() const { return values.size(); }
};

// Per-unlabeled-sample evidence: nearest labeled anchor, the distance to
// it, and the anchor's minimum distance to labeled samples of other
// identities.
struct DistanceRecord {
    TrackletId anchor_id = 0;
    double d_intra = 0.0;
    double d_inter = 0.0;
};

struct PseudoEntry {
    IdentityId identity = 0;
    DistanceRecord record;
};

// The run's labeling state. The three key sets are pairwise disjoint;
// `labeled` never changes during a run.
struct LabelBook {
    std::map<TrackletId, IdentityId> labeled;
    std::map<TrackletId, PseudoEntry> pseudo;
    std::set<TrackletId> unlabeled;

    void validate() const;
};

// Small dense row-major matrix; sized for projections and classifiers.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }

    // 1 on the leading diagonal, 0 elsewhere; works for any r x c.
    static Matrix identity_like(std::size_t r, std::size_t c);
};

// A loaded or generated tracklet collection. Identities >= n_identities
// are distractors (unique throwaway ids).
struct Dataset {
    std::vector<Tracklet> tracklets;  // ascending tracklet id
    std::int64_t n_identities = 0;
    int n_cameras = 0;
    std::int64_t distractor_count = 0;

    const Tracklet* find(TrackletId id) const;
    bool is_distractor(const Tracklet& t) const {
        return t.identity_gt.has_value() && *t.identity_gt >= n_identities;
    }
};

// Euclidean distance, double accumulation in index order.
double l2_distance(const Embedding& a, const Embedding& b);

// In-place L2 normalization; zero vectors are left unchanged.
void l2_normalize(Embedding& e);

}  // namespace reid
