#pragma once

#include <vector>

#include "reid/core.hpp"

namespace reid {

struct RowRange {
    std::size_t begin = 0;
    std::size_t end = 0;  // half-open
    std::size_t size() const { return end - begin; }
};

// Contiguous, disjoint vertical parts covering [0, H) exactly.
struct PartRanges {
    std::vector<RowRange> parts;
    std::size_t height() const { return parts.empty() ? 0 : parts.back().end; }
};

inline const std::vector<int> kDefaultPartRatio = {1, 2, 2, 1};

// Part sizes are floor(H * r_i / sum(r)), remainder rows handed out one at
// a time starting from the first part. Rejects heights where any part
// would come out empty (H < 6 for the 1:2:2:1 default).
PartRanges split_rows(std::size_t height, const std::vector<int>& ratio = kDefaultPartRatio);

// Per-channel mean over all H*W cells.
std::vector<double> global_avg_pool(const FrameFeatureMap& map);

// Per-channel mean over the rows of each part, all columns.
std::vector<std::vector<double>> part_avg_pool(const FrameFeatureMap& map,
                                               const PartRanges& ranges);

// v^T P for a C x d_emb projection.
std::vector<double> project(const std::vector<double>& v, const Matrix& p);

// Componentwise mean over T equal-dimension vectors.
std::vector<double> temporal_avg(const std::vector<std::vector<double>>& vectors);

// One linear projection per branch, ordered [global, part 1, ..., part p].
// All matrices are C x d_emb.
struct BranchProjections {
    std::vector<Matrix> branches;
    std::vector<int> part_ratio = kDefaultPartRatio;

    std::size_t n_branches() const { return branches.size(); }
    std::size_t d_emb() const { return branches.empty() ? 0 : branches.front().cols; }
    std::size_t channels() const { return branches.empty() ? 0 : branches.front().rows; }

    void validate() const;
};

// Pre-projection branch features of a tracklet: for each branch, the
// temporal mean of the per-frame pooled C-vector. [0] = global, then one
// entry per part. Used by the learner so projections can change without
// re-pooling.
std::vector<std::vector<double>> pooled_branch_features(const Tracklet& t,
                                                        const PartRanges& ranges);

// Full feature composition: per frame, global + part pooling, each branch
// projected through its matrix; the per-branch streams are temporally
// averaged and concatenated [global, part 1..p]. Output dim is
// n_branches * d_emb.
Embedding aggregate_tracklet(const Tracklet& t, const BranchProjections& proj);

}  // namespace reid
