#pragma once

#include <map>
#include <vector>

#include "reid/core.hpp"

namespace reid {

struct LabeledPoint {
    TrackletId id = 0;
    Embedding emb;
    IdentityId identity = 0;
};

struct UnlabeledPoint {
    TrackletId id = 0;
    Embedding emb;
};

// Nearest-neighbor label estimation. For each unlabeled point: the anchor
// is the closest labeled point (ties broken by smallest tracklet id), the
// estimated identity is the anchor's, d_intra is that distance, and
// d_inter is the anchor's minimum distance to labeled points of other
// identities. Requires at least two distinct labeled identities.
std::map<TrackletId, PseudoEntry> estimate_labels(const std::vector<LabeledPoint>& labeled,
                                                  const std::vector<UnlabeledPoint>& unlabeled);

}  // namespace reid
