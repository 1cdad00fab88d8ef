#pragma once

#include <map>
#include <set>
#include <utility>
#include <vector>

#include "reid/core.hpp"

namespace reid {

struct EvalPoint {
    TrackletId id = 0;
    Embedding emb;
    IdentityId identity = 0;
    int camera = 0;
};

struct CmcMapResult {
    std::vector<double> cmc;  // cmc[r] = P(first correct match at rank <= r+1)
    double map = 0.0;
};

// Standard cross-camera protocol: per probe, gallery entries with the same
// identity AND same camera are excluded, the rest ranked by ascending L2
// (ties by gallery id). Rejects any probe with no positive left.
CmcMapResult cmc_map(const std::vector<EvalPoint>& probe, const std::vector<EvalPoint>& gallery);

// Fraction of pseudo entries matching ground truth; empty -> 1.0.
double label_accuracy(const std::map<TrackletId, IdentityId>& pseudo,
                      const std::map<TrackletId, IdentityId>& gt);

struct SelectionQuality {
    double precision = 1.0;  // selected-and-correct / selected
    double recall = 0.0;     // selected-and-correct / all-correct-pseudo
};

SelectionQuality selection_quality(const std::set<TrackletId>& selected,
                                   const std::map<TrackletId, IdentityId>& pseudo,
                                   const std::map<TrackletId, IdentityId>& gt);

// Run-level protocol: probes are the tracklets with at least one same-id,
// different-camera peer; the gallery is everything (distractors included).
std::pair<std::vector<EvalPoint>, std::vector<EvalPoint>> build_reid_protocol(
    const Dataset& data, const std::map<TrackletId, Embedding>& embeddings);

}  // namespace reid
