#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "reid/core.hpp"
#include "reid/pam.hpp"

namespace reid {

enum class LearnerKind { ncm, linear_softmax };

struct LearnerConfig {
    LearnerKind kind = LearnerKind::linear_softmax;
    std::size_t d_emb = 256;
    int steps = 100;
    double learning_rate = 0.1;
    double label_smoothing = 0.1;
    std::uint64_t seed = 1;
    std::vector<int> part_ratio = kDefaultPartRatio;

    void validate() const;
};

// Fitted embedder. `ncm` carries identity-like projections and no
// classifier heads; `linear_softmax` carries trained projections plus one
// d_emb x K classifier and K-bias per branch. Heads are ignored at embed
// time; only projections define the embedding.
struct Model {
    LearnerKind kind = LearnerKind::ncm;
    BranchProjections projections;
    std::vector<Matrix> classifiers;
    std::vector<std::vector<double>> biases;
    std::vector<IdentityId> classes;  // ascending

    std::size_t n_branches() const { return projections.n_branches(); }
    std::size_t n_classes() const { return classes.size(); }
};

struct TrainSample {
    const Tracklet* tracklet = nullptr;
    IdentityId identity = 0;
};

// Parameter-shaped gradients, same layout as Model's trainables.
struct Gradients {
    std::vector<Matrix> projections;
    std::vector<Matrix> classifiers;
    std::vector<std::vector<double>> biases;
};

// Trains on the given set. Deterministic in (train contents in canonical
// tracklet-id order, cfg). linear_softmax runs `steps` full-batch gradient
// descent updates; if loss_trace is given, the pre-update loss of every
// step is appended to it.
Model fit(const std::vector<TrainSample>& train, const LearnerConfig& cfg,
          std::vector<double>* loss_trace = nullptr);

// aggregate_tracklet with the model's projections.
Embedding embed(const Model& m, const Tracklet& t);

// Every tracklet embedded, keyed by id, optionally L2-normalized.
std::map<TrackletId, Embedding> embed_dataset(const Dataset& data, const Model& m,
                                              bool normalize);

// Training objective and exact analytic partials: sum over branches of the
// batch-mean smoothed cross-entropy of that branch's projected pooled
// feature. linear_softmax models only.
std::pair<double, Gradients> loss_and_grad(const Model& m,
                                           const std::vector<TrainSample>& batch,
                                           double label_smoothing);

}  // namespace reid
