#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "reid/core.hpp"
#include "reid/learner.hpp"
#include "reid/sampling.hpp"

namespace reid {

enum class Strategy { srd, ard, linear, absolute };

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct RunConfig {
    LearnerConfig learner;
    SamplerConfig sampler;
    Strategy strategy = Strategy::ard;
    double fixed_k = 0.7;  // srd strategy only
    std::uint64_t seed = 1;
    int max_global_iterations = 200;
    bool finalize_all = true;
    bool normalize_embeddings = false;
    int checkpoint_every = 0;  // iterations between checkpoints, 0 = off

    void validate() const;
};

// One row of the run log.
struct IterationRecord {
    long long iteration = 0;
    std::optional<double> k;
    long long selected = 0;
    long long train_size = 0;
    std::optional<double> pseudo_acc;  // over all current estimates
    double rank1 = 0.0;
    double map = 0.0;
    double seconds = 0.0;
};

struct RunResult {
    Model model;
    std::vector<IterationRecord> records;
    LabelBook book;
    std::string termination_reason;
    int ard_cap_breaches = 0;
};

// Resumable state at an iteration boundary.
struct RunCheckpoint {
    int version = 1;
    std::uint64_t config_fingerprint = 0;
    long long next_iteration = 0;
    ArdState ard;
    long long srd_prev_count = -1;
    long long linear_t = 1;
    Model model;
    std::vector<IterationRecord> records;
};

using CheckpointSink = std::function<void(const RunCheckpoint&)>;

// Over the config fields that affect run behavior; checkpoints refuse to
// resume under a different fingerprint.
std::uint64_t config_fingerprint(const RunConfig& cfg);

// The self-training loop: fit on the labeled set, embed, estimate labels,
// select by strategy, refit on labeled + selection, repeat to termination.
// Pseudo labels are re-estimated fresh each iteration. With finalize_all,
// every remaining unlabeled sample joins with its current estimate and one
// final fit runs. Deterministic given cfg seeds; only `seconds` varies.
RunResult run(const Dataset& data, const LabelBook& initial, const RunConfig& cfg,
              const CheckpointSink& sink = nullptr);

// Continues a checkpointed run; remaining records match the uninterrupted
// run exactly.
RunResult resume(const Dataset& data, const LabelBook& initial, const RunConfig& cfg,
                 const RunCheckpoint& ckpt, const CheckpointSink& sink = nullptr);

}  // namespace reid
