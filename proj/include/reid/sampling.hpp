#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "reid/core.hpp"

namespace reid {

struct SamplerConfig {
    double k0 = 0.5;              // probe grid starts at k0 + 0.1
    double probe_fraction = 0.15; // of the labeled count
    enum class CoeffMode { dynamic, fixed } coeff_mode = CoeffMode::dynamic;
    double fixed_coeff = 0.3;
    double coeff_intercept = 1.2; // dynamic coefficient = intercept - k
    double b = 0.01;              // convergence threshold
    bool b_absolute = false;      // false: b is a fraction of M; true: raw count
    double p = 0.05;              // linear-growth fraction per iteration
    int k_step_tenths = 1;
    int max_iterations_per_k = 50;

    void validate() const;
    double coeff(double k) const;
};

// Adaptive scheduler state. k lives on an exact tenths grid so 1.0 is hit
// without floating drift.
struct ArdState {
    enum class Phase { probing, running, terminated };

    int k_tenths = 5;
    int k_step_tenths = 1;
    std::vector<long long> history;  // selected counts at the current k
    std::optional<double> margin0;   // c1 - c0 at the current k
    long long iteration = 0;
    Phase phase = Phase::probing;
    int cap_breaches = 0;

    double k() const { return static_cast<double>(k_tenths) / 10.0; }

    static ArdState start_running(double k_start, const SamplerConfig& cfg);
};

struct ArdDecision {
    enum class Kind { continue_at_k, advance_k, terminate };
    Kind kind = Kind::continue_at_k;
    double new_k = 0.0;  // set for advance_k
};

// Exactly the ids with d_intra < k * d_inter (strict).
std::set<TrackletId> srd_select(const std::map<TrackletId, DistanceRecord>& records, double k);

// True iff (c_t - c_prev) < b * M.
bool srd_converged(long long c_t, long long c_prev, double b, long long total_unlabeled);

// Walks k = k0+0.1, k0+0.2, ... 1.0 and returns the first k whose count
// reaches probe_fraction * labeled_size; 1.0 if none qualifies.
double k_probe(const std::function<long long(double)>& select_count, long long labeled_size,
               const SamplerConfig& cfg);

// Appends new_count to the current-k history and decides: keep iterating
// at this k, advance to k + step, or terminate once k would exceed 1.0.
// After two counts at a k, margin0 = c1 - c0; iteration continues while
// the increment stays >= coeff(k) * margin0.
ArdDecision ard_step(ArdState& state, long long new_count, const SamplerConfig& cfg);

// The ceil(min(1, p*t) * M) ids with smallest d_intra, ties by smallest id.
std::set<TrackletId> linear_growth_select(const std::map<TrackletId, DistanceRecord>& records,
                                          long long t, double p, long long total_unlabeled);

// The n ids with smallest d_intra, ties by smallest id.
std::set<TrackletId> absolute_select(const std::map<TrackletId, DistanceRecord>& records,
                                     long long n);

}  // namespace reid
