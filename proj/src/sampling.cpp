#include "reid/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace reid {

namespace {

int to_tenths(double k, const char* what) {
    const double scaled = k * 10.0;
    const long long t = std::llround(scaled);
    if (std::abs(scaled - static_cast<double>(t)) > 1e-6) {
        throw std::invalid_argument(std::string(what) + " must lie on the 0.1 grid, got " +
                                    std::to_string(k));
    }
    return static_cast<int>(t);
}

std::vector<TrackletId> ids_by_distance(const std::map<TrackletId, DistanceRecord>& records) {
    std::vector<TrackletId> ids;
    ids.reserve(records.size());
    for (const auto& [id, rec] : records) {
        (void)rec;
        ids.push_back(id);
    }
    std::stable_sort(ids.begin(), ids.end(), [&](TrackletId a, TrackletId b) {
        const double da = records.at(a).d_intra;
        const double db = records.at(b).d_intra;
        if (da != db) {
            return da < db;
        }
        return a < b;
    });
    return ids;
}

}  // namespace

void SamplerConfig::validate() const {
    if (k0 <= 0.0 || k0 > 1.0) {
        throw std::invalid_argument("SamplerConfig: k0 must be in (0, 1]");
    }
    to_tenths(k0, "SamplerConfig: k0");
    if (probe_fraction <= 0.0 || probe_fraction >= 1.0) {
        throw std::invalid_argument("SamplerConfig: probe_fraction must be in (0,1)");
    }
    if (fixed_coeff <= 0.0) {
        throw std::invalid_argument("SamplerConfig: fixed_coeff must be positive");
    }
    if (coeff_intercept <= 0.0) {
        throw std::invalid_argument("SamplerConfig: coeff_intercept must be positive");
    }
    if (b <= 0.0) {
        throw std::invalid_argument("SamplerConfig: b must be positive");
    }
    if (p <= 0.0 || p > 1.0) {
        throw std::invalid_argument("SamplerConfig: p must be in (0, 1]");
    }
    if (k_step_tenths <= 0) {
        throw std::invalid_argument("SamplerConfig: k_step must be positive");
    }
    if (max_iterations_per_k < 2) {
        throw std::invalid_argument("SamplerConfig: max_iterations_per_k must be >= 2");
    }
}

double SamplerConfig::coeff(double k) const {
    return coeff_mode == CoeffMode::dynamic ? (coeff_intercept - k) : fixed_coeff;
}

ArdState ArdState::start_running(double k_start, const SamplerConfig& cfg) {
    ArdState st;
    st.k_tenths = to_tenths(k_start, "ArdState: k");
    st.k_step_tenths = cfg.k_step_tenths;
    st.phase = Phase::running;
    return st;
}

std::set<TrackletId> srd_select(const std::map<TrackletId, DistanceRecord>& records, double k) {
    if (k <= 0.0) {
        throw std::invalid_argument("srd_select: k must be positive");
    }
    std::set<TrackletId> out;
    for (const auto& [id, rec] : records) {
        if (rec.d_intra < k * rec.d_inter) {
            out.insert(id);
        }
    }
    return out;
}

bool srd_converged(long long c_t, long long c_prev, double b, long long total_unlabeled) {
    if (b <= 0.0 || total_unlabeled <= 0) {
        throw std::invalid_argument("srd_converged: b and M must be positive");
    }
    return static_cast<double>(c_t - c_prev) < b * static_cast<double>(total_unlabeled);
}

double k_probe(const std::function<long long(double)>& select_count, long long labeled_size,
               const SamplerConfig& cfg) {
    if (labeled_size <= 0) {
        throw std::invalid_argument("k_probe: labeled set is empty");
    }
    const int start = to_tenths(cfg.k0, "k_probe: k0");
    const double threshold = cfg.probe_fraction * static_cast<double>(labeled_size);
    for (int kt = start + 1; kt <= 10; ++kt) {
        const double k = static_cast<double>(kt) / 10.0;
        if (static_cast<double>(select_count(k)) >= threshold) {
            return k;
        }
    }
    return 1.0;
}

ArdDecision ard_step(ArdState& state, long long new_count, const SamplerConfig& cfg) {
    if (state.phase != ArdState::Phase::running) {
        throw std::logic_error("ard_step: scheduler is not running");
    }
    state.iteration += 1;
    state.history.push_back(new_count);

    const auto advance = [&]() -> ArdDecision {
        state.history.clear();
        state.margin0.reset();
        state.k_tenths += state.k_step_tenths;
        if (state.k_tenths > 10) {
            state.k_tenths = 10;
            state.phase = ArdState::Phase::terminated;
            return {ArdDecision::Kind::terminate, 0.0};
        }
        return {ArdDecision::Kind::advance_k, state.k()};
    };

    if (static_cast<int>(state.history.size()) >= cfg.max_iterations_per_k) {
        state.cap_breaches += 1;
        return advance();
    }
    if (state.history.size() < 2) {
        return {ArdDecision::Kind::continue_at_k, 0.0};
    }
    if (state.history.size() == 2) {
        const double m0 = static_cast<double>(state.history[1] - state.history[0]);
        if (m0 <= 0.0) {
            return advance();
        }
        state.margin0 = m0;
        return {ArdDecision::Kind::continue_at_k, 0.0};
    }

    const std::size_t n = state.history.size();
    const double increment = static_cast<double>(state.history[n - 1] - state.history[n - 2]);
    if (increment >= cfg.coeff(state.k()) * *state.margin0) {
        return {ArdDecision::Kind::continue_at_k, 0.0};
    }
    return advance();
}

std::set<TrackletId> linear_growth_select(const std::map<TrackletId, DistanceRecord>& records,
                                          long long t, double p, long long total_unlabeled) {
    if (p <= 0.0 || p > 1.0) {
        throw std::invalid_argument("linear_growth_select: p must be in (0, 1]");
    }
    if (t < 1) {
        throw std::invalid_argument("linear_growth_select: t must be >= 1");
    }
    if (total_unlabeled <= 0) {
        throw std::invalid_argument("linear_growth_select: M must be positive");
    }
    const double frac = std::min(1.0, p * static_cast<double>(t));
    // Epsilon keeps exact multiples (p*t*M integral) from ceiling up a unit.
    auto n = static_cast<long long>(
        std::ceil(frac * static_cast<double>(total_unlabeled) - 1e-9));
    n = std::min<long long>(n, static_cast<long long>(records.size()));

    const auto ids = ids_by_distance(records);
    return {ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n)};
}

std::set<TrackletId> absolute_select(const std::map<TrackletId, DistanceRecord>& records,
                                     long long n) {
    if (n < 0 || n > static_cast<long long>(records.size())) {
        throw std::invalid_argument("absolute_select: n = " + std::to_string(n) +
                                    " out of range for " + std::to_string(records.size()) +
                                    " records");
    }
    const auto ids = ids_by_distance(records);
    return {ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n)};
}

}  // namespace reid
