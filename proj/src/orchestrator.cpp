#include "reid/orchestrator.hpp"

#include <chrono>
#include <stdexcept>

#include "reid/evalkit.hpp"
#include "reid/pseudo_label.hpp"
#include "reid/rng.hpp"

namespace reid {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_seconds(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void fnv_mix(std::uint64_t& h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xFF;
        h *= 0x100000001B3ull;
    }
}

std::uint64_t double_bits(double d) {
    std::uint64_t u = 0;
    static_assert(sizeof(u) == sizeof(d));
    __builtin_memcpy(&u, &d, sizeof(u));
    return u;
}

struct LoopState {
    Model model;
    std::map<TrackletId, Embedding> embeddings;
    std::map<TrackletId, PseudoEntry> estimates;
    ArdState ard;
    long long srd_prev = -1;
    long long linear_t = 1;
    long long iteration = 0;
    std::vector<IterationRecord> records;
};

std::vector<TrainSample> labeled_samples(const Dataset& data, const LabelBook& book) {
    std::vector<TrainSample> out;
    out.reserve(book.labeled.size());
    for (const auto& [id, identity] : book.labeled) {
        const Tracklet* t = data.find(id);
        if (!t) {
            throw std::invalid_argument("run: labeled tracklet " + std::to_string(id) +
                                        " not in dataset");
        }
        out.push_back({t, identity});
    }
    return out;
}

std::map<TrackletId, PseudoEntry> estimate_current(
    const LabelBook& book, const std::map<TrackletId, Embedding>& embeddings) {
    std::vector<LabeledPoint> labeled;
    labeled.reserve(book.labeled.size());
    for (const auto& [id, identity] : book.labeled) {
        labeled.push_back({id, embeddings.at(id), identity});
    }
    std::vector<UnlabeledPoint> unlabeled;
    unlabeled.reserve(book.unlabeled.size());
    for (TrackletId id : book.unlabeled) {
        unlabeled.push_back({id, embeddings.at(id)});
    }
    return estimate_labels(labeled, unlabeled);
}

std::map<TrackletId, DistanceRecord> distance_records(
    const std::map<TrackletId, PseudoEntry>& estimates) {
    std::map<TrackletId, DistanceRecord> out;
    for (const auto& [id, entry] : estimates) {
        out[id] = entry.record;
    }
    return out;
}

std::optional<std::map<TrackletId, IdentityId>> ground_truth(const Dataset& data,
                                                             const LabelBook& book) {
    std::map<TrackletId, IdentityId> gt;
    for (TrackletId id : book.unlabeled) {
        const Tracklet* t = data.find(id);
        if (!t || !t->identity_gt) {
            return std::nullopt;
        }
        gt[id] = *t->identity_gt;
    }
    return gt;
}

std::map<TrackletId, IdentityId> estimate_identities(
    const std::map<TrackletId, PseudoEntry>& estimates) {
    std::map<TrackletId, IdentityId> out;
    for (const auto& [id, entry] : estimates) {
        out[id] = entry.identity;
    }
    return out;
}

std::uint64_t fit_seed(const RunConfig& cfg) {
    return splitmix64(cfg.learner.seed ^ splitmix64(cfg.seed));
}

Model fit_on(const Dataset& data, const LabelBook& book,
             const std::map<TrackletId, PseudoEntry>& estimates,
             const std::set<TrackletId>& selection, const RunConfig& cfg) {
    std::vector<TrainSample> train = labeled_samples(data, book);
    for (TrackletId id : selection) {
        train.push_back({data.find(id), estimates.at(id).identity});
    }
    LearnerConfig lcfg = cfg.learner;
    lcfg.seed = fit_seed(cfg);
    return fit(train, lcfg);
}

RunCheckpoint make_checkpoint(const LoopState& st, const RunConfig& cfg) {
    RunCheckpoint c;
    c.config_fingerprint = config_fingerprint(cfg);
    c.next_iteration = st.iteration;
    c.ard = st.ard;
    c.srd_prev_count = st.srd_prev;
    c.linear_t = st.linear_t;
    c.model = st.model;
    c.records = st.records;
    return c;
}

RunResult run_loop(const Dataset& data, const LabelBook& initial, const RunConfig& cfg,
                   LoopState& st, const CheckpointSink& sink) {
    const long long total_unlabeled = static_cast<long long>(initial.unlabeled.size());
    const auto gt = ground_truth(data, initial);

    std::string reason;
    std::set<TrackletId> selected;

    while (true) {
        if (st.iteration >= cfg.max_global_iterations) {
            reason = "iteration cap exceeded";
            break;
        }
        const auto t0 = Clock::now();

        const auto records = distance_records(st.estimates);
        switch (cfg.strategy) {
            case Strategy::srd:
                selected = srd_select(records, cfg.fixed_k);
                break;
            case Strategy::ard:
                selected = srd_select(records, st.ard.k());
                break;
            case Strategy::linear:
                selected = linear_growth_select(records, st.linear_t, cfg.sampler.p,
                                                total_unlabeled);
                break;
            case Strategy::absolute: {
                const double frac =
                    std::min(1.0, cfg.sampler.p * static_cast<double>(st.linear_t));
                const auto n = static_cast<long long>(
                    std::ceil(frac * static_cast<double>(total_unlabeled) - 1e-9));
                selected = absolute_select(records, std::min<long long>(
                                                        n, static_cast<long long>(records.size())));
                break;
            }
        }
        const auto count = static_cast<long long>(selected.size());

        st.model = fit_on(data, initial, st.estimates, selected, cfg);
        st.embeddings = embed_dataset(data, st.model, cfg.normalize_embeddings);
        const auto [probe, gallery] = build_reid_protocol(data, st.embeddings);
        const CmcMapResult metrics = cmc_map(probe, gallery);

        IterationRecord rec;
        rec.iteration = st.iteration;
        if (cfg.strategy == Strategy::srd) {
            rec.k = cfg.fixed_k;
        } else if (cfg.strategy == Strategy::ard) {
            rec.k = st.ard.k();
        }
        rec.selected = count;
        rec.train_size = static_cast<long long>(initial.labeled.size()) + count;
        if (gt) {
            rec.pseudo_acc = label_accuracy(estimate_identities(st.estimates), *gt);
        }
        rec.rank1 = metrics.cmc.empty() ? 0.0 : metrics.cmc.front();
        rec.map = metrics.map;
        rec.seconds = elapsed_seconds(t0);
        st.records.push_back(rec);

        st.estimates = estimate_current(initial, st.embeddings);
        st.iteration += 1;

        bool done = false;
        switch (cfg.strategy) {
            case Strategy::srd: {
                // Absolute-count mode scales b by 1 instead of M.
                const long long scale = cfg.sampler.b_absolute ? 1 : total_unlabeled;
                if (st.srd_prev >= 0 && srd_converged(count, st.srd_prev, cfg.sampler.b, scale)) {
                    reason = "srd converged";
                    done = true;
                }
                st.srd_prev = count;
                break;
            }
            case Strategy::ard: {
                const ArdDecision d = ard_step(st.ard, count, cfg.sampler);
                if (d.kind == ArdDecision::Kind::terminate) {
                    reason = "k exceeded 1.0";
                    done = true;
                }
                break;
            }
            case Strategy::linear:
            case Strategy::absolute:
                if (count >= total_unlabeled) {
                    reason = "full coverage";
                    done = true;
                }
                st.linear_t += 1;
                break;
        }
        if (done) {
            break;
        }
        if (sink && cfg.checkpoint_every > 0 && st.iteration % cfg.checkpoint_every == 0) {
            sink(make_checkpoint(st, cfg));
        }
    }

    RunResult result;
    result.termination_reason = reason;
    result.ard_cap_breaches = st.ard.cap_breaches;
    result.book.labeled = initial.labeled;

    if (cfg.finalize_all) {
        const auto t0 = Clock::now();
        const long long labeled_size = static_cast<long long>(initial.labeled.size());
        const bool already_full =
            !st.records.empty() && st.records.back().train_size == labeled_size + total_unlabeled;
        if (!already_full) {
            std::set<TrackletId> all_ids;
            for (const auto& [id, entry] : st.estimates) {
                (void)entry;
                all_ids.insert(id);
            }
            st.model = fit_on(data, initial, st.estimates, all_ids, cfg);
            st.embeddings = embed_dataset(data, st.model, cfg.normalize_embeddings);
            const auto [probe, gallery] = build_reid_protocol(data, st.embeddings);
            const CmcMapResult metrics = cmc_map(probe, gallery);

            IterationRecord rec;
            rec.iteration = st.iteration;
            if (cfg.strategy == Strategy::srd) {
                rec.k = cfg.fixed_k;
            } else if (cfg.strategy == Strategy::ard) {
                rec.k = st.ard.k();
            }
            rec.selected = total_unlabeled;
            rec.train_size = labeled_size + total_unlabeled;
            if (gt) {
                rec.pseudo_acc = label_accuracy(estimate_identities(st.estimates), *gt);
            }
            rec.rank1 = metrics.cmc.empty() ? 0.0 : metrics.cmc.front();
            rec.map = metrics.map;
            rec.seconds = elapsed_seconds(t0);
            st.records.push_back(rec);
            st.iteration += 1;
        }
        for (const auto& [id, entry] : st.estimates) {
            result.book.pseudo[id] = entry;
        }
    } else {
        for (TrackletId id : selected) {
            result.book.pseudo[id] = st.estimates.at(id);
        }
        for (TrackletId id : initial.unlabeled) {
            if (!result.book.pseudo.count(id)) {
                result.book.unlabeled.insert(id);
            }
        }
    }

    result.model = std::move(st.model);
    result.records = std::move(st.records);
    result.book.validate();
    return result;
}

void validate_inputs(const Dataset& data, const LabelBook& initial, const RunConfig& cfg) {
    cfg.validate();
    initial.validate();
    if (initial.labeled.empty()) {
        throw std::invalid_argument("run: labeled set is empty");
    }
    if (initial.unlabeled.empty()) {
        throw std::invalid_argument("run: unlabeled set is empty");
    }
    std::set<IdentityId> identities;
    for (const auto& [id, identity] : initial.labeled) {
        (void)id;
        identities.insert(identity);
    }
    if (identities.size() < 2) {
        throw std::invalid_argument("run: need at least 2 labeled identities");
    }
    for (TrackletId id : initial.unlabeled) {
        if (!data.find(id)) {
            throw std::invalid_argument("run: unlabeled tracklet " + std::to_string(id) +
                                        " not in dataset");
        }
    }
}

}  // namespace

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::srd: return "srd";
        case Strategy::ard: return "ard";
        case Strategy::linear: return "linear";
        case Strategy::absolute: return "absolute";
    }
    return "unknown";
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "srd") return Strategy::srd;
    if (name == "ard") return Strategy::ard;
    if (name == "linear") return Strategy::linear;
    if (name == "absolute") return Strategy::absolute;
    throw std::invalid_argument("unknown strategy: " + name);
}

void RunConfig::validate() const {
    learner.validate();
    sampler.validate();
    if (strategy == Strategy::srd && fixed_k <= 0.0) {
        throw std::invalid_argument("RunConfig: srd strategy needs fixed_k > 0");
    }
    if (max_global_iterations < 1) {
        throw std::invalid_argument("RunConfig: max_global_iterations must be positive");
    }
    if (checkpoint_every < 0) {
        throw std::invalid_argument("RunConfig: checkpoint_every must be non-negative");
    }
}

std::uint64_t config_fingerprint(const RunConfig& cfg) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    fnv_mix(h, static_cast<std::uint64_t>(cfg.strategy));
    fnv_mix(h, double_bits(cfg.fixed_k));
    fnv_mix(h, cfg.seed);
    fnv_mix(h, static_cast<std::uint64_t>(cfg.max_global_iterations));
    fnv_mix(h, cfg.finalize_all ? 1 : 0);
    fnv_mix(h, cfg.normalize_embeddings ? 1 : 0);
    fnv_mix(h, static_cast<std::uint64_t>(cfg.learner.kind));
    fnv_mix(h, cfg.learner.d_emb);
    fnv_mix(h, static_cast<std::uint64_t>(cfg.learner.steps));
    fnv_mix(h, double_bits(cfg.learner.learning_rate));
    fnv_mix(h, double_bits(cfg.learner.label_smoothing));
    fnv_mix(h, cfg.learner.seed);
    for (int r : cfg.learner.part_ratio) {
        fnv_mix(h, static_cast<std::uint64_t>(r));
    }
    fnv_mix(h, double_bits(cfg.sampler.k0));
    fnv_mix(h, double_bits(cfg.sampler.probe_fraction));
    fnv_mix(h, static_cast<std::uint64_t>(cfg.sampler.coeff_mode));
    fnv_mix(h, double_bits(cfg.sampler.fixed_coeff));
    fnv_mix(h, double_bits(cfg.sampler.coeff_intercept));
    fnv_mix(h, double_bits(cfg.sampler.b));
    fnv_mix(h, cfg.sampler.b_absolute ? 1 : 0);
    fnv_mix(h, double_bits(cfg.sampler.p));
    fnv_mix(h, static_cast<std::uint64_t>(cfg.sampler.k_step_tenths));
    fnv_mix(h, static_cast<std::uint64_t>(cfg.sampler.max_iterations_per_k));
    return h;
}

RunResult run(const Dataset& data, const LabelBook& initial, const RunConfig& cfg,
              const CheckpointSink& sink) {
    validate_inputs(data, initial, cfg);

    LoopState st;
    {
        LearnerConfig lcfg = cfg.learner;
        lcfg.seed = fit_seed(cfg);
        st.model = fit(labeled_samples(data, initial), lcfg);
    }
    st.embeddings = embed_dataset(data, st.model, cfg.normalize_embeddings);
    st.estimates = estimate_current(initial, st.embeddings);

    if (cfg.strategy == Strategy::ard) {
        const auto records = distance_records(st.estimates);
        const double k_start = k_probe(
            [&records](double k) {
                return static_cast<long long>(srd_select(records, k).size());
            },
            static_cast<long long>(initial.labeled.size()), cfg.sampler);
        st.ard = ArdState::start_running(k_start, cfg.sampler);
    }
    return run_loop(data, initial, cfg, st, sink);
}

RunResult resume(const Dataset& data, const LabelBook& initial, const RunConfig& cfg,
                 const RunCheckpoint& ckpt, const CheckpointSink& sink) {
    validate_inputs(data, initial, cfg);
    if (ckpt.config_fingerprint != config_fingerprint(cfg)) {
        throw std::invalid_argument("resume: checkpoint was written under a different config");
    }

    LoopState st;
    st.model = ckpt.model;
    st.ard = ckpt.ard;
    st.srd_prev = ckpt.srd_prev_count;
    st.linear_t = ckpt.linear_t;
    st.iteration = ckpt.next_iteration;
    st.records = ckpt.records;
    st.embeddings = embed_dataset(data, st.model, cfg.normalize_embeddings);
    st.estimates = estimate_current(initial, st.embeddings);
    return run_loop(data, initial, cfg, st, sink);
}

}  // namespace reid
