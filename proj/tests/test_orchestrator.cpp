#include <cmath>

#include "doctest.h"
#include "reid/orchestrator.hpp"
#include "reid/synthworld.hpp"

using namespace reid;

namespace {

WorldConfig loop_world(std::int64_t identities = 5) {
    WorldConfig cfg;
    cfg.n_identities = identities;
    cfg.n_cameras = 2;
    cfg.tracklets_per_identity_per_camera = 2;
    cfg.frames = 2;
    cfg.height = 6;
    cfg.width = 2;
    cfg.channels = 4;
    cfg.identity_spread = 1.0;
    cfg.camera_offset_scale = 0.05;
    cfg.frame_noise = 0.05;
    cfg.seed = 21;
    return cfg;
}

RunConfig fast_run(Strategy strategy) {
    RunConfig cfg;
    cfg.strategy = strategy;
    cfg.learner.kind = LearnerKind::linear_softmax;
    cfg.learner.d_emb = 4;
    cfg.learner.steps = 8;
    cfg.learner.learning_rate = 0.2;
    cfg.seed = 5;
    return cfg;
}

bool records_equal_ignoring_seconds(const IterationRecord& a, const IterationRecord& b) {
    return a.iteration == b.iteration && a.k == b.k && a.selected == b.selected &&
           a.train_size == b.train_size && a.pseudo_acc == b.pseudo_acc && a.rank1 == b.rank1 &&
           a.map == b.map;
}

}  // namespace

TEST_CASE("run precondition checks") {
    const Dataset data = generate(loop_world());
    const LabelBook book = split_one_example(data, 3);
    const RunConfig cfg = fast_run(Strategy::ard);

    LabelBook no_unlabeled = book;
    no_unlabeled.unlabeled.clear();
    CHECK_THROWS_AS(run(data, no_unlabeled, cfg), std::invalid_argument);

    LabelBook no_labeled = book;
    no_labeled.labeled.clear();
    CHECK_THROWS_AS(run(data, no_labeled, cfg), std::invalid_argument);

    LabelBook one_identity = book;
    for (auto& [id, identity] : one_identity.labeled) {
        (void)id;
        identity = 0;
    }
    CHECK_THROWS_AS(run(data, one_identity, cfg), std::invalid_argument);
}

TEST_CASE("linear strategy with p=0.05 covers in exactly 20 iterations") {
    const Dataset data = generate(loop_world(7));  // M = 21 >= 20
    const LabelBook book = split_one_example(data, 3);
    RunConfig cfg = fast_run(Strategy::linear);
    cfg.learner.kind = LearnerKind::ncm;
    cfg.sampler.p = 0.05;

    const RunResult result = run(data, book, cfg);
    CHECK(result.records.size() == 20);
    CHECK(result.termination_reason == "full coverage");
    CHECK(result.records.back().train_size ==
          static_cast<long long>(book.labeled.size() + book.unlabeled.size()));
    for (const IterationRecord& r : result.records) {
        CHECK(!r.k.has_value());
    }
}

TEST_CASE("noiseless world is solved at iteration 1") {
    WorldConfig wcfg = loop_world();
    wcfg.camera_offset_scale = 0.0;
    wcfg.frame_noise = 0.0;
    wcfg.cell_noise = 0.0;
    const Dataset data = generate(wcfg);
    const LabelBook book = split_one_example(data, 3);
    RunConfig cfg = fast_run(Strategy::ard);
    cfg.learner.kind = LearnerKind::ncm;

    const RunResult result = run(data, book, cfg);
    REQUIRE(!result.records.empty());
    const IterationRecord& first = result.records.front();
    REQUIRE(first.pseudo_acc.has_value());
    CHECK(*first.pseudo_acc == doctest::Approx(1.0));
    CHECK(first.rank1 == doctest::Approx(1.0));
    CHECK(first.map == doctest::Approx(1.0));
    // every unlabeled point coincides with its anchor, so the probe k takes all
    CHECK(first.selected == static_cast<long long>(book.unlabeled.size()));
}

TEST_CASE("ard run: k non-decreasing, terminates past 1.0, consumes everything") {
    const Dataset data = generate(loop_world());
    const LabelBook book = split_one_example(data, 3);
    const RunConfig cfg = fast_run(Strategy::ard);

    const RunResult result = run(data, book, cfg);
    CHECK(result.termination_reason == "k exceeded 1.0");
    double last_k = 0.0;
    for (const IterationRecord& r : result.records) {
        REQUIRE(r.k.has_value());
        CHECK(*r.k >= last_k);
        last_k = *r.k;
    }
    CHECK(result.records.back().train_size ==
          static_cast<long long>(book.labeled.size() + book.unlabeled.size()));
    CHECK(result.book.unlabeled.empty());
    CHECK(result.book.pseudo.size() == book.unlabeled.size());
    CHECK(result.book.labeled == book.labeled);
}

TEST_CASE("srd strategy converges at a fixed k") {
    const Dataset data = generate(loop_world());
    const LabelBook book = split_one_example(data, 3);
    RunConfig cfg = fast_run(Strategy::srd);
    cfg.fixed_k = 0.8;
    cfg.sampler.b = 0.05;

    const RunResult result = run(data, book, cfg);
    CHECK(result.termination_reason == "srd converged");
    for (const IterationRecord& r : result.records) {
        REQUIRE(r.k.has_value());
        CHECK(*r.k == 0.8);
    }
    CHECK(result.records.back().train_size ==
          static_cast<long long>(book.labeled.size() + book.unlabeled.size()));
}

TEST_CASE("identical seeds give identical records") {
    const Dataset data = generate(loop_world());
    const LabelBook book = split_one_example(data, 3);
    const RunConfig cfg = fast_run(Strategy::ard);

    const RunResult a = run(data, book, cfg);
    const RunResult b = run(data, book, cfg);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(records_equal_ignoring_seconds(a.records[i], b.records[i]));
    }

    RunConfig other = cfg;
    other.seed = 99;
    const RunResult c = run(data, book, other);
    bool all_same = a.records.size() == c.records.size();
    if (all_same) {
        for (std::size_t i = 0; i < a.records.size(); ++i) {
            all_same = all_same && records_equal_ignoring_seconds(a.records[i], c.records[i]);
        }
    }
    CHECK(!all_same);
}

TEST_CASE("checkpoint resume reproduces the remaining records") {
    const Dataset data = generate(loop_world());
    const LabelBook book = split_one_example(data, 3);
    RunConfig cfg = fast_run(Strategy::ard);
    cfg.checkpoint_every = 2;

    std::vector<RunCheckpoint> checkpoints;
    const RunResult reference =
        run(data, book, cfg, [&](const RunCheckpoint& c) { checkpoints.push_back(c); });
    REQUIRE(!checkpoints.empty());

    for (const RunCheckpoint& ckpt : checkpoints) {
        const RunResult resumed = resume(data, book, cfg, ckpt);
        REQUIRE(resumed.records.size() == reference.records.size());
        for (std::size_t i = 0; i < reference.records.size(); ++i) {
            CHECK(records_equal_ignoring_seconds(resumed.records[i], reference.records[i]));
        }
        CHECK(resumed.termination_reason == reference.termination_reason);
    }
}

TEST_CASE("resume rejects a mismatched config") {
    const Dataset data = generate(loop_world());
    const LabelBook book = split_one_example(data, 3);
    RunConfig cfg = fast_run(Strategy::ard);
    cfg.checkpoint_every = 2;

    std::vector<RunCheckpoint> checkpoints;
    run(data, book, cfg, [&](const RunCheckpoint& c) { checkpoints.push_back(c); });
    REQUIRE(!checkpoints.empty());

    RunConfig different = cfg;
    different.seed += 1;
    CHECK_THROWS_AS(resume(data, book, different, checkpoints.front()), std::invalid_argument);
}

TEST_CASE("finalize_all=false keeps stragglers unlabeled") {
    const Dataset data = generate(loop_world());
    const LabelBook book = split_one_example(data, 3);
    RunConfig cfg = fast_run(Strategy::srd);
    cfg.fixed_k = 0.7;
    cfg.sampler.b = 0.05;
    cfg.finalize_all = false;

    const RunResult result = run(data, book, cfg);
    CHECK(result.book.pseudo.size() + result.book.unlabeled.size() == book.unlabeled.size());
    CHECK(result.records.back().train_size ==
          static_cast<long long>(book.labeled.size() + result.book.pseudo.size()));
}

TEST_CASE("iteration cap is recorded as the termination reason") {
    const Dataset data = generate(loop_world());
    const LabelBook book = split_one_example(data, 3);
    RunConfig cfg = fast_run(Strategy::linear);
    cfg.learner.kind = LearnerKind::ncm;
    cfg.sampler.p = 0.05;  // needs 20 iterations, cap fires first
    cfg.max_global_iterations = 3;

    const RunResult result = run(data, book, cfg);
    CHECK(result.termination_reason == "iteration cap exceeded");
    // 3 loop records plus the finalize record
    CHECK(result.records.size() == 4);
    CHECK(result.records.back().train_size ==
          static_cast<long long>(book.labeled.size() + book.unlabeled.size()));
}

TEST_CASE("strategy names round-trip") {
    for (Strategy s : {Strategy::srd, Strategy::ard, Strategy::linear, Strategy::absolute}) {
        CHECK(strategy_from_name(strategy_name(s)) == s);
    }
    CHECK_THROWS_AS(strategy_from_name("bogus"), std::invalid_argument);
}
