#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "reid/io.hpp"
#include "reid/learner.hpp"
#include "reid/synthworld.hpp"
#include "test_util.hpp"

using namespace reid;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "reidloop_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

WorldConfig small_world() {
    WorldConfig cfg;
    cfg.n_identities = 3;
    cfg.n_cameras = 2;
    cfg.tracklets_per_identity_per_camera = 1;
    cfg.frames = 2;
    cfg.height = 6;
    cfg.width = 2;
    cfg.channels = 3;
    cfg.distractor_count = 1;
    cfg.seed = 13;
    return cfg;
}

}  // namespace

TEST_CASE("parse_ini sections, comments, trimming") {
    const auto kv = io::parse_ini(
        "# comment\n"
        "[world]\n"
        "identities = 12\n"
        "  seed=7  \n"
        "; also a comment\n"
        "[run]\n"
        "strategy = ard\n");
    CHECK(kv.at("world.identities") == "12");
    CHECK(kv.at("world.seed") == "7");
    CHECK(kv.at("run.strategy") == "ard");

    CHECK_THROWS_AS(io::parse_ini("key = 1\n"), io::ConfigError);          // outside a section
    CHECK_THROWS_AS(io::parse_ini("[a]\nnoequals\n"), io::ConfigError);    // malformed line
    CHECK_THROWS_AS(io::parse_ini("[a]\nx=1\nx=2\n"), io::ConfigError);    // duplicate
    CHECK_THROWS_AS(io::parse_ini("[oops\nx=1\n"), io::ConfigError);       // broken header
}

TEST_CASE("world config: defaults, unknown keys, bad values") {
    const auto cfg = io::world_config_from_ini(io::parse_ini("[world]\nidentities = 9\n"));
    CHECK(cfg.n_identities == 9);
    CHECK(cfg.n_cameras == 2);  // default

    CHECK_THROWS_WITH_AS(io::world_config_from_ini(io::parse_ini("[world]\nidentitties = 9\n")),
                         "unknown config key: world.identitties", io::ConfigError);
    CHECK_THROWS_AS(io::world_config_from_ini(io::parse_ini("[world]\nidentities = many\n")),
                    io::ConfigError);
    CHECK_THROWS_AS(io::world_config_from_ini(io::parse_ini("[world]\nidentities = 1\n")),
                    io::ConfigError);  // invariant violation surfaces as config error
}

TEST_CASE("run config requires a strategy and rejects strays") {
    const auto parsed = io::run_config_from_ini(io::parse_ini(
        "[run]\nstrategy = srd\nfixed_k = 0.75\n[sampler]\nb = 0.03\n[learner]\nkind = ncm\n"));
    CHECK(parsed.run.strategy == Strategy::srd);
    CHECK(parsed.run.fixed_k == 0.75);
    CHECK(parsed.run.sampler.b == 0.03);
    CHECK(parsed.run.learner.kind == LearnerKind::ncm);
    CHECK(parsed.split.mode == io::SplitSpec::Mode::one_example);

    CHECK_THROWS_WITH_AS(io::run_config_from_ini(io::parse_ini("[learner]\nkind = ncm\n")),
                         "missing required key: run.strategy", io::ConfigError);
    CHECK_THROWS_AS(
        io::run_config_from_ini(io::parse_ini("[run]\nstrategy = ard\nbogus = 1\n")),
        io::ConfigError);
    CHECK_THROWS_AS(
        io::run_config_from_ini(io::parse_ini("[run]\nstrategy = ard\n[sampler]\nk_step = 0.15\n")),
        io::ConfigError);
    CHECK_THROWS_AS(io::run_config_from_ini(io::parse_ini("[run]\nstrategy = gps\n")),
                    io::ConfigError);
}

TEST_CASE("feature file round trip is bit exact") {
    std::mt19937_64 rng(3);
    const Tracklet t = testutil::random_tracklet(rng, 42, 7, 2, 3, 6, 2, 4);
    const fs::path dir = fresh_dir("feature_roundtrip");
    io::write_feature_file(dir, t);

    const Tracklet back = io::read_feature_file(dir / "t_000042.json");
    CHECK(back.id == t.id);
    CHECK(back.identity_gt == t.identity_gt);
    CHECK(back.camera_id == t.camera_id);
    REQUIRE(back.frames.size() == t.frames.size());
    for (std::size_t f = 0; f < t.frames.size(); ++f) {
        CHECK(back.frames[f].values == t.frames[f].values);
    }
}

TEST_CASE("feature file errors") {
    std::mt19937_64 rng(5);
    const Tracklet t = testutil::random_tracklet(rng, 7, 1, 1, 2, 6, 2, 3);
    const fs::path dir = fresh_dir("feature_errors");
    io::write_feature_file(dir, t);

    CHECK_THROWS_AS(io::read_feature_file(dir / "t_000099.json"), io::ArtifactError);

    // truncated payload
    const std::string payload = slurp(dir / "t_000007.bin");
    io::atomic_write(dir / "t_000007.bin", payload.substr(0, payload.size() - 4));
    CHECK_THROWS_AS(io::read_feature_file(dir / "t_000007.json"), io::ArtifactError);

    io::atomic_write(dir / "t_000007.json", "{not json");
    CHECK_THROWS_AS(io::read_feature_file(dir / "t_000007.json"), io::ArtifactError);
}

TEST_CASE("dataset directory round trip and byte determinism") {
    const WorldConfig wcfg = small_world();
    const Dataset data = generate(wcfg);
    const fs::path a = fresh_dir("dataset_a");
    const fs::path b = fresh_dir("dataset_b");
    io::save_dataset(a, data, wcfg);
    io::save_dataset(b, data, wcfg);

    CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
    CHECK(slurp(a / "labels.csv") == slurp(b / "labels.csv"));
    for (const Tracklet& t : data.tracklets) {
        const auto base = io::feature_basename(t.id).string();
        CHECK(slurp(a / "tracklets" / (base + ".json")) ==
              slurp(b / "tracklets" / (base + ".json")));
        CHECK(slurp(a / "tracklets" / (base + ".bin")) ==
              slurp(b / "tracklets" / (base + ".bin")));
    }

    const Dataset loaded = io::load_dataset(a);
    CHECK(loaded.n_identities == data.n_identities);
    CHECK(loaded.n_cameras == data.n_cameras);
    CHECK(loaded.distractor_count == data.distractor_count);
    REQUIRE(loaded.tracklets.size() == data.tracklets.size());
    for (std::size_t i = 0; i < data.tracklets.size(); ++i) {
        CHECK(loaded.tracklets[i].id == data.tracklets[i].id);
        CHECK(loaded.tracklets[i].identity_gt == data.tracklets[i].identity_gt);
        for (std::size_t f = 0; f < data.tracklets[i].frames.size(); ++f) {
            CHECK(loaded.tracklets[i].frames[f].values == data.tracklets[i].frames[f].values);
        }
    }

    CHECK_THROWS_AS(io::load_dataset(fresh_dir("missing_dataset")), io::ArtifactError);
}

TEST_CASE("model round trip, both kinds") {
    std::mt19937_64 rng(9);
    std::vector<Tracklet> tracklets;
    for (int i = 0; i < 4; ++i) {
        tracklets.push_back(testutil::random_tracklet(rng, i, i % 2, 1, 2, 6, 2, 3));
    }
    std::vector<TrainSample> train;
    for (const Tracklet& t : tracklets) {
        train.push_back({&t, *t.identity_gt});
    }

    for (const LearnerKind kind : {LearnerKind::ncm, LearnerKind::linear_softmax}) {
        LearnerConfig lcfg;
        lcfg.kind = kind;
        lcfg.d_emb = 3;
        lcfg.steps = 4;
        const Model m = fit(train, lcfg);

        const fs::path dir = fresh_dir(kind == LearnerKind::ncm ? "model_ncm" : "model_ls");
        io::save_model(dir / "model.json", m, true);
        const io::LoadedModel back = io::load_model(dir / "model.json");
        CHECK(back.normalize_embeddings);
        CHECK(back.model.kind == m.kind);
        CHECK(back.model.classes == m.classes);
        REQUIRE(back.model.projections.branches.size() == m.projections.branches.size());
        for (std::size_t b = 0; b < m.projections.branches.size(); ++b) {
            CHECK(back.model.projections.branches[b].data == m.projections.branches[b].data);
        }
        for (std::size_t b = 0; b < m.classifiers.size(); ++b) {
            CHECK(back.model.classifiers[b].data == m.classifiers[b].data);
        }
        CHECK(back.model.biases == m.biases);

        // truncated blob rejected
        const std::string blob = slurp(dir / "model.bin");
        io::atomic_write(dir / "model.bin", blob.substr(0, blob.size() - 8));
        CHECK_THROWS_AS(io::load_model(dir / "model.json"), io::ArtifactError);
    }
}

TEST_CASE("checkpoint round trip") {
    std::mt19937_64 rng(11);
    std::vector<Tracklet> tracklets;
    for (int i = 0; i < 4; ++i) {
        tracklets.push_back(testutil::random_tracklet(rng, i, i % 2, 1, 1, 6, 1, 3));
    }
    std::vector<TrainSample> train;
    for (const Tracklet& t : tracklets) {
        train.push_back({&t, *t.identity_gt});
    }
    LearnerConfig lcfg;
    lcfg.d_emb = 2;
    lcfg.steps = 3;

    RunCheckpoint ckpt;
    ckpt.config_fingerprint = 0xDEADBEEFCAFEF00Dull;
    ckpt.next_iteration = 5;
    ckpt.ard.k_tenths = 8;
    ckpt.ard.phase = ArdState::Phase::running;
    ckpt.ard.history = {10, 20, 25};
    ckpt.ard.margin0 = 10.0;
    ckpt.ard.iteration = 5;
    ckpt.srd_prev_count = 17;
    ckpt.linear_t = 3;
    ckpt.model = fit(train, lcfg);
    IterationRecord rec;
    rec.iteration = 4;
    rec.k = 0.8;
    rec.selected = 25;
    rec.train_size = 29;
    rec.pseudo_acc = 0.875;
    rec.rank1 = 0.75;
    rec.map = 0.5;
    rec.seconds = 0.125;
    ckpt.records.push_back(rec);

    const fs::path dir = fresh_dir("checkpoint");
    io::save_checkpoint(dir / "ckpt.json", ckpt);
    const RunCheckpoint back = io::load_checkpoint(dir / "ckpt.json");

    CHECK(back.config_fingerprint == ckpt.config_fingerprint);
    CHECK(back.next_iteration == 5);
    CHECK(back.ard.k_tenths == 8);
    CHECK(back.ard.phase == ArdState::Phase::running);
    CHECK(back.ard.history == std::vector<long long>{10, 20, 25});
    CHECK(back.ard.margin0 == 10.0);
    CHECK(back.srd_prev_count == 17);
    CHECK(back.linear_t == 3);
    REQUIRE(back.records.size() == 1);
    CHECK(back.records[0].k == rec.k);
    CHECK(back.records[0].pseudo_acc == rec.pseudo_acc);
    CHECK(back.records[0].seconds == rec.seconds);
    for (std::size_t b = 0; b < ckpt.model.projections.branches.size(); ++b) {
        CHECK(back.model.projections.branches[b].data ==
              ckpt.model.projections.branches[b].data);
    }

    io::atomic_write(dir / "ckpt.json", "{\"format_version\": 99}");
    CHECK_THROWS_AS(io::load_checkpoint(dir / "ckpt.json"), io::ArtifactError);
}

TEST_CASE("iterations.csv format and round trip") {
    std::vector<IterationRecord> records;
    IterationRecord a;
    a.iteration = 0;
    a.k = 0.7;
    a.selected = 12;
    a.train_size = 17;
    a.pseudo_acc = 0.5;
    a.rank1 = 0.25;
    a.map = 0.125;
    a.seconds = 1.5;
    records.push_back(a);
    IterationRecord b;
    b.iteration = 1;
    b.selected = 15;
    b.train_size = 20;
    b.rank1 = 0.5;
    b.map = 0.25;
    b.seconds = 0.0625;
    records.push_back(b);

    const std::string csv = io::iterations_csv(records);
    CHECK(csv ==
          "iteration,k,selected,train_size,pseudo_acc,rank1,map,seconds\n"
          "0,0.7,12,17,0.500000,0.250000,0.125000,1.500\n"
          "1,,15,20,,0.500000,0.250000,0.062\n");

    const fs::path dir = fresh_dir("csv");
    io::write_iterations_csv(dir / "iterations.csv", records);
    const auto back = io::read_iterations_csv(dir / "iterations.csv");
    REQUIRE(back.size() == 2);
    CHECK(back[0].k == 0.7);
    CHECK(!back[1].k.has_value());
    CHECK(back[0].pseudo_acc == 0.5);
    CHECK(!back[1].pseudo_acc.has_value());
    CHECK(back[1].selected == 15);
}

TEST_CASE("metrics.json has exactly the specified keys") {
    const fs::path dir = fresh_dir("metrics");
    io::write_metrics_json(dir / "metrics.json", {0.5, 0.75, 1.0}, 0.625);
    const std::string text = slurp(dir / "metrics.json");
    const auto j = nlohmann::json::parse(text);
    CHECK(j.size() == 5);
    CHECK(j.at("rank1") == 0.5);
    CHECK(j.at("rank5") == 1.0);   // saturates at the last rank
    CHECK(j.at("rank10") == 1.0);
    CHECK(j.at("rank20") == 1.0);
    CHECK(j.at("map") == 0.625);
}

TEST_CASE("report groups consecutive k values") {
    const fs::path dir = fresh_dir("report");
    std::vector<IterationRecord> records;
    const double ks[] = {0.8, 0.8, 0.9, 1.0, 1.0, 1.0};
    const long long counts[] = {10, 14, 20, 26, 30, 31};
    for (int i = 0; i < 6; ++i) {
        IterationRecord r;
        r.iteration = i;
        r.k = ks[i];
        r.selected = counts[i];
        r.train_size = counts[i] + 5;
        r.rank1 = 0.5;
        r.map = 0.5;
        records.push_back(r);
    }
    io::write_iterations_csv(dir / "iterations.csv", records);
    io::atomic_write(dir / "result.json", "{}\n");

    io::write_report(dir);
    CHECK(slurp(dir / "report_per_k.csv") ==
          "k,iterations,count_entry,count_exit\n"
          "0.8,2,10,14\n"
          "0.9,1,20,20\n"
          "1,3,26,31\n");
    CHECK(slurp(dir / "report_trace.csv") == slurp(dir / "iterations.csv"));

    CHECK_THROWS_AS(io::write_report(fresh_dir("report_empty")), io::ArtifactError);
}

TEST_CASE("apply_split dispatches by mode") {
    const Dataset data = generate(small_world());
    io::SplitSpec spec;
    spec.mode = io::SplitSpec::Mode::one_example;
    spec.seed = 4;
    CHECK(io::apply_split(data, spec).labeled.size() == 3);

    spec.mode = io::SplitSpec::Mode::ratio;
    spec.ratio = 0.5;
    CHECK(io::apply_split(data, spec).labeled.size() == 4);  // ceil(0.5 * 7)
}
