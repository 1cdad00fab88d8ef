#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "reid/evalkit.hpp"
#include "reid/io.hpp"
#include "reid/learner.hpp"
#include "reid/orchestrator.hpp"
#include "reid/synthworld.hpp"

namespace fs = std::filesystem;

namespace {

// Exit codes: 0 ok, 2 config error, 3 runtime precondition error,
// 4 missing/incomplete artifacts.
constexpr int kExitConfig = 2;
constexpr int kExitPrecondition = 3;
constexpr int kExitArtifact = 4;

int cmd_synth(const std::string& config_path, const std::string& out_dir) {
    const auto cfg = reid::io::world_config_from_ini(reid::io::load_ini(config_path));
    const reid::Dataset data = reid::generate(cfg);
    reid::io::save_dataset(out_dir, data, cfg);
    std::cout << "wrote " << data.tracklets.size() << " tracklets (" << data.n_identities
              << " identities, " << data.distractor_count << " distractors) to " << out_dir
              << "\n";
    return 0;
}

int cmd_run(const std::string& dataset_dir, const std::string& config_path,
            const std::string& out_dir, const std::string& resume_path) {
    const reid::Dataset data = reid::io::load_dataset(dataset_dir);
    const reid::io::RunFileConfig cfg =
        reid::io::run_config_from_ini(reid::io::load_ini(config_path));
    const reid::LabelBook book = reid::io::apply_split(data, cfg.split);

    fs::create_directories(out_dir);
    const reid::CheckpointSink sink = [&out_dir](const reid::RunCheckpoint& ckpt) {
        char name[48];
        std::snprintf(name, sizeof(name), "checkpoint_%06lld.json",
                      static_cast<long long>(ckpt.next_iteration));
        reid::io::save_checkpoint(fs::path(out_dir) / name, ckpt);
    };

    reid::RunResult result;
    if (resume_path.empty()) {
        result = reid::run(data, book, cfg.run, sink);
    } else {
        const reid::RunCheckpoint ckpt = reid::io::load_checkpoint(resume_path);
        result = reid::resume(data, book, cfg.run, ckpt, sink);
    }

    reid::io::write_iterations_csv(fs::path(out_dir) / "iterations.csv", result.records);
    reid::io::save_model(fs::path(out_dir) / "model.json", result.model,
                         cfg.run.normalize_embeddings);
    reid::io::write_result_json(fs::path(out_dir) / "result.json", result, cfg.run);

    const reid::IterationRecord& last = result.records.back();
    std::cout << "terminated: " << result.termination_reason << " after "
              << result.records.size() << " iterations\n"
              << "final train size " << last.train_size << ", rank-1 " << last.rank1
              << ", mAP " << last.map << "\n";
    if (result.ard_cap_breaches > 0) {
        std::cerr << "warning: per-k iteration cap forced " << result.ard_cap_breaches
                  << " advance(s)\n";
    }
    return 0;
}

int cmd_eval(const std::string& dataset_dir, const std::string& model_path,
             const std::string& split, const std::string& out_path) {
    if (split != "all") {
        throw reid::io::ConfigError("eval: unsupported split '" + split +
                                    "' (only 'all' is available)");
    }
    const reid::Dataset data = reid::io::load_dataset(dataset_dir);
    const reid::io::LoadedModel lm = reid::io::load_model(model_path);
    const auto embeddings = reid::embed_dataset(data, lm.model, lm.normalize_embeddings);
    const auto [probe, gallery] = reid::build_reid_protocol(data, embeddings);
    const reid::CmcMapResult metrics = reid::cmc_map(probe, gallery);

    fs::path out = out_path.empty() ? fs::path(model_path).parent_path() / "metrics.json"
                                    : fs::path(out_path);
    reid::io::write_metrics_json(out, metrics.cmc, metrics.map);
    std::cout << "rank-1 " << metrics.cmc.front() << ", mAP " << metrics.map << " -> "
              << out.string() << "\n";
    return 0;
}

int cmd_report(const std::string& run_dir) {
    reid::io::write_report(run_dir);
    std::cout << "wrote " << (fs::path(run_dir) / "report_per_k.csv").string() << " and "
              << (fs::path(run_dir) / "report_trace.csv").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reidloop: progressive pseudo-label self-training at desk scale"};
    app.require_subcommand(1);

    std::string config_path, out_dir, dataset_dir, model_path, run_dir;
    std::string resume_path, split = "all", metrics_out;

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset directory");
    synth->add_option("config", config_path, "world config file")->required();
    synth->add_option("out_dir", out_dir, "output dataset directory")->required();

    auto* run = app.add_subcommand("run", "execute the self-training loop");
    run->add_option("dataset_dir", dataset_dir, "dataset directory")->required();
    run->add_option("config", config_path, "run config file")->required();
    run->add_option("out_dir", out_dir, "output directory")->required();
    run->add_option("--resume", resume_path, "checkpoint JSON to resume from");

    auto* eval = app.add_subcommand("eval", "evaluate a saved model on a dataset");
    eval->add_option("dataset_dir", dataset_dir, "dataset directory")->required();
    eval->add_option("model", model_path, "model JSON header")->required();
    eval->add_option("--split", split, "evaluation split (only 'all')");
    eval->add_option("--out", metrics_out, "metrics output path");

    auto* report = app.add_subcommand("report", "summarize a completed run directory");
    report->add_option("run_dir", run_dir, "run output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (synth->parsed()) {
            return cmd_synth(config_path, out_dir);
        }
        if (run->parsed()) {
            return cmd_run(dataset_dir, config_path, out_dir, resume_path);
        }
        if (eval->parsed()) {
            return cmd_eval(dataset_dir, model_path, split, metrics_out);
        }
        if (report->parsed()) {
            return cmd_report(run_dir);
        }
    } catch (const reid::io::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const reid::io::ArtifactError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitArtifact;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitArtifact;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPrecondition;
    }
    return 0;
}
