#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "reid/core.hpp"
#include "reid/orchestrator.hpp"
#include "reid/synthworld.hpp"

namespace reid::io {

// Bad or missing configuration -> CLI exit 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Missing or incomplete on-disk artifacts -> CLI exit 4.
struct ArtifactError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// config files: flat key = value lines under [section] headers, '#' comments
// ---------------------------------------------------------------------------

std::map<std::string, std::string> parse_ini(const std::string& text);
std::map<std::string, std::string> load_ini(const std::filesystem::path& path);

struct SplitSpec {
    enum class Mode { one_example, ratio } mode = Mode::one_example;
    double ratio = 0.2;
    std::uint64_t seed = 1;
};

WorldConfig world_config_from_ini(const std::map<std::string, std::string>& kv);

struct RunFileConfig {
    RunConfig run;
    SplitSpec split;
};
RunFileConfig run_config_from_ini(const std::map<std::string, std::string>& kv);

LabelBook apply_split(const Dataset& data, const SplitSpec& split);

// ---------------------------------------------------------------------------
// feature files: <base>.json sidecar + <base>.bin payload of
// T*H*W*C little-endian f32 in (frame, row, col, channel) order
// ---------------------------------------------------------------------------

std::filesystem::path feature_basename(TrackletId id);  // "t_000042"
void write_feature_file(const std::filesystem::path& dir, const Tracklet& t);
Tracklet read_feature_file(const std::filesystem::path& json_path);

// dataset directory: manifest.json + labels.csv + tracklets/
void save_dataset(const std::filesystem::path& dir, const Dataset& data, const WorldConfig& cfg);
Dataset load_dataset(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// model files: JSON header (shapes, class list, flags) + f64 LE blob
// ---------------------------------------------------------------------------

void save_model(const std::filesystem::path& json_path, const Model& m,
                bool normalize_embeddings);
struct LoadedModel {
    Model model;
    bool normalize_embeddings = false;
};
LoadedModel load_model(const std::filesystem::path& json_path);

// checkpoints: <base>.json (state + record log) + <base>.bin (model params)
void save_checkpoint(const std::filesystem::path& json_path, const RunCheckpoint& ckpt);
RunCheckpoint load_checkpoint(const std::filesystem::path& json_path);

// ---------------------------------------------------------------------------
// run artifacts
// ---------------------------------------------------------------------------

std::string iterations_csv(const std::vector<IterationRecord>& records);
void write_iterations_csv(const std::filesystem::path& path,
                          const std::vector<IterationRecord>& records);
std::vector<IterationRecord> read_iterations_csv(const std::filesystem::path& path);

void write_result_json(const std::filesystem::path& path, const RunResult& result,
                       const RunConfig& cfg);

void write_metrics_json(const std::filesystem::path& path, const std::vector<double>& cmc,
                        double map);

// report_per_k.csv (k, iterations, count at entry/exit) and
// report_trace.csv (verbatim per-iteration trace), written into run_dir.
void write_report(const std::filesystem::path& run_dir);

// write-temp-then-rename
void atomic_write(const std::filesystem::path& path, const std::string& bytes);

}  // namespace reid::io
