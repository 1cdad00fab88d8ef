#include "reid/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace reid::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "feature and model blobs are little-endian");

using nlohmann::json;

std::string read_file_or(const std::filesystem::path& path, const char* missing_kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ArtifactError(std::string(missing_kind) + " not found: " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json_artifact(const std::filesystem::path& path, const char* kind) {
    const std::string text = read_file_or(path, kind);
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) {
        throw ArtifactError(std::string(kind) + " is not valid JSON: " + path.string());
    }
    return j;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

// Tracks which keys a loader recognizes so leftovers can be reported.
class KeyReader {
public:
    explicit KeyReader(const std::map<std::string, std::string>& kv) : kv_(kv) {}

    std::string str(const std::string& key, const std::string& def) {
        recognized_.insert(key);
        auto it = kv_.find(key);
        return it == kv_.end() ? def : it->second;
    }

    std::string require(const std::string& key) {
        recognized_.insert(key);
        auto it = kv_.find(key);
        if (it == kv_.end()) {
            throw ConfigError("missing required key: " + key);
        }
        return it->second;
    }

    long long integer(const std::string& key, long long def) {
        const std::string v = str(key, "");
        if (v.empty()) {
            return def;
        }
        try {
            std::size_t pos = 0;
            const long long out = std::stoll(v, &pos);
            if (pos != v.size()) {
                throw std::invalid_argument(v);
            }
            return out;
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + ": expected integer, got '" + v + "'");
        }
    }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t def) {
        const std::string v = str(key, "");
        if (v.empty()) {
            return def;
        }
        try {
            std::size_t pos = 0;
            const unsigned long long out = std::stoull(v, &pos);
            if (pos != v.size()) {
                throw std::invalid_argument(v);
            }
            return out;
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + ": expected unsigned integer, got '" + v +
                              "'");
        }
    }

    double real(const std::string& key, double def) {
        const std::string v = str(key, "");
        if (v.empty()) {
            return def;
        }
        try {
            std::size_t pos = 0;
            const double out = std::stod(v, &pos);
            if (pos != v.size()) {
                throw std::invalid_argument(v);
            }
            return out;
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + ": expected number, got '" + v + "'");
        }
    }

    bool boolean(const std::string& key, bool def) {
        const std::string v = str(key, "");
        if (v.empty()) {
            return def;
        }
        if (v == "true" || v == "1" || v == "yes") {
            return true;
        }
        if (v == "false" || v == "0" || v == "no") {
            return false;
        }
        throw ConfigError("config key " + key + ": expected boolean, got '" + v + "'");
    }

    void reject_unrecognized() const {
        for (const auto& [key, value] : kv_) {
            (void)value;
            if (!recognized_.count(key)) {
                throw ConfigError("unknown config key: " + key);
            }
        }
    }

private:
    const std::map<std::string, std::string>& kv_;
    std::set<std::string> recognized_;
};

std::vector<int> parse_ratio(const std::string& text, const std::string& key) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoi(trim(item)));
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + ": expected comma-separated integers");
        }
    }
    if (out.empty()) {
        throw ConfigError("config key " + key + ": empty ratio");
    }
    return out;
}

int tenths_from_real(double v, const std::string& key) {
    const long long t = std::llround(v * 10.0);
    if (std::abs(v * 10.0 - static_cast<double>(t)) > 1e-6 || t <= 0) {
        throw ConfigError("config key " + key + ": must be a positive multiple of 0.1");
    }
    return static_cast<int>(t);
}

std::string format_double(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

// --- model blob layout: projections, then classifiers, then biases ---

std::vector<double> model_params_flat(const Model& m) {
    std::vector<double> out;
    for (const Matrix& p : m.projections.branches) {
        out.insert(out.end(), p.data.begin(), p.data.end());
    }
    for (const Matrix& w : m.classifiers) {
        out.insert(out.end(), w.data.begin(), w.data.end());
    }
    for (const auto& b : m.biases) {
        out.insert(out.end(), b.begin(), b.end());
    }
    return out;
}

json model_header(const Model& m) {
    json j;
    j["kind"] = m.kind == LearnerKind::ncm ? "ncm" : "linear-softmax";
    j["channels"] = m.projections.channels();
    j["d_emb"] = m.projections.d_emb();
    j["part_ratio"] = m.projections.part_ratio;
    j["classes"] = m.classes;
    j["param_count"] = model_params_flat(m).size();
    return j;
}

Model model_from_header(const json& j, const std::vector<double>& params) {
    Model m;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "ncm") {
        m.kind = LearnerKind::ncm;
    } else if (kind == "linear-softmax") {
        m.kind = LearnerKind::linear_softmax;
    } else {
        throw ArtifactError("model header: unknown kind '" + kind + "'");
    }
    const auto channels = j.at("channels").get<std::size_t>();
    const auto d_emb = j.at("d_emb").get<std::size_t>();
    m.projections.part_ratio = j.at("part_ratio").get<std::vector<int>>();
    m.classes = j.at("classes").get<std::vector<IdentityId>>();

    const std::size_t n_branches = m.projections.part_ratio.size() + 1;
    const std::size_t k_classes = m.classes.size();
    std::size_t expected = n_branches * channels * d_emb;
    if (m.kind == LearnerKind::linear_softmax) {
        expected += n_branches * (d_emb * k_classes + k_classes);
    }
    if (params.size() != expected || j.at("param_count").get<std::size_t>() != expected) {
        throw ArtifactError("model blob: expected " + std::to_string(expected) +
                            " parameters, found " + std::to_string(params.size()));
    }

    std::size_t off = 0;
    for (std::size_t b = 0; b < n_branches; ++b) {
        Matrix p(channels, d_emb);
        std::copy_n(params.begin() + off, p.data.size(), p.data.begin());
        off += p.data.size();
        m.projections.branches.push_back(std::move(p));
    }
    if (m.kind == LearnerKind::linear_softmax) {
        for (std::size_t b = 0; b < n_branches; ++b) {
            Matrix w(d_emb, k_classes);
            std::copy_n(params.begin() + off, w.data.size(), w.data.begin());
            off += w.data.size();
            m.classifiers.push_back(std::move(w));
        }
        for (std::size_t b = 0; b < n_branches; ++b) {
            std::vector<double> bias(k_classes);
            std::copy_n(params.begin() + off, bias.size(), bias.begin());
            off += bias.size();
            m.biases.push_back(std::move(bias));
        }
    }
    m.projections.validate();
    return m;
}

void write_doubles(const std::filesystem::path& path, const std::vector<double>& values) {
    std::string bytes(values.size() * sizeof(double), '\0');
    std::memcpy(bytes.data(), values.data(), bytes.size());
    atomic_write(path, bytes);
}

std::vector<double> read_doubles(const std::filesystem::path& path, std::size_t expected,
                                 const char* kind) {
    const std::string bytes = read_file_or(path, kind);
    if (bytes.size() != expected * sizeof(double)) {
        throw ArtifactError(std::string(kind) + " has " + std::to_string(bytes.size()) +
                            " bytes, expected " + std::to_string(expected * sizeof(double)) +
                            ": " + path.string());
    }
    std::vector<double> out(expected);
    std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

std::filesystem::path sibling_bin(const std::filesystem::path& json_path) {
    std::filesystem::path p = json_path;
    p.replace_extension(".bin");
    return p;
}

json record_to_json(const IterationRecord& r) {
    json j;
    j["iteration"] = r.iteration;
    j["k"] = r.k ? json(*r.k) : json(nullptr);
    j["selected"] = r.selected;
    j["train_size"] = r.train_size;
    j["pseudo_acc"] = r.pseudo_acc ? json(*r.pseudo_acc) : json(nullptr);
    j["rank1"] = r.rank1;
    j["map"] = r.map;
    j["seconds"] = r.seconds;
    return j;
}

IterationRecord record_from_json(const json& j) {
    IterationRecord r;
    r.iteration = j.at("iteration").get<long long>();
    if (!j.at("k").is_null()) {
        r.k = j.at("k").get<double>();
    }
    r.selected = j.at("selected").get<long long>();
    r.train_size = j.at("train_size").get<long long>();
    if (!j.at("pseudo_acc").is_null()) {
        r.pseudo_acc = j.at("pseudo_acc").get<double>();
    }
    r.rank1 = j.at("rank1").get<double>();
    r.map = j.at("map").get<double>();
    r.seconds = j.at("seconds").get<double>();
    return r;
}

}  // namespace

std::map<std::string, std::string> parse_ini(const std::string& text) {
    std::map<std::string, std::string> out;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') {
            continue;
        }
        if (t.front() == '[') {
            if (t.back() != ']' || t.size() < 3) {
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": malformed section header");
            }
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        if (section.empty()) {
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": key outside any [section]");
        }
        const std::string key = section + "." + trim(t.substr(0, eq));
        if (out.count(key)) {
            throw ConfigError("duplicate config key: " + key);
        }
        out[key] = trim(t.substr(eq + 1));
    }
    return out;
}

std::map<std::string, std::string> load_ini(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config file not found: " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_ini(ss.str());
}

WorldConfig world_config_from_ini(const std::map<std::string, std::string>& kv) {
    KeyReader r(kv);
    WorldConfig cfg;
    cfg.n_identities = r.integer("world.identities", cfg.n_identities);
    cfg.n_cameras = static_cast<int>(r.integer("world.cameras", cfg.n_cameras));
    cfg.tracklets_per_identity_per_camera = static_cast<int>(
        r.integer("world.tracklets_per_identity_per_camera",
                  cfg.tracklets_per_identity_per_camera));
    cfg.frames = static_cast<int>(r.integer("world.frames", cfg.frames));
    cfg.height = static_cast<std::size_t>(r.integer("world.height", 12));
    cfg.width = static_cast<std::size_t>(r.integer("world.width", 4));
    cfg.channels = static_cast<std::size_t>(r.integer("world.channels", 16));
    cfg.identity_spread = r.real("world.identity_spread", cfg.identity_spread);
    cfg.camera_offset_scale = r.real("world.camera_offset_scale", cfg.camera_offset_scale);
    cfg.frame_noise = r.real("world.frame_noise", cfg.frame_noise);
    cfg.cell_noise = r.real("world.cell_noise", cfg.cell_noise);
    cfg.distractor_count = r.integer("world.distractors", cfg.distractor_count);
    cfg.striped = r.boolean("world.striped", cfg.striped);
    cfg.confusable_delta = r.real("world.confusable_delta", cfg.confusable_delta);
    cfg.seed = r.unsigned_integer("world.seed", cfg.seed);
    r.reject_unrecognized();
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

RunFileConfig run_config_from_ini(const std::map<std::string, std::string>& kv) {
    KeyReader r(kv);
    RunFileConfig out;

    const std::string kind = r.str("learner.kind", "linear-softmax");
    if (kind == "ncm") {
        out.run.learner.kind = LearnerKind::ncm;
    } else if (kind == "linear-softmax") {
        out.run.learner.kind = LearnerKind::linear_softmax;
    } else {
        throw ConfigError("config key learner.kind: expected ncm or linear-softmax, got '" +
                          kind + "'");
    }
    out.run.learner.d_emb = static_cast<std::size_t>(
        r.integer("learner.d_emb", static_cast<long long>(out.run.learner.d_emb)));
    out.run.learner.steps = static_cast<int>(r.integer("learner.steps", out.run.learner.steps));
    out.run.learner.learning_rate = r.real("learner.learning_rate", out.run.learner.learning_rate);
    out.run.learner.label_smoothing =
        r.real("learner.label_smoothing", out.run.learner.label_smoothing);
    out.run.learner.seed = r.unsigned_integer("learner.seed", out.run.learner.seed);
    const std::string ratio = r.str("learner.part_ratio", "");
    if (!ratio.empty()) {
        out.run.learner.part_ratio = parse_ratio(ratio, "learner.part_ratio");
    }

    out.run.sampler.k0 = r.real("sampler.k0", out.run.sampler.k0);
    out.run.sampler.probe_fraction = r.real("sampler.probe_fraction",
                                            out.run.sampler.probe_fraction);
    const std::string mode = r.str("sampler.coeff_mode", "dynamic");
    if (mode == "dynamic") {
        out.run.sampler.coeff_mode = SamplerConfig::CoeffMode::dynamic;
    } else if (mode == "fixed") {
        out.run.sampler.coeff_mode = SamplerConfig::CoeffMode::fixed;
    } else {
        throw ConfigError("config key sampler.coeff_mode: expected dynamic or fixed, got '" +
                          mode + "'");
    }
    out.run.sampler.fixed_coeff = r.real("sampler.fixed_coeff", out.run.sampler.fixed_coeff);
    out.run.sampler.coeff_intercept =
        r.real("sampler.coeff_intercept", out.run.sampler.coeff_intercept);
    out.run.sampler.b = r.real("sampler.b", out.run.sampler.b);
    out.run.sampler.b_absolute = r.boolean("sampler.b_absolute", out.run.sampler.b_absolute);
    out.run.sampler.p = r.real("sampler.p", out.run.sampler.p);
    out.run.sampler.k_step_tenths = tenths_from_real(r.real("sampler.k_step", 0.1),
                                                     "sampler.k_step");
    out.run.sampler.max_iterations_per_k = static_cast<int>(
        r.integer("sampler.max_iterations_per_k", out.run.sampler.max_iterations_per_k));

    out.run.strategy = [&] {
        const std::string s = r.require("run.strategy");
        try {
            return strategy_from_name(s);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }();
    out.run.fixed_k = r.real("run.fixed_k", out.run.fixed_k);
    out.run.seed = r.unsigned_integer("run.seed", out.run.seed);
    out.run.max_global_iterations = static_cast<int>(
        r.integer("run.max_global_iterations", out.run.max_global_iterations));
    out.run.finalize_all = r.boolean("run.finalize_all", out.run.finalize_all);
    out.run.normalize_embeddings =
        r.boolean("run.normalize_embeddings", out.run.normalize_embeddings);
    out.run.checkpoint_every = static_cast<int>(
        r.integer("run.checkpoint_every", out.run.checkpoint_every));

    const std::string split_mode = r.str("split.mode", "one_example");
    if (split_mode == "one_example") {
        out.split.mode = SplitSpec::Mode::one_example;
    } else if (split_mode == "ratio") {
        out.split.mode = SplitSpec::Mode::ratio;
    } else {
        throw ConfigError("config key split.mode: expected one_example or ratio, got '" +
                          split_mode + "'");
    }
    out.split.ratio = r.real("split.ratio", out.split.ratio);
    out.split.seed = r.unsigned_integer("split.seed", out.split.seed);

    r.reject_unrecognized();
    try {
        out.run.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return out;
}

LabelBook apply_split(const Dataset& data, const SplitSpec& split) {
    if (split.mode == SplitSpec::Mode::one_example) {
        return split_one_example(data, split.seed);
    }
    return split_ratio(data, split.ratio, split.seed);
}

std::filesystem::path feature_basename(TrackletId id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "t_%06lld", static_cast<long long>(id));
    return buf;
}

void write_feature_file(const std::filesystem::path& dir, const Tracklet& t) {
    t.validate();
    const FrameFeatureMap& first = t.frames.front();
    json header;
    header["tracklet_id"] = t.id;
    if (t.identity_gt) {
        header["identity"] = *t.identity_gt;
    }
    header["camera"] = t.camera_id;
    header["T"] = t.frames.size();
    header["H"] = first.rows;
    header["W"] = first.cols;
    header["C"] = first.channels;
    header["dtype"] = "f32";
    header["endian"] = "little";

    const auto base = dir / feature_basename(t.id);
    atomic_write(base.string() + ".json", header.dump(2) + "\n");

    std::string payload;
    payload.reserve(t.frames.size() * first.values.size() * sizeof(float));
    for (const FrameFeatureMap& f : t.frames) {
        const auto* bytes = reinterpret_cast<const char*>(f.values.data());
        payload.append(bytes, f.values.size() * sizeof(float));
    }
    atomic_write(base.string() + ".bin", payload);
}

Tracklet read_feature_file(const std::filesystem::path& json_path) {
    const json header = parse_json_artifact(json_path, "feature header");
    if (header.at("dtype").get<std::string>() != "f32" ||
        header.at("endian").get<std::string>() != "little") {
        throw ArtifactError("feature header: unsupported dtype/endian in " + json_path.string());
    }
    Tracklet t;
    t.id = header.at("tracklet_id").get<TrackletId>();
    if (header.contains("identity")) {
        t.identity_gt = header.at("identity").get<IdentityId>();
    }
    t.camera_id = header.at("camera").get<int>();
    const auto frames = header.at("T").get<std::size_t>();
    const auto rows = header.at("H").get<std::size_t>();
    const auto cols = header.at("W").get<std::size_t>();
    const auto channels = header.at("C").get<std::size_t>();

    const std::string payload = read_file_or(sibling_bin(json_path), "feature payload");
    const std::size_t frame_floats = rows * cols * channels;
    if (payload.size() != frames * frame_floats * sizeof(float)) {
        throw ArtifactError("feature payload: " + std::to_string(payload.size()) +
                            " bytes does not match header shape for " + json_path.string());
    }
    for (std::size_t f = 0; f < frames; ++f) {
        FrameFeatureMap map;
        map.rows = rows;
        map.cols = cols;
        map.channels = channels;
        map.values.resize(frame_floats);
        std::memcpy(map.values.data(), payload.data() + f * frame_floats * sizeof(float),
                    frame_floats * sizeof(float));
        t.frames.push_back(std::move(map));
    }
    t.validate();
    return t;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& data,
                  const WorldConfig& cfg) {
    std::filesystem::create_directories(dir / "tracklets");

    json manifest;
    manifest["format_version"] = 1;
    manifest["kind"] = "reidloop-dataset";
    manifest["world"]["identities"] = cfg.n_identities;
    manifest["world"]["cameras"] = cfg.n_cameras;
    manifest["world"]["tracklets_per_identity_per_camera"] = cfg.tracklets_per_identity_per_camera;
    manifest["world"]["frames"] = cfg.frames;
    manifest["world"]["height"] = cfg.height;
    manifest["world"]["width"] = cfg.width;
    manifest["world"]["channels"] = cfg.channels;
    manifest["world"]["identity_spread"] = cfg.identity_spread;
    manifest["world"]["camera_offset_scale"] = cfg.camera_offset_scale;
    manifest["world"]["frame_noise"] = cfg.frame_noise;
    manifest["world"]["cell_noise"] = cfg.cell_noise;
    manifest["world"]["distractors"] = cfg.distractor_count;
    manifest["world"]["striped"] = cfg.striped;
    manifest["world"]["confusable_delta"] = cfg.confusable_delta;
    manifest["world"]["seed"] = cfg.seed;
    manifest["counts"]["tracklets"] = data.tracklets.size();
    manifest["counts"]["identities"] = data.n_identities;
    manifest["counts"]["cameras"] = data.n_cameras;
    manifest["counts"]["distractors"] = data.distractor_count;
    atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");

    std::string labels = "tracklet_id,identity,camera\n";
    for (const Tracklet& t : data.tracklets) {
        labels += std::to_string(t.id) + "," +
                  (t.identity_gt ? std::to_string(*t.identity_gt) : "") + "," +
                  std::to_string(t.camera_id) + "\n";
        write_feature_file(dir / "tracklets", t);
    }
    atomic_write(dir / "labels.csv", labels);
}

Dataset load_dataset(const std::filesystem::path& dir) {
    const json manifest = parse_json_artifact(dir / "manifest.json", "dataset manifest");
    Dataset data;
    data.n_identities = manifest.at("counts").at("identities").get<std::int64_t>();
    data.n_cameras = manifest.at("counts").at("cameras").get<int>();
    data.distractor_count = manifest.at("counts").at("distractors").get<std::int64_t>();
    const auto expected = manifest.at("counts").at("tracklets").get<std::size_t>();

    const std::string labels = read_file_or(dir / "labels.csv", "dataset labels");
    std::istringstream in(labels);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        const auto comma = line.find(',');
        const TrackletId id = std::stoll(line.substr(0, comma));
        data.tracklets.push_back(
            read_feature_file(dir / "tracklets" / (feature_basename(id).string() + ".json")));
    }
    if (data.tracklets.size() != expected) {
        throw ArtifactError("dataset has " + std::to_string(data.tracklets.size()) +
                            " tracklets, manifest says " + std::to_string(expected));
    }
    std::sort(data.tracklets.begin(), data.tracklets.end(),
              [](const Tracklet& a, const Tracklet& b) { return a.id < b.id; });
    return data;
}

void save_model(const std::filesystem::path& json_path, const Model& m,
                bool normalize_embeddings) {
    json header = model_header(m);
    header["format_version"] = 1;
    header["normalize_embeddings"] = normalize_embeddings;
    atomic_write(json_path, header.dump(2) + "\n");
    write_doubles(sibling_bin(json_path), model_params_flat(m));
}

LoadedModel load_model(const std::filesystem::path& json_path) {
    const json header = parse_json_artifact(json_path, "model header");
    if (header.at("format_version").get<int>() != 1) {
        throw ArtifactError("model header: unsupported format version");
    }
    const auto params = read_doubles(sibling_bin(json_path),
                                     header.at("param_count").get<std::size_t>(), "model blob");
    LoadedModel out;
    out.model = model_from_header(header, params);
    out.normalize_embeddings = header.at("normalize_embeddings").get<bool>();
    return out;
}

void save_checkpoint(const std::filesystem::path& json_path, const RunCheckpoint& ckpt) {
    json j;
    j["format_version"] = ckpt.version;
    j["config_fingerprint"] = ckpt.config_fingerprint;
    j["next_iteration"] = ckpt.next_iteration;
    j["ard"]["k_tenths"] = ckpt.ard.k_tenths;
    j["ard"]["k_step_tenths"] = ckpt.ard.k_step_tenths;
    j["ard"]["history"] = ckpt.ard.history;
    j["ard"]["margin0"] = ckpt.ard.margin0 ? json(*ckpt.ard.margin0) : json(nullptr);
    j["ard"]["iteration"] = ckpt.ard.iteration;
    j["ard"]["phase"] = static_cast<int>(ckpt.ard.phase);
    j["ard"]["cap_breaches"] = ckpt.ard.cap_breaches;
    j["srd_prev_count"] = ckpt.srd_prev_count;
    j["linear_t"] = ckpt.linear_t;
    j["records"] = json::array();
    for (const IterationRecord& r : ckpt.records) {
        j["records"].push_back(record_to_json(r));
    }
    j["model"] = model_header(ckpt.model);
    atomic_write(json_path, j.dump(2) + "\n");
    write_doubles(sibling_bin(json_path), model_params_flat(ckpt.model));
}

RunCheckpoint load_checkpoint(const std::filesystem::path& json_path) {
    const json j = parse_json_artifact(json_path, "checkpoint");
    RunCheckpoint ckpt;
    if (j.at("format_version").get<int>() != ckpt.version) {
        throw ArtifactError("checkpoint: unsupported format version");
    }
    ckpt.config_fingerprint = j.at("config_fingerprint").get<std::uint64_t>();
    ckpt.next_iteration = j.at("next_iteration").get<long long>();
    const json& a = j.at("ard");
    ckpt.ard.k_tenths = a.at("k_tenths").get<int>();
    ckpt.ard.k_step_tenths = a.at("k_step_tenths").get<int>();
    ckpt.ard.history = a.at("history").get<std::vector<long long>>();
    if (!a.at("margin0").is_null()) {
        ckpt.ard.margin0 = a.at("margin0").get<double>();
    }
    ckpt.ard.iteration = a.at("iteration").get<long long>();
    ckpt.ard.phase = static_cast<ArdState::Phase>(a.at("phase").get<int>());
    ckpt.ard.cap_breaches = a.at("cap_breaches").get<int>();
    ckpt.srd_prev_count = j.at("srd_prev_count").get<long long>();
    ckpt.linear_t = j.at("linear_t").get<long long>();
    for (const json& r : j.at("records")) {
        ckpt.records.push_back(record_from_json(r));
    }
    const auto params = read_doubles(
        sibling_bin(json_path), j.at("model").at("param_count").get<std::size_t>(),
        "checkpoint blob");
    ckpt.model = model_from_header(j.at("model"), params);
    return ckpt;
}

std::string iterations_csv(const std::vector<IterationRecord>& records) {
    std::string out = "iteration,k,selected,train_size,pseudo_acc,rank1,map,seconds\n";
    for (const IterationRecord& r : records) {
        out += std::to_string(r.iteration) + ",";
        if (r.k) {
            out += format_double("%g", *r.k);
        }
        out += "," + std::to_string(r.selected) + "," + std::to_string(r.train_size) + ",";
        if (r.pseudo_acc) {
            out += format_double("%.6f", *r.pseudo_acc);
        }
        out += "," + format_double("%.6f", r.rank1) + "," + format_double("%.6f", r.map) + "," +
               format_double("%.3f", r.seconds) + "\n";
    }
    return out;
}

void write_iterations_csv(const std::filesystem::path& path,
                          const std::vector<IterationRecord>& records) {
    atomic_write(path, iterations_csv(records));
}

std::vector<IterationRecord> read_iterations_csv(const std::filesystem::path& path) {
    const std::string text = read_file_or(path, "iterations.csv");
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) ||
        line.rfind("iteration,k,selected,train_size,pseudo_acc,rank1,map,seconds", 0) != 0) {
        throw ArtifactError("iterations.csv: unexpected header in " + path.string());
    }
    std::vector<IterationRecord> out;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) {
            fields.push_back(f);
        }
        if (fields.size() < 8) {
            fields.resize(8);  // trailing empties dropped by getline
        }
        IterationRecord r;
        r.iteration = std::stoll(fields[0]);
        if (!fields[1].empty()) {
            r.k = std::stod(fields[1]);
        }
        r.selected = std::stoll(fields[2]);
        r.train_size = std::stoll(fields[3]);
        if (!fields[4].empty()) {
            r.pseudo_acc = std::stod(fields[4]);
        }
        r.rank1 = std::stod(fields[5]);
        r.map = std::stod(fields[6]);
        r.seconds = std::stod(fields[7]);
        out.push_back(r);
    }
    return out;
}

void write_result_json(const std::filesystem::path& path, const RunResult& result,
                       const RunConfig& cfg) {
    json j;
    j["format_version"] = 1;
    j["strategy"] = strategy_name(cfg.strategy);
    j["termination_reason"] = result.termination_reason;
    j["iterations"] = result.records.size();
    j["ard_cap_breaches"] = result.ard_cap_breaches;
    const IterationRecord& last = result.records.back();
    j["final"]["rank1"] = last.rank1;
    j["final"]["map"] = last.map;
    j["final"]["pseudo_accuracy"] = last.pseudo_acc ? json(*last.pseudo_acc) : json(nullptr);
    j["final"]["train_size"] = last.train_size;
    j["final"]["selected"] = last.selected;
    atomic_write(path, j.dump(2) + "\n");
}

void write_metrics_json(const std::filesystem::path& path, const std::vector<double>& cmc,
                        double map) {
    const auto rank = [&cmc](std::size_t n) {
        return cmc[std::min(n, cmc.size()) - 1];
    };
    json j;
    j["rank1"] = rank(1);
    j["rank5"] = rank(5);
    j["rank10"] = rank(10);
    j["rank20"] = rank(20);
    j["map"] = map;
    atomic_write(path, j.dump(2) + "\n");
}

void write_report(const std::filesystem::path& run_dir) {
    const auto csv_path = run_dir / "iterations.csv";
    if (!std::filesystem::exists(run_dir / "result.json")) {
        throw ArtifactError("run directory incomplete, missing result.json: " +
                            run_dir.string());
    }
    const auto records = read_iterations_csv(csv_path);
    if (records.empty()) {
        throw ArtifactError("run directory incomplete, empty iterations.csv: " +
                            run_dir.string());
    }

    std::string per_k = "k,iterations,count_entry,count_exit\n";
    std::size_t i = 0;
    while (i < records.size()) {
        std::size_t jx = i;
        while (jx + 1 < records.size() && records[jx + 1].k == records[i].k) {
            ++jx;
        }
        per_k += (records[i].k ? format_double("%g", *records[i].k) : "") + "," +
                 std::to_string(jx - i + 1) + "," + std::to_string(records[i].selected) + "," +
                 std::to_string(records[jx].selected) + "\n";
        i = jx + 1;
    }
    atomic_write(run_dir / "report_per_k.csv", per_k);
    atomic_write(run_dir / "report_trace.csv", iterations_csv(records));
}

void atomic_write(const std::filesystem::path& path, const std::string& bytes) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw ArtifactError("cannot write " + tmp.string());
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw ArtifactError("short write to " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace reid::io
