#include "reid/pam.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace reid {

PartRanges split_rows(std::size_t height, const std::vector<int>& ratio) {
    if (ratio.empty()) {
        throw std::invalid_argument("split_rows: empty ratio");
    }
    long long total = 0;
    for (int r : ratio) {
        if (r <= 0) {
            throw std::invalid_argument("split_rows: ratio entries must be positive");
        }
        total += r;
    }

    std::vector<std::size_t> sizes(ratio.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < ratio.size(); ++i) {
        sizes[i] = static_cast<std::size_t>(
            (static_cast<long long>(height) * ratio[i]) / total);
        assigned += sizes[i];
    }
    std::size_t remainder = height - assigned;  // always < ratio.size()
    for (std::size_t i = 0; i < remainder; ++i) {
        sizes[i] += 1;
    }

    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] == 0) {
            throw std::invalid_argument("split_rows: height " + std::to_string(height) +
                                        " leaves part " + std::to_string(i) + " empty");
        }
    }

    PartRanges out;
    out.parts.resize(sizes.size());
    std::size_t row = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        out.parts[i] = {row, row + sizes[i]};
        row += sizes[i];
    }
    return out;
}

std::vector<double> global_avg_pool(const FrameFeatureMap& map) {
    map.validate();
    std::vector<double> out(map.channels, 0.0);
    for (std::size_t r = 0; r < map.rows; ++r) {
        for (std::size_t c = 0; c < map.cols; ++c) {
            for (std::size_t ch = 0; ch < map.channels; ++ch) {
                out[ch] += static_cast<double>(map.at(r, c, ch));
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(map.rows * map.cols);
    for (double& v : out) {
        v *= inv;
    }
    return out;
}

std::vector<std::vector<double>> part_avg_pool(const FrameFeatureMap& map,
                                               const PartRanges& ranges) {
    map.validate();
    if (ranges.height() != map.rows) {
        throw std::invalid_argument("part_avg_pool: ranges cover " +
                                    std::to_string(ranges.height()) + " rows, map has " +
                                    std::to_string(map.rows));
    }
    std::vector<std::vector<double>> out;
    out.reserve(ranges.parts.size());
    for (const RowRange& part : ranges.parts) {
        std::vector<double> acc(map.channels, 0.0);
        for (std::size_t r = part.begin; r < part.end; ++r) {
            for (std::size_t c = 0; c < map.cols; ++c) {
                for (std::size_t ch = 0; ch < map.channels; ++ch) {
                    acc[ch] += static_cast<double>(map.at(r, c, ch));
                }
            }
        }
        const double inv = 1.0 / static_cast<double>(part.size() * map.cols);
        for (double& v : acc) {
            v *= inv;
        }
        out.push_back(std::move(acc));
    }
    return out;
}

std::vector<double> project(const std::vector<double>& v, const Matrix& p) {
    if (v.size() != p.rows) {
        throw std::invalid_argument("project: vector dim " + std::to_string(v.size()) +
                                    " vs matrix rows " + std::to_string(p.rows));
    }
    std::vector<double> out(p.cols, 0.0);
    for (std::size_t r = 0; r < p.rows; ++r) {
        const double vr = v[r];
        for (std::size_t c = 0; c < p.cols; ++c) {
            out[c] += vr * p.at(r, c);
        }
    }
    return out;
}

std::vector<double> temporal_avg(const std::vector<std::vector<double>>& vectors) {
    if (vectors.empty()) {
        throw std::invalid_argument("temporal_avg: empty sequence");
    }
    const std::size_t dim = vectors.front().size();
    std::vector<double> out(dim, 0.0);
    for (const auto& v : vectors) {
        if (v.size() != dim) {
            throw std::invalid_argument("temporal_avg: dimension mismatch");
        }
        for (std::size_t i = 0; i < dim; ++i) {
            out[i] += v[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(vectors.size());
    for (double& v : out) {
        v *= inv;
    }
    return out;
}

void BranchProjections::validate() const {
    if (branches.size() != part_ratio.size() + 1) {
        throw std::invalid_argument("BranchProjections: " + std::to_string(branches.size()) +
                                    " branches for " + std::to_string(part_ratio.size()) +
                                    " parts");
    }
    for (const Matrix& m : branches) {
        if (m.rows != channels() || m.cols != d_emb()) {
            throw std::invalid_argument("BranchProjections: inconsistent matrix shapes");
        }
        if (m.rows == 0 || m.cols == 0) {
            throw std::invalid_argument("BranchProjections: empty matrix");
        }
    }
}

std::vector<std::vector<double>> pooled_branch_features(const Tracklet& t,
                                                        const PartRanges& ranges) {
    t.validate();
    const std::size_t n_branches = ranges.parts.size() + 1;
    std::vector<std::vector<std::vector<double>>> streams(n_branches);
    for (const FrameFeatureMap& frame : t.frames) {
        streams[0].push_back(global_avg_pool(frame));
        auto parts = part_avg_pool(frame, ranges);
        for (std::size_t i = 0; i < parts.size(); ++i) {
            streams[i + 1].push_back(std::move(parts[i]));
        }
    }
    std::vector<std::vector<double>> out;
    out.reserve(n_branches);
    for (const auto& s : streams) {
        out.push_back(temporal_avg(s));
    }
    return out;
}

Embedding aggregate_tracklet(const Tracklet& t, const BranchProjections& proj) {
    t.validate();
    proj.validate();
    if (t.frames.front().channels != proj.channels()) {
        throw std::invalid_argument("aggregate_tracklet: tracklet has " +
                                    std::to_string(t.frames.front().channels) +
                                    " channels, projections expect " +
                                    std::to_string(proj.channels()));
    }
    const PartRanges ranges = split_rows(t.frames.front().rows, proj.part_ratio);

    std::vector<std::vector<std::vector<double>>> streams(proj.n_branches());
    for (const FrameFeatureMap& frame : t.frames) {
        streams[0].push_back(project(global_avg_pool(frame), proj.branches[0]));
        auto parts = part_avg_pool(frame, ranges);
        for (std::size_t i = 0; i < parts.size(); ++i) {
            streams[i + 1].push_back(project(parts[i], proj.branches[i + 1]));
        }
    }

    Embedding out;
    out.values.reserve(proj.n_branches() * proj.d_emb());
    for (const auto& s : streams) {
        auto merged = temporal_avg(s);
        out.values.insert(out.values.end(), merged.begin(), merged.end());
    }
    return out;
}

}  // namespace reid
