#include "reid/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace reid {

FrameFeatureMap FrameFeatureMap::filled(std::size_t h, std::size_t w, std::size_t c, float v) {
    FrameFeatureMap m;
    m.rows = h;
    m.cols = w;
    m.channels = c;
    m.values.assign(h * w * c, v);
    return m;
}

void FrameFeatureMap::validate() const {
    if (rows == 0 || cols == 0 || channels == 0) {
        throw std::invalid_argument("FrameFeatureMap: dimensions must be positive");
    }
    if (values.size() != rows * cols * channels) {
        throw std::invalid_argument("FrameFeatureMap: value count " +
                                    std::to_string(values.size()) + " does not match " +
                                    std::to_string(rows * cols * channels));
    }
    for (float v : values) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("FrameFeatureMap: non-finite value");
        }
    }
}

void Tracklet::validate() const {
    if (frames.empty()) {
        throw std::invalid_argument("Tracklet " + std::to_string(id) + ": no frames");
    }
    frames.front().validate();
    for (std::size_t i = 1; i < frames.size(); ++i) {
        const auto& f = frames[i];
        if (f.rows != frames[0].rows || f.cols != frames[0].cols ||
            f.channels != frames[0].channels) {
            throw std::invalid_argument("Tracklet " + std::to_string(id) +
                                        ": frame shape mismatch at frame " + std::to_string(i));
        }
        f.validate();
    }
}

void LabelBook::validate() const {
    for (const auto& [id, entry] : pseudo) {
        (void)entry;
        if (labeled.count(id)) {
            throw std::invalid_argument("LabelBook: id " + std::to_string(id) +
                                        " is both labeled and pseudo");
        }
        if (unlabeled.count(id)) {
            throw std::invalid_argument("LabelBook: id " + std::to_string(id) +
                                        " is both pseudo and unlabeled");
        }
    }
    for (const auto& [id, identity] : labeled) {
        (void)identity;
        if (unlabeled.count(id)) {
            throw std::invalid_argument("LabelBook: id " + std::to_string(id) +
                                        " is both labeled and unlabeled");
        }
    }
}

Matrix Matrix::identity_like(std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < std::min(r, c); ++i) {
        m.at(i, i) = 1.0;
    }
    return m;
}

const Tracklet* Dataset::find(TrackletId id) const {
    auto it = std::lower_bound(tracklets.begin(), tracklets.end(), id,
                               [](const Tracklet& t, TrackletId v) { return t.id < v; });
    if (it == tracklets.end() || it->id != id) {
        return nullptr;
    }
    return &*it;
}

double l2_distance(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim()) {
        throw std::invalid_argument("l2_distance: dimension mismatch (" +
                                    std::to_string(a.dim()) + " vs " +
                                    std::to_string(b.dim()) + ")");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

void l2_normalize(Embedding& e) {
    double sum = 0.0;
    for (double v : e.values) {
        sum += v * v;
    }
    if (sum == 0.0) {
        return;
    }
    const double inv = 1.0 / std::sqrt(sum);
    for (double& v : e.values) {
        v *= inv;
    }
}

}  // namespace reid
