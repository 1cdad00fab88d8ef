#pragma once

#include <cstdint>

#include "reid/core.hpp"

namespace reid {

// Ground-truth world generator. Identity centers are isotropic Gaussians in
// channel space; each camera adds a shared offset vector; each frame adds a
// per-frame jitter and per-cell noise. Frames broadcast the channel vector
// across H x W unless `striped`, which adds per-identity per-part deltas so
// part pooling carries signal.
struct WorldConfig {
    std::int64_t n_identities = 50;  // K, >= 2
    int n_cameras = 2;
    int tracklets_per_identity_per_camera = 2;
    int frames = 4;  // T
    std::size_t height = 12;
    std::size_t width = 4;
    std::size_t channels = 16;
    double identity_spread = 1.0;      // sigma_id
    double camera_offset_scale = 0.1;  // sigma_cam
    double frame_noise = 0.05;         // sigma_f
    double cell_noise = 0.0;           // sigma_c
    std::int64_t distractor_count = 0;
    bool striped = false;
    // When > 0 and K >= 2, identity 1's center is moved to identity 0's
    // center plus this distance along the first channel axis: a confusable
    // pair for the absolute-distance failure demonstration.
    double confusable_delta = 0.0;
    std::uint64_t seed = 1;

    void validate() const;
};

Dataset generate(const WorldConfig& cfg);

// One labeled tracklet per real identity, picked in camera 1 when the
// identity appears there, else in the next camera in ascending order.
// Distractors are always unlabeled.
LabelBook split_one_example(const Dataset& data, std::uint64_t seed);

// ceil(ratio * N) tracklets labeled uniformly at random; resamples until
// the labeled set spans >= 2 identities (up to 100 attempts).
LabelBook split_ratio(const Dataset& data, double ratio, std::uint64_t seed);

}  // namespace reid
