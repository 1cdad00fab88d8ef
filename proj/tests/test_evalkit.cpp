#include <algorithm>
#include <random>

#include "doctest.h"
#include "reid/evalkit.hpp"
#include "test_util.hpp"

using namespace reid;
using testutil::emb;

namespace {

// Second, separately written metric computation used as the oracle.
CmcMapResult oracle_cmc_map(const std::vector<EvalPoint>& probe,
                            const std::vector<EvalPoint>& gallery) {
    CmcMapResult out;
    out.cmc.assign(gallery.size(), 0.0);
    std::vector<std::size_t> first_ranks;
    double ap_total = 0.0;

    for (const EvalPoint& q : probe) {
        struct Entry {
            double d;
            TrackletId id;
            IdentityId identity;
        };
        std::vector<Entry> entries;
        for (const EvalPoint& g : gallery) {
            if (g.identity == q.identity && g.camera == q.camera) {
                continue;
            }
            double acc = 0.0;
            for (std::size_t i = 0; i < q.emb.values.size(); ++i) {
                const double diff = q.emb.values[i] - g.emb.values[i];
                acc += diff * diff;
            }
            entries.push_back({std::sqrt(acc), g.id, g.identity});
        }
        std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
            return a.d != b.d ? a.d < b.d : a.id < b.id;
        });

        std::size_t hits = 0;
        double ap = 0.0;
        std::size_t first = 0;
        for (std::size_t r = 0; r < entries.size(); ++r) {
            if (entries[r].identity == q.identity) {
                ++hits;
                ap += static_cast<double>(hits) / static_cast<double>(r + 1);
                if (first == 0) {
                    first = r + 1;
                }
            }
        }
        first_ranks.push_back(first);
        ap_total += ap / static_cast<double>(hits);
    }

    for (std::size_t r = 0; r < out.cmc.size(); ++r) {
        std::size_t n = 0;
        for (std::size_t fr : first_ranks) {
            if (fr <= r + 1) {
                ++n;
            }
        }
        out.cmc[r] = static_cast<double>(n) / static_cast<double>(probe.size());
    }
    out.map = ap_total / static_cast<double>(probe.size());
    return out;
}

std::pair<std::vector<EvalPoint>, std::vector<EvalPoint>> random_protocol(std::mt19937_64& rng,
                                                                          std::size_t n_probe,
                                                                          std::size_t n_extra) {
    std::uniform_real_distribution<double> coord(-3.0, 3.0);
    const std::size_t dim = 2 + rng() % 4;
    const auto point = [&](TrackletId id, IdentityId identity, int cam) {
        Embedding e;
        for (std::size_t d = 0; d < dim; ++d) e.values.push_back(coord(rng));
        return EvalPoint{id, std::move(e), identity, cam};
    };

    std::vector<EvalPoint> probe, gallery;
    TrackletId next = 0;
    for (std::size_t i = 0; i < n_probe; ++i) {
        const auto identity = static_cast<IdentityId>(i % 5);
        probe.push_back(point(next++, identity, 1));
        gallery.push_back(point(next++, identity, 2));  // guaranteed positive
    }
    for (std::size_t i = 0; i < n_extra; ++i) {
        gallery.push_back(point(next++, static_cast<IdentityId>(rng() % 8), 1 + rng() % 3));
    }
    return {std::move(probe), std::move(gallery)};
}

}  // namespace

TEST_CASE("cmc_map perfect match") {
    std::mt19937_64 rng(3);
    std::vector<EvalPoint> probe, gallery;
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    for (int i = 0; i < 6; ++i) {
        Embedding e{{coord(rng), coord(rng)}};
        probe.push_back({i, e, i, 1});
        gallery.push_back({100 + i, e, i, 2});  // same embedding, second camera
    }
    const auto res = cmc_map(probe, gallery);
    CHECK(res.cmc.front() == doctest::Approx(1.0));
    CHECK(res.map == doctest::Approx(1.0));
}

TEST_CASE("cmc_map hand-computed average precision 5/6") {
    // single probe; four gallery entries at distances 1..4, positives at
    // ranks 1 and 3 -> AP = (1/1 + 2/3) / 2 = 5/6
    const std::vector<EvalPoint> probe{{0, emb({0}), 7, 1}};
    const std::vector<EvalPoint> gallery{
        {1, emb({1}), 7, 2},
        {2, emb({2}), 8, 2},
        {3, emb({3}), 7, 2},
        {4, emb({4}), 9, 2},
    };
    const auto res = cmc_map(probe, gallery);
    CHECK(res.map == (1.0 / 1.0 + 2.0 / 3.0) / 2.0);
    CHECK(res.cmc[0] == doctest::Approx(1.0));
}

TEST_CASE("cmc is non-decreasing and ends at 1.0") {
    std::mt19937_64 rng(5);
    const auto [probe, gallery] = random_protocol(rng, 8, 10);
    const auto res = cmc_map(probe, gallery);
    for (std::size_t r = 1; r < res.cmc.size(); ++r) {
        CHECK(res.cmc[r] >= res.cmc[r - 1]);
    }
    CHECK(res.cmc.back() == doctest::Approx(1.0));
    CHECK(res.map >= 0.0);
    CHECK(res.map <= 1.0);
}

TEST_CASE("cmc_map rejects a probe without a positive") {
    const std::vector<EvalPoint> probe{{42, emb({0}), 7, 1}};
    const std::vector<EvalPoint> gallery{
        {1, emb({1}), 7, 1},  // same camera: excluded
        {2, emb({2}), 8, 2},
    };
    CHECK_THROWS_WITH_AS(cmc_map(probe, gallery),
                         "cmc_map: probe 42 (identity 7) has no cross-camera positive in the "
                         "gallery",
                         std::runtime_error);
    CHECK_THROWS_AS(cmc_map({}, gallery), std::invalid_argument);
}

TEST_CASE("cmc_map matches the oracle on random instances") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const auto [probe, gallery] = random_protocol(rng, 2 + rng() % 10, rng() % 20);
        const auto got = cmc_map(probe, gallery);
        const auto want = oracle_cmc_map(probe, gallery);
        REQUIRE(got.cmc.size() == want.cmc.size());
        for (std::size_t r = 0; r < got.cmc.size(); ++r) {
            CHECK(got.cmc[r] == want.cmc[r]);
        }
        CHECK(got.map == doctest::Approx(want.map).epsilon(1e-9));
    }
}

TEST_CASE("label_accuracy") {
    std::map<TrackletId, IdentityId> gt{{1, 10}, {2, 20}, {3, 30}, {4, 40}};
    CHECK(label_accuracy({{1, 10}, {2, 20}}, gt) == 1.0);
    CHECK(label_accuracy({}, gt) == 1.0);
    CHECK(label_accuracy({{1, 10}, {2, 20}, {3, 30}, {4, 99}}, gt) == doctest::Approx(0.75));
    CHECK_THROWS_AS(label_accuracy({{9, 1}}, gt), std::invalid_argument);
}

TEST_CASE("selection_quality") {
    std::map<TrackletId, IdentityId> gt, pseudo;
    for (TrackletId id = 0; id < 20; ++id) {
        gt[id] = id % 4;
        // 16 of 20 pseudo labels correct: ids 16..19 wrong
        pseudo[id] = id < 16 ? id % 4 : (id % 4 + 1) % 4;
    }

    std::set<TrackletId> all_correct;
    for (TrackletId id = 0; id < 16; ++id) {
        all_correct.insert(id);
    }
    auto q = selection_quality(all_correct, pseudo, gt);
    CHECK(q.precision == doctest::Approx(1.0));
    CHECK(q.recall == doctest::Approx(1.0));

    q = selection_quality({}, pseudo, gt);
    CHECK(q.precision == doctest::Approx(1.0));
    CHECK(q.recall == doctest::Approx(0.0));

    // 10 selected, 8 of them correct, 16 correct overall -> (0.8, 0.5)
    std::set<TrackletId> sel{0, 1, 2, 3, 4, 5, 6, 7, 16, 17};
    q = selection_quality(sel, pseudo, gt);
    CHECK(q.precision == doctest::Approx(0.8));
    CHECK(q.recall == doctest::Approx(0.5));

    CHECK_THROWS_AS(selection_quality({99}, pseudo, gt), std::invalid_argument);
}

TEST_CASE("build_reid_protocol keeps distractors out of the probe set") {
    Dataset data;
    data.n_identities = 2;
    data.n_cameras = 2;
    data.distractor_count = 1;
    data.tracklets.push_back(testutil::constant_tracklet(0, 0, 1, 1, 6, 1, 2, 0.0F));
    data.tracklets.push_back(testutil::constant_tracklet(1, 0, 2, 1, 6, 1, 2, 0.1F));
    data.tracklets.push_back(testutil::constant_tracklet(2, 1, 1, 1, 6, 1, 2, 1.0F));
    data.tracklets.push_back(testutil::constant_tracklet(3, 1, 2, 1, 6, 1, 2, 1.1F));
    data.tracklets.push_back(testutil::constant_tracklet(4, 2, 1, 1, 6, 1, 2, 5.0F));  // distractor

    std::map<TrackletId, Embedding> embeddings;
    for (const Tracklet& t : data.tracklets) {
        embeddings[t.id] = emb({static_cast<double>(t.id)});
    }
    const auto [probe, gallery] = build_reid_protocol(data, embeddings);
    CHECK(probe.size() == 4);
    CHECK(gallery.size() == 5);
    for (const EvalPoint& p : probe) {
        CHECK(p.identity != 2);
    }
}
