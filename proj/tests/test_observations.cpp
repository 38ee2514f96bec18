#include <catch2/catch_amalgamated.hpp>

#include <numeric>
#include <random>

#include "cgann/observations.hpp"

using namespace cgann;

namespace {

Dataset
make_dataset(std::vector<std::vector<float>> rows, Metric m = Metric::euclidean) {
    Dataset ds;
    ds.metric = m;
    for (const auto& r : rows) {
        ds.append(r);
    }
    return ds;
}

Dataset
clustered(std::size_t n, std::size_t d, std::size_t n_clusters, float spread,
          std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<float> g(0.0f, 1.0f);
    std::uniform_real_distribution<float> center(-10.0f, 10.0f);
    std::vector<std::vector<float>> centers(n_clusters, std::vector<float>(d));
    for (auto& c : centers) {
        for (auto& x : c) {
            x = center(rng);
        }
    }
    Dataset ds;
    ds.dim = d;
    ds.values.reserve(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = centers[i % n_clusters];
        for (std::size_t j = 0; j < d; ++j) {
            ds.values.push_back(c[j] + spread * g(rng));
        }
    }
    return ds;
}

double
spearman(std::span<const double> xs, std::span<const double> ys) {
    auto ranks = [](std::span<const double> v) {
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            double rank = 1.0;
            for (std::size_t j = 0; j < v.size(); ++j) {
                if (v[j] < v[i]) {
                    rank += 1.0;
                } else if (v[j] == v[i] && j < i) {
                    rank += 0.5;
                } else if (v[j] == v[i] && j > i) {
                    rank += 0.0;
                }
            }
            r[i] = rank;
        }
        return r;
    };
    auto rx = ranks(xs);
    auto ry = ranks(ys);
    double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
    double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
    double num = 0.0, dx = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    if (dx == 0.0 || dy == 0.0) {
        return 0.0;
    }
    return num / std::sqrt(dx * dy);
}

// The 17-point trap from the graph suite.
struct TrapInstance {
    Dataset ds;
    ProximityGraph graph;
    std::vector<float> query{0.0f};
};

TrapInstance
trap_instance() {
    TrapInstance t;
    t.ds = make_dataset({{11.0f}, {8.0f}, {6.0f}, {3.0f}, {4.0f}, {2.0f}, {9.0f}, {10.0f},
                         {7.0f}, {1.2f}, {1.3f}, {1.4f}, {1.5f}, {12.0f}, {8.5f}, {1.0f},
                         {0.5f}});
    t.graph.max_degree = 4;
    t.graph.entry_point = 0;
    t.graph.adjacency = {{1, 6, 7}, {0, 2, 8}, {1, 3}, {2, 4}, {3, 5}, {4, 15}, {0, 14},
                         {0, 13},   {1},       {14, 16, 10}, {9, 16, 11}, {10, 12}, {11},
                         {7},       {6, 9},    {5},          {9, 10}};
    return t;
}

}  // namespace

TEST_CASE("convergence shares reproduce the worked bar-chart arithmetic") {
    std::vector<VectorId> optima{1, 1, 1, 1, 1, 1, 1, 2, 2, 3};
    auto s = convergence_shares(optima);
    CHECK(s.max_share == Catch::Approx(7.0 / 9.0));
    CHECK(s.other_shared_share == Catch::Approx(2.0 / 9.0));
    CHECK(s.singleton_share == Catch::Approx(1.0 / 9.0));
    CHECK(s.failing_probes == 10);
    CHECK(s.shared_probes == 9);
}

TEST_CASE("convergence shares boundary cases") {
    SECTION("everything on one optimum") {
        std::vector<VectorId> optima{5, 5, 5, 5};
        auto s = convergence_shares(optima);
        CHECK(s.max_share == Catch::Approx(1.0));
        CHECK(s.other_shared_share == 0.0);
        CHECK(s.singleton_share == 0.0);
    }
    SECTION("all distinct") {
        std::vector<VectorId> optima{1, 2, 3, 4};
        auto s = convergence_shares(optima);
        CHECK(s.max_share == 0.0);
        CHECK(s.other_shared_share == 0.0);
        CHECK(s.singleton_share == Catch::Approx(1.0));
    }
    SECTION("no singletons: shares sum to one") {
        std::vector<VectorId> optima{1, 1, 1, 2, 2};
        auto s = convergence_shares(optima);
        CHECK(s.max_share + s.other_shared_share + s.singleton_share == Catch::Approx(1.0));
        CHECK(s.max_share == Catch::Approx(3.0 / 5.0));
    }
    SECTION("empty input") {
        std::vector<VectorId> optima;
        auto s = convergence_shares(optima);
        CHECK(s.failing_probes == 0);
        CHECK(s.max_share == 0.0);
    }
}

TEST_CASE("same_local_optimum_rate joins groups and skips clean ones") {
    auto ds = clustered(500, 8, 10, 0.8f, 11);
    auto built = build_graph(ds, {.max_degree = 8, .build_beam = 40});

    auto probes = generate_noisy_queries(ds, 0.4, 3, 12);
    std::vector<ProbeGroup> groups(ds.size());
    for (std::size_t b = 0; b < ds.size(); ++b) {
        groups[b].base = static_cast<VectorId>(b);
        for (int r = 0; r < 3; ++r) {
            groups[b].probes.push_back(probes[b * 3 + r]);
        }
    }
    auto stats = same_local_optimum_rate(ds, built.graph, groups, 10);
    CHECK(stats.groups <= ds.size());
    CHECK(stats.failing_probes >= stats.shared_probes);
    CHECK(stats.max_share >= 0.0);
    CHECK(stats.max_share <= 1.0);
    // shares are nonnegative and the shared part never exceeds one
    CHECK(stats.max_share + stats.other_shared_share <= 1.0 + 1e-9);

    std::vector<ProbeGroup> tiny(1);
    tiny[0].base = 0;
    tiny[0].probes.push_back(probes[0]);
    CHECK_THROWS_AS(same_local_optimum_rate(ds, built.graph, tiny, 10), std::invalid_argument);
}

TEST_CASE("rank histogram pins the trap's local optimum at rank one") {
    auto t = trap_instance();
    std::vector<std::vector<float>> queries{t.query};
    auto hist = local_optimum_rank(t.ds, t.graph, queries, 4);
    CHECK(hist.queries == 1);
    CHECK(hist.failing == 1);
    CHECK(hist.total() == 1);
    REQUIRE(hist.counts.count(1) == 1);
    CHECK(hist.counts.at(1) == 1);

    // a query sitting exactly on a base point converges and is excluded
    std::vector<std::vector<float>> easy{{11.0f}};
    auto clean = local_optimum_rank(t.ds, t.graph, easy, 8);
    CHECK(clean.failing == 0);
    CHECK(clean.total() == 0);
}

TEST_CASE("failing queries concentrate at small ranks on a hard instance") {
    // continuous cloud: failures here are near misses, not wrong regions
    std::mt19937 rng(21);
    std::normal_distribution<float> g(0.0f, 1.0f);
    Dataset ds;
    ds.dim = 12;
    ds.values.resize(900 * 12);
    for (auto& v : ds.values) {
        v = g(rng);
    }
    auto built = build_graph(ds, {.max_degree = 8, .build_beam = 40});
    auto queries = generate_noisy_queries(ds, 0.06, 1, 22);
    auto hist = local_optimum_rank(ds, built.graph, queries, 10);
    REQUIRE(hist.failing > 20);  // instance must actually exhibit flaws
    CHECK(hist.total() == hist.failing);
    std::size_t small_ranks = 0;
    for (const auto& [rank, count] : hist.counts) {
        if (rank <= 7) {
            small_ranks += count;
        }
    }
    CHECK(static_cast<double>(small_ranks) / static_cast<double>(hist.failing) >= 0.5);
}

TEST_CASE("knn overlap rate") {
    auto ds = clustered(400, 8, 8, 1.0f, 31);

    SECTION("query equal to a base point overlaps fully") {
        std::vector<std::vector<float>> queries;
        std::vector<float> q(ds[7].begin(), ds[7].end());
        queries.push_back(q);
        auto stats = knn_overlap_rate(ds, queries, 20);
        CHECK(stats.mean == Catch::Approx(1.0));
    }

    SECTION("k = 1 yields zero-or-one overlaps") {
        auto queries = generate_noisy_queries(ds, 0.3, 1, 32);
        queries.resize(50);
        auto stats = knn_overlap_rate(ds, queries, 1);
        for (double v : stats.per_query) {
            CHECK((v == 0.0 || v == 1.0));
        }
    }

    SECTION("mild noise keeps the mean overlap high") {
        auto queries = generate_noisy_queries(ds, 0.15, 1, 33);
        queries.resize(200);
        auto stats = knn_overlap_rate(ds, queries, 20);
        CHECK(stats.mean > 0.6);
    }
}

TEST_CASE("shot rate classifies probes and sums to one") {
    auto ds = clustered(600, 10, 12, 0.9f, 41);
    auto built = build_graph(ds, {.max_degree = 8, .build_beam = 40});

    std::vector<double> omegas{0.51, 0.6, 0.7, 0.8, 0.9};
    auto points = shot_rate(ds, built.graph, omegas, 10);
    REQUIRE(points.size() == omegas.size());
    for (const auto& p : points) {
        CHECK(p.global_hit + p.nn_hit + p.other == Catch::Approx(1.0).margin(1e-9));
        CHECK(p.global_hit >= 0.0);
    }

    std::vector<double> xs(omegas.begin(), omegas.end());
    std::vector<double> hits;
    for (const auto& p : points) {
        hits.push_back(p.global_hit);
    }
    CHECK(spearman(xs, hits) > 0.0);

    // probes generated almost on top of the base points nearly always land
    std::vector<double> close{0.999};
    auto limit = shot_rate(ds, built.graph, close, 50);
    CHECK(limit[0].global_hit >= 0.9);

    std::vector<double> bad{0.5};
    CHECK_THROWS_AS(shot_rate(ds, built.graph, bad, 10), std::invalid_argument);
}

TEST_CASE("qps sweep reports dominance of the enhanced search") {
    auto ds = clustered(700, 10, 14, 0.9f, 51);
    auto built = build_graph(ds, {.max_degree = 8, .build_beam = 50});
    auto conj = finalize_construction_log(built.graph, built.log);
    ProbeGenParams gen;
    gen.base_weight = 0.51;
    gen.probes_per_node = 5;
    gen.log_beam = 20;
    update_from_logs(built.graph, conj, ds, gen, {});

    auto queries = generate_noisy_queries(ds, 0.4, 1, 52);
    queries.resize(150);
    GroundTruth gt = build_ground_truth(ds, queries, 10);

    std::vector<std::uint32_t> beams{10, 20, 50, 100};
    auto base = qps_recall_sweep(ds, built.graph, nullptr, queries, gt, beams, 10);
    auto enh = qps_recall_sweep(ds, built.graph, &conj, queries, gt, beams, 10);
    REQUIRE(base.size() == beams.size());
    REQUIRE(enh.size() == beams.size());
    for (std::size_t i = 0; i < beams.size(); ++i) {
        CHECK(base[i].beam_width == beams[i]);
        CHECK(base[i].qps > 0.0);
        CHECK(enh[i].recall1 >= base[i].recall1 - 1e-12);
        CHECK(enh[i].recall10 >= base[i].recall10 - 1e-12);
    }

    // the minimal pool L = k sits at the bottom of the sweep
    for (std::size_t i = 1; i < base.size(); ++i) {
        CHECK(base[0].recall1 <= base[i].recall1 + 0.01);
        CHECK(base[0].recall10 <= base[i].recall10 + 0.01);
    }
}
