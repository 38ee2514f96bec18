#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <span>
#include <unordered_map>
#include <vector>

#include "conjugate_graph.hpp"
#include "dataset.hpp"
#include "oracle.hpp"
#include "proximity_graph.hpp"

namespace cgann {

/// Where failed searches end up relative to the true optimum's
/// neighborhood: counts[r] = failing queries whose local optimum is the
/// r-th nearest neighbor of the query's global optimum (rank 1 = nearest,
/// the optimum itself excluded). Local optima beyond max_rank land in
/// `overflow`.
struct RankHistogram {
    std::size_t max_rank{0};
    std::map<std::uint32_t, std::size_t> counts;
    std::size_t overflow{0};
    std::size_t failing{0};
    std::size_t queries{0};

    std::size_t
    total() const {
        std::size_t t = overflow;
        for (const auto& [rank, c] : counts) {
            t += c;
        }
        return t;
    }
};

inline RankHistogram
local_optimum_rank(const Dataset& ds, const ProximityGraph& graph,
                   const std::vector<std::vector<float>>& queries, std::uint32_t beam_width,
                   std::size_t max_rank = 100) {
    RankHistogram hist;
    hist.max_rank = max_rank;
    hist.queries = queries.size();
    const VectorId entry = graph.entry_point;
    // Neighbor lists of the global optima are cached; queries sharing an
    // optimum are common by design.
    std::unordered_map<VectorId, std::vector<VectorId>> nn_cache;
    for (const auto& q : queries) {
        SearchOutcome out =
            greedy_search(graph, ds, std::span<const VectorId>(&entry, 1), q, beam_width, 1);
        VectorId truth = global_optimum(ds, q);
        if (out.local_optimum == truth) {
            continue;
        }
        ++hist.failing;
        auto it = nn_cache.find(truth);
        if (it == nn_cache.end()) {
            std::size_t depth = std::min(ds.size(), max_rank + 1);
            auto nbrs = exact_knn(ds, ds[truth], depth);
            std::vector<VectorId> ids;
            ids.reserve(depth);
            for (const Neighbor& nb : nbrs) {
                if (nb.id != truth) {
                    ids.push_back(nb.id);
                }
            }
            it = nn_cache.emplace(truth, std::move(ids)).first;
        }
        const auto& ids = it->second;
        std::size_t pos = 0;
        while (pos < ids.size() && ids[pos] != out.local_optimum) {
            ++pos;
        }
        if (pos < ids.size() && pos < max_rank) {
            ++hist.counts[static_cast<std::uint32_t>(pos + 1)];
        } else {
            ++hist.overflow;
        }
    }
    return hist;
}

struct OverlapStats {
    double mean{0.0};
    std::vector<double> per_query;
};

/// Overlap between each query's k nearest neighbors and the k nearest
/// neighbors of its global optimum.
inline OverlapStats
knn_overlap_rate(const Dataset& ds, const std::vector<std::vector<float>>& queries,
                 std::size_t k = 20) {
    OverlapStats stats;
    stats.per_query.reserve(queries.size());
    std::unordered_map<VectorId, std::vector<VectorId>> base_cache;
    double sum = 0.0;
    for (const auto& q : queries) {
        auto qnn = exact_knn(ds, q, k);
        VectorId truth = qnn.front().id;
        auto it = base_cache.find(truth);
        if (it == base_cache.end()) {
            auto bnn = exact_knn(ds, ds[truth], k);
            std::vector<VectorId> ids(k);
            for (std::size_t j = 0; j < k; ++j) {
                ids[j] = bnn[j].id;
            }
            it = base_cache.emplace(truth, std::move(ids)).first;
        }
        std::vector<VectorId> qids(k);
        for (std::size_t j = 0; j < k; ++j) {
            qids[j] = qnn[j].id;
        }
        double overlap = recall_at_k(qids, it->second, k);
        stats.per_query.push_back(overlap);
        sum += overlap;
    }
    stats.mean = queries.empty() ? 0.0 : sum / static_cast<double>(queries.size());
    return stats;
}

/// How failed probes of one region distribute over local optima. The three
/// shares follow the worked bar-chart arithmetic: probes landing on the
/// modal shared optimum, on other shared optima, and on one-off optima,
/// each divided by the number of probes on shared optima (an optimum is
/// shared when hit at least twice; when nothing is shared the divisor
/// falls back to the failing-probe count, making lone failures count as
/// singletons).
struct ConvergenceStats {
    double max_share{0.0};
    double other_shared_share{0.0};
    double singleton_share{0.0};
    std::size_t failing_probes{0};
    std::size_t shared_probes{0};
    std::size_t groups{0};
};

/// Share computation for one group's failing-probe local optima.
inline ConvergenceStats
convergence_shares(std::span<const VectorId> failing_optima) {
    ConvergenceStats stats;
    stats.failing_probes = failing_optima.size();
    if (failing_optima.empty()) {
        return stats;
    }
    std::map<VectorId, std::size_t> counts;
    for (VectorId id : failing_optima) {
        ++counts[id];
    }
    std::size_t modal = 0;
    std::size_t shared = 0;
    std::size_t singletons = 0;
    for (const auto& [id, c] : counts) {
        if (c >= 2) {
            shared += c;
            modal = std::max(modal, c);
        } else {
            singletons += c;
        }
    }
    stats.shared_probes = shared;
    const double denom = static_cast<double>(shared > 0 ? shared : stats.failing_probes);
    stats.max_share = static_cast<double>(modal) / denom;
    stats.other_shared_share = static_cast<double>(shared - modal) / denom;
    stats.singleton_share = static_cast<double>(singletons) / denom;
    return stats;
}

struct ProbeGroup {
    VectorId base{0};
    std::vector<std::vector<float>> probes;
};

/// Convergence statistics over per-base-point probe groups. A probe fails
/// when its search does not reach the generating base point; groups with no
/// failures are excluded. Numerators and divisors aggregate across groups.
inline ConvergenceStats
same_local_optimum_rate(const Dataset& ds, const ProximityGraph& graph,
                        std::span<const ProbeGroup> groups, std::uint32_t beam_width) {
    const VectorId entry = graph.entry_point;
    double max_num = 0.0;
    double other_num = 0.0;
    double single_num = 0.0;
    double denom = 0.0;
    ConvergenceStats agg;
    for (const ProbeGroup& group : groups) {
        if (group.probes.size() < 2) {
            throw std::invalid_argument("same_local_optimum_rate: every group needs >= 2 probes");
        }
        std::vector<VectorId> failing;
        for (const auto& probe : group.probes) {
            SearchOutcome out = greedy_search(graph, ds, std::span<const VectorId>(&entry, 1),
                                              probe, beam_width, 1);
            if (out.local_optimum != group.base) {
                failing.push_back(out.local_optimum);
            }
        }
        if (failing.empty()) {
            continue;
        }
        ConvergenceStats s = convergence_shares(failing);
        const double d = static_cast<double>(s.shared_probes > 0 ? s.shared_probes
                                                                 : s.failing_probes);
        max_num += s.max_share * d;
        other_num += s.other_shared_share * d;
        single_num += s.singleton_share * d;
        denom += d;
        agg.failing_probes += s.failing_probes;
        agg.shared_probes += s.shared_probes;
        ++agg.groups;
    }
    if (denom > 0.0) {
        agg.max_share = max_num / denom;
        agg.other_shared_share = other_num / denom;
        agg.singleton_share = single_num / denom;
    }
    return agg;
}

/// Per-omega classification of probe searches: reached the base point the
/// probe was generated for, the base point's true nearest neighbor, or
/// anything else. The three rates sum to one.
struct ShotRatePoint {
    double omega{0.0};
    double global_hit{0.0};
    double nn_hit{0.0};
    double other{0.0};
};

inline std::vector<ShotRatePoint>
shot_rate(const Dataset& ds, const ProximityGraph& graph, std::span<const double> omegas,
          std::uint32_t beam_width, std::size_t max_points = 0) {
    const std::size_t n = ds.size();
    if (n < 2) {
        throw std::invalid_argument("shot_rate: need at least two points");
    }
    const std::size_t limit = max_points == 0 ? n : std::min(n, max_points);
    const VectorId entry = graph.entry_point;

    // True nearest neighbor of each probed base point, self excluded.
    std::vector<VectorId> nn1(limit);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(limit); ++i) {
        auto two = exact_knn(ds, ds[static_cast<std::size_t>(i)], 2);
        nn1[static_cast<std::size_t>(i)] =
            two[0].id == static_cast<VectorId>(i) ? two[1].id : two[0].id;
    }

    std::vector<ShotRatePoint> out;
    out.reserve(omegas.size());
    for (double omega : omegas) {
        if (!(omega > 0.5 && omega < 1.0)) {
            throw std::invalid_argument("shot_rate: omega must lie in (0.5, 1)");
        }
        std::size_t hit_base = 0;
        std::size_t hit_nn = 0;
        std::size_t hit_other = 0;
#pragma omp parallel for schedule(dynamic, 16) reduction(+ : hit_base, hit_nn, hit_other)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(limit); ++i) {
            const auto b = static_cast<VectorId>(i);
            auto probe = generate_query(ds[b], ds[nn1[b]], omega);
            SearchOutcome res = greedy_search(graph, ds, std::span<const VectorId>(&entry, 1),
                                              probe, beam_width, 1);
            if (res.local_optimum == b) {
                ++hit_base;
            } else if (res.local_optimum == nn1[b]) {
                ++hit_nn;
            } else {
                ++hit_other;
            }
        }
        ShotRatePoint p;
        p.omega = omega;
        p.global_hit = static_cast<double>(hit_base) / static_cast<double>(limit);
        p.nn_hit = static_cast<double>(hit_nn) / static_cast<double>(limit);
        p.other = static_cast<double>(hit_other) / static_cast<double>(limit);
        out.push_back(p);
    }
    return out;
}

struct SweepPoint {
    std::uint32_t beam_width{0};
    double qps{0.0};
    double recall1{0.0};
    double recall10{0.0};
};

/// Time-accuracy sweep: for each beam width, answer every query (plain or
/// conjugate-enhanced searches), then report single-stream queries per
/// second and mean recall at 1 and 10. Ground truth must be at least 10
/// deep.
inline std::vector<SweepPoint>
qps_recall_sweep(const Dataset& ds, const ProximityGraph& graph, const ConjugateGraph* conj,
                 const std::vector<std::vector<float>>& queries, const GroundTruth& gt,
                 std::span<const std::uint32_t> beam_widths, std::uint32_t k = 10) {
    if (gt.rows.size() != queries.size()) {
        throw std::invalid_argument("qps_recall_sweep: ground truth/query count mismatch");
    }
    if (!gt.rows.empty() && gt.rows.front().size() < 10) {
        throw std::invalid_argument("qps_recall_sweep: ground truth must be at least 10 deep");
    }
    if (k < 10) {
        k = 10;
    }
    const VectorId entry = graph.entry_point;
    std::vector<SweepPoint> out;
    for (std::uint32_t L : beam_widths) {
        const std::uint32_t eff_k = std::min(k, L);
        double r1 = 0.0;
        double r10 = 0.0;
        auto t0 = std::chrono::steady_clock::now();
        std::vector<SearchOutcome> results(queries.size());
        for (std::size_t i = 0; i < queries.size(); ++i) {
            results[i] = conj != nullptr
                             ? enhanced_search(graph, *conj, ds, std::span<const VectorId>(&entry, 1),
                                               queries[i], L, eff_k)
                             : greedy_search(graph, ds, std::span<const VectorId>(&entry, 1),
                                             queries[i], L, eff_k);
        }
        auto t1 = std::chrono::steady_clock::now();
        for (std::size_t i = 0; i < queries.size(); ++i) {
            std::vector<VectorId> got;
            got.reserve(results[i].results.size());
            for (const Neighbor& nb : results[i].results) {
                got.push_back(nb.id);
            }
            r1 += recall_at_k(std::span(got).subspan(0, std::min<std::size_t>(1, got.size())),
                              truth_ids(gt, i, 1), 1);
            if (gt.rows[i].size() >= 10) {
                r10 += recall_at_k(std::span(got).subspan(0, std::min<std::size_t>(10, got.size())),
                                   truth_ids(gt, i, 10), 10);
            }
        }
        double secs = std::chrono::duration<double>(t1 - t0).count();
        SweepPoint p;
        p.beam_width = L;
        p.qps = secs > 0.0 ? static_cast<double>(queries.size()) / secs : 0.0;
        p.recall1 = queries.empty() ? 0.0 : r1 / static_cast<double>(queries.size());
        p.recall10 = queries.empty() ? 0.0 : r10 / static_cast<double>(queries.size());
        out.push_back(p);
    }
    return out;
}

}  // namespace cgann
