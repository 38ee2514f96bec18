#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <unordered_set>
#include <vector>

#include "dataset.hpp"
#include "io.hpp"

namespace cgann {

/// Exhaustive-scan ground truth: per query, the k nearest ids with their
/// distances, ascending, ties toward the smaller id.
struct GroundTruth {
    std::size_t k{0};
    std::vector<std::vector<Neighbor>> rows;
};

/// Brute-force k nearest neighbors of `q`, sorted ascending by (distance, id).
inline std::vector<Neighbor>
exact_knn(const Dataset& ds, std::span<const float> q, std::size_t k) {
    const std::size_t n = ds.size();
    if (k == 0 || k > n) {
        throw std::invalid_argument("exact_knn: k must be in [1, n]");
    }
    std::vector<Neighbor> all(n);
    for (std::size_t i = 0; i < n; ++i) {
        all[i] = {static_cast<VectorId>(i), distance(ds, static_cast<VectorId>(i), q)};
    }
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
    all.resize(k);
    return all;
}

inline VectorId
global_optimum(const Dataset& ds, std::span<const float> q) {
    return exact_knn(ds, q, 1).front().id;
}

/// |approx ∩ exact| / k. `exact` must hold exactly k distinct ids.
inline double
recall_at_k(std::span<const VectorId> approx, std::span<const VectorId> exact, std::size_t k) {
    if (k == 0 || exact.size() != k) {
        throw std::invalid_argument("recall_at_k: exact set must have size k");
    }
    if (approx.size() > k) {
        throw std::invalid_argument("recall_at_k: approx set larger than k");
    }
    std::unordered_set<VectorId> truth(exact.begin(), exact.end());
    if (truth.size() != k) {
        throw std::invalid_argument("recall_at_k: duplicate ids in exact set");
    }
    std::size_t hits = 0;
    for (VectorId id : approx) {
        hits += truth.count(id);
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

inline GroundTruth
build_ground_truth(const Dataset& ds, const std::vector<std::vector<float>>& queries,
                   std::size_t k) {
    GroundTruth gt;
    gt.k = k;
    gt.rows.resize(queries.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(queries.size()); ++i) {
        gt.rows[static_cast<std::size_t>(i)] = exact_knn(ds, queries[static_cast<std::size_t>(i)], k);
    }
    return gt;
}

/// Persisted as two aligned files: `<prefix>.ivecs` with ids and
/// `<prefix>.fvecs` with distances, one record per query.
inline void
save_ground_truth(const GroundTruth& gt, const std::string& prefix) {
    std::vector<std::vector<std::int32_t>> ids(gt.rows.size());
    std::vector<std::vector<float>> dists(gt.rows.size());
    for (std::size_t i = 0; i < gt.rows.size(); ++i) {
        ids[i].reserve(gt.rows[i].size());
        dists[i].reserve(gt.rows[i].size());
        for (const auto& nb : gt.rows[i]) {
            ids[i].push_back(static_cast<std::int32_t>(nb.id));
            dists[i].push_back(static_cast<float>(nb.dist));
        }
    }
    write_ivecs(prefix + ".ivecs", ids);
    write_fvecs(prefix + ".fvecs", dists);
}

inline GroundTruth
load_ground_truth(const std::string& prefix) {
    auto ids = read_ivecs(prefix + ".ivecs");
    auto dists = read_fvecs(prefix + ".fvecs");
    if (ids.size() != dists.size()) {
        throw DataError("ground truth files disagree on query count: " + prefix);
    }
    GroundTruth gt;
    gt.rows.resize(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i].size() != dists[i].size()) {
            throw DataError("ground truth record " + std::to_string(i) + " misaligned: " + prefix);
        }
        gt.rows[i].reserve(ids[i].size());
        for (std::size_t j = 0; j < ids[i].size(); ++j) {
            gt.rows[i].push_back({static_cast<VectorId>(ids[i][j]), static_cast<double>(dists[i][j])});
        }
    }
    gt.k = gt.rows.empty() ? 0 : gt.rows.front().size();
    return gt;
}

/// First k ids of a ground-truth row as a plain id list.
inline std::vector<VectorId>
truth_ids(const GroundTruth& gt, std::size_t row, std::size_t k) {
    if (row >= gt.rows.size() || k > gt.rows[row].size()) {
        throw std::invalid_argument("truth_ids: ground truth too shallow for requested k");
    }
    std::vector<VectorId> out(k);
    for (std::size_t j = 0; j < k; ++j) {
        out[j] = gt.rows[row][j].id;
    }
    return out;
}

}  // namespace cgann
