#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "dataset.hpp"
#include "oracle.hpp"

namespace cgann {

enum class PruneRule : std::uint8_t {
    rng_alpha = 0,  // occlude c when alpha * dis(s, c) < dis(q, c) for a kept s
    mrng = 1,       // same with alpha fixed at 1, the 60-degree angle rule
};

inline const char*
to_string(PruneRule r) {
    return r == PruneRule::rng_alpha ? "rng_alpha" : "mrng";
}

inline PruneRule
prune_rule_from_string(const std::string& name) {
    if (name == "rng_alpha") {
        return PruneRule::rng_alpha;
    }
    if (name == "mrng") {
        return PruneRule::mrng;
    }
    throw std::invalid_argument("unknown prune rule: " + name);
}

struct BuildParams {
    std::uint32_t max_degree{12};     // r
    std::uint32_t build_beam{100};    // L1, construction beam width
    float alpha{1.2f};                // pruning slack, >= 1
    PruneRule prune_rule{PruneRule::rng_alpha};

    void
    validate() const {
        if (max_degree < 1) {
            throw std::invalid_argument("build: max_degree must be >= 1");
        }
        if (build_beam < max_degree) {
            throw std::invalid_argument("build: beam width must be >= max_degree");
        }
        if (alpha < 1.0f) {
            throw std::invalid_argument("build: alpha must be >= 1");
        }
    }
};

/// Result of one search: the k best candidates (ascending by distance, ties
/// by id), every node whose distance was computed, and the number of
/// distance evaluations spent.
struct SearchOutcome {
    std::vector<Neighbor> results;
    std::vector<Neighbor> visited;  // sorted ascending by (distance, id)
    VectorId local_optimum{0};
    std::size_t dist_comps{0};
};

/// Bounded-degree adjacency over dataset ids with one fixed entry point.
/// Frozen after build; concurrent readers need no coordination.
struct ProximityGraph {
    std::uint32_t max_degree{0};
    VectorId entry_point{0};
    std::vector<std::vector<VectorId>> adjacency;

    std::size_t
    size() const {
        return adjacency.size();
    }
};

namespace detail {

// Fixed-capacity candidate pool, ascending by (distance, id). Insertion
// keeps the `capacity` best candidates seen so far; overflow drops the
// worst, so the pool contents are order-independent.
class CandidatePool {
 public:
    explicit CandidatePool(std::size_t capacity) : capacity_(capacity) {
        items_.reserve(capacity + 1);
    }

    void
    insert(Neighbor nb) {
        if (items_.size() == capacity_ && !(nb < items_.back().nb)) {
            return;
        }
        Entry e{nb, false};
        auto it = std::lower_bound(items_.begin(), items_.end(), e,
                                   [](const Entry& a, const Entry& b) { return a.nb < b.nb; });
        std::size_t idx = static_cast<std::size_t>(it - items_.begin());
        items_.insert(it, e);
        if (items_.size() > capacity_) {
            items_.pop_back();
        }
        if (idx < next_) {
            next_ = idx;
        }
    }

    // Index of the closest unexpanded candidate, or npos when converged.
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t
    pop_unexpanded() {
        for (std::size_t i = next_; i < items_.size(); ++i) {
            if (!items_[i].expanded) {
                items_[i].expanded = true;
                next_ = i + 1;
                return i;
            }
        }
        return npos;
    }

    VectorId
    id_at(std::size_t i) const {
        return items_[i].nb.id;
    }

    std::vector<Neighbor>
    best(std::size_t k) const {
        std::vector<Neighbor> out;
        out.reserve(std::min(k, items_.size()));
        for (std::size_t i = 0; i < items_.size() && i < k; ++i) {
            out.push_back(items_[i].nb);
        }
        return out;
    }

 private:
    struct Entry {
        Neighbor nb;
        bool expanded;
    };
    std::size_t capacity_;
    std::size_t next_{0};  // no unexpanded candidate below this index
    std::vector<Entry> items_;
};

}  // namespace detail

/// Best-first beam search over the graph. Maintains a pool of the
/// `beam_width` closest candidates found so far, repeatedly expands the
/// closest unexpanded one, and stops when every pool member has been
/// expanded. Returns the k nearest pool members; `visited` holds every node
/// that was scored against the query, which is a superset of the results.
/// Deterministic for fixed inputs under the (distance, id) tie rule.
inline SearchOutcome
greedy_search(const ProximityGraph& graph, const Dataset& ds, std::span<const VectorId> initial,
              std::span<const float> query, std::uint32_t beam_width, std::uint32_t k) {
    if (k < 1 || k > beam_width) {
        throw std::invalid_argument("greedy_search: need 1 <= k <= beam_width");
    }
    if (initial.empty()) {
        throw std::invalid_argument("greedy_search: empty initial node set");
    }
    const std::size_t n = graph.size();
    SearchOutcome out;
    std::vector<std::uint8_t> scored(n, 0);
    detail::CandidatePool pool(beam_width);

    for (VectorId id : initial) {
        if (id >= n) {
            throw std::invalid_argument("greedy_search: initial id out of range");
        }
        if (scored[id]) {
            continue;
        }
        scored[id] = 1;
        Neighbor nb{id, distance(ds, id, query)};
        out.visited.push_back(nb);
        pool.insert(nb);
    }

    for (;;) {
        std::size_t cur = pool.pop_unexpanded();
        if (cur == detail::CandidatePool::npos) {
            break;
        }
        const VectorId expanding = pool.id_at(cur);  // insertions below shift pool indices
        for (VectorId v : graph.adjacency[expanding]) {
            if (scored[v]) {
                continue;
            }
            scored[v] = 1;
            Neighbor nb{v, distance(ds, v, query)};
            out.visited.push_back(nb);
            pool.insert(nb);
        }
    }

    out.results = pool.best(k);
    out.local_optimum = out.results.front().id;
    out.dist_comps = out.visited.size();
    std::sort(out.visited.begin(), out.visited.end());
    return out;
}

/// Edge selection for one node. Scans candidates nearest-first and keeps a
/// candidate unless an already-kept neighbor occludes it (alpha times the
/// kept-to-candidate distance undercuts the node-to-candidate distance),
/// stopping at `max_degree` kept edges. The multiplicative slack only makes
/// sense for nonnegative distances; negated inner-product scores fall back
/// to the plain comparison. Candidates must be sorted ascending; self and
/// duplicate entries are skipped.
inline std::vector<VectorId>
prune_neighbors(const Dataset& ds, VectorId node, std::span<const Neighbor> candidates,
                std::uint32_t max_degree, float alpha, PruneRule rule) {
    if (max_degree < 1) {
        throw std::invalid_argument("prune_neighbors: max_degree must be >= 1");
    }
    const double slack = rule == PruneRule::mrng ? 1.0 : static_cast<double>(alpha);
    std::vector<VectorId> kept;
    kept.reserve(max_degree);
    for (const Neighbor& cand : candidates) {
        if (cand.id == node) {
            continue;
        }
        bool occluded = false;
        for (VectorId s : kept) {
            if (s == cand.id) {
                occluded = true;
                break;
            }
            double via = distance(ds, s, cand.id);
            if ((via >= 0.0 ? slack * via : via) < cand.dist) {
                occluded = true;
                break;
            }
        }
        if (!occluded) {
            kept.push_back(cand.id);
            if (kept.size() == max_degree) {
                break;
            }
        }
    }
    return kept;
}

using ConstructionLog = std::vector<std::vector<Neighbor>>;

// Depth cap for the per-node construction log.
inline constexpr std::size_t kConstructionLogDepth = 50;

struct BuildResult {
    ProximityGraph graph;
    ConstructionLog log;
};

namespace detail {

inline void
reprune_node(const Dataset& ds, ProximityGraph& graph, VectorId node, const BuildParams& params) {
    auto& adj = graph.adjacency[node];
    std::vector<Neighbor> cands;
    cands.reserve(adj.size());
    for (VectorId v : adj) {
        cands.push_back({v, distance(ds, node, v)});
    }
    std::sort(cands.begin(), cands.end());
    adj = prune_neighbors(ds, node, cands, params.max_degree, params.alpha, params.prune_rule);
}

}  // namespace detail

/// Incremental construction: points are inserted in id order. Each new
/// point is located with a beam search over the partial graph, its visited
/// set is pruned down to at most `max_degree` neighbors, and edges are added
/// in both directions with overfull neighbors re-pruned under the same rule.
/// The pre-prune search results are recorded per node as the construction
/// log (capped at kConstructionLogDepth entries, nearest first).
///
/// The search entry point is the dataset medoid, fixed for the lifetime of
/// the graph; insertions before the medoid itself is present start from
/// node 0 instead. Build is strictly sequential — each insertion depends on
/// the graph built so far.
inline BuildResult
build_graph(const Dataset& ds, const BuildParams& params, std::uint64_t /*seed*/ = 0) {
    params.validate();
    const std::size_t n = ds.size();
    if (n == 0) {
        throw std::invalid_argument("build_graph: empty dataset");
    }
    if (n - 1 > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max())) {
        throw std::invalid_argument("build_graph: dataset too large for 32-bit ids");
    }

    BuildResult out;
    out.graph.max_degree = params.max_degree;
    out.graph.entry_point = medoid(ds);
    out.graph.adjacency.resize(n);
    out.log.resize(n);

    for (std::size_t i = 1; i < n; ++i) {
        const VectorId node = static_cast<VectorId>(i);
        const VectorId start = out.graph.entry_point < node ? out.graph.entry_point : VectorId{0};
        const std::uint32_t beam = params.build_beam;
        SearchOutcome found =
            greedy_search(out.graph, ds, std::span<const VectorId>(&start, 1), ds[node], beam, beam);

        auto kept = prune_neighbors(ds, node, found.visited, params.max_degree, params.alpha,
                                    params.prune_rule);
        out.graph.adjacency[node] = kept;
        for (VectorId nb : kept) {
            auto& back = out.graph.adjacency[nb];
            if (std::find(back.begin(), back.end(), node) == back.end()) {
                back.push_back(node);
                if (back.size() > params.max_degree) {
                    detail::reprune_node(ds, out.graph, nb, params);
                }
            }
        }

        auto& entry = out.log[i];
        entry = found.results;
        if (entry.size() > kConstructionLogDepth) {
            entry.resize(kConstructionLogDepth);
        }
    }
    return out;
}

}  // namespace cgann
