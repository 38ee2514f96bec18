#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "dataset.hpp"
#include "proximity_graph.hpp"

namespace cgann {

enum class EdgeSource : std::uint8_t {
    construction = 0,    // pruned k-NN kept from the construction log
    generated_log = 1,   // local→global pair found by a self-generated probe
    historical_log = 2,  // local→global pair ingested from historical traffic
};

struct RoutingEdge {
    VectorId target{0};
    EdgeSource source{EdgeSource::generated_log};

    friend bool
    operator==(const RoutingEdge& a, const RoutingEdge& b) {
        return a.target == b.target && a.source == b.source;
    }
};

/// Per-node auxiliary edges next to the proximity graph: construction edges
/// are near neighbors the pruning rule dropped (never overlapping the
/// proximity adjacency), routing edges are directed local→global hops
/// harvested from search logs. Construction edges and self-generated
/// routing edges are capped per node; historical routing edges are kept
/// unconditionally so that ingested failures stay fixed.
struct ConjugateGraph {
    std::uint32_t construction_cap{0};
    std::uint32_t routing_cap{0};
    std::vector<std::vector<VectorId>> construction_edges;  // nearest first
    std::vector<std::vector<RoutingEdge>> routing_edges;

    std::size_t
    size() const {
        return construction_edges.size();
    }

    std::size_t
    edge_count(EdgeSource source) const {
        std::size_t total = 0;
        if (source == EdgeSource::construction) {
            for (const auto& e : construction_edges) {
                total += e.size();
            }
            return total;
        }
        for (const auto& node : routing_edges) {
            for (const auto& e : node) {
                total += e.source == source ? 1 : 0;
            }
        }
        return total;
    }

    /// Union of both edge partitions of one node, construction first.
    std::vector<VectorId>
    neighbors(VectorId node) const {
        std::vector<VectorId> out(construction_edges[node]);
        for (const RoutingEdge& e : routing_edges[node]) {
            if (std::find(out.begin(), out.end(), e.target) == out.end()) {
                out.push_back(e.target);
            }
        }
        return out;
    }

    bool
    empty() const {
        return edge_count(EdgeSource::construction) == 0 &&
               edge_count(EdgeSource::generated_log) == 0 &&
               edge_count(EdgeSource::historical_log) == 0;
    }
};

/// One historical search record: the query, the beam width it was answered
/// with, where the search converged, and the true nearest neighbor.
struct SearchLogEntry {
    std::vector<float> query;
    std::uint32_t beam_width{0};  // L2 the log was collected at
    VectorId local_opt{0};
    VectorId global_opt{0};
};

struct ProbeGenParams {
    double base_weight{0.51};      // probe position between base point and neighbor, in (0.5, 1)
    std::uint32_t probes_per_node{5};
    std::uint32_t log_beam{100};   // L2 used when probing for flaws

    void
    validate() const {
        if (!(base_weight > 0.5 && base_weight < 1.0)) {
            throw std::invalid_argument("probe generation: base_weight must lie in (0.5, 1)");
        }
        if (log_beam < 1) {
            throw std::invalid_argument("probe generation: beam width must be >= 1");
        }
    }
};

/// Probe query on the segment between a base point and one of its
/// neighbors: base_weight * base + (1 - base_weight) * neighbor. Weights
/// above one half keep the probe inside the base point's cell.
inline std::vector<float>
generate_query(std::span<const float> base, std::span<const float> neighbor, double base_weight) {
    if (base.size() != neighbor.size()) {
        throw std::invalid_argument("generate_query: dimension mismatch");
    }
    std::vector<float> out(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        out[i] = static_cast<float>(base_weight * static_cast<double>(base[i]) +
                                    (1.0 - base_weight) * static_cast<double>(neighbor[i]));
    }
    return out;
}

/// Turns the construction log into the conjugate graph's construction
/// partition: per node, the logged pre-prune neighbors minus the node's
/// final proximity adjacency, nearest first, capped.
inline ConjugateGraph
finalize_construction_log(const ProximityGraph& graph, const ConstructionLog& log) {
    if (log.size() != graph.size()) {
        throw std::invalid_argument("finalize_construction_log: log/graph size mismatch");
    }
    ConjugateGraph conj;
    conj.construction_cap = graph.max_degree;
    conj.routing_cap = graph.max_degree;
    conj.construction_edges.resize(graph.size());
    conj.routing_edges.resize(graph.size());
    for (std::size_t i = 0; i < graph.size(); ++i) {
        const auto& adj = graph.adjacency[i];
        auto& kept = conj.construction_edges[i];
        for (const Neighbor& nb : log[i]) {
            if (nb.id == static_cast<VectorId>(i)) {
                continue;
            }
            if (std::find(adj.begin(), adj.end(), nb.id) != adj.end()) {
                continue;
            }
            if (std::find(kept.begin(), kept.end(), nb.id) != kept.end()) {
                continue;
            }
            kept.push_back(nb.id);
            if (kept.size() == conj.construction_cap) {
                break;
            }
        }
    }
    return conj;
}

struct UpdateStats {
    std::size_t historical_considered{0};
    std::size_t generated_probes{0};
    std::size_t historical_edges_added{0};
    std::size_t generated_edges_added{0};
    std::size_t duplicates_collapsed{0};
};

namespace detail {

// Insert a directed routing edge. Historical edges are never evicted: the
// whole point of ingesting a log entry is that replaying its query must
// succeed afterwards, so only the self-generated partition honors the
// routing cap (keeping, per source node, the cap targets nearest to it).
// Returns true when the edge set changed.
inline bool
insert_routing_edge(ConjugateGraph& conj, const Dataset& ds, VectorId from, VectorId to,
                    EdgeSource source, UpdateStats& stats) {
    if (from == to) {
        return false;
    }
    auto& edges = conj.routing_edges[from];
    for (RoutingEdge& e : edges) {
        if (e.target == to) {
            ++stats.duplicates_collapsed;
            if (source == EdgeSource::historical_log) {
                e.source = EdgeSource::historical_log;  // promote: shields it from eviction
            }
            return false;
        }
    }
    if (source == EdgeSource::historical_log) {
        edges.push_back({to, source});
        return true;
    }
    std::size_t generated = 0;
    for (const RoutingEdge& e : edges) {
        generated += e.source == EdgeSource::historical_log ? 0 : 1;
    }
    if (generated < conj.routing_cap) {
        edges.push_back({to, source});
        return true;
    }
    // Overflow among generated edges: drop the farthest-from-source target,
    // ties toward the larger id.
    Neighbor incoming{to, distance(ds, from, to)};
    std::size_t worst = edges.size();
    Neighbor worst_nb = incoming;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (edges[i].source == EdgeSource::historical_log) {
            continue;
        }
        Neighbor cur{edges[i].target, distance(ds, from, edges[i].target)};
        if (worst_nb < cur) {
            worst_nb = cur;
            worst = i;
        }
    }
    if (worst == edges.size()) {
        return false;  // incoming is the farthest; reject it
    }
    edges[worst] = {to, source};
    return true;
}

}  // namespace detail

/// Log-driven conjugate update. Historical entries contribute their
/// recorded local→global pairs directly. Then every base point is probed:
/// its approximate nearest neighbors (proximity adjacency plus construction
/// edges, truncated to probes_per_node nearest) each yield one generated
/// query, the graph is searched at the log beam width, and whenever the
/// search converges somewhere other than the probe's approximate optimum a
/// routing edge from that local optimum to the optimum is recorded.
/// Duplicate edges collapse; the whole update is deterministic and
/// idempotent for fixed inputs.
inline UpdateStats
update_from_logs(const ProximityGraph& graph, ConjugateGraph& conj, const Dataset& ds,
                 const ProbeGenParams& params, std::span<const SearchLogEntry> historical) {
    params.validate();
    if (conj.size() != graph.size()) {
        throw std::invalid_argument("update_from_logs: conjugate/proximity size mismatch");
    }
    UpdateStats stats;

    for (const SearchLogEntry& entry : historical) {
        ++stats.historical_considered;
        if (entry.local_opt >= graph.size() || entry.global_opt >= graph.size()) {
            throw std::invalid_argument("update_from_logs: log entry id out of range");
        }
        if (entry.local_opt == entry.global_opt) {
            continue;
        }
        if (detail::insert_routing_edge(conj, ds, entry.local_opt, entry.global_opt,
                                        EdgeSource::historical_log, stats)) {
            ++stats.historical_edges_added;
        }
    }

    if (params.probes_per_node == 0) {
        return stats;
    }

    const std::size_t n = graph.size();
    const VectorId entry_point = graph.entry_point;
    const std::uint32_t probe_k = std::min<std::uint32_t>(10, params.log_beam);

    // Probe searches are independent across base points; edges are merged
    // afterwards in base-id order so the result does not depend on
    // execution order.
    std::vector<std::vector<std::pair<VectorId, VectorId>>> found(n);
    std::vector<std::uint32_t> probe_count(n, 0);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t bi = 0; bi < static_cast<std::int64_t>(n); ++bi) {
        const VectorId base = static_cast<VectorId>(bi);
        // Approximate k-NNs of the base point: proximity union construction
        // edges, nearest first.
        std::vector<Neighbor> ann;
        for (VectorId v : graph.adjacency[base]) {
            ann.push_back({v, distance(ds, base, v)});
        }
        for (VectorId v : conj.construction_edges[base]) {
            if (std::find_if(ann.begin(), ann.end(),
                             [v](const Neighbor& nb) { return nb.id == v; }) == ann.end()) {
                ann.push_back({v, distance(ds, base, v)});
            }
        }
        std::sort(ann.begin(), ann.end());
        if (ann.size() > params.probes_per_node) {
            ann.resize(params.probes_per_node);
        }
        probe_count[base] = static_cast<std::uint32_t>(ann.size());

        for (const Neighbor& nb : ann) {
            auto probe = generate_query(ds[base], ds[nb.id], params.base_weight);
            SearchOutcome out = greedy_search(graph, ds, std::span<const VectorId>(&entry_point, 1),
                                              probe, params.log_beam, probe_k);
            // Approximate global optimum of the probe among the base point
            // and its approximate neighbors.
            Neighbor best{base, distance(ds.metric, ds[base], probe)};
            for (const Neighbor& cand : ann) {
                Neighbor scored{cand.id, distance(ds.metric, ds[cand.id], probe)};
                if (scored < best) {
                    best = scored;
                }
            }
            if (out.local_optimum != best.id) {
                found[base].emplace_back(out.local_optimum, best.id);
            }
        }
    }

    for (std::size_t b = 0; b < n; ++b) {
        stats.generated_probes += probe_count[b];
        for (const auto& [from, to] : found[b]) {
            if (detail::insert_routing_edge(conj, ds, from, to, EdgeSource::generated_log, stats)) {
                ++stats.generated_edges_added;
            }
        }
    }
    return stats;
}

/// Two-stage search. Stage one is the plain beam search. Stage two hops
/// from its local optimum along that node's conjugate edges to the best
/// reachable candidate. Stage three re-ranks the base results together with
/// that candidate and its conjugate neighbors, which can only improve the
/// returned top k.
inline SearchOutcome
enhanced_search(const ProximityGraph& graph, const ConjugateGraph& conj, const Dataset& ds,
                std::span<const VectorId> initial, std::span<const float> query,
                std::uint32_t beam_width, std::uint32_t k) {
    if (conj.size() != graph.size()) {
        throw std::invalid_argument("enhanced_search: conjugate/proximity size mismatch");
    }
    SearchOutcome out = greedy_search(graph, ds, initial, query, beam_width, k);

    std::unordered_map<VectorId, double> known;
    known.reserve(out.visited.size() * 2);
    for (const Neighbor& nb : out.visited) {
        known.emplace(nb.id, nb.dist);
    }
    std::size_t extra = 0;
    auto score = [&](VectorId id) {
        auto it = known.find(id);
        if (it != known.end()) {
            return it->second;
        }
        double d = distance(ds, id, query);
        known.emplace(id, d);
        out.visited.push_back({id, d});
        ++extra;
        return d;
    };

    const VectorId local = out.local_optimum;
    Neighbor routed{local, known.at(local)};
    for (VectorId v : conj.neighbors(local)) {
        Neighbor cand{v, score(v)};
        if (cand < routed) {
            routed = cand;
        }
    }

    std::vector<Neighbor> pool = out.results;
    auto add_candidate = [&](Neighbor nb) {
        if (std::find_if(pool.begin(), pool.end(),
                         [&](const Neighbor& p) { return p.id == nb.id; }) == pool.end()) {
            pool.push_back(nb);
        }
    };
    add_candidate(routed);
    for (VectorId v : conj.neighbors(routed.id)) {
        add_candidate({v, score(v)});
    }

    std::sort(pool.begin(), pool.end());
    if (pool.size() > k) {
        pool.resize(k);
    }
    out.results = std::move(pool);
    out.local_optimum = out.results.front().id;
    out.dist_comps += extra;
    std::sort(out.visited.begin(), out.visited.end());
    return out;
}

}  // namespace cgann
