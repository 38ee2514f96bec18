#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "conjugate_graph.hpp"
#include "dataset.hpp"
#include "io.hpp"
#include "observations.hpp"
#include "oracle.hpp"
#include "persistence.hpp"
#include "proximity_graph.hpp"

namespace cgann {

/// Everything a command needs, filled in by the CLI (or directly by tests).
struct RunConfig {
    std::string dataset_path;
    std::string format{"fvecs"};
    std::string metric{"euclidean"};

    BuildParams build;
    ProbeGenParams gen;

    std::string queries_path;
    std::string groundtruth_prefix;
    std::string logs_path;
    std::string index_path;
    std::string out_path;
    std::string log_out_path;

    std::uint32_t k{10};
    std::vector<std::uint32_t> beams{10, 20, 50, 100};  // --L
    std::uint64_t seed{42};

    double noise{0.5};
    std::uint32_t count_per_base{1};
    std::vector<double> omegas{0.51, 0.6, 0.7, 0.8, 0.9};
    std::size_t sample{0};

    std::string algo{"enhanced"};   // base | enhanced
    std::string analysis{"all"};    // rank | overlap | convergence | shotrate | all
};

namespace detail {

inline Dataset
load_dataset(const RunConfig& cfg) {
    if (cfg.dataset_path.empty()) {
        throw std::invalid_argument("--dataset is required");
    }
    return load_vectors(cfg.dataset_path, format_from_string(cfg.format),
                        metric_from_string(cfg.metric));
}

// Queries are sniffed by extension so a csv dataset can be probed with
// fvecs queries; --format is the fallback for unrecognized names.
inline FileFormat
guess_format(const std::string& path, const std::string& fallback) {
    for (const char* ext : {"fvecs", "ivecs", "csv"}) {
        std::string suffix = std::string(".") + ext;
        if (path.size() > suffix.size() &&
            path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0) {
            return format_from_string(ext);
        }
    }
    return format_from_string(fallback);
}

inline std::vector<std::vector<float>>
load_queries(const RunConfig& cfg) {
    if (cfg.queries_path.empty()) {
        throw std::invalid_argument("--queries is required");
    }
    return load_query_rows(cfg.queries_path, guess_format(cfg.queries_path, cfg.format));
}

inline IndexFile
load_index_checked(const RunConfig& cfg, const Dataset& ds) {
    if (cfg.index_path.empty()) {
        throw std::invalid_argument("--index is required");
    }
    IndexFile index = load_index(cfg.index_path);
    if (index.n != ds.size() || index.dim != ds.dim) {
        throw DataError("index " + cfg.index_path + " was built for n=" + std::to_string(index.n) +
                        ", d=" + std::to_string(index.dim) + "; dataset has n=" +
                        std::to_string(ds.size()) + ", d=" + std::to_string(ds.dim));
    }
    if (index.metric != metric_from_string(cfg.metric)) {
        throw DataError("index metric " + std::string(to_string(index.metric)) +
                        " does not match --metric " + cfg.metric);
    }
    return index;
}

inline bool
use_enhanced(const RunConfig& cfg) {
    if (cfg.algo == "enhanced") {
        return true;
    }
    if (cfg.algo == "base") {
        return false;
    }
    throw std::invalid_argument("--algo must be 'base' or 'enhanced'");
}

inline std::ofstream
open_out(const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) {
        throw DataError("cannot open " + path + " for writing");
    }
    return f;
}

}  // namespace detail

inline void
cmd_build(const RunConfig& cfg, std::ostream& out) {
    if (cfg.index_path.empty()) {
        throw std::invalid_argument("--index output path is required");
    }
    Dataset ds = detail::load_dataset(cfg);
    auto t0 = std::chrono::steady_clock::now();
    BuildResult built = build_graph(ds, cfg.build, cfg.seed);
    ConjugateGraph conj = finalize_construction_log(built.graph, built.log);
    auto t1 = std::chrono::steady_clock::now();

    IndexFile index;
    index.metric = ds.metric;
    index.n = static_cast<std::uint32_t>(ds.size());
    index.dim = static_cast<std::uint32_t>(ds.dim);
    index.build_params = cfg.build;
    index.seed = cfg.seed;
    index.graph = std::move(built.graph);
    index.conj = std::move(conj);
    save_index(index, cfg.index_path);

    IndexSizes sizes = index_sizes(index);
    out << "built index over " << index.n << " points (d=" << index.dim << ", metric="
        << to_string(index.metric) << ")\n";
    out << "build_seconds " << std::chrono::duration<double>(t1 - t0).count() << "\n";
    out << "bytes_header " << sizes.header << "\n";
    out << "bytes_params " << sizes.params << "\n";
    out << "bytes_adjacency " << sizes.adjacency << "\n";
    out << "bytes_construction " << sizes.construction << "\n";
    out << "bytes_routing " << sizes.routing << "\n";
    out << "bytes_total " << sizes.total() << "\n";
}

inline void
cmd_enhance(const RunConfig& cfg, std::ostream& out) {
    Dataset ds = detail::load_dataset(cfg);
    IndexFile index = detail::load_index_checked(cfg, ds);

    std::vector<SearchLogEntry> historical;
    if (!cfg.logs_path.empty()) {
        historical = load_search_log(cfg.logs_path, ds.dim);
    }
    ProbeGenParams gen = cfg.gen;
    auto t0 = std::chrono::steady_clock::now();
    UpdateStats stats = update_from_logs(index.graph, index.conj, ds, gen, historical);
    auto t1 = std::chrono::steady_clock::now();
    index.timestamp = 0;  // refresh on save
    save_index(index, cfg.index_path);

    out << "historical_entries " << stats.historical_considered << "\n";
    out << "generated_probes " << stats.generated_probes << "\n";
    out << "edges_added_historical " << stats.historical_edges_added << "\n";
    out << "edges_added_generated " << stats.generated_edges_added << "\n";
    out << "duplicates_collapsed " << stats.duplicates_collapsed << "\n";
    out << "routing_edges_total "
        << index.conj.edge_count(EdgeSource::generated_log) +
               index.conj.edge_count(EdgeSource::historical_log)
        << "\n";
    out << "enhance_seconds " << std::chrono::duration<double>(t1 - t0).count() << "\n";
}

inline void
cmd_search(const RunConfig& cfg, std::ostream& out) {
    Dataset ds = detail::load_dataset(cfg);
    IndexFile index = detail::load_index_checked(cfg, ds);
    auto queries = detail::load_queries(cfg);
    const bool enhanced = detail::use_enhanced(cfg);
    const std::uint32_t L = cfg.beams.empty() ? 100 : cfg.beams.front();
    const VectorId entry = index.graph.entry_point;

    GroundTruth gt;
    if (!cfg.log_out_path.empty()) {
        if (cfg.groundtruth_prefix.empty()) {
            throw std::invalid_argument("--log-out needs --groundtruth for the global optima");
        }
        gt = load_ground_truth(cfg.groundtruth_prefix);
        if (gt.rows.size() != queries.size()) {
            throw DataError("ground truth has " + std::to_string(gt.rows.size()) +
                            " rows for " + std::to_string(queries.size()) + " queries");
        }
    }

    std::vector<SearchLogEntry> log_entries;
    out << std::fixed << std::setprecision(6);
    for (std::size_t i = 0; i < queries.size(); ++i) {
        SearchOutcome res =
            enhanced ? enhanced_search(index.graph, index.conj, ds,
                                       std::span<const VectorId>(&entry, 1), queries[i], L, cfg.k)
                     : greedy_search(index.graph, ds, std::span<const VectorId>(&entry, 1),
                                     queries[i], L, cfg.k);
        out << i << ":";
        for (const Neighbor& nb : res.results) {
            out << ' ' << nb.id << ':' << nb.dist;
        }
        out << '\n';
        if (!cfg.log_out_path.empty()) {
            SearchLogEntry e;
            e.query = queries[i];
            e.beam_width = L;
            e.local_opt = res.local_optimum;
            e.global_opt = gt.rows[i].front().id;
            log_entries.push_back(std::move(e));
        }
    }
    if (!cfg.log_out_path.empty()) {
        auto f = detail::open_out(cfg.log_out_path);
        write_search_log(f, log_entries);
    }
}

inline void
cmd_groundtruth(const RunConfig& cfg, std::ostream& out) {
    Dataset ds = detail::load_dataset(cfg);
    auto queries = detail::load_queries(cfg);
    if (cfg.out_path.empty()) {
        throw std::invalid_argument("--out prefix is required");
    }
    std::size_t k = std::min<std::size_t>(cfg.k, ds.size());
    GroundTruth gt = build_ground_truth(ds, queries, k);
    save_ground_truth(gt, cfg.out_path);
    out << "wrote ground truth for " << queries.size() << " queries at depth " << k << " to "
        << cfg.out_path << ".{ivecs,fvecs}\n";
}

inline void
cmd_bench(const RunConfig& cfg, std::ostream& out) {
    Dataset ds = detail::load_dataset(cfg);
    IndexFile index = detail::load_index_checked(cfg, ds);
    auto queries = detail::load_queries(cfg);
    if (cfg.groundtruth_prefix.empty()) {
        throw std::invalid_argument("--groundtruth is required for bench");
    }
    GroundTruth gt = load_ground_truth(cfg.groundtruth_prefix);
    if (gt.rows.size() != queries.size()) {
        throw DataError("ground truth has " + std::to_string(gt.rows.size()) + " rows for " +
                        std::to_string(queries.size()) + " queries");
    }
    const bool enhanced = detail::use_enhanced(cfg);
    auto points = qps_recall_sweep(ds, index.graph, enhanced ? &index.conj : nullptr, queries, gt,
                                   cfg.beams, cfg.k);

    std::ostringstream csv;
    csv << "algo,L,qps,recall_at_1,recall_at_10\n";
    csv << std::fixed << std::setprecision(6);
    for (const SweepPoint& p : points) {
        csv << cfg.algo << ',' << p.beam_width << ',' << p.qps << ',' << p.recall1 << ','
            << p.recall10 << '\n';
    }
    if (cfg.out_path.empty()) {
        out << csv.str();
    } else {
        auto f = detail::open_out(cfg.out_path);
        f << csv.str();
        out << "wrote " << points.size() << " sweep rows to " << cfg.out_path << "\n";
    }
}

namespace detail {

inline void
observe_rank(const RunConfig& cfg, const Dataset& ds, const IndexFile& index,
             const std::string& path, std::ostream& out) {
    // Flaw probes: base points plus uniform noise, per the diagnostic's
    // noise knob (mean absolute component times cfg.noise).
    auto queries = generate_noisy_queries(ds, cfg.noise, std::max(1u, cfg.count_per_base), cfg.seed);
    RankHistogram hist = local_optimum_rank(ds, index.graph, queries,
                                            cfg.beams.empty() ? 100 : cfg.beams.front());
    auto f = open_out(path);
    f << "rank,count\n";
    for (const auto& [rank, count] : hist.counts) {
        f << rank << ',' << count << '\n';
    }
    f << "overflow," << hist.overflow << '\n';
    out << "rank: " << hist.failing << " failing of " << hist.queries << " queries -> " << path
        << "\n";
}

inline void
observe_overlap(const RunConfig& cfg, const Dataset& ds, const std::string& path,
                std::ostream& out) {
    auto queries = generate_noisy_queries(ds, cfg.noise, std::max(1u, cfg.count_per_base), cfg.seed);
    std::size_t k = std::min<std::size_t>(cfg.k, ds.size());
    OverlapStats stats = knn_overlap_rate(ds, queries, k);
    auto f = open_out(path);
    f << "query,overlap\n";
    f << std::fixed << std::setprecision(6);
    for (std::size_t i = 0; i < stats.per_query.size(); ++i) {
        f << i << ',' << stats.per_query[i] << '\n';
    }
    out << "overlap: mean " << stats.mean << " at k=" << k << " -> " << path << "\n";
}

inline void
observe_convergence(const RunConfig& cfg, const Dataset& ds, const IndexFile& index,
                    const std::string& path, std::ostream& out) {
    std::uint32_t per_base = std::max(2u, cfg.count_per_base);
    auto probes = generate_noisy_queries(ds, cfg.noise, per_base, cfg.seed);
    std::vector<ProbeGroup> groups(ds.size());
    for (std::size_t b = 0; b < ds.size(); ++b) {
        groups[b].base = static_cast<VectorId>(b);
        for (std::uint32_t r = 0; r < per_base; ++r) {
            groups[b].probes.push_back(std::move(probes[b * per_base + r]));
        }
    }
    ConvergenceStats stats = same_local_optimum_rate(ds, index.graph, groups,
                                                     cfg.beams.empty() ? 100 : cfg.beams.front());
    auto f = open_out(path);
    f << "max_share,other_shared_share,singleton_share,failing_probes,shared_probes,groups\n";
    f << std::fixed << std::setprecision(6) << stats.max_share << ',' << stats.other_shared_share
      << ',' << stats.singleton_share << ',' << stats.failing_probes << ',' << stats.shared_probes
      << ',' << stats.groups << '\n';
    out << "convergence: max_share " << stats.max_share << " over " << stats.groups
        << " groups -> " << path << "\n";
}

inline void
observe_shotrate(const RunConfig& cfg, const Dataset& ds, const IndexFile& index,
                 const std::string& path, std::ostream& out) {
    auto points = shot_rate(ds, index.graph, cfg.omegas, cfg.beams.empty() ? 100 : cfg.beams.front(),
                            cfg.sample);
    auto f = open_out(path);
    f << "omega,global_hit,nn_hit,other\n";
    f << std::fixed << std::setprecision(6);
    for (const ShotRatePoint& p : points) {
        f << p.omega << ',' << p.global_hit << ',' << p.nn_hit << ',' << p.other << '\n';
    }
    out << "shotrate: " << points.size() << " omega points -> " << path << "\n";
}

}  // namespace detail

inline void
cmd_observe(const RunConfig& cfg, std::ostream& out) {
    Dataset ds = detail::load_dataset(cfg);
    IndexFile index = detail::load_index_checked(cfg, ds);
    if (cfg.out_path.empty()) {
        throw std::invalid_argument("--out is required for observe");
    }
    const std::string& a = cfg.analysis;
    if (a == "rank") {
        detail::observe_rank(cfg, ds, index, cfg.out_path, out);
    } else if (a == "overlap") {
        detail::observe_overlap(cfg, ds, cfg.out_path, out);
    } else if (a == "convergence") {
        detail::observe_convergence(cfg, ds, index, cfg.out_path, out);
    } else if (a == "shotrate") {
        detail::observe_shotrate(cfg, ds, index, cfg.out_path, out);
    } else if (a == "all") {
        detail::observe_rank(cfg, ds, index, cfg.out_path + "_rank.csv", out);
        detail::observe_overlap(cfg, ds, cfg.out_path + "_overlap.csv", out);
        detail::observe_convergence(cfg, ds, index, cfg.out_path + "_convergence.csv", out);
        detail::observe_shotrate(cfg, ds, index, cfg.out_path + "_shotrate.csv", out);
    } else {
        throw std::invalid_argument("--analysis must be rank|overlap|convergence|shotrate|all");
    }
}

inline void
cmd_gen_queries(const RunConfig& cfg, std::ostream& out) {
    Dataset ds = detail::load_dataset(cfg);
    if (cfg.out_path.empty()) {
        throw std::invalid_argument("--out is required");
    }
    auto queries = generate_noisy_queries(ds, cfg.noise, std::max(1u, cfg.count_per_base), cfg.seed);
    write_fvecs(cfg.out_path, queries);
    out << "wrote " << queries.size() << " queries to " << cfg.out_path << "\n";
}

}  // namespace cgann
