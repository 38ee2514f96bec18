// cgann command line: build, enhance, search, bench, groundtruth, observe,
// and query generation over one self-contained index file.

#include <CLI11.hpp>
#include <iostream>

#include "cgann/commands.hpp"

namespace {

void
add_common(CLI::App* sub, cgann::RunConfig& cfg) {
    sub->add_option("--dataset", cfg.dataset_path, "base vectors file");
    sub->add_option("--format", cfg.format, "dataset/query file format: fvecs|ivecs|csv");
    sub->add_option("--metric", cfg.metric, "euclidean|inner_product|angular");
    sub->add_option("--seed", cfg.seed, "seed for anything randomized");
}

}  // namespace

int
main(int argc, char** argv) {
    CLI::App app{"graph ANN index with log-driven conjugate enhancement"};
    app.require_subcommand(1);
    cgann::RunConfig cfg;

    auto* build = app.add_subcommand("build", "construct the proximity + conjugate index");
    add_common(build, cfg);
    build->add_option("--index", cfg.index_path, "output index file")->required();
    build->add_option("--r", cfg.build.max_degree, "maximum out-degree");
    build->add_option("--L1", cfg.build.build_beam, "construction beam width");
    build->add_option("--alpha", cfg.build.alpha, "pruning slack (>= 1)");
    build->add_option("--prune-rule", [&cfg](const std::vector<std::string>& v) {
        cfg.build.prune_rule = cgann::prune_rule_from_string(v.front());
        return true;
    }, "rng_alpha|mrng");

    auto* enhance = app.add_subcommand("enhance", "fold search logs into the conjugate graph");
    add_common(enhance, cfg);
    enhance->add_option("--index", cfg.index_path, "index file to rewrite")->required();
    enhance->add_option("--logs", cfg.logs_path, "historical search log (text)");
    enhance->add_option("--L2", cfg.gen.log_beam, "beam width for generated probes");
    enhance->add_option("--omega", cfg.gen.base_weight, "probe position in (0.5, 1)");
    enhance->add_option("--kg", cfg.gen.probes_per_node, "generated probes per base point");

    auto* search = app.add_subcommand("search", "answer queries from an index");
    add_common(search, cfg);
    search->add_option("--index", cfg.index_path)->required();
    search->add_option("--queries", cfg.queries_path)->required();
    search->add_option("--k", cfg.k, "results per query");
    search->add_option("--L", cfg.beams, "beam width (first value used)");
    search->add_option("--algo", cfg.algo, "base|enhanced");
    search->add_option("--groundtruth", cfg.groundtruth_prefix, "ground truth prefix (for --log-out)");
    search->add_option("--log-out", cfg.log_out_path, "write a search log for these queries");

    auto* bench = app.add_subcommand("bench", "QPS/recall sweep over beam widths");
    add_common(bench, cfg);
    bench->add_option("--index", cfg.index_path)->required();
    bench->add_option("--queries", cfg.queries_path)->required();
    bench->add_option("--groundtruth", cfg.groundtruth_prefix)->required();
    bench->add_option("--k", cfg.k);
    bench->add_option("--L", cfg.beams, "beam widths to sweep");
    bench->add_option("--algo", cfg.algo, "base|enhanced");
    bench->add_option("--out", cfg.out_path, "CSV output (stdout if omitted)");

    auto* gt = app.add_subcommand("groundtruth", "exhaustive-scan ground truth");
    add_common(gt, cfg);
    gt->add_option("--queries", cfg.queries_path)->required();
    gt->add_option("--k", cfg.k, "depth to persist")->default_val(100);
    gt->add_option("--out", cfg.out_path, "output prefix (.ivecs/.fvecs)")->required();

    auto* observe = app.add_subcommand("observe", "diagnostic analyses over a built index");
    add_common(observe, cfg);
    observe->add_option("--index", cfg.index_path)->required();
    observe->add_option("--analysis", cfg.analysis, "rank|overlap|convergence|shotrate|all");
    observe->add_option("--L", cfg.beams, "search beam width");
    observe->add_option("--k", cfg.k, "neighborhood depth for overlap");
    observe->add_option("--noise", cfg.noise, "probe noise scale (times mean abs component)");
    observe->add_option("--count-per-base", cfg.count_per_base, "probes per base point");
    observe->add_option("--omega", cfg.omegas, "omega sweep for shotrate");
    observe->add_option("--sample", cfg.sample, "cap on probed base points (0 = all)");
    observe->add_option("--out", cfg.out_path, "CSV path or prefix")->required();

    auto* genq = app.add_subcommand("genqueries", "emit noisy copies of the base points");
    add_common(genq, cfg);
    genq->add_option("--noise", cfg.noise, "noise scale (times mean abs component)");
    genq->add_option("--count-per-base", cfg.count_per_base, "queries per base point");
    genq->add_option("--out", cfg.out_path, "output fvecs")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (build->parsed()) {
            cgann::cmd_build(cfg, std::cout);
        } else if (enhance->parsed()) {
            cgann::cmd_enhance(cfg, std::cout);
        } else if (search->parsed()) {
            cgann::cmd_search(cfg, std::cout);
        } else if (bench->parsed()) {
            cgann::cmd_bench(cfg, std::cout);
        } else if (gt->parsed()) {
            cgann::cmd_groundtruth(cfg, std::cout);
        } else if (observe->parsed()) {
            cgann::cmd_observe(cfg, std::cout);
        } else if (genq->parsed()) {
            cgann::cmd_gen_queries(cfg, std::cout);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
