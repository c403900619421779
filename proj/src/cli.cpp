#include "eclgsr/cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "eclgsr/config.hpp"
#include "eclgsr/graph_io.hpp"
#include "eclgsr/heatmap.hpp"
#include "eclgsr/pipeline.hpp"
#include "eclgsr/sweeps.hpp"

namespace eclgsr {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Options shared by every subcommand that resolves a TrainConfig.
struct ConfigOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> epochs;
    std::string data_dir;

    void add_to(CLI::App* app) {
        app->add_option("--config", config_path, "JSON file of TrainConfig fields")->check(CLI::ExistingFile);
        app->add_option("--set", overrides, "override one field, key=value (repeatable)");
        app->add_option("--seed", seed, "run seed");
        app->add_option("--epochs", epochs, "training epochs");
        app->add_option("--data", data_dir, "dataset directory (default: synthetic SBM)");
    }

    TrainConfig resolve() const {
        TrainConfig cfg = config_path.empty() ? TrainConfig{} : load_config(config_path);
        for (const auto& o : overrides) apply_override(cfg, o);
        if (seed) cfg.seed = *seed;
        if (epochs) cfg.epochs = *epochs;
        if (!data_dir.empty()) cfg.data_dir = data_dir;
        cfg.validate();
        return cfg;
    }
};

void write_text(const fs::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << text;
}

template <typename Fn>
void write_stream(const fs::path& file, Fn&& fn) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    fn(out);
}

json eval_json(const EvalResult& ev) {
    return json{{"train_accuracy", ev.train_accuracy},
                {"val_accuracy", ev.val_accuracy},
                {"test_accuracy", ev.test_accuracy},
                {"refined_edges", ev.refined_edges},
                {"refined_intra_fraction", ev.refined_intra_fraction},
                {"raw_intra_fraction", ev.raw_intra_fraction}};
}

std::vector<std::uint64_t> seed_list(const std::vector<std::uint64_t>& seeds, const TrainConfig& cfg) {
    return seeds.empty() ? std::vector<std::uint64_t>{cfg.seed} : seeds;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Energy-based contrastive graph structure refinement"};
    app.name("eclgsr");
    app.require_subcommand(1);
    std::function<void()> action;

    // embed
    ConfigOptions embed_cfg;
    std::string embed_out;
    auto* embed = app.add_subcommand("embed", "compute DeepWalk structural features and write them as CSV");
    embed_cfg.add_to(embed);
    embed->add_option("--out", embed_out, "output CSV")->required();
    embed->callback([&] {
        action = [&] {
            TrainConfig cfg = embed_cfg.resolve();
            cfg.xs_cache.clear();
            const PreparedData data = prepare_data(cfg);
            write_csv_matrix(data.dual.x_dual.rightCols(data.dual.contextual_dim()), embed_out);
            out << "wrote " << embed_out << "\n";
        };
    });

    // train
    ConfigOptions train_cfg;
    std::string train_out;
    bool control = false;
    auto* train_cmd = app.add_subcommand("train", "train ECL-GSR (or the plain GCN control) and write run artifacts");
    train_cfg.add_to(train_cmd);
    train_cmd->add_option("--out", train_out, "output directory")->required();
    train_cmd->add_flag("--control", control, "train the plain GCN on the unrefined graph instead");
    train_cmd->callback([&] {
        action = [&] {
            const TrainConfig cfg = train_cfg.resolve();
            fs::create_directories(train_out);
            const fs::path dir = train_out;
            write_text(dir / "config.json", to_json_string(cfg));
            const PreparedData data = prepare_data(cfg);
            const TrainResult result = control ? train_control(cfg, data) : train(cfg, data);
            write_stream(dir / "metrics.csv", [&](std::ostream& o) { write_metrics_csv(result.log, o); });
            write_stream(dir / "timing.csv", [&](std::ostream& o) { write_timing_csv(result.log, o); });
            save_checkpoint(result.params, dir / "params.bin");
            const EvalResult ev = control ? evaluate_control(result.params, data) : evaluate(cfg, result.params, data);
            write_predictions(ev.probs, dir / "predictions.tsv");
            write_edges_tsv(ev.edges, dir / "refined_edges.tsv");
            json summary = eval_json(ev);
            summary["selected_epoch"] = result.selected_epoch;
            summary["model"] = control ? "gcn" : "ecl-gsr";
            write_text(dir / "summary.json", summary.dump(2) + "\n");
            out << summary.dump() << "\n";
        };
    });

    // eval
    ConfigOptions eval_cfg;
    std::string checkpoint;
    std::string eval_out;
    bool eval_control = false;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the configured dataset");
    eval_cfg.add_to(eval_cmd);
    eval_cmd->add_option("--checkpoint", checkpoint, "params.bin from train")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--out", eval_out, "directory for predictions and refined edges");
    eval_cmd->add_flag("--control", eval_control, "checkpoint holds a plain GCN");
    eval_cmd->callback([&] {
        action = [&] {
            const TrainConfig cfg = eval_cfg.resolve();
            const PreparedData data = prepare_data(cfg);
            const ParamStore params = load_checkpoint(checkpoint);
            const EvalResult ev = eval_control ? evaluate_control(params, data) : evaluate(cfg, params, data);
            if (!eval_out.empty()) {
                fs::create_directories(eval_out);
                write_predictions(ev.probs, fs::path(eval_out) / "predictions.tsv");
                write_edges_tsv(ev.edges, fs::path(eval_out) / "refined_edges.tsv");
            }
            out << eval_json(ev).dump() << "\n";
        };
    });

    // perturb
    std::string perturb_in, perturb_out;
    double add_ratio = 0.0, remove_ratio = 0.0;
    std::uint64_t perturb_seed = 0;
    auto* perturb = app.add_subcommand("perturb", "randomly add and/or remove edges of a dataset");
    perturb->add_option("--data", perturb_in, "input dataset directory")->required()->check(CLI::ExistingDirectory);
    perturb->add_option("--add", add_ratio, "fraction of M edges to add");
    perturb->add_option("--remove", remove_ratio, "fraction of M edges to remove");
    perturb->add_option("--seed", perturb_seed, "seed");
    perturb->add_option("--out", perturb_out, "output dataset directory")->required();
    perturb->callback([&] {
        action = [&] {
            const Graph g = load_graph(perturb_in).graph;
            const Graph p = perturb_edges(g, add_ratio, remove_ratio, perturb_seed);
            save_graph(p, perturb_out);
            out << "edges " << g.num_edges() << " -> " << p.num_edges() << "\n";
        };
    });

    // sbm
    SbmSpec spec;
    double sbm_train = 0.1, sbm_val = 0.2, sbm_test = 0.2;
    std::uint64_t sbm_seed = 0;
    std::string sbm_out;
    auto* sbm = app.add_subcommand("sbm", "generate a stochastic-block-model dataset");
    sbm->add_option("--blocks", spec.blocks, "number of blocks");
    sbm->add_option("--per-block", spec.nodes_per_block, "nodes per block");
    sbm->add_option("--p-intra", spec.p_intra, "intra-block edge probability");
    sbm->add_option("--p-inter", spec.p_inter, "inter-block edge probability");
    sbm->add_option("--feat-dim", spec.feat_dim, "feature width");
    sbm->add_option("--feat-noise", spec.feat_noise, "feature noise std");
    sbm->add_option("--train-ratio", sbm_train, "train fraction");
    sbm->add_option("--val", sbm_val, "validation fraction");
    sbm->add_option("--test", sbm_test, "test fraction");
    sbm->add_option("--seed", sbm_seed, "seed");
    sbm->add_option("--out", sbm_out, "output dataset directory")->required();
    sbm->callback([&] {
        action = [&] {
            const Graph g = sbm_generate(spec, sbm_seed);
            const SplitResult split = make_split(g, SplitSpec::ratio(sbm_train, sbm_val, sbm_test, sbm_seed));
            save_graph(split.graph, sbm_out);
            out << "nodes " << g.num_nodes << " edges " << g.num_edges() << "\n";
        };
    });

    // sweeps
    ConfigOptions rob_cfg;
    std::vector<double> rob_ratios{0.0, 0.2, 0.4, 0.6, 0.8};
    std::string rob_mode = "add";
    std::vector<std::uint64_t> rob_seeds;
    std::string rob_out;
    auto* rob = app.add_subcommand("sweep-robustness", "accuracy under random edge addition or removal");
    rob_cfg.add_to(rob);
    rob->add_option("--ratios", rob_ratios, "comma-separated ratios in [0, 0.8]")->delimiter(',');
    rob->add_option("--mode", rob_mode, "add or remove")->check(CLI::IsMember({"add", "remove"}));
    rob->add_option("--seeds", rob_seeds, "comma-separated seeds (default: --seed)")->delimiter(',');
    rob->add_option("--out", rob_out, "output CSV")->required();
    rob->callback([&] {
        action = [&] {
            const TrainConfig cfg = rob_cfg.resolve();
            const SweepTable t = robustness_sweep(cfg, rob_ratios, rob_mode == "add" ? PerturbMode::Add : PerturbMode::Remove,
                                                  seed_list(rob_seeds, cfg));
            write_stream(rob_out, [&](std::ostream& o) { write_sweep_csv(t, o); });
            out << "wrote " << rob_out << "\n";
        };
    });

    ConfigOptions sgld_cfg;
    std::vector<std::size_t> k_values{0, 1, 3, 5};
    std::vector<std::uint64_t> sgld_seeds;
    std::string sgld_out;
    auto* sgld = app.add_subcommand("sweep-sgld", "accuracy and wall time per number of Langevin steps");
    sgld_cfg.add_to(sgld);
    sgld->add_option("--k-values", k_values, "comma-separated K values")->delimiter(',');
    sgld->add_option("--seeds", sgld_seeds, "comma-separated seeds (default: --seed)")->delimiter(',');
    sgld->add_option("--out", sgld_out, "output CSV")->required();
    sgld->callback([&] {
        action = [&] {
            const TrainConfig cfg = sgld_cfg.resolve();
            const SweepTable t = sgld_sweep(cfg, k_values, seed_list(sgld_seeds, cfg));
            write_stream(sgld_out, [&](std::ostream& o) { write_sweep_csv(t, o); });
            out << "wrote " << sgld_out << "\n";
        };
    });

    ConfigOptions ratio_cfg;
    std::vector<double> train_ratios{0.01, 0.03, 0.05, 0.10};
    std::vector<std::uint64_t> ratio_seeds;
    std::string ratio_out;
    auto* ratio = app.add_subcommand("sweep-ratio", "accuracy per stratified train ratio");
    ratio_cfg.add_to(ratio);
    ratio->add_option("--ratios", train_ratios, "comma-separated train ratios")->delimiter(',');
    ratio->add_option("--seeds", ratio_seeds, "comma-separated seeds (default: --seed)")->delimiter(',');
    ratio->add_option("--out", ratio_out, "output CSV")->required();
    ratio->callback([&] {
        action = [&] {
            const TrainConfig cfg = ratio_cfg.resolve();
            const SweepTable t = ratio_sweep(cfg, train_ratios, seed_list(ratio_seeds, cfg));
            write_stream(ratio_out, [&](std::ostream& o) { write_sweep_csv(t, o); });
            out << "wrote " << ratio_out << "\n";
        };
    });

    // heatmap
    ConfigOptions heat_cfg;
    std::string heat_checkpoint, heat_out;
    bool heat_probs = false;
    auto* heat = app.add_subcommand("heatmap", "class-grouped adjacency heatmap (PGM + CSV)");
    heat_cfg.add_to(heat);
    heat->add_option("--checkpoint", heat_checkpoint, "params.bin; without it the input graph is drawn")
        ->check(CLI::ExistingFile);
    heat->add_flag("--probs", heat_probs, "draw edge probabilities instead of the thresholded graph");
    heat->add_option("--out", heat_out, "output path stem (.pgm and .csv are appended)")->required();
    heat->callback([&] {
        action = [&] {
            const TrainConfig cfg = heat_cfg.resolve();
            const PreparedData data = prepare_data(cfg);
            const Graph& g = *data.graph;
            const auto n = static_cast<Eigen::Index>(g.num_nodes);
            if (g.num_nodes > refine::kDenseLimit) throw std::invalid_argument("heatmap supports at most 5000 nodes");
            Matrix a = Matrix::Zero(n, n);
            std::vector<Edge> edges = g.edges;
            if (!heat_checkpoint.empty()) {
                const ParamStore params = load_checkpoint(heat_checkpoint);
                if (heat_probs) {
                    const Matrix z = refine::full_node_embeddings(params, data.dual, data.adj);
                    a = refine::edge_probabilities(z, refine::CandidateSet{}).probs;
                } else {
                    a = refined_adjacency(cfg, params, data).values;
                }
            } else {
                for (const Edge& e : edges) a(e.src, e.dst) = a(e.dst, e.src) = 1.0;
            }
            emit_heatmap(a, class_grouped_order(g.labels), heat_out);
            const BlockFractions f = block_fractions(a, g.labels);
            out << json{{"intra_mean_weight", f.intra}, {"inter_mean_weight", f.inter}}.dump() << "\n";
        };
    });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        if (code == 0) return kExitOk;
        if (e.get_name() != "CallForHelp") err << app.help();
        return kExitUsage;
    }
    try {
        action();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace eclgsr
