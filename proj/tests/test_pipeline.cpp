#include <doctest.h>

#include <fstream>
#include <sstream>

#include "eclgsr/cli.hpp"
#include "eclgsr/config.hpp"
#include "eclgsr/gradcheck.hpp"
#include "eclgsr/ops.hpp"
#include "eclgsr/graph_io.hpp"
#include "eclgsr/heatmap.hpp"
#include "eclgsr/sweeps.hpp"
#include "oracles.hpp"

using namespace eclgsr;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

TrainConfig tiny_config(std::uint64_t seed = 1) {
    TrainConfig cfg = oracle::make_fixture(seed).cfg;
    cfg.epochs = 3;
    cfg.deepwalk.walks_per_node = 2;
    cfg.deepwalk.walk_length = 8;
    cfg.deepwalk.epochs = 1;
    return cfg;
}

std::vector<std::string> tiny_flags() {
    return {"--set", "sbm_blocks=2",        "--set", "sbm_nodes_per_block=6", "--set", "sbm_feat_dim=4",
            "--set", "sbm_p_intra=0.7",     "--set", "encoder_width=8",       "--set", "classifier_width=8",
            "--set", "batch_n=4",           "--set", "edges_per_subgraph=2",  "--set", "deepwalk_walks_per_node=2",
            "--set", "deepwalk_walk_length=8", "--set", "deepwalk_epochs=1",  "--set", "train_ratio=0.3",
            "--set", "val_fraction=0.3",    "--set", "test_fraction=0.3",     "--epochs", "2"};
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return code;
}

std::vector<std::string> with_tiny(std::vector<std::string> head) {
    for (auto& f : tiny_flags()) head.push_back(f);
    return head;
}

}  // namespace

TEST_CASE("config defaults follow the documented hyperparameters") {
    const TrainConfig cfg;
    CHECK(cfg.alpha == 0.1);
    CHECK(cfg.beta == 0.01);
    CHECK(cfg.mu == 0.01);
    CHECK(cfg.tau == 0.1);
    CHECK(cfg.k_steps == 3);
    CHECK(cfg.batch_n == 64);
    CHECK(cfg.lr == 0.001);
    CHECK(cfg.epochs == 40);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config JSON round trip and overrides") {
    TrainConfig cfg;
    cfg.alpha = 0.25;
    cfg.selection = Selection::Final;
    cfg.split = SplitKind::Standard;
    cfg.deepwalk.window = 3;
    cfg.sbm.blocks = 7;
    cfg.data_dir = "some/dir";
    const TrainConfig back = config_from_json(to_json_string(cfg));
    CHECK(to_json_string(back) == to_json_string(cfg));
    CHECK(back.selection == Selection::Final);
    CHECK(back.deepwalk.window == 3);

    TrainConfig o;
    apply_override(o, "mu=0.5");
    apply_override(o, "selection=final");
    apply_override(o, "data_dir=data/cora");
    apply_override(o, "sbm_p_inter=0.05");
    CHECK(o.mu == 0.5);
    CHECK(o.selection == Selection::Final);
    CHECK(o.data_dir == "data/cora");
    CHECK(o.sbm.p_inter == 0.05);

    CHECK_THROWS_AS(apply_override(o, "nope=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(o, "epochs=-3"), ConfigError);
    CHECK_THROWS_AS(apply_override(o, "mu"), ConfigError);
    CHECK_THROWS_AS(apply_override(o, "split=sideways"), ConfigError);
    CHECK_THROWS_AS(config_from_json("[1,2]"), ConfigError);
    CHECK_THROWS_AS(config_from_json("{bad"), ConfigError);

    TrainConfig bad;
    bad.tau = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = TrainConfig{};
    bad.batch_n = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("batches per epoch") {
    TrainConfig cfg;
    CHECK(batches_per_epoch(cfg, 0) == 1);
    CHECK(batches_per_epoch(cfg, 1024) == 1);
    CHECK(batches_per_epoch(cfg, 1025) == 2);
    CHECK(batches_per_epoch(cfg, 5278) == 6);
}

TEST_CASE("zero epochs return the initialization") {
    oracle::Fixture f = oracle::make_fixture(2);
    f.cfg.epochs = 0;
    const TrainResult r = train(f.cfg, f.data);
    CHECK(r.log.empty());
    CHECK(r.selected_epoch == 0);
    for (const auto& [name, p] : f.store) CHECK(r.params.at(name).value == p.value);
}

TEST_CASE("mu zero leaves the classifier untouched") {
    oracle::Fixture f = oracle::make_fixture(3);
    f.cfg.mu = 0.0;
    f.cfg.epochs = 2;
    f.cfg.selection = Selection::Final;
    const TrainResult r = train(f.cfg, f.data);
    for (const char* n : {clf::kW1, clf::kW2, clf::kW3}) CHECK(r.params.at(n).value == f.store.at(n).value);
    CHECK(r.params.at(ecl::kEncW1).value != f.store.at(ecl::kEncW1).value);
}

TEST_CASE("logged totals compose and runs are deterministic") {
    oracle::Fixture f = oracle::make_fixture(4);
    f.cfg.epochs = 3;
    const TrainResult a = train(f.cfg, f.data);
    const TrainResult b = train(f.cfg, f.data);
    REQUIRE(a.log.size() == 3);
    for (std::size_t e = 0; e < a.log.size(); ++e) {
        const EpochRecord& r = a.log[e];
        CHECK(r.epoch == e + 1);
        CHECK(std::abs(r.total - (r.ecl_total + f.cfg.mu * r.class_loss)) <= 1e-12);
        CHECK(std::abs(r.ecl_total - ecl::combine(r.disc_loss, r.gen_loss, r.reg_loss, f.cfg.hyper())) <= 1e-12);
        CHECK(std::isfinite(r.total));
    }
    std::ostringstream ca, cb;
    write_metrics_csv(a.log, ca);
    write_metrics_csv(b.log, cb);
    CHECK(ca.str() == cb.str());
    CHECK(ca.str().rfind("epoch,disc_loss,gen_loss,reg_loss,ecl_total,class_loss,total,val_accuracy,test_accuracy\n", 0) ==
          0);
    CHECK(a.selected_epoch >= 1);

    std::ostringstream timing;
    write_timing_csv(a.log, timing);
    CHECK(timing.str().rfind("epoch,wall_time\n", 0) == 0);
}

TEST_CASE("final selection keeps the last epoch") {
    oracle::Fixture f = oracle::make_fixture(5);
    f.cfg.epochs = 2;
    f.cfg.selection = Selection::Final;
    const TrainResult r = train(f.cfg, f.data);
    CHECK(r.selected_epoch == 2);
}

TEST_CASE("evaluation with zero parameters predicts class zero") {
    oracle::Fixture f = oracle::make_fixture(6);
    ParamStore zeros = f.store;
    for (auto& [name, p] : zeros) p.value.setZero();
    const EvalResult ev = evaluate(f.cfg, zeros, f.data);
    const Graph& g = *f.data.graph;
    for (int c : clf::predict(ev.probs)) CHECK(c == 0);
    double zeros_in_test = 0.0;
    for (NodeId v : g.test) zeros_in_test += g.labels[v] == 0 ? 1.0 : 0.0;
    CHECK(ev.test_accuracy == doctest::Approx(zeros_in_test / static_cast<double>(g.test.size())));
    // zero embeddings have cosine 0, so every pair sits exactly at the threshold
    const std::size_t v = g.num_nodes;
    CHECK(ev.refined_edges == v * (v - 1) / 2);
}

TEST_CASE("control training and evaluation use the raw graph") {
    oracle::Fixture f = oracle::make_fixture(7);
    f.cfg.epochs = 2;
    const TrainResult r = train_control(f.cfg, f.data);
    REQUIRE(r.log.size() == 2);
    for (const EpochRecord& rec : r.log) {
        CHECK(rec.total == rec.class_loss);
        CHECK(rec.disc_loss == 0.0);
    }
    CHECK(r.params.size() == 3);
    const EvalResult ev = evaluate_control(r.params, f.data);
    CHECK(ev.edges == f.data.graph->edges);

    ad::Tape t;
    const clf::ClassifierWeights w = clf::bind_frozen(t, r.params);
    const Matrix direct =
        clf::classify_fixed(w, f.data.adj.matrix, t.constant(f.data.graph->features)).probs.value();
    CHECK(testutil::max_abs_diff(direct, ev.probs) < 1e-12);
}

TEST_CASE("joint objective gradients through the relaxed refined graph") {
    for (std::uint64_t seed = 1; seed <= 2; ++seed) {
        oracle::Fixture f = oracle::make_fixture(seed);
        oracle::randomize(f.store, seed);
        const ViewBatch batch =
            make_view_batch(f.data.dual, f.cfg.batch_n, f.cfg.edges_per_subgraph, f.cfg.sigma, seed);
        const std::vector<Matrix> nu_star = ecl::sgld_sample(f.store, batch, f.cfg.hyper(), seed).samples;
        f.cfg.mu = 0.7;
        const auto r = check_gradients(
            [&](ad::Tape& t, ParamStore& p) {
                const ecl::EclWeights ew = ecl::bind_trainable(t, p);
                const clf::ClassifierWeights cw = clf::bind_trainable(t, p);
                const ad::Var le = ecl::ecl_loss(t, ew, batch, f.cfg.hyper(), nu_star).total;
                return ad::add(le, ad::scale(refined_class_loss(f.cfg, f.data, t, ew, cw, seed), f.cfg.mu));
            },
            f.store);
        CHECK(r.max_rel_error < 1e-4);
    }
}

TEST_CASE("sweep CSV layout") {
    SweepTable t;
    t.parameter_name = "ratio";
    t.rows = {{0.1, 1, 0.5, 0.4, 0.6, 0.7, 1.0}, {0.1, 2, 0.7, 0.6, 0.6, 0.9, 3.0}, {0.3, 1, 0.2, 0.3, 0.5, 0.5, 2.0}};
    std::ostringstream out;
    write_sweep_csv(t, out);
    std::vector<std::string> lines;
    std::istringstream in(out.str());
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    REQUIRE(lines.size() == 1 + 2 + 2 + 1 + 2);
    CHECK(lines[0] == "ratio,seed,ecl_accuracy,gcn_accuracy,raw_intra_fraction,refined_intra_fraction,wall_time");
    CHECK(lines[3].rfind("0.1,mean,0.6,0.5,0.6,0.8,2", 0) == 0);
    CHECK(lines[4].rfind("0.1,std,", 0) == 0);
    CHECK(std::stod(lines[4].substr(8)) == doctest::Approx(0.1));

    t.has_control = false;
    std::ostringstream no_control;
    write_sweep_csv(t, no_control);
    CHECK(no_control.str().rfind("ratio,seed,ecl_accuracy,raw_intra_fraction", 0) == 0);
}

TEST_CASE("sweeps validate their grids and produce one row per run") {
    const TrainConfig cfg = tiny_config();
    CHECK_THROWS_AS(robustness_sweep(cfg, {1.0}, PerturbMode::Remove, {1}), std::invalid_argument);
    CHECK_THROWS_AS(robustness_sweep(cfg, {-0.1}, PerturbMode::Add, {1}), std::invalid_argument);
    CHECK_THROWS_AS(ratio_sweep(cfg, {0.0}, {1}), std::invalid_argument);

    TrainConfig quick = cfg;
    quick.epochs = 1;
    const SweepTable rob = robustness_sweep(quick, {0.0, 0.2}, PerturbMode::Add, {1, 2});
    CHECK(rob.rows.size() == 4);
    CHECK(rob.rows[0].parameter == 0.0);
    CHECK(rob.rows[3].parameter == 0.2);
    CHECK(rob.rows[1].seed == 2);

    const SweepTable k = sgld_sweep(quick, {0, 1, 3, 5}, {1});
    CHECK(k.rows.size() == 4);
    CHECK_FALSE(k.has_control);

    const SweepTable ratios = ratio_sweep(quick, {0.1, 0.3}, {3});
    CHECK(ratios.rows.size() == 2);
    for (const SweepRow& r : ratios.rows) {
        CHECK(r.ecl_accuracy >= 0.0);
        CHECK(r.ecl_accuracy <= 1.0);
    }
}

TEST_CASE("heatmap emission") {
    testutil::TempDir dir("heat");
    const std::vector<int> labels{1, 0, 1, -1, 0};
    const std::vector<NodeId> order = class_grouped_order(labels);
    CHECK(order == std::vector<NodeId>{1, 4, 0, 2, 3});

    emit_heatmap(Matrix::Identity(5, 5), order, dir.path / "eye");
    const std::string pgm = slurp(dir.path / "eye.pgm");
    const std::string header = "P5\n5 5\n255\n";
    REQUIRE(pgm.size() == header.size() + 25);
    CHECK(pgm.substr(0, header.size()) == header);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            CHECK(static_cast<unsigned char>(pgm[header.size() + static_cast<std::size_t>(5 * i + j)]) == (i == j ? 255 : 0));

    emit_heatmap(Matrix::Zero(3, 3), {2, 0, 1}, dir.path / "zero");
    const std::string zpgm = slurp(dir.path / "zero.pgm");
    for (std::size_t k = zpgm.size() - 9; k < zpgm.size(); ++k) CHECK(zpgm[k] == '\0');
    CHECK(slurp(dir.path / "zero.csv") == "0,0,0\n0,0,0\n0,0,0\n");

    CHECK_THROWS(emit_heatmap(Matrix::Zero(3, 3), {0, 0, 1}, dir.path / "bad"));
    CHECK_THROWS(emit_heatmap(Matrix::Zero(3, 3), {0, 1, 5}, dir.path / "bad"));
    CHECK(reorder(Matrix::Identity(3, 3), {2, 0}).rows() == 2);

    Matrix a = Matrix::Zero(4, 4);
    a(0, 1) = a(1, 0) = 1.0;
    a(2, 3) = a(3, 2) = 0.5;
    a(0, 2) = a(2, 0) = 0.25;
    const BlockFractions bf = block_fractions(a, {0, 0, 1, 1});
    CHECK(bf.intra == doctest::Approx(0.75));
    CHECK(bf.inter == doctest::Approx(0.0625));

    Matrix perm = Matrix::Zero(3, 3);
    perm(0, 1) = 7.0;
    const Matrix r = reorder(perm, {1, 0, 2});
    CHECK(r(1, 0) == 7.0);
}

TEST_CASE("predictions export") {
    testutil::TempDir dir("pred");
    Matrix p(2, 3);
    p << 0.2, 0.5, 0.3, 0.6, 0.2, 0.2;
    write_predictions(p, dir.path / "p.tsv");
    CHECK(slurp(dir.path / "p.tsv") == "0\t1\t0.5\n1\t0\t0.6\n");
}

TEST_CASE("cli usage errors exit with 1") {
    std::string out, err;
    CHECK(cli({}, &out, &err) == kExitUsage);
    CHECK(cli({"frobnicate"}, &out, &err) == kExitUsage);
    CHECK(cli({"train"}, &out, &err) == kExitUsage);
    CHECK(cli({"train", "--out", "x", "--bogus"}, &out, &err) == kExitUsage);
    CHECK(cli({"train", "--out", "x", "--set", "nope=1"}, &out, &err) == kExitUsage);
    CHECK(cli({"--help"}, &out, &err) == kExitOk);
    CHECK(out.find("sweep-robustness") != std::string::npos);
}

TEST_CASE("cli runtime errors exit with 2") {
    testutil::TempDir dir("clierr");
    std::string out, err;
    CHECK(cli({"train", "--out", (dir.path / "run").string(), "--data", (dir.path / "missing").string()}, &out, &err) ==
          kExitRuntime);
    CHECK_FALSE(err.empty());
}

TEST_CASE("cli sbm, perturb, embed, train, eval and heatmap") {
    testutil::TempDir dir("cli");
    const std::string data = (dir.path / "sbm").string();
    REQUIRE(cli({"sbm", "--blocks", "2", "--per-block", "6", "--feat-dim", "4", "--p-intra", "0.7", "--train-ratio",
                 "0.3", "--val", "0.3", "--test", "0.3", "--seed", "3", "--out", data}) == kExitOk);
    for (const char* f : {"edges.tsv", "features.csv", "labels.tsv", "split.json"}) CHECK(fs::exists(fs::path(data) / f));
    const LoadReport loaded = load_graph(data);
    CHECK(loaded.graph.num_nodes == 12);

    const std::string noisy = (dir.path / "noisy").string();
    REQUIRE(cli({"perturb", "--data", data, "--add", "0.5", "--seed", "1", "--out", noisy}) == kExitOk);
    CHECK(load_graph(noisy).graph.num_edges() > loaded.graph.num_edges());

    const std::string xs = (dir.path / "xs.csv").string();
    REQUIRE(cli(with_tiny({"embed", "--data", data, "--out", xs})) == kExitOk);
    CHECK(fs::exists(xs));

    const fs::path run = dir.path / "run";
    REQUIRE(cli(with_tiny({"train", "--data", data, "--seed", "7", "--out", run.string()})) == kExitOk);
    for (const char* f : {"config.json", "metrics.csv", "timing.csv", "params.bin", "predictions.tsv",
                          "refined_edges.tsv", "summary.json"}) {
        CHECK(fs::exists(run / f));
    }
    const fs::path run2 = dir.path / "run2";
    REQUIRE(cli(with_tiny({"train", "--data", data, "--seed", "7", "--out", run2.string()})) == kExitOk);
    CHECK(slurp(run / "metrics.csv") == slurp(run2 / "metrics.csv"));
    CHECK(slurp(run / "predictions.tsv") == slurp(run2 / "predictions.tsv"));

    REQUIRE(cli({"train", "--config", (run / "config.json").string(), "--out", (dir.path / "run3").string()}) == kExitOk);
    CHECK(slurp(run / "metrics.csv") == slurp(dir.path / "run3" / "metrics.csv"));

    std::string out;
    REQUIRE(cli({"eval", "--config", (run / "config.json").string(), "--checkpoint", (run / "params.bin").string(),
                 "--out", (dir.path / "eval").string()},
                &out) == kExitOk);
    CHECK(slurp(dir.path / "eval" / "predictions.tsv") == slurp(run / "predictions.tsv"));

    const fs::path control = dir.path / "control";
    REQUIRE(cli(with_tiny({"train", "--control", "--data", data, "--out", control.string()})) == kExitOk);
    REQUIRE(cli({"eval", "--control", "--config", (control / "config.json").string(), "--checkpoint",
                 (control / "params.bin").string()}) == kExitOk);

    REQUIRE(cli({"heatmap", "--config", (run / "config.json").string(), "--checkpoint", (run / "params.bin").string(),
                 "--out", (dir.path / "heat").string()}) == kExitOk);
    CHECK(fs::exists(dir.path / "heat.pgm"));
    CHECK(fs::exists(dir.path / "heat.csv"));
}

TEST_CASE("cli sweeps write CSV tables") {
    testutil::TempDir dir("clisweep");
    const fs::path csv = dir.path / "ratio.csv";
    REQUIRE(cli(with_tiny({"sweep-ratio", "--ratios", "0.1,0.3", "--seeds", "1", "--out", csv.string()})) == kExitOk);
    const std::string text = slurp(csv);
    CHECK(text.rfind("train_ratio,seed,", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 2 * 3);

    const fs::path k = dir.path / "k.csv";
    REQUIRE(cli(with_tiny({"sweep-sgld", "--k-values", "0,1", "--out", k.string()})) == kExitOk);
    CHECK(fs::exists(k));

    const fs::path rob = dir.path / "rob.csv";
    REQUIRE(cli(with_tiny({"sweep-robustness", "--ratios", "0,0.3", "--mode", "remove", "--seeds", "1,2", "--out",
                           rob.string()})) == kExitOk);
    const std::string r = slurp(rob);
    CHECK(std::count(r.begin(), r.end(), '\n') == 1 + 2 * (2 + 2));
    CHECK(cli(with_tiny({"sweep-robustness", "--ratios", "0.9", "--out", rob.string()})) != kExitOk);
}
