#include "eclgsr/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "eclgsr/graph_io.hpp"
#include "eclgsr/ops.hpp"
#include "eclgsr/optim.hpp"
#include "eclgsr/rng.hpp"
#include "eclgsr/sampler.hpp"

namespace eclgsr {
namespace {

// Child-seed streams; each consumer of randomness gets its own.
enum Stream : std::uint64_t {
    kSbmStream = 1,
    kSplitStream,
    kPerturbStream,
    kWalkStream,
    kEclInitStream,
    kClfInitStream,
    kBatchStream,
    kSgldStream,
    kBernoulliStream,
};

double masked_accuracy(const Matrix& probs, const Graph& g, const std::vector<NodeId>& mask) {
    return mask.empty() ? 0.0 : clf::accuracy(probs, g.labels, mask);
}

Matrix dense_adjacency(const Graph& g) {
    const auto n = static_cast<Eigen::Index>(g.num_nodes);
    Matrix a = Matrix::Zero(n, n);
    for (const Edge& e : g.edges) {
        a(e.src, e.dst) = 1.0;
        a(e.dst, e.src) = 1.0;
    }
    return a;
}

// Classifier over the unrefined graph, through the same code path the refined
// graph takes.
clf::ClassifierOutput raw_forward(const clf::ClassifierWeights& w, ad::Tape& tape, const PreparedData& data) {
    const Graph& g = *data.graph;
    ad::Var x = tape.constant(g.features);
    if (g.num_nodes <= refine::kDenseLimit) return clf::classify(w, tape.constant(dense_adjacency(g)), x);
    return clf::classify_pairs(w, g.edges, tape.constant(Matrix::Ones(static_cast<Eigen::Index>(g.edges.size()), 1)), x);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return std::round(s * 1000.0) / 1000.0;
}

void require_train_mask(const PreparedData& data) {
    if (data.graph->train.empty()) throw std::invalid_argument("training needs a nonempty train mask");
}

template <typename Fn>
void guarded(std::size_t epoch, std::size_t batch, Fn&& fn) {
    try {
        fn();
    } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) +
                           ": " + e.what());
    }
}

}  // namespace

Graph build_graph(const TrainConfig& cfg) {
    cfg.validate();
    Graph g = cfg.data_dir.empty() ? sbm_generate(cfg.sbm, derive_seed(cfg.seed, {kSbmStream}))
                                   : load_graph(cfg.data_dir).graph;
    const bool has_masks = !g.train.empty();
    SplitKind kind = cfg.split;
    if (kind == SplitKind::Auto) kind = has_masks ? SplitKind::File : SplitKind::Ratio;
    const std::uint64_t split_seed = derive_seed(cfg.seed, {kSplitStream});
    switch (kind) {
        case SplitKind::File:
            if (!has_masks) throw std::invalid_argument("split 'file' requested but the dataset has no train mask");
            break;
        case SplitKind::Standard:
            g = make_split(g, SplitSpec::standard(split_seed)).graph;
            break;
        case SplitKind::Ratio:
            g = make_split(g, SplitSpec::ratio(cfg.train_ratio, cfg.val_fraction, cfg.test_fraction, split_seed)).graph;
            break;
        case SplitKind::Auto:
            break;
    }
    if (cfg.add_ratio > 0.0 || cfg.remove_ratio > 0.0) {
        g = perturb_edges(g, cfg.add_ratio, cfg.remove_ratio, derive_seed(cfg.seed, {kPerturbStream}));
    }
    return g;
}

PreparedData prepare_data(const TrainConfig& cfg) {
    Graph g = build_graph(cfg);
    Matrix x_s = cfg.xs_cache.empty() ? structural_embedding(g, cfg.deepwalk, derive_seed(cfg.seed, {kWalkStream}))
                                      : read_csv_matrix(cfg.xs_cache);
    return prepare_data(std::move(g), x_s);
}

PreparedData prepare_data(Graph g, const Matrix& x_s) {
    g.validate();
    auto graph = std::make_shared<const Graph>(std::move(g));
    PreparedData out{graph, build_dual(graph, x_s), normalize_adjacency(*graph)};
    return out;
}

ParamStore init_model(const TrainConfig& cfg, const PreparedData& data) {
    ParamStore store;
    const auto width = static_cast<Eigen::Index>(cfg.encoder_width);
    Rng ecl_rng(derive_seed(cfg.seed, {kEclInitStream}));
    ecl::init_params(store, ecl::EclArch{data.dual.x_dual.cols(), width, width}, ecl_rng);
    ParamStore head = init_classifier(cfg, data);
    for (const auto& [name, p] : head) store.create(name, p.value);
    return store;
}

ParamStore init_classifier(const TrainConfig& cfg, const PreparedData& data) {
    const std::size_t classes = data.graph->num_classes();
    if (classes == 0) throw std::invalid_argument("dataset has no labeled nodes");
    ParamStore store;
    Rng rng(derive_seed(cfg.seed, {kClfInitStream}));
    clf::init_params(store,
                     clf::ClassifierArch{data.graph->features.cols(), static_cast<Eigen::Index>(cfg.classifier_width),
                                         static_cast<Eigen::Index>(classes)},
                     rng);
    return store;
}

std::size_t batches_per_epoch(const TrainConfig& cfg, std::size_t num_edges) {
    const std::size_t per_batch = cfg.batch_n * cfg.edges_per_subgraph;
    return std::max<std::size_t>(1, (num_edges + per_batch - 1) / per_batch);
}

ad::Var refined_class_loss(const TrainConfig& cfg, const PreparedData& data, ad::Tape& tape, const ecl::EclWeights& ew,
                           const clf::ClassifierWeights& cw, std::uint64_t noise_seed) {
    const Graph& g = *data.graph;
    const ad::Var z = refine::full_node_embeddings(ew, tape, data.dual, data.adj);
    const ad::Var x = tape.constant(g.features);
    clf::ClassifierOutput out;
    if (g.num_nodes <= refine::kDenseLimit) {
        const ad::Var relaxed =
            refine::relaxed_bernoulli_dense(refine::edge_probabilities_dense(z), cfg.bernoulli_temp, noise_seed);
        out = clf::classify(cw, relaxed, x);
    } else {
        const refine::CandidateSet cand = refine::build_candidates(z.value(), g, cfg.candidate_k);
        const ad::Var weights = refine::relaxed_bernoulli_pairs(refine::edge_probabilities_pairs(z, cand.pairs),
                                                                cand.pairs, cfg.bernoulli_temp, noise_seed);
        out = clf::classify_pairs(cw, cand.pairs, weights, x);
    }
    return clf::ce_loss(out.probs, g.labels, g.train);
}

TrainResult train(const TrainConfig& cfg, const PreparedData& data) {
    cfg.validate();
    require_train_mask(data);
    const Graph& g = *data.graph;
    if (g.edges.empty()) throw std::invalid_argument("training needs at least one edge");
    const ecl::EclHyper hyper = cfg.hyper();

    TrainResult result;
    ParamStore store = init_model(cfg, data);
    result.params = store;
    Adam adam;
    const std::size_t batches = batches_per_epoch(cfg, g.num_edges());
    double best_val = -1.0;
    const auto start = std::chrono::steady_clock::now();

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_schedule(static_cast<int>(epoch), cfg.lr, static_cast<int>(cfg.lr_halve_every));
        EpochRecord rec;
        rec.epoch = epoch + 1;
        for (std::size_t b = 0; b < batches; ++b) {
            guarded(rec.epoch, b + 1, [&] {
                ad::Tape tape;
                const ecl::EclWeights ew = ecl::bind_trainable(tape, store);
                const clf::ClassifierWeights cw = clf::bind_trainable(tape, store);
                const ViewBatch batch = make_view_batch(data.dual, cfg.batch_n, cfg.edges_per_subgraph, cfg.sigma,
                                                        derive_seed(cfg.seed, {kBatchStream, epoch, b}));
                const ecl::EclLoss le = ecl::ecl_loss(tape, ew, store, batch, hyper,
                                                      derive_seed(cfg.seed, {kSgldStream, epoch, b}));

                const ad::Var lc = refined_class_loss(cfg, data, tape, ew, cw,
                                                      derive_seed(cfg.seed, {kBernoulliStream, epoch, b}));
                const ad::Var total = ad::add(le.total, ad::scale(lc, cfg.mu));

                store.zero_grad();
                tape.backward(total);
                adam.step(store, lr);

                rec.disc_loss += le.components.discriminative;
                rec.gen_loss += le.components.generative;
                rec.reg_loss += le.components.regularization;
                rec.ecl_total += le.components.total;
                rec.class_loss += lc.scalar();
            });
        }
        const double nb = static_cast<double>(batches);
        rec.disc_loss /= nb;
        rec.gen_loss /= nb;
        rec.reg_loss /= nb;
        rec.ecl_total /= nb;
        rec.class_loss /= nb;
        rec.total = rec.ecl_total + cfg.mu * rec.class_loss;

        const EvalResult ev = evaluate(cfg, store, data);
        rec.val_accuracy = ev.val_accuracy;
        rec.test_accuracy = ev.test_accuracy;
        rec.wall_time = seconds_since(start);
        result.log.push_back(rec);

        const bool take = cfg.selection == Selection::Final || g.val.empty() || ev.val_accuracy > best_val;
        if (take) {
            best_val = ev.val_accuracy;
            result.params = store;
            result.selected_epoch = rec.epoch;
        }
    }
    return result;
}

TrainResult train_control(const TrainConfig& cfg, const PreparedData& data) {
    cfg.validate();
    require_train_mask(data);
    const Graph& g = *data.graph;

    TrainResult result;
    ParamStore store = init_classifier(cfg, data);
    result.params = store;
    Adam adam;
    const std::size_t batches = batches_per_epoch(cfg, g.num_edges());
    double best_val = -1.0;
    const auto start = std::chrono::steady_clock::now();

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_schedule(static_cast<int>(epoch), cfg.lr, static_cast<int>(cfg.lr_halve_every));
        EpochRecord rec;
        rec.epoch = epoch + 1;
        for (std::size_t b = 0; b < batches; ++b) {
            guarded(rec.epoch, b + 1, [&] {
                ad::Tape tape;
                const clf::ClassifierWeights cw = clf::bind_trainable(tape, store);
                const ad::Var lc = clf::ce_loss(raw_forward(cw, tape, data).probs, g.labels, g.train);
                store.zero_grad();
                tape.backward(lc);
                adam.step(store, lr);
                rec.class_loss += lc.scalar();
            });
        }
        rec.class_loss /= static_cast<double>(batches);
        rec.total = rec.class_loss;

        const EvalResult ev = evaluate_control(store, data);
        rec.val_accuracy = ev.val_accuracy;
        rec.test_accuracy = ev.test_accuracy;
        rec.wall_time = seconds_since(start);
        result.log.push_back(rec);

        const bool take = cfg.selection == Selection::Final || g.val.empty() || ev.val_accuracy > best_val;
        if (take) {
            best_val = ev.val_accuracy;
            result.params = store;
            result.selected_epoch = rec.epoch;
        }
    }
    return result;
}

refine::RefinedAdjacency refined_adjacency(const TrainConfig& cfg, const ParamStore& params, const PreparedData& data) {
    const Matrix z = refine::full_node_embeddings(params, data.dual, data.adj);
    const refine::CandidateSet cand = refine::build_candidates(z, *data.graph, cfg.candidate_k);
    return refine::binarize(refine::edge_probabilities(z, cand), cfg.bernoulli_temp, refine::BinarizeMode::Eval, 0);
}

namespace {

EvalResult finish_eval(const Matrix& probs, std::vector<Edge> edges, const Graph& g) {
    EvalResult out;
    out.train_accuracy = masked_accuracy(probs, g, g.train);
    out.val_accuracy = masked_accuracy(probs, g, g.val);
    out.test_accuracy = masked_accuracy(probs, g, g.test);
    out.refined_edges = edges.size();
    out.refined_intra_fraction = intra_class_fraction(g, edges);
    out.raw_intra_fraction = intra_class_fraction(g, g.edges);
    out.probs = probs;
    out.edges = std::move(edges);
    return out;
}

}  // namespace

EvalResult evaluate(const TrainConfig& cfg, const ParamStore& params, const PreparedData& data) {
    const Graph& g = *data.graph;
    const refine::RefinedAdjacency refined = refined_adjacency(cfg, params, data);
    ad::Tape tape;
    const clf::ClassifierWeights cw = clf::bind_frozen(tape, params);
    const ad::Var x = tape.constant(g.features);
    Matrix probs;
    if (refined.dense) {
        probs = clf::classify(cw, tape.constant(refined.values), x).probs.value();
    } else {
        probs = clf::classify_pairs(cw, refined.pairs, tape.constant(Matrix(refined.weights)), x).probs.value();
    }
    return finish_eval(probs, refined.edges(), g);
}

EvalResult evaluate_control(const ParamStore& params, const PreparedData& data) {
    ad::Tape tape;
    const clf::ClassifierWeights cw = clf::bind_frozen(tape, params);
    const Matrix probs = raw_forward(cw, tape, data).probs.value();
    return finish_eval(probs, data.graph->edges, *data.graph);
}

void write_metrics_csv(const MetricsLog& log, std::ostream& out) {
    out << "epoch,disc_loss,gen_loss,reg_loss,ecl_total,class_loss,total,val_accuracy,test_accuracy\n";
    for (const EpochRecord& r : log) {
        out << r.epoch;
        for (double v : {r.disc_loss, r.gen_loss, r.reg_loss, r.ecl_total, r.class_loss, r.total, r.val_accuracy,
                         r.test_accuracy}) {
            out << ',' << format_double(v);
        }
        out << '\n';
    }
}

void write_timing_csv(const MetricsLog& log, std::ostream& out) {
    out << "epoch,wall_time\n";
    for (const EpochRecord& r : log) out << r.epoch << ',' << format_double(r.wall_time) << '\n';
}

void write_predictions(const Matrix& probs, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    const std::vector<int> pred = clf::predict(probs);
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        out << i << '\t' << pred[static_cast<std::size_t>(i)] << '\t' << format_double(probs.row(i).maxCoeff())
            << '\n';
    }
}

}  // namespace eclgsr
