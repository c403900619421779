#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <ostream>
#include <vector>

#include "eclgsr/classifier.hpp"
#include "eclgsr/config.hpp"
#include "eclgsr/ecl.hpp"
#include "eclgsr/refine.hpp"

namespace eclgsr {

/// Graph with masks installed, its dual-attribute form and propagation operator.
struct PreparedData {
    std::shared_ptr<const Graph> graph;
    DualAttributeGraph dual;
    NormalizedAdjacency adj;
};

/// Builds the graph for `cfg` (load or SBM), installs the split, applies the
/// configured perturbation and computes X^s on the resulting graph.
PreparedData prepare_data(const TrainConfig& cfg);
/// Same, from an already built graph (masks installed) and explicit X^s.
PreparedData prepare_data(Graph g, const Matrix& x_s);
/// The graph of `cfg` with masks installed and the perturbation applied.
Graph build_graph(const TrainConfig& cfg);

struct EpochRecord {
    std::size_t epoch = 0;
    double disc_loss = 0.0;
    double gen_loss = 0.0;
    double reg_loss = 0.0;
    double ecl_total = 0.0;
    double class_loss = 0.0;
    double total = 0.0;  ///< ecl_total + mu * class_loss
    double val_accuracy = 0.0;
    double test_accuracy = 0.0;
    double wall_time = 0.0;  ///< seconds since training started
};

using MetricsLog = std::vector<EpochRecord>;

/// metrics.csv: header plus one row per epoch, every field except wall_time
/// (kept out so that equal seeds give byte-equal files).
void write_metrics_csv(const MetricsLog& log, std::ostream& out);
/// timing.csv: epoch, wall_time.
void write_timing_csv(const MetricsLog& log, std::ostream& out);

struct TrainResult {
    ParamStore params;  ///< selected weights (best val or final epoch)
    MetricsLog log;
    std::size_t selected_epoch = 0;  ///< 0 when no epoch ran
};

/// Creates ECL encoder/projector and classifier parameters for `data`.
ParamStore init_model(const TrainConfig& cfg, const PreparedData& data);
/// Classifier-only parameters, initialized exactly as in init_model.
ParamStore init_classifier(const TrainConfig& cfg, const PreparedData& data);

/// Batches per epoch: ceil(M / (N * m)), at least one.
std::size_t batches_per_epoch(const TrainConfig& cfg, std::size_t num_edges);

/// Classifier loss on the train mask through a relaxed refined graph drawn
/// with `noise_seed` from the encoder embeddings of the whole graph.
ad::Var refined_class_loss(const TrainConfig& cfg, const PreparedData& data, ad::Tape& tape, const ecl::EclWeights& ew,
                           const clf::ClassifierWeights& cw, std::uint64_t noise_seed);
/// End-to-end training of encoder and classifier on L_E + mu * L_C.
TrainResult train(const TrainConfig& cfg, const PreparedData& data);
/// Plain GCN on the unrefined graph, same classifier, schedule and steps.
TrainResult train_control(const TrainConfig& cfg, const PreparedData& data);

struct EvalResult {
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::size_t refined_edges = 0;
    double refined_intra_fraction = 0.0;
    double raw_intra_fraction = 0.0;
    Matrix probs;
    std::vector<Edge> edges;  ///< graph the classifier saw
};

/// Hard-thresholded refined graph, classifier on (A~, X).
EvalResult evaluate(const TrainConfig& cfg, const ParamStore& params, const PreparedData& data);
/// Classifier on the raw graph.
EvalResult evaluate_control(const ParamStore& params, const PreparedData& data);

/// Eval-mode refined adjacency.
refine::RefinedAdjacency refined_adjacency(const TrainConfig& cfg, const ParamStore& params, const PreparedData& data);

/// "node<TAB>predicted_label<TAB>max_prob" per node.
void write_predictions(const Matrix& probs, const std::filesystem::path& file);

}  // namespace eclgsr
