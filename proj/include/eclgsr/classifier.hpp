#pragma once

#include <vector>

#include "eclgsr/autodiff.hpp"
#include "eclgsr/graph.hpp"
#include "eclgsr/param_store.hpp"

namespace eclgsr::clf {

/// Three graph convolutions in -> hidden -> hidden -> classes, ReLU between.
struct ClassifierArch {
    Eigen::Index in_dim = 0;
    Eigen::Index hidden = 64;
    Eigen::Index num_classes = 0;
};

inline constexpr const char* kW1 = "clf.w1";
inline constexpr const char* kW2 = "clf.w2";
inline constexpr const char* kW3 = "clf.w3";

void init_params(ParamStore& store, const ClassifierArch& arch, Rng& rng);

struct ClassifierWeights {
    ad::Var w1, w2, w3;
};
ClassifierWeights bind_trainable(ad::Tape& tape, ParamStore& store);
ClassifierWeights bind_frozen(ad::Tape& tape, const ParamStore& store);

struct ClassifierOutput {
    ad::Var logits;  ///< H, V x C
    ad::Var probs;   ///< row softmax of H
};

/// Dense weighted adjacency (no self-loops) -> D^-1/2 (A + I) D^-1/2, built
/// with differentiable ops so gradients reach the adjacency weights.
ad::Var normalize_dense(const ad::Var& adjacency);

/// Classifier over a dense refined adjacency.
ClassifierOutput classify(const ClassifierWeights& w, const ad::Var& adjacency, const ad::Var& x);
/// Classifier over weighted candidate pairs (sparse refined adjacency).
ClassifierOutput classify_pairs(const ClassifierWeights& w, const std::vector<Edge>& pairs, const ad::Var& weights,
                                const ad::Var& x);
/// Classifier over a fixed normalized operator (raw-graph control).
ClassifierOutput classify_fixed(const ClassifierWeights& w, const SparseMatrix& adj, const ad::Var& x);

/// Y = D^-1/2 (W + I) D^-1/2 X for symmetric weights on `pairs`; gradients
/// flow to both the per-pair weights (E x 1) and X.
ad::Var weighted_propagate(const std::vector<Edge>& pairs, const ad::Var& weights, const ad::Var& x);

/// Mean over `mask` of -log(max(probs[i, y_i], 1e-12)).
ad::Var ce_loss(const ad::Var& probs, const std::vector<int>& labels, const std::vector<NodeId>& mask);

/// Fraction of masked nodes whose argmax class (lowest index on ties) equals
/// the label.
double accuracy(const Matrix& probs, const std::vector<int>& labels, const std::vector<NodeId>& mask);

/// Row-wise argmax, ties to the lowest index.
std::vector<int> predict(const Matrix& probs);

}  // namespace eclgsr::clf
