#pragma once

#include <cstdint>
#include <vector>

#include "eclgsr/autodiff.hpp"
#include "eclgsr/ecl.hpp"
#include "eclgsr/graph.hpp"
#include "eclgsr/struct_embed.hpp"

namespace eclgsr::refine {

/// Largest node count handled with dense V x V matrices.
inline constexpr std::size_t kDenseLimit = 5000;
/// Hard cap for full-graph encoding.
inline constexpr std::size_t kMaxNodes = 50000;
/// Probabilities are clamped to [kProbEps, 1 - kProbEps] before the logit.
inline constexpr double kProbEps = 1e-6;

/// Encoder output for every node of the dual-attribute graph.
Matrix full_node_embeddings(const ParamStore& params, const DualAttributeGraph& g, const NormalizedAdjacency& adj);
/// Differentiable variant for end-to-end training.
ad::Var full_node_embeddings(const ecl::EclWeights& w, ad::Tape& tape, const DualAttributeGraph& g,
                             const NormalizedAdjacency& adj);

/// Pairs that receive an edge probability. `dense` means all pairs.
struct CandidateSet {
    bool dense = true;
    std::size_t num_nodes = 0;
    std::vector<Edge> pairs;
};

/// Dense for V <= dense_limit; otherwise existing edges plus each node's k
/// nearest neighbors by cosine (exact scan, ties to the lower index).
CandidateSet build_candidates(const Matrix& z, const Graph& g, std::size_t k, std::size_t dense_limit = kDenseLimit);

/// Edge probabilities (cos + 1) / 2, either as a dense symmetric matrix with
/// zero diagonal or as one value per candidate pair.
struct EdgeProbMatrix {
    bool dense = true;
    std::size_t num_nodes = 0;
    Matrix probs;               ///< dense mode
    std::vector<Edge> pairs;    ///< sparse mode
    Eigen::VectorXd values;     ///< sparse mode, aligned with pairs
};

EdgeProbMatrix edge_probabilities(const Matrix& z, const CandidateSet& candidates);
/// Differentiable dense probabilities (V x V, zero diagonal, exactly symmetric).
ad::Var edge_probabilities_dense(const ad::Var& z);
/// Differentiable per-pair probabilities (E x 1).
ad::Var edge_probabilities_pairs(const ad::Var& z, const std::vector<Edge>& pairs);

enum class BinarizeMode { Train, Eval };

/// Logistic noise log u - log(1 - u) for the unordered pair {i, j}; u is a
/// hash of (seed, min, max) so the draw is schedule independent.
double logistic_noise(std::uint64_t seed, NodeId i, NodeId j);

/// Relaxed-Bernoulli value sigmoid((logit(p) + noise) / t), p clamped.
double relaxed_value(double p, double noise, double temperature);

/// Refined adjacency in the same layout as its probabilities.
struct RefinedAdjacency {
    bool dense = true;
    BinarizeMode mode = BinarizeMode::Eval;
    std::size_t num_nodes = 0;
    Matrix values;               ///< dense mode
    std::vector<Edge> pairs;     ///< sparse mode
    Eigen::VectorXd weights;     ///< sparse mode

    /// Pairs with nonzero weight, canonical and sorted, with their weights.
    std::vector<Edge> edges(std::vector<double>* weights_out = nullptr) const;
};

/// Train: relaxed draw per unordered pair. Eval: 1 if p >= 0.5 else 0.
RefinedAdjacency binarize(const EdgeProbMatrix& probs, double temperature, BinarizeMode mode, std::uint64_t seed);

/// Differentiable relaxed draw over a dense probability matrix; zero diagonal.
ad::Var relaxed_bernoulli_dense(const ad::Var& probs, double temperature, std::uint64_t seed);
/// Differentiable relaxed draw over per-pair probabilities.
ad::Var relaxed_bernoulli_pairs(const ad::Var& probs, const std::vector<Edge>& pairs, double temperature,
                                std::uint64_t seed);

}  // namespace eclgsr::refine
