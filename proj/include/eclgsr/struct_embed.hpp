#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "eclgsr/graph.hpp"
#include "eclgsr/rng.hpp"

namespace eclgsr {

/// Uniform random walks, `walks_per_node` rooted at every node.
struct WalkCorpus {
    std::vector<std::vector<NodeId>> walks;
    std::size_t walk_length = 0;
    std::size_t walks_per_node = 0;
    std::size_t num_nodes = 0;
    /// Graph degree of each node; feeds the negative-sampling table.
    std::vector<double> degrees;
};

/// Walks stop early at a node without neighbors. Each (root, repetition)
/// pair draws from its own derived seed.
WalkCorpus random_walks(const Graph& g, std::size_t walk_length, std::size_t walks_per_node, std::uint64_t seed);

struct SkipGramConfig {
    std::size_t dim = 128;
    std::size_t window = 5;
    std::size_t negatives = 5;
    std::size_t epochs = 5;
    double lr = 0.025;  ///< linearly decayed to lr * 1e-4 over training
    std::uint64_t seed = 0;
};

/// Skip-gram with negative sampling: input vectors (the embedding) and
/// output (context) vectors, updated by plain SGD on
/// -log s(h.o_ctx) - sum log s(-h.o_neg).
class SkipGramModel {
  public:
    /// Inputs start uniform in (-0.5/dim, 0.5/dim), outputs at zero.
    SkipGramModel(std::size_t num_nodes, std::size_t dim, std::uint64_t seed);
    SkipGramModel(Matrix input, Matrix output);

    /// One SGD update for a (center, context) pair plus negatives. Returns the
    /// pair loss evaluated before the update.
    double step(NodeId center, NodeId context, std::span<const NodeId> negatives, double lr);
    /// Loss of the pair under the current tables (no update).
    double pair_loss(NodeId center, NodeId context, std::span<const NodeId> negatives) const;

    const Matrix& input() const { return input_; }
    const Matrix& output() const { return output_; }

  private:
    Matrix input_;
    Matrix output_;
    Eigen::RowVectorXd scratch_;
};

struct SkipGramResult {
    Matrix embedding;
    /// Mean pair loss per epoch, measured while training.
    std::vector<double> epoch_loss;
};

SkipGramResult train_skipgram(const WalkCorpus& corpus, const SkipGramConfig& cfg);

struct DeepWalkConfig {
    std::size_t walk_length = 40;
    std::size_t walks_per_node = 10;
    std::size_t window = 5;
    std::size_t negatives = 5;
    std::size_t epochs = 5;
    double lr = 0.025;
};

/// Walks plus skip-gram with D_s equal to the feature width of `g`.
Matrix structural_embedding(const Graph& g, const DeepWalkConfig& cfg, std::uint64_t seed);

/// Graph whose node attributes are [X^c, X^s].
struct DualAttributeGraph {
    std::shared_ptr<const Graph> graph;
    Matrix x_dual;

    std::size_t num_nodes() const { return graph->num_nodes; }
    Eigen::Index contextual_dim() const { return graph->features.cols(); }
};

/// Plain column concatenation; X^s must match X^c in rows and columns.
DualAttributeGraph build_dual(std::shared_ptr<const Graph> g, const Matrix& x_s);

}  // namespace eclgsr
