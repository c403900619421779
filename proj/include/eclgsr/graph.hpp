#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eclgsr/matrix.hpp"

namespace eclgsr {

/// Undirected edge stored once with src < dst.
struct Edge {
    NodeId src = 0;
    NodeId dst = 0;

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline constexpr int kUnlabeled = -1;

/// Attributed graph with optional node labels and train/val/test masks.
///
/// Edges are canonical (src < dst), sorted and unique; self-loops are never
/// stored. Masks are pairwise disjoint and only contain labeled nodes.
struct Graph {
    std::size_t num_nodes = 0;
    std::vector<Edge> edges;
    Matrix features;
    std::vector<int> labels;  ///< kUnlabeled or a class index in [0, C)
    std::vector<NodeId> train;
    std::vector<NodeId> val;
    std::vector<NodeId> test;

    std::size_t num_edges() const { return edges.size(); }
    /// 1 + max label, or 0 when no node is labeled.
    std::size_t num_classes() const;
    /// Sorted neighbor lists.
    std::vector<std::vector<NodeId>> adjacency_lists() const;
    /// Throws std::invalid_argument describing the first violated invariant.
    void validate() const;
};

/// Sorts, canonicalizes (src < dst) and deduplicates an edge list. Self-loops
/// are removed and counted.
struct CanonicalEdges {
    std::vector<Edge> edges;
    std::size_t self_loops = 0;
    std::size_t duplicates = 0;
};
CanonicalEdges canonicalize_edges(const std::vector<std::pair<NodeId, NodeId>>& raw);

/// Symmetric GCN propagation operator D^-1/2 (A + I) D^-1/2.
struct NormalizedAdjacency {
    SparseMatrix matrix;

    Eigen::Index size() const { return matrix.rows(); }
    Matrix to_dense() const { return Matrix(matrix); }
};

NormalizedAdjacency normalize_adjacency(const Graph& g);
/// Same operator over an explicit node count and edge list.
NormalizedAdjacency normalize_adjacency(std::size_t num_nodes, const std::vector<Edge>& edges);

/// Removes floor(remove_ratio * M) uniformly chosen edges and adds
/// floor(add_ratio * M) uniformly chosen pairs absent from the input graph.
Graph perturb_edges(const Graph& g, double add_ratio, double remove_ratio, std::uint64_t seed);

struct SbmSpec {
    std::size_t blocks = 4;
    std::size_t nodes_per_block = 50;
    double p_intra = 0.1;
    double p_inter = 0.02;
    std::size_t feat_dim = 32;
    double feat_noise = 0.1;
};

/// Stochastic block model with one-hot block centroids plus Gaussian noise as
/// features and block ids as labels. Masks are left empty.
Graph sbm_generate(const SbmSpec& spec, std::uint64_t seed);

struct SplitSpec {
    enum class Mode { Standard, Ratio };
    Mode mode = Mode::Ratio;
    // standard mode
    std::size_t train_per_class = 20;
    std::size_t val_count = 500;
    std::size_t test_count = 1000;
    // ratio mode
    double train_ratio = 0.1;
    double val_fraction = 0.2;
    double test_fraction = 0.2;
    std::uint64_t seed = 0;

    static SplitSpec standard(std::uint64_t seed = 0) {
        SplitSpec s;
        s.mode = Mode::Standard;
        s.seed = seed;
        return s;
    }
    static SplitSpec ratio(double train, double val = 0.2, double test = 0.2, std::uint64_t seed = 0) {
        SplitSpec s;
        s.train_ratio = train;
        s.val_fraction = val;
        s.test_fraction = test;
        s.seed = seed;
        return s;
    }
};

struct SplitResult {
    Graph graph;
    /// Classes that received no training node.
    std::vector<int> classes_without_train;
};

/// Installs masks drawn from labeled nodes. Training picks are stratified by
/// class; val and test are drawn from the remaining nodes.
SplitResult make_split(const Graph& g, const SplitSpec& spec);

/// Fraction of edges whose two endpoints are labeled with the same class,
/// among edges whose endpoints are both labeled. NaN-free: 0 with no such edge.
double intra_class_fraction(const Graph& g, const std::vector<Edge>& edges);

}  // namespace eclgsr
