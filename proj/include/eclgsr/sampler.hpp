#pragma once

#include <cstdint>
#include <vector>

#include "eclgsr/graph.hpp"
#include "eclgsr/struct_embed.hpp"

namespace eclgsr {

/// Node-induced subgraph of the dual-attribute graph.
struct Subgraph {
    std::vector<NodeId> node_ids;  ///< sorted, unique global indices
    NormalizedAdjacency local_adj;
    Matrix x_local;
};

/// Two augmented feature views over one subgraph; adjacency is shared.
struct ViewPair {
    Matrix view_a;
    Matrix view_b;
    const Subgraph* subgraph = nullptr;
};

/// Owns the subgraphs its pairs point into; move-only so those pointers stay
/// valid.
struct ViewBatch {
    ViewBatch() = default;
    ViewBatch(ViewBatch&&) = default;
    ViewBatch& operator=(ViewBatch&&) = default;
    ViewBatch(const ViewBatch&) = delete;
    ViewBatch& operator=(const ViewBatch&) = delete;

    std::vector<Subgraph> subgraphs;
    std::vector<ViewPair> pairs;

    std::size_t size() const { return pairs.size(); }
};

/// Restricts the global edge set to `nodes` (sorted) and normalizes it.
Subgraph induced_subgraph(const DualAttributeGraph& g, std::vector<NodeId> nodes);

/// `batch_n` subgraphs, each spanned by `edges_per_subgraph` edges drawn
/// uniformly with replacement. Subgraph n uses the child seed (seed, n).
std::vector<Subgraph> sample_subgraphs(const DualAttributeGraph& g, std::size_t batch_n, std::size_t edges_per_subgraph,
                                       std::uint64_t seed);

/// Two views x + eps_a and x + eps_b with i.i.d. Normal(0, sigma^2) noise.
ViewPair augment_pair(const Subgraph& sg, double sigma, std::uint64_t seed);

/// Subgraph sampling plus augmentation for a full mini-batch.
ViewBatch make_view_batch(const DualAttributeGraph& g, std::size_t batch_n, std::size_t edges_per_subgraph,
                          double sigma, std::uint64_t seed);

}  // namespace eclgsr
