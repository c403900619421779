#include "eclgsr/sampler.hpp"

#include <algorithm>
#include <stdexcept>

#include "eclgsr/rng.hpp"

namespace eclgsr {

Subgraph induced_subgraph(const DualAttributeGraph& g, std::vector<NodeId> nodes) {
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    const Graph& graph = *g.graph;

    std::vector<Edge> local_edges;
    // edges are sorted by (src, dst); scan each member's outgoing block
    for (std::size_t li = 0; li < nodes.size(); ++li) {
        const NodeId u = nodes[li];
        auto it = std::lower_bound(graph.edges.begin(), graph.edges.end(), Edge{u, 0});
        for (; it != graph.edges.end() && it->src == u; ++it) {
            auto pos = std::lower_bound(nodes.begin(), nodes.end(), it->dst);
            if (pos != nodes.end() && *pos == it->dst) {
                local_edges.push_back(Edge{static_cast<NodeId>(li), static_cast<NodeId>(pos - nodes.begin())});
            }
        }
    }

    Subgraph sg;
    sg.local_adj = normalize_adjacency(nodes.size(), local_edges);
    sg.x_local.resize(static_cast<Eigen::Index>(nodes.size()), g.x_dual.cols());
    for (std::size_t li = 0; li < nodes.size(); ++li) {
        sg.x_local.row(static_cast<Eigen::Index>(li)) = g.x_dual.row(nodes[li]);
    }
    sg.node_ids = std::move(nodes);
    return sg;
}

std::vector<Subgraph> sample_subgraphs(const DualAttributeGraph& g, std::size_t batch_n, std::size_t edges_per_subgraph,
                                       std::uint64_t seed) {
    const auto& edges = g.graph->edges;
    if (edges.empty()) throw std::invalid_argument("sample_subgraphs: graph has no edges");
    if (batch_n < 2) throw std::invalid_argument("sample_subgraphs: batch size N must be at least 2");
    if (edges_per_subgraph == 0) throw std::invalid_argument("sample_subgraphs: edges_per_subgraph must be positive");

    std::vector<Subgraph> out;
    out.reserve(batch_n);
    for (std::size_t n = 0; n < batch_n; ++n) {
        Rng rng(derive_seed(seed, {n}));
        std::uniform_int_distribution<std::size_t> pick(0, edges.size() - 1);
        std::vector<NodeId> nodes;
        nodes.reserve(2 * edges_per_subgraph);
        for (std::size_t k = 0; k < edges_per_subgraph; ++k) {
            const Edge& e = edges[pick(rng)];
            nodes.push_back(e.src);
            nodes.push_back(e.dst);
        }
        out.push_back(induced_subgraph(g, std::move(nodes)));
    }
    return out;
}

ViewPair augment_pair(const Subgraph& sg, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw std::invalid_argument("augment_pair: sigma must be >= 0");
    ViewPair pair;
    pair.subgraph = &sg;
    Rng rng_a(derive_seed(seed, {0}));
    Rng rng_b(derive_seed(seed, {1}));
    pair.view_a = sg.x_local + gaussian_matrix(sg.x_local.rows(), sg.x_local.cols(), sigma, rng_a);
    pair.view_b = sg.x_local + gaussian_matrix(sg.x_local.rows(), sg.x_local.cols(), sigma, rng_b);
    return pair;
}

ViewBatch make_view_batch(const DualAttributeGraph& g, std::size_t batch_n, std::size_t edges_per_subgraph,
                          double sigma, std::uint64_t seed) {
    ViewBatch batch;
    batch.subgraphs = sample_subgraphs(g, batch_n, edges_per_subgraph, derive_seed(seed, {0x737562ULL}));
    batch.pairs.reserve(batch.subgraphs.size());
    for (std::size_t n = 0; n < batch.subgraphs.size(); ++n) {
        batch.pairs.push_back(augment_pair(batch.subgraphs[n], sigma, derive_seed(seed, {0x617567ULL, n})));
    }
    return batch;
}

}  // namespace eclgsr
