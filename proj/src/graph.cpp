#include "eclgsr/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "eclgsr/rng.hpp"

namespace eclgsr {
namespace {

std::uint64_t pair_key(NodeId a, NodeId b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

// floor(ratio * count) tolerant to representation error, e.g. 0.29 * 100.
std::size_t ratio_count(double ratio, std::size_t count) {
    return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(count) + 1e-9));
}

}  // namespace

std::size_t Graph::num_classes() const {
    int max_label = kUnlabeled;
    for (int l : labels) max_label = std::max(max_label, l);
    return static_cast<std::size_t>(max_label + 1);
}

std::vector<std::vector<NodeId>> Graph::adjacency_lists() const {
    std::vector<std::vector<NodeId>> adj(num_nodes);
    for (const Edge& e : edges) {
        adj[e.src].push_back(e.dst);
        adj[e.dst].push_back(e.src);
    }
    for (auto& n : adj) std::sort(n.begin(), n.end());
    return adj;
}

void Graph::validate() const {
    if (features.rows() != static_cast<Eigen::Index>(num_nodes)) {
        throw std::invalid_argument("feature rows (" + std::to_string(features.rows()) + ") != node count (" +
                                    std::to_string(num_nodes) + ")");
    }
    if (!labels.empty() && labels.size() != num_nodes) throw std::invalid_argument("label vector length != node count");
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const Edge& e = edges[i];
        if (e.src >= num_nodes || e.dst >= num_nodes) throw std::invalid_argument("edge index out of range");
        if (e.src == e.dst) throw std::invalid_argument("self-loop in edge list");
        if (e.src > e.dst) throw std::invalid_argument("edge not canonical (src > dst)");
        if (i > 0 && !(edges[i - 1] < e)) throw std::invalid_argument("edge list not sorted or has duplicates");
    }
    std::vector<char> seen(num_nodes, 0);
    for (const auto* mask : {&train, &val, &test}) {
        for (NodeId v : *mask) {
            if (v >= num_nodes) throw std::invalid_argument("mask index out of range");
            if (seen[v]) throw std::invalid_argument("masks overlap at node " + std::to_string(v));
            seen[v] = 1;
            if (labels.empty() || labels[v] == kUnlabeled) {
                throw std::invalid_argument("masked node " + std::to_string(v) + " has no label");
            }
        }
    }
}

CanonicalEdges canonicalize_edges(const std::vector<std::pair<NodeId, NodeId>>& raw) {
    CanonicalEdges out;
    out.edges.reserve(raw.size());
    for (auto [a, b] : raw) {
        if (a == b) {
            ++out.self_loops;
            continue;
        }
        out.edges.push_back(Edge{std::min(a, b), std::max(a, b)});
    }
    std::sort(out.edges.begin(), out.edges.end());
    const auto last = std::unique(out.edges.begin(), out.edges.end());
    out.duplicates = static_cast<std::size_t>(out.edges.end() - last);
    out.edges.erase(last, out.edges.end());
    return out;
}

NormalizedAdjacency normalize_adjacency(std::size_t num_nodes, const std::vector<Edge>& edges) {
    std::vector<double> degree(num_nodes, 1.0);
    for (const Edge& e : edges) {
        degree[e.src] += 1.0;
        degree[e.dst] += 1.0;
    }
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(num_nodes + 2 * edges.size());
    for (std::size_t i = 0; i < num_nodes; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        triplets.emplace_back(ii, ii, 1.0 / degree[i]);
    }
    for (const Edge& e : edges) {
        const double w = 1.0 / std::sqrt(degree[e.src] * degree[e.dst]);
        triplets.emplace_back(e.src, e.dst, w);
        triplets.emplace_back(e.dst, e.src, w);
    }
    NormalizedAdjacency out;
    const auto n = static_cast<Eigen::Index>(num_nodes);
    out.matrix.resize(n, n);
    out.matrix.setFromTriplets(triplets.begin(), triplets.end());
    return out;
}

NormalizedAdjacency normalize_adjacency(const Graph& g) { return normalize_adjacency(g.num_nodes, g.edges); }

Graph perturb_edges(const Graph& g, double add_ratio, double remove_ratio, std::uint64_t seed) {
    if (add_ratio < 0.0) throw std::invalid_argument("perturb_edges: add_ratio must be >= 0");
    if (remove_ratio < 0.0 || remove_ratio > 1.0) throw std::invalid_argument("perturb_edges: remove_ratio not in [0,1]");
    const std::size_t m = g.num_edges();
    const std::size_t n_remove = std::min(m, ratio_count(remove_ratio, m));
    const std::size_t n_add = ratio_count(add_ratio, m);
    const std::size_t v = g.num_nodes;
    const std::size_t capacity = v < 2 ? 0 : v * (v - 1) / 2 - m;
    if (n_add > capacity) {
        throw std::invalid_argument("perturb_edges: graph too dense to add " + std::to_string(n_add) +
                                    " edges (only " + std::to_string(capacity) + " absent pairs)");
    }

    Rng rng(derive_seed(seed, {0x70657274ULL}));
    Graph out = g;

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<char> keep(m, 1);
    for (std::size_t i = 0; i < n_remove; ++i) keep[order[i]] = 0;
    out.edges.clear();
    for (std::size_t i = 0; i < m; ++i) {
        if (keep[i]) out.edges.push_back(g.edges[i]);
    }

    if (n_add > 0) {
        std::unordered_set<std::uint64_t> taken;
        taken.reserve(2 * (m + n_add));
        for (const Edge& e : g.edges) taken.insert(pair_key(e.src, e.dst));
        std::vector<Edge> added;
        added.reserve(n_add);
        if (2 * n_add > capacity) {
            // dense request: enumerate every absent pair and take a random subset
            std::vector<Edge> absent;
            absent.reserve(capacity);
            for (NodeId a = 0; a < v; ++a) {
                for (NodeId b = a + 1; b < v; ++b) {
                    if (!taken.count(pair_key(a, b))) absent.push_back(Edge{a, b});
                }
            }
            std::shuffle(absent.begin(), absent.end(), rng);
            added.assign(absent.begin(), absent.begin() + static_cast<std::ptrdiff_t>(n_add));
        } else {
            std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(v - 1));
            while (added.size() < n_add) {
                const NodeId a = pick(rng);
                const NodeId b = pick(rng);
                if (a == b) continue;
                if (!taken.insert(pair_key(a, b)).second) continue;
                added.push_back(Edge{std::min(a, b), std::max(a, b)});
            }
        }
        out.edges.insert(out.edges.end(), added.begin(), added.end());
        std::sort(out.edges.begin(), out.edges.end());
    }
    return out;
}

Graph sbm_generate(const SbmSpec& spec, std::uint64_t seed) {
    if (spec.p_intra < 0.0 || spec.p_intra > 1.0 || spec.p_inter < 0.0 || spec.p_inter > 1.0) {
        throw std::invalid_argument("sbm_generate: probabilities must lie in [0,1]");
    }
    if (spec.feat_dim < spec.blocks) throw std::invalid_argument("sbm_generate: feat_dim < blocks");
    if (spec.feat_noise < 0.0) throw std::invalid_argument("sbm_generate: negative feature noise");

    Graph g;
    g.num_nodes = spec.blocks * spec.nodes_per_block;
    g.labels.resize(g.num_nodes);
    for (std::size_t i = 0; i < g.num_nodes; ++i) g.labels[i] = static_cast<int>(i / spec.nodes_per_block);

    Rng edge_rng(derive_seed(seed, {1}));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (NodeId a = 0; a < g.num_nodes; ++a) {
        for (NodeId b = a + 1; b < g.num_nodes; ++b) {
            const double p = g.labels[a] == g.labels[b] ? spec.p_intra : spec.p_inter;
            // one draw per pair keeps the stream layout independent of p
            if (u(edge_rng) < p) g.edges.push_back(Edge{a, b});
        }
    }

    Rng feat_rng(derive_seed(seed, {2}));
    g.features = gaussian_matrix(static_cast<Eigen::Index>(g.num_nodes), static_cast<Eigen::Index>(spec.feat_dim),
                                 spec.feat_noise, feat_rng);
    for (std::size_t i = 0; i < g.num_nodes; ++i) g.features(static_cast<Eigen::Index>(i), g.labels[i]) += 1.0;
    return g;
}

SplitResult make_split(const Graph& g, const SplitSpec& spec) {
    const std::size_t num_classes = g.num_classes();
    std::vector<std::vector<NodeId>> by_class(num_classes);
    std::size_t labeled = 0;
    for (std::size_t i = 0; i < g.labels.size(); ++i) {
        if (g.labels[i] != kUnlabeled) {
            by_class[static_cast<std::size_t>(g.labels[i])].push_back(static_cast<NodeId>(i));
            ++labeled;
        }
    }

    Rng rng(derive_seed(spec.seed, {0x73706c6974ULL}));
    for (auto& members : by_class) std::shuffle(members.begin(), members.end(), rng);

    std::vector<std::size_t> per_class(num_classes, 0);
    std::size_t val_n = 0;
    std::size_t test_n = 0;
    if (spec.mode == SplitSpec::Mode::Standard) {
        for (std::size_t c = 0; c < num_classes; ++c) per_class[c] = std::min(spec.train_per_class, by_class[c].size());
        val_n = spec.val_count;
        test_n = spec.test_count;
    } else {
        if (!(spec.train_ratio > 0.0 && spec.train_ratio < 1.0) || spec.val_fraction < 0.0 || spec.test_fraction < 0.0) {
            throw std::invalid_argument("make_split: ratios out of range");
        }
        const auto total = static_cast<std::size_t>(std::llround(spec.train_ratio * static_cast<double>(labeled)));
        // largest-remainder apportionment of the train budget over classes
        std::vector<std::pair<double, std::size_t>> remainders;
        std::size_t assigned = 0;
        for (std::size_t c = 0; c < num_classes; ++c) {
            const double exact =
                static_cast<double>(total) * static_cast<double>(by_class[c].size()) / static_cast<double>(labeled);
            per_class[c] = static_cast<std::size_t>(std::floor(exact));
            assigned += per_class[c];
            remainders.emplace_back(exact - std::floor(exact), c);
        }
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t k = 0; assigned < total && k < remainders.size(); ++k, ++assigned) {
            ++per_class[remainders[k].second];
        }
        val_n = static_cast<std::size_t>(std::llround(spec.val_fraction * static_cast<double>(labeled)));
        test_n = static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(labeled)));
    }

    SplitResult result;
    result.graph = g;
    Graph& out = result.graph;
    out.train.clear();
    out.val.clear();
    out.test.clear();
    std::vector<NodeId> rest;
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (per_class[c] == 0) result.classes_without_train.push_back(static_cast<int>(c));
        const auto& members = by_class[c];
        out.train.insert(out.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(per_class[c]));
        rest.insert(rest.end(), members.begin() + static_cast<std::ptrdiff_t>(per_class[c]), members.end());
    }
    if (out.train.size() + val_n + test_n > labeled) {
        throw std::invalid_argument("make_split: requested " + std::to_string(out.train.size() + val_n + test_n) +
                                    " nodes but only " + std::to_string(labeled) + " are labeled");
    }
    std::sort(rest.begin(), rest.end());
    std::shuffle(rest.begin(), rest.end(), rng);
    out.val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(val_n));
    out.test.assign(rest.begin() + static_cast<std::ptrdiff_t>(val_n),
                    rest.begin() + static_cast<std::ptrdiff_t>(val_n + test_n));
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    std::sort(out.test.begin(), out.test.end());
    return result;
}

double intra_class_fraction(const Graph& g, const std::vector<Edge>& edges) {
    std::size_t both = 0;
    std::size_t same = 0;
    for (const Edge& e : edges) {
        const int a = g.labels.empty() ? kUnlabeled : g.labels[e.src];
        const int b = g.labels.empty() ? kUnlabeled : g.labels[e.dst];
        if (a == kUnlabeled || b == kUnlabeled) continue;
        ++both;
        if (a == b) ++same;
    }
    return both == 0 ? 0.0 : static_cast<double>(same) / static_cast<double>(both);
}

}  // namespace eclgsr
