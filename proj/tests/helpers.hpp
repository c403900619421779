#pragma once

#include <cmath>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "eclgsr/graph.hpp"
#include "eclgsr/matrix.hpp"
#include "eclgsr/rng.hpp"
#include "eclgsr/sampler.hpp"
#include "eclgsr/struct_embed.hpp"

namespace testutil {

using eclgsr::Edge;
using eclgsr::Graph;
using eclgsr::Matrix;
using eclgsr::NodeId;

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0) {
    eclgsr::Rng rng(seed);
    return eclgsr::gaussian_matrix(rows, cols, scale, rng);
}

inline Graph make_graph(std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& pairs, Eigen::Index feat_dim = 2,
                        std::uint64_t seed = 1) {
    Graph g;
    g.num_nodes = n;
    g.edges = eclgsr::canonicalize_edges(pairs).edges;
    g.features = random_matrix(static_cast<Eigen::Index>(n), feat_dim, seed);
    g.labels.assign(n, 0);
    return g;
}

/// Small labeled SBM with masks, features and a dual-attribute form whose X^s
/// is random (no DeepWalk, keeps tests fast).
struct Toy {
    std::shared_ptr<const Graph> graph;
    eclgsr::DualAttributeGraph dual;
};

inline Toy toy_sbm(std::uint64_t seed, std::size_t blocks = 2, std::size_t per_block = 6, std::size_t feat_dim = 4) {
    eclgsr::SbmSpec spec{blocks, per_block, 0.7, 0.1, feat_dim, 0.3};
    Graph g = eclgsr::sbm_generate(spec, seed);
    g = eclgsr::make_split(g, eclgsr::SplitSpec::ratio(0.3, 0.3, 0.3, seed)).graph;
    auto shared = std::make_shared<const Graph>(std::move(g));
    const Matrix xs = random_matrix(shared->features.rows(), shared->features.cols(), seed + 101, 0.5);
    return Toy{shared, eclgsr::build_dual(shared, xs)};
}

/// Dense symmetric normalized adjacency by explicit loops.
inline Matrix loop_normalized(std::size_t n, const std::vector<Edge>& edges) {
    Matrix a = Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (const Edge& e : edges) a(e.src, e.dst) = a(e.dst, e.src) = 1.0;
    Matrix out = a;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            double di = 0.0, dj = 0.0;
            for (Eigen::Index k = 0; k < a.cols(); ++k) {
                di += a(i, k);
                dj += a(j, k);
            }
            out(i, j) = a(i, j) / std::sqrt(di * dj);
        }
    }
    return out;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
    return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) {
        path = std::filesystem::temp_directory_path() / ("eclgsr_test_" + name + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace testutil
