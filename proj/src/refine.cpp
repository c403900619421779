#include "eclgsr/refine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "eclgsr/ops.hpp"
#include "eclgsr/rng.hpp"

namespace eclgsr::refine {
namespace {

void check_size(std::size_t v) {
    if (v > kMaxNodes) {
        throw std::length_error("graph has " + std::to_string(v) + " nodes; full-graph encoding is capped at " +
                                std::to_string(kMaxNodes));
    }
}

Matrix normalized_rows(const Matrix& z) {
    Matrix y = Matrix::Zero(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double n = z.row(i).norm();
        if (n > 0.0) y.row(i) = z.row(i) / n;
    }
    return y;
}

Matrix logistic_noise_matrix(std::size_t v, std::uint64_t seed) {
    const auto n = static_cast<Eigen::Index>(v);
    Matrix noise = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double l = logistic_noise(seed, static_cast<NodeId>(i), static_cast<NodeId>(j));
            noise(i, j) = l;
            noise(j, i) = l;
        }
    }
    return noise;
}

ad::Var relaxed(const ad::Var& probs, const Matrix& noise, double temperature) {
    if (!(temperature > 0.0)) throw std::invalid_argument("relaxed Bernoulli temperature must be positive");
    ad::Var p = ad::clamp(probs, kProbEps, 1.0 - kProbEps);
    ad::Var logit = ad::sub(ad::log(p), ad::log(ad::add_scalar(ad::neg(p), 1.0)));
    ad::Var x = ad::scale(ad::add(logit, probs.tape().constant(noise)), 1.0 / temperature);
    return ad::sigmoid(x);
}

}  // namespace

Matrix full_node_embeddings(const ParamStore& params, const DualAttributeGraph& g, const NormalizedAdjacency& adj) {
    check_size(g.num_nodes());
    ad::Tape tape;
    ecl::EclWeights w = ecl::bind_frozen(tape, params);
    return ecl::encode(w, adj.matrix, tape.constant(g.x_dual)).value();
}

ad::Var full_node_embeddings(const ecl::EclWeights& w, ad::Tape& tape, const DualAttributeGraph& g,
                             const NormalizedAdjacency& adj) {
    check_size(g.num_nodes());
    return ecl::encode(w, adj.matrix, tape.constant(g.x_dual));
}

CandidateSet build_candidates(const Matrix& z, const Graph& g, std::size_t k, std::size_t dense_limit) {
    CandidateSet out;
    out.num_nodes = g.num_nodes;
    if (static_cast<std::size_t>(z.rows()) != g.num_nodes) throw ShapeError("build_candidates: embedding rows != V");
    if (g.num_nodes <= dense_limit) return out;

    out.dense = false;
    std::vector<std::pair<NodeId, NodeId>> raw;
    raw.reserve(g.edges.size() + g.num_nodes * k);
    for (const Edge& e : g.edges) raw.emplace_back(e.src, e.dst);
    if (k > 0) {
        const Matrix y = normalized_rows(z);
        const Eigen::Index n = y.rows();
        const Eigen::Index block = 256;
        std::vector<std::pair<double, NodeId>> scored(static_cast<std::size_t>(n));
        for (Eigen::Index start = 0; start < n; start += block) {
            const Eigen::Index rows = std::min(block, n - start);
            const Matrix sims = y.middleRows(start, rows) * y.transpose();
            for (Eigen::Index r = 0; r < rows; ++r) {
                const Eigen::Index i = start + r;
                scored.clear();
                for (Eigen::Index j = 0; j < n; ++j) {
                    if (j != i) scored.emplace_back(sims(r, j), static_cast<NodeId>(j));
                }
                const std::size_t take = std::min<std::size_t>(k, scored.size());
                std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                                  [](const auto& a, const auto& b) {
                                      return a.first > b.first || (a.first == b.first && a.second < b.second);
                                  });
                for (std::size_t t = 0; t < take; ++t) raw.emplace_back(static_cast<NodeId>(i), scored[t].second);
            }
        }
    }
    out.pairs = canonicalize_edges(raw).edges;
    return out;
}

EdgeProbMatrix edge_probabilities(const Matrix& z, const CandidateSet& candidates) {
    if (z.rows() < 2) throw std::invalid_argument("edge_probabilities: needs at least two nodes");
    ad::Tape tape;
    ad::Var zv = tape.constant(z);
    EdgeProbMatrix out;
    out.num_nodes = static_cast<std::size_t>(z.rows());
    out.dense = candidates.dense;
    if (candidates.dense) {
        out.probs = edge_probabilities_dense(zv).value();
    } else {
        out.pairs = candidates.pairs;
        out.values = edge_probabilities_pairs(zv, candidates.pairs).value().col(0);
    }
    return out;
}

ad::Var edge_probabilities_dense(const ad::Var& z) {
    const Eigen::Index n = z.rows();
    ad::Var y = ad::l2_normalize_rows(z);
    ad::Var cos = ad::matmul(y, ad::transpose(y));
    // (c + c^T) / 2 makes the result symmetric to the last bit
    ad::Var sym = ad::scale(ad::add(cos, ad::transpose(cos)), 0.5);
    ad::Var prob = ad::scale(ad::add_scalar(sym, 1.0), 0.5);
    Matrix off_diag = Matrix::Ones(n, n) - Matrix::Identity(n, n);
    return ad::mul(prob, z.tape().constant(std::move(off_diag)));
}

ad::Var edge_probabilities_pairs(const ad::Var& z, const std::vector<Edge>& pairs) {
    if (pairs.empty()) return z.tape().constant(Matrix::Zero(0, 1));
    ad::Var y = ad::l2_normalize_rows(z);
    std::vector<Eigen::Index> src, dst;
    src.reserve(pairs.size());
    dst.reserve(pairs.size());
    for (const Edge& e : pairs) {
        src.push_back(e.src);
        dst.push_back(e.dst);
    }
    ad::Var cos = ad::row_sum(ad::mul(ad::gather_rows(y, src), ad::gather_rows(y, dst)));
    return ad::scale(ad::add_scalar(cos, 1.0), 0.5);
}

double logistic_noise(std::uint64_t seed, NodeId i, NodeId j) {
    const double u = hashed_uniform(seed, std::min(i, j), std::max(i, j));
    return std::log(u) - std::log1p(-u);
}

double relaxed_value(double p, double noise, double temperature) {
    if (!(temperature > 0.0)) throw std::invalid_argument("relaxed_value: temperature must be positive");
    const double pc = std::clamp(p, kProbEps, 1.0 - kProbEps);
    const double x = (std::log(pc) - std::log(1.0 - pc) + noise) / temperature;
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::vector<Edge> RefinedAdjacency::edges(std::vector<double>* weights_out) const {
    std::vector<Edge> out;
    if (weights_out) weights_out->clear();
    if (dense) {
        for (Eigen::Index i = 0; i < values.rows(); ++i) {
            for (Eigen::Index j = i + 1; j < values.cols(); ++j) {
                if (values(i, j) != 0.0) {
                    out.push_back(Edge{static_cast<NodeId>(i), static_cast<NodeId>(j)});
                    if (weights_out) weights_out->push_back(values(i, j));
                }
            }
        }
    } else {
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            if (weights(static_cast<Eigen::Index>(k)) != 0.0) {
                out.push_back(pairs[k]);
                if (weights_out) weights_out->push_back(weights(static_cast<Eigen::Index>(k)));
            }
        }
    }
    return out;
}

RefinedAdjacency binarize(const EdgeProbMatrix& probs, double temperature, BinarizeMode mode, std::uint64_t seed) {
    if (!(temperature > 0.0)) throw std::invalid_argument("binarize: temperature must be positive");
    RefinedAdjacency out;
    out.dense = probs.dense;
    out.mode = mode;
    out.num_nodes = probs.num_nodes;
    auto hard = [](double p) { return p >= 0.5 ? 1.0 : 0.0; };
    if (probs.dense) {
        const Eigen::Index n = probs.probs.rows();
        out.values = Matrix::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) {
                const double p = probs.probs(i, j);
                const double v = mode == BinarizeMode::Eval
                                     ? hard(p)
                                     : relaxed_value(p, logistic_noise(seed, static_cast<NodeId>(i), static_cast<NodeId>(j)),
                                                     temperature);
                out.values(i, j) = v;
                out.values(j, i) = v;
            }
        }
    } else {
        out.pairs = probs.pairs;
        out.weights.resize(probs.values.size());
        for (std::size_t k = 0; k < probs.pairs.size(); ++k) {
            const double p = probs.values(static_cast<Eigen::Index>(k));
            const Edge& e = probs.pairs[k];
            out.weights(static_cast<Eigen::Index>(k)) =
                mode == BinarizeMode::Eval ? hard(p) : relaxed_value(p, logistic_noise(seed, e.src, e.dst), temperature);
        }
    }
    return out;
}

ad::Var relaxed_bernoulli_dense(const ad::Var& probs, double temperature, std::uint64_t seed) {
    const Eigen::Index n = probs.rows();
    if (probs.cols() != n) throw ShapeError("relaxed_bernoulli_dense: square matrix expected");
    const Matrix noise = logistic_noise_matrix(static_cast<std::size_t>(n), seed);
    ad::Var values = relaxed(probs, noise, temperature);
    Matrix off_diag = Matrix::Ones(n, n) - Matrix::Identity(n, n);
    return ad::mul(values, probs.tape().constant(std::move(off_diag)));
}

ad::Var relaxed_bernoulli_pairs(const ad::Var& probs, const std::vector<Edge>& pairs, double temperature,
                                std::uint64_t seed) {
    if (static_cast<std::size_t>(probs.rows()) != pairs.size() || probs.cols() != 1) {
        throw ShapeError("relaxed_bernoulli_pairs: one probability per pair expected");
    }
    Matrix noise(probs.rows(), 1);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        noise(static_cast<Eigen::Index>(k), 0) = logistic_noise(seed, pairs[k].src, pairs[k].dst);
    }
    return relaxed(probs, noise, temperature);
}

}  // namespace eclgsr::refine
