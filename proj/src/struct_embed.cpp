#include "eclgsr/struct_embed.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace eclgsr {
namespace {

double log_sigmoid(double x) {
    // log(1 / (1 + e^-x)) without overflow
    return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

WalkCorpus random_walks(const Graph& g, std::size_t walk_length, std::size_t walks_per_node, std::uint64_t seed) {
    if (g.num_nodes == 0) throw std::invalid_argument("random_walks: empty graph");
    const auto adj = g.adjacency_lists();
    WalkCorpus corpus;
    corpus.walk_length = walk_length;
    corpus.walks_per_node = walks_per_node;
    corpus.num_nodes = g.num_nodes;
    corpus.degrees.resize(g.num_nodes);
    for (std::size_t v = 0; v < g.num_nodes; ++v) corpus.degrees[v] = static_cast<double>(adj[v].size());
    if (walk_length == 0) return corpus;

    corpus.walks.reserve(g.num_nodes * walks_per_node);
    for (std::size_t r = 0; r < walks_per_node; ++r) {
        for (std::size_t root = 0; root < g.num_nodes; ++root) {
            Rng rng(derive_seed(seed, {root, r}));
            std::vector<NodeId> walk;
            walk.reserve(walk_length);
            walk.push_back(static_cast<NodeId>(root));
            while (walk.size() < walk_length) {
                const auto& nbrs = adj[walk.back()];
                if (nbrs.empty()) break;
                std::uniform_int_distribution<std::size_t> pick(0, nbrs.size() - 1);
                walk.push_back(nbrs[pick(rng)]);
            }
            corpus.walks.push_back(std::move(walk));
        }
    }
    return corpus;
}

SkipGramModel::SkipGramModel(std::size_t num_nodes, std::size_t dim, std::uint64_t seed) {
    if (dim == 0) throw std::invalid_argument("skip-gram dimension must be positive");
    const auto n = static_cast<Eigen::Index>(num_nodes);
    const auto d = static_cast<Eigen::Index>(dim);
    Rng rng(derive_seed(seed, {0x736b6970ULL}));
    const double half = 0.5 / static_cast<double>(dim);
    std::uniform_real_distribution<double> u(-half, half);
    input_.resize(n, d);
    for (Eigen::Index i = 0; i < input_.size(); ++i) input_.data()[i] = u(rng);
    output_ = Matrix::Zero(n, d);
    scratch_.resize(d);
}

SkipGramModel::SkipGramModel(Matrix input, Matrix output) : input_(std::move(input)), output_(std::move(output)) {
    if (input_.rows() != output_.rows() || input_.cols() != output_.cols()) {
        throw ShapeError("skip-gram tables must have equal shapes");
    }
    scratch_.resize(input_.cols());
}

double SkipGramModel::pair_loss(NodeId center, NodeId context, std::span<const NodeId> negatives) const {
    double loss = -log_sigmoid(input_.row(center).dot(output_.row(context)));
    for (NodeId neg : negatives) loss -= log_sigmoid(-input_.row(center).dot(output_.row(neg)));
    return loss;
}

double SkipGramModel::step(NodeId center, NodeId context, std::span<const NodeId> negatives, double lr) {
    scratch_.setZero();
    double loss = 0.0;
    auto update = [&](NodeId target, double label) {
        const double score = input_.row(center).dot(output_.row(target));
        loss -= label > 0.0 ? log_sigmoid(score) : log_sigmoid(-score);
        const double g = (label - sigmoid(score)) * lr;
        scratch_ += g * output_.row(target);
        output_.row(target) += g * input_.row(center);
    };
    update(context, 1.0);
    for (NodeId neg : negatives) update(neg, 0.0);
    input_.row(center) += scratch_;
    return loss;
}

SkipGramResult train_skipgram(const WalkCorpus& corpus, const SkipGramConfig& cfg) {
    if (cfg.dim == 0) throw std::invalid_argument("train_skipgram: dim must be positive");
    if (corpus.walks.empty()) throw std::invalid_argument("train_skipgram: empty corpus");

    SkipGramModel model(corpus.num_nodes, cfg.dim, cfg.seed);
    SkipGramResult result;
    if (cfg.epochs == 0) {
        result.embedding = model.input();
        return result;
    }

    std::vector<double> weights(corpus.num_nodes, 0.0);
    bool any = false;
    for (std::size_t v = 0; v < corpus.num_nodes; ++v) {
        weights[v] = std::pow(corpus.degrees.empty() ? 0.0 : corpus.degrees[v], 0.75);
        any = any || weights[v] > 0.0;
    }
    if (!any) std::fill(weights.begin(), weights.end(), 1.0);
    std::discrete_distribution<NodeId> unigram(weights.begin(), weights.end());

    std::size_t positions = 0;
    for (const auto& w : corpus.walks) positions += w.size();
    const double total = static_cast<double>(positions * cfg.epochs);

    Rng rng(derive_seed(cfg.seed, {0x6e6567ULL}));
    std::vector<NodeId> negs;
    negs.reserve(cfg.negatives);
    std::size_t processed = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double loss_sum = 0.0;
        std::size_t pairs = 0;
        for (const auto& walk : corpus.walks) {
            for (std::size_t i = 0; i < walk.size(); ++i, ++processed) {
                const double lr = cfg.lr * std::max(1e-4, 1.0 - static_cast<double>(processed) / total);
                const std::size_t lo = i >= cfg.window ? i - cfg.window : 0;
                const std::size_t hi = std::min(walk.size() - 1, i + cfg.window);
                for (std::size_t j = lo; j <= hi; ++j) {
                    if (j == i) continue;
                    negs.clear();
                    while (negs.size() < cfg.negatives) {
                        const NodeId n = unigram(rng);
                        if (n != walk[j] || corpus.num_nodes == 1) negs.push_back(n);
                    }
                    loss_sum += model.step(walk[i], walk[j], negs, lr);
                    ++pairs;
                }
            }
        }
        result.epoch_loss.push_back(pairs == 0 ? 0.0 : loss_sum / static_cast<double>(pairs));
    }
    result.embedding = model.input();
    return result;
}

Matrix structural_embedding(const Graph& g, const DeepWalkConfig& cfg, std::uint64_t seed) {
    const WalkCorpus corpus = random_walks(g, cfg.walk_length, cfg.walks_per_node, derive_seed(seed, {1}));
    SkipGramConfig sg;
    sg.dim = static_cast<std::size_t>(g.features.cols());
    sg.window = cfg.window;
    sg.negatives = cfg.negatives;
    sg.epochs = cfg.epochs;
    sg.lr = cfg.lr;
    sg.seed = derive_seed(seed, {2});
    return train_skipgram(corpus, sg).embedding;
}

DualAttributeGraph build_dual(std::shared_ptr<const Graph> g, const Matrix& x_s) {
    if (!g) throw std::invalid_argument("build_dual: null graph");
    const Matrix& xc = g->features;
    if (x_s.rows() != xc.rows() || x_s.cols() != xc.cols()) {
        throw ShapeError("build_dual: structural block " + shape_str(x_s) + " does not match features " +
                         shape_str(xc));
    }
    DualAttributeGraph dual;
    dual.x_dual.resize(xc.rows(), xc.cols() + x_s.cols());
    dual.x_dual.leftCols(xc.cols()) = xc;
    dual.x_dual.rightCols(x_s.cols()) = x_s;
    dual.graph = std::move(g);
    return dual;
}

}  // namespace eclgsr
