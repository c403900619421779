#include "eclgsr/classifier.hpp"

#include <cmath>
#include <stdexcept>

#include "eclgsr/ops.hpp"

namespace eclgsr::clf {

void init_params(ParamStore& store, const ClassifierArch& arch, Rng& rng) {
    if (arch.in_dim <= 0 || arch.hidden <= 0 || arch.num_classes <= 0) {
        throw std::invalid_argument("ClassifierArch: bad widths");
    }
    store.create(kW1, glorot_uniform(arch.in_dim, arch.hidden, rng));
    store.create(kW2, glorot_uniform(arch.hidden, arch.hidden, rng));
    store.create(kW3, glorot_uniform(arch.hidden, arch.num_classes, rng));
}

ClassifierWeights bind_trainable(ad::Tape& tape, ParamStore& store) {
    return ClassifierWeights{tape.param(store.at(kW1)), tape.param(store.at(kW2)), tape.param(store.at(kW3))};
}

ClassifierWeights bind_frozen(ad::Tape& tape, const ParamStore& store) {
    return ClassifierWeights{tape.constant(store.at(kW1).value), tape.constant(store.at(kW2).value),
                             tape.constant(store.at(kW3).value)};
}

ad::Var normalize_dense(const ad::Var& adjacency) {
    const Eigen::Index n = adjacency.rows();
    if (adjacency.cols() != n) throw ShapeError("normalize_dense: square adjacency expected");
    ad::Var with_loops = ad::add(adjacency, adjacency.tape().constant(Matrix::Identity(n, n)));
    ad::Var inv_sqrt_deg = ad::pow_scalar(ad::row_sum(with_loops), -0.5);
    return ad::scale_cols(ad::scale_rows(with_loops, inv_sqrt_deg), inv_sqrt_deg);
}

namespace {

template <typename Propagate>
ClassifierOutput run_layers(const ClassifierWeights& w, const ad::Var& x, Propagate&& propagate) {
    if (x.cols() != w.w1.rows()) {
        throw ShapeError("classifier: feature width " + std::to_string(x.cols()) + " != " + std::to_string(w.w1.rows()));
    }
    ad::Var h = ad::relu(propagate(ad::matmul(x, w.w1)));
    h = ad::relu(propagate(ad::matmul(h, w.w2)));
    ad::Var logits = propagate(ad::matmul(h, w.w3));
    return ClassifierOutput{logits, ad::softmax_rows(logits)};
}

}  // namespace

ClassifierOutput classify(const ClassifierWeights& w, const ad::Var& adjacency, const ad::Var& x) {
    if (adjacency.rows() != x.rows()) throw ShapeError("classify: adjacency size differs from feature rows");
    ad::Var norm = normalize_dense(adjacency);
    return run_layers(w, x, [&](const ad::Var& h) { return ad::matmul(norm, h); });
}

ClassifierOutput classify_pairs(const ClassifierWeights& w, const std::vector<Edge>& pairs, const ad::Var& weights,
                                const ad::Var& x) {
    return run_layers(w, x, [&](const ad::Var& h) { return weighted_propagate(pairs, weights, h); });
}

ClassifierOutput classify_fixed(const ClassifierWeights& w, const SparseMatrix& adj, const ad::Var& x) {
    if (adj.rows() != x.rows()) throw ShapeError("classify_fixed: adjacency size differs from feature rows");
    return run_layers(w, x, [&](const ad::Var& h) { return ad::spmm(adj, h); });
}

ad::Var weighted_propagate(const std::vector<Edge>& pairs, const ad::Var& weights, const ad::Var& x) {
    const Matrix& wv = weights.value();
    const Matrix& xv = x.value();
    if (wv.cols() != 1 || static_cast<std::size_t>(wv.rows()) != pairs.size()) {
        throw ShapeError("weighted_propagate: one weight per pair expected");
    }
    const Eigen::Index n = xv.rows();
    Eigen::VectorXd deg = Eigen::VectorXd::Ones(n);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (pairs[k].src >= n || pairs[k].dst >= n) throw ShapeError("weighted_propagate: pair index out of range");
        deg(pairs[k].src) += wv(static_cast<Eigen::Index>(k), 0);
        deg(pairs[k].dst) += wv(static_cast<Eigen::Index>(k), 0);
    }
    if ((deg.array() <= 0.0).any()) throw NumericError("weighted_propagate: non-positive degree");
    const Eigen::VectorXd s = deg.array().rsqrt();

    // symmetric propagation of any right-hand side with the current weights
    auto propagate = [pairs, wv, s](const Matrix& m) {
        Matrix out = m.array().colwise() * s.array().square();
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            const Eigen::Index a = pairs[k].src, b = pairs[k].dst;
            const double c = wv(static_cast<Eigen::Index>(k), 0) * s(a) * s(b);
            out.row(a) += c * m.row(b);
            out.row(b) += c * m.row(a);
        }
        return out;
    };

    Matrix out = propagate(xv);
    const std::size_t iw = weights.id(), ix = x.id();
    return x.tape().record(
        "weighted_propagate", std::move(out), {weights, x},
        [pairs, s, deg, iw, ix, propagate](ad::Tape& t, const Matrix& g) {
            const Matrix& xm = t.value(ix);
            const Matrix& wm = t.value(iw);
            if (t.requires_grad(ix)) t.accumulate(ix, propagate(g));
            if (!t.requires_grad(iw)) return;
            // dL/ds_i collects every term in which s_i appears
            Eigen::VectorXd ds = 2.0 * s.array() * g.cwiseProduct(xm).rowwise().sum().array();
            Matrix gw(wm.rows(), 1);
            for (std::size_t k = 0; k < pairs.size(); ++k) {
                const Eigen::Index a = pairs[k].src, b = pairs[k].dst;
                const double w = wm(static_cast<Eigen::Index>(k), 0);
                const double cross = g.row(a).dot(xm.row(b)) + g.row(b).dot(xm.row(a));
                gw(static_cast<Eigen::Index>(k), 0) = s(a) * s(b) * cross;
                ds(a) += w * s(b) * cross;
                ds(b) += w * s(a) * cross;
            }
            const Eigen::VectorXd dd = ds.array() * (-0.5) * deg.array().pow(-1.5);
            for (std::size_t k = 0; k < pairs.size(); ++k) {
                gw(static_cast<Eigen::Index>(k), 0) += dd(pairs[k].src) + dd(pairs[k].dst);
            }
            t.accumulate(iw, gw);
        });
}

ad::Var ce_loss(const ad::Var& probs, const std::vector<int>& labels, const std::vector<NodeId>& mask) {
    if (mask.empty()) throw std::invalid_argument("ce_loss: empty mask");
    std::vector<std::pair<Eigen::Index, Eigen::Index>> positions;
    positions.reserve(mask.size());
    for (NodeId v : mask) {
        if (v >= labels.size() || labels[v] < 0) throw std::invalid_argument("ce_loss: masked node without label");
        if (labels[v] >= probs.cols()) throw ShapeError("ce_loss: label exceeds class count");
        positions.emplace_back(v, labels[v]);
    }
    ad::Var picked = ad::clamp(ad::pick(probs, positions), 1e-12, 1.0);
    return ad::neg(ad::mean(ad::log(picked)));
}

std::vector<int> predict(const Matrix& probs) {
    std::vector<int> out(static_cast<std::size_t>(probs.rows()), 0);
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < probs.cols(); ++c) {
            if (probs(i, c) > probs(i, best)) best = c;
        }
        out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
}

double accuracy(const Matrix& probs, const std::vector<int>& labels, const std::vector<NodeId>& mask) {
    if (mask.empty()) throw std::invalid_argument("accuracy: empty mask");
    std::size_t correct = 0;
    for (NodeId v : mask) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < probs.cols(); ++c) {
            if (probs(v, c) > probs(v, best)) best = c;
        }
        if (labels.at(v) == best) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(mask.size());
}

}  // namespace eclgsr::clf
