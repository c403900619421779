#include "eclgsr/ecl.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "eclgsr/ops.hpp"
#include "eclgsr/rng.hpp"

namespace eclgsr::ecl {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void EclHyper::validate() const {
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
    if (alpha < 0.0) throw std::invalid_argument("alpha must be non-negative");
    if (beta < 0.0) throw std::invalid_argument("beta must be non-negative");
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
}

void init_params(ParamStore& store, const EclArch& arch, Rng& rng) {
    if (arch.in_dim <= 0 || arch.hidden <= 0 || arch.proj_dim <= 0) throw std::invalid_argument("EclArch: bad widths");
    store.create(kEncW1, glorot_uniform(arch.in_dim, arch.hidden, rng));
    store.create(kEncW2, glorot_uniform(arch.hidden, arch.hidden, rng));
    store.create(kEncW3, glorot_uniform(arch.hidden, arch.hidden, rng));
    store.create(kProjW1, glorot_uniform(arch.hidden, arch.proj_dim, rng));
    store.create(kProjB1, Matrix::Zero(1, arch.proj_dim));
    store.create(kProjW2, glorot_uniform(arch.proj_dim, arch.proj_dim, rng));
    store.create(kProjB2, Matrix::Zero(1, arch.proj_dim));
}

EclWeights bind_trainable(ad::Tape& tape, ParamStore& store) {
    return EclWeights{tape.param(store.at(kEncW1)),  tape.param(store.at(kEncW2)),  tape.param(store.at(kEncW3)),
                      tape.param(store.at(kProjW1)), tape.param(store.at(kProjB1)), tape.param(store.at(kProjW2)),
                      tape.param(store.at(kProjB2))};
}

EclWeights bind_frozen(ad::Tape& tape, const ParamStore& store) {
    auto c = [&](const char* name) { return tape.constant(store.at(name).value); };
    return EclWeights{c(kEncW1), c(kEncW2), c(kEncW3), c(kProjW1), c(kProjB1), c(kProjW2), c(kProjB2)};
}

ad::Var encode(const EclWeights& w, const SparseMatrix& adj, const ad::Var& x) {
    if (x.cols() != w.enc_w1.rows()) {
        throw ShapeError("encode: feature width " + std::to_string(x.cols()) + " != encoder input " +
                         std::to_string(w.enc_w1.rows()));
    }
    if (adj.rows() != x.rows()) throw ShapeError("encode: adjacency size differs from feature rows");
    ad::Var h = ad::relu(ad::spmm(adj, ad::matmul(x, w.enc_w1)));
    h = ad::relu(ad::spmm(adj, ad::matmul(h, w.enc_w2)));
    return ad::spmm(adj, ad::matmul(h, w.enc_w3));
}

ad::Var project_pool(const EclWeights& w, const ad::Var& z_nodes) {
    if (z_nodes.rows() == 0) throw ShapeError("project_pool: no node rows");
    ad::Var h = ad::relu(ad::add(ad::matmul(z_nodes, w.proj_w1), w.proj_b1));
    h = ad::add(ad::matmul(h, w.proj_w2), w.proj_b2);
    return ad::mean_rows(h);
}

ad::Var view_embedding(const EclWeights& w, const Subgraph& sg, const ad::Var& x) {
    return project_pool(w, encode(w, sg.local_adj.matrix, x));
}

ad::Var pair_energy(const ad::Var& z, const ad::Var& z_prime, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("pair_energy: tau must be positive");
    return ad::scale(ad::sum(ad::square(ad::sub(z, z_prime))), 1.0 / tau);
}

BatchEmbeddings embed_batch(const EclWeights& w, ad::Tape& tape, const ViewBatch& batch) {
    std::vector<ad::Var> za, zb;
    za.reserve(batch.size());
    zb.reserve(batch.size());
    for (const ViewPair& p : batch.pairs) {
        za.push_back(view_embedding(w, *p.subgraph, tape.constant(p.view_a)));
        zb.push_back(view_embedding(w, *p.subgraph, tape.constant(p.view_b)));
    }
    return BatchEmbeddings{ad::concat_rows(za), ad::concat_rows(zb)};
}

ad::Var discriminative_loss(const BatchEmbeddings& emb, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("discriminative_loss: tau must be positive");
    const Eigen::Index n = emb.z_a.rows();
    if (n < 2) throw std::invalid_argument("discriminative_loss: needs N >= 2 pairs");
    if (emb.z_b.rows() != n || emb.z_b.cols() != emb.z_a.cols()) throw ShapeError("discriminative_loss: z_a/z_b shapes");

    ad::Var views = ad::concat_rows({emb.z_a, emb.z_b});
    ad::Var energy = ad::scale(ad::pairwise_sq_dist(views, views), 1.0 / tau);

    const Eigen::Index two_n = 2 * n;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> positives;
    BoolMatrix negatives(two_n, two_n);
    for (Eigen::Index i = 0; i < two_n; ++i) {
        positives.emplace_back(i, (i + n) % two_n);
        for (Eigen::Index j = 0; j < two_n; ++j) negatives(i, j) = (j % n) != (i % n);
    }
    ad::Var e_pos = ad::pick(energy, positives);
    ad::Var lse = ad::logsumexp_rows(ad::neg(energy), negatives);
    ad::Var per_anchor = ad::add_scalar(ad::add(e_pos, lse), -std::log(static_cast<double>(two_n)));
    return ad::mean(per_anchor);
}

ad::Var batch_marginal_energy(const ad::Var& z_a, const ad::Var& z_b, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("batch_marginal_energy: tau must be positive");
    if (z_a.rows() < 1) throw ShapeError("batch_marginal_energy: empty batch");
    ad::Var energies = ad::scale(ad::row_sum(ad::square(ad::sub(z_a, z_b))), 1.0 / tau);
    return ad::neg(ad::logsumexp(ad::neg(energies)));
}

ad::Var regularization_loss(const BatchEmbeddings& emb, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("regularization_loss: tau must be positive");
    const Eigen::Index n = emb.z_a.rows();
    if (n < 2) throw std::invalid_argument("regularization_loss: needs N >= 2 pairs");
    ad::Var cross = ad::scale(ad::pairwise_sq_dist(emb.z_a, emb.z_b), 1.0 / tau);
    Matrix off_diag = Matrix::Ones(n, n) - Matrix::Identity(n, n);
    ad::Var masked = ad::mul(cross, emb.z_a.tape().constant(std::move(off_diag)));
    return ad::scale(ad::sum(ad::square(masked)), 1.0 / static_cast<double>(2 * n));
}

SgldResult sgld_sample(const ParamStore& params, const ViewBatch& batch, const EclHyper& hyper, std::uint64_t seed,
                       const SgldOptions& options) {
    hyper.validate();
    const std::size_t n = batch.size();
    if (n == 0) throw std::invalid_argument("sgld_sample: empty batch");
    const double noise_std = options.disable_noise ? 0.0 : std::sqrt(hyper.lambda);

    // view_b embeddings are fixed for the whole chain
    Matrix z_b;
    {
        ad::Tape tape;
        EclWeights w = bind_frozen(tape, params);
        std::vector<ad::Var> rows;
        for (const ViewPair& p : batch.pairs) rows.push_back(view_embedding(w, *p.subgraph, tape.constant(p.view_b)));
        z_b = ad::concat_rows(rows).value();
    }

    SgldResult result;
    result.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed, {0, i}));
        const Matrix& va = batch.pairs[i].view_a;
        result.samples.push_back(va + gaussian_matrix(va.rows(), va.cols(), noise_std, rng));
    }

    // Energy of the current chain state; fills grads when `with_grad`.
    auto chain_energy = [&](bool with_grad, std::vector<Matrix>* grads) {
        ad::Tape tape;
        EclWeights w = bind_frozen(tape, params);
        std::vector<ad::Var> inputs;
        std::vector<ad::Var> rows;
        for (std::size_t i = 0; i < n; ++i) {
            inputs.push_back(with_grad ? tape.input(result.samples[i]) : tape.constant(result.samples[i]));
            rows.push_back(view_embedding(w, *batch.pairs[i].subgraph, inputs.back()));
        }
        ad::Var energy = batch_marginal_energy(ad::concat_rows(rows), tape.constant(z_b), hyper.tau);
        if (with_grad) {
            tape.backward(energy);
            grads->clear();
            for (const ad::Var& in : inputs) {
                grads->push_back(in.grad().size() == 0 ? Matrix::Zero(in.rows(), in.cols()) : in.grad());
            }
        }
        return energy.scalar();
    };

    if (options.record_energy) result.initial_energy = chain_energy(false, nullptr);
    std::vector<Matrix> grads;
    for (std::size_t k = 0; k < hyper.k_steps; ++k) {
        chain_energy(true, &grads);
        for (std::size_t i = 0; i < n; ++i) {
            Rng rng(derive_seed(seed, {k + 1, i}));
            Matrix& x = result.samples[i];
            x += -0.5 * hyper.lambda * grads[i] + gaussian_matrix(x.rows(), x.cols(), noise_std, rng);
            if (!x.allFinite()) {
                throw NumericError("SGLD chain diverged at step " + std::to_string(k + 1) + " (pair " +
                                   std::to_string(i) + ")");
            }
        }
    }
    if (options.record_energy) result.final_energy = chain_energy(false, nullptr);
    return result;
}

ad::Var generative_loss(const EclWeights& w, const BatchEmbeddings& emb, const ViewBatch& batch,
                        const std::vector<Matrix>& nu_star, double tau) {
    if (nu_star.size() != batch.size()) throw ShapeError("generative_loss: one Langevin sample per pair required");
    ad::Tape& tape = emb.z_a.tape();
    std::vector<ad::Var> rows;
    rows.reserve(nu_star.size());
    for (std::size_t i = 0; i < nu_star.size(); ++i) {
        rows.push_back(view_embedding(w, *batch.pairs[i].subgraph, tape.constant(nu_star[i])));
    }
    ad::Var positive = batch_marginal_energy(emb.z_a, emb.z_b, tau);
    ad::Var negative = batch_marginal_energy(ad::concat_rows(rows), emb.z_b, tau);
    return ad::sub(positive, negative);
}

double combine(double disc, double gen, double reg, const EclHyper& hyper) {
    return disc + hyper.alpha * gen + hyper.beta * reg;
}

EclLoss ecl_loss(ad::Tape& tape, const EclWeights& w, const ViewBatch& batch, const EclHyper& hyper,
                 const std::vector<Matrix>& nu_star) {
    hyper.validate();
    BatchEmbeddings emb = embed_batch(w, tape, batch);
    ad::Var disc = discriminative_loss(emb, hyper.tau);
    ad::Var reg = regularization_loss(emb, hyper.tau);

    EclLoss out;
    ad::Var total = ad::add(disc, ad::scale(reg, hyper.beta));
    double gen_value = 0.0;
    if (hyper.alpha > 0.0) {
        ad::Var gen = generative_loss(w, emb, batch, nu_star, hyper.tau);
        gen_value = gen.scalar();
        total = ad::add(total, ad::scale(gen, hyper.alpha));
    }
    out.total = total;
    out.components.discriminative = disc.scalar();
    out.components.generative = gen_value;
    out.components.regularization = reg.scalar();
    out.components.total = total.scalar();
    return out;
}

EclLoss ecl_loss(ad::Tape& tape, const EclWeights& w, const ParamStore& params, const ViewBatch& batch,
                 const EclHyper& hyper, std::uint64_t seed) {
    hyper.validate();
    std::vector<Matrix> nu_star;
    if (hyper.alpha > 0.0) nu_star = sgld_sample(params, batch, hyper, seed).samples;
    return ecl_loss(tape, w, batch, hyper, nu_star);
}

}  // namespace eclgsr::ecl
