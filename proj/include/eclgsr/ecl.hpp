#pragma once

#include <cstdint>
#include <vector>

#include "eclgsr/autodiff.hpp"
#include "eclgsr/graph.hpp"
#include "eclgsr/param_store.hpp"
#include "eclgsr/sampler.hpp"

namespace eclgsr::ecl {

struct EclHyper {
    double tau = 0.1;     ///< energy temperature
    double alpha = 0.1;   ///< generative-term weight
    double beta = 0.01;   ///< energy-regularizer weight
    double lambda = 0.01; ///< Langevin step size and noise variance
    std::size_t k_steps = 3;

    void validate() const;
};

/// Layer widths: encoder in -> hidden -> hidden -> hidden (three graph
/// convolutions), projector hidden -> proj -> proj (two affine layers).
struct EclArch {
    Eigen::Index in_dim = 0;
    Eigen::Index hidden = 128;
    Eigen::Index proj_dim = 128;
};

/// Parameter names, all under the "ecl." prefix.
inline constexpr const char* kEncW1 = "ecl.enc.w1";
inline constexpr const char* kEncW2 = "ecl.enc.w2";
inline constexpr const char* kEncW3 = "ecl.enc.w3";
inline constexpr const char* kProjW1 = "ecl.proj.w1";
inline constexpr const char* kProjB1 = "ecl.proj.b1";
inline constexpr const char* kProjW2 = "ecl.proj.w2";
inline constexpr const char* kProjB2 = "ecl.proj.b2";

/// Glorot weights, zero biases.
void init_params(ParamStore& store, const EclArch& arch, Rng& rng);

/// Encoder and projector weights bound to one tape.
struct EclWeights {
    ad::Var enc_w1, enc_w2, enc_w3;
    ad::Var proj_w1, proj_b1, proj_w2, proj_b2;
};

/// Trainable binding: backward writes into the store's gradients.
EclWeights bind_trainable(ad::Tape& tape, ParamStore& store);
/// Frozen binding: the weights enter as constants.
EclWeights bind_frozen(ad::Tape& tape, const ParamStore& store);

/// Z = A relu(A relu(A x W1) W2) W3 over a fixed normalized adjacency.
ad::Var encode(const EclWeights& w, const SparseMatrix& adj, const ad::Var& x);
/// Mean over node rows of relu(z W1 + b1) W2 + b2; returns 1xF.
ad::Var project_pool(const EclWeights& w, const ad::Var& z_nodes);
/// Pooled view vector of one feature matrix over a subgraph.
ad::Var view_embedding(const EclWeights& w, const Subgraph& sg, const ad::Var& x);

/// ||z - z'||^2 / tau for two 1xF rows.
ad::Var pair_energy(const ad::Var& z, const ad::Var& z_prime, double tau);

/// Pooled embeddings of a batch: row n of z_a / z_b belongs to pair n.
struct BatchEmbeddings {
    ad::Var z_a;
    ad::Var z_b;
};
BatchEmbeddings embed_batch(const EclWeights& w, ad::Tape& tape, const ViewBatch& batch);

/// Contrastive term. Every one of the 2N views is an anchor; its positive is
/// the other view of its pair and its negatives are the 2(N-1) views of the
/// other pairs. Per anchor:
///   E_pos + log( (1/2N) * sum_neg exp(-E_neg) ),
/// averaged over anchors.
ad::Var discriminative_loss(const BatchEmbeddings& emb, double tau);

/// -log sum_n exp(-||z_a,n - z_b,n||^2 / tau), evaluated in log space.
ad::Var batch_marginal_energy(const ad::Var& z_a, const ad::Var& z_b, double tau);

/// (1/2N) * sum_{n != m} E(z_a,n, z_b,m)^2.
ad::Var regularization_loss(const BatchEmbeddings& emb, double tau);

struct SgldOptions {
    /// Drops both the initial perturbation and the per-step Langevin noise.
    bool disable_noise = false;
    /// Evaluates the chain energy before the first and after the last step.
    bool record_energy = false;
};

struct SgldResult {
    std::vector<Matrix> samples;  ///< one feature matrix per pair
    double initial_energy = 0.0;  ///< valid when record_energy was set
    double final_energy = 0.0;
};

/// Langevin chain in feature space:
///   x_0 = view_a + N(0, lambda),
///   x_{k+1} = x_k - (lambda / 2) grad_x E(x_k) + N(0, lambda),
/// with E the batch marginal energy of the chain's pooled embeddings against
/// the fixed view_b embeddings. Parameters are frozen during sampling.
SgldResult sgld_sample(const ParamStore& params, const ViewBatch& batch, const EclHyper& hyper, std::uint64_t seed,
                       const SgldOptions& options = {});

/// E+ - E-, with E+ the batch marginal energy of the data views and E- that of
/// the Langevin samples (as constants) against the same view_b embeddings.
/// Its parameter gradient is the two-phase energy gradient.
ad::Var generative_loss(const EclWeights& w, const BatchEmbeddings& emb, const ViewBatch& batch,
                        const std::vector<Matrix>& nu_star, double tau);

struct EclComponents {
    double discriminative = 0.0;
    double generative = 0.0;
    double regularization = 0.0;
    double total = 0.0;
};

/// disc + alpha * gen + beta * reg.
double combine(double disc, double gen, double reg, const EclHyper& hyper);

struct EclLoss {
    ad::Var total;
    EclComponents components;
};

/// Full objective for one batch on `tape`; the Langevin chain runs on a
/// separate tape from the current values of `params`.
EclLoss ecl_loss(ad::Tape& tape, const EclWeights& w, const ParamStore& params, const ViewBatch& batch,
                 const EclHyper& hyper, std::uint64_t seed);
/// Same objective with the Langevin samples supplied by the caller; they are
/// ignored when alpha is zero.
EclLoss ecl_loss(ad::Tape& tape, const EclWeights& w, const ViewBatch& batch, const EclHyper& hyper,
                 const std::vector<Matrix>& nu_star);

}  // namespace eclgsr::ecl
