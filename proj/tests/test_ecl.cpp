#include <doctest.h>

#include "eclgsr/gradcheck.hpp"
#include "eclgsr/ops.hpp"
#include "oracles.hpp"

using namespace eclgsr;
using namespace eclgsr::ecl;
using testutil::random_matrix;

namespace {

BatchEmbeddings constant_emb(ad::Tape& t, const Matrix& za, const Matrix& zb) {
    return BatchEmbeddings{t.constant(za), t.constant(zb)};
}

ViewBatch fixture_batch(const oracle::Fixture& f, std::uint64_t seed, std::size_t n = 4) {
    return make_view_batch(f.data.dual, n, f.cfg.edges_per_subgraph, f.cfg.sigma, seed);
}

}  // namespace

TEST_CASE("pair energy examples") {
    ad::Tape t;
    Matrix a(1, 2), b(1, 2);
    a << 1, 0;
    b << 0, 1;
    CHECK(pair_energy(t.constant(a), t.constant(a), 0.1).scalar() == 0.0);
    CHECK(pair_energy(t.constant(a), t.constant(b), 0.1).scalar() == doctest::Approx(20.0).epsilon(1e-14));
    const Matrix u = random_matrix(1, 128, 1), v = random_matrix(1, 128, 2);
    CHECK(std::abs(pair_energy(t.constant(u), t.constant(v), 0.7).scalar() - oracle::energy(u, 0, v, 0, 0.7)) < 1e-12);
    CHECK_THROWS_AS(pair_energy(t.constant(a), t.constant(b), 0.0), std::invalid_argument);
}

TEST_CASE("discriminative loss on orthogonal pairs") {
    ad::Tape t;
    const Matrix z = Matrix::Identity(2, 2);
    const double got = discriminative_loss(constant_emb(t, z, z), 1.0).scalar();
    CHECK(std::abs(got - oracle::discriminative(z, z, 1.0)) < 1e-10);
    CHECK(std::abs(got - (-2.0 - std::log(2.0))) < 1e-12);
}

TEST_CASE("discriminative loss with all views identical") {
    for (Eigen::Index n : {2, 3, 7}) {
        ad::Tape t;
        const Matrix z = Matrix::Constant(n, 3, 0.4);
        const double got = discriminative_loss(constant_emb(t, z, z), 0.5).scalar();
        CHECK(std::abs(got - std::log(static_cast<double>(n - 1) / n)) < 1e-12);
    }
}

TEST_CASE("losses match the loop oracles on random batches") {
    Rng rng(5);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 7);
        const Eigen::Index f = 1 + static_cast<Eigen::Index>(rng() % 8);
        const double tau = 0.5 + std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const Matrix za = random_matrix(n, f, rng(), 0.5), zb = random_matrix(n, f, rng(), 0.5);
        ad::Tape t;
        const BatchEmbeddings emb = constant_emb(t, za, zb);
        worst = std::max(worst, std::abs(discriminative_loss(emb, tau).scalar() - oracle::discriminative(za, zb, tau)));
        worst = std::max(worst, std::abs(batch_marginal_energy(emb.z_a, emb.z_b, tau).scalar() -
                                         oracle::marginal_energy(za, zb, tau)));
        worst = std::max(worst, std::abs(regularization_loss(emb, tau).scalar() - oracle::regularization(za, zb, tau)));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("discriminative loss never exceeds mean positive energy plus log((N-1)/N)") {
    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 7);
        const Matrix za = random_matrix(n, 4, rng()), zb = random_matrix(n, 4, rng());
        const double tau = 0.2 + std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        ad::Tape t;
        const double loss = discriminative_loss(constant_emb(t, za, zb), tau).scalar();
        double mean_pos = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) mean_pos += oracle::energy(za, i, zb, i, tau);
        mean_pos /= static_cast<double>(n);
        CHECK(loss <= mean_pos + std::log(static_cast<double>(n - 1) / n) + 1e-9);
    }
}

TEST_CASE("energy losses are scale and translation invariant") {
    const Matrix za = random_matrix(5, 6, 1), zb = random_matrix(5, 6, 2);
    const Matrix shift = random_matrix(1, 6, 3, 5.0);
    const Matrix za_s = za.rowwise() + shift.row(0), zb_s = zb.rowwise() + shift.row(0);
    ad::Tape t;
    const BatchEmbeddings base = constant_emb(t, za, zb);
    const BatchEmbeddings moved = constant_emb(t, za_s, zb_s);
    const BatchEmbeddings scaled = constant_emb(t, 3.0 * za, 3.0 * zb);
    const double tau = 0.8;
    CHECK(std::abs(discriminative_loss(base, tau).scalar() - discriminative_loss(moved, tau).scalar()) < 1e-10);
    CHECK(std::abs(discriminative_loss(base, tau).scalar() - discriminative_loss(scaled, 9.0 * tau).scalar()) < 1e-10);
    CHECK(std::abs(batch_marginal_energy(base.z_a, base.z_b, tau).scalar() -
                   batch_marginal_energy(moved.z_a, moved.z_b, tau).scalar()) < 1e-10);
    CHECK(std::abs(regularization_loss(base, tau).scalar() - regularization_loss(moved, tau).scalar()) < 1e-10);
    CHECK(std::abs(pair_energy(ad::gather_rows(base.z_a, {0}), ad::gather_rows(base.z_b, {1}), tau).scalar() -
                   pair_energy(ad::gather_rows(moved.z_a, {0}), ad::gather_rows(moved.z_b, {1}), tau).scalar()) < 1e-10);
}

TEST_CASE("batch marginal energy examples") {
    ad::Tape t;
    const Matrix one = random_matrix(1, 3, 1);
    CHECK(batch_marginal_energy(t.constant(one), t.constant(one), 1.0).scalar() == 0.0);
    const Matrix two = random_matrix(2, 3, 2);
    CHECK(std::abs(batch_marginal_energy(t.constant(two), t.constant(two), 1.0).scalar() + std::log(2.0)) < 1e-15);

    Matrix a(2, 1), b(2, 1);
    a << 0, std::sqrt(800.0);
    b << 0.5, 0;
    const double got = batch_marginal_energy(t.constant(a), t.constant(b), 1.0).scalar();
    CHECK(std::isfinite(got));
    CHECK(std::abs(got - 0.25) < 1e-10);
    Matrix far(1, 1), zero = Matrix::Zero(1, 1);
    far << std::sqrt(800.0);
    CHECK(batch_marginal_energy(t.constant(far), t.constant(zero), 1.0).scalar() == doctest::Approx(800.0));
}

TEST_CASE("regularization loss examples") {
    ad::Tape t;
    const Matrix same = Matrix::Constant(3, 2, 1.5);
    CHECK(regularization_loss(constant_emb(t, same, same), 1.0).scalar() == 0.0);
    Matrix za(2, 1), zb(2, 1);
    za << 0, 1;
    zb << 1 - std::sqrt(2.0), std::sqrt(2.0);
    // cross energies (0 - sqrt2)^2 = 2 and (1 - (1 - sqrt2))^2 = 2
    CHECK(std::abs(regularization_loss(constant_emb(t, za, zb), 1.0).scalar() - 2.0) < 1e-12);
    CHECK_THROWS_AS(regularization_loss(constant_emb(t, za.topRows(1), zb.topRows(1)), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(discriminative_loss(constant_emb(t, za.topRows(1), zb.topRows(1)), 1.0), std::invalid_argument);
}

TEST_CASE("encoder examples") {
    SUBCASE("zero weights give zero output") {
        ParamStore ps;
        Rng rng(1);
        init_params(ps, EclArch{4, 8, 8}, rng);
        for (auto& [name, p] : ps) p.value.setZero();
        ad::Tape t;
        const EclWeights w = bind_frozen(t, ps);
        const auto adj = normalize_adjacency(3, {{0, 1}});
        CHECK(encode(w, adj.matrix, t.constant(random_matrix(3, 4, 2))).value().isZero(0.0));
    }
    SUBCASE("scalar chain on a single node") {
        ParamStore ps;
        ps.create(kEncW1, Matrix::Constant(1, 1, 0.5));
        ps.create(kEncW2, Matrix::Constant(1, 1, 2.0));
        ps.create(kEncW3, Matrix::Constant(1, 1, 3.0));
        for (const char* n : {kProjW1, kProjW2}) ps.create(n, Matrix::Identity(1, 1));
        for (const char* n : {kProjB1, kProjB2}) ps.create(n, Matrix::Zero(1, 1));
        ad::Tape t;
        const EclWeights w = bind_frozen(t, ps);
        const auto adj = normalize_adjacency(1, {});
        CHECK(encode(w, adj.matrix, t.constant(Matrix::Constant(1, 1, 1.5))).scalar() == doctest::Approx(4.5));
    }
    SUBCASE("random subgraphs match the loop oracle") {
        Rng rng(3);
        for (int trial = 0; trial < 10; ++trial) {
            ParamStore ps;
            init_params(ps, EclArch{5, 6, 6}, rng);
            const auto adj = normalize_adjacency(4, {{0, 1}, {1, 2}, {1, 3}});
            const Matrix x = random_matrix(4, 5, rng());
            ad::Tape t;
            const EclWeights w = bind_frozen(t, ps);
            const Matrix got = encode(w, adj.matrix, t.constant(x)).value();
            const Matrix want = oracle::encode(adj.to_dense(), x, ps.at(kEncW1).value, ps.at(kEncW2).value,
                                               ps.at(kEncW3).value);
            CHECK(testutil::max_abs_diff(got, want) < 1e-12);
        }
    }
    SUBCASE("shape mismatch") {
        ParamStore ps;
        Rng rng(1);
        init_params(ps, EclArch{4, 8, 8}, rng);
        ad::Tape t;
        const EclWeights w = bind_frozen(t, ps);
        const auto adj = normalize_adjacency(2, {{0, 1}});
        CHECK_THROWS_AS(encode(w, adj.matrix, t.constant(Matrix::Zero(2, 3))), ShapeError);
    }
}

TEST_CASE("projection and pooling") {
    ParamStore ps;
    Rng rng(2);
    init_params(ps, EclArch{3, 4, 4}, rng);
    ad::Tape t;
    const EclWeights w = bind_frozen(t, ps);
    const Matrix row = random_matrix(1, 4, 3);
    const Matrix single = project_pool(w, t.constant(row)).value();
    const Matrix repeated = project_pool(w, t.constant(row.replicate(5, 1))).value();
    CHECK(testutil::max_abs_diff(single, repeated) < 1e-15);
    CHECK_THROWS_AS(project_pool(w, t.constant(Matrix(0, 4))), ShapeError);

    ParamStore id;
    for (const char* n : {kEncW1, kEncW2, kEncW3}) id.create(n, Matrix::Identity(2, 2));
    for (const char* n : {kProjW1, kProjW2}) id.create(n, Matrix::Identity(2, 2));
    for (const char* n : {kProjB1, kProjB2}) id.create(n, Matrix::Zero(1, 2));
    const EclWeights iw = bind_frozen(t, id);
    Matrix rows(2, 2);
    rows << 0.2, 1.4, 3.0, 0.6;
    const Matrix pooled = project_pool(iw, t.constant(rows)).value();
    CHECK(testutil::max_abs_diff(pooled, rows.colwise().mean()) < 1e-15);
}

TEST_CASE("generative loss") {
    oracle::Fixture f = oracle::make_fixture(3);
    const ViewBatch batch = fixture_batch(f, 11);
    ad::Tape t;
    const EclWeights w = bind_frozen(t, f.store);
    const BatchEmbeddings emb = embed_batch(w, t, batch);
    std::vector<Matrix> same;
    for (const ViewPair& p : batch.pairs) same.push_back(p.view_a);
    CHECK(std::abs(generative_loss(w, emb, batch, same, 0.1).scalar()) < 1e-12);
    CHECK_THROWS_AS(generative_loss(w, emb, batch, {same[0]}, 0.1), ShapeError);

    Matrix za(1, 1), zs(1, 1), zb = Matrix::Zero(1, 1);
    za << std::sqrt(3.0);
    zs << 1.0;
    const double diff = (ad::sub(batch_marginal_energy(t.constant(za), t.constant(zb), 1.0),
                                 batch_marginal_energy(t.constant(zs), t.constant(zb), 1.0)))
                            .scalar();
    CHECK(diff == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("combine weights the components") {
    EclHyper h;
    CHECK(combine(1.0, 2.0, 3.0, h) == doctest::Approx(1.23).epsilon(1e-15));
    h.alpha = 0.0;
    h.beta = 0.0;
    CHECK(combine(1.0, 2.0, 3.0, h) == 1.0);
}

TEST_CASE("with alpha and beta zero the objective is the discriminative loss") {
    oracle::Fixture f = oracle::make_fixture(4);
    const ViewBatch batch = fixture_batch(f, 2);
    EclHyper h;
    h.alpha = 0.0;
    h.beta = 0.0;
    ad::Tape t;
    const EclWeights w = bind_frozen(t, f.store);
    const EclLoss l = ecl_loss(t, w, f.store, batch, h, 9);
    CHECK(l.total.scalar() == l.components.discriminative);
    CHECK(l.components.generative == 0.0);
}

TEST_CASE("ecl_loss is bit-stable and finite") {
    oracle::Fixture f = oracle::make_fixture(5);
    const ViewBatch batch = fixture_batch(f, 3);
    auto run = [&] {
        ad::Tape t;
        const EclWeights w = bind_frozen(t, f.store);
        return ecl_loss(t, w, f.store, batch, f.cfg.hyper(), 21).components;
    };
    const EclComponents a = run(), b = run();
    CHECK(std::isfinite(a.total));
    CHECK(a.total == b.total);
    CHECK(a.generative == b.generative);
    CHECK(a.total == doctest::Approx(combine(a.discriminative, a.generative, a.regularization, f.cfg.hyper())));
}

TEST_CASE("all losses pass finite-difference checks") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        oracle::Fixture f = oracle::make_fixture(seed);
        oracle::randomize(f.store, seed);
        const ViewBatch batch = fixture_batch(f, seed);
        const EclHyper hyper = f.cfg.hyper();
        const std::vector<Matrix> nu_star = sgld_sample(f.store, batch, hyper, seed).samples;
        ParamStore ecl_only;
        for (const auto& [name, p] : f.store)
            if (name.rfind("ecl.", 0) == 0) ecl_only.create(name, p.value);

        auto check = [&](const std::function<ad::Var(ad::Tape&, const EclWeights&)>& loss) {
            const auto r = check_gradients(
                [&](ad::Tape& t, ParamStore& p) { return loss(t, bind_trainable(t, p)); }, ecl_only);
            INFO(r.worst_param << " " << r.worst_index);
            CHECK(r.max_rel_error < 1e-4);
        };
        check([&](ad::Tape& t, const EclWeights& w) { return discriminative_loss(embed_batch(w, t, batch), 0.1); });
        check([&](ad::Tape& t, const EclWeights& w) { return regularization_loss(embed_batch(w, t, batch), 0.1); });
        check([&](ad::Tape& t, const EclWeights& w) {
            return ad::scale(generative_loss(w, embed_batch(w, t, batch), batch, nu_star, 0.1), hyper.alpha);
        });
        check([&](ad::Tape& t, const EclWeights& w) { return ecl_loss(t, w, batch, hyper, nu_star).total; });
    }
}

TEST_CASE("Langevin sampler limits") {
    oracle::Fixture f = oracle::make_fixture(6);
    const ViewBatch batch = fixture_batch(f, 4);
    EclHyper h;
    h.k_steps = 0;
    SgldOptions quiet;
    quiet.disable_noise = true;
    const SgldResult k0 = sgld_sample(f.store, batch, h, 1, quiet);
    for (std::size_t i = 0; i < batch.size(); ++i) CHECK(k0.samples[i] == batch.pairs[i].view_a);

    const SgldResult noisy = sgld_sample(f.store, batch, h, 1);
    double sq = 0.0, count = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        sq += (noisy.samples[i] - batch.pairs[i].view_a).squaredNorm();
        count += static_cast<double>(noisy.samples[i].size());
    }
    CHECK(std::sqrt(sq / count) == doctest::Approx(std::sqrt(h.lambda)).epsilon(0.25));

    h.k_steps = 3;
    h.lambda = 1e-12;
    const SgldResult tiny = sgld_sample(f.store, batch, h, 2);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        CHECK(testutil::max_abs_diff(tiny.samples[i], batch.pairs[i].view_a) < 1e-5);
    }

    h.lambda = 0.01;
    const SgldResult a = sgld_sample(f.store, batch, h, 7), b = sgld_sample(f.store, batch, h, 7);
    for (std::size_t i = 0; i < batch.size(); ++i) CHECK(a.samples[i] == b.samples[i]);

    const ParamStore before = f.store;
    sgld_sample(f.store, batch, h, 7);
    for (const auto& [name, p] : f.store) CHECK(p.value == before.at(name).value);
}

TEST_CASE("noise-free Langevin steps lower the energy") {
    oracle::Fixture f = oracle::make_fixture(7);
    EclHyper h;
    h.lambda = 1e-3;
    h.k_steps = 3;
    SgldOptions opt;
    opt.disable_noise = true;
    opt.record_energy = true;
    int ok = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const SgldResult r = sgld_sample(f.store, fixture_batch(f, 100 + s), h, s, opt);
        if (r.final_energy <= r.initial_energy + 1e-6) ++ok;
    }
    CHECK(ok >= 18);
}

TEST_CASE("marginal energy over a discrete candidate set is the log of the explicit sum") {
    oracle::Fixture f = oracle::make_fixture(8);
    const Subgraph sg = induced_subgraph(f.data.dual, {0, 1, 2, 3});
    ad::Tape t;
    const EclWeights w = bind_frozen(t, f.store);
    const Matrix z = view_embedding(w, sg, t.constant(sg.x_local)).value();
    Matrix cands(12, z.cols());
    for (Eigen::Index c = 0; c < 12; ++c) {
        const Matrix x = sg.x_local + random_matrix(sg.x_local.rows(), sg.x_local.cols(), 50 + c, 0.3);
        cands.row(c) = view_embedding(w, sg, t.constant(x)).value();
    }
    const double tau = 1.0;
    const double lib = batch_marginal_energy(t.constant(z.replicate(12, 1)), t.constant(cands), tau).scalar();
    double brute = 0.0;
    for (Eigen::Index c = 0; c < 12; ++c) brute += std::exp(-oracle::energy(z, 0, cands, c, tau));
    CHECK(std::abs(std::exp(-lib) - brute) < 1e-10);
}

TEST_CASE("hyperparameter validation") {
    EclHyper h;
    h.tau = 0.0;
    CHECK_THROWS(h.validate());
    h = EclHyper{};
    h.alpha = -1.0;
    CHECK_THROWS(h.validate());
    h = EclHyper{};
    h.lambda = 0.0;
    CHECK_THROWS(h.validate());
}
