#include "eclgsr/ops.hpp"

#include <cmath>
#include <limits>

namespace eclgsr::ad {
namespace {

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
    }
}

Matrix l2_normalize(const Matrix& a, Eigen::VectorXd& norms) {
    norms = a.rowwise().norm();
    Matrix y = Matrix::Zero(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        if (norms(i) > 0.0) y.row(i) = a.row(i) / norms(i);
    }
    return y;
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    if (av.cols() != bv.rows()) {
        throw ShapeError("matmul: inner dimensions differ " + shape_str(av) + " * " + shape_str(bv));
    }
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape().record("matmul", av * bv, {a, b}, [ia, ib](Tape& t, const Matrix& g) {
        if (t.requires_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
        if (t.requires_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
    });
}

Var transpose(const Var& a) {
    const std::size_t ia = a.id();
    return a.tape().record("transpose", a.value().transpose(), {a},
                           [ia](Tape& t, const Matrix& g) { t.accumulate(ia, g.transpose()); });
}

Var add(const Var& a, const Var& b) {
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    const std::size_t ia = a.id(), ib = b.id();
    if (bv.rows() == 1 && av.rows() != 1 && bv.cols() == av.cols()) {
        Matrix out = av.rowwise() + bv.row(0);
        return a.tape().record("add_row", std::move(out), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
            t.accumulate(ia, g);
            t.accumulate(ib, g.colwise().sum());
        });
    }
    require_same_shape("add", av, bv);
    return a.tape().record("add", av + bv, {a, b}, [ia, ib](Tape& t, const Matrix& g) {
        t.accumulate(ia, g);
        t.accumulate(ib, g);
    });
}

Var sub(const Var& a, const Var& b) {
    require_same_shape("sub", a.value(), b.value());
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape().record("sub", a.value() - b.value(), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
        t.accumulate(ia, g);
        t.accumulate(ib, -g);
    });
}

Var mul(const Var& a, const Var& b) {
    require_same_shape("mul", a.value(), b.value());
    const std::size_t ia = a.id(), ib = b.id();
    Matrix out = a.value().cwiseProduct(b.value());
    return a.tape().record("mul", std::move(out), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
        if (t.requires_grad(ia)) t.accumulate(ia, g.cwiseProduct(t.value(ib)));
        if (t.requires_grad(ib)) t.accumulate(ib, g.cwiseProduct(t.value(ia)));
    });
}

Var scale(const Var& a, double s) {
    const std::size_t ia = a.id();
    return a.tape().record("scale", a.value() * s, {a},
                           [ia, s](Tape& t, const Matrix& g) { t.accumulate(ia, g * s); });
}

Var add_scalar(const Var& a, double s) {
    const std::size_t ia = a.id();
    Matrix out = a.value().array() + s;
    return a.tape().record("add_scalar", std::move(out), {a},
                           [ia](Tape& t, const Matrix& g) { t.accumulate(ia, g); });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no operands");
    const Eigen::Index cols = parts.front().cols();
    Eigen::Index rows = 0;
    for (const Var& p : parts) {
        if (p.cols() != cols) throw ShapeError("concat_rows: column counts differ");
        rows += p.rows();
    }
    Matrix out(rows, cols);
    std::vector<std::size_t> ids;
    std::vector<Eigen::Index> offsets;
    Eigen::Index r = 0;
    for (const Var& p : parts) {
        out.middleRows(r, p.rows()) = p.value();
        ids.push_back(p.id());
        offsets.push_back(r);
        r += p.rows();
    }
    return parts.front().tape().record("concat_rows", std::move(out), parts,
                                       [ids, offsets](Tape& t, const Matrix& g) {
                                           for (std::size_t k = 0; k < ids.size(); ++k) {
                                               const Eigen::Index n = t.value(ids[k]).rows();
                                               if (t.requires_grad(ids[k])) {
                                                   t.accumulate(ids[k], g.middleRows(offsets[k], n));
                                               }
                                           }
                                       });
}

Var gather_rows(const Var& a, const std::vector<Eigen::Index>& rows) {
    const Matrix& av = a.value();
    Matrix out(static_cast<Eigen::Index>(rows.size()), av.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k] < 0 || rows[k] >= av.rows()) throw ShapeError("gather_rows: row index out of range");
        out.row(static_cast<Eigen::Index>(k)) = av.row(rows[k]);
    }
    const std::size_t ia = a.id();
    return a.tape().record("gather_rows", std::move(out), {a}, [ia, rows](Tape& t, const Matrix& g) {
        Matrix ga = Matrix::Zero(t.value(ia).rows(), t.value(ia).cols());
        for (std::size_t k = 0; k < rows.size(); ++k) ga.row(rows[k]) += g.row(static_cast<Eigen::Index>(k));
        t.accumulate(ia, ga);
    });
}

Var pick(const Var& a, const std::vector<std::pair<Eigen::Index, Eigen::Index>>& positions) {
    const Matrix& av = a.value();
    Matrix out(static_cast<Eigen::Index>(positions.size()), 1);
    for (std::size_t k = 0; k < positions.size(); ++k) {
        const auto [r, c] = positions[k];
        if (r < 0 || r >= av.rows() || c < 0 || c >= av.cols()) throw ShapeError("pick: position out of range");
        out(static_cast<Eigen::Index>(k), 0) = av(r, c);
    }
    const std::size_t ia = a.id();
    return a.tape().record("pick", std::move(out), {a}, [ia, positions](Tape& t, const Matrix& g) {
        Matrix ga = Matrix::Zero(t.value(ia).rows(), t.value(ia).cols());
        for (std::size_t k = 0; k < positions.size(); ++k) {
            ga(positions[k].first, positions[k].second) += g(static_cast<Eigen::Index>(k), 0);
        }
        t.accumulate(ia, ga);
    });
}

Var relu(const Var& a) {
    const std::size_t ia = a.id();
    Matrix out = a.value().cwiseMax(0.0);
    return a.tape().record("relu", std::move(out), {a}, [ia](Tape& t, const Matrix& g) {
        Matrix mask = (t.value(ia).array() > 0.0).cast<double>();
        t.accumulate(ia, g.cwiseProduct(mask));
    });
}

Var exp(const Var& a) {
    Matrix out = a.value().array().exp();
    Matrix yc = out;
    const std::size_t ia = a.id();
    return a.tape().record("exp", std::move(out), {a}, [ia, yc = std::move(yc)](Tape& t, const Matrix& g) {
        t.accumulate(ia, g.cwiseProduct(yc));
    });
}

Var log(const Var& a) {
    const Matrix& av = a.value();
    if ((av.array() <= 0.0).any()) throw NumericError("log: non-positive input");
    const std::size_t ia = a.id();
    Matrix out = av.array().log();
    return a.tape().record("log", std::move(out), {a}, [ia](Tape& t, const Matrix& g) {
        t.accumulate(ia, g.cwiseQuotient(t.value(ia)));
    });
}

Var square(const Var& a) {
    const std::size_t ia = a.id();
    Matrix out = a.value().array().square();
    return a.tape().record("square", std::move(out), {a}, [ia](Tape& t, const Matrix& g) {
        t.accumulate(ia, 2.0 * g.cwiseProduct(t.value(ia)));
    });
}

Var sigmoid(const Var& a) {
    Matrix out = a.value().unaryExpr([](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
    });
    Matrix dydx = out.array() * (1.0 - out.array());
    const std::size_t ia = a.id();
    return a.tape().record("sigmoid", std::move(out), {a}, [ia, dydx = std::move(dydx)](Tape& t, const Matrix& g) {
        t.accumulate(ia, g.cwiseProduct(dydx));
    });
}

Var pow_scalar(const Var& a, double p) {
    const std::size_t ia = a.id();
    Matrix out = a.value().array().pow(p);
    return a.tape().record("pow_scalar", std::move(out), {a}, [ia, p](Tape& t, const Matrix& g) {
        Matrix d = p * t.value(ia).array().pow(p - 1.0);
        t.accumulate(ia, g.cwiseProduct(d));
    });
}

Var clamp(const Var& a, double lo, double hi) {
    const std::size_t ia = a.id();
    Matrix out = a.value().cwiseMax(lo).cwiseMin(hi);
    return a.tape().record("clamp", std::move(out), {a}, [ia, lo, hi](Tape& t, const Matrix& g) {
        const Matrix& x = t.value(ia);
        Matrix mask = ((x.array() >= lo) && (x.array() <= hi)).cast<double>();
        t.accumulate(ia, g.cwiseProduct(mask));
    });
}

Var sum(const Var& a) {
    const std::size_t ia = a.id();
    Matrix out(1, 1);
    out(0, 0) = a.value().sum();
    return a.tape().record("sum", std::move(out), {a}, [ia](Tape& t, const Matrix& g) {
        const Matrix& x = t.value(ia);
        t.accumulate(ia, Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
    });
}

Var mean(const Var& a) {
    const Eigen::Index n = a.value().size();
    if (n == 0) throw ShapeError("mean: empty operand");
    const std::size_t ia = a.id();
    Matrix out(1, 1);
    out(0, 0) = a.value().mean();
    return a.tape().record("mean", std::move(out), {a}, [ia, n](Tape& t, const Matrix& g) {
        const Matrix& x = t.value(ia);
        t.accumulate(ia, Matrix::Constant(x.rows(), x.cols(), g(0, 0) / static_cast<double>(n)));
    });
}

Var logsumexp(const Var& a) {
    const Matrix& av = a.value();
    if (av.size() == 0) throw ShapeError("logsumexp: empty operand");
    const double m = av.maxCoeff();
    Matrix w = (av.array() - m).exp();
    const double s = w.sum();
    w /= s;
    Matrix out(1, 1);
    out(0, 0) = m + std::log(s);
    const std::size_t ia = a.id();
    return a.tape().record("logsumexp", std::move(out), {a},
                           [ia, w = std::move(w)](Tape& t, const Matrix& g) { t.accumulate(ia, w * g(0, 0)); });
}

Var logsumexp_rows(const Var& a, const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& mask) {
    const Matrix& av = a.value();
    if (mask.rows() != av.rows() || mask.cols() != av.cols()) throw ShapeError("logsumexp_rows: mask shape");
    Matrix out(av.rows(), 1);
    Matrix w = Matrix::Zero(av.rows(), av.cols());
    for (Eigen::Index i = 0; i < av.rows(); ++i) {
        double m = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < av.cols(); ++j) {
            if (mask(i, j)) m = std::max(m, av(i, j));
        }
        if (!std::isfinite(m)) throw ShapeError("logsumexp_rows: row with no selected entries");
        double s = 0.0;
        for (Eigen::Index j = 0; j < av.cols(); ++j) {
            if (mask(i, j)) {
                w(i, j) = std::exp(av(i, j) - m);
                s += w(i, j);
            }
        }
        w.row(i) /= s;
        out(i, 0) = m + std::log(s);
    }
    const std::size_t ia = a.id();
    return a.tape().record("logsumexp_rows", std::move(out), {a}, [ia, w = std::move(w)](Tape& t, const Matrix& g) {
        t.accumulate(ia, w.array().colwise() * g.col(0).array());
    });
}

Var row_sum(const Var& a) {
    const std::size_t ia = a.id();
    Matrix out = a.value().rowwise().sum();
    return a.tape().record("row_sum", std::move(out), {a}, [ia](Tape& t, const Matrix& g) {
        const Matrix& x = t.value(ia);
        Matrix ga = g.col(0).replicate(1, x.cols());
        t.accumulate(ia, ga);
    });
}

Var mean_rows(const Var& a) {
    const Eigen::Index n = a.rows();
    if (n == 0) throw ShapeError("mean_rows: no rows");
    const std::size_t ia = a.id();
    Matrix out = a.value().colwise().mean();
    return a.tape().record("mean_rows", std::move(out), {a}, [ia, n](Tape& t, const Matrix& g) {
        Matrix ga = (g / static_cast<double>(n)).replicate(n, 1);
        t.accumulate(ia, ga);
    });
}

Var softmax_rows(const Var& a) {
    const Matrix& av = a.value();
    Matrix y(av.rows(), av.cols());
    for (Eigen::Index i = 0; i < av.rows(); ++i) {
        const double m = av.row(i).maxCoeff();
        y.row(i) = (av.row(i).array() - m).exp();
        y.row(i) /= y.row(i).sum();
    }
    const std::size_t ia = a.id();
    Matrix yc = y;
    return a.tape().record("softmax_rows", std::move(y), {a}, [ia, yc = std::move(yc)](Tape& t, const Matrix& g) {
        Eigen::VectorXd dots = g.cwiseProduct(yc).rowwise().sum();
        Matrix ga = yc.array() * (g.array().colwise() - dots.array());
        t.accumulate(ia, ga);
    });
}

Var l2_normalize_rows(const Var& a) {
    Eigen::VectorXd norms;
    Matrix y = l2_normalize(a.value(), norms);
    const std::size_t ia = a.id();
    Matrix yc = y;
    return a.tape().record("l2_normalize_rows", std::move(y), {a},
                           [ia, yc = std::move(yc), norms = std::move(norms)](Tape& t, const Matrix& g) {
                               Matrix ga = Matrix::Zero(g.rows(), g.cols());
                               for (Eigen::Index i = 0; i < g.rows(); ++i) {
                                   if (norms(i) <= 0.0) continue;
                                   const double d = g.row(i).dot(yc.row(i));
                                   ga.row(i) = (g.row(i) - d * yc.row(i)) / norms(i);
                               }
                               t.accumulate(ia, ga);
                           });
}

Var pairwise_sq_dist(const Var& a, const Var& b) {
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    if (av.cols() != bv.cols()) throw ShapeError("pairwise_sq_dist: column counts differ");
    Matrix out(av.rows(), bv.rows());
    for (Eigen::Index i = 0; i < av.rows(); ++i) {
        for (Eigen::Index j = 0; j < bv.rows(); ++j) out(i, j) = (av.row(i) - bv.row(j)).squaredNorm();
    }
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape().record("pairwise_sq_dist", std::move(out), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
        const Matrix& x = t.value(ia);
        const Matrix& y = t.value(ib);
        if (t.requires_grad(ia)) {
            Matrix ga = 2.0 * (x.array().colwise() * g.rowwise().sum().array()).matrix() - 2.0 * g * y;
            t.accumulate(ia, ga);
        }
        if (t.requires_grad(ib)) {
            Eigen::VectorXd cs = g.colwise().sum().transpose();
            Matrix gb = 2.0 * (y.array().colwise() * cs.array()).matrix() - 2.0 * g.transpose() * x;
            t.accumulate(ib, gb);
        }
    });
}

Var cosine_matrix(const Var& a, const Var& b) {
    return matmul(l2_normalize_rows(a), transpose(l2_normalize_rows(b)));
}

Var scale_rows(const Var& a, const Var& s) {
    const Matrix& av = a.value();
    const Matrix& sv = s.value();
    if (sv.cols() != 1 || sv.rows() != av.rows()) throw ShapeError("scale_rows: scale must be Rx1");
    Matrix out = av.array().colwise() * sv.col(0).array();
    const std::size_t ia = a.id(), is = s.id();
    return a.tape().record("scale_rows", std::move(out), {a, s}, [ia, is](Tape& t, const Matrix& g) {
        if (t.requires_grad(ia)) {
            Matrix ga = g.array().colwise() * t.value(is).col(0).array();
            t.accumulate(ia, ga);
        }
        if (t.requires_grad(is)) t.accumulate(is, g.cwiseProduct(t.value(ia)).rowwise().sum());
    });
}

Var scale_cols(const Var& a, const Var& s) {
    const Matrix& av = a.value();
    const Matrix& sv = s.value();
    if (sv.cols() != 1 || sv.rows() != av.cols()) throw ShapeError("scale_cols: scale must be Cx1");
    Matrix out = av.array().rowwise() * sv.col(0).transpose().array();
    const std::size_t ia = a.id(), is = s.id();
    return a.tape().record("scale_cols", std::move(out), {a, s}, [ia, is](Tape& t, const Matrix& g) {
        if (t.requires_grad(ia)) {
            Matrix ga = g.array().rowwise() * t.value(is).col(0).transpose().array();
            t.accumulate(ia, ga);
        }
        if (t.requires_grad(is)) t.accumulate(is, g.cwiseProduct(t.value(ia)).colwise().sum().transpose());
    });
}

Var spmm(const SparseMatrix& s, const Var& a) {
    if (s.cols() != a.rows()) throw ShapeError("spmm: operator columns do not match operand rows");
    Matrix out = s * a.value();
    const std::size_t ia = a.id();
    SparseMatrix st = s.transpose();
    return a.tape().record("spmm", std::move(out), {a}, [ia, st = std::move(st)](Tape& t, const Matrix& g) {
        t.accumulate(ia, Matrix(st * g));
    });
}

}  // namespace eclgsr::ad
