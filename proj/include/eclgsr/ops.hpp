#pragma once

#include <utility>
#include <vector>

#include "eclgsr/autodiff.hpp"

// Differentiable operations over dense matrices. Every op records its exact
// local gradient rule on the operands' tape and rejects non-finite results.
namespace eclgsr::ad {

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
/// Same-shape addition; `b` may also be a 1xC row broadcast over rows of `a`.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
/// Elementwise (Hadamard) product of equal shapes.
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var neg(const Var& a);

/// Vertical stack; all parts share the column count.
Var concat_rows(const std::vector<Var>& parts);
Var gather_rows(const Var& a, const std::vector<Eigen::Index>& rows);
/// Column vector of a(r_k, c_k).
Var pick(const Var& a, const std::vector<std::pair<Eigen::Index, Eigen::Index>>& positions);

Var relu(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var square(const Var& a);
Var sigmoid(const Var& a);
/// a^p elementwise; callers keep the base positive for fractional p.
Var pow_scalar(const Var& a, double p);
/// Gradient passes through where lo <= a <= hi, zero elsewhere.
Var clamp(const Var& a, double lo, double hi);

/// 1x1 reductions.
Var sum(const Var& a);
Var mean(const Var& a);
/// Max-shifted log(sum(exp(a))) over all entries.
Var logsumexp(const Var& a);
/// Per-row logsumexp over entries where `mask` is true; every row needs at
/// least one selected entry. Returns Rx1.
Var logsumexp_rows(const Var& a, const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& mask);
/// Rx1 row sums.
Var row_sum(const Var& a);
/// 1xC mean over rows.
Var mean_rows(const Var& a);

Var softmax_rows(const Var& a);
/// Rows divided by their L2 norm; zero rows map to zero with zero gradient.
Var l2_normalize_rows(const Var& a);
/// D(i, j) = ||a_i - b_j||^2, evaluated by explicit differences.
Var pairwise_sq_dist(const Var& a, const Var& b);
/// cos(a_i, b_j); zero-norm rows give 0.
Var cosine_matrix(const Var& a, const Var& b);

/// Multiplies row i of `a` by s(i); `s` is Rx1.
Var scale_rows(const Var& a, const Var& s);
/// Multiplies column j of `a` by s(j); `s` is Cx1.
Var scale_cols(const Var& a, const Var& s);

/// S * a for a constant sparse operator S.
Var spmm(const SparseMatrix& s, const Var& a);

}  // namespace eclgsr::ad
