#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <string>

#include "eclgsr/autodiff.hpp"
#include "eclgsr/param_store.hpp"

namespace eclgsr {

/// Builds a scalar loss on a fresh tape from the current parameter values.
using ScalarFn = std::function<ad::Var(ad::Tape&, ParamStore&)>;

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    Eigen::Index worst_index = -1;
    std::size_t coords_checked = 0;
};

/// Central-difference check of every coordinate of every parameter (inputs
/// to be checked belong in the store too). Error per coordinate is
/// |a - n| / max(1, |a|, |n|).
GradCheckReport check_gradients(const ScalarFn& f, ParamStore& params, double eps = 1e-5,
                                std::size_t max_coords_per_param = std::numeric_limits<std::size_t>::max());

}  // namespace eclgsr
