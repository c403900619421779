#include "eclgsr/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace eclgsr {

GradCheckReport check_gradients(const ScalarFn& f, ParamStore& params, double eps,
                                std::size_t max_coords_per_param) {
    if (!(eps > 0.0)) throw std::invalid_argument("check_gradients: eps must be positive");

    params.zero_grad();
    {
        ad::Tape tape;
        ad::Var loss = f(tape, params);
        tape.backward(loss);
    }

    auto evaluate = [&]() {
        ad::Tape tape;
        return f(tape, params).scalar();
    };

    GradCheckReport report;
    for (auto& [name, p] : params) {
        const Eigen::Index n = p.value.size();
        const Eigen::Index limit = static_cast<Eigen::Index>(
            std::min<std::size_t>(static_cast<std::size_t>(n), max_coords_per_param));
        // stride through large tensors so the sample spans the whole matrix
        const Eigen::Index stride = std::max<Eigen::Index>(1, n / std::max<Eigen::Index>(limit, 1));
        for (Eigen::Index k = 0, idx = 0; k < limit && idx < n; ++k, idx += stride) {
            double& x = p.value.data()[idx];
            const double saved = x;
            x = saved + eps;
            const double up = evaluate();
            x = saved - eps;
            const double down = evaluate();
            x = saved;

            const double numeric = (up - down) / (2.0 * eps);
            const double analytic = p.has_grad() ? p.grad.data()[idx] : 0.0;
            const double err =
                std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
            ++report.coords_checked;
            if (err > report.max_rel_error || report.worst_index < 0) {
                report.max_rel_error = std::max(report.max_rel_error, err);
                if (err >= report.max_rel_error) {
                    report.worst_param = name;
                    report.worst_index = idx;
                }
            }
        }
    }
    return report;
}

}  // namespace eclgsr
