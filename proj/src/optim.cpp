#include "eclgsr/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace eclgsr {

double lr_schedule(int epoch, double base, int halve_every) {
    if (epoch < 0 || halve_every <= 0) throw std::invalid_argument("lr_schedule: bad epoch or period");
    return base * std::pow(0.5, epoch / halve_every);
}

void Adam::step(ParamStore& params, double lr) {
    for (const auto& [name, p] : params) {
        if (!p.has_grad()) throw std::logic_error("Adam::step: parameter " + name + " has no gradient");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (auto& [name, p] : params) {
        auto& s = state_[name];
        if (s.m.size() == 0) {
            s.m = Matrix::Zero(p.value.rows(), p.value.cols());
            s.v = Matrix::Zero(p.value.rows(), p.value.cols());
        }
        s.m = beta1_ * s.m + (1.0 - beta1_) * p.grad;
        s.v = beta2_ * s.v + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
        const auto m_hat = s.m.array() / bc1;
        const auto v_hat = s.v.array() / bc2;
        p.value.array() -= lr * m_hat / (v_hat.sqrt() + eps_);
    }
}

}  // namespace eclgsr
