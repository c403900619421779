#pragma once

#include <map>
#include <string>

#include "eclgsr/param_store.hpp"

namespace eclgsr {

/// Step-decay schedule: base * 0.5^floor(epoch / halve_every).
double lr_schedule(int epoch, double base = 1e-3, int halve_every = 20);

/// Adam with bias-corrected moments, one state slot per parameter name.
class Adam {
  public:
    explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    /// Applies one update with learning rate `lr`. Every parameter must carry
    /// a gradient from the latest backward pass.
    void step(ParamStore& params, double lr);

    long steps_taken() const { return t_; }

  private:
    struct Moments {
        Matrix m;
        Matrix v;
    };

    double beta1_;
    double beta2_;
    double eps_;
    long t_ = 0;
    std::map<std::string, Moments> state_;
};

}  // namespace eclgsr
