#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dalta/errors.hpp"
#include "dalta/tensor.hpp"

namespace dalta {

// One learnable weight matrix plus its gradient and Adam moment buffers.
// All four tensors share one shape for the lifetime of the block.
struct ParamBlock {
    std::string name;
    Tensor2 value;
    Tensor2 grad;
    Tensor2 adam_m;
    Tensor2 adam_v;
    long step_count = 0;

    ParamBlock(std::string n, int rows, int cols)
        : name(std::move(n)), value(rows, cols), grad(rows, cols),
          adam_m(rows, cols), adam_v(rows, cols) {}

    void zero_grad() { grad.fill(0.0); }
};

struct AdamConfig {
    double lr = 2e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Standard Adam with bias correction. The gradient is left intact; callers
// zero it explicitly before the next backward pass.
inline void adam_step(ParamBlock& p, const AdamConfig& cfg) {
    if (!p.grad.all_finite())
        throw TrainingDivergence("non-finite gradient in parameter " + p.name);
    p.step_count += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p.step_count));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p.step_count));
    for (size_t i = 0; i < p.value.data.size(); ++i) {
        const double g = p.grad.data[i];
        p.adam_m.data[i] = cfg.beta1 * p.adam_m.data[i] + (1.0 - cfg.beta1) * g;
        p.adam_v.data[i] = cfg.beta2 * p.adam_v.data[i] + (1.0 - cfg.beta2) * g * g;
        const double m_hat = p.adam_m.data[i] / bc1;
        const double v_hat = p.adam_v.data[i] / bc2;
        p.value.data[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

inline void adam_step_all(std::vector<ParamBlock*> params, const AdamConfig& cfg) {
    for (ParamBlock* p : params) adam_step(*p, cfg);
}

inline void zero_grad_all(std::vector<ParamBlock*> params) {
    for (ParamBlock* p : params) p->zero_grad();
}

} // namespace dalta
