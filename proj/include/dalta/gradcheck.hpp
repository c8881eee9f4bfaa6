#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <vector>

#include "dalta/optim.hpp"
#include "dalta/rng.hpp"

namespace dalta {

// Central-difference check of analytic gradients.
//
// loss_fn(want_grad) evaluates the loss at the current parameter values; when
// want_grad is true it must also populate every param's grad field. The loss
// must be deterministic across calls: any sampling noise (reparameterization
// eps in particular) has to be frozen inside the closure.
//
// Probes n_probe randomly chosen coordinates across all params (n_probe <= 0
// probes every coordinate) and returns
//   max over probes of |analytic - numeric| / max(1e-8, |numeric|).
inline double finite_diff_check(const std::function<double(bool)>& loss_fn,
                                const std::vector<ParamBlock*>& params,
                                double h, int n_probe, Rng& rng) {
    for (ParamBlock* p : params) p->zero_grad();
    loss_fn(true);

    size_t total = 0;
    for (const ParamBlock* p : params) total += p->value.size();

    std::vector<size_t> coords;
    if (n_probe <= 0 || static_cast<size_t>(n_probe) >= total) {
        coords.resize(total);
        for (size_t i = 0; i < total; ++i) coords[i] = i;
    } else {
        for (int i = 0; i < n_probe; ++i)
            coords.push_back(static_cast<size_t>(rng.next_u64() % total));
    }

    auto locate = [&](size_t flat) -> std::pair<ParamBlock*, size_t> {
        for (ParamBlock* p : params) {
            if (flat < p->value.size()) return {p, flat};
            flat -= p->value.size();
        }
        return {nullptr, 0};
    };

    double worst = 0.0;
    for (size_t flat : coords) {
        auto [p, idx] = locate(flat);
        const double analytic = p->grad.data[idx];
        const double saved = p->value.data[idx];
        p->value.data[idx] = saved + h;
        const double up = loss_fn(false);
        p->value.data[idx] = saved - h;
        const double down = loss_fn(false);
        p->value.data[idx] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double rel = std::fabs(analytic - numeric) / std::max(1e-8, std::fabs(numeric));
        worst = std::max(worst, rel);
    }
    return worst;
}

} // namespace dalta
