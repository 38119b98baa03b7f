#pragma once

#include <cmath>
#include <string>

#include "punctr/errors.hpp"
#include "punctr/model.hpp"
#include "punctr/tensor.hpp"

namespace punctr {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long total_steps = 0;  // > 0 enables linear decay of the rate to zero
};

// Learning rate for 1-based step t: full rate at t=1, linearly down to
// rate/total_steps at the final planned step. Constant when total_steps==0.
inline double lr_at_step(double base_lr, long t, long total_steps) {
    if (total_steps <= 0) return base_lr;
    const long remaining = total_steps - (t - 1);
    return remaining <= 0 ? 0.0 : base_lr * static_cast<double>(remaining) /
                                      static_cast<double>(total_steps);
}

// One bias-corrected Adam update on a single tensor.
template <typename T>
inline void adam_update_tensor(MatX<T>& w, const MatX<T>& g, MatX<T>& m, MatX<T>& v, long t,
                               double lr, const AdamConfig& cfg) {
    const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
    const T corr1 = static_cast<T>(1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
    const T corr2 = static_cast<T>(1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
    m = b1 * m + (T(1) - b1) * g;
    v = (b2 * v.array() + (T(1) - b2) * g.array().square()).matrix();
    w.array() -= static_cast<T>(lr) * (m.array() / corr1) /
                 ((v.array() / corr2).sqrt() + static_cast<T>(cfg.eps));
}

template <typename T>
struct AdamState {
    ModelParams<T> m, v;
    long step = 0;

    explicit AdamState(const ModelParams<T>& like) : m(zeros_like(like)), v(zeros_like(like)) {}
};

// Applies one optimizer step in place and bumps the parameter revision.
// Non-finite gradients abort with the offending tensor named.
template <typename T>
inline double optimizer_step(ModelParams<T>& params, ModelParams<T>& grads, AdamState<T>& state,
                             double base_lr, const AdamConfig& cfg = {}) {
    grads.for_each_tensor([](const std::string& name, MatX<T>& g) {
        if (!g.allFinite())
            throw TrainingError("optimizer_step: non-finite gradient in tensor " + name);
    });
    const long t = ++state.step;
    const double lr = lr_at_step(base_lr, t, cfg.total_steps);

    auto ws = params.tensor_list();
    auto gs = grads.tensor_list();
    auto ms = state.m.tensor_list();
    auto vs = state.v.tensor_list();
    for (std::size_t i = 0; i < ws.size(); ++i)
        adam_update_tensor(*ws[i].second, *gs[i].second, *ms[i].second, *vs[i].second, t, lr, cfg);
    ++params.revision;
    return lr;
}

}  // namespace punctr
