#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "punctr/errors.hpp"
#include "punctr/tensor.hpp"

namespace punctr {

// (1-beta) * one_hot(class_index) + beta/K. The true class keeps the largest
// probability for any beta < 1.
inline VecX<double> smooth_labels(int class_index, int num_classes, double beta) {
    if (beta < 0.0 || beta >= 1.0)
        throw ConfigError("smooth_labels: beta must be in [0, 1)");
    if (class_index < 0 || class_index >= num_classes)
        throw ConfigError("smooth_labels: class index out of range");
    VecX<double> t = VecX<double>::Constant(num_classes, beta / num_classes);
    t(class_index) += 1.0 - beta;
    return t;
}

inline double cross_entropy(const VecX<double>& p, const VecX<double>& target) {
    if (p.size() != target.size()) throw ConfigError("cross_entropy: size mismatch");
    double loss = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) loss -= target(i) * std::log(p(i));
    return loss;
}

// Cross entropy of a smoothed one-hot target against softmax(logits), fused
// for stability: loss = logsumexp(z) - sum_i t_i z_i, d_logits = p - t.
template <typename T>
inline double softmax_xent_row(const Eigen::Ref<const Eigen::RowVectorX<T>>& logits,
                               int class_index, double beta,
                               Eigen::Ref<Eigen::RowVectorX<T>> d_logits) {
    const int k = static_cast<int>(logits.size());
    const T m = logits.maxCoeff();
    Eigen::RowVectorX<T> e = (logits.array() - m).exp();
    const T z = e.sum();
    const double lse = static_cast<double>(m) + std::log(static_cast<double>(z));

    const double off = beta / k;
    double dot = 0.0;
    for (int i = 0; i < k; ++i) {
        const double t_i = off + (i == class_index ? 1.0 - beta : 0.0);
        dot += t_i * static_cast<double>(logits(i));
        d_logits(i) = static_cast<T>(static_cast<double>(e(i)) / static_cast<double>(z) - t_i);
    }
    return lse - dot;
}

// The raw weighted objective over one batch: sum of human-example losses
// plus alpha times the sum of pseudo-example losses.
inline double combined_st_loss(std::span<const double> human_losses,
                               std::span<const double> pseudo_losses, double alpha) {
    if (alpha < 0.0) throw ConfigError("combined_st_loss: alpha must be >= 0");
    double h = 0.0, p = 0.0;
    for (double v : human_losses) h += v;
    for (double v : pseudo_losses) p += v;
    return h + alpha * p;
}

}  // namespace punctr
