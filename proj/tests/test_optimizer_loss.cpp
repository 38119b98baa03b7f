// Hand-computed oracles and brute-force cross-checks for the loss helpers and
// the Adam optimizer.
#include <cmath>
#include <vector>

#include "catch2/catch_amalgamated.hpp"
#include "punctr/adam.hpp"
#include "punctr/loss.hpp"
#include "punctr/model.hpp"
#include "punctr/rng.hpp"

using namespace punctr;
using Catch::Matchers::WithinAbs;

TEST_CASE("one Adam step on a scalar matches the textbook update") {
    MatX<double> w(1, 1), g(1, 1), m(1, 1), v(1, 1);
    w << 1.0;
    g << 0.4;
    m.setZero();
    v.setZero();
    AdamConfig cfg;  // beta1=0.9, beta2=0.999, eps=1e-8
    adam_update_tensor(w, g, m, v, /*t=*/1, /*lr=*/0.1, cfg);

    // m=0.04, v=0.00016; bias correction restores m_hat=0.4, v_hat=0.16, so
    // the update is 0.1 * 0.4 / (0.4 + 1e-8).
    const double expected = 1.0 - 0.1 * 0.4 / (0.4 + 1e-8);
    REQUIRE_THAT(w(0, 0), WithinAbs(expected, 1e-15));
    REQUIRE_THAT(w(0, 0), WithinAbs(0.9000000025, 1e-10));
    REQUIRE_THAT(m(0, 0), WithinAbs(0.04, 1e-15));
    REQUIRE_THAT(v(0, 0), WithinAbs(0.00016, 1e-15));

    // A second step with the same gradient: bias-corrected moments stay at
    // 0.4 and 0.16, so the step size repeats.
    const double before = w(0, 0);
    adam_update_tensor(w, g, m, v, /*t=*/2, /*lr=*/0.1, cfg);
    REQUIRE_THAT(before - w(0, 0), WithinAbs(0.1 * 0.4 / (0.4 + 1e-8), 1e-12));
}

TEST_CASE("Adam treats tensor coordinates independently") {
    MatX<double> w(2, 2), g(2, 2), m(2, 2), v(2, 2);
    w << 1.0, -2.0, 0.5, 3.0;
    g << 0.4, -0.4, 0.0, 4.0;
    m.setZero();
    v.setZero();
    adam_update_tensor(w, g, m, v, 1, 0.1, AdamConfig{});
    // Zero gradient leaves the weight untouched; the sign of the update
    // follows the sign of the gradient; bias correction makes the first-step
    // magnitude nearly lr for any nonzero gradient.
    REQUIRE(w(1, 0) == 0.5);
    REQUIRE_THAT(w(0, 0), WithinAbs(1.0 - 0.1 * 0.4 / (0.4 + 1e-8), 1e-15));
    REQUIRE_THAT(w(0, 1), WithinAbs(-2.0 + 0.1 * 0.4 / (0.4 + 1e-8), 1e-15));
    REQUIRE_THAT(w(1, 1), WithinAbs(3.0 - 0.1 * 4.0 / (4.0 + 1e-8), 1e-15));
}

TEST_CASE("learning rate decays linearly to zero over the planned steps") {
    REQUIRE(lr_at_step(0.2, 1, 0) == 0.2);
    REQUIRE(lr_at_step(0.2, 1000000, 0) == 0.2);
    REQUIRE(lr_at_step(1.0, 1, 4) == 1.0);
    REQUIRE(lr_at_step(1.0, 2, 4) == 0.75);
    REQUIRE(lr_at_step(1.0, 3, 4) == 0.5);
    REQUIRE(lr_at_step(1.0, 4, 4) == 0.25);
    REQUIRE(lr_at_step(1.0, 5, 4) == 0.0);
    REQUIRE(lr_at_step(1.0, 50, 4) == 0.0);
}

TEST_CASE("optimizer_step applies the schedule, bumps revision, rejects bad gradients") {
    ModelConfig cfg;
    cfg.num_layers = 1;
    cfg.d_model = 8;
    cfg.num_heads = 2;
    cfg.d_ff = 8;
    cfg.vocab_size = 10;
    cfg.max_positions = 8;
    cfg.num_classes = 4;
    auto params = init_params<double>(cfg, 3);
    auto grads = zeros_like(params);
    grads.cls_b.setConstant(0.5);
    AdamState<double> state(params);

    AdamConfig adam;
    adam.total_steps = 2;
    const std::uint64_t before = params.fingerprint();
    REQUIRE(optimizer_step(params, grads, state, 0.1, adam) == 0.1);
    REQUIRE(optimizer_step(params, grads, state, 0.1, adam) == 0.05);
    REQUIRE(state.step == 2);
    REQUIRE(params.revision == 2);
    REQUIRE(params.fingerprint() != before);

    grads.cls_w(0, 0) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(optimizer_step(params, grads, state, 0.1, adam), TrainingError);
}

TEST_CASE("label smoothing mixes the one-hot target with the uniform distribution") {
    const VecX<double> t = smooth_labels(2, 4, 0.1);
    REQUIRE(t.size() == 4);
    REQUIRE_THAT(t(0), WithinAbs(0.025, 1e-15));
    REQUIRE_THAT(t(1), WithinAbs(0.025, 1e-15));
    REQUIRE_THAT(t(2), WithinAbs(0.925, 1e-15));
    REQUIRE_THAT(t(3), WithinAbs(0.025, 1e-15));
    REQUIRE_THAT(t.sum(), WithinAbs(1.0, 1e-15));

    // beta = 0 is exactly one-hot.
    const VecX<double> hard = smooth_labels(1, 3, 0.0);
    REQUIRE(hard(0) == 0.0);
    REQUIRE(hard(1) == 1.0);
    REQUIRE(hard(2) == 0.0);

    REQUIRE_THROWS_AS(smooth_labels(0, 4, -0.01), ConfigError);
    REQUIRE_THROWS_AS(smooth_labels(0, 4, 1.0), ConfigError);
    REQUIRE_THROWS_AS(smooth_labels(4, 4, 0.1), ConfigError);
    REQUIRE_THROWS_AS(smooth_labels(-1, 4, 0.1), ConfigError);
}

TEST_CASE("smoothing never moves the argmax off the true class") {
    Rng rng(404);
    for (int trial = 0; trial < 500; ++trial) {
        const int k = 2 + static_cast<int>(rng.uniform_index(7));
        const int cls = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(k)));
        const double beta = 0.999 * rng.uniform();
        const VecX<double> t = smooth_labels(cls, k, beta);
        Eigen::Index argmax;
        t.maxCoeff(&argmax);
        REQUIRE(argmax == cls);
        REQUIRE_THAT(t.sum(), WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("cross_entropy against a hand example and a size guard") {
    VecX<double> p(3), t(3);
    p << 0.2, 0.3, 0.5;
    t << 0.0, 0.0, 1.0;
    REQUIRE_THAT(cross_entropy(p, t), WithinAbs(-std::log(0.5), 1e-15));
    VecX<double> t2(2);
    REQUIRE_THROWS_AS(cross_entropy(p, t2), ConfigError);
}

TEST_CASE("fused loss equals explicit softmax followed by cross entropy") {
    Rng rng(808);
    for (int trial = 0; trial < 1000; ++trial) {
        const int k = 2 + static_cast<int>(rng.uniform_index(5));
        const int cls = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(k)));
        const double beta = 0.9 * rng.uniform();
        Eigen::RowVectorX<double> z(k);
        for (int i = 0; i < k; ++i) z(i) = 8.0 * (rng.uniform() - 0.5);

        Eigen::RowVectorX<double> dz(k);
        const double fused = softmax_xent_row<double>(z, cls, beta, dz);

        // Reference: explicit softmax, smoothed target, plain cross entropy.
        VecX<double> probs = (z.transpose().array() - z.maxCoeff()).exp();
        probs /= probs.sum();
        const VecX<double> target = smooth_labels(cls, k, beta);
        REQUIRE_THAT(fused, WithinAbs(cross_entropy(probs, target), 1e-9));
        for (int i = 0; i < k; ++i)
            REQUIRE_THAT(dz(i), WithinAbs(probs(i) - target(i), 1e-9));
    }
}

TEST_CASE("softmax recovers known probabilities through the gradient identity") {
    // softmax(ln 1, ln 2, ln 3, ln 4) = (0.1, 0.2, 0.3, 0.4); with a hard
    // target d_logits = p - onehot, so p = d_logits + onehot.
    Eigen::RowVectorX<double> z(4);
    z << std::log(1.0), std::log(2.0), std::log(3.0), std::log(4.0);
    Eigen::RowVectorX<double> dz(4);
    softmax_xent_row<double>(z, 0, 0.0, dz);
    REQUIRE_THAT(dz(0) + 1.0, WithinAbs(0.1, 1e-12));
    REQUIRE_THAT(dz(1), WithinAbs(0.2, 1e-12));
    REQUIRE_THAT(dz(2), WithinAbs(0.3, 1e-12));
    REQUIRE_THAT(dz(3), WithinAbs(0.4, 1e-12));
}

TEST_CASE("extreme logits stay finite through the fused loss") {
    Eigen::RowVectorX<double> z(3), dz(3);
    z << 1000.0, -1000.0, 999.0;
    const double loss = softmax_xent_row<double>(z, 1, 0.0, dz);
    REQUIRE(std::isfinite(loss));
    REQUIRE(dz.allFinite());
    REQUIRE(loss > 1000.0);  // the true class is ~2000 nats below the winner
}

TEST_CASE("combined objective weights pseudo losses by alpha") {
    const std::vector<double> human{1.0, 0.5};
    const std::vector<double> pseudo{2.0, 1.5};
    REQUIRE_THAT(combined_st_loss(human, pseudo, 0.5), WithinAbs(3.25, 1e-15));
    REQUIRE_THAT(combined_st_loss(human, pseudo, 0.0), WithinAbs(1.5, 1e-15));
    REQUIRE_THAT(combined_st_loss(human, pseudo, 1.0), WithinAbs(5.0, 1e-15));
    REQUIRE(combined_st_loss({}, {}, 1.0) == 0.0);
    REQUIRE_THROWS_AS(combined_st_loss(human, pseudo, -0.1), ConfigError);

    // Linear in alpha: f(a) - f(0) = a * (f(1) - f(0)).
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> h(3), p(4);
        for (auto& x : h) x = rng.uniform() * 5.0;
        for (auto& x : p) x = rng.uniform() * 5.0;
        const double a = rng.uniform() * 3.0;
        const double f0 = combined_st_loss(h, p, 0.0);
        const double f1 = combined_st_loss(h, p, 1.0);
        REQUIRE_THAT(combined_st_loss(h, p, a), WithinAbs(f0 + a * (f1 - f0), 1e-12));
    }
}
