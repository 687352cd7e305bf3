// Gradient oracles: every analytic gradient here is checked against
// central finite differences computed from forward evaluations only.
#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "fedval/models.hpp"

using namespace fedval::models;
using fedval::numkit::DenseMatrix;
using fedval::numkit::RngStream;

namespace {

// Central finite differences of a scalar function over a parameter vector.
std::vector<double> finite_diff(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> params, double h = 1e-5) {
    std::vector<double> grad(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double keep = params[i];
        params[i] = keep + h;
        const double hi = f(params);
        params[i] = keep - h;
        const double lo = f(params);
        params[i] = keep;
        grad[i] = (hi - lo) / (2.0 * h);
    }
    return grad;
}

double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = std::max(std::sqrt(na), std::sqrt(nb));
    if (denom < 1e-14) return 0.0;
    return std::sqrt(diff) / denom;
}

DenseMatrix random_matrix(RngStream& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
    DenseMatrix x(rows, cols);
    for (auto& v : x.data) v = scale * rng.gaussian();
    return x;
}

std::vector<double> random_labels(RngStream& rng, std::size_t n) {
    std::vector<double> y(n);
    for (auto& v : y) v = rng.bernoulli(0.5);
    return y;
}

}  // namespace

TEST(LrForward, ZeroParamsGiveHalf) {
    RngStream rng(1, 0);
    auto x = random_matrix(rng, 5, 3);
    ParamVector theta(4, 0.0);
    for (double p : lr_forward(theta, x)) EXPECT_DOUBLE_EQ(p, 0.5);
}

TEST(LrForward, ClosedFormPoint) {
    // w = [1, -1], b = 0, x = [2, 1] -> sigmoid(1)
    DenseMatrix x(1, 2);
    x.at(0, 0) = 2.0;
    x.at(0, 1) = 1.0;
    ParamVector theta = {1.0, -1.0, 0.0};
    EXPECT_NEAR(lr_forward(theta, x)[0], 0.7310585786300049, 1e-15);
}

TEST(LrForward, OutputsInOpenUnitInterval) {
    RngStream rng(2, 0);
    auto x = random_matrix(rng, 50, 4, 10.0);
    ParamVector theta(5);
    for (auto& v : theta) v = 5.0 * rng.gaussian();
    for (double p : lr_forward(theta, x)) {
        EXPECT_GT(p, 0.0);
        EXPECT_LT(p, 1.0);
    }
}

TEST(LrForward, DimensionMismatchRejected) {
    DenseMatrix x(2, 3);
    EXPECT_THROW(lr_forward(ParamVector(3), x), std::invalid_argument);
}

TEST(LrLoss, ZeroParamsGiveLnTwo) {
    RngStream rng(3, 0);
    auto x = random_matrix(rng, 20, 6);
    auto y = random_labels(rng, 20);
    auto lg = lr_loss_and_grad(ParamVector(7, 0.0), x, y);
    EXPECT_NEAR(lg.loss, 0.6931471805599453, 1e-12);
}

TEST(LrLoss, SeparatedDataDrivesLossToZero) {
    DenseMatrix x(2, 1);
    x.at(0, 0) = 1.0;
    x.at(1, 0) = -1.0;
    std::vector<double> y = {1.0, 0.0};
    ParamVector theta = {50.0, 0.0};
    EXPECT_LT(lr_loss(theta, x, y), 1e-12);
}

TEST(LrLoss, EmptyBatchRejected) {
    EXPECT_THROW(lr_loss_and_grad(ParamVector(3), DenseMatrix(0, 2), {}), std::invalid_argument);
}

// 100 random 20x5 instances, relative error vs finite differences <= 1e-6.
TEST(LrGradient, MatchesFiniteDifferences) {
    RngStream rng(4, 0);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        auto x = random_matrix(rng, 20, 5);
        auto y = random_labels(rng, 20);
        ParamVector theta(6);
        for (auto& v : theta) v = 0.5 * rng.gaussian();
        auto analytic = lr_loss_and_grad(theta, x, y).grad;
        auto fd = finite_diff([&](const ParamVector& t) { return lr_loss(t, x, y); }, theta);
        worst = std::max(worst, rel_error(analytic, fd));
    }
    EXPECT_LE(worst, 1e-6);
}

TEST(SgdStep, Basics) {
    EXPECT_EQ(sgd_step({1.0}, {0.0}, 0.1), ParamVector{1.0});
    auto s = sgd_step({1.0}, {2.0}, 0.1);
    EXPECT_NEAR(s[0], 0.8, 1e-15);
    EXPECT_THROW(sgd_step({1.0, 2.0}, {1.0}, 0.1), std::invalid_argument);
}

// Full-batch SGD at 0.1 on a standardized separable toy set: loss strictly
// decreases for the first 50 steps.
TEST(SgdStep, MonotoneLossOnSeparableToy) {
    DenseMatrix x(8, 2);
    std::vector<double> y(8);
    for (int i = 0; i < 8; ++i) {
        const double sign = i < 4 ? 1.0 : -1.0;
        x.at(i, 0) = sign * (1.0 + 0.1 * i);
        x.at(i, 1) = -sign * (0.5 + 0.05 * i);
        y[i] = sign > 0 ? 1.0 : 0.0;
    }
    auto std = fedval::numkit::standardize_fit(x);
    fedval::numkit::standardize_apply(x, std);
    ParamVector theta(3, 0.0);
    double prev = lr_loss(theta, x, y);
    for (int step = 0; step < 50; ++step) {
        theta = sgd_step(theta, lr_loss_and_grad(theta, x, y).grad, 0.1);
        const double cur = lr_loss(theta, x, y);
        ASSERT_LT(cur, prev) << "step " << step;
        prev = cur;
    }
}

TEST(Policy, ZeroInitOutputsHalf) {
    RngStream rng(5, 0);
    auto policy = init_policy({10, 8, 8, 4, 1}, rng);
    ParamVector input(10);
    for (auto& v : input) v = rng.gaussian();
    EXPECT_DOUBLE_EQ(policy_forward(policy, input), 0.5);
}

TEST(Policy, OutputStrictlyInsideUnitInterval) {
    RngStream rng(6, 0);
    auto policy = init_policy({6, 5, 4, 1}, rng);
    // push the output layer away from zero
    for (std::size_t i = policy.layer_offset(2); i < policy.params.size(); ++i)
        policy.params[i] = 3.0;
    for (int rep = 0; rep < 50; ++rep) {
        ParamVector input(6);
        for (auto& v : input) v = 100.0 * rng.gaussian();
        const double om = policy_forward(policy, input);
        EXPECT_GT(om, 0.0);
        EXPECT_LT(om, 1.0);
    }
}

// Independent layer-by-layer evaluation of the same parameters.
TEST(Policy, MatchesHandForwardPass) {
    RngStream rng(7, 0);
    auto policy = init_policy({4, 3, 2, 1}, rng);
    for (auto& v : policy.params) v = rng.gaussian() * 0.4;  // include output layer
    ParamVector input = {0.3, -1.2, 0.8, 0.05};

    std::vector<double> act = input;
    for (std::size_t l = 0; l < policy.layers(); ++l) {
        const std::size_t in_dim = policy.dims[l], out_dim = policy.dims[l + 1];
        const double* w = policy.weights(l);
        const double* b = policy.biases(l);
        std::vector<double> next(out_dim);
        for (std::size_t o = 0; o < out_dim; ++o) {
            double z = b[o];
            for (std::size_t k = 0; k < in_dim; ++k) z += w[o * in_dim + k] * act[k];
            next[o] = (l + 1 == policy.layers()) ? fedval::numkit::sigmoid(z)
                                                 : std::max(z, 0.0);
        }
        act = std::move(next);
    }
    EXPECT_NEAR(policy_forward(policy, input), act[0], 1e-12);  // unrolled dot reassociates
}

TEST(Policy, BatchedForwardMatchesSingle) {
    RngStream rng(8, 0);
    auto policy = init_policy({12, 8, 6, 1}, rng);
    for (auto& v : policy.params) v += 0.05 * rng.gaussian();
    std::vector<ParamVector> inputs(9, ParamVector(12));
    std::vector<const double*> ptrs;
    for (auto& in : inputs) {
        for (auto& v : in) v = rng.gaussian();
        ptrs.push_back(in.data());
    }
    auto cache = policy_forward_batch(policy, ptrs, 12);
    for (std::size_t i = 0; i < inputs.size(); ++i)
        ASSERT_EQ(cache.omega[i], policy_forward(policy, inputs[i]));
}

TEST(Policy, PermutationEquivariant) {
    RngStream rng(9, 0);
    auto policy = init_policy({8, 6, 4, 1}, rng);
    for (auto& v : policy.params) v += 0.1 * rng.gaussian();
    std::vector<ParamVector> inputs(5, ParamVector(8));
    for (auto& in : inputs)
        for (auto& v : in) v = rng.gaussian();
    std::vector<const double*> fwd, rev;
    for (auto& in : inputs) fwd.push_back(in.data());
    for (auto it = inputs.rbegin(); it != inputs.rend(); ++it) rev.push_back(it->data());
    auto a = policy_forward_batch(policy, fwd, 8).omega;
    auto b = policy_forward_batch(policy, rev, 8).omega;
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i], b[a.size() - 1 - i]);
}

// >= 100 random (policy, input) instances at h = 1e-5, rel err <= 1e-4.
TEST(PolicyBackward, MatchesFiniteDifferences) {
    RngStream rng(10, 0);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        auto policy = init_policy({9, 7, 6, 5, 1}, rng);
        for (auto& v : policy.params) v += 0.3 * rng.gaussian();
        ParamVector input(9);
        for (auto& v : input) v = rng.gaussian();
        const double upstream = rng.gaussian();

        auto analytic = policy_backward(policy, input, upstream);
        auto fd = finite_diff(
            [&](const std::vector<double>& p) {
                MlpPolicy probe = policy;
                probe.params = p;
                return upstream * policy_forward(probe, input);
            },
            policy.params);
        worst = std::max(worst, rel_error(analytic, fd));
    }
    EXPECT_LE(worst, 1e-4);
}

TEST(PolicyBackward, ZeroUpstreamGivesZeroGradient) {
    RngStream rng(11, 0);
    auto policy = init_policy({5, 4, 3, 1}, rng);
    ParamVector input(5, 1.0);
    for (double g : policy_backward(policy, input, 0.0)) ASSERT_EQ(g, 0.0);
}

TEST(PolicyBackward, DeadReluBlocksFirstLayerGradient) {
    RngStream rng(12, 0);
    auto policy = init_policy({3, 4, 2, 1}, rng);
    // force every first-layer pre-activation negative for this input
    double* w = policy.params.data();
    for (std::size_t i = 0; i < 3 * 4; ++i) w[i] = -1.0;
    // nonzero deeper layers so the chain is otherwise alive
    for (std::size_t i = policy.layer_offset(1); i < policy.params.size(); ++i)
        policy.params[i] = 0.5;
    ParamVector input = {1.0, 2.0, 3.0};
    auto grad = policy_backward(policy, input, 1.0);
    for (std::size_t i = 0; i < 3 * 4 + 4; ++i)
        ASSERT_EQ(grad[i], 0.0) << "first-layer index " << i;
}

TEST(Adam, ZeroGradLeavesParamsUnchanged) {
    auto state = AdamState::for_params(3, 1e-3);
    std::vector<double> params = {1.0, -2.0, 0.5};
    const auto before = params;
    adam_step(state, params, {0.0, 0.0, 0.0}, true);
    EXPECT_EQ(params, before);
    EXPECT_EQ(state.t, 1);
}

TEST(Adam, FirstStepClosedForm) {
    auto state = AdamState::for_params(1, 1e-5);
    std::vector<double> params = {0.0};
    adam_step(state, params, {0.7}, true);
    // alpha * g / (sqrt(g^2) + eps) ~= alpha for any g > 0
    EXPECT_NEAR(params[0], 1e-5, 1e-12);

    auto descent = AdamState::for_params(1, 1e-5);
    std::vector<double> params2 = {0.0};
    adam_step(descent, params2, {0.7}, false);
    EXPECT_NEAR(params2[0], -1e-5, 1e-12);
}

TEST(Adam, DeterministicTrajectories) {
    auto s1 = AdamState::for_params(4, 1e-3);
    auto s2 = AdamState::for_params(4, 1e-3);
    std::vector<double> p1(4, 0.1), p2(4, 0.1);
    RngStream rng(13, 0);
    for (int step = 0; step < 25; ++step) {
        std::vector<double> g(4);
        for (auto& v : g) v = rng.gaussian();
        adam_step(s1, p1, g, true);
        adam_step(s2, p2, g, true);
    }
    EXPECT_EQ(p1, p2);
}

TEST(Adam, ShapeMismatchRejected) {
    auto state = AdamState::for_params(2);
    std::vector<double> params = {0.0, 0.0};
    EXPECT_THROW(adam_step(state, params, {1.0}, true), std::invalid_argument);
}
