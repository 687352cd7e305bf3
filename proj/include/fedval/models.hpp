// Task model and evaluator policy with their optimizers. The task model is
// binary logistic regression (d weights + bias in one flat vector); the
// evaluator is a small MLP with ReLU hidden layers and a sigmoid output
// that maps an uploaded gradient to a selection probability. Backward
// passes are analytic and checked against finite differences in the tests.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fedval/dense.hpp"
#include "fedval/rng.hpp"

namespace fedval::models {

using numkit::DenseMatrix;
using numkit::RngStream;

// Flat parameter (or gradient) vector; task model length is d + 1 with the
// bias stored last.
using ParamVector = std::vector<double>;

inline constexpr double kProbClamp = 1e-12;

// ---------------------------------------------------------------------------
// Logistic regression task model
// ---------------------------------------------------------------------------

inline std::vector<double> lr_forward(const ParamVector& theta, const DenseMatrix& x) {
    if (theta.size() != x.cols + 1)
        throw std::invalid_argument("lr_forward: parameter/feature dimension mismatch");
    std::vector<double> p(x.rows);
    const double bias = theta[x.cols];
    for (std::size_t r = 0; r < x.rows; ++r) {
        const double* row = x.row(r);
        double z = bias;
        for (std::size_t c = 0; c < x.cols; ++c) z += row[c] * theta[c];
        p[r] = numkit::sigmoid(z);
    }
    return p;
}

struct LossGrad {
    double loss = 0.0;
    ParamVector grad;
};

// Mean binary cross-entropy and its gradient X^T(p - y) / m (bias included).
// Probabilities are clamped at 1e-12 inside the logs only.
inline LossGrad lr_loss_and_grad(const ParamVector& theta, const DenseMatrix& x,
                                 const std::vector<double>& y) {
    if (x.rows == 0) throw std::invalid_argument("lr_loss_and_grad: empty batch");
    if (y.size() != x.rows) throw std::invalid_argument("lr_loss_and_grad: label count mismatch");
    LossGrad out;
    out.grad.assign(theta.size(), 0.0);
    const auto p = lr_forward(theta, x);
    const double inv_m = 1.0 / static_cast<double>(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) {
        const double pc = std::min(std::max(p[r], kProbClamp), 1.0 - kProbClamp);
        out.loss -= y[r] * std::log(pc) + (1.0 - y[r]) * std::log(1.0 - pc);
        const double resid = (p[r] - y[r]) * inv_m;
        const double* row = x.row(r);
        for (std::size_t c = 0; c < x.cols; ++c) out.grad[c] += resid * row[c];
        out.grad[x.cols] += resid;
    }
    out.loss *= inv_m;
    return out;
}

inline double lr_loss(const ParamVector& theta, const DenseMatrix& x,
                      const std::vector<double>& y) {
    if (x.rows == 0) throw std::invalid_argument("lr_loss: empty batch");
    const auto p = lr_forward(theta, x);
    double loss = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) {
        const double pc = std::min(std::max(p[r], kProbClamp), 1.0 - kProbClamp);
        loss -= y[r] * std::log(pc) + (1.0 - y[r]) * std::log(1.0 - pc);
    }
    return loss / static_cast<double>(x.rows);
}

inline double lr_accuracy(const ParamVector& theta, const DenseMatrix& x,
                          const std::vector<double>& y) {
    const auto p = lr_forward(theta, x);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < x.rows; ++r) hits += ((p[r] >= 0.5) == (y[r] >= 0.5));
    return static_cast<double>(hits) / static_cast<double>(x.rows);
}

inline ParamVector sgd_step(const ParamVector& theta, const ParamVector& grad, double lr) {
    if (theta.size() != grad.size()) throw std::invalid_argument("sgd_step: shape mismatch");
    ParamVector out(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) out[i] = theta[i] - lr * grad[i];
    return out;
}

// ---------------------------------------------------------------------------
// Evaluator policy: MLP, ReLU hidden layers, sigmoid scalar output
// ---------------------------------------------------------------------------

struct MlpPolicy {
    std::vector<std::size_t> dims;  // {input, hidden..., 1}
    // Flat layout, layer by layer: W row-major [out x in], then b [out].
    std::vector<double> params;

    std::size_t layers() const { return dims.size() - 1; }
    std::size_t layer_offset(std::size_t l) const {
        std::size_t off = 0;
        for (std::size_t k = 0; k < l; ++k) off += dims[k] * dims[k + 1] + dims[k + 1];
        return off;
    }
    const double* weights(std::size_t l) const { return params.data() + layer_offset(l); }
    const double* biases(std::size_t l) const {
        return params.data() + layer_offset(l) + dims[l] * dims[l + 1];
    }
};

// Hidden layers He-uniform (limit sqrt(6 / fan_in), row-major draw order);
// output layer zero so the initial selection probability is exactly 0.5.
inline MlpPolicy init_policy(const std::vector<std::size_t>& dims, RngStream& rng) {
    if (dims.size() < 2 || dims.back() != 1)
        throw std::invalid_argument("init_policy: dims must end in a scalar output");
    MlpPolicy policy;
    policy.dims = dims;
    policy.params.assign(policy.layer_offset(dims.size() - 1), 0.0);
    for (std::size_t l = 0; l + 2 < dims.size(); ++l) {
        const double limit = std::sqrt(6.0 / static_cast<double>(dims[l]));
        double* w = policy.params.data() + policy.layer_offset(l);
        for (std::size_t i = 0; i < dims[l] * dims[l + 1]; ++i)
            w[i] = (2.0 * rng.uniform01() - 1.0) * limit;
        // biases stay zero
    }
    return policy;
}

// Activations for a batch of inputs, kept for the backward pass. acts[l]
// holds the post-ReLU activations of layer l (N x dims[l+1]); the final
// layer's sigmoid outputs live in omega.
struct PolicyCache {
    std::vector<DenseMatrix> acts;
    std::vector<double> omega;
};

namespace detail {
// Four-accumulator dot product; fixed summation order, so results are
// reproducible across runs and shared by every forward path.
inline double dot4(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    double tail = 0.0;
    for (; k < n; ++k) tail += a[k] * b[k];
    return ((s0 + s1) + (s2 + s3)) + tail;
}
}  // namespace detail

inline PolicyCache policy_forward_batch(const MlpPolicy& policy,
                                        const std::vector<const double*>& inputs,
                                        std::size_t input_dim) {
    if (input_dim != policy.dims[0])
        throw std::invalid_argument("policy_forward_batch: input length mismatch");
    const std::size_t n = inputs.size();
    const std::size_t hidden_layers = policy.layers() - 1;
    PolicyCache cache;
    cache.acts.reserve(hidden_layers);
    for (std::size_t l = 0; l < hidden_layers; ++l)
        cache.acts.emplace_back(n, policy.dims[l + 1]);
    cache.omega.resize(n);

    // Sample-blocked so each weight row stays cache-hot across a block;
    // per-sample arithmetic order is unchanged.
    constexpr std::size_t kBlock = 8;
    for (std::size_t l = 0; l < hidden_layers; ++l) {
        const std::size_t in_dim = policy.dims[l];
        const std::size_t out_dim = policy.dims[l + 1];
        const double* w = policy.weights(l);
        const double* b = policy.biases(l);
        DenseMatrix& act = cache.acts[l];
        for (std::size_t n0 = 0; n0 < n; n0 += kBlock) {
            const std::size_t n1 = std::min(n, n0 + kBlock);
            for (std::size_t o = 0; o < out_dim; ++o) {
                const double* wrow = w + o * in_dim;
                for (std::size_t i = n0; i < n1; ++i) {
                    const double* src = (l == 0) ? inputs[i] : cache.acts[l - 1].row(i);
                    const double z = b[o] + detail::dot4(wrow, src, in_dim);
                    act.row(i)[o] = z > 0.0 ? z : 0.0;
                }
            }
        }
    }

    const std::size_t last = policy.layers() - 1;
    const std::size_t in_dim = policy.dims[last];
    const double* w = policy.weights(last);
    const double bias = policy.biases(last)[0];
    for (std::size_t i = 0; i < n; ++i) {
        const double* src = hidden_layers == 0 ? inputs[i] : cache.acts[last - 1].row(i);
        cache.omega[i] = numkit::sigmoid(bias + detail::dot4(w, src, in_dim));
    }
    return cache;
}

inline double policy_forward(const MlpPolicy& policy, const ParamVector& input) {
    const std::vector<const double*> one = {input.data()};
    return policy_forward_batch(policy, one, input.size()).omega[0];
}

// Sum over the batch of upstream[i] * d(omega_i)/d(params), as one flat
// gradient. Requires the cache produced by policy_forward_batch on the
// same inputs.
inline std::vector<double> policy_backward_batch(const MlpPolicy& policy,
                                                 const std::vector<const double*>& inputs,
                                                 const PolicyCache& cache,
                                                 const std::vector<double>& upstream) {
    const std::size_t n = inputs.size();
    if (upstream.size() != n)
        throw std::invalid_argument("policy_backward_batch: upstream length mismatch");
    std::vector<double> grad(policy.params.size(), 0.0);
    const std::size_t hidden_layers = policy.layers() - 1;

    // deltas for the current layer, one row per sample
    DenseMatrix delta(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double om = cache.omega[i];
        delta.at(i, 0) = upstream[i] * om * (1.0 - om);
    }

    constexpr std::size_t kBlock = 8;
    for (std::size_t l = policy.layers(); l-- > 0;) {
        const std::size_t in_dim = policy.dims[l];
        const std::size_t out_dim = policy.dims[l + 1];
        double* dw = grad.data() + policy.layer_offset(l);
        double* db = dw + in_dim * out_dim;
        // blocked over samples with the o-loop outside, so each gradient row
        // takes a run of consecutive rank-1 updates while hot; accumulation
        // order per element stays ascending in the sample index.
        for (std::size_t n0 = 0; n0 < n; n0 += kBlock) {
            const std::size_t n1 = std::min(n, n0 + kBlock);
            for (std::size_t o = 0; o < out_dim; ++o) {
                double* wrow = dw + o * in_dim;
                for (std::size_t i = n0; i < n1; ++i) {
                    const double d = delta.row(i)[o];
                    if (d == 0.0) continue;
                    const double* src = (l == 0) ? inputs[i] : cache.acts[l - 1].row(i);
                    for (std::size_t k = 0; k < in_dim; ++k) wrow[k] += d * src[k];
                    db[o] += d;
                }
            }
        }
        if (l == 0) break;
        // propagate: delta_prev = (W^T delta) masked by ReLU activity
        const double* w = policy.weights(l);
        DenseMatrix prev(n, in_dim);
        for (std::size_t i = 0; i < n; ++i) {
            const double* drow = delta.row(i);
            const double* act = cache.acts[l - 1].row(i);
            double* prow = prev.row(i);
            for (std::size_t k = 0; k < in_dim; ++k) {
                if (act[k] <= 0.0) {
                    prow[k] = 0.0;
                    continue;
                }
                double s = 0.0;
                for (std::size_t o = 0; o < out_dim; ++o) s += w[o * in_dim + k] * drow[o];
                prow[k] = s;
            }
        }
        delta = std::move(prev);
    }
    return grad;
}

inline std::vector<double> policy_backward(const MlpPolicy& policy, const ParamVector& input,
                                           double upstream) {
    const std::vector<const double*> one = {input.data()};
    const auto cache = policy_forward_batch(policy, one, input.size());
    return policy_backward_batch(policy, one, cache, {upstream});
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double lr = 1e-5;  // alpha_phi

    static AdamState for_params(std::size_t n, double lr = 1e-5) {
        AdamState s;
        s.m.assign(n, 0.0);
        s.v.assign(n, 0.0);
        s.lr = lr;
        return s;
    }
};

// Standard Adam with bias correction; ascent adds the update.
inline void adam_step(AdamState& state, std::vector<double>& params,
                      const std::vector<double>& grad, bool ascent) {
    if (params.size() != grad.size() || params.size() != state.m.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        const double step = state.lr * mhat / (std::sqrt(vhat) + state.eps);
        params[i] += ascent ? step : -step;
    }
}

}  // namespace fedval::models
