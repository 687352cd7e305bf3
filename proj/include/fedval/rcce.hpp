// The federated REINFORCE contribution-evaluation loop. Each round: clients
// upload gradients, the evaluator maps every gradient to a selection
// probability, a Bernoulli selection picks which gradients aggregate, the
// validation loss after the update produces a baselined reward, and the
// evaluator takes one gradient-ascent REINFORCE step.
//
// Reward sign: taken literally, r = L_v - delta rewards selections that
// RAISE the validation loss. The default mode flips it (r = delta - L_v) so
// loss improvements are rewarded; the literal form stays available for
// fidelity studies. This is the one deliberate deviation in the module.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fedval/federation.hpp"
#include "fedval/models.hpp"

namespace fedval::rcce {

using dataset::Shard;
using dataset::ValidationSet;
using federation::GlobalModel;
using federation::GradientBundle;
using federation::SelectionVector;
using federation::ShardRefs;
using models::AdamState;
using models::MlpPolicy;
using models::ParamVector;
using numkit::RngStream;

enum class RewardMode { kFlipped, kLiteral };

struct RewardBaseline {
    double delta = 0.0;
    std::int64_t window = 20;  // moving-average window T
    bool initialized = false;
};

struct SelectionRound {
    std::vector<double> omega;
    SelectionVector selection;
    double reward = 0.0;
    double loss_v = 0.0;
    double val_accuracy = 0.0;
    double delta_before = 0.0;
    std::size_t n_selected = 0;
};

// omega_i = g_phi(grad_i) with the shared-weight evaluator applied to each
// client's gradient independently.
inline std::vector<double> compute_probs(const MlpPolicy& policy, const GradientBundle& bundle) {
    if (bundle.size() == 0) throw std::invalid_argument("compute_probs: empty bundle");
    std::vector<const double*> inputs;
    inputs.reserve(bundle.size());
    for (const auto& g : bundle.grads) inputs.push_back(g.data());
    return models::policy_forward_batch(policy, inputs, bundle.dim).omega;
}

inline SelectionVector sample_selection(RngStream& rng, const std::vector<double>& omega) {
    SelectionVector sel(omega.size());
    for (std::size_t i = 0; i < omega.size(); ++i)
        sel[i] = static_cast<std::uint8_t>(rng.bernoulli(omega[i]));
    return sel;
}

// First call initializes the baseline to the observed loss and returns 0.
inline double compute_reward(double loss_v, RewardBaseline& baseline, RewardMode mode) {
    if (!baseline.initialized) {
        baseline.delta = loss_v;
        baseline.initialized = true;
        return 0.0;
    }
    return mode == RewardMode::kLiteral ? loss_v - baseline.delta : baseline.delta - loss_v;
}

// delta <- ((T-1) * delta + L_v) / T, evaluated in extended precision so
// the recurrence stays within 1 ulp of exact rational arithmetic.
inline void update_baseline(RewardBaseline& baseline, double loss_v) {
    if (baseline.window <= 0) throw std::invalid_argument("update_baseline: window must be > 0");
    const long double t = static_cast<long double>(baseline.window);
    baseline.delta = static_cast<double>(((t - 1.0L) * baseline.delta + loss_v) / t);
    baseline.initialized = true;
}

// grad_phi log p(S | phi) = sum_i [ s_i / omega_i - (1 - s_i) / (1 - omega_i) ] grad_phi omega_i,
// with probabilities clamped at 1e-12 in the denominators.
inline std::vector<double> log_prob_grad(const MlpPolicy& policy, const GradientBundle& bundle,
                                         const std::vector<double>& omega,
                                         const SelectionVector& selection) {
    if (omega.size() != bundle.size() || selection.size() != bundle.size())
        throw std::invalid_argument("log_prob_grad: length mismatch");
    std::vector<const double*> inputs;
    inputs.reserve(bundle.size());
    for (const auto& g : bundle.grads) inputs.push_back(g.data());
    const auto cache = models::policy_forward_batch(policy, inputs, bundle.dim);
    std::vector<double> upstream(bundle.size());
    for (std::size_t i = 0; i < bundle.size(); ++i) {
        const double om = std::max(std::min(omega[i], 1.0 - models::kProbClamp), models::kProbClamp);
        upstream[i] = selection[i] ? 1.0 / om : -1.0 / (1.0 - om);
    }
    return models::policy_backward_batch(policy, inputs, cache, upstream);
}

// Single-sample REINFORCE ascent step: phi updated with r * grad log p.
inline void evaluator_update(AdamState& adam, MlpPolicy& policy, double reward,
                             const std::vector<double>& logprob_grad) {
    std::vector<double> ascent_grad(logprob_grad.size());
    for (std::size_t i = 0; i < logprob_grad.size(); ++i) ascent_grad[i] = reward * logprob_grad[i];
    models::adam_step(adam, policy.params, ascent_grad, /*ascent=*/true);
}

struct RcceState {
    GlobalModel model;
    MlpPolicy policy;
    AdamState adam;
    RewardBaseline baseline;
};

struct RcceOptions {
    double alpha_theta = 0.1;
    RewardMode reward_mode = RewardMode::kFlipped;
    // Test/parity hook: pin every omega to this value and freeze the
    // evaluator (no sampling surprise, no policy update).
    std::optional<double> forced_omega;
    bool freeze_evaluator = false;
    unsigned threads = 1;
};

inline RcceState make_state(std::size_t task_dim, const std::vector<std::size_t>& hidden,
                            double alpha_phi, std::int64_t baseline_window, RngStream& rng) {
    RcceState state;
    state.model = GlobalModel::zeros(task_dim);
    std::vector<std::size_t> dims;
    dims.push_back(task_dim);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(1);
    state.policy = models::init_policy(dims, rng);
    state.adam = AdamState::for_params(state.policy.params.size(), alpha_phi);
    state.baseline.window = baseline_window;
    return state;
}

// One full Algorithm-1 round. Order is fixed: collect -> probabilities ->
// sample -> selective update -> validation loss -> reward -> policy
// gradient -> evaluator ascent -> baseline update. The global model is
// updated before the reward is computed. A round that selects nobody skips
// the task update but still trains the evaluator.
inline SelectionRound run_rcce_round(RcceState& state, const ShardRefs& shards,
                                     const ValidationSet& validation, RngStream& rng,
                                     const RcceOptions& opts = {}) {
    const auto bundle = federation::collect_bundle(state.model.theta, shards, opts.threads);

    SelectionRound record;
    std::vector<const double*> inputs;
    inputs.reserve(bundle.size());
    for (const auto& g : bundle.grads) inputs.push_back(g.data());
    models::PolicyCache cache;
    if (opts.forced_omega) {
        record.omega.assign(bundle.size(), *opts.forced_omega);
    } else {
        cache = models::policy_forward_batch(state.policy, inputs, bundle.dim);
        record.omega = cache.omega;
    }

    record.selection = sample_selection(rng, record.omega);
    for (auto s : record.selection) record.n_selected += s;

    state.model.theta =
        federation::aggregate_selected(state.model.theta, bundle, record.selection, opts.alpha_theta);

    record.loss_v = models::lr_loss(state.model.theta, validation.x, validation.y);
    record.val_accuracy = models::lr_accuracy(state.model.theta, validation.x, validation.y);

    record.reward = compute_reward(record.loss_v, state.baseline, opts.reward_mode);
    record.delta_before = state.baseline.delta;

    if (!opts.freeze_evaluator && !opts.forced_omega) {
        std::vector<double> upstream(bundle.size());
        for (std::size_t i = 0; i < bundle.size(); ++i) {
            const double om =
                std::max(std::min(record.omega[i], 1.0 - models::kProbClamp), models::kProbClamp);
            upstream[i] = record.selection[i] ? 1.0 / om : -1.0 / (1.0 - om);
        }
        const auto grad = models::policy_backward_batch(state.policy, inputs, cache, upstream);
        evaluator_update(state.adam, state.policy, record.reward, grad);
    }

    update_baseline(state.baseline, record.loss_v);
    state.model.round += 1;
    return record;
}

struct ContributionScore {
    std::vector<int> client_ids;
    std::vector<double> contribution;  // mean selection probability per client
    std::size_t rounds = 0;
};

// Scoring protocol mirrors the remove-and-retrain phase: the task model is
// retrained from the given initial state for `rounds` evaluation rounds
// with the evaluator frozen; a client's contribution is its selection
// probability averaged over those rounds.
inline ContributionScore score_contributions(const MlpPolicy& frozen_policy,
                                             const GlobalModel& initial, const ShardRefs& shards,
                                             RngStream& rng, std::size_t rounds = 50,
                                             double alpha_theta = 0.1, unsigned threads = 1) {
    if (shards.empty()) throw std::invalid_argument("score_contributions: no clients");
    if (rounds == 0) throw std::invalid_argument("score_contributions: rounds must be >= 1");
    GlobalModel model = initial;

    ContributionScore score;
    score.rounds = rounds;
    score.contribution.assign(shards.size(), 0.0);
    for (const auto* s : shards) score.client_ids.push_back(s->client_id);

    for (std::size_t t = 0; t < rounds; ++t) {
        const auto bundle = federation::collect_bundle(model.theta, shards, threads);
        const auto omega = compute_probs(frozen_policy, bundle);
        for (std::size_t i = 0; i < omega.size(); ++i) score.contribution[i] += omega[i];
        const auto sel = sample_selection(rng, omega);
        model.theta = federation::aggregate_selected(model.theta, bundle, sel, alpha_theta);
        model.round += 1;
    }
    for (auto& c : score.contribution) c /= static_cast<double>(rounds);
    return score;
}

}  // namespace fedval::rcce
