// Round engine: local client updates, gradient collection, and the two
// aggregation rules (plain federated averaging and selective aggregation).
// A local update is exactly one full-batch gradient at the broadcast
// parameters, so the uploaded quantity and the update rules are exact as
// written. Summation order over clients is fixed (ascending index), which
// makes aggregate_selected with an all-ones selection bitwise identical to
// aggregate_fedavg.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "fedval/dataset.hpp"
#include "fedval/models.hpp"

namespace fedval::federation {

using dataset::Shard;
using dataset::ValidationSet;
using models::ParamVector;

struct GlobalModel {
    ParamVector theta;
    std::int64_t round = 0;

    static GlobalModel zeros(std::size_t dim) {
        GlobalModel m;
        m.theta.assign(dim, 0.0);
        return m;
    }
};

struct GradientBundle {
    std::vector<ParamVector> grads;       // one per client, all length dim
    std::vector<int> client_ids;
    std::vector<std::uint8_t> empty_shard;  // flags clients that uploaded a zero gradient
    std::size_t dim = 0;

    std::size_t size() const { return grads.size(); }
};

using SelectionVector = std::vector<std::uint8_t>;

// One full-batch gradient of the local loss at the broadcast parameters.
// An empty shard contributes a zero gradient (flagged at bundle level).
inline ParamVector client_local_update(const ParamVector& theta, const Shard& shard) {
    if (shard.m() == 0) return ParamVector(theta.size(), 0.0);
    return models::lr_loss_and_grad(theta, shard.x, shard.y).grad;
}

using ShardRefs = std::vector<const Shard*>;

inline ShardRefs as_refs(const std::vector<Shard>& shards) {
    ShardRefs refs;
    refs.reserve(shards.size());
    for (const auto& s : shards) refs.push_back(&s);
    return refs;
}

inline GradientBundle collect_bundle(const ParamVector& theta, const ShardRefs& shards,
                                     unsigned threads = 1) {
    if (shards.empty()) throw std::invalid_argument("collect_bundle: no clients");
    GradientBundle bundle;
    bundle.dim = theta.size();
    bundle.grads.resize(shards.size());
    bundle.client_ids.resize(shards.size());
    bundle.empty_shard.resize(shards.size());

    auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            bundle.grads[i] = client_local_update(theta, *shards[i]);
            bundle.client_ids[i] = shards[i]->client_id;
            bundle.empty_shard[i] = shards[i]->m() == 0 ? 1 : 0;
        }
    };
    if (threads <= 1 || shards.size() < 2) {
        worker(0, shards.size());
    } else {
        const unsigned n_threads = std::min<unsigned>(threads, shards.size());
        std::vector<std::thread> pool;
        const std::size_t chunk = (shards.size() + n_threads - 1) / n_threads;
        for (unsigned t = 0; t < n_threads; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(shards.size(), begin + chunk);
            if (begin < end) pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    return bundle;
}

// theta' = theta - (lr / N) * sum_i grad_i
inline ParamVector aggregate_fedavg(const ParamVector& theta, const GradientBundle& bundle,
                                    double lr) {
    if (bundle.size() == 0) throw std::invalid_argument("aggregate_fedavg: empty bundle");
    ParamVector sum(theta.size(), 0.0);
    for (const auto& g : bundle.grads) {
        if (g.size() != theta.size()) throw std::invalid_argument("aggregate_fedavg: shape mismatch");
        for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += g[j];
    }
    const double scale = lr / static_cast<double>(bundle.size());
    ParamVector out(theta.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = theta[j] - scale * sum[j];
    return out;
}

// theta' = theta - (lr / sum_i s_i) * sum_i s_i grad_i; an all-zero
// selection leaves the model unchanged.
inline ParamVector aggregate_selected(const ParamVector& theta, const GradientBundle& bundle,
                                      const SelectionVector& sel, double lr) {
    if (sel.size() != bundle.size())
        throw std::invalid_argument("aggregate_selected: selection length mismatch");
    std::size_t n_selected = 0;
    ParamVector sum(theta.size(), 0.0);
    for (std::size_t i = 0; i < bundle.size(); ++i) {
        if (!sel[i]) continue;
        const auto& g = bundle.grads[i];
        if (g.size() != theta.size())
            throw std::invalid_argument("aggregate_selected: shape mismatch");
        for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += g[j];
        ++n_selected;
    }
    if (n_selected == 0) return theta;
    const double scale = lr / static_cast<double>(n_selected);
    ParamVector out(theta.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = theta[j] - scale * sum[j];
    return out;
}

inline void run_fedavg_round(GlobalModel& model, const ShardRefs& shards, double lr,
                             unsigned threads = 1) {
    const auto bundle = collect_bundle(model.theta, shards, threads);
    model.theta = aggregate_fedavg(model.theta, bundle, lr);
    model.round += 1;
}

// Plain FedAvg for a fixed number of rounds; records validation accuracy
// per round when a curve sink is given.
inline GlobalModel train_fedavg(const ShardRefs& shards, const ValidationSet& validation,
                                std::size_t rounds, double lr, unsigned threads = 1,
                                std::vector<double>* accuracy_curve = nullptr) {
    if (shards.empty()) throw std::invalid_argument("train_fedavg: no clients");
    const std::size_t dim = shards.front()->x.cols + 1;
    GlobalModel model = GlobalModel::zeros(dim);
    for (std::size_t t = 0; t < rounds; ++t) {
        run_fedavg_round(model, shards, lr, threads);
        if (accuracy_curve)
            accuracy_curve->push_back(models::lr_accuracy(model.theta, validation.x, validation.y));
    }
    return model;
}

}  // namespace fedval::federation
