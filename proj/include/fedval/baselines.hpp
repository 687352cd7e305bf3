// Leave-one-out deletion diagnostics, the comparison method. Values one
// client as the validation-accuracy change when it is removed and the
// model retrained from the same initialization. N clients cost N + 1
// training runs, which is the point of the timing comparison.
#pragma once

#include <algorithm>
#include <chrono>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedval/federation.hpp"

namespace fedval::baselines {

using dataset::Shard;
using dataset::ValidationSet;
using federation::ShardRefs;

struct LooReport {
    std::vector<int> client_ids;
    std::vector<double> values;  // v_i = val_acc(full) - val_acc(without i)
    std::string metric = "val_acc";
    std::size_t rounds = 0;
    int runs = 0;              // training runs executed (N + 1)
    double seconds = 0.0;      // wall clock for all runs, serial
    double full_accuracy = 0.0;
};

inline LooReport loo_contributions(const ShardRefs& shards, const ValidationSet& validation,
                                   std::size_t rounds = 50, double alpha_theta = 0.1,
                                   unsigned threads = 1) {
    if (shards.size() < 2) throw std::invalid_argument("loo_contributions: need at least 2 clients");
    LooReport report;
    report.rounds = rounds;
    const auto t0 = std::chrono::steady_clock::now();

    const auto full = federation::train_fedavg(shards, validation, rounds, alpha_theta, threads);
    report.full_accuracy = models::lr_accuracy(full.theta, validation.x, validation.y);
    report.runs = 1;

    for (std::size_t skip = 0; skip < shards.size(); ++skip) {
        ShardRefs remaining;
        remaining.reserve(shards.size() - 1);
        for (std::size_t i = 0; i < shards.size(); ++i)
            if (i != skip) remaining.push_back(shards[i]);
        const auto model =
            federation::train_fedavg(remaining, validation, rounds, alpha_theta, threads);
        const double acc = models::lr_accuracy(model.theta, validation.x, validation.y);
        report.client_ids.push_back(shards[skip]->client_id);
        report.values.push_back(report.full_accuracy - acc);
        report.runs += 1;
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

enum class RemovalDirection { kHighest, kLowest };

// Drop floor(removal_rate * N) clients ranked by LOO value (ties broken by
// client id), retrain on the remainder, and record the accuracy curve.
inline std::vector<double> loo_remove_and_retrain(const ShardRefs& shards,
                                                  const ValidationSet& validation,
                                                  const LooReport& report, double removal_rate,
                                                  RemovalDirection direction, std::size_t rounds,
                                                  double alpha_theta = 0.1, unsigned threads = 1) {
    if (report.values.size() != shards.size())
        throw std::invalid_argument("loo_remove_and_retrain: report does not match shards");
    if (!(removal_rate >= 0.0 && removal_rate <= 1.0))
        throw std::invalid_argument("loo_remove_and_retrain: removal_rate outside [0,1]");
    const auto n_remove =
        static_cast<std::size_t>(removal_rate * static_cast<double>(shards.size()));
    if (n_remove >= shards.size())
        throw std::invalid_argument("loo_remove_and_retrain: removal would drop every client");

    std::vector<std::size_t> order(shards.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (report.values[a] != report.values[b])
            return direction == RemovalDirection::kHighest ? report.values[a] > report.values[b]
                                                           : report.values[a] < report.values[b];
        return report.client_ids[a] < report.client_ids[b];
    });
    std::vector<std::uint8_t> removed(shards.size(), 0);
    for (std::size_t k = 0; k < n_remove; ++k) removed[order[k]] = 1;

    ShardRefs remaining;
    for (std::size_t i = 0; i < shards.size(); ++i)
        if (!removed[i]) remaining.push_back(shards[i]);

    std::vector<double> curve;
    federation::train_fedavg(remaining, validation, rounds, alpha_theta, threads, &curve);
    return curve;
}

}  // namespace fedval::baselines
