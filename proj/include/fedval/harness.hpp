// Experiment harness: the paper's four experiments as scripted, seeded
// runs emitting CSV under <outdir>/<experiment>/<seed>/, with the resolved
// configuration written next to the results so any run can be reproduced
// from its own output.
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedval/baselines.hpp"
#include "fedval/config.hpp"
#include "fedval/csv.hpp"
#include "fedval/dataset.hpp"
#include "fedval/rcce.hpp"
#include "fedval/stats.hpp"
#include "fedval/synth.hpp"

namespace fedval::harness {

using dataset::RawCorpus;
using dataset::Shard;
using dataset::ValidationSet;
using federation::ShardRefs;
using numkit::RngStream;

// Sub-stream ids derived from the run seed; fixed so that every stage of a
// run is reproducible in isolation.
inline constexpr std::uint64_t kStreamCorpus = 100;
inline constexpr std::uint64_t kStreamCorruption = 101;
inline constexpr std::uint64_t kStreamPartition = 102;
inline constexpr std::uint64_t kStreamPolicyInit = 103;
inline constexpr std::uint64_t kStreamSelection = 104;
inline constexpr std::uint64_t kStreamScoring = 105;

struct ExperimentConfig {
    std::string experiment = "parity";

    // dataset
    std::string dataset_source = "synthetic";  // synthetic | file
    std::string dataset_path;
    std::int64_t n_clients = 50;
    double alpha = 0.5;
    std::int64_t validation_size = 572;
    std::int64_t vocab_capacity = 1000;
    std::int64_t max_tokens = 150;
    double corrupt_sample_fraction = 0.2;
    double corrupt_word_fraction = 0.2;
    std::int64_t synth_docs = 5572;
    double synth_label_flip = 0.02;

    // models
    std::vector<std::int64_t> policy_hidden = {16, 16, 8};
    double alpha_theta = 0.1;
    double alpha_phi = 1e-5;

    // rcce
    std::string reward_mode = "flipped";  // flipped | literal
    std::int64_t baseline_window = 20;

    // harness
    std::int64_t rounds = 1000;        // parity / co-training baseline length
    std::int64_t train_rounds = 1000;  // evaluator training for valuation experiments
    std::int64_t retrain_rounds = 1000;
    std::int64_t loo_rounds = 50;
    std::int64_t score_rounds = 50;
    double removal_rate = 0.3;
    std::vector<std::int64_t> seeds = {1, 2, 3, 4, 5};
    std::vector<std::int64_t> scaling_clients = {100, 200, 300, 400, 500};
    std::int64_t scaling_rcce_rounds = 1000;
    std::int64_t scaling_loo_rounds = 50;
    std::string outdir = "out";
    std::int64_t threads = 1;

    rcce::RewardMode reward() const {
        if (reward_mode == "flipped") return rcce::RewardMode::kFlipped;
        if (reward_mode == "literal") return rcce::RewardMode::kLiteral;
        throw cli::ConfigError("rcce.reward_mode must be 'flipped' or 'literal'");
    }

    std::vector<std::size_t> hidden_dims() const {
        std::vector<std::size_t> out;
        for (auto v : policy_hidden) {
            if (v <= 0) throw cli::ConfigError("models.policy_hidden entries must be positive");
            out.push_back(static_cast<std::size_t>(v));
        }
        return out;
    }

    void validate() const {
        if (experiment != "parity" && experiment != "remove_retrain" && experiment != "corruption" &&
            experiment != "scaling" && experiment != "contribution" && experiment != "partition" &&
            experiment != "train" && experiment != "score")
            throw cli::ConfigError("unknown experiment: " + experiment);
        if (dataset_source != "synthetic" && dataset_source != "file")
            throw cli::ConfigError("dataset.source must be 'synthetic' or 'file'");
        if (dataset_source == "file" && dataset_path.empty())
            throw cli::ConfigError("dataset.path required when dataset.source = file");
        if (n_clients < 1) throw cli::ConfigError("dataset.clients must be >= 1");
        if (!(alpha > 0.0)) throw cli::ConfigError("dataset.alpha must be positive");
        if (validation_size < 1) throw cli::ConfigError("dataset.validation_size must be >= 1");
        if (vocab_capacity < 1) throw cli::ConfigError("dataset.vocab_capacity must be >= 1");
        if (!(corrupt_sample_fraction >= 0.0 && corrupt_sample_fraction <= 1.0) ||
            !(corrupt_word_fraction >= 0.0 && corrupt_word_fraction <= 1.0))
            throw cli::ConfigError("corruption fractions must lie in [0,1]");
        if (policy_hidden.empty()) throw cli::ConfigError("models.policy_hidden must be nonempty");
        if (!(alpha_theta > 0.0) || !(alpha_phi > 0.0))
            throw cli::ConfigError("learning rates must be positive");
        if (baseline_window < 1) throw cli::ConfigError("rcce.baseline_window must be >= 1");
        if (rounds < 0 || train_rounds < 1 || retrain_rounds < 1 || loo_rounds < 1 ||
            score_rounds < 1)
            throw cli::ConfigError("round counts must be positive");
        if (!(removal_rate >= 0.0 && removal_rate < 1.0))
            throw cli::ConfigError("harness.removal_rate must lie in [0,1)");
        if (seeds.empty()) throw cli::ConfigError("harness.seeds must be nonempty");
        if (threads < 1) throw cli::ConfigError("harness.threads must be >= 1");
        (void)reward();
        (void)hidden_dims();
    }
};

// ---------------------------------------------------------------------------
// Config file mapping
// ---------------------------------------------------------------------------

inline std::string join_int_list(const std::vector<std::int64_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v[i]);
    }
    return out;
}

// Every run prints and stores exactly this text; parsing it back yields an
// identical configuration.
inline std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream out;
    out << "[dataset]\n";
    out << "source = " << c.dataset_source << "\n";
    out << "path = " << c.dataset_path << "\n";
    out << "clients = " << c.n_clients << "\n";
    out << "alpha = " << format_double(c.alpha) << "\n";
    out << "validation_size = " << c.validation_size << "\n";
    out << "vocab_capacity = " << c.vocab_capacity << "\n";
    out << "max_tokens = " << c.max_tokens << "\n";
    out << "corrupt_sample_fraction = " << format_double(c.corrupt_sample_fraction) << "\n";
    out << "corrupt_word_fraction = " << format_double(c.corrupt_word_fraction) << "\n";
    out << "synth_docs = " << c.synth_docs << "\n";
    out << "synth_label_flip = " << format_double(c.synth_label_flip) << "\n";
    out << "\n[models]\n";
    out << "policy_hidden = " << join_int_list(c.policy_hidden) << "\n";
    out << "alpha_theta = " << format_double(c.alpha_theta) << "\n";
    out << "alpha_phi = " << format_double(c.alpha_phi) << "\n";
    out << "\n[rcce]\n";
    out << "reward_mode = " << c.reward_mode << "\n";
    out << "baseline_window = " << c.baseline_window << "\n";
    out << "\n[harness]\n";
    out << "experiment = " << c.experiment << "\n";
    out << "rounds = " << c.rounds << "\n";
    out << "train_rounds = " << c.train_rounds << "\n";
    out << "retrain_rounds = " << c.retrain_rounds << "\n";
    out << "loo_rounds = " << c.loo_rounds << "\n";
    out << "score_rounds = " << c.score_rounds << "\n";
    out << "removal_rate = " << format_double(c.removal_rate) << "\n";
    out << "seeds = " << join_int_list(c.seeds) << "\n";
    out << "scaling_clients = " << join_int_list(c.scaling_clients) << "\n";
    out << "scaling_rcce_rounds = " << c.scaling_rcce_rounds << "\n";
    out << "scaling_loo_rounds = " << c.scaling_loo_rounds << "\n";
    out << "outdir = " << c.outdir << "\n";
    out << "threads = " << c.threads << "\n";
    return out.str();
}

inline ExperimentConfig config_from(const cli::Config& cfg) {
    ExperimentConfig c;
    for (const auto& [key, value] : cfg.entries()) {
        if (key == "dataset.source") c.dataset_source = value;
        else if (key == "dataset.path") c.dataset_path = value;
        else if (key == "dataset.clients") c.n_clients = cfg.get_int(key);
        else if (key == "dataset.alpha") c.alpha = cfg.get_double(key);
        else if (key == "dataset.validation_size") c.validation_size = cfg.get_int(key);
        else if (key == "dataset.vocab_capacity") c.vocab_capacity = cfg.get_int(key);
        else if (key == "dataset.max_tokens") c.max_tokens = cfg.get_int(key);
        else if (key == "dataset.corrupt_sample_fraction") c.corrupt_sample_fraction = cfg.get_double(key);
        else if (key == "dataset.corrupt_word_fraction") c.corrupt_word_fraction = cfg.get_double(key);
        else if (key == "dataset.synth_docs") c.synth_docs = cfg.get_int(key);
        else if (key == "dataset.synth_label_flip") c.synth_label_flip = cfg.get_double(key);
        else if (key == "models.policy_hidden") c.policy_hidden = cfg.get_int_list(key);
        else if (key == "models.alpha_theta") c.alpha_theta = cfg.get_double(key);
        else if (key == "models.alpha_phi") c.alpha_phi = cfg.get_double(key);
        else if (key == "rcce.reward_mode") c.reward_mode = value;
        else if (key == "rcce.baseline_window") c.baseline_window = cfg.get_int(key);
        else if (key == "harness.experiment") c.experiment = value;
        else if (key == "harness.rounds") c.rounds = cfg.get_int(key);
        else if (key == "harness.train_rounds") c.train_rounds = cfg.get_int(key);
        else if (key == "harness.retrain_rounds") c.retrain_rounds = cfg.get_int(key);
        else if (key == "harness.loo_rounds") c.loo_rounds = cfg.get_int(key);
        else if (key == "harness.score_rounds") c.score_rounds = cfg.get_int(key);
        else if (key == "harness.removal_rate") c.removal_rate = cfg.get_double(key);
        else if (key == "harness.seeds") {
            c.seeds = cfg.get_int_list(key);
        } else if (key == "harness.scaling_clients") c.scaling_clients = cfg.get_int_list(key);
        else if (key == "harness.scaling_rcce_rounds") c.scaling_rcce_rounds = cfg.get_int(key);
        else if (key == "harness.scaling_loo_rounds") c.scaling_loo_rounds = cfg.get_int(key);
        else if (key == "harness.outdir") c.outdir = value;
        else if (key == "harness.threads") c.threads = cfg.get_int(key);
        else throw cli::ConfigError("unknown config key: " + key);
    }
    return c;
}

// Named profiles. "paper" mirrors the reported setup; "desk" is the
// minutes-scale profile the acceptance suite runs.
inline void apply_profile(ExperimentConfig& c, const std::string& profile) {
    if (profile == "paper") {
        c.rounds = 1000;
        c.train_rounds = 1000;
        c.retrain_rounds = 1000;
        c.loo_rounds = 50;
        c.score_rounds = 50;
        c.seeds = {1, 2, 3, 4, 5};
        c.scaling_clients = {100, 200, 300, 400, 500};
        c.scaling_rcce_rounds = 1000;
        c.scaling_loo_rounds = 50;
        c.alpha_phi = 1e-5;
    } else if (profile == "desk") {
        c.rounds = 300;
        c.train_rounds = 600;
        c.retrain_rounds = 300;
        c.loo_rounds = 10;
        c.score_rounds = 50;
        c.seeds = {1, 2, 3};
        c.scaling_clients = {100, 500};
        c.scaling_rcce_rounds = 300;
        c.scaling_loo_rounds = 10;
        c.alpha_phi = 1e-5;
    } else {
        throw cli::ConfigError("unknown profile: " + profile + " (expected paper or desk)");
    }
}

// ---------------------------------------------------------------------------
// Data preparation
// ---------------------------------------------------------------------------

struct DataBundle {
    dataset::PartitionResult partition;
    std::vector<double> shard_sizes;
    std::vector<double> corrupted_fraction;  // per client; zeros when uncorrupted
    std::vector<std::uint8_t> corrupted_client;  // fraction above the global rate
    ShardRefs refs;
    std::size_t task_dim = 0;
};

inline DataBundle prepare_data(const ExperimentConfig& cfg, std::uint64_t seed, bool corrupted) {
    RawCorpus corpus;
    if (cfg.dataset_source == "synthetic") {
        RngStream rng(seed, kStreamCorpus);
        dataset::SynthConfig synth;
        synth.n_docs = static_cast<std::size_t>(cfg.synth_docs);
        synth.label_flip = cfg.synth_label_flip;
        corpus = dataset::make_synthetic_corpus(rng, synth);
    } else {
        corpus = dataset::load_corpus(cfg.dataset_path);
    }

    std::vector<std::uint8_t> flags(corpus.size(), 0);
    if (corrupted) {
        RngStream rng(seed, kStreamCorruption);
        auto result = dataset::corrupt(corpus, rng, cfg.corrupt_sample_fraction,
                                       cfg.corrupt_word_fraction);
        corpus = std::move(result.corpus);
        flags = std::move(result.corrupted);
    }

    RngStream part_rng(seed, kStreamPartition);
    DataBundle data;
    data.partition = dataset::split_and_partition(
        corpus, part_rng, static_cast<std::size_t>(cfg.n_clients), cfg.alpha,
        static_cast<std::size_t>(cfg.validation_size), static_cast<std::size_t>(cfg.vocab_capacity),
        static_cast<std::size_t>(cfg.max_tokens));
    data.refs = federation::as_refs(data.partition.shards);
    data.task_dim = static_cast<std::size_t>(cfg.vocab_capacity) + 1;

    const std::size_t n = data.partition.shards.size();
    data.shard_sizes.resize(n);
    data.corrupted_fraction.assign(n, 0.0);
    data.corrupted_client.assign(n, 0);
    std::vector<double> counts(n, 0.0);
    for (std::size_t i = 0; i < data.partition.assignment.size(); ++i) {
        const int a = data.partition.assignment[i];
        if (a < 0) continue;
        counts[static_cast<std::size_t>(a)] += 1.0;
        data.corrupted_fraction[static_cast<std::size_t>(a)] += flags[i] ? 1.0 : 0.0;
    }
    for (std::size_t c = 0; c < n; ++c) {
        data.shard_sizes[c] = static_cast<double>(data.partition.shards[c].m());
        if (counts[c] > 0.0) data.corrupted_fraction[c] /= counts[c];
        data.corrupted_client[c] = data.corrupted_fraction[c] > cfg.corrupt_sample_fraction ? 1 : 0;
    }
    return data;
}

// ---------------------------------------------------------------------------
// Training helpers
// ---------------------------------------------------------------------------

struct RcceTraining {
    rcce::RcceState state;
    std::vector<double> accuracy_curve;
    std::vector<double> converged_omega;  // mean omega over the last 50 rounds
    std::vector<rcce::SelectionRound> records;
    bool keep_records = true;
};

inline RcceTraining train_rcce(const ExperimentConfig& cfg, const DataBundle& data,
                               std::uint64_t seed, std::size_t rounds, bool keep_records = true) {
    RngStream policy_rng(seed, kStreamPolicyInit);
    RcceTraining out;
    out.keep_records = keep_records;
    out.state = rcce::make_state(data.task_dim, cfg.hidden_dims(), cfg.alpha_phi,
                                 cfg.baseline_window, policy_rng);
    rcce::RcceOptions opts;
    opts.alpha_theta = cfg.alpha_theta;
    opts.reward_mode = cfg.reward();
    opts.threads = static_cast<unsigned>(cfg.threads);

    RngStream sel_rng(seed, kStreamSelection);
    const std::size_t tail = rounds > 50 ? rounds - 50 : 0;
    std::vector<double> omega_sum(data.refs.size(), 0.0);
    std::size_t tail_rounds = 0;
    for (std::size_t t = 0; t < rounds; ++t) {
        auto record = rcce::run_rcce_round(out.state, data.refs, data.partition.validation,
                                           sel_rng, opts);
        out.accuracy_curve.push_back(record.val_accuracy);
        if (t >= tail) {
            for (std::size_t i = 0; i < record.omega.size(); ++i) omega_sum[i] += record.omega[i];
            ++tail_rounds;
        }
        if (keep_records) out.records.push_back(std::move(record));
    }
    out.converged_omega = std::move(omega_sum);
    if (tail_rounds > 0)
        for (auto& v : out.converged_omega) v /= static_cast<double>(tail_rounds);
    return out;
}

// Fresh retrain with per-round removal of the floor(rate * N) highest- or
// lowest-probability clients under the frozen evaluator; ties break toward
// the smaller client id.
inline std::vector<double> retrain_with_policy_ranking(
    const models::MlpPolicy& policy, const DataBundle& data, double removal_rate,
    bool remove_highest, std::size_t rounds, double alpha_theta, unsigned threads) {
    const std::size_t n = data.refs.size();
    const auto n_remove = static_cast<std::size_t>(removal_rate * static_cast<double>(n));
    if (n_remove >= n)
        throw std::invalid_argument("retrain_with_policy_ranking: removal would drop every client");
    federation::GlobalModel model = federation::GlobalModel::zeros(data.task_dim);
    std::vector<double> curve;
    curve.reserve(rounds);
    for (std::size_t t = 0; t < rounds; ++t) {
        const auto bundle = federation::collect_bundle(model.theta, data.refs, threads);
        federation::SelectionVector keep(n, 1);
        if (n_remove > 0) {
            const auto omega = rcce::compute_probs(policy, bundle);
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                if (omega[a] != omega[b])
                    return remove_highest ? omega[a] > omega[b] : omega[a] < omega[b];
                return bundle.client_ids[a] < bundle.client_ids[b];
            });
            for (std::size_t k = 0; k < n_remove; ++k) keep[order[k]] = 0;
        }
        model.theta = federation::aggregate_selected(model.theta, bundle, keep, alpha_theta);
        model.round += 1;
        curve.push_back(
            models::lr_accuracy(model.theta, data.partition.validation.x, data.partition.validation.y));
    }
    return curve;
}

// ---------------------------------------------------------------------------
// Output plumbing
// ---------------------------------------------------------------------------

inline std::filesystem::path experiment_dir(const ExperimentConfig& cfg) {
    return std::filesystem::path(cfg.outdir) / cfg.experiment;
}

inline void write_resolved_config(const ExperimentConfig& cfg) {
    const auto dir = experiment_dir(cfg);
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "config.resolved", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write config.resolved");
    out << serialize_config(cfg);
}

inline std::filesystem::path seed_dir(const ExperimentConfig& cfg, std::uint64_t seed) {
    const auto dir = experiment_dir(cfg) / std::to_string(seed);
    std::filesystem::create_directories(dir);
    return dir;
}

// Per-round selection log, fixed schema.
inline void write_round_log(const std::filesystem::path& path,
                            const std::vector<rcce::SelectionRound>& records) {
    CsvWriter csv(path.string());
    csv.header({"round", "L_v", "val_acc", "reward", "delta", "n_selected", "omega_min",
                "omega_mean", "omega_max"});
    for (std::size_t t = 0; t < records.size(); ++t) {
        const auto& r = records[t];
        double lo = 1.0, hi = 0.0, mean = 0.0;
        for (double om : r.omega) {
            lo = std::min(lo, om);
            hi = std::max(hi, om);
            mean += om;
        }
        mean /= static_cast<double>(r.omega.size());
        csv.line({CsvWriter::cell(std::int64_t(t + 1)), CsvWriter::cell(r.loss_v),
                  CsvWriter::cell(r.val_accuracy), CsvWriter::cell(r.reward),
                  CsvWriter::cell(r.delta_before), CsvWriter::cell(r.n_selected),
                  CsvWriter::cell(lo), CsvWriter::cell(mean), CsvWriter::cell(hi)});
    }
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct ParityResult {
    std::vector<double> per_seed_gap;  // mean |fedavg - rcce| accuracy gap
    double mean_gap = 0.0;
};

inline ParityResult exp_parity(const ExperimentConfig& cfg) {
    cfg.validate();
    write_resolved_config(cfg);
    ParityResult result;
    for (const auto seed_signed : cfg.seeds) {
        const auto seed = static_cast<std::uint64_t>(seed_signed);
        auto data = prepare_data(cfg, seed, false);
        std::vector<double> fedavg_curve;
        federation::train_fedavg(data.refs, data.partition.validation,
                                 static_cast<std::size_t>(cfg.rounds), cfg.alpha_theta,
                                 static_cast<unsigned>(cfg.threads), &fedavg_curve);
        auto training = train_rcce(cfg, data, seed, static_cast<std::size_t>(cfg.rounds));

        const auto dir = seed_dir(cfg, seed);
        CsvWriter csv((dir / "curves.csv").string());
        csv.header({"round", "fedavg_acc", "rcce_acc"});
        const double initial_acc =
            models::lr_accuracy(models::ParamVector(data.task_dim, 0.0),
                                data.partition.validation.x, data.partition.validation.y);
        csv.line({CsvWriter::cell(std::int64_t(0)), CsvWriter::cell(initial_acc),
                  CsvWriter::cell(initial_acc)});
        double gap = 0.0;
        for (std::size_t t = 0; t < fedavg_curve.size(); ++t) {
            csv.line({CsvWriter::cell(std::int64_t(t + 1)), CsvWriter::cell(fedavg_curve[t]),
                      CsvWriter::cell(training.accuracy_curve[t])});
            gap += std::abs(fedavg_curve[t] - training.accuracy_curve[t]);
        }
        gap /= fedavg_curve.empty() ? 1.0 : static_cast<double>(fedavg_curve.size());
        write_round_log(dir / "rcce_rounds.csv", training.records);
        result.per_seed_gap.push_back(gap);
    }
    result.mean_gap = mean_of(result.per_seed_gap);

    CsvWriter summary((experiment_dir(cfg) / "summary.csv").string());
    summary.header({"seed", "mean_abs_gap"});
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
        summary.line({CsvWriter::cell(cfg.seeds[i]), CsvWriter::cell(result.per_seed_gap[i])});
    summary.line({"mean", CsvWriter::cell(result.mean_gap)});
    return result;
}

struct RetrainCurves {
    std::vector<double> baseline;
    std::vector<double> rcce_remove_highest;
    std::vector<double> rcce_remove_lowest;
    std::vector<double> loo_remove_highest;
    std::vector<double> loo_remove_lowest;
};

struct SeedValuation {
    RetrainCurves curves;
    baselines::LooReport loo;
    std::vector<double> contribution;    // scored contribution per client
    std::vector<double> converged_omega;  // mean omega over last training rounds
    DataBundle data;
};

// Shared valuation pipeline: co-train, freeze, LOO, five retrain curves,
// scored contributions.
inline SeedValuation run_valuation(const ExperimentConfig& cfg, std::uint64_t seed,
                                   bool corrupted) {
    SeedValuation out;
    out.data = prepare_data(cfg, seed, corrupted);
    auto training =
        train_rcce(cfg, out.data, seed, static_cast<std::size_t>(cfg.train_rounds), true);
    out.converged_omega = training.converged_omega;

    const auto dir = seed_dir(cfg, seed);
    write_round_log(dir / "rcce_rounds.csv", training.records);

    const auto threads = static_cast<unsigned>(cfg.threads);
    out.loo = baselines::loo_contributions(out.data.refs, out.data.partition.validation,
                                           static_cast<std::size_t>(cfg.loo_rounds),
                                           cfg.alpha_theta, threads);

    const auto rounds = static_cast<std::size_t>(cfg.retrain_rounds);
    federation::train_fedavg(out.data.refs, out.data.partition.validation, rounds, cfg.alpha_theta,
                             threads, &out.curves.baseline);
    out.curves.rcce_remove_highest = retrain_with_policy_ranking(
        training.state.policy, out.data, cfg.removal_rate, true, rounds, cfg.alpha_theta, threads);
    out.curves.rcce_remove_lowest = retrain_with_policy_ranking(
        training.state.policy, out.data, cfg.removal_rate, false, rounds, cfg.alpha_theta, threads);
    out.curves.loo_remove_highest = baselines::loo_remove_and_retrain(
        out.data.refs, out.data.partition.validation, out.loo, cfg.removal_rate,
        baselines::RemovalDirection::kHighest, rounds, cfg.alpha_theta, threads);
    out.curves.loo_remove_lowest = baselines::loo_remove_and_retrain(
        out.data.refs, out.data.partition.validation, out.loo, cfg.removal_rate,
        baselines::RemovalDirection::kLowest, rounds, cfg.alpha_theta, threads);

    RngStream score_rng(seed, kStreamScoring);
    out.contribution = rcce::score_contributions(
                           training.state.policy, federation::GlobalModel::zeros(out.data.task_dim),
                           out.data.refs, score_rng, static_cast<std::size_t>(cfg.score_rounds),
                           cfg.alpha_theta, threads)
                           .contribution;

    // files shared by the remove_retrain and corruption experiments
    CsvWriter curves((dir / "curves.csv").string());
    curves.header({"round", "baseline", "rcce_remove_highest", "rcce_remove_lowest",
                   "loo_remove_highest", "loo_remove_lowest"});
    for (std::size_t t = 0; t < rounds; ++t)
        curves.line({CsvWriter::cell(std::int64_t(t + 1)), CsvWriter::cell(out.curves.baseline[t]),
                     CsvWriter::cell(out.curves.rcce_remove_highest[t]),
                     CsvWriter::cell(out.curves.rcce_remove_lowest[t]),
                     CsvWriter::cell(out.curves.loo_remove_highest[t]),
                     CsvWriter::cell(out.curves.loo_remove_lowest[t])});

    CsvWriter loo_csv((dir / "loo_values.csv").string());
    loo_csv.header({"client_id", "shard_size", "loo_value"});
    for (std::size_t i = 0; i < out.loo.values.size(); ++i)
        loo_csv.line({CsvWriter::cell(out.loo.client_ids[i]),
                      CsvWriter::cell(out.data.shard_sizes[i]), CsvWriter::cell(out.loo.values[i])});
    return out;
}

struct ValuationResult {
    std::vector<SeedValuation> seeds;
};

inline ValuationResult exp_remove_retrain(const ExperimentConfig& cfg) {
    cfg.validate();
    write_resolved_config(cfg);
    ValuationResult result;
    CsvWriter summary((experiment_dir(cfg) / "summary.csv").string());
    summary.header({"seed", "final_baseline", "final_rcce_remove_highest",
                    "final_rcce_remove_lowest", "final_loo_remove_highest",
                    "final_loo_remove_lowest"});
    for (const auto seed_signed : cfg.seeds) {
        const auto seed = static_cast<std::uint64_t>(seed_signed);
        auto val = run_valuation(cfg, seed, false);
        summary.line({CsvWriter::cell(seed_signed), CsvWriter::cell(val.curves.baseline.back()),
                      CsvWriter::cell(val.curves.rcce_remove_highest.back()),
                      CsvWriter::cell(val.curves.rcce_remove_lowest.back()),
                      CsvWriter::cell(val.curves.loo_remove_highest.back()),
                      CsvWriter::cell(val.curves.loo_remove_lowest.back())});
        result.seeds.push_back(std::move(val));
    }
    return result;
}

struct CorruptionSeedStats {
    double auc = 0.5;
    double mean_omega_clean = 0.0;
    double mean_omega_corrupted = 0.0;
    double gap = 0.0;  // remove-lowest minus remove-highest final accuracy
};

struct CorruptionResultSummary {
    ValuationResult valuation;
    std::vector<CorruptionSeedStats> stats;
};

inline CorruptionResultSummary exp_corruption(const ExperimentConfig& cfg) {
    cfg.validate();
    write_resolved_config(cfg);
    CorruptionResultSummary result;
    CsvWriter summary((experiment_dir(cfg) / "summary.csv").string());
    summary.header({"seed", "auc_clean_vs_corrupted", "mean_omega_clean", "mean_omega_corrupted",
                    "final_rcce_remove_highest", "final_rcce_remove_lowest", "gap_low_minus_high"});
    for (const auto seed_signed : cfg.seeds) {
        const auto seed = static_cast<std::uint64_t>(seed_signed);
        auto val = run_valuation(cfg, seed, true);

        const auto dir = seed_dir(cfg, seed);
        CsvWriter disc((dir / "discrimination.csv").string());
        disc.header({"client_id", "shard_size", "corrupted_fraction", "corrupted_flag",
                     "contribution", "converged_omega"});
        std::vector<double> clean_scores, corrupt_scores, clean_omega, corrupt_omega;
        for (std::size_t i = 0; i < val.contribution.size(); ++i) {
            disc.line({CsvWriter::cell(val.data.partition.shards[i].client_id),
                       CsvWriter::cell(val.data.shard_sizes[i]),
                       CsvWriter::cell(val.data.corrupted_fraction[i]),
                       CsvWriter::cell(int(val.data.corrupted_client[i])),
                       CsvWriter::cell(val.contribution[i]),
                       CsvWriter::cell(val.converged_omega[i])});
            if (val.data.corrupted_client[i]) {
                corrupt_scores.push_back(val.contribution[i]);
                corrupt_omega.push_back(val.converged_omega[i]);
            } else {
                clean_scores.push_back(val.contribution[i]);
                clean_omega.push_back(val.converged_omega[i]);
            }
        }
        CorruptionSeedStats stats;
        stats.auc = rank_auc(clean_scores, corrupt_scores);
        stats.mean_omega_clean = mean_of(clean_omega);
        stats.mean_omega_corrupted = mean_of(corrupt_omega);
        stats.gap = val.curves.rcce_remove_lowest.back() - val.curves.rcce_remove_highest.back();
        summary.line({CsvWriter::cell(seed_signed), CsvWriter::cell(stats.auc),
                      CsvWriter::cell(stats.mean_omega_clean),
                      CsvWriter::cell(stats.mean_omega_corrupted),
                      CsvWriter::cell(val.curves.rcce_remove_highest.back()),
                      CsvWriter::cell(val.curves.rcce_remove_lowest.back()),
                      CsvWriter::cell(stats.gap)});
        result.stats.push_back(stats);
        result.valuation.seeds.push_back(std::move(val));
    }
    return result;
}

struct ScalingRow {
    std::int64_t n_clients = 0;
    double rcce_seconds = 0.0;
    double loo_seconds = 0.0;
};

// Timing protocol: one machine, serial execution, threads forced to 1.
inline std::vector<ScalingRow> exp_scaling(const ExperimentConfig& cfg) {
    cfg.validate();
    write_resolved_config(cfg);
    std::vector<ScalingRow> rows;
    const auto seed = static_cast<std::uint64_t>(cfg.seeds.front());
    const auto dir = seed_dir(cfg, seed);
    CsvWriter csv((dir / "timing.csv").string());
    csv.header({"n_clients", "method", "rounds", "seconds"});
    for (const auto n : cfg.scaling_clients) {
        ExperimentConfig run_cfg = cfg;
        run_cfg.n_clients = n;
        run_cfg.threads = 1;
        auto data = prepare_data(run_cfg, seed, false);

        ScalingRow row;
        row.n_clients = n;
        {
            const auto t0 = std::chrono::steady_clock::now();
            train_rcce(run_cfg, data, seed, static_cast<std::size_t>(cfg.scaling_rcce_rounds),
                       false);
            row.rcce_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
        {
            const auto report = baselines::loo_contributions(
                data.refs, data.partition.validation,
                static_cast<std::size_t>(cfg.scaling_loo_rounds), cfg.alpha_theta, 1);
            row.loo_seconds = report.seconds;
        }
        csv.line({CsvWriter::cell(row.n_clients), std::string("rcce"),
                  CsvWriter::cell(cfg.scaling_rcce_rounds), CsvWriter::cell(row.rcce_seconds)});
        csv.line({CsvWriter::cell(row.n_clients), std::string("loo"),
                  CsvWriter::cell(cfg.scaling_loo_rounds), CsvWriter::cell(row.loo_seconds)});
        rows.push_back(row);
    }
    return rows;
}

struct ContributionSeedResult {
    std::vector<int> client_ids;
    std::vector<double> shard_sizes;
    std::vector<double> contribution;
    double spearman = 0.0;
};

inline std::vector<ContributionSeedResult> exp_contribution(const ExperimentConfig& cfg) {
    cfg.validate();
    write_resolved_config(cfg);
    std::vector<ContributionSeedResult> results;
    CsvWriter summary((experiment_dir(cfg) / "summary.csv").string());
    summary.header({"seed", "spearman_size_contribution"});
    for (const auto seed_signed : cfg.seeds) {
        const auto seed = static_cast<std::uint64_t>(seed_signed);
        auto data = prepare_data(cfg, seed, false);
        auto training =
            train_rcce(cfg, data, seed, static_cast<std::size_t>(cfg.train_rounds), false);
        RngStream score_rng(seed, kStreamScoring);
        auto score = rcce::score_contributions(
            training.state.policy, federation::GlobalModel::zeros(data.task_dim), data.refs,
            score_rng, static_cast<std::size_t>(cfg.score_rounds), cfg.alpha_theta,
            static_cast<unsigned>(cfg.threads));

        ContributionSeedResult res;
        res.client_ids = score.client_ids;
        res.shard_sizes = data.shard_sizes;
        res.contribution = score.contribution;
        res.spearman = spearman_rho(res.shard_sizes, res.contribution);

        // rows sorted by shard size
        std::vector<std::size_t> order(res.client_ids.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (res.shard_sizes[a] != res.shard_sizes[b])
                return res.shard_sizes[a] < res.shard_sizes[b];
            return res.client_ids[a] < res.client_ids[b];
        });
        const auto dir = seed_dir(cfg, seed);
        CsvWriter report((dir / "report.csv").string());
        report.header({"method", "client_id", "shard_size", "contribution", "corrupted"});
        for (const auto i : order)
            report.line({"rcce", CsvWriter::cell(res.client_ids[i]),
                         CsvWriter::cell(res.shard_sizes[i]), CsvWriter::cell(res.contribution[i]),
                         CsvWriter::cell(0)});
        summary.line({CsvWriter::cell(seed_signed), CsvWriter::cell(res.spearman)});
        results.push_back(std::move(res));
    }
    double mean_rho = 0.0;
    for (const auto& r : results) mean_rho += r.spearman;
    mean_rho /= results.empty() ? 1.0 : static_cast<double>(results.size());
    summary.line({"mean", CsvWriter::cell(mean_rho)});
    return results;
}

}  // namespace fedval::harness
