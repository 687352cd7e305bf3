// fedval: single executable exposing the experiments (parity,
// remove-retrain, corruption, scaling, contribution) and the unit
// pipelines (partition, train, score). Configuration comes from built-in
// defaults, then an optional named profile, then an optional config file,
// then command-line flags; the resolved configuration is printed and
// stored before anything runs.
//
// Exit codes: 0 success, 2 usage/config error, 3 dataset file error,
// 4 runtime failure.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "fedval/harness.hpp"

namespace fs = std::filesystem;
using fedval::harness::ExperimentConfig;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

struct CliOverrides {
    std::string config_path;
    std::string profile;
    std::optional<std::int64_t> seed;
    std::string seeds;
    std::optional<std::int64_t> clients;
    std::optional<double> alpha;
    std::optional<std::int64_t> rounds;
    std::optional<std::int64_t> train_rounds;
    std::optional<std::int64_t> retrain_rounds;
    std::optional<std::int64_t> loo_rounds;
    std::optional<std::int64_t> score_rounds;
    std::optional<double> removal_rate;
    std::optional<double> corrupt_sample_fraction;
    std::optional<double> corrupt_word_fraction;
    std::string reward_mode;
    std::optional<double> alpha_theta;
    std::optional<double> alpha_phi;
    std::optional<std::int64_t> baseline_window;
    std::string policy_hidden;
    std::string data_path;
    std::string outdir;
    std::optional<std::int64_t> threads;
    std::string checkpoint;
};

void add_common_flags(CLI::App* cmd, CliOverrides& o) {
    cmd->add_option("--config", o.config_path, "Config file (key = value sections)");
    cmd->add_option("--profile", o.profile, "Named profile: paper or desk");
    cmd->add_option("--seed", o.seed, "Single seed (overrides the seed list)");
    cmd->add_option("--seeds", o.seeds, "Comma-separated seed list (default 1,2,3,4,5)");
    cmd->add_option("--clients", o.clients, "Number of clients (default 50)");
    cmd->add_option("--alpha", o.alpha, "Dirichlet concentration for the partition (default 0.5)");
    cmd->add_option("--rounds", o.rounds, "Communication rounds (default 1000)");
    cmd->add_option("--train-rounds", o.train_rounds, "Evaluator co-training rounds");
    cmd->add_option("--retrain-rounds", o.retrain_rounds, "Remove-and-retrain rounds");
    cmd->add_option("--loo-rounds", o.loo_rounds, "Rounds per LOO training run (default 50)");
    cmd->add_option("--score-rounds", o.score_rounds, "Contribution scoring rounds (default 50)");
    cmd->add_option("--removal-rate", o.removal_rate, "Client removal rate (default 0.3)");
    cmd->add_option("--corrupt-sample-fraction", o.corrupt_sample_fraction,
                    "Fraction of documents corrupted (default 0.2)");
    cmd->add_option("--corrupt-word-fraction", o.corrupt_word_fraction,
                    "Fraction of words deleted per corrupted document (default 0.2)");
    cmd->add_option("--reward-mode", o.reward_mode, "Reward sign: flipped or literal");
    cmd->add_option("--alpha-theta", o.alpha_theta, "Task-model SGD learning rate (default 0.1)");
    cmd->add_option("--alpha-phi", o.alpha_phi, "Evaluator Adam learning rate (default 1e-5)");
    cmd->add_option("--baseline-window", o.baseline_window,
                    "Moving-average window T for the reward baseline (default 20)");
    cmd->add_option("--policy-hidden", o.policy_hidden,
                    "Evaluator hidden widths, comma separated (default 16,16,8)");
    cmd->add_option("--data", o.data_path,
                    "SMS dataset file; FEDVAL_DATA is the fallback, synthetic corpus otherwise");
    cmd->add_option("--outdir", o.outdir, "Output directory (default out)");
    cmd->add_option("--threads", o.threads,
                    "Worker threads for client updates; timing runs force 1");
}

ExperimentConfig resolve_config(const CliOverrides& o, const std::string& experiment) {
    ExperimentConfig cfg;  // built-in defaults mirror the reported setup
    if (!o.profile.empty()) fedval::harness::apply_profile(cfg, o.profile);
    if (!o.config_path.empty()) {
        auto file_cfg = fedval::cli::load_config_file(o.config_path);
        auto from_file = fedval::harness::config_from(file_cfg);
        // config file wins over profile for every key it mentions
        const auto defaults_text = fedval::harness::serialize_config(cfg);
        auto merged = fedval::cli::parse_config_text(defaults_text);
        for (const auto& [k, v] : file_cfg.entries()) merged.set(k, v);
        cfg = fedval::harness::config_from(merged);
        (void)from_file;
    }
    cfg.experiment = experiment;

    if (o.seed) cfg.seeds = {*o.seed};
    if (!o.seeds.empty()) {
        fedval::cli::Config tmp;
        tmp.set("seeds", o.seeds);
        cfg.seeds = tmp.get_int_list("seeds");
    }
    if (o.clients) cfg.n_clients = *o.clients;
    if (o.alpha) cfg.alpha = *o.alpha;
    if (o.rounds) {
        cfg.rounds = *o.rounds;
        cfg.train_rounds = *o.rounds;
        cfg.retrain_rounds = *o.rounds;
    }
    if (o.train_rounds) cfg.train_rounds = *o.train_rounds;
    if (o.retrain_rounds) cfg.retrain_rounds = *o.retrain_rounds;
    if (o.loo_rounds) cfg.loo_rounds = *o.loo_rounds;
    if (o.score_rounds) cfg.score_rounds = *o.score_rounds;
    if (o.removal_rate) cfg.removal_rate = *o.removal_rate;
    if (o.corrupt_sample_fraction) cfg.corrupt_sample_fraction = *o.corrupt_sample_fraction;
    if (o.corrupt_word_fraction) cfg.corrupt_word_fraction = *o.corrupt_word_fraction;
    if (!o.reward_mode.empty()) cfg.reward_mode = o.reward_mode;
    if (o.alpha_theta) cfg.alpha_theta = *o.alpha_theta;
    if (o.alpha_phi) cfg.alpha_phi = *o.alpha_phi;
    if (o.baseline_window) cfg.baseline_window = *o.baseline_window;
    if (!o.policy_hidden.empty()) {
        fedval::cli::Config tmp;
        tmp.set("hidden", o.policy_hidden);
        cfg.policy_hidden = tmp.get_int_list("hidden");
    }
    if (!o.data_path.empty()) {
        cfg.dataset_source = "file";
        cfg.dataset_path = o.data_path;
    } else if (cfg.dataset_source == "synthetic") {
        if (const char* env = std::getenv("FEDVAL_DATA"); env != nullptr && env[0] != '\0') {
            cfg.dataset_source = "file";
            cfg.dataset_path = env;
        }
    }
    if (!o.outdir.empty()) cfg.outdir = o.outdir;
    if (o.threads) cfg.threads = *o.threads;

    cfg.validate();
    if (cfg.dataset_source == "file" && !fs::exists(cfg.dataset_path))
        throw DataError("dataset file not found: " + cfg.dataset_path);
    return cfg;
}

void print_resolved(const ExperimentConfig& cfg) {
    std::cout << "# resolved configuration\n" << fedval::harness::serialize_config(cfg) << std::flush;
}

json policy_to_json(const fedval::models::MlpPolicy& policy) {
    return json{{"dims", policy.dims}, {"params", policy.params}};
}

fedval::models::MlpPolicy policy_from_json(const json& j) {
    fedval::models::MlpPolicy policy;
    policy.dims = j.at("dims").get<std::vector<std::size_t>>();
    policy.params = j.at("params").get<std::vector<double>>();
    if (policy.dims.size() < 2 || policy.params.size() != policy.layer_offset(policy.dims.size() - 1))
        throw std::runtime_error("checkpoint: inconsistent policy shape");
    return policy;
}

int run_train(const ExperimentConfig& cfg) {
    const auto seed = static_cast<std::uint64_t>(cfg.seeds.front());
    auto data = fedval::harness::prepare_data(cfg, seed, cfg.corrupt_sample_fraction > 0.0 &&
                                                             cfg.experiment == "corruption");
    auto training = fedval::harness::train_rcce(cfg, data, seed,
                                                static_cast<std::size_t>(cfg.train_rounds));
    const auto dir = fedval::harness::seed_dir(cfg, seed);
    fedval::harness::write_round_log(dir / "rcce_rounds.csv", training.records);

    json ckpt;
    ckpt["format"] = "fedval-checkpoint";
    ckpt["version"] = 1;
    ckpt["round"] = training.state.model.round;
    ckpt["task"] = {{"theta", training.state.model.theta}};
    ckpt["policy"] = policy_to_json(training.state.policy);
    ckpt["adam"] = {{"t", training.state.adam.t},   {"m", training.state.adam.m},
                    {"v", training.state.adam.v},   {"beta1", training.state.adam.beta1},
                    {"beta2", training.state.adam.beta2}, {"eps", training.state.adam.eps},
                    {"lr", training.state.adam.lr}};
    ckpt["baseline"] = {{"delta", training.state.baseline.delta},
                        {"window", training.state.baseline.window},
                        {"initialized", training.state.baseline.initialized}};
    ckpt["config"] = fedval::harness::serialize_config(cfg);
    std::ofstream out(dir / "checkpoint.json", std::ios::binary);
    out << ckpt.dump(2) << "\n";
    std::cout << "wrote " << (dir / "checkpoint.json").string() << "\n";
    std::cout << "final validation accuracy: "
              << fedval::harness::format_double(training.accuracy_curve.back()) << "\n";
    return kExitOk;
}

int run_score(const ExperimentConfig& cfg, const std::string& checkpoint_path) {
    std::ifstream in(checkpoint_path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + checkpoint_path);
    json ckpt = json::parse(in);
    if (ckpt.value("format", "") != "fedval-checkpoint" || ckpt.value("version", 0) != 1)
        throw std::runtime_error("unrecognized checkpoint format");
    const auto policy = policy_from_json(ckpt.at("policy"));

    const auto seed = static_cast<std::uint64_t>(cfg.seeds.front());
    auto data = fedval::harness::prepare_data(cfg, seed, false);
    if (policy.dims.front() != data.task_dim)
        throw std::runtime_error("checkpoint policy input does not match the dataset dimension");

    fedval::numkit::RngStream score_rng(seed, fedval::harness::kStreamScoring);
    auto score = fedval::rcce::score_contributions(
        policy, fedval::federation::GlobalModel::zeros(data.task_dim), data.refs, score_rng,
        static_cast<std::size_t>(cfg.score_rounds), cfg.alpha_theta,
        static_cast<unsigned>(cfg.threads));

    const auto dir = fedval::harness::seed_dir(cfg, seed);
    fedval::harness::CsvWriter report((dir / "report.csv").string());
    report.header({"method", "client_id", "shard_size", "contribution", "corrupted"});
    for (std::size_t i = 0; i < score.contribution.size(); ++i)
        report.line({"rcce", fedval::harness::CsvWriter::cell(score.client_ids[i]),
                     fedval::harness::CsvWriter::cell(data.shard_sizes[i]),
                     fedval::harness::CsvWriter::cell(score.contribution[i]),
                     fedval::harness::CsvWriter::cell(0)});
    std::cout << "wrote " << (dir / "report.csv").string() << "\n";
    return kExitOk;
}

int run_partition(const ExperimentConfig& cfg) {
    const auto seed = static_cast<std::uint64_t>(cfg.seeds.front());
    auto data = fedval::harness::prepare_data(cfg, seed, false);
    const auto dir = fedval::harness::seed_dir(cfg, seed);
    fedval::harness::CsvWriter summary((dir / "partition.csv").string());
    summary.header({"client_id", "shard_size"});
    for (const auto& shard : data.partition.shards) {
        summary.line({fedval::harness::CsvWriter::cell(shard.client_id),
                      fedval::harness::CsvWriter::cell(shard.m())});
        char name[32];
        std::snprintf(name, sizeof name, "client_%03d.csv", shard.client_id);
        fedval::dataset::write_shard_csv(shard, (dir / name).string());
    }
    std::cout << "wrote " << cfg.n_clients << " shard files under " << dir.string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fedval: federated client-contribution evaluation simulator"};
    app.require_subcommand(1);

    CliOverrides o;
    auto* parity = app.add_subcommand("parity", "FedAvg vs co-trained evaluator accuracy curves");
    auto* remove_retrain =
        app.add_subcommand("remove-retrain", "Remove highest/lowest valued clients and retrain");
    auto* corruption =
        app.add_subcommand("corruption", "Remove-retrain and discrimination under corrupted data");
    auto* scaling = app.add_subcommand("scaling", "Wall-clock comparison against LOO over client counts");
    auto* contribution = app.add_subcommand("contribution", "Score per-client contributions");
    auto* partition = app.add_subcommand("partition", "Partition the corpus and dump shard CSVs");
    auto* train = app.add_subcommand("train", "Co-train task model and evaluator; write a checkpoint");
    auto* score = app.add_subcommand("score", "Score contributions with a trained checkpoint");
    for (auto* cmd :
         {parity, remove_retrain, corruption, scaling, contribution, partition, train, score})
        add_common_flags(cmd, o);
    score->add_option("--checkpoint", o.checkpoint, "Checkpoint written by `fedval train`")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    std::string experiment;
    if (parity->parsed()) experiment = "parity";
    else if (remove_retrain->parsed()) experiment = "remove_retrain";
    else if (corruption->parsed()) experiment = "corruption";
    else if (scaling->parsed()) experiment = "scaling";
    else if (contribution->parsed()) experiment = "contribution";
    else if (partition->parsed()) experiment = "partition";
    else if (train->parsed()) experiment = "train";
    else if (score->parsed()) experiment = "score";

    try {
        const auto cfg = resolve_config(o, experiment);
        print_resolved(cfg);
        if (experiment == "parity") {
            auto result = fedval::harness::exp_parity(cfg);
            std::cout << "mean |accuracy gap|: " << fedval::harness::format_double(result.mean_gap)
                      << "\n";
        } else if (experiment == "remove_retrain") {
            fedval::harness::exp_remove_retrain(cfg);
        } else if (experiment == "corruption") {
            auto result = fedval::harness::exp_corruption(cfg);
            double auc = 0.0;
            for (const auto& s : result.stats) auc += s.auc;
            std::cout << "mean rank-AUC (clean vs corrupted): "
                      << fedval::harness::format_double(auc / result.stats.size()) << "\n";
        } else if (experiment == "scaling") {
            auto rows = fedval::harness::exp_scaling(cfg);
            for (const auto& row : rows)
                std::cout << "n=" << row.n_clients
                          << " rcce_s=" << fedval::harness::format_double(row.rcce_seconds)
                          << " loo_s=" << fedval::harness::format_double(row.loo_seconds) << "\n";
        } else if (experiment == "contribution") {
            auto results = fedval::harness::exp_contribution(cfg);
            double rho = 0.0;
            for (const auto& r : results) rho += r.spearman;
            std::cout << "mean spearman(size, contribution): "
                      << fedval::harness::format_double(rho / results.size()) << "\n";
        } else if (experiment == "partition") {
            return run_partition(cfg);
        } else if (experiment == "train") {
            return run_train(cfg);
        } else if (experiment == "score") {
            return run_score(cfg, o.checkpoint);
        }
        return kExitOk;
    } catch (const fedval::cli::ConfigError& e) {
        std::cerr << "fedval: error [config]: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "fedval: error [data]: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "fedval: error [runtime]: " << e.what() << "\n";
        return kExitRuntime;
    }
}
