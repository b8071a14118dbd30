#include "rpy/cli.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::string token =
            text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!token.empty()) seeds.push_back(std::stoull(token));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return seeds;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Return-disparity analysis and mitigation for paired MDPs"};
    app.require_subcommand(1);

    rpy::cli::AnalyzeArgs analyze_args;
    auto* analyze = app.add_subcommand(
        "analyze", "Exact return disparity and its decomposition bounds for a policy pair");
    analyze->add_option("--pair", analyze_args.pair_file, "Pair JSON file")->required();
    analyze->add_option("--policy0", analyze_args.policy0_file, "Group-0 policy JSON")->required();
    analyze->add_option("--policy1", analyze_args.policy1_file, "Group-1 policy JSON")->required();
    analyze->add_option("--witness", analyze_args.witness, "Witness class: sup or lipschitz:L");
    analyze->add_option("--metric", analyze_args.metric_file, "State ground metric (JSON matrix)");
    analyze->add_option("--sa-metric", analyze_args.sa_metric_file,
                        "State-action ground metric (JSON matrix)");
    analyze->add_option("--out", analyze_args.out_dir, "Output directory");

    rpy::cli::CheckArgs check_args;
    auto* check = app.add_subcommand(
        "check", "Feasibility conditions: prop2 (zero-parity transition condition) or prop3 "
                 "(epsilon-parity of per-group optimal policies)");
    check->add_option("--pair", check_args.pair_file, "Pair JSON file")->required();
    check->add_option("--which", check_args.which, "prop2 or prop3")->required();
    check->add_option("--epsilon", check_args.epsilon, "Parity tolerance (prop3)");
    check->add_option("--out", check_args.out_dir, "Output directory");

    rpy::cli::OptimizeArgs optimize_args;
    auto* optimize = app.add_subcommand(
        "optimize", "Occupancy-measure LP for jointly optimal policies under a parity budget");
    optimize->add_option("--pair", optimize_args.pair_file, "Pair JSON file")->required();
    optimize->add_option("--epsilon", optimize_args.epsilon, "Parity tolerance");
    optimize->add_option("--lambda", optimize_args.lambda, "Group-0 population share override");
    optimize->add_option("--out", optimize_args.out_dir, "Output directory");

    rpy::cli::TrainArgs train_args;
    std::string seeds_text;
    auto* train = app.add_subcommand(
        "train", "Double-DQN training with feature-distribution alignment over a seed/ratio grid");
    train->add_option("--config", train_args.config_file, "Run-config JSON file")->required();
    train->add_option("--out", train_args.out_dir, "Output directory override");
    train->add_option("--seeds", seeds_text, "Comma-separated seed list override");

    rpy::cli::PcaArgs pca_args;
    auto* pca = app.add_subcommand(
        "pca", "Project feature batches onto principal components for visualization");
    pca->add_option("--features", pca_args.feature_files,
                    "Feature batch CSVs, one per group (group id = position)")
        ->required()
        ->expected(-2);
    pca->add_option("--components", pca_args.components, "Number of components");
    pca->add_option("--out", pca_args.out_dir, "Output directory");

    CLI11_PARSE(app, argc, argv);

    if (analyze->parsed()) return rpy::cli::cmd_analyze(analyze_args);
    if (check->parsed()) return rpy::cli::cmd_check(check_args);
    if (optimize->parsed()) return rpy::cli::cmd_optimize(optimize_args);
    if (train->parsed()) {
        if (!seeds_text.empty()) train_args.seeds = parse_seed_list(seeds_text);
        return rpy::cli::cmd_train(train_args);
    }
    if (pca->parsed()) return rpy::cli::cmd_pca(pca_args);
    return rpy::cli::kExitValidation;
}
