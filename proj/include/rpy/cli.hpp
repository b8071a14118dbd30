#pragma once

#include "rpy/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rpy::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitNumerical = 4;

struct AnalyzeArgs {
    std::string pair_file;
    std::string policy0_file;
    std::string policy1_file;
    std::string witness = "sup"; // "sup" or "lipschitz:L"
    std::string metric_file;     // m x m ground metric for the Lipschitz witness
    std::string sa_metric_file;  // optional (m n) x (m n) metric for the occupancy bound
    std::string out_dir = ".";
};

struct CheckArgs {
    std::string pair_file;
    std::string which; // "prop2" or "prop3"
    double epsilon = 0.0;
    std::string out_dir = ".";
};

struct OptimizeArgs {
    std::string pair_file;
    double epsilon = 0.0;
    double lambda = -1.0; // < 0: keep the pair file's lambda
    std::string out_dir = ".";
};

struct TrainArgs {
    std::string config_file;
    std::string out_dir;              // overrides the config's out_dir when set
    std::vector<std::uint64_t> seeds; // overrides the config's seed list when nonempty
};

struct PcaArgs {
    std::vector<std::string> feature_files; // one per group, group id = position
    Index components = 2;
    std::string out_dir = ".";
};

int cmd_analyze(const AnalyzeArgs& args);
int cmd_check(const CheckArgs& args);
int cmd_optimize(const OptimizeArgs& args);
int cmd_train(const TrainArgs& args);
int cmd_pca(const PcaArgs& args);

} // namespace rpy::cli
