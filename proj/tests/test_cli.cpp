#include "rpy/cli.hpp"
#include "rpy/io.hpp"
#include "rpy/parity.hpp"
#include "rpy/pca.hpp"
#include "rpy/rng.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rpy;
using namespace rpy::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("rpy_test_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_prop1_fixture(const std::string& path, double c, double gamma) {
    io::save_pair(parity::prop1_counterexample(c, gamma), path);
}

} // namespace

TEST_SUITE("cli-report") {

TEST_CASE("mdp and policy files round trip through their readers") {
    TempDir dir("roundtrip");
    Rng rng(201);
    const GroupPair pair = random_pair(rng, 4, 3, 0.9, 0.25);
    io::save_pair(pair, dir.file("pair.json"));
    const GroupPair loaded = io::load_pair(dir.file("pair.json"));
    CHECK(loaded.lambda == doctest::Approx(pair.lambda));
    CHECK((loaded.mdp0.reward - pair.mdp0.reward).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded.mdp1.mu - pair.mdp1.mu).cwiseAbs().maxCoeff() == 0.0);
    for (Index s = 0; s < 4; ++s)
        CHECK((loaded.mdp0.transition[s] - pair.mdp0.transition[s]).cwiseAbs().maxCoeff() == 0.0);

    const Policy pi = random_policy(rng, 4, 3);
    io::save_policy(pi, dir.file("policy.json"));
    const Policy pi_loaded = io::load_policy(dir.file("policy.json"));
    CHECK((pi_loaded.pi - pi.pi).cwiseAbs().maxCoeff() == 0.0);

    // Unknown keys are rejected.
    io::json doc = io::pair_to_json(pair);
    doc["extra"] = 1;
    std::ofstream(dir.file("bad.json")) << doc.dump();
    CHECK_THROWS_AS(io::load_pair(dir.file("bad.json")), ValidationError);
}

TEST_CASE("analyze reproduces the absorbing pair's disparity") {
    TempDir dir("analyze");
    write_prop1_fixture(dir.file("pair.json"), 5.0, 0.9);
    io::save_policy(Policy::uniform(2, 2), dir.file("p0.json"));
    io::save_policy(Policy::uniform(2, 2), dir.file("p1.json"));

    cli::AnalyzeArgs args;
    args.pair_file = dir.file("pair.json");
    args.policy0_file = dir.file("p0.json");
    args.policy1_file = dir.file("p1.json");
    args.out_dir = dir.file("out");
    REQUIRE(cli::cmd_analyze(args) == cli::kExitOk);

    const io::json report = io::load_json_file(dir.file("out") + "/analyze.json");
    CHECK(report["results"]["delta_ret"].get<double>() == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(report["results"]["visitation_bound"]["total"].get<double>() ==
          doctest::Approx(10.0).epsilon(1e-9));
    CHECK(report["schema_version"].get<int>() == 1);
    CHECK(report["inputs"].size() == 3);

    // Identical pair and policies: all zeros.
    Rng rng(202);
    const Mdp mdp = random_mdp(rng, 3, 2, 0.9);
    io::save_pair(GroupPair(mdp, mdp, 0.5), dir.file("same.json"));
    io::save_policy(Policy::uniform(3, 2), dir.file("pi.json"));
    cli::AnalyzeArgs same;
    same.pair_file = dir.file("same.json");
    same.policy0_file = dir.file("pi.json");
    same.policy1_file = dir.file("pi.json");
    same.out_dir = dir.file("out2");
    REQUIRE(cli::cmd_analyze(same) == cli::kExitOk);
    const io::json zero = io::load_json_file(dir.file("out2") + "/analyze.json");
    CHECK(zero["results"]["delta_ret"].get<double>() == doctest::Approx(0.0));
    CHECK(zero["results"]["occupancy_bound"]["total"].get<double>() == doctest::Approx(0.0));
}

TEST_CASE("analyze rejects malformed stochastic rows with exit code 2") {
    TempDir dir("badrow");
    write_prop1_fixture(dir.file("pair.json"), 1.0, 0.9);
    io::json doc = io::load_json_file(dir.file("pair.json"));
    doc["mdp0"]["transition"][0][0][0] = 0.9; // row now sums to 0.9
    std::ofstream(dir.file("broken.json")) << doc.dump();
    io::save_policy(Policy::uniform(2, 2), dir.file("pi.json"));

    cli::AnalyzeArgs args;
    args.pair_file = dir.file("broken.json");
    args.policy0_file = dir.file("pi.json");
    args.policy1_file = dir.file("pi.json");
    args.out_dir = dir.file("out");
    CHECK(cli::cmd_analyze(args) == cli::kExitValidation);
}

TEST_CASE("check command dispatches both condition checkers") {
    TempDir dir("check");
    // Equal-transition pair satisfies the zero-parity condition.
    Rng rng(203);
    Mdp mdp = random_mdp(rng, 3, 2, 0.9);
    Matrix state_reward(3, 2);
    for (Index s = 0; s < 3; ++s) state_reward.row(s).setConstant(rng.uniform(-1.0, 1.0));
    mdp = Mdp(mdp.gamma, mdp.mu, mdp.transition, state_reward);
    io::save_pair(GroupPair(mdp, mdp, 0.5), dir.file("same.json"));

    cli::CheckArgs prop2;
    prop2.pair_file = dir.file("same.json");
    prop2.which = "prop2";
    prop2.out_dir = dir.file("out_p2");
    REQUIRE(cli::cmd_check(prop2) == cli::kExitOk);
    CHECK(io::load_json_file(dir.file("out_p2") + "/check.json")["results"]["holds"].get<bool>());

    write_prop1_fixture(dir.file("pair.json"), 4.0, 0.9);
    cli::CheckArgs prop3;
    prop3.pair_file = dir.file("pair.json");
    prop3.which = "prop3";
    prop3.epsilon = 2.0;
    prop3.out_dir = dir.file("out_p3");
    REQUIRE(cli::cmd_check(prop3) == cli::kExitOk);
    const io::json result = io::load_json_file(dir.file("out_p3") + "/check.json");
    CHECK_FALSE(result["results"]["holds"].get<bool>());
    CHECK(result["results"]["certificate"].contains("rho0"));

    // Assumption violations surface as exit code 2.
    cli::CheckArgs bad;
    bad.pair_file = dir.file("pair.json"); // differing initial distributions
    bad.which = "prop2";
    bad.out_dir = dir.file("out_bad");
    CHECK(cli::cmd_check(bad) == cli::kExitValidation);

    cli::CheckArgs unknown;
    unknown.pair_file = dir.file("pair.json");
    unknown.which = "prop9";
    unknown.out_dir = dir.file("out_unknown");
    CHECK(cli::cmd_check(unknown) == cli::kExitValidation);
}

TEST_CASE("optimize writes policies that analyze reproduces exactly") {
    TempDir dir("optimize");
    Rng rng(204);
    io::save_pair(random_pair(rng, 3, 2, 0.9, 0.4), dir.file("pair.json"));

    cli::OptimizeArgs args;
    args.pair_file = dir.file("pair.json");
    args.epsilon = 0.2;
    args.out_dir = dir.file("out");
    REQUIRE(cli::cmd_optimize(args) == cli::kExitOk);

    const io::json report = io::load_json_file(dir.file("out") + "/optimize.json");
    const double achieved = report["results"]["achieved_disparity"].get<double>();

    cli::AnalyzeArgs analyze;
    analyze.pair_file = dir.file("pair.json");
    analyze.policy0_file = report["results"]["policy0_file"].get<std::string>();
    analyze.policy1_file = report["results"]["policy1_file"].get<std::string>();
    analyze.out_dir = dir.file("out_analyze");
    REQUIRE(cli::cmd_analyze(analyze) == cli::kExitOk);
    const io::json analyzed = io::load_json_file(dir.file("out_analyze") + "/analyze.json");
    CHECK(analyzed["results"]["delta_ret"].get<double>() ==
          doctest::Approx(achieved).epsilon(1e-9));
}

TEST_CASE("train smoke run writes the documented CSVs and is bit-reproducible") {
    TempDir dir("train");
    io::json config;
    config["env"] = {{"kind", "recsim"}, {"num_items", 10}, {"embed_dim", 3},
                     {"horizon", 6},     {"lambda", 0.5},   {"discount", 0.9}};
    config["trainer"] = {{"hidden_size", 16}, {"update_batch", 16}};
    config["run"] = {{"iterations", 2},
                     {"env_steps_per_iteration", 24},
                     {"model_updates_per_iteration", 2},
                     {"ratios", io::json::array({"1:0", "1:1"})},
                     {"eval_every", 1},
                     {"eval_episodes", 2},
                     {"skew_factor", 2}};
    config["seeds"] = io::json::array({0});
    config["out_dir"] = dir.file("runs");
    std::ofstream(dir.file("config.json")) << config.dump(2);

    cli::TrainArgs args;
    args.config_file = dir.file("config.json");
    REQUIRE(cli::cmd_train(args) == cli::kExitOk);

    const std::string run_csv = dir.file("runs") + "/run_r1-1_s0.csv";
    REQUIRE(fs::exists(run_csv));
    std::ifstream in(run_csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "iteration,return0,return1,overall_return,gap,alignment_loss,epsilon,seed");
    int rows = 0;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
    REQUIRE(fs::exists(dir.file("runs") + "/aggregate.csv"));
    REQUIRE(fs::exists(dir.file("runs") + "/ckpt_r1-1_s0_q_online.txt"));
    REQUIRE(fs::exists(dir.file("runs") + "/features_r1-1_s0_g0.csv"));

    // Every emitted CSV parses back through the library's own readers.
    const io::CsvTable run_table = io::load_csv_table(run_csv);
    CHECK(run_table.columns.size() == 8);
    CHECK(run_table.rows.rows() == 2);
    CHECK(run_table.rows(1, 0) == 1.0); // iteration column
    const io::CsvTable agg_table = io::load_csv_table(dir.file("runs") + "/aggregate.csv");
    CHECK(agg_table.columns.front() == "ratio");
    CHECK(agg_table.rows.rows() == 4); // 2 ratios x 2 logged iterations

    // Re-run into a fresh directory: every CSV byte-identical.
    const std::string first_run = slurp(run_csv);
    const std::string first_aggregate = slurp(dir.file("runs") + "/aggregate.csv");
    cli::TrainArgs again = args;
    again.out_dir = dir.file("runs2");
    REQUIRE(cli::cmd_train(again) == cli::kExitOk);
    CHECK(slurp(dir.file("runs2") + "/run_r1-1_s0.csv") == first_run);
    CHECK(slurp(dir.file("runs2") + "/aggregate.csv") == first_aggregate);

    // Unknown config keys are rejected.
    config["run"]["typo_field"] = 1;
    std::ofstream(dir.file("bad_config.json")) << config.dump(2);
    cli::TrainArgs bad;
    bad.config_file = dir.file("bad_config.json");
    CHECK(cli::cmd_train(bad) == cli::kExitValidation);
}

TEST_CASE("pca recovers a 1-D axis and reports orthonormal components") {
    Rng rng(205);
    Matrix data(200, 3);
    for (Index i = 0; i < 200; ++i) {
        const double t = rng.normal();
        data(i, 0) = 3.0 * t;
        data(i, 1) = 1e-7 * rng.normal();
        data(i, 2) = 1e-7 * rng.normal();
    }
    const pca::PcaResult result = pca::principal_components(data, 2);
    CHECK(std::abs(result.components(0, 0)) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(result.components(0, 0) > 0.0); // sign convention
    CHECK(result.projections.col(1).cwiseAbs().maxCoeff() <= 1e-5);
    CHECK(std::abs(result.components.row(0).dot(result.components.row(1))) <= 1e-8);
    CHECK(result.components.row(0).norm() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(result.explained_variance[0] >= result.explained_variance[1]);
}

TEST_CASE("pca eigenvalues match a dense eigensolver on Gaussian data") {
    Rng rng(206);
    Matrix data(400, 4);
    for (Index i = 0; i < 400; ++i) data.row(i) = rng.normal_vector(4).transpose();
    const pca::PcaResult result = pca::principal_components(data, 2);

    const Matrix centered = data.rowwise() - data.colwise().mean();
    const Matrix covariance = centered.transpose() * centered / double(data.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(covariance);
    const Vector eigenvalues = solver.eigenvalues(); // ascending
    CHECK(result.explained_variance[0] ==
          doctest::Approx(eigenvalues[3]).epsilon(1e-6));
    CHECK(result.explained_variance[1] ==
          doctest::Approx(eigenvalues[2]).epsilon(1e-6));

    // Isotropic data: top-two explained variances split roughly evenly.
    CHECK(result.explained_variance[1] / result.explained_variance[0] > 0.7);
    CHECK_THROWS_AS(pca::principal_components(Matrix::Zero(50, 3), 2), DegenerateData);
}

TEST_CASE("pca command separates labeled clusters") {
    TempDir dir("pca");
    Rng rng(207);
    Matrix g0(60, 3), g1(60, 3);
    for (Index i = 0; i < 60; ++i) {
        g0.row(i) = (rng.normal_vector(3) * 0.2 + Vector::Constant(3, 2.0)).transpose();
        g1.row(i) = (rng.normal_vector(3) * 0.2 - Vector::Constant(3, 2.0)).transpose();
    }
    io::save_feature_csv(dir.file("g0.csv"), g0);
    io::save_feature_csv(dir.file("g1.csv"), g1);

    cli::PcaArgs args;
    args.feature_files = {dir.file("g0.csv"), dir.file("g1.csv")};
    args.out_dir = dir.file("out");
    REQUIRE(cli::cmd_pca(args) == cli::kExitOk);

    // Skip the header row before handing the projections to the csv reader.
    std::ifstream raw(dir.file("out") + "/pca.csv");
    std::string line;
    std::getline(raw, line);
    CHECK(line == "pc1,pc2,group");
    std::ofstream stripped(dir.file("stripped.csv"));
    while (std::getline(raw, line)) stripped << line << '\n';
    stripped.close();
    const Matrix projected = io::load_feature_csv(dir.file("stripped.csv"));
    REQUIRE(projected.rows() == 120);
    double mean0 = 0.0, mean1 = 0.0;
    for (Index i = 0; i < 60; ++i) mean0 += projected(i, 0);
    for (Index i = 60; i < 120; ++i) mean1 += projected(i, 0);
    mean0 /= 60.0;
    mean1 /= 60.0;
    double spread = 0.0;
    for (Index i = 0; i < 60; ++i) spread += std::abs(projected(i, 0) - mean0);
    spread /= 60.0;
    CHECK(std::abs(mean0 - mean1) > 4.0 * spread);
}

TEST_CASE("the installed binary runs end to end") {
    const char* binary = std::getenv("RPY_BIN");
    if (!binary) return; // available only under ctest
    TempDir dir("binary");
    write_prop1_fixture(dir.file("pair.json"), 5.0, 0.9);
    io::save_policy(Policy::uniform(2, 2), dir.file("pi.json"));
    const std::string command = std::string(binary) + " analyze --pair " + dir.file("pair.json") +
                                " --policy0 " + dir.file("pi.json") + " --policy1 " +
                                dir.file("pi.json") + " --out " + dir.file("out") +
                                " > /dev/null 2>&1";
    REQUIRE(std::system(command.c_str()) == 0);
    const io::json report = io::load_json_file(dir.file("out") + "/analyze.json");
    CHECK(report["results"]["delta_ret"].get<double>() == doctest::Approx(5.0).epsilon(1e-9));

    const std::string bad = std::string(binary) + " check --pair " + dir.file("pair.json") +
                            " --which prop2 --out " + dir.file("out2") + " > /dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(bad.c_str())) == 2); // assumptions violated
}

} // TEST_SUITE
