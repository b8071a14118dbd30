#include "rpy/cli.hpp"

#include "rpy/align.hpp"
#include "rpy/divergence.hpp"
#include "rpy/envs.hpp"
#include "rpy/fair_lp.hpp"
#include "rpy/io.hpp"
#include "rpy/nn.hpp"
#include "rpy/parity.hpp"
#include "rpy/pca.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace rpy::cli {

namespace {

namespace fs = std::filesystem;
using io::json;

constexpr const char* kBuildId = "rpy 0.1.0";

std::string wall_clock_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buffer;
}

json report_envelope(const std::string& command, const std::vector<std::string>& inputs,
                     json results, const std::vector<std::uint64_t>& seeds) {
    json report;
    report["schema_version"] = 1;
    report["command"] = command;
    json digests;
    for (const auto& path : inputs) digests[path] = io::file_digest(path);
    report["inputs"] = std::move(digests);
    report["results"] = std::move(results);
    json provenance;
    provenance["build"] = kBuildId;
    provenance["seeds"] = seeds;
    provenance["wall_clock"] = wall_clock_utc();
    report["provenance"] = std::move(provenance);
    return report;
}

void ensure_out_dir(const std::string& out_dir) {
    if (!out_dir.empty()) fs::create_directories(out_dir);
}

std::string out_path(const std::string& out_dir, const std::string& name) {
    return (fs::path(out_dir) / name).string();
}

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
    } catch (const InvalidParameter& e) {
        std::cerr << "invalid parameter: " << e.what() << '\n';
    } catch (const DimensionMismatch& e) {
        std::cerr << "dimension mismatch: " << e.what() << '\n';
    } catch (const AssumptionViolated& e) {
        std::cerr << "assumption violated: " << e.what() << '\n';
    } catch (const IndexOutOfRange& e) {
        std::cerr << "index out of range: " << e.what() << '\n';
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitValidation;
}

struct ParsedWitness {
    parity::Witness witness;
    bool occupancy_fell_back_to_sup = false;
};

ParsedWitness parse_witness(const AnalyzeArgs& args) {
    ParsedWitness out;
    if (args.witness == "sup") {
        out.witness = parity::Witness::sup_norm_ball();
        return out;
    }
    if (args.witness.rfind("lipschitz:", 0) == 0) {
        const double constant = std::stod(args.witness.substr(10));
        if (args.metric_file.empty())
            throw InvalidParameter("lipschitz witness requires --metric");
        Matrix state_metric = io::matrix_from_json(io::load_json_file(args.metric_file));
        Matrix sa_metric;
        if (!args.sa_metric_file.empty())
            sa_metric = io::matrix_from_json(io::load_json_file(args.sa_metric_file));
        else
            out.occupancy_fell_back_to_sup = true;
        out.witness = parity::Witness::lipschitz(constant, std::move(state_metric),
                                                 std::move(sa_metric));
        return out;
    }
    throw InvalidParameter("witness must be 'sup' or 'lipschitz:L'");
}

json visitation_bound_json(const parity::VisitationBound& b) {
    json out;
    out["reward_gap_term"] = b.reward_gap_term;
    out["policy_term"] = b.policy_term;
    out["policy_term_group0"] = b.policy_term_group0;
    out["policy_term_group1"] = b.policy_term_group1;
    out["visitation_ipm_term"] = b.visitation_ipm_term;
    out["total"] = b.total;
    return out;
}

json occupancy_bound_json(const parity::OccupancyBound& b) {
    json out;
    out["reward_gap_term"] = b.reward_gap_term;
    out["occupancy_ipm_term"] = b.occupancy_ipm_term;
    out["total"] = b.total;
    return out;
}

} // namespace

int cmd_analyze(const AnalyzeArgs& args) {
    return guarded([&] {
        const GroupPair pair = io::load_pair(args.pair_file);
        const Policy pi0 = io::load_policy(args.policy0_file);
        const Policy pi1 = io::load_policy(args.policy1_file);
        const ParsedWitness parsed = parse_witness(args);

        const double delta = parity::return_disparity(pair, pi0, pi1);
        const parity::VisitationBound visitation =
            parity::bound_via_visitation(pair, pi0, pi1, parsed.witness);
        const parity::OccupancyBound occupancy =
            parity::bound_via_occupancy(pair, pi0, pi1,
                                        parsed.occupancy_fell_back_to_sup
                                            ? parity::Witness::sup_norm_ball()
                                            : parsed.witness);

        json results;
        results["delta_ret"] = delta;
        results["visitation_bound"] = visitation_bound_json(visitation);
        results["occupancy_bound"] = occupancy_bound_json(occupancy);
        results["witness"] = args.witness;
        if (parsed.occupancy_fell_back_to_sup && parsed.witness.kind == parity::Witness::Kind::Lipschitz)
            results["occupancy_witness"] = "sup";

        ensure_out_dir(args.out_dir);
        io::write_json_file(out_path(args.out_dir, "analyze.json"),
                            report_envelope("analyze",
                                            {args.pair_file, args.policy0_file, args.policy1_file},
                                            results, {}));

        std::ofstream csv(out_path(args.out_dir, "analyze.csv"));
        csv << "delta_ret,reward_gap_term,policy_term,visitation_ipm_term,visitation_total,"
               "occ_reward_gap_term,occupancy_ipm_term,occupancy_total,witness\n";
        csv << io::format_double(delta) << ',' << io::format_double(visitation.reward_gap_term)
            << ',' << io::format_double(visitation.policy_term) << ','
            << io::format_double(visitation.visitation_ipm_term) << ','
            << io::format_double(visitation.total) << ','
            << io::format_double(occupancy.reward_gap_term) << ','
            << io::format_double(occupancy.occupancy_ipm_term) << ','
            << io::format_double(occupancy.total) << ',' << args.witness << '\n';
        return kExitOk;
    });
}

int cmd_check(const CheckArgs& args) {
    return guarded([&] {
        const GroupPair pair = io::load_pair(args.pair_file);
        json results;
        results["which"] = args.which;
        if (args.which == "prop2") {
            const parity::TransitionConditionResult r = parity::check_prop2(pair);
            results["holds"] = r.holds;
            results["margin"] = r.margin;
            if (!r.holds) results["witness_direction"] = io::vector_to_json(r.witness_direction);
        } else if (args.which == "prop3") {
            const fairlp::OptimaParityResult r = fairlp::check_prop3(pair, args.epsilon);
            results["holds"] = r.holds;
            results["epsilon"] = args.epsilon;
            results["optimal_gap"] = r.optimal_gap;
            results["alternative_margin"] = r.alternative_margin;
            if (r.has_certificate) {
                json certificate;
                certificate["rho0"] = io::matrix_to_json(r.certificate_rho0);
                certificate["rho1"] = io::matrix_to_json(r.certificate_rho1);
                certificate["b0"] = r.certificate_b0;
                certificate["b1"] = r.certificate_b1;
                certificate["c0"] = r.certificate_c0;
                certificate["c1"] = r.certificate_c1;
                results["certificate"] = std::move(certificate);
            }
        } else {
            throw InvalidParameter("check: --which must be prop2 or prop3");
        }
        ensure_out_dir(args.out_dir);
        io::write_json_file(out_path(args.out_dir, "check.json"),
                            report_envelope("check", {args.pair_file}, results, {}));
        return kExitOk;
    });
}

int cmd_optimize(const OptimizeArgs& args) {
    return guarded([&] {
        GroupPair pair = io::load_pair(args.pair_file);
        if (args.lambda >= 0.0)
            pair = GroupPair(pair.mdp0, pair.mdp1, args.lambda);
        const fairlp::FairLpSolution solution = fairlp::solve_fair(pair, args.epsilon);

        ensure_out_dir(args.out_dir);
        json results;
        results["epsilon"] = args.epsilon;
        results["lambda"] = pair.lambda;
        switch (solution.status) {
            case lp::LpStatus::Optimal: results["status"] = "optimal"; break;
            case lp::LpStatus::Infeasible: results["status"] = "infeasible"; break;
            case lp::LpStatus::Unbounded: results["status"] = "unbounded"; break;
        }
        if (solution.status == lp::LpStatus::Optimal) {
            results["objective"] = solution.objective;
            results["b0"] = solution.b0;
            results["b1"] = solution.b1;
            results["achieved_disparity"] = solution.achieved_disparity;
            results["rho0"] = io::matrix_to_json(solution.rho0);
            results["rho1"] = io::matrix_to_json(solution.rho1);
            const std::string p0 = out_path(args.out_dir, "policy0.json");
            const std::string p1 = out_path(args.out_dir, "policy1.json");
            io::save_policy(solution.pi0, p0);
            io::save_policy(solution.pi1, p1);
            results["policy0_file"] = p0;
            results["policy1_file"] = p1;
        }
        io::write_json_file(out_path(args.out_dir, "optimize.json"),
                            report_envelope("optimize", {args.pair_file}, results, {}));
        return solution.status == lp::LpStatus::Optimal ? kExitOk : kExitInfeasible;
    });
}

namespace {

struct TrainPlan {
    std::unique_ptr<envs::TwoGroupEnv> prototype;
    train::TrainerConfig trainer;
    train::RunConfig run;
    std::vector<std::pair<Index, Index>> ratios; // (X, Y)
    std::vector<std::uint64_t> seeds;
    std::string out_dir;
};

double number_or(const json& doc, const std::string& key, double fallback) {
    if (!doc.contains(key)) return fallback;
    if (!doc[key].is_number()) throw ValidationError("train config: '" + key + "' must be numeric");
    return doc[key].get<double>();
}

std::pair<Index, Index> parse_ratio(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw ValidationError("train config: ratio must look like 'X:Y'");
    const long x = std::strtol(text.substr(0, colon).c_str(), nullptr, 10);
    const long y = std::strtol(text.substr(colon + 1).c_str(), nullptr, 10);
    if (x <= 0 || y < 0) throw ValidationError("train config: ratio must have X >= 1, Y >= 0");
    return {static_cast<Index>(x), static_cast<Index>(y)};
}

std::unique_ptr<envs::TwoGroupEnv> build_env(const json& env) {
    if (!env.contains("kind")) throw ValidationError("train config: env.kind is required");
    const std::string kind = env["kind"].get<std::string>();
    if (kind == "tabular") {
        io::reject_unknown_keys(env, {"kind", "pair_file", "horizon"}, "env");
        if (!env.contains("pair_file"))
            throw ValidationError("train config: tabular env needs pair_file");
        const GroupPair pair = io::load_pair(env["pair_file"].get<std::string>());
        const Index horizon = static_cast<Index>(number_or(env, "horizon", 32));
        return std::make_unique<envs::TabularEnvPair>(pair, horizon);
    }
    if (kind == "recsim") {
        io::reject_unknown_keys(env,
                                {"kind", "num_items", "embed_dim", "group_mean0", "group_mean1",
                                 "latent_scale", "drift_rate", "noise_scale", "reward_threshold",
                                 "horizon", "lambda", "discount", "embedding_seed"},
                                "env");
        envs::RecSimConfig config;
        config.num_items = static_cast<Index>(number_or(env, "num_items", 20));
        config.embed_dim = static_cast<Index>(number_or(env, "embed_dim", 8));
        if (env.contains("group_mean0"))
            config.group_mean0 = io::vector_from_json(env["group_mean0"]);
        else
            config.group_mean0 = Vector::Constant(config.embed_dim, 0.5);
        if (env.contains("group_mean1"))
            config.group_mean1 = io::vector_from_json(env["group_mean1"]);
        else
            config.group_mean1 = Vector::Constant(config.embed_dim, -0.5);
        config.latent_scale = number_or(env, "latent_scale", 0.3);
        config.drift_rate = number_or(env, "drift_rate", 0.05);
        config.noise_scale = number_or(env, "noise_scale", 0.1);
        config.reward_threshold = number_or(env, "reward_threshold", 0.0);
        config.horizon = static_cast<Index>(number_or(env, "horizon", 32));
        config.lambda = number_or(env, "lambda", 0.5);
        config.discount = number_or(env, "discount", 0.9);
        config.embedding_seed = static_cast<std::uint64_t>(number_or(env, "embedding_seed", 7));
        return std::make_unique<envs::RecSimPair>(config);
    }
    throw ValidationError("train config: env.kind must be 'tabular' or 'recsim'");
}

TrainPlan parse_train_config(const json& doc) {
    io::reject_unknown_keys(doc, {"env", "trainer", "run", "seeds", "out_dir"}, "train config");
    if (!doc.contains("env")) throw ValidationError("train config: env block is required");

    TrainPlan plan;
    plan.prototype = build_env(doc["env"]);

    const json trainer = doc.contains("trainer") ? doc["trainer"] : json::object();
    io::reject_unknown_keys(trainer,
                            {"profile", "alignment", "hidden_size", "extractor_hidden",
                             "extractor_out", "learning_rate", "weight_decay", "tau",
                             "epsilon_start", "epsilon_end", "epsilon_decay_steps",
                             "buffer_capacity", "update_batch", "bandwidths", "critic_steps",
                             "critic_clip", "critic_hidden", "align_learning_rate"},
                            "trainer");
    const json run = doc.contains("run") ? doc["run"] : json::object();
    io::reject_unknown_keys(run,
                            {"iterations", "env_steps_per_iteration",
                             "model_updates_per_iteration", "ratios", "eval_every",
                             "eval_episodes", "skew_factor", "align_warmup_iterations"},
                            "run");

    // Profile presets; explicit fields in either block override them.
    const std::string profile =
        trainer.contains("profile") ? trainer["profile"].get<std::string>() : "desk";
    Index q_hidden = 64, buffer = 20000, update_batch = 256;
    Index iterations = 100, env_steps = 64, updates_per_iter = 10;
    if (profile == "paper") {
        q_hidden = 128;
        buffer = 200000;
        update_batch = 10000;
        iterations = 400;
        env_steps = 1000;
        updates_per_iter = 10;
    } else if (profile != "desk") {
        throw ValidationError("train config: profile must be 'desk' or 'paper'");
    }

    train::TrainerConfig& t = plan.trainer;
    t.state_dim = plan.prototype->feature_dim();
    t.num_actions = plan.prototype->num_actions();
    t.q_hidden = static_cast<Index>(number_or(trainer, "hidden_size", static_cast<double>(q_hidden)));
    t.extractor_hidden = static_cast<Index>(number_or(trainer, "extractor_hidden", 0));
    t.extractor_out = static_cast<Index>(number_or(trainer, "extractor_out", 0));
    t.learning_rate = number_or(trainer, "learning_rate", 1e-3);
    t.q_weight_decay = number_or(trainer, "weight_decay", 1e-6);
    t.tau = number_or(trainer, "tau", 0.99);
    t.discount = plan.prototype->discount();
    t.epsilon_start = number_or(trainer, "epsilon_start", 1.0);
    t.epsilon_end = number_or(trainer, "epsilon_end", 0.1);
    t.epsilon_decay_steps = static_cast<Index>(number_or(trainer, "epsilon_decay_steps", 160));
    t.buffer_capacity = static_cast<Index>(number_or(trainer, "buffer_capacity", static_cast<double>(buffer)));
    t.update_batch = static_cast<Index>(number_or(trainer, "update_batch", static_cast<double>(update_batch)));
    if (trainer.contains("alignment")) {
        const std::string kind = trainer["alignment"].get<std::string>();
        if (kind == "mmd")
            t.align_kind = train::AlignKind::Mmd;
        else if (kind == "wasserstein")
            t.align_kind = train::AlignKind::WassersteinCritic;
        else
            throw ValidationError("train config: alignment must be 'mmd' or 'wasserstein'");
    }
    if (trainer.contains("bandwidths"))
        t.kernels = divergence::KernelSpec(io::vector_from_json(trainer["bandwidths"]));
    t.align_learning_rate = number_or(trainer, "align_learning_rate", 0.0);
    t.critic_steps = static_cast<Index>(number_or(trainer, "critic_steps", 5));
    t.critic_clip = number_or(trainer, "critic_clip", 0.1);
    t.critic_hidden = static_cast<Index>(number_or(trainer, "critic_hidden", 64));

    train::RunConfig& r = plan.run;
    r.iterations = static_cast<Index>(number_or(run, "iterations", static_cast<double>(iterations)));
    r.env_steps_per_iteration =
        static_cast<Index>(number_or(run, "env_steps_per_iteration", static_cast<double>(env_steps)));
    r.model_updates_per_iteration = static_cast<Index>(
        number_or(run, "model_updates_per_iteration", static_cast<double>(updates_per_iter)));
    r.eval_every = static_cast<Index>(number_or(run, "eval_every", 1));
    r.eval_episodes = static_cast<Index>(number_or(run, "eval_episodes", 16));
    r.skew_factor = static_cast<Index>(number_or(run, "skew_factor", 10));
    r.align_warmup_iterations =
        static_cast<Index>(number_or(run, "align_warmup_iterations", 0));

    if (run.contains("ratios")) {
        for (const auto& entry : run["ratios"]) plan.ratios.push_back(parse_ratio(entry.get<std::string>()));
    } else {
        plan.ratios = {{1, 0}, {1, 1}};
    }

    if (doc.contains("seeds")) {
        for (const auto& entry : doc["seeds"])
            plan.seeds.push_back(entry.get<std::uint64_t>());
    } else {
        plan.seeds = {0, 1, 2, 3, 4};
    }
    if (plan.seeds.empty()) throw ValidationError("train config: seeds must be nonempty");

    plan.out_dir = doc.contains("out_dir") ? doc["out_dir"].get<std::string>() : "runs";
    return plan;
}

Index align_steps_for_ratio(Index model_updates, std::pair<Index, Index> ratio) {
    if (ratio.second == 0) return 0;
    const double steps = static_cast<double>(model_updates) * static_cast<double>(ratio.second) /
                         static_cast<double>(ratio.first);
    return std::max<Index>(1, static_cast<Index>(std::llround(steps)));
}

std::string ratio_tag(std::pair<Index, Index> ratio) {
    return std::to_string(ratio.first) + "-" + std::to_string(ratio.second);
}

void write_run_csv(const std::string& path, const std::vector<train::LogRow>& log) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << "iteration,return0,return1,overall_return,gap,alignment_loss,epsilon,seed\n";
    for (const auto& row : log) {
        out << row.iteration << ',' << io::format_double(row.return0) << ','
            << io::format_double(row.return1) << ',' << io::format_double(row.overall_return)
            << ',' << io::format_double(row.gap) << ',' << io::format_double(row.alignment_loss)
            << ',' << io::format_double(row.epsilon) << ',' << row.seed << '\n';
    }
}

Index thread_budget(Index runs) {
    Index budget = static_cast<Index>(std::thread::hardware_concurrency());
    if (budget <= 0) budget = 1;
    if (const char* env = std::getenv("RPY_THREADS")) {
        const long parsed = std::strtol(env, nullptr, 10);
        if (parsed >= 1) budget = static_cast<Index>(parsed);
    }
    return std::min(budget, runs);
}

} // namespace

int cmd_train(const TrainArgs& args) {
    return guarded([&] {
        TrainPlan plan = parse_train_config(io::load_json_file(args.config_file));
        if (!args.out_dir.empty()) plan.out_dir = args.out_dir;
        if (!args.seeds.empty()) plan.seeds = args.seeds;
        ensure_out_dir(plan.out_dir);

        struct RunSpec {
            std::pair<Index, Index> ratio;
            std::uint64_t seed;
            std::vector<train::LogRow> log;
            std::string csv_path;
        };
        std::vector<RunSpec> runs;
        for (const auto& ratio : plan.ratios)
            for (std::uint64_t seed : plan.seeds)
                runs.push_back(RunSpec{ratio, seed, {}, {}});

        const auto execute = [&](RunSpec& spec) {
            auto env = plan.prototype->clone();
            train::TrainerConfig trainer_config = plan.trainer;
            trainer_config.seed = spec.seed;
            train::AlignTrainer trainer(trainer_config);

            train::RunConfig run = plan.run;
            run.seed = spec.seed;
            run.align_updates_per_iteration =
                align_steps_for_ratio(run.model_updates_per_iteration, spec.ratio);
            spec.log = train::run_training(trainer, *env, run);

            spec.csv_path = out_path(plan.out_dir,
                                     "run_r" + ratio_tag(spec.ratio) + "_s" +
                                         std::to_string(spec.seed) + ".csv");
            write_run_csv(spec.csv_path, spec.log);

            const train::EvalResult final_eval = train::evaluate(trainer, *env, plan.run.eval_episodes,
                                                                 spec.seed ^ 0xfeedULL);
            io::save_feature_csv(out_path(plan.out_dir, "features_r" + ratio_tag(spec.ratio) +
                                                            "_s" + std::to_string(spec.seed) +
                                                            "_g0.csv"),
                                 final_eval.features0);
            io::save_feature_csv(out_path(plan.out_dir, "features_r" + ratio_tag(spec.ratio) +
                                                            "_s" + std::to_string(spec.seed) +
                                                            "_g1.csv"),
                                 final_eval.features1);

            const std::string ckpt_stem = out_path(plan.out_dir, "ckpt_r" + ratio_tag(spec.ratio) +
                                                                     "_s" + std::to_string(spec.seed));
            nn::save_mlp(trainer.q_online(), ckpt_stem + "_q_online.txt");
            nn::save_mlp(trainer.q_target(), ckpt_stem + "_q_target.txt");
            nn::save_mlp(trainer.extractor(0), ckpt_stem + "_extractor0.txt");
            nn::save_mlp(trainer.extractor(1), ckpt_stem + "_extractor1.txt");
        };

        const Index budget = thread_budget(static_cast<Index>(runs.size()));
        if (budget <= 1) {
            for (auto& spec : runs) execute(spec);
        } else {
            std::vector<std::thread> workers;
            std::size_t next = 0;
            std::mutex mutex;
            for (Index w = 0; w < budget; ++w) {
                workers.emplace_back([&] {
                    for (;;) {
                        std::size_t mine;
                        {
                            std::lock_guard<std::mutex> lock(mutex);
                            if (next >= runs.size()) return;
                            mine = next++;
                        }
                        execute(runs[mine]);
                    }
                });
            }
            for (auto& worker : workers) worker.join();
        }

        // Aggregate across seeds, per ratio and iteration.
        const std::string aggregate_path = out_path(plan.out_dir, "aggregate.csv");
        std::ofstream aggregate(aggregate_path);
        aggregate << "ratio,iteration,overall_return_mean,overall_return_se,gap_mean,gap_se,"
                     "alignment_loss_mean,alignment_loss_se\n";
        const double n = static_cast<double>(plan.seeds.size());
        for (const auto& ratio : plan.ratios) {
            std::vector<const RunSpec*> members;
            for (const auto& spec : runs)
                if (spec.ratio == ratio) members.push_back(&spec);
            if (members.empty()) continue;
            const std::size_t rows = members.front()->log.size();
            for (std::size_t i = 0; i < rows; ++i) {
                const auto stats = [&](auto pick) {
                    double mean = 0.0;
                    for (const auto* spec : members) mean += pick(spec->log[i]);
                    mean /= n;
                    double var = 0.0;
                    for (const auto* spec : members) {
                        const double d = pick(spec->log[i]) - mean;
                        var += d * d;
                    }
                    const double se = n > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
                    return std::pair<double, double>{mean, se};
                };
                const auto overall = stats([](const train::LogRow& r) { return r.overall_return; });
                const auto gap = stats([](const train::LogRow& r) { return r.gap; });
                const auto align = stats([](const train::LogRow& r) { return r.alignment_loss; });
                aggregate << ratio_tag(ratio) << ',' << members.front()->log[i].iteration << ','
                          << io::format_double(overall.first) << ','
                          << io::format_double(overall.second) << ','
                          << io::format_double(gap.first) << ',' << io::format_double(gap.second)
                          << ',' << io::format_double(align.first) << ','
                          << io::format_double(align.second) << '\n';
            }
        }
        aggregate.close();

        json results;
        json run_list = json::array();
        for (const auto& spec : runs) {
            json entry;
            entry["ratio"] = ratio_tag(spec.ratio);
            entry["seed"] = spec.seed;
            entry["csv"] = spec.csv_path;
            if (!spec.log.empty()) {
                entry["final_gap"] = spec.log.back().gap;
                entry["final_overall_return"] = spec.log.back().overall_return;
            }
            run_list.push_back(std::move(entry));
        }
        results["runs"] = std::move(run_list);
        results["aggregate_csv"] = aggregate_path;
        io::write_json_file(out_path(plan.out_dir, "train.json"),
                            report_envelope("train", {args.config_file}, results, plan.seeds));
        return kExitOk;
    });
}

int cmd_pca(const PcaArgs& args) {
    return guarded([&] {
        if (args.feature_files.size() < 2)
            throw InvalidParameter("pca: need at least two feature batch files");
        std::vector<Matrix> batches;
        Index dim = -1;
        Index total_rows = 0;
        for (const auto& path : args.feature_files) {
            Matrix batch = io::load_feature_csv(path);
            if (dim < 0) dim = batch.cols();
            if (batch.cols() != dim)
                throw DimensionMismatch("pca: feature batches must share the feature dimension");
            total_rows += batch.rows();
            batches.push_back(std::move(batch));
        }

        Matrix pooled(total_rows, dim);
        Index row = 0;
        for (const auto& batch : batches) {
            pooled.middleRows(row, batch.rows()) = batch;
            row += batch.rows();
        }

        const pca::PcaResult result = pca::principal_components(pooled, args.components);

        ensure_out_dir(args.out_dir);
        std::ofstream csv(out_path(args.out_dir, "pca.csv"));
        csv << "pc1,pc2,group\n";
        row = 0;
        for (std::size_t g = 0; g < batches.size(); ++g) {
            for (Index i = 0; i < batches[g].rows(); ++i, ++row) {
                csv << io::format_double(result.projections(row, 0)) << ','
                    << io::format_double(result.projections.cols() > 1 ? result.projections(row, 1)
                                                                       : 0.0)
                    << ',' << g << '\n';
            }
        }
        csv.close();

        json results;
        results["components"] = io::matrix_to_json(result.components);
        results["explained_variance"] = io::vector_to_json(result.explained_variance);
        results["csv"] = out_path(args.out_dir, "pca.csv");
        std::vector<std::string> inputs = args.feature_files;
        io::write_json_file(out_path(args.out_dir, "pca.json"),
                            report_envelope("pca", inputs, results, {}));
        return kExitOk;
    });
}

} // namespace rpy::cli
