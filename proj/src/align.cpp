#include "rpy/align.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace rpy::train {

ReplayBuffer::ReplayBuffer(Index capacity) : capacity_(capacity) {
    if (capacity_ <= 0) throw InvalidParameter("ReplayBuffer: capacity must be positive");
    data_.reserve(static_cast<std::size_t>(capacity_));
}

void ReplayBuffer::push(Transition t) {
    if (size() < capacity_) {
        data_.push_back(std::move(t));
    } else {
        data_[static_cast<std::size_t>(next_)] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(Index batch, Rng& rng) const {
    const Index k = std::min(batch, size());
    std::vector<const Transition*> out;
    out.reserve(static_cast<std::size_t>(k));
    for (Index i : rng.sample_without_replacement(size(), k))
        out.push_back(&data_[static_cast<std::size_t>(i)]);
    return out;
}

Matrix ReplayBuffer::sample_state_features(Index batch, Rng& rng) const {
    const auto transitions = sample(batch, rng);
    if (transitions.empty()) throw EmptyBatch("ReplayBuffer: no transitions to sample");
    Matrix f(static_cast<Index>(transitions.size()), transitions.front()->state.size());
    for (Index i = 0; i < f.rows(); ++i) f.row(i) = transitions[static_cast<std::size_t>(i)]->state;
    return f;
}

namespace {
std::vector<Index> mlp_sizes(Index in, Index hidden, Index out) {
    if (hidden > 0) return {in, hidden, out};
    return {in, out};
}
} // namespace

AlignTrainer::AlignTrainer(TrainerConfig config) : cfg_(std::move(config)) {
    if (cfg_.state_dim <= 0 || cfg_.num_actions <= 0)
        throw InvalidParameter("AlignTrainer: state_dim and num_actions must be positive");
    // extractor_hidden: 0 defaults to the state dimension, negative means a
    // plain linear (affine) extractor.
    const Index ext_hidden = cfg_.extractor_hidden == 0
                                 ? cfg_.state_dim
                                 : (cfg_.extractor_hidden < 0 ? 0 : cfg_.extractor_hidden);
    const Index ext_out = cfg_.extractor_out > 0 ? cfg_.extractor_out : cfg_.state_dim;

    // Per-net derived streams keep initialization independent of the
    // alignment kind and construction order.
    Rng rng_e0 = Rng::derive(cfg_.seed, {0x6e657430ULL});
    Rng rng_e1 = Rng::derive(cfg_.seed, {0x6e657431ULL});
    Rng rng_q = Rng::derive(cfg_.seed, {0x6e657471ULL});
    Rng rng_c = Rng::derive(cfg_.seed, {0x6e657463ULL});

    extractor_[0] = nn::Mlp(mlp_sizes(cfg_.state_dim, ext_hidden, ext_out), rng_e0);
    extractor_[1] = nn::Mlp(mlp_sizes(cfg_.state_dim, ext_hidden, ext_out), rng_e1);
    q_online_ = nn::Mlp(mlp_sizes(ext_out, cfg_.q_hidden, cfg_.num_actions), rng_q);
    q_target_ = q_online_;
    critic_ = nn::Mlp(mlp_sizes(ext_out, cfg_.critic_hidden, 1), rng_c);

    opt_extractor_[0] = nn::AdamState(extractor_[0].param_count(), cfg_.learning_rate);
    opt_extractor_[1] = nn::AdamState(extractor_[1].param_count(), cfg_.learning_rate);
    const double align_lr =
        cfg_.align_learning_rate > 0.0 ? cfg_.align_learning_rate : cfg_.learning_rate;
    opt_align_[0] = nn::AdamState(extractor_[0].param_count(), align_lr);
    opt_align_[1] = nn::AdamState(extractor_[1].param_count(), align_lr);
    opt_q_ = nn::AdamState(q_online_.param_count(), cfg_.learning_rate, cfg_.q_weight_decay);
    opt_critic_ = nn::AdamState(critic_.param_count(), cfg_.learning_rate);
}

double AlignTrainer::epsilon_at(Index iteration) const {
    if (cfg_.epsilon_decay_steps <= 0) return cfg_.epsilon_end;
    const double frac = std::min(1.0, static_cast<double>(iteration) /
                                          static_cast<double>(cfg_.epsilon_decay_steps));
    return cfg_.epsilon_start + (cfg_.epsilon_end - cfg_.epsilon_start) * frac;
}

Index AlignTrainer::act_greedy(const Vector& features, const std::vector<bool>& valid,
                               int group) const {
    if (static_cast<Index>(valid.size()) != cfg_.num_actions)
        throw DimensionMismatch("act: valid-action mask length mismatch");
    const Vector h = extractor_[group].forward(features);
    const Vector q = q_online_.forward(h);
    Index best = -1;
    for (Index a = 0; a < cfg_.num_actions; ++a) {
        if (!valid[static_cast<std::size_t>(a)]) continue;
        if (best < 0 || q[a] > q[best]) best = a;
    }
    if (best < 0) throw NoValidActions("act: no valid action available");
    return best;
}

Index AlignTrainer::act_epsilon_greedy(const Vector& features, const std::vector<bool>& valid,
                                       int group, Index iteration, Rng& rng) {
    const double eps = epsilon_at(iteration);
    if (rng.uniform() < eps) {
        std::vector<Index> options;
        for (Index a = 0; a < static_cast<Index>(valid.size()); ++a)
            if (valid[static_cast<std::size_t>(a)]) options.push_back(a);
        if (options.empty()) throw NoValidActions("act: no valid action available");
        return options[static_cast<std::size_t>(rng.uniform_index(static_cast<Index>(options.size())))];
    }
    return act_greedy(features, valid, group);
}

Vector AlignTrainer::double_dqn_targets(const Matrix& q_next_online, const Matrix& q_next_target,
                                        const Vector& rewards, const std::vector<bool>& done,
                                        double discount) {
    if (q_next_online.rows() != q_next_target.rows() ||
        q_next_online.cols() != q_next_target.cols())
        throw DimensionMismatch("double_dqn_targets: Q table shapes differ");
    if (rewards.size() != q_next_online.rows() ||
        static_cast<Index>(done.size()) != q_next_online.rows())
        throw DimensionMismatch("double_dqn_targets: batch size mismatch");

    Vector y(rewards.size());
    for (Index i = 0; i < rewards.size(); ++i) {
        if (done[static_cast<std::size_t>(i)]) {
            y[i] = rewards[i];
            continue;
        }
        Index best = 0;
        q_next_online.row(i).maxCoeff(&best);
        y[i] = rewards[i] + discount * q_next_target(i, best);
    }
    return y;
}

double AlignTrainer::td_update(const std::vector<const Transition*>& batch0,
                               const std::vector<const Transition*>& batch1) {
    if (batch0.empty() || batch1.empty()) throw EmptyBatch("td_update: batches must be nonempty");
    const double total = static_cast<double>(batch0.size() + batch1.size());

    Vector q_grad_accum = Vector::Zero(q_online_.param_count());
    double loss = 0.0;

    const std::vector<const Transition*>* batches[2] = {&batch0, &batch1};
    for (int g = 0; g < 2; ++g) {
        const auto& batch = *batches[g];
        const Index b = static_cast<Index>(batch.size());
        Matrix states(b, cfg_.state_dim), next_states(b, cfg_.state_dim);
        Vector rewards(b);
        std::vector<bool> done(static_cast<std::size_t>(b));
        std::vector<Index> actions(static_cast<std::size_t>(b));
        for (Index i = 0; i < b; ++i) {
            const Transition& t = *batch[static_cast<std::size_t>(i)];
            states.row(i) = t.state;
            next_states.row(i) = t.next_state;
            rewards[i] = t.reward;
            done[static_cast<std::size_t>(i)] = t.done;
            actions[static_cast<std::size_t>(i)] = t.action;
        }

        const Matrix h_next = extractor_[g].forward(next_states);
        const Vector targets = double_dqn_targets(q_online_.forward(h_next),
                                                  q_target_.forward(h_next), rewards, done,
                                                  cfg_.discount);

        nn::GradientTape tape_extractor, tape_q;
        const Matrix h = extractor_[g].forward(states, &tape_extractor);
        const Matrix q = q_online_.forward(h, &tape_q);

        Matrix dq = Matrix::Zero(b, cfg_.num_actions);
        for (Index i = 0; i < b; ++i) {
            const double diff = q(i, actions[static_cast<std::size_t>(i)]) - targets[i];
            loss += diff * diff / total;
            dq(i, actions[static_cast<std::size_t>(i)]) = 2.0 * diff / total;
        }

        const auto q_grads = tape_q.backward(dq);
        q_grad_accum += q_grads.params;
        const auto extractor_grads = tape_extractor.backward(q_grads.inputs);
        opt_extractor_[g].step(extractor_[g].params(), extractor_grads.params);
    }

    opt_q_.step(q_online_.params(), q_grad_accum);
    nn::soft_update(q_target_.params(), q_online_.params(), cfg_.tau);
    return loss;
}

int AlignTrainer::higher_return_group() const {
    if (recent_return_[0] >= recent_return_[1]) return 0;
    return 1;
}

double AlignTrainer::alignment_update(const Matrix& features0, const Matrix& features1) {
    const Index min_batch = cfg_.align_kind == AlignKind::Mmd ? 2 : 1;
    if (features0.rows() < min_batch || features1.rows() < min_batch)
        throw BatchTooSmall("alignment_update: feature batches too small");

    const int moving = higher_return_group();
    last_aligned_group_ = moving;

    nn::GradientTape tapes[2];
    const Matrix h0 = extractor_[0].forward(features0, &tapes[0]);
    const Matrix h1 = extractor_[1].forward(features1, &tapes[1]);

    double loss = 0.0;
    Matrix moving_grad;
    if (cfg_.align_kind == AlignKind::Mmd) {
        Matrix g0, g1;
        loss = divergence::mmd2_unbiased_with_grad(h0, h1, cfg_.kernels, &g0, &g1);
        moving_grad = moving == 0 ? g0 : g1;
    } else {
        const double inv0 = 1.0 / static_cast<double>(h0.rows());
        const double inv1 = 1.0 / static_cast<double>(h1.rows());
        // Inner critic ascent on mean f_c(h0) - mean f_c(h1), clipping the
        // weights after every step to keep the critic Lipschitz.
        for (Index step = 0; step < cfg_.critic_steps; ++step) {
            nn::GradientTape tape_c0, tape_c1;
            critic_.forward(h0, &tape_c0);
            critic_.forward(h1, &tape_c1);
            Vector ascent = tape_c0.backward(Matrix::Constant(h0.rows(), 1, inv0)).params;
            ascent += tape_c1.backward(Matrix::Constant(h1.rows(), 1, -inv1)).params;
            opt_critic_.step(critic_.params(), (-ascent).eval());
            nn::clip_weights(critic_, cfg_.critic_clip);
        }
        loss = critic_.forward(h0).mean() - critic_.forward(h1).mean();

        const Matrix& h_moving = moving == 0 ? h0 : h1;
        const double sign = moving == 0 ? inv0 : -inv1;
        nn::GradientTape tape_c;
        critic_.forward(h_moving, &tape_c);
        moving_grad = tape_c.backward(Matrix::Constant(h_moving.rows(), 1, sign)).inputs;
    }

    const auto grads = tapes[moving].backward(moving_grad);
    opt_align_[moving].step(extractor_[moving].params(), grads.params);
    return loss;
}

void AlignTrainer::note_episode_return(int group, double undiscounted_return) {
    if (has_return_[group]) {
        recent_return_[group] = 0.9 * recent_return_[group] + 0.1 * undiscounted_return;
    } else {
        recent_return_[group] = undiscounted_return;
        has_return_[group] = true;
    }
}

Matrix AlignTrainer::embed(int group, const Matrix& features) const {
    return extractor_[group].forward(features);
}

EvalResult evaluate(const AlignTrainer& trainer, const envs::TwoGroupEnv& env, Index episodes,
                    std::uint64_t seed) {
    auto probe = env.clone();
    Rng rng = Rng::derive(seed, {0x6576616cULL});

    EvalResult result;
    double returns[2] = {0.0, 0.0};
    Matrix* features[2] = {&result.features0, &result.features1};
    constexpr Index kMaxExport = 256;

    for (int g = 0; g < 2; ++g) {
        std::vector<Vector> embedded;
        for (Index ep = 0; ep < episodes; ++ep) {
            Vector obs = probe->reset(g, rng);
            double total = 0.0;
            for (;;) {
                if (static_cast<Index>(embedded.size()) < kMaxExport)
                    embedded.push_back(trainer.embed(g, Matrix(obs.transpose())).row(0).transpose());
                const Index action = trainer.act_greedy(obs, probe->valid_actions(g), g);
                const envs::EnvStep step = probe->step(g, action, rng);
                total += step.reward;
                obs = step.next_state_features;
                if (step.done) break;
            }
            returns[g] += total;
        }
        returns[g] /= static_cast<double>(episodes);
        Matrix& out = *features[g];
        out = Matrix(static_cast<Index>(embedded.size()), embedded.empty() ? 0 : embedded[0].size());
        for (Index i = 0; i < out.rows(); ++i) out.row(i) = embedded[static_cast<std::size_t>(i)];
    }

    result.return0 = returns[0];
    result.return1 = returns[1];
    result.gap = std::abs(returns[0] - returns[1]);
    result.overall_return = env.lambda() * returns[0] + (1.0 - env.lambda()) * returns[1];
    return result;
}

namespace {
std::uint64_t eval_seed(std::uint64_t seed, Index iteration) {
    std::uint64_t s = seed ^ (0x65766c5f00000000ULL + static_cast<std::uint64_t>(iteration));
    return splitmix64(s);
}
} // namespace

std::vector<LogRow> run_training(AlignTrainer& trainer, envs::TwoGroupEnv& env,
                                 const RunConfig& run) {
    if (run.iterations <= 0 || run.env_steps_per_iteration <= 0)
        throw InvalidParameter("run_training: iterations and env steps must be positive");
    if (run.skew_factor <= 0) throw InvalidParameter("run_training: skew_factor must be positive");

    Rng env_rng = Rng::derive(run.seed, {0x656e76ULL});
    Rng act_rng = Rng::derive(run.seed, {0x616374ULL});
    Rng sample_rng = Rng::derive(run.seed, {0x73616dULL});
    Rng align_rng = Rng::derive(run.seed, {0x616c67ULL});

    ReplayBuffer buffers[2] = {ReplayBuffer(trainer.config().buffer_capacity),
                               ReplayBuffer(trainer.config().buffer_capacity)};
    Vector obs[2];
    bool active[2] = {false, false};
    double episode_return[2] = {0.0, 0.0};

    std::vector<LogRow> log;
    double align_loss = std::numeric_limits<double>::quiet_NaN();

    for (Index iteration = 0; iteration < run.iterations; ++iteration) {
        for (int g = 0; g < 2; ++g) {
            const Index steps = g == 0 ? run.env_steps_per_iteration
                                       : std::max<Index>(1, run.env_steps_per_iteration /
                                                                run.skew_factor);
            for (Index s = 0; s < steps; ++s) {
                if (!active[g]) {
                    obs[g] = env.reset(g, env_rng);
                    active[g] = true;
                    episode_return[g] = 0.0;
                }
                const Index action = trainer.act_epsilon_greedy(obs[g], env.valid_actions(g), g,
                                                                iteration, act_rng);
                const envs::EnvStep step = env.step(g, action, env_rng);
                buffers[g].push(Transition{step.state_features, step.action, step.reward,
                                           step.next_state_features, step.done});
                episode_return[g] += step.reward;
                obs[g] = step.next_state_features;
                if (step.done) active[g] = false;
            }
        }

        const Index batch = trainer.config().update_batch;
        if (buffers[0].size() >= batch && buffers[1].size() >= batch) {
            for (Index u = 0; u < run.model_updates_per_iteration; ++u) {
                const auto batch0 = buffers[0].sample(batch, sample_rng);
                const auto batch1 = buffers[1].sample(batch, sample_rng);
                trainer.td_update(batch0, batch1);
            }
        }
        if (run.align_updates_per_iteration > 0 && iteration >= run.align_warmup_iterations &&
            buffers[0].size() >= 2 && buffers[1].size() >= 2) {
            double loss_sum = 0.0;
            for (Index u = 0; u < run.align_updates_per_iteration; ++u) {
                const Matrix f0 = buffers[0].sample_state_features(batch, align_rng);
                const Matrix f1 = buffers[1].sample_state_features(batch, align_rng);
                loss_sum += trainer.alignment_update(f0, f1);
            }
            align_loss = loss_sum / static_cast<double>(run.align_updates_per_iteration);
        }

        if ((iteration + 1) % run.eval_every == 0) {
            const EvalResult eval = evaluate(trainer, env, run.eval_episodes,
                                             eval_seed(run.seed, iteration));
            // The greedy evaluation returns drive the block-coordinate
            // higher-return decision; they estimate the groups' returns far
            // better than single epsilon-greedy training episodes.
            trainer.note_episode_return(0, eval.return0);
            trainer.note_episode_return(1, eval.return1);
            LogRow row;
            row.iteration = iteration;
            row.return0 = eval.return0;
            row.return1 = eval.return1;
            row.overall_return = eval.overall_return;
            row.gap = eval.gap;
            row.alignment_loss = align_loss;
            row.epsilon = trainer.epsilon_at(iteration);
            row.seed = run.seed;
            log.push_back(row);
        }
    }
    return log;
}

} // namespace rpy::train
