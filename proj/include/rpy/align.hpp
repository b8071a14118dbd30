#pragma once

#include "rpy/divergence.hpp"
#include "rpy/envs.hpp"
#include "rpy/nn.hpp"
#include "rpy/rng.hpp"
#include "rpy/types.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace rpy::train {

struct Transition {
    Vector state;
    Index action = -1;
    double reward = 0.0;
    Vector next_state;
    bool done = false;
};

/// Fixed-capacity ring of transitions; one buffer per group.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(Index capacity);

    void push(Transition t);
    Index size() const { return static_cast<Index>(data_.size()); }

    /// Up to `batch` distinct transitions, uniform without replacement.
    std::vector<const Transition*> sample(Index batch, Rng& rng) const;

    /// State-feature rows of up to `batch` distinct transitions.
    Matrix sample_state_features(Index batch, Rng& rng) const;

  private:
    Index capacity_;
    Index next_ = 0;
    std::vector<Transition> data_;
};

enum class AlignKind { Mmd, WassersteinCritic };

struct TrainerConfig {
    Index state_dim = 0;
    Index num_actions = 0;
    Index extractor_hidden = 0; // 0: same as state_dim; negative: linear extractor
    Index extractor_out = 0;    // 0: same as state_dim
    Index q_hidden = 64;
    double learning_rate = 1e-3;
    double align_learning_rate = 0.0; // 0: same as learning_rate
    double q_weight_decay = 1e-6;
    double tau = 0.99;
    double discount = 0.9;
    double epsilon_start = 1.0;
    double epsilon_end = 0.1;
    Index epsilon_decay_steps = 160;
    Index buffer_capacity = 20000;
    Index update_batch = 256;
    AlignKind align_kind = AlignKind::Mmd;
    divergence::KernelSpec kernels = divergence::KernelSpec::default_mixture();
    Index critic_hidden = 64;
    Index critic_steps = 5;
    double critic_clip = 0.1;
    std::uint64_t seed = 0;
};

/**
 * Double-DQN trainer over two group environments: one shared Q-network fed
 * by per-group feature extractors, with feature-distribution alignment
 * applied to the extractor of whichever group currently earns the higher
 * return (block-coordinate rule; the other extractor stays frozen).
 */
class AlignTrainer {
  public:
    explicit AlignTrainer(TrainerConfig config);

    const TrainerConfig& config() const { return cfg_; }

    double epsilon_at(Index iteration) const;

    /// Epsilon-greedy action restricted to `valid` entries.
    Index act_epsilon_greedy(const Vector& features, const std::vector<bool>& valid, int group,
                             Index iteration, Rng& rng);

    /// Greedy action (epsilon = 0); consumes no randomness.
    Index act_greedy(const Vector& features, const std::vector<bool>& valid, int group) const;

    /**
     * One optimizer step on the joint TD loss over both batches. Targets
     * select the next action with the online network and evaluate it with
     * the target network; gradients flow through the Q-network and each
     * group's extractor. Ends with a soft target update. Returns the loss.
     */
    double td_update(const std::vector<const Transition*>& batch0,
                     const std::vector<const Transition*>& batch1);

    /**
     * One alignment step on raw state-feature batches. MMD: gradient step
     * on the unbiased squared-MMD between extractor outputs. Wasserstein:
     * critic ascent steps with weight clipping, then an extractor step on
     * the estimated distance. Only the higher-return group's extractor
     * moves. Returns the alignment loss.
     */
    double alignment_update(const Matrix& features0, const Matrix& features1);

    void note_episode_return(int group, double undiscounted_return);
    double recent_return(int group) const { return recent_return_[group]; }

    /// Extractor outputs for a feature batch (rows are samples).
    Matrix embed(int group, const Matrix& features) const;

    nn::Mlp& extractor(int group) { return extractor_[group]; }
    const nn::Mlp& extractor(int group) const { return extractor_[group]; }
    const nn::Mlp& q_online() const { return q_online_; }
    const nn::Mlp& q_target() const { return q_target_; }
    nn::Mlp& critic() { return critic_; }

    int last_aligned_group() const { return last_aligned_group_; }

    /// Exposed for tests: the target rule on explicit Q tables.
    static Vector double_dqn_targets(const Matrix& q_next_online, const Matrix& q_next_target,
                                     const Vector& rewards, const std::vector<bool>& done,
                                     double discount);

  private:
    int higher_return_group() const;

    TrainerConfig cfg_;
    nn::Mlp extractor_[2];
    nn::Mlp q_online_;
    nn::Mlp q_target_;
    nn::Mlp critic_;
    nn::AdamState opt_extractor_[2];
    nn::AdamState opt_align_[2];
    nn::AdamState opt_q_;
    nn::AdamState opt_critic_;
    double recent_return_[2] = {0.0, 0.0};
    bool has_return_[2] = {false, false};
    int last_aligned_group_ = -1;
};

struct RunConfig {
    Index iterations = 100;
    Index env_steps_per_iteration = 64;
    Index model_updates_per_iteration = 10;
    Index align_updates_per_iteration = 10;
    Index align_warmup_iterations = 0; // alignment steps start after this many iterations
    Index eval_every = 1;
    Index eval_episodes = 16;
    Index skew_factor = 10; // group 1 collects env_steps / skew_factor steps
    std::uint64_t seed = 0;
};

struct LogRow {
    Index iteration = 0;
    double return0 = 0.0;
    double return1 = 0.0;
    double overall_return = 0.0;
    double gap = 0.0;
    double alignment_loss = 0.0; // NaN until the first alignment step
    double epsilon = 0.0;
    std::uint64_t seed = 0;
};

struct EvalResult {
    double return0 = 0.0;
    double return1 = 0.0;
    double overall_return = 0.0;
    double gap = 0.0;
    Matrix features0; // extractor outputs sampled during evaluation
    Matrix features1;
};

/// Greedy evaluation on a private copy of the environment.
EvalResult evaluate(const AlignTrainer& trainer, const envs::TwoGroupEnv& env, Index episodes,
                    std::uint64_t seed);

/// The full training loop: environment steps, model updates, alignment
/// steps, and periodic greedy evaluation. Deterministic per seed.
std::vector<LogRow> run_training(AlignTrainer& trainer, envs::TwoGroupEnv& env,
                                 const RunConfig& run);

} // namespace rpy::train
