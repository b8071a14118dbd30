#pragma once

#include "rpy/mdp.hpp"
#include "rpy/rng.hpp"
#include "rpy/types.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace rpy::envs {

struct EnvStep {
    Vector state_features;
    Index action = -1;
    double reward = 0.0;
    Vector next_state_features;
    bool done = false;
};

/**
 * Episodic interface over a pair of group environments sharing feature and
 * action spaces. A single instance is single-threaded; parallel runs use
 * independent instances.
 */
class TwoGroupEnv {
  public:
    virtual ~TwoGroupEnv() = default;

    /// Deep copy, including in-flight episode state; evaluation runs on one.
    virtual std::unique_ptr<TwoGroupEnv> clone() const = 0;

    virtual Index feature_dim() const = 0;
    virtual Index num_actions() const = 0;
    virtual Index horizon() const = 0;
    virtual double lambda() const = 0;
    /// Discount factor used for TD targets when training on this pair.
    virtual double discount() const = 0;

    virtual Vector reset(int group, Rng& rng) = 0;
    virtual EnvStep step(int group, Index action, Rng& rng) = 0;
    virtual std::vector<bool> valid_actions(int group) const = 0;
};

/// Tabular environment pair over the exact MDPs; features are one-hot states.
class TabularEnvPair final : public TwoGroupEnv {
  public:
    TabularEnvPair(GroupPair pair, Index horizon);

    std::unique_ptr<TwoGroupEnv> clone() const override {
        return std::make_unique<TabularEnvPair>(*this);
    }

    Index feature_dim() const override { return pair_.mdp0.num_states; }
    Index num_actions() const override { return pair_.mdp0.num_actions; }
    Index horizon() const override { return horizon_; }
    double lambda() const override { return pair_.lambda; }
    double discount() const override { return pair_.mdp0.gamma; }

    Vector reset(int group, Rng& rng) override;
    EnvStep step(int group, Index action, Rng& rng) override;
    std::vector<bool> valid_actions(int group) const override;

    const GroupPair& pair() const { return pair_; }

  private:
    Vector one_hot(Index state) const;

    GroupPair pair_;
    Index horizon_;
    struct EpisodeState {
        Index state = 0;
        Index t = 0;
        bool active = false;
    };
    EpisodeState episode_[2];
};

/**
 * Synthetic two-group recommender pair with a preference feedback loop.
 *
 * Item embeddings are fixed at construction from `embedding_seed`. Each
 * episode draws a user latent from the group's Gaussian; the reward for
 * recommending item k is clamp(<latent, e_k> + noise, -1, 1) and the latent
 * drifts by drift_rate * reward * e_k. State features are
 * [EMA of recommended embeddings | #positive | #negative | last reward | t/H].
 */
struct RecSimConfig {
    Index num_items = 20;
    Index embed_dim = 8;
    Vector group_mean0;
    Vector group_mean1;
    double latent_scale = 0.3;
    double drift_rate = 0.05;
    double noise_scale = 0.1;
    double reward_threshold = 0.0;
    Index horizon = 32;
    double lambda = 0.5;
    double discount = 0.9;
    std::uint64_t embedding_seed = 7;
};

class RecSimPair final : public TwoGroupEnv {
  public:
    explicit RecSimPair(RecSimConfig config);

    std::unique_ptr<TwoGroupEnv> clone() const override {
        return std::make_unique<RecSimPair>(*this);
    }

    Index feature_dim() const override { return config_.embed_dim + 4; }
    Index num_actions() const override { return config_.num_items; }
    Index horizon() const override { return config_.horizon; }
    double lambda() const override { return config_.lambda; }
    double discount() const override { return config_.discount; }

    Vector reset(int group, Rng& rng) override;
    EnvStep step(int group, Index action, Rng& rng) override;
    std::vector<bool> valid_actions(int group) const override;

    const Matrix& item_embeddings() const { return items_; }
    const RecSimConfig& config() const { return config_; }
    /// Item recommended on cold start: highest mean raw reward across groups.
    Index popular_item() const { return popular_item_; }

  private:
    struct EpisodeState {
        Vector latent;
        Vector ema;
        double positive_count = 0.0;
        double negative_count = 0.0;
        double last_reward = 0.0;
        Index t = 0;
        bool active = false;
        std::vector<bool> recommended;
    };

    Vector features(const EpisodeState& ep) const;
    double apply_recommendation(EpisodeState& ep, Index item, Rng& rng);

    RecSimConfig config_;
    Matrix items_; // num_items x embed_dim
    Index popular_item_ = 0;
    EpisodeState episode_[2];
};

/**
 * Restart-based sample estimate of the discounted state visitation
 * distribution: episodes continue with probability gamma and restart from
 * mu otherwise; `num_samples` states are recorded in total.
 */
Vector empirical_visitation(const TabularEnvPair& env, const Policy& pi, int group,
                            long num_samples, std::uint64_t seed);

} // namespace rpy::envs
