#include "rpy/envs.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace rpy::envs {

TabularEnvPair::TabularEnvPair(GroupPair pair, Index horizon)
    : pair_(std::move(pair)), horizon_(horizon) {
    if (horizon_ <= 0) throw InvalidParameter("TabularEnvPair: horizon must be positive");
}

Vector TabularEnvPair::one_hot(Index state) const {
    Vector v = Vector::Zero(pair_.mdp0.num_states);
    v[state] = 1.0;
    return v;
}

Vector TabularEnvPair::reset(int group, Rng& rng) {
    const Mdp& mdp = pair_.group(group);
    EpisodeState& ep = episode_[group];
    ep.state = rng.categorical(mdp.mu);
    ep.t = 0;
    ep.active = true;
    return one_hot(ep.state);
}

EnvStep TabularEnvPair::step(int group, Index action, Rng& rng) {
    EpisodeState& ep = episode_[group];
    if (!ep.active) throw EpisodeFinished("TabularEnvPair::step: call reset first");
    const Mdp& mdp = pair_.group(group);
    if (action < 0 || action >= mdp.num_actions)
        throw IndexOutOfRange("TabularEnvPair::step: action index");

    EnvStep out;
    out.state_features = one_hot(ep.state);
    out.action = action;
    out.reward = mdp.reward(ep.state, action);
    const Vector row = mdp.transition[static_cast<std::size_t>(ep.state)].row(action).transpose();
    ep.state = rng.categorical(row);
    ep.t += 1;
    out.next_state_features = one_hot(ep.state);
    out.done = ep.t >= horizon_;
    if (out.done) ep.active = false;
    return out;
}

std::vector<bool> TabularEnvPair::valid_actions(int) const {
    return std::vector<bool>(static_cast<std::size_t>(pair_.mdp0.num_actions), true);
}

RecSimPair::RecSimPair(RecSimConfig config) : config_(std::move(config)) {
    if (config_.num_items < 2) throw InvalidParameter("RecSimPair: need at least two items");
    if (config_.embed_dim <= 0) throw InvalidParameter("RecSimPair: embed_dim must be positive");
    if (config_.horizon <= 0 || config_.horizon > config_.num_items)
        throw InvalidParameter("RecSimPair: horizon must lie in [1, num_items]");
    if (config_.group_mean0.size() != config_.embed_dim ||
        config_.group_mean1.size() != config_.embed_dim)
        throw InvalidParameter("RecSimPair: group means must have embed_dim entries");
    if (!(config_.lambda >= 0.0 && config_.lambda <= 1.0))
        throw InvalidParameter("RecSimPair: lambda must lie in [0,1]");
    if (!(config_.discount > 0.0 && config_.discount < 1.0))
        throw InvalidParameter("RecSimPair: discount must lie in (0,1)");

    Rng rng(config_.embedding_seed);
    items_ = Matrix(config_.num_items, config_.embed_dim);
    for (Index k = 0; k < config_.num_items; ++k)
        items_.row(k) = rng.normal_vector(config_.embed_dim).transpose() /
                        std::sqrt(static_cast<double>(config_.embed_dim));

    const Vector average_mean = 0.5 * (config_.group_mean0 + config_.group_mean1);
    Index best = 0;
    double best_score = (items_ * average_mean)[0];
    for (Index k = 1; k < config_.num_items; ++k) {
        const double score = items_.row(k).dot(average_mean);
        if (score > best_score) {
            best = k;
            best_score = score;
        }
    }
    popular_item_ = best;
}

Vector RecSimPair::features(const EpisodeState& ep) const {
    Vector f(feature_dim());
    f.head(config_.embed_dim) = ep.ema;
    f[config_.embed_dim] = ep.positive_count;
    f[config_.embed_dim + 1] = ep.negative_count;
    f[config_.embed_dim + 2] = ep.last_reward;
    f[config_.embed_dim + 3] = static_cast<double>(ep.t) / static_cast<double>(config_.horizon);
    return f;
}

double RecSimPair::apply_recommendation(EpisodeState& ep, Index item, Rng& rng) {
    const Vector embedding = items_.row(item).transpose();
    double reward = ep.latent.dot(embedding) + config_.noise_scale * rng.normal();
    reward = std::clamp(reward, -1.0, 1.0);

    ep.latent += config_.drift_rate * reward * embedding;
    ep.ema = 0.5 * ep.ema + 0.5 * embedding;
    if (reward >= config_.reward_threshold)
        ep.positive_count += 1.0;
    else
        ep.negative_count += 1.0;
    ep.last_reward = reward;
    ep.recommended[static_cast<std::size_t>(item)] = true;
    return reward;
}

Vector RecSimPair::reset(int group, Rng& rng) {
    EpisodeState& ep = episode_[group];
    const Vector& mean = group == 0 ? config_.group_mean0 : config_.group_mean1;
    ep.latent = mean + config_.latent_scale * rng.normal_vector(config_.embed_dim);
    ep.ema = Vector::Zero(config_.embed_dim);
    ep.positive_count = 0.0;
    ep.negative_count = 0.0;
    ep.last_reward = 0.0;
    ep.t = 0;
    ep.active = true;
    ep.recommended.assign(static_cast<std::size_t>(config_.num_items), false);
    // Cold start: the globally popular item is recommended before the agent
    // acts; its reward shapes the first observed state but is not part of
    // the agent's episode return.
    apply_recommendation(ep, popular_item_, rng);
    return features(ep);
}

EnvStep RecSimPair::step(int group, Index action, Rng& rng) {
    EpisodeState& ep = episode_[group];
    if (!ep.active) throw EpisodeFinished("RecSimPair::step: call reset first");
    if (action < 0 || action >= config_.num_items)
        throw IndexOutOfRange("RecSimPair::step: item index");
    if (ep.recommended[static_cast<std::size_t>(action)])
        throw RepeatedItem("RecSimPair::step: item already recommended this episode");

    EnvStep out;
    out.state_features = features(ep);
    out.action = action;
    out.reward = apply_recommendation(ep, action, rng);
    ep.t += 1;
    out.next_state_features = features(ep);
    out.done = ep.t >= config_.horizon;
    if (out.done) ep.active = false;
    return out;
}

std::vector<bool> RecSimPair::valid_actions(int group) const {
    const EpisodeState& ep = episode_[group];
    std::vector<bool> mask(static_cast<std::size_t>(config_.num_items), true);
    if (!ep.recommended.empty())
        for (std::size_t k = 0; k < mask.size(); ++k) mask[k] = !ep.recommended[k];
    return mask;
}

Vector empirical_visitation(const TabularEnvPair& env, const Policy& pi, int group,
                            long num_samples, std::uint64_t seed) {
    const Mdp& mdp = env.pair().group(group);
    if (pi.pi.rows() != mdp.num_states || pi.pi.cols() != mdp.num_actions)
        throw DimensionMismatch("empirical_visitation: policy shape mismatch");

    Rng rng = Rng::derive(seed, {0x76697369ULL, static_cast<std::uint64_t>(group)});
    Vector counts = Vector::Zero(mdp.num_states);
    long recorded = 0;
    while (recorded < num_samples) {
        Index state = rng.categorical(mdp.mu);
        for (;;) {
            counts[state] += 1.0;
            if (++recorded >= num_samples) break;
            if (rng.uniform() >= mdp.gamma) break; // restart from mu
            const Index action = rng.categorical(pi.pi.row(state).transpose());
            state = rng.categorical(
                mdp.transition[static_cast<std::size_t>(state)].row(action).transpose());
        }
    }
    return counts / counts.sum();
}

} // namespace rpy::envs
