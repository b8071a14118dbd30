#pragma once

#include "rpy/rng.hpp"
#include "rpy/types.hpp"

#include <string>
#include <vector>

namespace rpy::nn {

class Mlp;

/**
 * Single-use record of one forward pass, sufficient for an exact
 * reverse-mode sweep. Holds its own copy of the parameters so a backward
 * pass stays valid after the network is updated.
 */
class GradientTape {
  public:
    struct Gradients {
        Vector params;
        Matrix inputs;
    };

    /// Reverse sweep for loss gradients d loss / d output (one row per sample).
    Gradients backward(const Matrix& output_grad);

  private:
    friend class Mlp;
    std::vector<Index> sizes_;
    Vector params_;
    std::vector<Matrix> activations_; // activations_[0] is the input batch
    bool used_ = false;
};

/**
 * Dense feed-forward network with rectifier hidden layers and a linear
 * output layer. Parameters live in one flat vector (per layer: row-major
 * weight matrix, then bias), which keeps optimizer steps, soft updates,
 * clipping, and checkpoints uniform.
 */
class Mlp {
  public:
    Mlp() = default;
    /// Uniform fan-in initialization, seed-controlled.
    Mlp(std::vector<Index> layer_sizes, Rng& rng);
    static Mlp zeros(std::vector<Index> layer_sizes);

    Index input_size() const { return sizes_.front(); }
    Index output_size() const { return sizes_.back(); }
    const std::vector<Index>& layer_sizes() const { return sizes_; }
    Index param_count() const { return params_.size(); }

    Vector& params() { return params_; }
    const Vector& params() const { return params_; }

    /// Batched forward pass; rows are samples. Records onto `tape` if given.
    Matrix forward(const Matrix& input, GradientTape* tape = nullptr) const;

    /// Convenience single-sample forward.
    Vector forward(const Vector& input, GradientTape* tape = nullptr) const;

  private:
    friend class GradientTape;
    static Index count_params(const std::vector<Index>& sizes);
    std::vector<Index> sizes_;
    Vector params_;
};

/// Bias-corrected adaptive-moment optimizer state for one parameter vector.
struct AdamState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;

    Vector m;
    Vector v;
    long step_count = 0;

    AdamState() = default;
    explicit AdamState(Index param_count, double learning_rate = 1e-3, double weight_decay = 0.0);

    /// One update; throws NumericalFailure on non-finite gradients, leaving
    /// parameters untouched.
    void step(Vector& params, const Vector& grads);
};

/// target = tau * online + (1 - tau) * target, element-wise.
void soft_update(Vector& target, const Vector& online, double tau);

/// Clamp every parameter of the network into [-c, c].
void clip_weights(Mlp& net, double c);

void save_mlp(const Mlp& net, const std::string& path);
Mlp load_mlp(const std::string& path);

} // namespace rpy::nn
