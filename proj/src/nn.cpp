#include "rpy/nn.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>

namespace rpy::nn {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeightMap = Eigen::Map<const RowMajorMatrix>;
using WeightMap = Eigen::Map<RowMajorMatrix>;

// Per-layer slice offsets within the flat parameter vector.
struct LayerSlice {
    Index w_offset;
    Index b_offset;
    Index in;
    Index out;
};

LayerSlice layer_slice(const std::vector<Index>& sizes, Index layer) {
    Index offset = 0;
    for (Index l = 0; l < layer; ++l) {
        const Index in = sizes[static_cast<std::size_t>(l)];
        const Index out = sizes[static_cast<std::size_t>(l + 1)];
        offset += in * out + out;
    }
    const Index in = sizes[static_cast<std::size_t>(layer)];
    const Index out = sizes[static_cast<std::size_t>(layer + 1)];
    return {offset, offset + in * out, in, out};
}

} // namespace

Index Mlp::count_params(const std::vector<Index>& sizes) {
    Index total = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
        total += sizes[l] * sizes[l + 1] + sizes[l + 1];
    return total;
}

Mlp::Mlp(std::vector<Index> layer_sizes, Rng& rng) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw InvalidParameter("Mlp: need at least input and output sizes");
    for (Index s : sizes_)
        if (s <= 0) throw InvalidParameter("Mlp: layer sizes must be positive");
    params_ = Vector::Zero(count_params(sizes_));
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        const LayerSlice slice = layer_slice(sizes_, static_cast<Index>(l));
        const double bound = 1.0 / std::sqrt(static_cast<double>(slice.in));
        for (Index i = 0; i < slice.in * slice.out + slice.out; ++i)
            params_[slice.w_offset + i] = rng.uniform(-bound, bound);
    }
}

Mlp Mlp::zeros(std::vector<Index> layer_sizes) {
    Mlp net;
    net.sizes_ = std::move(layer_sizes);
    if (net.sizes_.size() < 2) throw InvalidParameter("Mlp: need at least input and output sizes");
    net.params_ = Vector::Zero(count_params(net.sizes_));
    return net;
}

Matrix Mlp::forward(const Matrix& input, GradientTape* tape) const {
    if (input.cols() != input_size())
        throw DimensionMismatch("Mlp::forward: input dimension mismatch");
    const Index num_layers = static_cast<Index>(sizes_.size()) - 1;

    if (tape) {
        tape->sizes_ = sizes_;
        tape->params_ = params_;
        tape->activations_.clear();
        tape->used_ = false;
        tape->activations_.push_back(input);
    }

    Matrix activation = input;
    for (Index l = 0; l < num_layers; ++l) {
        const LayerSlice slice = layer_slice(sizes_, l);
        ConstWeightMap w(params_.data() + slice.w_offset, slice.out, slice.in);
        const auto b = params_.segment(slice.b_offset, slice.out);
        Matrix z = activation * w.transpose();
        z.rowwise() += b.transpose();
        if (l + 1 < num_layers) z = z.cwiseMax(0.0);
        activation = std::move(z);
        if (tape) tape->activations_.push_back(activation);
    }
    return activation;
}

Vector Mlp::forward(const Vector& input, GradientTape* tape) const {
    return forward(Matrix(input.transpose()), tape).row(0).transpose();
}

GradientTape::Gradients GradientTape::backward(const Matrix& output_grad) {
    if (used_) throw TapeReused("GradientTape: backward already consumed this tape");
    if (activations_.empty()) throw ValidationError("GradientTape: tape never recorded a forward pass");
    used_ = true;

    const Index num_layers = static_cast<Index>(sizes_.size()) - 1;
    const Matrix& output = activations_.back();
    if (output_grad.rows() != output.rows() || output_grad.cols() != output.cols())
        throw DimensionMismatch("GradientTape::backward: loss gradient shape mismatch");

    Gradients grads;
    grads.params = Vector::Zero(params_.size());

    Matrix delta = output_grad; // gradient wrt the layer's pre-activation
    for (Index l = num_layers - 1; l >= 0; --l) {
        const LayerSlice slice = layer_slice(sizes_, l);
        const Matrix& layer_input = activations_[static_cast<std::size_t>(l)];
        if (l + 1 < num_layers) {
            // Rectifier mask: post-activation is positive exactly where the
            // unit was active.
            const Matrix& post = activations_[static_cast<std::size_t>(l + 1)];
            delta = (post.array() > 0.0).select(delta, 0.0);
        }
        WeightMap w_grad(grads.params.data() + slice.w_offset, slice.out, slice.in);
        w_grad = delta.transpose() * layer_input;
        grads.params.segment(slice.b_offset, slice.out) = delta.colwise().sum().transpose();

        ConstWeightMap w(params_.data() + slice.w_offset, slice.out, slice.in);
        delta = delta * w;
    }
    grads.inputs = std::move(delta);
    return grads;
}

AdamState::AdamState(Index param_count, double learning_rate_in, double weight_decay_in)
    : learning_rate(learning_rate_in),
      weight_decay(weight_decay_in),
      m(Vector::Zero(param_count)),
      v(Vector::Zero(param_count)) {}

void AdamState::step(Vector& params, const Vector& grads) {
    if (params.size() != m.size() || grads.size() != m.size())
        throw ShapeMismatch("AdamState::step: parameter/gradient shape mismatch");
    if (!grads.allFinite()) throw NumericalFailure("AdamState::step: non-finite gradient");

    Vector g = grads;
    if (weight_decay != 0.0) g += weight_decay * params;

    ++step_count;
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
    const double m_corr = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double v_corr = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    params -= (learning_rate / m_corr) *
              (m.array() / ((v / v_corr).cwiseSqrt().array() + epsilon)).matrix();
    if (!params.allFinite()) throw NumericalFailure("AdamState::step: parameters became non-finite");
}

void soft_update(Vector& target, const Vector& online, double tau) {
    if (target.size() != online.size())
        throw ShapeMismatch("soft_update: parameter vectors differ in size");
    if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidParameter("soft_update: tau must lie in [0,1]");
    target = tau * online + (1.0 - tau) * target;
}

void clip_weights(Mlp& net, double c) {
    if (!(c > 0.0)) throw InvalidParameter("clip_weights: clip constant must be positive");
    net.params() = net.params().cwiseMax(-c).cwiseMin(c);
}

void save_mlp(const Mlp& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("save_mlp: cannot open " + path);
    out << "mlp " << net.layer_sizes().size();
    for (Index s : net.layer_sizes()) out << ' ' << s;
    out << '\n';
    char buffer[64];
    for (Index i = 0; i < net.param_count(); ++i) {
        std::snprintf(buffer, sizeof(buffer), "%.17g", net.params()[i]);
        out << buffer << '\n';
    }
}

Mlp load_mlp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("load_mlp: cannot open " + path);
    std::string magic;
    std::size_t count = 0;
    if (!(in >> magic >> count) || magic != "mlp" || count < 2)
        throw ParseError("load_mlp: bad header in " + path);
    std::vector<Index> sizes(count);
    for (auto& s : sizes)
        if (!(in >> s) || s <= 0) throw ParseError("load_mlp: bad layer size in " + path);
    Mlp net = Mlp::zeros(sizes);
    for (Index i = 0; i < net.param_count(); ++i)
        if (!(in >> net.params()[i])) throw ParseError("load_mlp: truncated parameters in " + path);
    return net;
}

} // namespace rpy::nn
