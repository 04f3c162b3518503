#include "dash/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

namespace dash {

namespace {

std::uint64_t next_model_id() {
    static std::atomic<std::uint64_t> counter{0};
    return ++counter;
}

void apply_activation(Activation act, Tensor& z) {
    switch (act) {
    case Activation::relu: z = z.cwiseMax(0.0); break;
    case Activation::tanh: z = z.array().tanh().matrix(); break;
    }
}

// Multiplies `grad` in place by the activation derivative evaluated at `pre`.
void activation_backward(Activation act, const Tensor& pre, Tensor& grad) {
    switch (act) {
    case Activation::relu: grad = (pre.array() > 0.0).select(grad, 0.0); break;
    case Activation::tanh: grad.array() *= 1.0 - pre.array().tanh().square(); break;
    }
}

} // namespace

std::string_view to_string(Activation a) {
    return a == Activation::relu ? "relu" : "tanh";
}

Activation activation_from_string(std::string_view s) {
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    throw ParameterError("unknown activation '" + std::string(s) + "'");
}

void check_batch(const Batch& batch, int classes) {
    if (batch.inputs.rows() < 1) throw DimensionError("batch: empty");
    if (static_cast<Eigen::Index>(batch.labels.size()) != batch.inputs.rows())
        throw DimensionError("batch: " + std::to_string(batch.labels.size()) + " labels for " +
                             std::to_string(batch.inputs.rows()) + " rows");
    for (std::size_t n = 0; n < batch.labels.size(); ++n) {
        const int y = batch.labels[n];
        if (y < 0 || y >= classes)
            throw IndexError("label " + std::to_string(y) + " at row " + std::to_string(n) +
                             " outside [0, " + std::to_string(classes) + ")");
    }
}

MlpModel::MlpModel(std::vector<int> layer_sizes, Activation activation)
    : sizes_(std::move(layer_sizes)), activation_(activation), id_(next_model_id()) {
    allocate();
}

MlpModel::MlpModel(std::vector<int> layer_sizes, Activation activation, Rng& rng)
    : MlpModel(std::move(layer_sizes), activation) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        Tensor& w = weights_[l];
        const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-limit, limit);
    }
}

MlpModel::MlpModel(const MlpModel& other)
    : sizes_(other.sizes_), activation_(other.activation_), weights_(other.weights_),
      biases_(other.biases_), param_count_(other.param_count_), id_(next_model_id()),
      revision_(other.revision_) {}

MlpModel& MlpModel::operator=(const MlpModel& other) {
    if (this != &other) {
        sizes_ = other.sizes_;
        activation_ = other.activation_;
        weights_ = other.weights_;
        biases_ = other.biases_;
        param_count_ = other.param_count_;
        id_ = next_model_id();
        revision_ = other.revision_;
    }
    return *this;
}

void MlpModel::allocate() {
    if (sizes_.size() < 2) throw ParameterError("MlpModel: need at least input and output sizes");
    for (int s : sizes_)
        if (s < 1) throw ParameterError("MlpModel: layer sizes must be positive");
    weights_.clear();
    biases_.clear();
    param_count_ = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        weights_.emplace_back(Tensor::Zero(sizes_[l], sizes_[l + 1]));
        biases_.emplace_back(Vector::Zero(sizes_[l + 1]));
        param_count_ += static_cast<Eigen::Index>(sizes_[l]) * sizes_[l + 1] + sizes_[l + 1];
    }
}

void MlpModel::set_layer(std::size_t l, const Tensor& w, const Vector& b) {
    if (w.rows() != weights_.at(l).rows() || w.cols() != weights_[l].cols() ||
        b.size() != biases_[l].size())
        throw DimensionError("set_layer " + std::to_string(l) + ": expected " +
                             shape_string(weights_[l]) + ", got " + shape_string(w));
    weights_[l] = w;
    biases_[l] = b;
    ++revision_;
}

ParamVector MlpModel::flatten() const {
    ParamVector out(param_count_);
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        const Eigen::Index nw = weights_[l].size();
        out.segment(pos, nw) = Eigen::Map<const Vector>(weights_[l].data(), nw);
        pos += nw;
        out.segment(pos, biases_[l].size()) = biases_[l];
        pos += biases_[l].size();
    }
    return out;
}

void MlpModel::unflatten(const ParamVector& params) {
    if (params.size() != param_count_)
        throw DimensionError("unflatten: expected " + std::to_string(param_count_) +
                             " parameters, got " + std::to_string(params.size()));
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        const Eigen::Index nw = weights_[l].size();
        Eigen::Map<Vector>(weights_[l].data(), nw) = params.segment(pos, nw);
        pos += nw;
        biases_[l] = params.segment(pos, biases_[l].size());
        pos += biases_[l].size();
    }
    ++revision_;
}

ForwardCache MlpModel::forward(const Tensor& inputs) const {
    if (inputs.cols() != input_dim())
        throw DimensionError("forward: input width " + std::to_string(inputs.cols()) +
                             ", model expects " + std::to_string(input_dim()));
    ForwardCache cache;
    cache.model_id = id_;
    cache.revision = revision_;
    cache.layer_inputs.reserve(weights_.size());
    cache.pre_activations.reserve(weights_.size());
    Tensor a = inputs;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        Tensor z = a * weights_[l];
        z.rowwise() += biases_[l].transpose();
        cache.layer_inputs.push_back(std::move(a));
        if (l + 1 < weights_.size()) {
            a = z;
            apply_activation(activation_, a);
        }
        cache.pre_activations.push_back(std::move(z));
    }
    require_finite(cache.logits(), "forward: logits");
    return cache;
}

void MlpModel::check_cache(const ForwardCache& cache, const Tensor& logits_grad) const {
    if (cache.model_id != id_ || cache.revision != revision_ ||
        cache.pre_activations.size() != weights_.size())
        throw StateError("backward: cache does not belong to the current model parameters");
    if (logits_grad.rows() != cache.logits().rows() || logits_grad.cols() != output_dim())
        throw DimensionError("backward: upstream gradient " + shape_string(logits_grad) +
                             ", logits " + shape_string(cache.logits()));
}

Tensor MlpModel::backprop(const ForwardCache& cache, const Tensor& logits_grad,
                          ParamVector* grad) const {
    check_cache(cache, logits_grad);
    if (grad) grad->resize(param_count_);
    // Offsets of each layer's block in the flattened vector.
    std::vector<Eigen::Index> offset(weights_.size());
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        offset[l] = pos;
        pos += weights_[l].size() + biases_[l].size();
    }
    Tensor delta = logits_grad;
    for (std::size_t l = weights_.size(); l-- > 0;) {
        if (grad) {
            const Tensor dw = cache.layer_inputs[l].transpose() * delta;
            const Eigen::Index nw = dw.size();
            grad->segment(offset[l], nw) = Eigen::Map<const Vector>(dw.data(), nw);
            grad->segment(offset[l] + nw, biases_[l].size()) = delta.colwise().sum().transpose();
        }
        Tensor upstream = delta * weights_[l].transpose();
        if (l == 0) return upstream;
        activation_backward(activation_, cache.pre_activations[l - 1], upstream);
        delta = std::move(upstream);
    }
    return delta; // unreachable: the loop returns at l == 0
}

ParamVector MlpModel::backward(const ForwardCache& cache, const Tensor& logits_grad) const {
    ParamVector grad;
    backprop(cache, logits_grad, &grad);
    return grad;
}

Tensor MlpModel::backward_inputs(const ForwardCache& cache, const Tensor& logits_grad) const {
    return backprop(cache, logits_grad, nullptr);
}

Ensemble::Ensemble(std::vector<MlpModel> members) : members_(std::move(members)) {
    for (const auto& m : members_)
        if (m.input_dim() != members_.front().input_dim() ||
            m.output_dim() != members_.front().output_dim())
            throw DimensionError("ensemble: members must share input width and class count");
}

Ensemble Ensemble::create(int input_dim, int classes, const std::vector<std::vector<int>>& hidden,
                          Activation activation, std::uint64_t seed) {
    std::vector<MlpModel> members;
    members.reserve(hidden.size());
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        std::vector<int> sizes{input_dim};
        sizes.insert(sizes.end(), hidden[i].begin(), hidden[i].end());
        sizes.push_back(classes);
        Rng rng = Rng::derive(seed, i);
        members.emplace_back(std::move(sizes), activation, rng);
    }
    return Ensemble(std::move(members));
}

int Ensemble::input_dim() const {
    if (members_.empty()) throw StateError("ensemble is empty");
    return members_.front().input_dim();
}

int Ensemble::classes() const {
    if (members_.empty()) throw StateError("ensemble is empty");
    return members_.front().output_dim();
}

std::vector<Tensor> Ensemble::member_logits(const Tensor& inputs) const {
    std::vector<Tensor> out;
    out.reserve(members_.size());
    for (const auto& m : members_) out.push_back(m.logits(inputs));
    return out;
}

Tensor average_softmax(std::span<const Tensor> member_logits, double temperature) {
    if (member_logits.empty()) throw StateError("average_softmax: no members");
    Tensor out = softmax(member_logits.front(), temperature);
    for (std::size_t j = 1; j < member_logits.size(); ++j)
        out += softmax(member_logits[j], temperature);
    out /= static_cast<double>(member_logits.size());
    return out;
}

Tensor ensemble_predict(const Ensemble& ens, const Tensor& inputs) {
    if (ens.empty()) throw StateError("ensemble_predict: empty ensemble");
    const auto logits = ens.member_logits(inputs);
    return average_softmax(logits);
}

Tensor input_gradient(const MlpModel& model, const Batch& batch) {
    check_batch(batch, model.output_dim());
    const ForwardCache cache = model.forward(batch.inputs);
    Tensor g = softmax(cache.logits());
    for (Eigen::Index n = 0; n < g.rows(); ++n) g(n, batch.labels[n]) -= 1.0;
    g /= static_cast<double>(g.rows());
    return model.backward_inputs(cache, g);
}

Tensor input_gradient(const Ensemble& ens, const Batch& batch) {
    if (ens.empty()) throw StateError("input_gradient: empty ensemble");
    check_batch(batch, ens.classes());
    const auto b = batch.inputs.rows();
    const double m = static_cast<double>(ens.size());
    std::vector<ForwardCache> caches;
    std::vector<Tensor> probs;
    for (const auto& member : ens.members()) {
        caches.push_back(member.forward(batch.inputs));
        probs.push_back(softmax(caches.back().logits()));
    }
    Tensor mixture = Tensor::Zero(b, ens.classes());
    for (const auto& p : probs) mixture += p;
    mixture /= m;

    // L = -(1/b) sum_n log pbar_{n,y}; dL/dpbar_{n,y} = -1/(b pbar_{n,y}).
    // Through pbar = (1/m) sum_j softmax(h_j): dL/dh_j = (1/m) p_j (u - <p_j, u>).
    Tensor grad = Tensor::Zero(b, ens.input_dim());
    for (std::size_t j = 0; j < ens.size(); ++j) {
        Tensor dh(b, ens.classes());
        for (Eigen::Index n = 0; n < b; ++n) {
            const int y = batch.labels[n];
            const double u = -1.0 / (static_cast<double>(b) * std::max(mixture(n, y), 1e-300));
            // u is nonzero only at y, so <p_j, u> = p_jy * u.
            dh.row(n) = probs[j].row(n) * (-probs[j](n, y) * u) / m;
            dh(n, y) += probs[j](n, y) * u / m;
        }
        grad += ens.member(j).backward_inputs(caches[j], dh);
    }
    return grad;
}

} // namespace dash
