#pragma once

#include "dash/rng.hpp"
#include "dash/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dash {

enum class Activation { relu, tanh };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);

/// Mini-batch of inputs [b x d] with one label per row.
struct Batch {
    Tensor inputs;
    std::vector<int> labels;

    Eigen::Index size() const { return inputs.rows(); }
};

/// Validates b >= 1, label count and label range against `classes`.
void check_batch(const Batch& batch, int classes);

/// Activations saved by forward() for the matching backward() call.
struct ForwardCache {
    std::vector<Tensor> layer_inputs;    // a_l, input of layer l
    std::vector<Tensor> pre_activations; // z_l = a_l W_l + b_l
    std::uint64_t model_id = 0;
    std::uint64_t revision = 0;

    const Tensor& logits() const { return pre_activations.back(); }
};

/// Fully connected network. Hidden layers use the activation, the output layer
/// is linear (logits). Layer l computes z = a W_l + b_l with W_l stored
/// [fan_in x fan_out]. Flattened parameter order is W_0 (row-major), b_0,
/// W_1, b_1, ...
class MlpModel {
public:
    MlpModel() = default;

    /// Zero-initialized network.
    MlpModel(std::vector<int> layer_sizes, Activation activation);

    /// Glorot-uniform weights, zero biases.
    MlpModel(std::vector<int> layer_sizes, Activation activation, Rng& rng);

    MlpModel(const MlpModel& other);
    MlpModel& operator=(const MlpModel& other);
    MlpModel(MlpModel&&) noexcept = default;
    MlpModel& operator=(MlpModel&&) noexcept = default;

    const std::vector<int>& layer_sizes() const { return sizes_; }
    Activation activation() const { return activation_; }
    int input_dim() const { return sizes_.front(); }
    int output_dim() const { return sizes_.back(); }
    std::size_t layer_count() const { return weights_.size(); }
    Eigen::Index parameter_count() const { return param_count_; }

    const Tensor& weight(std::size_t l) const { return weights_.at(l); }
    const Vector& bias(std::size_t l) const { return biases_.at(l); }
    void set_layer(std::size_t l, const Tensor& w, const Vector& b);

    ParamVector flatten() const;
    void unflatten(const ParamVector& params);

    ForwardCache forward(const Tensor& inputs) const;
    Tensor logits(const Tensor& inputs) const { return forward(inputs).logits(); }

    /// Parameter gradient of a scalar loss given dLoss/dlogits.
    ParamVector backward(const ForwardCache& cache, const Tensor& logits_grad) const;

    /// Input gradient of a scalar loss given dLoss/dlogits, [b x d].
    Tensor backward_inputs(const ForwardCache& cache, const Tensor& logits_grad) const;

    std::uint64_t revision() const { return revision_; }

private:
    void allocate();
    void check_cache(const ForwardCache& cache, const Tensor& logits_grad) const;
    Tensor backprop(const ForwardCache& cache, const Tensor& logits_grad, ParamVector* grad) const;

    std::vector<int> sizes_;
    Activation activation_ = Activation::relu;
    std::vector<Tensor> weights_;
    std::vector<Vector> biases_;
    Eigen::Index param_count_ = 0;
    std::uint64_t id_ = 0;
    std::uint64_t revision_ = 0;
};

/// Members sharing input width d and class count M; f_ens averages member
/// softmax probabilities.
class Ensemble {
public:
    Ensemble() = default;
    explicit Ensemble(std::vector<MlpModel> members);

    /// m members with the given hidden widths, each initialized from
    /// Rng::derive(seed, i).
    static Ensemble create(int input_dim, int classes, const std::vector<std::vector<int>>& hidden,
                           Activation activation, std::uint64_t seed);

    std::size_t size() const { return members_.size(); }
    bool empty() const { return members_.empty(); }
    int input_dim() const;
    int classes() const;

    MlpModel& member(std::size_t i) { return members_.at(i); }
    const MlpModel& member(std::size_t i) const { return members_.at(i); }
    std::span<const MlpModel> members() const { return members_; }

    /// Logits of every member on the same inputs.
    std::vector<Tensor> member_logits(const Tensor& inputs) const;

private:
    std::vector<MlpModel> members_;
};

/// Mean of member softmax(logits) at temperature 1.
Tensor ensemble_predict(const Ensemble& ens, const Tensor& inputs);

/// Mean of softmax(logits_j / temperature) over the given member logits.
Tensor average_softmax(std::span<const Tensor> member_logits, double temperature = 1.0);

/// Input gradient of the mean (unsmoothed) cross-entropy of one model.
Tensor input_gradient(const MlpModel& model, const Batch& batch);

/// Input gradient of the mean cross-entropy of the ensemble mixture,
/// -mean log f_ens(x)_y.
Tensor input_gradient(const Ensemble& ens, const Batch& batch);

} // namespace dash
