#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sigforge/matrix.hpp"
#include "sigforge/rng.hpp"

namespace sigforge::nn {

enum class Activation : uint8_t { relu = 0, sigmoid = 1, linear = 2 };

enum class LossKind { bce_sigmoid, mse, softmax_xent };

/// One dense layer: encoder weights/bias plus an optional decoder half.
/// With tied=true the decoder weight is the transpose of w_enc and w_dec
/// stays empty.
struct LayerParams {
    Matrix w_enc;                // fan_in x fan_out
    std::vector<double> b_enc;   // fan_out
    Matrix w_dec;                // fan_out x fan_in, empty when absent
    std::vector<double> b_dec;   // fan_in, empty when absent
    Activation activation = Activation::relu;
    Activation dec_activation = Activation::linear;
    bool tied = false;

    size_t fan_in() const { return w_enc.rows(); }
    size_t fan_out() const { return w_enc.cols(); }
    bool has_decoder() const { return tied || !w_dec.empty(); }
};

struct TrainConfig {
    double noise_ratio = 0.2;
    double dropout_prob = 0.5;
    double lr_start = 0.001;
    double lr_end = 0.000001;
    size_t epochs = 1000;
    size_t batch_size = 20;
    double l2_coeff = 1e-4;
    bool tied_weights = false;
    uint64_t seed = 0;

    // epochs may be zero: that leaves parameters at their initialization,
    // which some callers rely on as a degenerate case.
    void validate() const;
};

/// Per-batch forward state kept for backpropagation: the corrupted input,
/// plus pre/post activations (and dropout masks) for every layer.
struct ActivationBuffer {
    Matrix corrupted;
    std::vector<Matrix> pre;
    std::vector<Matrix> post;
};

std::vector<double> relu(const std::vector<double>& x);
void apply_activation(Activation act, const Matrix& pre, Matrix& post);
Matrix softmax_rows(const Matrix& pre);

/// Copy of x with exactly floor(ratio * len) distinct positions zeroed,
/// chosen uniformly without replacement.
std::vector<double> corrupt(const std::vector<double>& x, double ratio, Rng& rng);
void corrupt_rows_inplace(Matrix& x, double ratio, Rng& rng);

/// Each entry independently 0 with probability p, else 1.
std::vector<double> dropout_mask(size_t n, double p, Rng& rng);
Matrix dropout_mask_matrix(size_t rows, size_t cols, double p, Rng& rng);

struct Forward {
    Matrix pre;
    Matrix post;
};
/// pre = x * w_enc + b_enc (row broadcast); post = activation(pre).
Forward dense_forward(const LayerParams& layer, const Matrix& x);

struct LossResult {
    double value = 0.0;
    Matrix grad;
};
/// Mean loss over the batch. For the fused kinds the gradient is taken with
/// respect to the pre-activation: bce_sigmoid expects `output` to hold
/// sigmoid values, softmax_xent expects raw pre-activations. For mse the
/// gradient is with respect to the output itself.
LossResult loss(LossKind kind, const Matrix& output, const Matrix& target);

/// p <- p - lr * (g + l2 * p). Bias updates use the overload without l2.
void sgd_step(Matrix& params, const Matrix& grads, double lr, double l2);
void sgd_step(std::vector<double>& bias, const std::vector<double>& grads, double lr);

/// Linear decay from lr_start to lr_end across total_steps updates.
/// Endpoints are exact.
double lr_at(size_t step, size_t total_steps, const TrainConfig& cfg);

/// Uniform init in +-sqrt(6 / (fan_in + fan_out)); biases zero.
Matrix init_weight(size_t fan_in, size_t fan_out, Rng& rng);

// A plain feed-forward stack over the encoder halves of LayerParams.
// Shared by autoencoder training, supervised fine-tuning and the
// finite-difference checker.
struct Mlp {
    std::vector<LayerParams> layers;
    LossKind loss_kind = LossKind::mse;
};

struct MlpGrads {
    std::vector<Matrix> w;
    std::vector<std::vector<double>> b;
};

/// Runs the stack. masks, when given, holds one dropout mask per layer
/// (an empty Matrix means no mask for that layer).
void mlp_forward(const Mlp& net, const Matrix& x, ActivationBuffer& buf,
                 const std::vector<Matrix>* masks = nullptr);

/// Loss + gradients for one batch; forward state comes from mlp_forward.
double mlp_loss_and_grads(const Mlp& net, const Matrix& x, const Matrix& target,
                          ActivationBuffer& buf, const std::vector<Matrix>* masks,
                          MlpGrads& grads);

/// Max relative error between analytic gradients and central finite
/// differences over every parameter: max |a-n| / max(|a|+|n|, 1e-8).
/// Dropout and corruption are not applied.
double gradient_check(const Mlp& net, const Matrix& x, const Matrix& target, double eps);

const char* activation_name(Activation a);

}  // namespace sigforge::nn
