#include "sigforge/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sigforge/errors.hpp"

namespace sigforge::nn {

namespace {

constexpr double kLogClamp = 1e-12;

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (!a.same_shape(b)) throw ShapeMismatch(what);
}

// delta <- delta (.) f'(z), using post where that is cheaper. Entries zeroed
// by an earlier dropout mask stay zero either way.
void activation_backward(Activation act, const Matrix& pre, const Matrix& post, Matrix& delta) {
    switch (act) {
        case Activation::relu: {
            const auto& z = pre.values();
            auto& d = delta.values();
            for (size_t i = 0; i < d.size(); ++i)
                if (z[i] <= 0.0) d[i] = 0.0;
            break;
        }
        case Activation::sigmoid: {
            const auto& y = post.values();
            auto& d = delta.values();
            for (size_t i = 0; i < d.size(); ++i) d[i] *= y[i] * (1.0 - y[i]);
            break;
        }
        case Activation::linear:
            break;
    }
}

}  // namespace

void TrainConfig::validate() const {
    if (!(noise_ratio >= 0.0 && noise_ratio <= 1.0))
        throw InvalidSpec("train config: noise_ratio must be in [0,1]");
    if (!(dropout_prob >= 0.0 && dropout_prob < 1.0))
        throw InvalidSpec("train config: dropout_prob must be in [0,1)");
    if (!(lr_start >= lr_end && lr_end > 0.0))
        throw InvalidSpec("train config: need lr_start >= lr_end > 0");
    if (batch_size < 1) throw InvalidSpec("train config: batch_size must be >= 1");
}

std::vector<double> relu(const std::vector<double>& x) {
    std::vector<double> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
    return out;
}

void apply_activation(Activation act, const Matrix& pre, Matrix& post) {
    post = pre;
    auto& v = post.values();
    switch (act) {
        case Activation::relu:
            for (double& x : v)
                if (x < 0.0) x = 0.0;
            break;
        case Activation::sigmoid:
            for (double& x : v) x = sigmoid(x);
            break;
        case Activation::linear:
            break;
    }
}

Matrix softmax_rows(const Matrix& pre) {
    Matrix out(pre.rows(), pre.cols());
    for (size_t i = 0; i < pre.rows(); ++i) {
        const double* z = pre.row(i);
        double* p = out.row(i);
        double zmax = z[0];
        for (size_t j = 1; j < pre.cols(); ++j) zmax = std::max(zmax, z[j]);
        double sum = 0.0;
        for (size_t j = 0; j < pre.cols(); ++j) {
            p[j] = std::exp(z[j] - zmax);
            sum += p[j];
        }
        for (size_t j = 0; j < pre.cols(); ++j) p[j] /= sum;
    }
    return out;
}

namespace {

// Partial Fisher-Yates: first m entries of a shuffled identity permutation.
void sample_positions(std::vector<size_t>& pool, size_t m, Rng& rng) {
    const size_t n = pool.size();
    std::iota(pool.begin(), pool.end(), size_t{0});
    for (size_t i = 0; i < m; ++i) {
        const size_t j = i + static_cast<size_t>(rng.below(n - i));
        std::swap(pool[i], pool[j]);
    }
}

}  // namespace

std::vector<double> corrupt(const std::vector<double>& x, double ratio, Rng& rng) {
    std::vector<double> out = x;
    const size_t m = static_cast<size_t>(std::floor(ratio * static_cast<double>(x.size())));
    if (m == 0) return out;
    std::vector<size_t> pool(x.size());
    sample_positions(pool, m, rng);
    for (size_t i = 0; i < m; ++i) out[pool[i]] = 0.0;
    return out;
}

void corrupt_rows_inplace(Matrix& x, double ratio, Rng& rng) {
    const size_t n = x.cols();
    const size_t m = static_cast<size_t>(std::floor(ratio * static_cast<double>(n)));
    if (m == 0) return;
    std::vector<size_t> pool(n);
    for (size_t r = 0; r < x.rows(); ++r) {
        sample_positions(pool, m, rng);
        double* row = x.row(r);
        for (size_t i = 0; i < m; ++i) row[pool[i]] = 0.0;
    }
}

std::vector<double> dropout_mask(size_t n, double p, Rng& rng) {
    std::vector<double> mask(n, 1.0);
    if (p <= 0.0) return mask;
    for (double& m : mask)
        if (rng.uniform() < p) m = 0.0;
    return mask;
}

Matrix dropout_mask_matrix(size_t rows, size_t cols, double p, Rng& rng) {
    Matrix mask(rows, cols, 1.0);
    if (p <= 0.0) return mask;
    for (double& m : mask.values())
        if (rng.uniform() < p) m = 0.0;
    return mask;
}

Forward dense_forward(const LayerParams& layer, const Matrix& x) {
    if (x.cols() != layer.fan_in()) throw ShapeMismatch("dense_forward: input width != fan_in");
    Forward f;
    f.pre = matmul(x, layer.w_enc);
    add_row_broadcast(f.pre, layer.b_enc);
    apply_activation(layer.activation, f.pre, f.post);
    return f;
}

LossResult loss(LossKind kind, const Matrix& output, const Matrix& target) {
    check_same_shape(output, target, "loss: output and target shapes differ");
    const double batch = static_cast<double>(output.rows());
    LossResult res;
    res.grad = Matrix(output.rows(), output.cols());

    switch (kind) {
        case LossKind::bce_sigmoid: {
            const auto& y = output.values();
            const auto& t = target.values();
            auto& g = res.grad.values();
            double total = 0.0;
            for (size_t i = 0; i < y.size(); ++i) {
                const double yc = std::clamp(y[i], kLogClamp, 1.0 - kLogClamp);
                total -= t[i] * std::log(yc) + (1.0 - t[i]) * std::log(1.0 - yc);
                g[i] = (y[i] - t[i]) / batch;
            }
            res.value = total / batch;
            break;
        }
        case LossKind::mse: {
            const auto& y = output.values();
            const auto& t = target.values();
            auto& g = res.grad.values();
            double total = 0.0;
            for (size_t i = 0; i < y.size(); ++i) {
                const double d = y[i] - t[i];
                total += 0.5 * d * d;
                g[i] = d / batch;
            }
            res.value = total / batch;
            break;
        }
        case LossKind::softmax_xent: {
            const Matrix p = softmax_rows(output);
            const auto& pv = p.values();
            const auto& t = target.values();
            auto& g = res.grad.values();
            double total = 0.0;
            for (size_t i = 0; i < pv.size(); ++i) {
                if (t[i] != 0.0) total -= t[i] * std::log(std::max(pv[i], kLogClamp));
                g[i] = (pv[i] - t[i]) / batch;
            }
            res.value = total / batch;
            break;
        }
    }
    return res;
}

void sgd_step(Matrix& params, const Matrix& grads, double lr, double l2) {
    check_same_shape(params, grads, "sgd_step: parameter and gradient shapes differ");
    auto& p = params.values();
    const auto& g = grads.values();
    for (size_t i = 0; i < p.size(); ++i) p[i] -= lr * (g[i] + l2 * p[i]);
}

void sgd_step(std::vector<double>& bias, const std::vector<double>& grads, double lr) {
    if (bias.size() != grads.size())
        throw ShapeMismatch("sgd_step: bias and gradient sizes differ");
    for (size_t i = 0; i < bias.size(); ++i) bias[i] -= lr * grads[i];
}

double lr_at(size_t step, size_t total_steps, const TrainConfig& cfg) {
    if (total_steps <= 1 || step == 0) return cfg.lr_start;
    if (step >= total_steps - 1) return cfg.lr_end;
    const double frac = static_cast<double>(step) / static_cast<double>(total_steps - 1);
    return cfg.lr_start + (cfg.lr_end - cfg.lr_start) * frac;
}

Matrix init_weight(size_t fan_in, size_t fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    for (double& v : w.values()) v = rng.uniform(-bound, bound);
    return w;
}

void mlp_forward(const Mlp& net, const Matrix& x, ActivationBuffer& buf,
                 const std::vector<Matrix>* masks) {
    const size_t L = net.layers.size();
    buf.pre.resize(L);
    buf.post.resize(L);
    const Matrix* cur = &x;
    for (size_t l = 0; l < L; ++l) {
        Forward f = dense_forward(net.layers[l], *cur);
        buf.pre[l] = std::move(f.pre);
        buf.post[l] = std::move(f.post);
        if (masks && !(*masks)[l].empty()) hadamard_inplace(buf.post[l], (*masks)[l]);
        cur = &buf.post[l];
    }
}

double mlp_loss_and_grads(const Mlp& net, const Matrix& x, const Matrix& target,
                          ActivationBuffer& buf, const std::vector<Matrix>* masks,
                          MlpGrads& grads) {
    const size_t L = net.layers.size();
    grads.w.resize(L);
    grads.b.resize(L);

    mlp_forward(net, x, buf, masks);

    const Matrix& last =
        net.loss_kind == LossKind::softmax_xent ? buf.pre[L - 1] : buf.post[L - 1];
    LossResult lr = loss(net.loss_kind, last, target);

    Matrix delta = std::move(lr.grad);
    if (net.loss_kind == LossKind::mse)
        activation_backward(net.layers[L - 1].activation, buf.pre[L - 1], buf.post[L - 1], delta);

    for (size_t l = L; l-- > 0;) {
        const Matrix& input = l == 0 ? x : buf.post[l - 1];
        grads.w[l] = matmul_tn(input, delta);
        grads.b[l] = column_sums(delta);
        if (l == 0) break;
        Matrix da = matmul_nt(delta, net.layers[l].w_enc);
        if (masks && !(*masks)[l - 1].empty()) hadamard_inplace(da, (*masks)[l - 1]);
        activation_backward(net.layers[l - 1].activation, buf.pre[l - 1], buf.post[l - 1], da);
        delta = std::move(da);
    }
    return lr.value;
}

double gradient_check(const Mlp& net, const Matrix& x, const Matrix& target, double eps) {
    ActivationBuffer buf;
    MlpGrads analytic;
    mlp_loss_and_grads(net, x, target, buf, nullptr, analytic);

    Mlp probe = net;
    auto loss_at = [&]() {
        ActivationBuffer b;
        mlp_forward(probe, x, b);
        const size_t L = probe.layers.size();
        const Matrix& last =
            probe.loss_kind == LossKind::softmax_xent ? b.pre[L - 1] : b.post[L - 1];
        return loss(probe.loss_kind, last, target).value;
    };

    double max_err = 0.0;
    auto probe_param = [&](double& theta, double analytic_grad) {
        const double saved = theta;
        theta = saved + eps;
        const double up = loss_at();
        theta = saved - eps;
        const double down = loss_at();
        theta = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double err = std::abs(analytic_grad - numeric) /
                           std::max(std::abs(analytic_grad) + std::abs(numeric), 1e-8);
        max_err = std::max(max_err, err);
    };

    for (size_t l = 0; l < probe.layers.size(); ++l) {
        auto& w = probe.layers[l].w_enc.values();
        for (size_t i = 0; i < w.size(); ++i) probe_param(w[i], analytic.w[l].values()[i]);
        auto& b = probe.layers[l].b_enc;
        for (size_t i = 0; i < b.size(); ++i) probe_param(b[i], analytic.b[l][i]);
    }
    return max_err;
}

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
        case Activation::linear: return "linear";
    }
    return "?";
}

}  // namespace sigforge::nn
