#include "sigforge/dbn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "sigforge/errors.hpp"
#include "sigforge/util.hpp"

namespace sigforge::dbn {

void Architecture::validate() const {
    if (layer_widths.size() < 2)
        throw InvalidSpec("architecture: need at least input and signature widths");
    for (size_t w : layer_widths)
        if (w == 0) throw InvalidSpec("architecture: zero layer width");
}

namespace {

nn::LossKind loss_kind_for(size_t layer_index) {
    return layer_index == 0 ? nn::LossKind::bce_sigmoid : nn::LossKind::mse;
}

nn::Activation dec_activation_for(size_t layer_index) {
    return layer_index == 0 ? nn::Activation::sigmoid : nn::Activation::linear;
}

// Encoder+decoder as a two-layer stack so training shares the MLP core.
nn::Mlp as_autoencoder(const nn::LayerParams& layer, size_t layer_index) {
    nn::Mlp ae;
    ae.loss_kind = loss_kind_for(layer_index);
    nn::LayerParams enc;
    enc.w_enc = layer.w_enc;
    enc.b_enc = layer.b_enc;
    enc.activation = layer.activation;
    nn::LayerParams dec;
    dec.w_enc = layer.tied ? transpose(layer.w_enc) : layer.w_dec;
    dec.b_enc = layer.b_dec;
    dec.activation = layer.dec_activation;
    ae.layers = {std::move(enc), std::move(dec)};
    return ae;
}

double inference_reconstruction_loss(const nn::Mlp& ae, double dropout_prob, const Matrix& x) {
    nn::Forward hidden = nn::dense_forward(ae.layers[0], x);
    scale_inplace(hidden.post, 1.0 - dropout_prob);
    nn::Forward out = nn::dense_forward(ae.layers[1], hidden.post);
    const Matrix& arg =
        ae.loss_kind == nn::LossKind::softmax_xent ? out.pre : out.post;
    return nn::loss(ae.loss_kind, arg, x).value;
}

}  // namespace

nn::LayerParams train_layer(const Matrix& inputs, size_t fan_out, const nn::TrainConfig& cfg,
                            size_t layer_index, nn::Activation encoder_activation,
                            const ProgressFn& progress) {
    if (inputs.rows() == 0) throw EmptyInput("train_layer: no input samples");
    cfg.validate();

    const size_t n = inputs.rows();
    const size_t fan_in = inputs.cols();

    // One stream per layer; draw order is fixed: encoder init, decoder init,
    // monitor subset, then per epoch the shuffle followed by per-batch
    // corruption and dropout draws.
    Rng rng = Rng::stream(cfg.seed, streams::kLayerBase + layer_index);

    nn::Mlp ae;
    ae.loss_kind = loss_kind_for(layer_index);
    {
        nn::LayerParams enc;
        enc.w_enc = nn::init_weight(fan_in, fan_out, rng);
        enc.b_enc.assign(fan_out, 0.0);
        enc.activation = encoder_activation;
        nn::LayerParams dec;
        dec.w_enc = cfg.tied_weights ? transpose(enc.w_enc) : nn::init_weight(fan_out, fan_in, rng);
        dec.b_enc.assign(fan_in, 0.0);
        dec.activation = dec_activation_for(layer_index);
        ae.layers = {std::move(enc), std::move(dec)};
    }

    // Fixed tenth of the inputs used only for the per-epoch convergence
    // signal (still part of the training set).
    const size_t monitor_count = std::max<size_t>(1, n / 10);
    std::vector<size_t> monitor_idx = rng.permutation(n);
    monitor_idx.resize(monitor_count);
    const Matrix monitor = gather_rows(inputs, monitor_idx, 0, monitor_count);

    auto report = [&](size_t epoch) {
        if (progress)
            progress({layer_index, epoch,
                      inference_reconstruction_loss(ae, cfg.dropout_prob, monitor)});
    };
    report(0);

    const size_t batches = (n + cfg.batch_size - 1) / cfg.batch_size;
    const size_t total_steps = cfg.epochs * batches;
    size_t step = 0;

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    nn::ActivationBuffer buf;
    nn::MlpGrads grads;
    std::vector<Matrix> masks(2);

    for (size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t b = 0; b < batches; ++b) {
            const size_t begin = b * cfg.batch_size;
            const size_t count = std::min(cfg.batch_size, n - begin);
            const Matrix clean = gather_rows(inputs, order, begin, count);
            Matrix noisy = clean;
            nn::corrupt_rows_inplace(noisy, cfg.noise_ratio, rng);
            masks[0] = nn::dropout_mask_matrix(count, fan_out, cfg.dropout_prob, rng);
            masks[1] = Matrix();  // decoder output is never masked

            const double batch_loss = nn::mlp_loss_and_grads(ae, noisy, clean, buf, &masks, grads);
            if (!std::isfinite(batch_loss))
                throw NonFiniteLoss("train_layer: loss diverged at layer " +
                                    std::to_string(layer_index) + ", epoch " +
                                    std::to_string(epoch));

            const double lr = nn::lr_at(step, total_steps, cfg);
            if (cfg.tied_weights) {
                Matrix combined = grads.w[0];
                const Matrix dec_t = transpose(grads.w[1]);
                auto& c = combined.values();
                const auto& d = dec_t.values();
                for (size_t i = 0; i < c.size(); ++i) c[i] += d[i];
                nn::sgd_step(ae.layers[0].w_enc, combined, lr, cfg.l2_coeff);
                ae.layers[1].w_enc = transpose(ae.layers[0].w_enc);
            } else {
                nn::sgd_step(ae.layers[0].w_enc, grads.w[0], lr, cfg.l2_coeff);
                nn::sgd_step(ae.layers[1].w_enc, grads.w[1], lr, cfg.l2_coeff);
            }
            nn::sgd_step(ae.layers[0].b_enc, grads.b[0], lr);
            nn::sgd_step(ae.layers[1].b_enc, grads.b[1], lr);
            ++step;
        }
        report(epoch);
    }

    nn::LayerParams out;
    out.w_enc = std::move(ae.layers[0].w_enc);
    out.b_enc = std::move(ae.layers[0].b_enc);
    out.activation = encoder_activation;
    out.dec_activation = dec_activation_for(layer_index);
    out.tied = cfg.tied_weights;
    if (!cfg.tied_weights) out.w_dec = std::move(ae.layers[1].w_enc);
    out.b_dec = std::move(ae.layers[1].b_enc);
    return out;
}

Matrix to_matrix(const std::vector<corpus::FeatureVector>& features) {
    if (features.empty()) throw EmptyInput("no feature vectors");
    Matrix x(features.size(), features.front().bits.size());
    for (size_t i = 0; i < features.size(); ++i) {
        if (features[i].bits.size() != x.cols())
            throw ShapeMismatch("feature vectors have inconsistent widths");
        double* row = x.row(i);
        for (size_t j = 0; j < x.cols(); ++j) row[j] = features[i].bits[j];
    }
    return x;
}

DbnModel train_dbn(const std::vector<corpus::FeatureVector>& features, const Architecture& arch,
                   const nn::TrainConfig& cfg, const ProgressFn& progress) {
    arch.validate();
    Matrix x = to_matrix(features);
    if (x.cols() != arch.layer_widths.front())
        throw ShapeMismatch("train_dbn: feature width " + std::to_string(x.cols()) +
                            " != architecture input width " +
                            std::to_string(arch.layer_widths.front()));

    DbnModel model;
    model.architecture = arch;
    model.provenance.config = cfg;

    for (size_t k = 0; k + 1 < arch.layer_widths.size(); ++k) {
        nn::LayerParams trained =
            train_layer(x, arch.layer_widths[k + 1], cfg, k, nn::Activation::relu, progress);

        // Freeze the encoder half; the decoder is training scaffolding.
        nn::LayerParams frozen;
        frozen.w_enc = trained.w_enc;
        frozen.b_enc = trained.b_enc;
        frozen.activation = trained.activation;
        model.layers.push_back(std::move(frozen));
        model.layer_dropout.push_back(cfg.dropout_prob);

        if (k + 2 < arch.layer_widths.size()) {
            nn::Forward f = nn::dense_forward(model.layers.back(), x);
            scale_inplace(f.post, 1.0 - cfg.dropout_prob);
            x = std::move(f.post);
        }
    }
    return model;
}

Matrix encode_inference(const DbnModel& model, const Matrix& x) {
    if (model.layers.empty()) throw EmptyInput("model has no layers");
    if (x.cols() != model.input_width())
        throw ShapeMismatch("encode: input width " + std::to_string(x.cols()) +
                            " != model input width " + std::to_string(model.input_width()));
    Matrix cur = x;
    for (size_t l = 0; l < model.layers.size(); ++l) {
        nn::Forward f = nn::dense_forward(model.layers[l], cur);
        scale_inplace(f.post, 1.0 - model.layer_dropout[l]);
        cur = std::move(f.post);
    }
    return cur;
}

Signature encode_signature(const DbnModel& model, const corpus::FeatureVector& x) {
    Matrix row(1, x.bits.size());
    for (size_t j = 0; j < x.bits.size(); ++j) row(0, j) = x.bits[j];
    const Matrix out = encode_inference(model, row);
    Signature sig;
    sig.sample_id = x.sample_id;
    sig.label = x.label;
    sig.values.assign(out.row(0), out.row(0) + out.cols());
    return sig;
}

std::vector<Signature> sign_corpus(const DbnModel& model,
                                   const std::vector<corpus::FeatureVector>& features) {
    std::vector<Signature> sigs;
    sigs.reserve(features.size());
    for (const auto& fv : features) sigs.push_back(encode_signature(model, fv));
    return sigs;
}

double reconstruction_loss(const nn::LayerParams& layer, double dropout_prob, size_t layer_index,
                           const Matrix& inputs) {
    if (!layer.has_decoder()) throw EmptyInput("reconstruction_loss: layer has no decoder");
    return inference_reconstruction_loss(as_autoencoder(layer, layer_index), dropout_prob, inputs);
}

// --- model file ---

namespace {

constexpr char kMagic[] = "SIGFORGE-DBN";  // stored with its trailing NUL
constexpr uint32_t kFormatVersion = 1;

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

struct Reader {
    const std::string& data;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > data.size()) throw FormatError("model file truncated");
    }
    uint8_t u8() {
        need(1);
        return static_cast<uint8_t>(data[pos++]);
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(data[pos++])) << (8 * i);
        return v;
    }
    double f64() {
        need(8);
        uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(static_cast<uint8_t>(data[pos++])) << (8 * i);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

}  // namespace

void save_model(const std::filesystem::path& path, const DbnModel& model) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));  // includes '\0'
    put_u32(out, kFormatVersion);
    put_u32(out, static_cast<uint32_t>(model.layers.size()));
    for (size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        put_u32(out, static_cast<uint32_t>(layer.fan_in()));
        put_u32(out, static_cast<uint32_t>(layer.fan_out()));
        out.push_back(static_cast<char>(layer.activation));
        put_f64(out, model.layer_dropout[l]);
        for (double v : layer.w_enc.values()) put_f64(out, v);
        for (double v : layer.b_enc) put_f64(out, v);
    }
    put_u32(out, util::crc32(out));
    util::write_file_atomic(path, out);
}

DbnModel load_model(const std::filesystem::path& path) {
    const std::string data = util::read_text_file(path);
    if (data.size() < sizeof(kMagic) + 12) throw FormatError("model file too short: " + path.string());
    if (std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0)
        throw FormatError("not a sigforge model file: " + path.string());

    const uint32_t stored_crc = [&] {
        Reader r{data, data.size() - 4};
        return r.u32();
    }();
    if (util::crc32(data.data(), data.size() - 4) != stored_crc)
        throw ChecksumMismatch("model file CRC mismatch: " + path.string());

    Reader r{data, sizeof(kMagic)};
    const uint32_t version = r.u32();
    if (version != kFormatVersion)
        throw FormatError("unsupported model format version " + std::to_string(version));

    DbnModel model;
    const uint32_t n_layers = r.u32();
    for (uint32_t l = 0; l < n_layers; ++l) {
        const uint32_t fan_in = r.u32();
        const uint32_t fan_out = r.u32();
        const uint8_t act = r.u8();
        if (act > 2) throw FormatError("bad activation code in model file");
        model.layer_dropout.push_back(r.f64());

        nn::LayerParams layer;
        layer.activation = static_cast<nn::Activation>(act);
        layer.w_enc = Matrix(fan_in, fan_out);
        for (double& v : layer.w_enc.values()) v = r.f64();
        layer.b_enc.resize(fan_out);
        for (double& v : layer.b_enc) v = r.f64();
        model.layers.push_back(std::move(layer));

        if (l == 0) model.architecture.layer_widths.push_back(fan_in);
        model.architecture.layer_widths.push_back(fan_out);
    }
    if (model.layers.empty()) throw FormatError("model file has no layers");
    for (size_t l = 1; l < model.layers.size(); ++l)
        if (model.layers[l].fan_in() != model.layers[l - 1].fan_out())
            throw FormatError("model layer dimensions do not chain");
    return model;
}

// --- signature file ---

void write_signature_csv(const std::filesystem::path& path, const std::vector<Signature>& sigs) {
    const size_t width = sigs.empty() ? 0 : sigs.front().values.size();
    std::string out = "sample_id,label";
    for (size_t i = 0; i < width; ++i) out += ",v" + std::to_string(i);
    out += '\n';
    for (const auto& s : sigs) {
        if (s.values.size() != width) throw ShapeMismatch("signatures have mixed widths");
        out += s.sample_id;
        out += ',';
        out += s.label.empty() ? "-" : s.label;
        for (double v : s.values) {
            out += ',';
            out += util::fmt_g17(v);
        }
        out += '\n';
    }
    util::write_file_atomic(path, out);
}

std::vector<Signature> read_signature_csv(const std::filesystem::path& path) {
    std::istringstream in(util::read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) throw FormatError("signature file empty: " + path.string());
    if (line.rfind("sample_id,label", 0) != 0)
        throw FormatError("bad signature header: " + line);
    const size_t width = util::split(line, ',').size() - 2;

    std::vector<Signature> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = util::split(line, ',');
        if (fields.size() != width + 2) throw FormatError("bad signature line: " + line);
        Signature s;
        s.sample_id = fields[0];
        s.label = fields[1] == "-" ? "" : fields[1];
        s.values.reserve(width);
        for (size_t i = 0; i < width; ++i) s.values.push_back(std::stod(fields[2 + i]));
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace sigforge::dbn
