#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "sigforge/corpus.hpp"
#include "sigforge/matrix.hpp"
#include "sigforge/nn.hpp"

namespace sigforge::dbn {

struct Architecture {
    std::vector<size_t> layer_widths;  // first = input width, last = signature length

    void validate() const;  // throws InvalidSpec
    size_t n_layers() const { return layer_widths.size() - 1; }
};

struct Provenance {
    uint32_t dictionary_crc = 0;
    nn::TrainConfig config;
};

/// Frozen ordered encoder stack. Immutable once built; encoding through it
/// is safe to run concurrently.
struct DbnModel {
    std::vector<nn::LayerParams> layers;  // encoder halves only
    std::vector<double> layer_dropout;    // per-layer (1-p) inference scaling source
    Architecture architecture;
    Provenance provenance;  // in-memory only, recorded in run manifests

    size_t input_width() const { return layers.front().fan_in(); }
    size_t signature_width() const { return layers.back().fan_out(); }
};

struct Signature {
    std::string sample_id;
    std::vector<double> values;
    std::string label;
};

struct LayerProgress {
    size_t layer = 0;
    size_t epoch = 0;  // 0 = state at initialization
    double loss = 0.0;
};
using ProgressFn = std::function<void(const LayerProgress&)>;

/// Trains one denoising autoencoder on `inputs` (one row per sample) and
/// returns encoder + decoder. The reconstruction target is always the
/// uncorrupted input. Layer 0 decodes through sigmoid + binary cross-entropy
/// (bit inputs); deeper layers decode linearly with squared error.
/// The reported loss is measured in inference mode on a fixed tenth of the
/// inputs.
nn::LayerParams train_layer(const Matrix& inputs, size_t fan_out, const nn::TrainConfig& cfg,
                            size_t layer_index,
                            nn::Activation encoder_activation = nn::Activation::relu,
                            const ProgressFn& progress = nullptr);

/// Greedy layer-wise training: each layer is trained on the inference-mode
/// (scaled) output of the frozen layers before it. Labels are never read.
DbnModel train_dbn(const std::vector<corpus::FeatureVector>& features, const Architecture& arch,
                   const nn::TrainConfig& cfg, const ProgressFn& progress = nullptr);

/// Inference pass: no corruption, no masks; every layer output is scaled by
/// (1 - dropout_prob) recorded for that layer.
Matrix encode_inference(const DbnModel& model, const Matrix& x);

Signature encode_signature(const DbnModel& model, const corpus::FeatureVector& x);
std::vector<Signature> sign_corpus(const DbnModel& model,
                                   const std::vector<corpus::FeatureVector>& features);

/// Mean inference-mode reconstruction loss of one trained layer over `inputs`.
double reconstruction_loss(const nn::LayerParams& layer, double dropout_prob,
                           size_t layer_index, const Matrix& inputs);

Matrix to_matrix(const std::vector<corpus::FeatureVector>& features);

// Binary model file: magic, version, layer count, per-layer dims/activation/
// dropout followed by raw little-endian doubles, then a CRC32 trailer.
// Round-trips are bit-exact.
void save_model(const std::filesystem::path& path, const DbnModel& model);
DbnModel load_model(const std::filesystem::path& path);

void write_signature_csv(const std::filesystem::path& path, const std::vector<Signature>& sigs);
std::vector<Signature> read_signature_csv(const std::filesystem::path& path);

}  // namespace sigforge::dbn
