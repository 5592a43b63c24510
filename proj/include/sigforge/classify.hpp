#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sigforge/corpus.hpp"
#include "sigforge/dbn.hpp"
#include "sigforge/matrix.hpp"
#include "sigforge/nn.hpp"

namespace sigforge::classify {

/// Parallel vectors/labels plus a stable ordered class list. All argmax and
/// vote ties resolve in class_index order.
struct LabeledVectorSet {
    std::vector<std::vector<double>> vectors;
    std::vector<std::string> labels;
    std::vector<std::string> class_index;

    void validate() const;
    static LabeledVectorSet from_signatures(const std::vector<dbn::Signature>& sigs);
};

std::vector<std::string> sorted_unique_labels(const std::vector<std::string>& labels);

/// Majority label among the k nearest training points (Euclidean).
/// Distance ties prefer the lower training index; vote ties go to the label
/// of the nearest member among the tied ones.
std::string knn_classify(const LabeledVectorSet& train, const std::vector<double>& query,
                         size_t k);

/// One-vs-rest linear SVM trained by hinge-loss subgradient descent with the
/// step size 1/(lambda*t); the bias is not regularized.
struct SvmModel {
    Matrix weights;  // one row per class
    std::vector<double> bias;
    std::vector<std::string> class_index;
};

SvmModel train_linear_svm(const LabeledVectorSet& train, size_t epochs, double lambda,
                          uint64_t seed);
std::string svm_predict(const SvmModel& model, const std::vector<double>& x);
std::vector<double> svm_scores(const SvmModel& model, const std::vector<double>& x);

/// DBN encoder stack plus a softmax output layer, trained jointly.
struct SupervisedNet {
    std::vector<nn::LayerParams> hidden;
    nn::LayerParams output;  // linear pre-activations; softmax applied at the loss
    std::vector<std::string> class_index;
    double dropout_prob = 0.5;
};

using ProgressFn = std::function<void(size_t epoch, double loss)>;

/// Initializes hidden layers from the DBN, zero-initializes the softmax
/// layer, then trains every layer with cross-entropy under input corruption
/// (cfg.noise_ratio) and per-hidden-layer dropout, at the constant rate
/// cfg.lr_start. cfg.epochs == 0 returns the untrained net (uniform
/// predictions).
SupervisedNet fine_tune(const dbn::DbnModel& model,
                        const std::vector<corpus::FeatureVector>& train,
                        const nn::TrainConfig& cfg, const ProgressFn& progress = nullptr);

struct Prediction {
    std::string label;
    std::vector<double> probabilities;  // class_index order, sums to 1
};

Prediction predict(const SupervisedNet& net, const corpus::FeatureVector& x);

struct EvalReport {
    double accuracy = 0.0;
    std::vector<std::string> class_index;
    std::vector<std::vector<size_t>> confusion;  // [truth][predicted]
    std::vector<double> per_class_recall;
};

EvalReport evaluate(const std::vector<std::string>& predictions,
                    const std::vector<std::string>& truth);

/// `accuracy=<4 decimals>` line followed by the confusion-matrix table.
std::string format_report(const EvalReport& report);

}  // namespace sigforge::classify
