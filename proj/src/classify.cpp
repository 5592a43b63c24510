#include "sigforge/classify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

#include "sigforge/errors.hpp"
#include "sigforge/rng.hpp"

namespace sigforge::classify {

void LabeledVectorSet::validate() const {
    if (vectors.size() != labels.size())
        throw LengthMismatch("labeled set: vectors and labels differ in length");
    const std::set<std::string> classes(class_index.begin(), class_index.end());
    for (const auto& l : labels)
        if (!classes.count(l)) throw InvalidSpec("labeled set: label '" + l + "' not in class index");
    for (const auto& v : vectors)
        if (v.size() != vectors.front().size())
            throw ShapeMismatch("labeled set: vectors have mixed widths");
}

std::vector<std::string> sorted_unique_labels(const std::vector<std::string>& labels) {
    std::set<std::string> s(labels.begin(), labels.end());
    return {s.begin(), s.end()};
}

LabeledVectorSet LabeledVectorSet::from_signatures(const std::vector<dbn::Signature>& sigs) {
    LabeledVectorSet set;
    set.vectors.reserve(sigs.size());
    set.labels.reserve(sigs.size());
    for (const auto& s : sigs) {
        set.vectors.push_back(s.values);
        set.labels.push_back(s.label);
    }
    set.class_index = sorted_unique_labels(set.labels);
    set.validate();
    return set;
}

namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

}  // namespace

std::string knn_classify(const LabeledVectorSet& train, const std::vector<double>& query,
                         size_t k) {
    if (train.vectors.empty()) throw EmptyTrainingSet("knn: empty training set");
    if (k < 1) throw InvalidSpec("knn: k must be >= 1");
    if (query.size() != train.vectors.front().size())
        throw ShapeMismatch("knn: query width differs from training vectors");

    // Squared distance preserves the Euclidean order and its exact ties.
    std::vector<std::pair<double, size_t>> ranked(train.vectors.size());
    for (size_t i = 0; i < train.vectors.size(); ++i)
        ranked[i] = {squared_distance(train.vectors[i], query), i};
    std::sort(ranked.begin(), ranked.end());  // (distance, index) lexicographic

    const size_t kk = std::min(k, ranked.size());
    std::map<std::string, size_t> votes;
    for (size_t i = 0; i < kk; ++i) ++votes[train.labels[ranked[i].second]];
    size_t best = 0;
    for (const auto& [label, count] : votes) best = std::max(best, count);

    // Vote tie: the tied label whose member appears first in rank order.
    for (size_t i = 0; i < kk; ++i) {
        const std::string& label = train.labels[ranked[i].second];
        if (votes[label] == best) return label;
    }
    return {};  // unreachable
}

SvmModel train_linear_svm(const LabeledVectorSet& train, size_t epochs, double lambda,
                          uint64_t seed) {
    train.validate();
    if (train.class_index.size() < 2)
        throw SingleClass("svm: need at least two classes");
    if (train.vectors.empty()) throw EmptyTrainingSet("svm: empty training set");
    if (lambda <= 0.0) throw InvalidSpec("svm: lambda must be > 0");

    const size_t dim = train.vectors.front().size();
    const size_t n = train.vectors.size();
    SvmModel model;
    model.class_index = train.class_index;
    model.weights = Matrix(train.class_index.size(), dim);
    model.bias.assign(train.class_index.size(), 0.0);

    for (size_t c = 0; c < train.class_index.size(); ++c) {
        const std::string& target = train.class_index[c];
        Rng rng = Rng::stream(seed, streams::kSvmClassBase + c);
        double* w = model.weights.row(c);
        double& b = model.bias[c];
        std::vector<size_t> order(n);
        std::iota(order.begin(), order.end(), size_t{0});

        size_t t = 0;
        for (size_t epoch = 0; epoch < epochs; ++epoch) {
            rng.shuffle(order);
            for (size_t i : order) {
                ++t;
                const double eta = 1.0 / (lambda * static_cast<double>(t));
                const double y = train.labels[i] == target ? 1.0 : -1.0;
                const auto& x = train.vectors[i];
                double score = b;
                for (size_t j = 0; j < dim; ++j) score += w[j] * x[j];

                const double shrink = 1.0 - eta * lambda;
                for (size_t j = 0; j < dim; ++j) w[j] *= shrink;
                if (y * score < 1.0) {
                    for (size_t j = 0; j < dim; ++j) w[j] += eta * y * x[j];
                    b += eta * y;
                }
            }
        }
    }
    return model;
}

std::vector<double> svm_scores(const SvmModel& model, const std::vector<double>& x) {
    if (x.size() != model.weights.cols())
        throw ShapeMismatch("svm: input width differs from model");
    std::vector<double> scores(model.class_index.size());
    for (size_t c = 0; c < scores.size(); ++c) {
        const double* w = model.weights.row(c);
        double s = model.bias[c];
        for (size_t j = 0; j < x.size(); ++j) s += w[j] * x[j];
        scores[c] = s;
    }
    return scores;
}

std::string svm_predict(const SvmModel& model, const std::vector<double>& x) {
    const auto scores = svm_scores(model, x);
    size_t best = 0;
    for (size_t c = 1; c < scores.size(); ++c)
        if (scores[c] > scores[best]) best = c;  // ties keep class_index order
    return model.class_index[best];
}

SupervisedNet fine_tune(const dbn::DbnModel& model,
                        const std::vector<corpus::FeatureVector>& train,
                        const nn::TrainConfig& cfg, const ProgressFn& progress) {
    if (train.empty()) throw EmptyInput("fine_tune: no training samples");
    cfg.validate();
    for (const auto& fv : train)
        if (fv.label.empty())
            throw InvalidSpec("fine_tune: sample '" + fv.sample_id + "' is unlabeled");

    Matrix x = dbn::to_matrix(train);
    if (x.cols() != model.input_width())
        throw ShapeMismatch("fine_tune: feature width differs from model input width");

    SupervisedNet net;
    net.class_index = [&] {
        std::vector<std::string> labels(train.size());
        for (size_t i = 0; i < train.size(); ++i) labels[i] = train[i].label;
        return sorted_unique_labels(labels);
    }();
    net.dropout_prob = cfg.dropout_prob;
    net.hidden = model.layers;

    const size_t n_classes = net.class_index.size();
    net.output.w_enc = Matrix(model.signature_width(), n_classes);  // zero init
    net.output.b_enc.assign(n_classes, 0.0);
    net.output.activation = nn::Activation::linear;

    Matrix targets(train.size(), n_classes);
    {
        std::map<std::string, size_t> class_pos;
        for (size_t c = 0; c < n_classes; ++c) class_pos[net.class_index[c]] = c;
        for (size_t i = 0; i < train.size(); ++i) targets(i, class_pos[train[i].label]) = 1.0;
    }

    nn::Mlp mlp;
    mlp.loss_kind = nn::LossKind::softmax_xent;
    mlp.layers = net.hidden;
    mlp.layers.push_back(net.output);
    const size_t L = mlp.layers.size();

    Rng rng = Rng::stream(cfg.seed, streams::kFineTune);
    const size_t n = train.size();
    const size_t batches = (n + cfg.batch_size - 1) / cfg.batch_size;
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    nn::ActivationBuffer buf;
    nn::MlpGrads grads;
    std::vector<Matrix> masks(L);

    for (size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (size_t b = 0; b < batches; ++b) {
            const size_t begin = b * cfg.batch_size;
            const size_t count = std::min(cfg.batch_size, n - begin);
            Matrix noisy = gather_rows(x, order, begin, count);
            nn::corrupt_rows_inplace(noisy, cfg.noise_ratio, rng);
            const Matrix batch_targets = gather_rows(targets, order, begin, count);

            for (size_t l = 0; l + 1 < L; ++l)
                masks[l] = nn::dropout_mask_matrix(count, mlp.layers[l].fan_out(),
                                                   cfg.dropout_prob, rng);
            masks[L - 1] = Matrix();

            const double batch_loss =
                nn::mlp_loss_and_grads(mlp, noisy, batch_targets, buf, &masks, grads);
            if (!std::isfinite(batch_loss))
                throw NonFiniteLoss("fine_tune: loss diverged at epoch " + std::to_string(epoch));
            epoch_loss += batch_loss;

            for (size_t l = 0; l < L; ++l) {
                nn::sgd_step(mlp.layers[l].w_enc, grads.w[l], cfg.lr_start, cfg.l2_coeff);
                nn::sgd_step(mlp.layers[l].b_enc, grads.b[l], cfg.lr_start);
            }
        }
        if (progress) progress(epoch, epoch_loss / static_cast<double>(batches));
    }

    for (size_t l = 0; l + 1 < L; ++l) net.hidden[l] = std::move(mlp.layers[l]);
    net.output = std::move(mlp.layers[L - 1]);
    return net;
}

Prediction predict(const SupervisedNet& net, const corpus::FeatureVector& x) {
    if (net.hidden.empty()) throw EmptyInput("predict: net has no layers");
    if (x.bits.size() != net.hidden.front().fan_in())
        throw ShapeMismatch("predict: input width differs from net");

    Matrix cur(1, x.bits.size());
    for (size_t j = 0; j < x.bits.size(); ++j) cur(0, j) = x.bits[j];
    for (const auto& layer : net.hidden) {
        nn::Forward f = nn::dense_forward(layer, cur);
        scale_inplace(f.post, 1.0 - net.dropout_prob);
        cur = std::move(f.post);
    }
    nn::Forward out = nn::dense_forward(net.output, cur);
    const Matrix probs = nn::softmax_rows(out.pre);

    Prediction p;
    p.probabilities.assign(probs.row(0), probs.row(0) + probs.cols());
    size_t best = 0;
    for (size_t c = 1; c < p.probabilities.size(); ++c)
        if (p.probabilities[c] > p.probabilities[best]) best = c;
    p.label = net.class_index[best];
    return p;
}

EvalReport evaluate(const std::vector<std::string>& predictions,
                    const std::vector<std::string>& truth) {
    if (predictions.size() != truth.size())
        throw LengthMismatch("evaluate: predictions and truth differ in length");

    std::set<std::string> classes(truth.begin(), truth.end());
    classes.insert(predictions.begin(), predictions.end());

    EvalReport report;
    report.class_index.assign(classes.begin(), classes.end());
    std::map<std::string, size_t> pos;
    for (size_t c = 0; c < report.class_index.size(); ++c) pos[report.class_index[c]] = c;

    const size_t n_classes = report.class_index.size();
    report.confusion.assign(n_classes, std::vector<size_t>(n_classes, 0));
    size_t correct = 0;
    for (size_t i = 0; i < truth.size(); ++i) {
        ++report.confusion[pos[truth[i]]][pos[predictions[i]]];
        if (truth[i] == predictions[i]) ++correct;
    }
    report.accuracy = truth.empty() ? 0.0 : static_cast<double>(correct) / truth.size();

    report.per_class_recall.resize(n_classes);
    for (size_t c = 0; c < n_classes; ++c) {
        const size_t row_total =
            std::accumulate(report.confusion[c].begin(), report.confusion[c].end(), size_t{0});
        report.per_class_recall[c] =
            row_total == 0 ? 0.0 : static_cast<double>(report.confusion[c][c]) / row_total;
    }
    return report;
}

std::string format_report(const EvalReport& report) {
    char acc[32];
    std::snprintf(acc, sizeof(acc), "accuracy=%.4f", report.accuracy);
    std::string out = acc;
    out += "\n\ntruth\\pred";
    for (const auto& c : report.class_index) out += "\t" + c;
    out += '\n';
    for (size_t i = 0; i < report.class_index.size(); ++i) {
        out += report.class_index[i];
        for (size_t j = 0; j < report.class_index.size(); ++j)
            out += '\t' + std::to_string(report.confusion[i][j]);
        out += '\n';
    }
    return out;
}

}  // namespace sigforge::classify
