#include "tdf/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tdf/binary_io.hpp"
#include "tdf/error.hpp"
#include "tdf/random.hpp"

namespace tdf {

namespace {

struct BinaryResult {
    Eigen::VectorXd w;  // augmented: last entry is the bias
    std::vector<double> trace;
    std::vector<double> raw_trace;
    int epochs = 0;
};

BinaryResult solve_binary(const Eigen::MatrixXd& aug, std::span<const double> y, const SvmOptions& opts,
                          std::uint64_t seed) {
    const Eigen::Index n = aug.cols();
    const double c = opts.penalty;
    const Eigen::VectorXd qd = aug.colwise().squaredNorm().transpose();

    auto primal = [&](const Eigen::VectorXd& w) {
        const Eigen::VectorXd margins = aug.transpose() * w;
        double hinge = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) hinge += std::max(0.0, 1.0 - y[i] * margins(i));
        return 0.5 * w.squaredNorm() + c * hinge;
    };

    BinaryResult out;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(aug.rows());
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    out.w = w;
    double best = primal(w);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);

    for (int epoch = 0; epoch < opts.max_epochs; ++epoch) {
        rng.shuffle(order);
        double pg_max = -std::numeric_limits<double>::infinity();
        double pg_min = std::numeric_limits<double>::infinity();
        for (const Eigen::Index i : order) {
            const double g = y[i] * w.dot(aug.col(i)) - 1.0;
            double pg = g;
            if (alpha(i) == 0.0) {
                pg = std::min(g, 0.0);
            } else if (alpha(i) == c) {
                pg = std::max(g, 0.0);
            }
            pg_max = std::max(pg_max, pg);
            pg_min = std::min(pg_min, pg);
            if (std::abs(pg) > 1e-12) {
                const double old = alpha(i);
                alpha(i) = std::clamp(old - g / qd(i), 0.0, c);
                w += (alpha(i) - old) * y[i] * aug.col(i);
            }
        }
        ++out.epochs;

        const double obj = primal(w);
        out.raw_trace.push_back(obj);
        if (obj < best) {
            best = obj;
            out.w = w;
        }
        out.trace.push_back(best);
        if (pg_max - pg_min < opts.tol) break;
    }
    return out;
}

}  // namespace

void LinearSvmModel::validate() const {
    if (weights.rows() < 2) throw DataError("SVM model needs at least 2 classes");
    if (weights.cols() < 1) throw DataError("SVM model has zero dimension");
    if (biases.size() != weights.rows()) throw DataError("SVM bias count does not match class count");
    if (!weights.allFinite() || !biases.allFinite() || !std::isfinite(penalty)) {
        throw DataError("SVM model has non-finite parameters");
    }
    if (!(penalty > 0.0)) throw DataError("SVM penalty must be positive");
}

SvmTrainResult train_linear_svm_traced(const Eigen::MatrixXd& features, std::span<const std::uint32_t> labels,
                                       Eigen::Index num_classes, const SvmOptions& opts) {
    if (num_classes < 2) throw DataError("SVM training needs at least 2 classes");
    if (features.cols() != static_cast<Eigen::Index>(labels.size())) {
        throw DataError("SVM training: feature and label counts differ");
    }
    if (features.cols() < 1 || features.rows() < 1) throw DataError("SVM training: empty training set");
    if (!features.allFinite()) throw DataError("SVM training: non-finite features");
    if (!(opts.penalty > 0.0)) throw DataError("SVM penalty must be positive");
    if (opts.max_epochs < 1) throw DataError("SVM max_epochs must be positive");

    std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
    for (const auto l : labels) {
        if (l >= num_classes) throw DataError("SVM training: label " + std::to_string(l) + " out of range");
        ++counts[l];
    }
    for (Eigen::Index c = 0; c < num_classes; ++c) {
        if (counts[c] == 0) throw DataError("SVM training: class " + std::to_string(c) + " has no examples");
    }

    const Eigen::Index dims = features.rows();
    Eigen::MatrixXd aug(dims + 1, features.cols());
    aug.topRows(dims) = features;
    aug.row(dims).setOnes();

    SvmTrainResult result;
    result.model.penalty = opts.penalty;
    result.model.weights.resize(num_classes, dims);
    result.model.biases.resize(num_classes);

    std::vector<double> signs(labels.size());
    for (Eigen::Index c = 0; c < num_classes; ++c) {
        for (std::size_t i = 0; i < labels.size(); ++i) signs[i] = labels[i] == c ? 1.0 : -1.0;
        auto bin = solve_binary(aug, signs, opts, opts.seed + static_cast<std::uint64_t>(c));
        result.model.weights.row(c) = bin.w.head(dims).transpose();
        result.model.biases(c) = bin.w(dims);
        result.objective_traces.push_back(std::move(bin.trace));
        result.raw_objective_traces.push_back(std::move(bin.raw_trace));
        result.epochs.push_back(bin.epochs);
    }
    return result;
}

LinearSvmModel train_linear_svm(std::span<const LabeledVector> train, Eigen::Index num_classes,
                                const SvmOptions& opts) {
    if (train.empty()) throw DataError("SVM training: empty training set");
    const Eigen::Index dims = train.front().vector.values.size();
    Eigen::MatrixXd features(dims, static_cast<Eigen::Index>(train.size()));
    std::vector<std::uint32_t> labels(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (train[i].vector.values.size() != dims) throw DataError("SVM training: dimension mismatch between examples");
        features.col(static_cast<Eigen::Index>(i)) = train[i].vector.values;
        labels[i] = train[i].label;
    }
    return train_linear_svm_traced(features, labels, num_classes, opts).model;
}

std::pair<Eigen::Index, Eigen::VectorXd> predict(const LinearSvmModel& model,
                                                 const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (x.size() != model.dims()) {
        throw DataError("predict: dimension mismatch, model has " + std::to_string(model.dims()) + ", input has " +
                        std::to_string(x.size()));
    }
    Eigen::VectorXd scores = model.weights * x + model.biases;
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.size(); ++c) {
        if (scores(c) > scores(best)) best = c;
    }
    return {best, std::move(scores)};
}

double hinge_objective(const Eigen::Ref<const Eigen::VectorXd>& w, double b, double penalty,
                       const Eigen::MatrixXd& features, std::span<const double> signs) {
    if (features.rows() != w.size() || features.cols() != static_cast<Eigen::Index>(signs.size())) {
        throw DataError("hinge_objective: dimension mismatch");
    }
    double hinge = 0.0;
    for (Eigen::Index i = 0; i < features.cols(); ++i) {
        hinge += std::max(0.0, 1.0 - signs[i] * (w.dot(features.col(i)) + b));
    }
    return 0.5 * w.squaredNorm() + penalty * hinge;
}

std::vector<std::uint8_t> encode_svm(const LinearSvmModel& model) {
    bin::Writer w;
    w.magic("TDFM");
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(model.num_classes()));
    w.u32(static_cast<std::uint32_t>(model.dims()));
    w.f64(model.penalty);
    for (Eigen::Index c = 0; c < model.num_classes(); ++c) {
        for (Eigen::Index j = 0; j < model.dims(); ++j) w.f64(model.weights(c, j));
    }
    for (Eigen::Index c = 0; c < model.num_classes(); ++c) w.f64(model.biases(c));
    return w.bytes();
}

LinearSvmModel decode_svm(std::vector<std::uint8_t> bytes, const std::string& origin) {
    bin::Reader r(std::move(bytes), origin);
    r.expect_header("TDFM", 1);
    const std::uint32_t classes = r.u32();
    const std::uint32_t dims = r.u32();
    if (classes == 0 || dims == 0) throw DataError(origin + ": corrupt file (zero dimension)");
    r.require((1 + static_cast<std::size_t>(classes) * (static_cast<std::size_t>(dims) + 1)) * 8);
    LinearSvmModel model;
    model.penalty = r.f64();
    model.weights.resize(classes, dims);
    model.biases.resize(classes);
    for (std::uint32_t c = 0; c < classes; ++c) {
        for (std::uint32_t j = 0; j < dims; ++j) model.weights(c, j) = r.f64();
    }
    for (std::uint32_t c = 0; c < classes; ++c) model.biases(c) = r.f64();
    r.expect_end();
    try {
        model.validate();
    } catch (const DataError& e) {
        throw DataError(origin + ": " + e.what());
    }
    return model;
}

void save_svm(const LinearSvmModel& model, const std::filesystem::path& path) { bin::write_file(path, encode_svm(model)); }

LinearSvmModel load_svm(const std::filesystem::path& path) { return decode_svm(bin::read_file(path), path.string()); }

}  // namespace tdf
