#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tdf/encode.hpp"

namespace tdf {

// One-vs-rest linear classifier; row c of `weights` scores class c.
struct LinearSvmModel {
    Eigen::MatrixXd weights;  // num_classes x P
    Eigen::VectorXd biases;   // num_classes
    double penalty = 1.0;

    Eigen::Index num_classes() const { return weights.rows(); }
    Eigen::Index dims() const { return weights.cols(); }

    void validate() const;
};

struct SvmOptions {
    double penalty = 100.0;
    int max_epochs = 1000;
    // Stop when the spread of projected dual gradients over an epoch drops below tol.
    double tol = 1e-4;
    std::uint64_t seed = 0;
};

struct LabeledVector {
    VideoVector vector;
    std::uint32_t label = 0;
};

struct SvmTrainResult {
    LinearSvmModel model;
    // Per class: primal objective of the retained iterate after each epoch.
    std::vector<std::vector<double>> objective_traces;
    // Per class: primal objective of the raw dual-coordinate-descent iterate.
    std::vector<std::vector<double>> raw_objective_traces;
    std::vector<int> epochs;
};

// For each class c, minimizes 1/2 ||w||^2 + C sum_i max(0, 1 - y_i (w.x_i + b))
// with y_i = +1 for label c and -1 otherwise. The bias is learned as the
// weight of a constant-1 feature, so it is regularized together with w.
// Dual coordinate descent visits examples in a seeded random order per epoch;
// the iterate with the lowest primal objective seen so far is retained.
SvmTrainResult train_linear_svm_traced(const Eigen::MatrixXd& features, std::span<const std::uint32_t> labels,
                                       Eigen::Index num_classes, const SvmOptions& opts);
LinearSvmModel train_linear_svm(std::span<const LabeledVector> train, Eigen::Index num_classes,
                                const SvmOptions& opts);

// (argmax class, per-class scores); ties go to the lowest class index.
std::pair<Eigen::Index, Eigen::VectorXd> predict(const LinearSvmModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

// 1/2 ||w||^2 + C sum_i max(0, 1 - y_i (w.x_i + b)) over the columns of
// `features` with signs y_i in {-1, +1}.
double hinge_objective(const Eigen::Ref<const Eigen::VectorXd>& w, double b, double penalty,
                       const Eigen::MatrixXd& features, std::span<const double> signs);

// "TDFM" v1: u32 num_classes, u32 P, float64 penalty, weights row-major,
// biases, all little-endian.
std::vector<std::uint8_t> encode_svm(const LinearSvmModel& model);
LinearSvmModel decode_svm(std::vector<std::uint8_t> bytes, const std::string& origin);
void save_svm(const LinearSvmModel& model, const std::filesystem::path& path);
LinearSvmModel load_svm(const std::filesystem::path& path);

}  // namespace tdf
