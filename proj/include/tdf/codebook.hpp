#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

namespace tdf {

// K visual words stored one per column (dims x num_words).
struct Codebook {
    Eigen::MatrixXd centroids;

    Eigen::Index num_words() const { return centroids.cols(); }
    Eigen::Index dims() const { return centroids.rows(); }

    // K >= 1, finite, and no two centroids within 1e-12 of each other.
    void validate() const;
};

struct KmeansOptions {
    Eigen::Index num_words = 16;
    std::uint64_t seed = 0;
    int max_iters = 100;
};

struct KmeansResult {
    Codebook codebook;
    // Within-cluster sum of squares after each assignment step.
    std::vector<double> objective_trace;
    std::vector<Eigen::Index> assignments;
};

// Lloyd's algorithm with k-means++ seeding over the columns of `descriptors`
// (dims x M). Stops when assignments repeat or after max_iters. Empty
// clusters are reseeded to the point farthest from its own centroid.
KmeansResult kmeans_fit_traced(const Eigen::MatrixXd& descriptors, const KmeansOptions& opts);
Codebook kmeans_fit(const Eigen::MatrixXd& descriptors, const KmeansOptions& opts);

// Index of the nearest centroid; ties go to the lowest index.
Eigen::Index assign_nearest(const Codebook& codebook, const Eigen::Ref<const Eigen::VectorXd>& x);

// Diagonal-covariance Gaussian mixture, parameters stored one component per column.
struct GmmModel {
    Eigen::VectorXd weights;    // K, positive, sums to 1
    Eigen::MatrixXd means;      // dims x K
    Eigen::MatrixXd variances;  // dims x K, each >= variance_floor
    double variance_floor = 0.0;

    Eigen::Index num_components() const { return weights.size(); }
    Eigen::Index dims() const { return means.rows(); }

    void validate() const;
};

struct GmmOptions {
    Eigen::Index num_components = 16;
    std::uint64_t seed = 0;
    int max_iters = 100;
    double tol = 1e-6;
    int kmeans_iters = 50;
};

struct GmmResult {
    GmmModel model;
    // Average per-descriptor log-likelihood at each E-step.
    std::vector<double> log_likelihood_trace;
};

// EM initialized from k-means under the same seed. Stops when the average
// log-likelihood improves by less than tol or after max_iters M-steps.
GmmResult gmm_fit_traced(const Eigen::MatrixXd& descriptors, const GmmOptions& opts);
GmmModel gmm_fit(const Eigen::MatrixXd& descriptors, const GmmOptions& opts);

// Component posteriors, evaluated in log space.
Eigen::VectorXd gmm_posteriors(const GmmModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);
// log p(x) under the mixture.
double gmm_log_density(const GmmModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

// "TDFC" v1: u32 K, u32 d, centroids word by word as float64.
std::vector<std::uint8_t> encode_codebook(const Codebook& codebook);
Codebook decode_codebook(std::vector<std::uint8_t> bytes, const std::string& origin);
void save_codebook(const Codebook& codebook, const std::filesystem::path& path);
Codebook load_codebook(const std::filesystem::path& path);

// "TDFG" v1: u32 K, u32 d, then weights, means, variances (component by
// component) and the variance floor as float64.
std::vector<std::uint8_t> encode_gmm(const GmmModel& model);
GmmModel decode_gmm(std::vector<std::uint8_t> bytes, const std::string& origin);
void save_gmm(const GmmModel& model, const std::filesystem::path& path);
GmmModel load_gmm(const std::filesystem::path& path);

}  // namespace tdf
