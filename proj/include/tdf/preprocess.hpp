#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

namespace tdf {

// v / ||v||, or v unchanged when it is the zero vector.
Eigen::VectorXd l2_normalize(const Eigen::VectorXd& v);
// Normalizes every column in place.
void l2_normalize_columns(Eigen::MatrixXd& m);

// v scaled to the given L2 norm. Throws DataError("cannot scale zero vector").
Eigen::VectorXd scale_to_norm(const Eigen::VectorXd& v, double target_norm);

struct PcaModel {
    Eigen::VectorXd mean;                // input_dims
    Eigen::MatrixXd components;          // output_dims x input_dims, orthonormal rows
    Eigen::VectorXd explained_variance;  // output_dims, non-increasing

    Eigen::Index input_dims() const { return components.cols(); }
    Eigen::Index output_dims() const { return components.rows(); }
};

// Fits on the columns of `descriptors` (D x M). output_dims above
// min(D, M-1) is clipped to that bound with a warning on std::clog.
// Each component's largest-magnitude entry is made positive.
PcaModel pca_fit(const Eigen::MatrixXd& descriptors, Eigen::Index output_dims);

Eigen::VectorXd pca_transform(const PcaModel& model, const Eigen::VectorXd& v);
// Column-wise transform of a D x N matrix.
Eigen::MatrixXd pca_transform_columns(const PcaModel& model, const Eigen::MatrixXd& m);
Eigen::VectorXd pca_reconstruct(const PcaModel& model, const Eigen::VectorXd& coords);

// "TDFP" v1: u32 D, u32 d, then mean, components (row-major) and explained
// variance as float64.
std::vector<std::uint8_t> encode_pca(const PcaModel& model);
PcaModel decode_pca(std::vector<std::uint8_t> bytes, const std::string& origin);
void save_pca(const PcaModel& model, const std::filesystem::path& path);
PcaModel load_pca(const std::filesystem::path& path);

}  // namespace tdf
