#include "tdf/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include <Eigen/Eigenvalues>

#include "tdf/binary_io.hpp"
#include "tdf/error.hpp"

namespace tdf {

Eigen::VectorXd l2_normalize(const Eigen::VectorXd& v) {
    const double norm = v.norm();
    if (norm > 0.0) return v / norm;
    return v;
}

void l2_normalize_columns(Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.cols(); ++i) {
        const double norm = m.col(i).norm();
        if (norm > 0.0) m.col(i) /= norm;
    }
}

Eigen::VectorXd scale_to_norm(const Eigen::VectorXd& v, double target_norm) {
    if (!(target_norm > 0.0)) throw DataError("target norm must be positive");
    const double norm = v.norm();
    if (!(norm > 0.0)) throw DataError("cannot scale zero vector");
    return v * (target_norm / norm);
}

PcaModel pca_fit(const Eigen::MatrixXd& descriptors, Eigen::Index output_dims) {
    const Eigen::Index dims = descriptors.rows();
    const Eigen::Index count = descriptors.cols();
    if (count < 2) throw DataError("PCA needs at least 2 descriptors");
    if (output_dims < 1) throw DataError("PCA output dimension must be positive");

    const Eigen::Index bound = std::min(dims, count - 1);
    if (output_dims > bound) {
        std::clog << "warning: PCA output dimension " << output_dims << " clipped to " << bound << '\n';
        output_dims = bound;
    }

    PcaModel model;
    model.mean = descriptors.rowwise().mean();
    const Eigen::MatrixXd centered = descriptors.colwise() - model.mean;
    const Eigen::MatrixXd cov = (centered * centered.transpose()) / static_cast<double>(count - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw DataError("PCA eigendecomposition failed");

    // Eigenvalues come back ascending.
    model.components.resize(output_dims, dims);
    model.explained_variance.resize(output_dims);
    for (Eigen::Index j = 0; j < output_dims; ++j) {
        const Eigen::Index src = dims - 1 - j;
        Eigen::VectorXd axis = solver.eigenvectors().col(src);
        Eigen::Index peak = 0;
        axis.cwiseAbs().maxCoeff(&peak);
        if (axis(peak) < 0.0) axis = -axis;
        model.components.row(j) = axis.transpose();
        model.explained_variance(j) = std::max(0.0, solver.eigenvalues()(src));
    }
    return model;
}

Eigen::VectorXd pca_transform(const PcaModel& model, const Eigen::VectorXd& v) {
    if (v.size() != model.input_dims()) {
        throw DataError("PCA input dimension mismatch: model expects " + std::to_string(model.input_dims()) +
                        ", got " + std::to_string(v.size()));
    }
    return model.components * (v - model.mean);
}

Eigen::MatrixXd pca_transform_columns(const PcaModel& model, const Eigen::MatrixXd& m) {
    if (m.rows() != model.input_dims()) {
        throw DataError("PCA input dimension mismatch: model expects " + std::to_string(model.input_dims()) +
                        ", got " + std::to_string(m.rows()));
    }
    return model.components * (m.colwise() - model.mean);
}

Eigen::VectorXd pca_reconstruct(const PcaModel& model, const Eigen::VectorXd& coords) {
    if (coords.size() != model.output_dims()) throw DataError("PCA coordinate dimension mismatch");
    return model.components.transpose() * coords + model.mean;
}

std::vector<std::uint8_t> encode_pca(const PcaModel& model) {
    bin::Writer w;
    w.magic("TDFP");
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(model.input_dims()));
    w.u32(static_cast<std::uint32_t>(model.output_dims()));
    for (Eigen::Index k = 0; k < model.mean.size(); ++k) w.f64(model.mean(k));
    for (Eigen::Index r = 0; r < model.components.rows(); ++r) {
        for (Eigen::Index c = 0; c < model.components.cols(); ++c) w.f64(model.components(r, c));
    }
    for (Eigen::Index j = 0; j < model.explained_variance.size(); ++j) w.f64(model.explained_variance(j));
    return w.bytes();
}

PcaModel decode_pca(std::vector<std::uint8_t> bytes, const std::string& origin) {
    bin::Reader r(std::move(bytes), origin);
    r.expect_header("TDFP", 1);
    const std::uint32_t dims = r.u32();
    const std::uint32_t out = r.u32();
    if (dims == 0 || out == 0 || out > dims) throw DataError(origin + ": corrupt file (bad dimensions)");
    r.require((static_cast<std::size_t>(dims) + static_cast<std::size_t>(out) * dims + out) * 8);

    PcaModel model;
    model.mean.resize(dims);
    model.components.resize(out, dims);
    model.explained_variance.resize(out);
    for (std::uint32_t k = 0; k < dims; ++k) model.mean(k) = r.f64();
    for (std::uint32_t i = 0; i < out; ++i) {
        for (std::uint32_t k = 0; k < dims; ++k) model.components(i, k) = r.f64();
    }
    for (std::uint32_t i = 0; i < out; ++i) model.explained_variance(i) = r.f64();
    r.expect_end();
    if (!model.mean.allFinite() || !model.components.allFinite() || !model.explained_variance.allFinite()) {
        throw DataError(origin + ": non-finite values");
    }
    return model;
}

void save_pca(const PcaModel& model, const std::filesystem::path& path) { bin::write_file(path, encode_pca(model)); }

PcaModel load_pca(const std::filesystem::path& path) { return decode_pca(bin::read_file(path), path.string()); }

}  // namespace tdf
