#include "tdf/encode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>

#include "tdf/binary_io.hpp"
#include "tdf/error.hpp"
#include "tdf/preprocess.hpp"

namespace tdf {

namespace {

void check_descriptors(const Eigen::MatrixXd& descriptors, Eigen::Index dims, const char* what) {
    if (descriptors.cols() < 1) throw DataError(std::string(what) + ": no descriptors");
    if (dims >= 0 && descriptors.rows() != dims) {
        throw DataError(std::string(what) + ": dimension mismatch, model has " + std::to_string(dims) +
                        ", descriptors have " + std::to_string(descriptors.rows()));
    }
}

}  // namespace

std::string_view to_string(EncodingMethod m) {
    switch (m) {
        case EncodingMethod::average: return "average";
        case EncodingMethod::llc: return "llc";
        case EncodingMethod::fv: return "fv";
        case EncodingMethod::vlad: return "vlad";
        case EncodingMethod::fused: return "fused";
    }
    return "?";
}

std::string_view to_string(Branch b) {
    switch (b) {
        case Branch::time: return "time";
        case Branch::dft: return "dft";
        case Branch::fused: return "fused";
    }
    return "?";
}

EncodingMethod parse_encoding_method(std::string_view s) {
    for (auto m : {EncodingMethod::average, EncodingMethod::llc, EncodingMethod::fv, EncodingMethod::vlad,
                   EncodingMethod::fused}) {
        if (s == to_string(m)) return m;
    }
    throw ConfigError("unknown encoder '" + std::string(s) + "'");
}

VideoVector average_pool(const Eigen::MatrixXd& descriptors, Branch branch) {
    check_descriptors(descriptors, -1, "average_pool");
    return {descriptors.rowwise().mean(), EncodingMethod::average, branch};
}

Eigen::VectorXd llc_encode(const Codebook& codebook, const LlcParams& params,
                           const Eigen::Ref<const Eigen::VectorXd>& x) {
    const Eigen::Index words = codebook.num_words();
    if (x.size() != codebook.dims()) throw DataError("llc_encode: dimension mismatch");
    if (params.neighbors < 1 || params.neighbors > words) {
        throw DataError("llc_encode: neighbors must lie in [1, codebook size]");
    }
    if (!(params.lambda >= 0.0)) throw DataError("llc_encode: lambda must be non-negative");

    std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(words));
    for (Eigen::Index c = 0; c < words; ++c) dist[c] = {(codebook.centroids.col(c) - x).squaredNorm(), c};
    const auto k = static_cast<std::size_t>(params.neighbors);
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());

    // Shifted neighbourhood: column j is b_j - x.
    Eigen::MatrixXd shifted(x.size(), static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < k; ++j) shifted.col(j) = codebook.centroids.col(dist[j].second) - x;
    Eigen::MatrixXd cov = shifted.transpose() * shifted;
    cov.diagonal().array() += params.lambda;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    const Eigen::VectorXd raw = ldlt.solve(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(k)));
    const double total = raw.sum();
    if (ldlt.info() != Eigen::Success || !raw.allFinite() || total == 0.0 || !std::isfinite(total)) {
        throw DataError("llc_encode: singular system");
    }

    Eigen::VectorXd code = Eigen::VectorXd::Zero(words);
    for (std::size_t j = 0; j < k; ++j) code(dist[j].second) = raw(static_cast<Eigen::Index>(j)) / total;
    return code;
}

VideoVector llc_pool(const Codebook& codebook, const LlcParams& params, const Eigen::MatrixXd& descriptors,
                     Branch branch) {
    check_descriptors(descriptors, codebook.dims(), "llc_pool");
    Eigen::VectorXd pooled = llc_encode(codebook, params, descriptors.col(0));
    for (Eigen::Index i = 1; i < descriptors.cols(); ++i) {
        pooled = pooled.cwiseMax(llc_encode(codebook, params, descriptors.col(i)));
    }
    return {std::move(pooled), EncodingMethod::llc, branch};
}

void power_l2_normalize(Eigen::VectorXd& v) {
    v = v.unaryExpr([](double a) { return std::copysign(std::sqrt(std::abs(a)), a); });
    const double norm = v.norm();
    if (norm > 0.0) v /= norm;
}

VideoVector fisher_encode(const GmmModel& model, const Eigen::MatrixXd& descriptors, Branch branch,
                          bool power_normalize) {
    check_descriptors(descriptors, model.dims(), "fisher_encode");
    const Eigen::Index dims = model.dims();
    const Eigen::Index kc = model.num_components();
    const Eigen::MatrixXd sigma = model.variances.cwiseSqrt();

    Eigen::MatrixXd first = Eigen::MatrixXd::Zero(dims, kc);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(dims, kc);
    for (Eigen::Index i = 0; i < descriptors.cols(); ++i) {
        const Eigen::VectorXd q = gmm_posteriors(model, descriptors.col(i));
        for (Eigen::Index k = 0; k < kc; ++k) {
            const Eigen::ArrayXd z = (descriptors.col(i) - model.means.col(k)).array() / sigma.col(k).array();
            first.col(k).array() += q(k) * z;
            second.col(k).array() += q(k) * (z.square() - 1.0);
        }
    }

    const auto n = static_cast<double>(descriptors.cols());
    Eigen::VectorXd out(2 * dims * kc);
    for (Eigen::Index k = 0; k < kc; ++k) {
        out.segment(k * dims, dims) = first.col(k) / (n * std::sqrt(model.weights(k)));
        out.segment((kc + k) * dims, dims) = second.col(k) / (n * std::sqrt(2.0 * model.weights(k)));
    }
    if (power_normalize) power_l2_normalize(out);
    return {std::move(out), EncodingMethod::fv, branch};
}

VideoVector vlad_encode(const Codebook& codebook, const Eigen::MatrixXd& descriptors, Branch branch,
                        bool power_normalize) {
    check_descriptors(descriptors, codebook.dims(), "vlad_encode");
    const Eigen::Index dims = codebook.dims();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dims * codebook.num_words());
    for (Eigen::Index i = 0; i < descriptors.cols(); ++i) {
        const Eigen::Index c = assign_nearest(codebook, descriptors.col(i));
        out.segment(c * dims, dims) += descriptors.col(i) - codebook.centroids.col(c);
    }
    if (power_normalize) power_l2_normalize(out);
    return {std::move(out), EncodingMethod::vlad, branch};
}

VideoVector fuse(std::span<const std::pair<VideoVector, double>> branches) {
    if (branches.empty()) throw DataError("fuse: no branches");
    Eigen::Index total = 0;
    for (const auto& [vec, norm] : branches) total += vec.values.size();

    VideoVector out{Eigen::VectorXd(total), EncodingMethod::fused, Branch::fused};
    Eigen::Index offset = 0;
    for (const auto& [vec, norm] : branches) {
        out.values.segment(offset, vec.values.size()) = scale_to_norm(vec.values, norm);
        offset += vec.values.size();
    }
    return out;
}

std::vector<std::uint8_t> encode_video_vector(const VideoVector& v) {
    bin::Writer w;
    w.magic("TDFV");
    w.u32(1);
    w.u8(static_cast<std::uint8_t>(v.method));
    w.u8(static_cast<std::uint8_t>(v.branch));
    w.u32(static_cast<std::uint32_t>(v.values.size()));
    for (Eigen::Index i = 0; i < v.values.size(); ++i) w.f64(v.values(i));
    return w.bytes();
}

VideoVector decode_video_vector(std::vector<std::uint8_t> bytes, const std::string& origin) {
    bin::Reader r(std::move(bytes), origin);
    r.expect_header("TDFV", 1);
    const std::uint8_t method = r.u8();
    const std::uint8_t branch = r.u8();
    if (method > static_cast<std::uint8_t>(EncodingMethod::fused) || branch > static_cast<std::uint8_t>(Branch::fused)) {
        throw DataError(origin + ": corrupt file (bad tag)");
    }
    const std::uint32_t size = r.u32();
    if (size == 0) throw DataError(origin + ": corrupt file (empty vector)");
    r.require(static_cast<std::size_t>(size) * 8);
    VideoVector v{Eigen::VectorXd(size), static_cast<EncodingMethod>(method), static_cast<Branch>(branch)};
    for (std::uint32_t i = 0; i < size; ++i) v.values(i) = r.f64();
    r.expect_end();
    if (!v.values.allFinite()) throw DataError(origin + ": non-finite values");
    return v;
}

void save_video_vector(const VideoVector& v, const std::filesystem::path& path) {
    bin::write_file(path, encode_video_vector(v));
}

VideoVector load_video_vector(const std::filesystem::path& path) {
    return decode_video_vector(bin::read_file(path), path.string());
}

}  // namespace tdf
