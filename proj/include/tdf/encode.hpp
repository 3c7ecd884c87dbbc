#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tdf/codebook.hpp"

namespace tdf {

// Enumerator values are the tag bytes of the TDFV format.
enum class EncodingMethod : std::uint8_t { average = 0, llc = 1, fv = 2, vlad = 3, fused = 4 };
enum class Branch : std::uint8_t { time = 0, dft = 1, fused = 2 };

std::string_view to_string(EncodingMethod m);
std::string_view to_string(Branch b);
// Accepts "average", "llc", "fv", "vlad" (and "fused"). Throws ConfigError otherwise.
EncodingMethod parse_encoding_method(std::string_view s);

struct VideoVector {
    Eigen::VectorXd values;
    EncodingMethod method = EncodingMethod::average;
    Branch branch = Branch::time;
};

struct LlcParams {
    Eigen::Index neighbors = 5;
    double lambda = 1e-4;
};

// All encoders take descriptors one per column (dims x N).

VideoVector average_pool(const Eigen::MatrixXd& descriptors, Branch branch = Branch::time);

// Locality-constrained linear code of x over its `neighbors` nearest words.
// The returned length-K code sums to one and is zero off the neighbourhood.
Eigen::VectorXd llc_encode(const Codebook& codebook, const LlcParams& params,
                           const Eigen::Ref<const Eigen::VectorXd>& x);
// Element-wise max over the per-descriptor LLC codes.
VideoVector llc_pool(const Codebook& codebook, const LlcParams& params, const Eigen::MatrixXd& descriptors,
                     Branch branch = Branch::time);

// Improved Fisher vector: first-order blocks u_1..u_K followed by
// second-order blocks v_1..v_K (2dK values). With power_normalize the result
// goes through signed square root and L2 normalization.
VideoVector fisher_encode(const GmmModel& model, const Eigen::MatrixXd& descriptors, Branch branch = Branch::time,
                          bool power_normalize = true);

// Hard-assignment residual sums per word (dK values).
VideoVector vlad_encode(const Codebook& codebook, const Eigen::MatrixXd& descriptors, Branch branch = Branch::time,
                        bool power_normalize = true);

// Signed square root followed by L2 normalization; zero stays zero.
void power_l2_normalize(Eigen::VectorXd& v);

// Scales each branch to its target norm and concatenates them in order.
VideoVector fuse(std::span<const std::pair<VideoVector, double>> branches);

// "TDFV" v1: method tag byte, branch tag byte, u32 P, then P float64.
std::vector<std::uint8_t> encode_video_vector(const VideoVector& v);
VideoVector decode_video_vector(std::vector<std::uint8_t> bytes, const std::string& origin);
void save_video_vector(const VideoVector& v, const std::filesystem::path& path);
VideoVector load_video_vector(const std::filesystem::path& path);

}  // namespace tdf
