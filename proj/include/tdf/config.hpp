#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "tdf/encode.hpp"

namespace tdf {

// Experiment hyperparameters. The text form is flat `key=value` lines whose
// keys are exactly the field names below; `#` starts a comment line.
struct PipelineConfig {
    std::optional<Eigen::Index> pca_dims;  // absent: no PCA
    int spectrum_length = 500;

    EncodingMethod time_encoder = EncodingMethod::average;
    EncodingMethod dft_encoder = EncodingMethod::average;
    // Branch-disable switches; a disabled branch is neither fitted nor encoded.
    bool use_time_branch = true;
    bool use_dft_branch = true;

    // Present iff the branch encoder needs a codebook (llc, fv, vlad).
    std::optional<Eigen::Index> time_codebook_size;
    std::optional<Eigen::Index> dft_codebook_size;
    // Present iff either encoder is llc.
    std::optional<LlcParams> llc;

    double fusion_time_norm = 0.6;
    double fusion_dft_norm = 0.4;
    // Signed square root + L2 on FV and VLAD outputs.
    bool power_normalize = true;

    double svm_c = 100.0;
    int svm_max_epochs = 1000;
    double svm_tol = 1e-4;

    int kmeans_max_iters = 100;
    int gmm_max_iters = 100;
    double gmm_tol = 1e-6;

    double train_fraction = 2.0 / 3.0;
    std::size_t pca_sample_cap = 100000;
    std::size_t codebook_sample_cap = 100000;
    std::uint64_t seed = 42;

    // Fills missing encoder-specific fields with their defaults
    // (LLC 1024 words, FV and VLAD 16; LLC k = 5, lambda = 1e-4).
    void resolve();
    // Throws ConfigError on any violated constraint.
    void validate() const;
};

// Parses, resolves and validates. Unknown or repeated keys are errors.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);
// Canonical text form; parse_config(format_config(c)) reproduces c.
std::string format_config(const PipelineConfig& config);

// Emotion setup: PCA to 1024, L = 500, FV on both branches with 16
// components, norms 3/5 and 2/5, C = 100.
PipelineConfig emotion_profile();
// Action setup: L = 200, FV on both branches with 32 components, unit
// branch norms, C = 1.
PipelineConfig action_profile();

bool needs_codebook(EncodingMethod m);

}  // namespace tdf
