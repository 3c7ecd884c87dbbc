#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tdf/codebook.hpp"
#include "tdf/config.hpp"
#include "tdf/encode.hpp"
#include "tdf/preprocess.hpp"
#include "tdf/svm.hpp"
#include "tdf/tensorio.hpp"

namespace tdf {

// Unsupervised model for one branch: a codebook (llc, vlad), a GMM (fv), or
// nothing (average pooling or disabled branch).
struct BranchModel {
    std::optional<Codebook> codebook;
    std::optional<GmmModel> gmm;
};

struct ModelBundle {
    std::optional<PcaModel> pca;
    BranchModel time;
    BranchModel dft;
};

// Bundle directory layout: pca.tdfp, time.tdfc | time.tdfg, dft.tdfc | dft.tdfg.
// Only the files the bundle holds are written.
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir);
// Loads the files `config` calls for and checks them against it.
ModelBundle load_bundle(const PipelineConfig& config, const std::filesystem::path& dir);
// Throws DataError naming the stage when the bundle does not fit the config
// or frames of `input_dims` dimensions.
void check_bundle(const PipelineConfig& config, const ModelBundle& bundle, std::optional<Eigen::Index> input_dims = {});

// L2-normalized frames, PCA-projected when the bundle has a PCA model.
Eigen::MatrixXd prepare_frames(const ModelBundle& bundle, const FeatureSequence& seq);

// Frames -> (time encoder, DFT spectrum -> dft encoder) -> fused vector.
VideoVector encode_video(const PipelineConfig& config, const ModelBundle& bundle, const FeatureSequence& seq);

// Reads every manifest entry, using the manifest's video_id. All sequences
// must share one dimension.
std::vector<FeatureSequence> load_sequences(const DatasetManifest& manifest);

// PCA on a seeded subsample of training frames, then per-branch codebooks or
// GMMs on (subsampled) training descriptors of that branch.
ModelBundle fit_models(const PipelineConfig& config, const DatasetManifest& train);
ModelBundle fit_models(const PipelineConfig& config, const std::vector<FeatureSequence>& train);

// Encodes every video, in parallel across videos; output order follows input.
std::vector<LabeledVector> encode_dataset(const PipelineConfig& config, const ModelBundle& bundle,
                                          const std::vector<FeatureSequence>& videos,
                                          const std::vector<std::uint32_t>& labels);

SvmOptions svm_options(const PipelineConfig& config);

struct EvaluationReport {
    double overall_accuracy = 0.0;
    std::vector<double> per_class_accuracy;
    // Row = true class, column = predicted class.
    std::vector<std::vector<std::uint64_t>> confusion;
};

EvaluationReport evaluate(const LinearSvmModel& model, const std::vector<LabeledVector>& test);

// overall_accuracy, per_class_accuracy and one confusion line per true class,
// TAB-separated with six decimals.
std::string format_report(const EvaluationReport& report);

struct ExperimentResult {
    std::vector<EvaluationReport> runs;
    double mean_accuracy = 0.0;
};

// Repetition r (1-based) splits with seed + r, then fits, encodes, trains
// and evaluates with the config seed.
ExperimentResult run_repeated_experiment(const PipelineConfig& config, const DatasetManifest& manifest,
                                         int repetitions);
// Header, one row per run, then the mean row.
std::string format_experiment(const ExperimentResult& result);

// Staged helpers used by the CLI. An encoded directory holds one
// <video_id>.tdfv per video and an index.tsv manifest pointing at them.
DatasetManifest encode_to_directory(const PipelineConfig& config, const ModelBundle& bundle,
                                    const DatasetManifest& manifest, const std::filesystem::path& out_dir);
std::vector<LabeledVector> load_encoded(const DatasetManifest& encoded);

}  // namespace tdf
