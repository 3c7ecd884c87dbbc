#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace tdf {

// Frame-level descriptors of one video. Column i is the descriptor of frame i,
// so the matrix is dims x frames.
class FeatureSequence {
public:
    // Throws DataError on an empty matrix or non-finite entries.
    FeatureSequence(Eigen::MatrixXd values, std::string video_id = {});

    Eigen::Index dims() const { return values_.rows(); }
    Eigen::Index frames() const { return values_.cols(); }
    const Eigen::MatrixXd& values() const { return values_; }
    const std::string& video_id() const { return video_id_; }

private:
    Eigen::MatrixXd values_;
    std::string video_id_;
};

// "TDFE" v1: magic, u32 version, u32 D, u32 N, then D*N float32 values frame
// by frame. All integers and floats little-endian.
std::vector<std::uint8_t> encode_feature_sequence(const FeatureSequence& seq);
FeatureSequence decode_feature_sequence(std::vector<std::uint8_t> bytes, const std::string& origin);

void write_feature_sequence(const FeatureSequence& seq, const std::filesystem::path& path);
// The returned sequence takes the file stem as its video_id.
FeatureSequence read_feature_sequence(const std::filesystem::path& path);

struct ManifestEntry {
    std::string video_id;
    std::filesystem::path feature_path;
    std::uint32_t label = 0;

    bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::uint32_t num_classes = 0;

    // Unique ids, labels < num_classes, every class present.
    void validate() const;
    std::vector<std::size_t> class_counts() const;
};

// One "video_id<TAB>feature_path<TAB>label" line per entry; blank lines are
// skipped. Relative feature paths are resolved against the manifest's
// directory.
DatasetManifest read_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir);
// Paths are written relative to the manifest's directory when they live under it.
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Stratified split. Each class contributes ceil(train_fraction * size)
// entries to train, clamped to [1, size-1] so both sides keep every class.
// Output entries keep their original manifest order.
std::pair<DatasetManifest, DatasetManifest> split_train_test(const DatasetManifest& manifest,
                                                             double train_fraction,
                                                             std::uint64_t seed);

}  // namespace tdf
