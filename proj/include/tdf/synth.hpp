#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tdf/random.hpp"
#include "tdf/tensorio.hpp"

namespace tdf {

// Temporal benchmark: every class has the same per-video mean, classes differ
// only in the oscillation frequency of dimension 1.
struct SyntheticSpec {
    std::uint32_t num_classes = 2;
    std::uint32_t videos_per_class = 60;
    int dims = 16;
    int min_frames = 80;
    int max_frames = 200;
    std::vector<double> frequencies{0.05, 0.20};  // cycles per frame, one per class
    double noise = 0.3;
    std::uint64_t seed = 42;

    void validate() const;
};

// key=value text with keys num_classes, videos_per_class, dims, min_frames,
// max_frames, frequencies (comma separated), noise, seed.
SyntheticSpec parse_synthetic_spec(const std::string& text);
SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);

// Frame n of a class-c video: dimension 1 is 1 + 0.5 sin(2 pi f_c n + phi)
// plus noise, the rest pure noise. N is uniform on [min_frames, max_frames]
// and phi uniform on [0, 2 pi) per video.
FeatureSequence synthesize_video(const SyntheticSpec& spec, std::uint32_t label, int frames, double phase,
                                 Rng& rng, std::string video_id);

// Writes features/<video_id>.tdfe and manifest.tsv under out_dir.
DatasetManifest generate_synthetic_dataset(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

}  // namespace tdf
