#include "tdf/synth.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

#include "tdf/error.hpp"

namespace tdf {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

template <class T>
T number(const std::string& key, const std::string& value) {
    T out{};
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
        throw ConfigError("synthetic spec key '" + key + "': cannot parse '" + value + "'");
    }
    return out;
}

}  // namespace

void SyntheticSpec::validate() const {
    auto fail = [](const std::string& why) { throw ConfigError("invalid synthetic spec: " + why); };
    if (num_classes < 2) fail("num_classes must be at least 2");
    if (videos_per_class < 2) fail("videos_per_class must be at least 2");
    if (dims < 1) fail("dims must be positive");
    if (min_frames < 16 || max_frames > 4096 || min_frames > max_frames) {
        fail("frame range must satisfy 16 <= min_frames <= max_frames <= 4096");
    }
    if (frequencies.size() != num_classes) fail("need exactly one frequency per class");
    for (double f : frequencies) {
        if (!(f > 0.0 && f < 0.5)) fail("frequencies must lie in (0, 0.5) cycles per frame");
    }
    if (!(noise >= 0.0) || !std::isfinite(noise)) fail("noise must be non-negative");
}

SyntheticSpec parse_synthetic_spec(const std::string& text) {
    SyntheticSpec s;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError("synthetic spec line " + std::to_string(line_no) + ": expected key=value");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (!seen.insert(key).second) throw ConfigError("synthetic spec: repeated key '" + key + "'");

        if (key == "num_classes") {
            s.num_classes = number<std::uint32_t>(key, value);
        } else if (key == "videos_per_class") {
            s.videos_per_class = number<std::uint32_t>(key, value);
        } else if (key == "dims") {
            s.dims = number<int>(key, value);
        } else if (key == "min_frames") {
            s.min_frames = number<int>(key, value);
        } else if (key == "max_frames") {
            s.max_frames = number<int>(key, value);
        } else if (key == "noise") {
            s.noise = number<double>(key, value);
        } else if (key == "seed") {
            s.seed = number<std::uint64_t>(key, value);
        } else if (key == "frequencies") {
            s.frequencies.clear();
            std::stringstream list(value);
            std::string item;
            while (std::getline(list, item, ',')) s.frequencies.push_back(number<double>(key, trim(item)));
        } else {
            throw ConfigError("synthetic spec line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    s.validate();
    return s;
}

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open synthetic spec");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_synthetic_spec(ss.str());
}

FeatureSequence synthesize_video(const SyntheticSpec& spec, std::uint32_t label, int frames, double phase, Rng& rng,
                                 std::string video_id) {
    const double freq = spec.frequencies.at(label);
    Eigen::MatrixXd values(spec.dims, frames);
    for (int n = 0; n < frames; ++n) {
        values(0, n) = 1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * freq * n + phase) + spec.noise * rng.normal();
        for (int k = 1; k < spec.dims; ++k) values(k, n) = spec.noise * rng.normal();
    }
    return FeatureSequence(std::move(values), std::move(video_id));
}

DatasetManifest generate_synthetic_dataset(const SyntheticSpec& spec, const std::filesystem::path& out_dir) {
    spec.validate();
    const auto feature_dir = out_dir / "features";
    std::error_code ec;
    std::filesystem::create_directories(feature_dir, ec);
    if (ec) throw IoError(feature_dir.string() + ": cannot create directory: " + ec.message());

    Rng rng(spec.seed);
    DatasetManifest manifest;
    manifest.num_classes = spec.num_classes;
    const auto span = static_cast<std::uint64_t>(spec.max_frames - spec.min_frames + 1);
    for (std::uint32_t c = 0; c < spec.num_classes; ++c) {
        for (std::uint32_t v = 0; v < spec.videos_per_class; ++v) {
            std::ostringstream id;
            id << 'c' << c << "_v" << std::setw(4) << std::setfill('0') << v;
            const int frames = spec.min_frames + static_cast<int>(rng.below(span));
            const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const auto seq = synthesize_video(spec, c, frames, phase, rng, id.str());
            const auto path = feature_dir / (id.str() + ".tdfe");
            write_feature_sequence(seq, path);
            manifest.entries.push_back({id.str(), path, c});
        }
    }
    write_manifest(manifest, out_dir / "manifest.tsv");
    return manifest;
}

}  // namespace tdf
