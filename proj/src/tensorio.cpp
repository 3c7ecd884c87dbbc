#include "tdf/tensorio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "tdf/binary_io.hpp"
#include "tdf/error.hpp"
#include "tdf/random.hpp"

namespace tdf {

namespace {

constexpr char kFeatureMagic[] = "TDFE";
constexpr std::uint32_t kFormatVersion = 1;

}  // namespace

FeatureSequence::FeatureSequence(Eigen::MatrixXd values, std::string video_id)
    : values_(std::move(values)), video_id_(std::move(video_id)) {
    if (values_.rows() < 1 || values_.cols() < 1) {
        throw DataError("feature sequence must have at least one dimension and one frame");
    }
    if (!values_.allFinite()) throw DataError("non-finite values");
}

std::vector<std::uint8_t> encode_feature_sequence(const FeatureSequence& seq) {
    bin::Writer w;
    w.magic(kFeatureMagic);
    w.u32(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(seq.dims()));
    w.u32(static_cast<std::uint32_t>(seq.frames()));
    const auto& m = seq.values();
    for (Eigen::Index i = 0; i < m.cols(); ++i) {
        for (Eigen::Index k = 0; k < m.rows(); ++k) w.f32(static_cast<float>(m(k, i)));
    }
    return w.bytes();
}

FeatureSequence decode_feature_sequence(std::vector<std::uint8_t> bytes, const std::string& origin) {
    bin::Reader r(std::move(bytes), origin);
    r.expect_header(kFeatureMagic, kFormatVersion);
    const std::uint32_t dims = r.u32();
    const std::uint32_t frames = r.u32();
    if (dims == 0 || frames == 0) throw DataError(origin + ": corrupt file (zero dimension)");
    const auto count = static_cast<std::uint64_t>(dims) * frames;
    if (count > r.remaining() / 4) throw DataError(origin + ": corrupt file");
    r.require(count * 4);

    Eigen::MatrixXd values(dims, frames);
    for (std::uint32_t i = 0; i < frames; ++i) {
        for (std::uint32_t k = 0; k < dims; ++k) {
            const float v = r.f32();
            if (!std::isfinite(v)) throw DataError(origin + ": non-finite values");
            values(k, i) = v;
        }
    }
    r.expect_end();
    return FeatureSequence(std::move(values));
}

void write_feature_sequence(const FeatureSequence& seq, const std::filesystem::path& path) {
    bin::write_file(path, encode_feature_sequence(seq));
}

FeatureSequence read_feature_sequence(const std::filesystem::path& path) {
    auto seq = decode_feature_sequence(bin::read_file(path), path.string());
    return FeatureSequence(seq.values(), path.stem().string());
}

void DatasetManifest::validate() const {
    if (num_classes == 0) throw DataError("manifest has no classes");
    std::unordered_set<std::string> ids;
    std::vector<std::size_t> counts(num_classes, 0);
    for (const auto& e : entries) {
        if (!ids.insert(e.video_id).second) throw DataError("duplicate video_id '" + e.video_id + "'");
        if (e.label >= num_classes) throw DataError("label out of range for video '" + e.video_id + "'");
        ++counts[e.label];
    }
    for (std::uint32_t c = 0; c < num_classes; ++c) {
        if (counts[c] == 0) throw DataError("class " + std::to_string(c) + " has no entries");
    }
}

std::vector<std::size_t> DatasetManifest::class_counts() const {
    std::vector<std::size_t> counts(num_classes, 0);
    for (const auto& e : entries) ++counts.at(e.label);
    return counts;
}

DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir) {
    DatasetManifest m;
    std::unordered_set<std::string> ids;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::uint32_t max_label = 0;

    auto fail = [&](const std::string& why) {
        throw DataError("manifest parse error at line " + std::to_string(line_no) + ": " + why);
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            const auto tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 3) fail("expected 3 TAB-separated fields, got " + std::to_string(fields.size()));
        if (fields[0].empty()) fail("empty video_id");
        if (fields[1].empty()) fail("empty feature path");

        const std::string& lab = fields[2];
        if (!lab.empty() && lab.front() == '-') fail("negative label");
        std::uint32_t label = 0;
        const auto [ptr, ec] = std::from_chars(lab.data(), lab.data() + lab.size(), label);
        if (lab.empty() || ec != std::errc() || ptr != lab.data() + lab.size()) fail("bad label '" + lab + "'");
        if (label == std::numeric_limits<std::uint32_t>::max()) fail("label too large");

        if (!ids.insert(fields[0]).second) fail("duplicate video_id '" + fields[0] + "'");

        std::filesystem::path p(fields[1]);
        if (p.is_relative()) p = base_dir / p;
        m.entries.push_back({fields[0], p, label});
        max_label = std::max(max_label, label);
    }
    if (m.entries.empty()) throw DataError("manifest is empty");
    m.num_classes = max_label + 1;
    m.validate();
    return m;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string() + ": cannot open manifest");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_manifest(ss.str(), path.parent_path());
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    const auto base = std::filesystem::absolute(path).parent_path().lexically_normal();
    std::ostringstream out;
    for (const auto& e : manifest.entries) {
        auto p = std::filesystem::absolute(e.feature_path).lexically_normal();
        auto rel = p.lexically_relative(base);
        const bool under = !rel.empty() && *rel.begin() != "..";
        out << e.video_id << '\t' << (under ? rel : p).generic_string() << '\t' << e.label << '\n';
    }
    const std::string s = out.str();
    bin::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

std::pair<DatasetManifest, DatasetManifest> split_train_test(const DatasetManifest& manifest,
                                                             double train_fraction,
                                                             std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw DataError("train_fraction must lie in (0, 1)");
    }
    manifest.validate();

    std::vector<std::vector<std::size_t>> by_class(manifest.num_classes);
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        by_class[manifest.entries[i].label].push_back(i);
    }

    Rng rng(seed);
    std::vector<bool> in_train(manifest.entries.size(), false);
    for (std::uint32_t c = 0; c < manifest.num_classes; ++c) {
        auto& members = by_class[c];
        if (members.size() < 2) {
            throw DataError("class " + std::to_string(c) + " has fewer than 2 entries; cannot split");
        }
        auto n_train = static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(members.size()) - 1e-12));
        n_train = std::clamp<std::size_t>(n_train, 1, members.size() - 1);
        rng.shuffle(members);
        for (std::size_t j = 0; j < n_train; ++j) in_train[members[j]] = true;
    }

    DatasetManifest train{{}, manifest.num_classes};
    DatasetManifest test{{}, manifest.num_classes};
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        (in_train[i] ? train : test).entries.push_back(manifest.entries[i]);
    }
    return {std::move(train), std::move(test)};
}

}  // namespace tdf
