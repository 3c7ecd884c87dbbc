#include "tdf/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
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
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
        throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
}

Eigen::Index default_codebook_size(EncodingMethod m) { return m == EncodingMethod::llc ? 1024 : 16; }

// Shortest text that parses back to the same double.
std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

bool needs_codebook(EncodingMethod m) {
    return m == EncodingMethod::llc || m == EncodingMethod::fv || m == EncodingMethod::vlad;
}

void PipelineConfig::resolve() {
    if (needs_codebook(time_encoder) && !time_codebook_size) time_codebook_size = default_codebook_size(time_encoder);
    if (needs_codebook(dft_encoder) && !dft_codebook_size) dft_codebook_size = default_codebook_size(dft_encoder);
    if ((time_encoder == EncodingMethod::llc || dft_encoder == EncodingMethod::llc) && !llc) llc = LlcParams{};
}

void PipelineConfig::validate() const {
    auto fail = [](const std::string& why) { throw ConfigError("invalid config: " + why); };
    if (pca_dims && *pca_dims < 1) fail("pca_dims must be positive");
    if (spectrum_length < 1) fail("spectrum_length must be positive");
    if (time_encoder == EncodingMethod::fused || dft_encoder == EncodingMethod::fused) {
        fail("branch encoders must be one of average, llc, fv, vlad");
    }
    if (!use_time_branch && !use_dft_branch) fail("at least one branch must be enabled");

    if (needs_codebook(time_encoder) != time_codebook_size.has_value()) {
        fail("time_codebook_size must be set exactly when time_encoder uses a codebook");
    }
    if (needs_codebook(dft_encoder) != dft_codebook_size.has_value()) {
        fail("dft_codebook_size must be set exactly when dft_encoder uses a codebook");
    }
    if (time_codebook_size && *time_codebook_size < 1) fail("time_codebook_size must be positive");
    if (dft_codebook_size && *dft_codebook_size < 1) fail("dft_codebook_size must be positive");

    const bool uses_llc = time_encoder == EncodingMethod::llc || dft_encoder == EncodingMethod::llc;
    if (uses_llc != llc.has_value()) fail("llc_neighbors/llc_lambda must be set exactly when an encoder is llc");
    if (llc) {
        if (llc->neighbors < 1) fail("llc_neighbors must be positive");
        if (!(llc->lambda >= 0.0) || !std::isfinite(llc->lambda)) fail("llc_lambda must be non-negative");
        for (const auto& [enc, size] : {std::pair{time_encoder, time_codebook_size}, std::pair{dft_encoder, dft_codebook_size}}) {
            if (enc == EncodingMethod::llc && llc->neighbors > *size) fail("llc_neighbors exceeds codebook size");
        }
    }

    if (!(fusion_time_norm > 0.0) || !std::isfinite(fusion_time_norm)) fail("fusion_time_norm must be positive");
    if (!(fusion_dft_norm > 0.0) || !std::isfinite(fusion_dft_norm)) fail("fusion_dft_norm must be positive");
    if (!(svm_c > 0.0) || !std::isfinite(svm_c)) fail("svm_c must be positive");
    if (svm_max_epochs < 1) fail("svm_max_epochs must be positive");
    if (!(svm_tol > 0.0)) fail("svm_tol must be positive");
    if (kmeans_max_iters < 1) fail("kmeans_max_iters must be positive");
    if (gmm_max_iters < 0) fail("gmm_max_iters must be non-negative");
    if (!(gmm_tol > 0.0)) fail("gmm_tol must be positive");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) fail("train_fraction must lie in (0, 1)");
    if (pca_sample_cap < 2) fail("pca_sample_cap must be at least 2");
    if (codebook_sample_cap < 1) fail("codebook_sample_cap must be positive");
}

PipelineConfig parse_config(const std::string& text) {
    PipelineConfig c;
    std::optional<Eigen::Index> llc_neighbors;
    std::optional<double> llc_lambda;

    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Setter> setters = {
        {"pca_dims",
         [&](const std::string& k, const std::string& v) {
             if (v == "none") {
                 c.pca_dims.reset();
             } else {
                 c.pca_dims = parse_number<Eigen::Index>(k, v);
             }
         }},
        {"spectrum_length", [&](const std::string& k, const std::string& v) { c.spectrum_length = parse_number<int>(k, v); }},
        {"time_encoder", [&](const std::string&, const std::string& v) { c.time_encoder = parse_encoding_method(v); }},
        {"dft_encoder", [&](const std::string&, const std::string& v) { c.dft_encoder = parse_encoding_method(v); }},
        {"use_time_branch", [&](const std::string& k, const std::string& v) { c.use_time_branch = parse_bool(k, v); }},
        {"use_dft_branch", [&](const std::string& k, const std::string& v) { c.use_dft_branch = parse_bool(k, v); }},
        {"time_codebook_size",
         [&](const std::string& k, const std::string& v) { c.time_codebook_size = parse_number<Eigen::Index>(k, v); }},
        {"dft_codebook_size",
         [&](const std::string& k, const std::string& v) { c.dft_codebook_size = parse_number<Eigen::Index>(k, v); }},
        {"llc_neighbors", [&](const std::string& k, const std::string& v) { llc_neighbors = parse_number<Eigen::Index>(k, v); }},
        {"llc_lambda", [&](const std::string& k, const std::string& v) { llc_lambda = parse_number<double>(k, v); }},
        {"fusion_time_norm", [&](const std::string& k, const std::string& v) { c.fusion_time_norm = parse_number<double>(k, v); }},
        {"fusion_dft_norm", [&](const std::string& k, const std::string& v) { c.fusion_dft_norm = parse_number<double>(k, v); }},
        {"power_normalize", [&](const std::string& k, const std::string& v) { c.power_normalize = parse_bool(k, v); }},
        {"svm_c", [&](const std::string& k, const std::string& v) { c.svm_c = parse_number<double>(k, v); }},
        {"svm_max_epochs", [&](const std::string& k, const std::string& v) { c.svm_max_epochs = parse_number<int>(k, v); }},
        {"svm_tol", [&](const std::string& k, const std::string& v) { c.svm_tol = parse_number<double>(k, v); }},
        {"kmeans_max_iters", [&](const std::string& k, const std::string& v) { c.kmeans_max_iters = parse_number<int>(k, v); }},
        {"gmm_max_iters", [&](const std::string& k, const std::string& v) { c.gmm_max_iters = parse_number<int>(k, v); }},
        {"gmm_tol", [&](const std::string& k, const std::string& v) { c.gmm_tol = parse_number<double>(k, v); }},
        {"train_fraction", [&](const std::string& k, const std::string& v) { c.train_fraction = parse_number<double>(k, v); }},
        {"pca_sample_cap", [&](const std::string& k, const std::string& v) { c.pca_sample_cap = parse_number<std::size_t>(k, v); }},
        {"codebook_sample_cap",
         [&](const std::string& k, const std::string& v) { c.codebook_sample_cap = parse_number<std::size_t>(k, v); }},
        {"seed", [&](const std::string& k, const std::string& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
    };

    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
        }
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        if (!seen.insert(key).second) throw ConfigError("config line " + std::to_string(line_no) + ": repeated key '" + key + "'");
        it->second(key, value);
    }

    if (llc_neighbors || llc_lambda) {
        LlcParams p;
        if (llc_neighbors) p.neighbors = *llc_neighbors;
        if (llc_lambda) p.lambda = *llc_lambda;
        c.llc = p;
    }
    c.resolve();
    c.validate();
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string format_config(const PipelineConfig& c) {
    std::ostringstream os;
    os << "pca_dims=" << (c.pca_dims ? std::to_string(*c.pca_dims) : "none") << '\n';
    os << "spectrum_length=" << c.spectrum_length << '\n';
    os << "time_encoder=" << to_string(c.time_encoder) << '\n';
    os << "dft_encoder=" << to_string(c.dft_encoder) << '\n';
    os << "use_time_branch=" << (c.use_time_branch ? "true" : "false") << '\n';
    os << "use_dft_branch=" << (c.use_dft_branch ? "true" : "false") << '\n';
    if (c.time_codebook_size) os << "time_codebook_size=" << *c.time_codebook_size << '\n';
    if (c.dft_codebook_size) os << "dft_codebook_size=" << *c.dft_codebook_size << '\n';
    if (c.llc) {
        os << "llc_neighbors=" << c.llc->neighbors << '\n';
        os << "llc_lambda=" << format_double(c.llc->lambda) << '\n';
    }
    os << "fusion_time_norm=" << format_double(c.fusion_time_norm) << '\n';
    os << "fusion_dft_norm=" << format_double(c.fusion_dft_norm) << '\n';
    os << "power_normalize=" << (c.power_normalize ? "true" : "false") << '\n';
    os << "svm_c=" << format_double(c.svm_c) << '\n';
    os << "svm_max_epochs=" << c.svm_max_epochs << '\n';
    os << "svm_tol=" << format_double(c.svm_tol) << '\n';
    os << "kmeans_max_iters=" << c.kmeans_max_iters << '\n';
    os << "gmm_max_iters=" << c.gmm_max_iters << '\n';
    os << "gmm_tol=" << format_double(c.gmm_tol) << '\n';
    os << "train_fraction=" << format_double(c.train_fraction) << '\n';
    os << "pca_sample_cap=" << c.pca_sample_cap << '\n';
    os << "codebook_sample_cap=" << c.codebook_sample_cap << '\n';
    os << "seed=" << c.seed << '\n';
    return os.str();
}

PipelineConfig emotion_profile() {
    PipelineConfig c;
    c.pca_dims = 1024;
    c.spectrum_length = 500;
    c.time_encoder = EncodingMethod::fv;
    c.dft_encoder = EncodingMethod::fv;
    c.fusion_time_norm = 3.0 / 5.0;
    c.fusion_dft_norm = 2.0 / 5.0;
    c.svm_c = 100.0;
    c.resolve();
    return c;
}

PipelineConfig action_profile() {
    PipelineConfig c;
    c.pca_dims.reset();
    c.spectrum_length = 200;
    c.time_encoder = EncodingMethod::fv;
    c.dft_encoder = EncodingMethod::fv;
    c.time_codebook_size = 32;
    c.dft_codebook_size = 32;
    c.fusion_time_norm = 1.0;
    c.fusion_dft_norm = 1.0;
    c.svm_c = 1.0;
    c.resolve();
    return c;
}

}  // namespace tdf
