#include "tdf/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <unordered_map>
#include <numeric>
#include <sstream>
#include <thread>

#include "tdf/error.hpp"
#include "tdf/random.hpp"
#include "tdf/signal.hpp"

namespace tdf {

namespace {

// Runs fn(i) for i in [0, n) on up to hardware_concurrency threads and
// rethrows the first failure (lowest index) afterwards.
template <class Fn>
void parallel_for(std::size_t n, Fn fn) {
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
    std::vector<std::exception_ptr> errors(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < n; i += workers) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// Seeded uniform subsample of the columns, kept in original order.
Eigen::MatrixXd subsample_columns(const Eigen::MatrixXd& m, std::size_t cap, std::uint64_t seed) {
    const auto total = static_cast<std::size_t>(m.cols());
    if (total <= cap) return m;
    std::vector<Eigen::Index> idx(total);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    rng.shuffle(idx);
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cap));
    for (std::size_t j = 0; j < cap; ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(idx[j]);
    return out;
}

Eigen::MatrixXd concat_columns(const std::vector<Eigen::MatrixXd>& parts) {
    Eigen::Index cols = 0;
    for (const auto& p : parts) cols += p.cols();
    Eigen::MatrixXd out(parts.front().rows(), cols);
    Eigen::Index offset = 0;
    for (const auto& p : parts) {
        out.middleCols(offset, p.cols()) = p;
        offset += p.cols();
    }
    return out;
}

std::string branch_stage(Branch b) { return b == Branch::time ? "time branch" : "dft branch"; }

BranchModel fit_branch(const PipelineConfig& config, EncodingMethod method, std::optional<Eigen::Index> size,
                       const Eigen::MatrixXd& descriptors, std::uint64_t seed, Branch branch) {
    BranchModel model;
    if (!needs_codebook(method)) return model;
    const Eigen::MatrixXd sample = subsample_columns(descriptors, config.codebook_sample_cap, seed);
    try {
        if (method == EncodingMethod::fv) {
            model.gmm = gmm_fit(sample, {*size, seed, config.gmm_max_iters, config.gmm_tol, config.kmeans_max_iters});
        } else {
            model.codebook = kmeans_fit(sample, {*size, seed, config.kmeans_max_iters});
        }
    } catch (const DataError& e) {
        throw DataError("fit (" + branch_stage(branch) + "): " + e.what());
    }
    return model;
}

void check_branch(EncodingMethod method, std::optional<Eigen::Index> size, const BranchModel& model,
                  std::optional<Eigen::Index> dims, Branch branch) {
    const std::string stage = branch_stage(branch);
    if (method == EncodingMethod::fv) {
        if (!model.gmm) throw DataError(stage + ": fv encoder needs a GMM");
        if (model.gmm->num_components() != *size) {
            throw DataError(stage + ": GMM has " + std::to_string(model.gmm->num_components()) +
                            " components, config asks for " + std::to_string(*size));
        }
        if (dims && model.gmm->dims() != *dims) throw DataError(stage + ": GMM dimension does not match descriptors");
    } else if (needs_codebook(method)) {
        if (!model.codebook) throw DataError(stage + ": " + std::string(to_string(method)) + " encoder needs a codebook");
        if (model.codebook->num_words() != *size) {
            throw DataError(stage + ": codebook has " + std::to_string(model.codebook->num_words()) +
                            " words, config asks for " + std::to_string(*size));
        }
        if (dims && model.codebook->dims() != *dims) throw DataError(stage + ": codebook dimension does not match descriptors");
    }
}

VideoVector encode_branch(const PipelineConfig& config, EncodingMethod method, const BranchModel& model,
                          const Eigen::MatrixXd& descriptors, Branch branch) {
    switch (method) {
        case EncodingMethod::average: return average_pool(descriptors, branch);
        case EncodingMethod::llc: return llc_pool(*model.codebook, *config.llc, descriptors, branch);
        case EncodingMethod::fv: return fisher_encode(*model.gmm, descriptors, branch, config.power_normalize);
        case EncodingMethod::vlad: return vlad_encode(*model.codebook, descriptors, branch, config.power_normalize);
        case EncodingMethod::fused: break;
    }
    throw ConfigError("invalid branch encoder");
}

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError(dir.string() + ": cannot create directory: " + ec.message());
    for (const char* name : {"pca.tdfp", "time.tdfc", "time.tdfg", "dft.tdfc", "dft.tdfg"}) {
        std::filesystem::remove(dir / name, ec);
    }
    if (bundle.pca) save_pca(*bundle.pca, dir / "pca.tdfp");
    for (const auto& [model, prefix] : {std::pair{&bundle.time, "time"}, std::pair{&bundle.dft, "dft"}}) {
        if (model->codebook) save_codebook(*model->codebook, dir / (std::string(prefix) + ".tdfc"));
        if (model->gmm) save_gmm(*model->gmm, dir / (std::string(prefix) + ".tdfg"));
    }
}

ModelBundle load_bundle(const PipelineConfig& config, const std::filesystem::path& dir) {
    auto require = [&](const std::string& name) {
        const auto p = dir / name;
        if (!std::filesystem::exists(p)) throw DataError("bundle " + dir.string() + ": missing " + name);
        return p;
    };
    if (!std::filesystem::is_directory(dir)) throw DataError("bundle " + dir.string() + ": not a directory");
    ModelBundle bundle;
    if (config.pca_dims) {
        bundle.pca = load_pca(require("pca.tdfp"));
    } else if (std::filesystem::exists(dir / "pca.tdfp")) {
        throw DataError("bundle " + dir.string() + ": has a PCA model but config has no pca_dims");
    }
    auto load_branch = [&](bool enabled, EncodingMethod method, const std::string& prefix) {
        BranchModel m;
        if (!enabled) return m;
        if (method == EncodingMethod::fv) m.gmm = load_gmm(require(prefix + ".tdfg"));
        if (method == EncodingMethod::llc || method == EncodingMethod::vlad) m.codebook = load_codebook(require(prefix + ".tdfc"));
        return m;
    };
    bundle.time = load_branch(config.use_time_branch, config.time_encoder, "time");
    bundle.dft = load_branch(config.use_dft_branch, config.dft_encoder, "dft");
    check_bundle(config, bundle);
    return bundle;
}

void check_bundle(const PipelineConfig& config, const ModelBundle& bundle, std::optional<Eigen::Index> input_dims) {
    if (config.pca_dims.has_value() != bundle.pca.has_value()) {
        throw DataError("pca: bundle and config disagree on whether PCA is used");
    }
    std::optional<Eigen::Index> branch_dims = input_dims;
    if (bundle.pca) {
        if (bundle.pca->output_dims() != *config.pca_dims) {
            throw DataError("pca: bundle reduces to " + std::to_string(bundle.pca->output_dims()) +
                            " dimensions, config asks for " + std::to_string(*config.pca_dims));
        }
        if (input_dims && bundle.pca->input_dims() != *input_dims) {
            throw DataError("pca: model expects " + std::to_string(bundle.pca->input_dims()) +
                            "-dimensional frames, got " + std::to_string(*input_dims));
        }
        branch_dims = bundle.pca->output_dims();
    }
    if (config.use_time_branch) {
        check_branch(config.time_encoder, config.time_codebook_size, bundle.time, branch_dims, Branch::time);
    }
    if (config.use_dft_branch) {
        check_branch(config.dft_encoder, config.dft_codebook_size, bundle.dft, branch_dims, Branch::dft);
    }
}

Eigen::MatrixXd prepare_frames(const ModelBundle& bundle, const FeatureSequence& seq) {
    Eigen::MatrixXd frames = seq.values();
    l2_normalize_columns(frames);
    if (bundle.pca) frames = pca_transform_columns(*bundle.pca, frames);
    return frames;
}

VideoVector encode_video(const PipelineConfig& config, const ModelBundle& bundle, const FeatureSequence& seq) {
    check_bundle(config, bundle, seq.dims());
    const Eigen::MatrixXd frames = prepare_frames(bundle, seq);

    std::vector<std::pair<VideoVector, double>> branches;
    if (config.use_time_branch) {
        branches.emplace_back(encode_branch(config, config.time_encoder, bundle.time, frames, Branch::time),
                              config.fusion_time_norm);
    }
    if (config.use_dft_branch) {
        const Spectrum spectrum = spectrum_of_matrix(frames, config.spectrum_length);
        branches.emplace_back(encode_branch(config, config.dft_encoder, bundle.dft, spectrum.values, Branch::dft),
                              config.fusion_dft_norm);
    }
    try {
        return fuse(branches);
    } catch (const DataError& e) {
        throw DataError("fuse (video '" + seq.video_id() + "'): " + e.what());
    }
}

std::vector<FeatureSequence> load_sequences(const DatasetManifest& manifest) {
    std::vector<FeatureSequence> out;
    out.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) {
        auto seq = read_feature_sequence(e.feature_path);
        out.emplace_back(seq.values(), e.video_id);
        if (out.back().dims() != out.front().dims()) {
            throw DataError("video '" + e.video_id + "' has " + std::to_string(out.back().dims()) +
                            " dimensions, expected " + std::to_string(out.front().dims()));
        }
    }
    return out;
}

ModelBundle fit_models(const PipelineConfig& config, const DatasetManifest& train) {
    return fit_models(config, load_sequences(train));
}

ModelBundle fit_models(const PipelineConfig& config, const std::vector<FeatureSequence>& train) {
    config.validate();
    if (train.empty()) throw DataError("fit: no training videos");
    const Eigen::Index dims = train.front().dims();

    ModelBundle bundle;
    if (config.pca_dims) {
        if (*config.pca_dims > dims) {
            throw DataError("fit (pca): pca_dims " + std::to_string(*config.pca_dims) + " exceeds frame dimension " +
                            std::to_string(dims));
        }
        std::vector<Eigen::MatrixXd> frames;
        for (const auto& seq : train) {
            Eigen::MatrixXd f = seq.values();
            l2_normalize_columns(f);
            frames.push_back(std::move(f));
        }
        const Eigen::MatrixXd sample = subsample_columns(concat_columns(frames), config.pca_sample_cap, config.seed);
        if (sample.cols() - 1 < *config.pca_dims) {
            throw DataError("fit (pca): " + std::to_string(sample.cols()) + " descriptors are not enough for pca_dims " +
                            std::to_string(*config.pca_dims));
        }
        bundle.pca = pca_fit(sample, *config.pca_dims);
    }

    const bool time_model = config.use_time_branch && needs_codebook(config.time_encoder);
    const bool dft_model = config.use_dft_branch && needs_codebook(config.dft_encoder);
    if (!time_model && !dft_model) return bundle;

    std::vector<Eigen::MatrixXd> time_desc(train.size());
    std::vector<Eigen::MatrixXd> dft_desc(train.size());
    parallel_for(train.size(), [&](std::size_t i) {
        Eigen::MatrixXd frames = prepare_frames(bundle, train[i]);
        if (dft_model) dft_desc[i] = spectrum_of_matrix(frames, config.spectrum_length).values;
        if (time_model) time_desc[i] = std::move(frames);
    });

    if (time_model) {
        bundle.time = fit_branch(config, config.time_encoder, config.time_codebook_size, concat_columns(time_desc),
                                 config.seed, Branch::time);
    }
    if (dft_model) {
        bundle.dft = fit_branch(config, config.dft_encoder, config.dft_codebook_size, concat_columns(dft_desc),
                                config.seed + 1, Branch::dft);
    }
    return bundle;
}

std::vector<LabeledVector> encode_dataset(const PipelineConfig& config, const ModelBundle& bundle,
                                          const std::vector<FeatureSequence>& videos,
                                          const std::vector<std::uint32_t>& labels) {
    if (videos.size() != labels.size()) throw DataError("encode: video and label counts differ");
    std::vector<LabeledVector> out(videos.size());
    parallel_for(videos.size(), [&](std::size_t i) { out[i] = {encode_video(config, bundle, videos[i]), labels[i]}; });
    return out;
}

SvmOptions svm_options(const PipelineConfig& config) {
    return {config.svm_c, config.svm_max_epochs, config.svm_tol, config.seed};
}

EvaluationReport evaluate(const LinearSvmModel& model, const std::vector<LabeledVector>& test) {
    if (test.empty()) throw DataError("evaluate: empty test set");
    const auto classes = static_cast<std::size_t>(model.num_classes());
    EvaluationReport report;
    report.confusion.assign(classes, std::vector<std::uint64_t>(classes, 0));
    for (const auto& ex : test) {
        if (ex.label >= classes) throw DataError("evaluate: label " + std::to_string(ex.label) + " out of range");
        const auto [pred, scores] = predict(model, ex.vector.values);
        ++report.confusion[ex.label][static_cast<std::size_t>(pred)];
    }
    std::uint64_t correct = 0;
    report.per_class_accuracy.resize(classes, 0.0);
    for (std::size_t c = 0; c < classes; ++c) {
        const auto row = std::accumulate(report.confusion[c].begin(), report.confusion[c].end(), std::uint64_t{0});
        correct += report.confusion[c][c];
        if (row > 0) report.per_class_accuracy[c] = static_cast<double>(report.confusion[c][c]) / static_cast<double>(row);
    }
    report.overall_accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
    return report;
}

std::string format_report(const EvaluationReport& report) {
    std::ostringstream os;
    os << "overall_accuracy\t" << fixed6(report.overall_accuracy) << '\n';
    os << "per_class_accuracy";
    for (double a : report.per_class_accuracy) os << '\t' << fixed6(a);
    os << '\n';
    for (const auto& row : report.confusion) {
        os << "confusion";
        for (auto v : row) os << '\t' << v;
        os << '\n';
    }
    return os.str();
}

ExperimentResult run_repeated_experiment(const PipelineConfig& config, const DatasetManifest& manifest,
                                         int repetitions) {
    if (repetitions < 1) throw DataError("repetitions must be at least 1");
    config.validate();
    manifest.validate();

    // Every video is read once; splits only index into this.
    const std::vector<FeatureSequence> videos = load_sequences(manifest);
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) index.emplace(manifest.entries[i].video_id, i);

    auto gather = [&](const DatasetManifest& part) {
        std::pair<std::vector<FeatureSequence>, std::vector<std::uint32_t>> out;
        for (const auto& e : part.entries) {
            out.first.push_back(videos[index.at(e.video_id)]);
            out.second.push_back(e.label);
        }
        return out;
    };

    ExperimentResult result;
    for (int r = 1; r <= repetitions; ++r) {
        const auto [train, test] = split_train_test(manifest, config.train_fraction, config.seed + static_cast<std::uint64_t>(r));
        const auto [train_videos, train_labels] = gather(train);
        const auto [test_videos, test_labels] = gather(test);

        const ModelBundle bundle = fit_models(config, train_videos);
        const auto train_vectors = encode_dataset(config, bundle, train_videos, train_labels);
        const auto test_vectors = encode_dataset(config, bundle, test_videos, test_labels);
        const auto model = train_linear_svm(train_vectors, manifest.num_classes, svm_options(config));
        result.runs.push_back(evaluate(model, test_vectors));
    }
    double sum = 0.0;
    for (const auto& run : result.runs) sum += run.overall_accuracy;
    result.mean_accuracy = sum / static_cast<double>(result.runs.size());
    return result;
}

std::string format_experiment(const ExperimentResult& result) {
    std::ostringstream os;
    const std::size_t classes = result.runs.empty() ? 0 : result.runs.front().per_class_accuracy.size();
    os << "run\toverall";
    for (std::size_t c = 0; c < classes; ++c) os << "\tclass_" << c;
    os << '\n';
    std::vector<double> class_sums(classes, 0.0);
    for (std::size_t r = 0; r < result.runs.size(); ++r) {
        const auto& run = result.runs[r];
        os << (r + 1) << '\t' << fixed6(run.overall_accuracy);
        for (std::size_t c = 0; c < classes; ++c) {
            os << '\t' << fixed6(run.per_class_accuracy[c]);
            class_sums[c] += run.per_class_accuracy[c];
        }
        os << '\n';
    }
    os << "mean\t" << fixed6(result.mean_accuracy);
    for (std::size_t c = 0; c < classes; ++c) {
        os << '\t' << fixed6(class_sums[c] / static_cast<double>(result.runs.size()));
    }
    os << '\n';
    return os.str();
}

DatasetManifest encode_to_directory(const PipelineConfig& config, const ModelBundle& bundle,
                                    const DatasetManifest& manifest, const std::filesystem::path& out_dir) {
    const auto videos = load_sequences(manifest);
    std::vector<std::uint32_t> labels;
    for (const auto& e : manifest.entries) labels.push_back(e.label);
    const auto encoded = encode_dataset(config, bundle, videos, labels);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError(out_dir.string() + ": cannot create directory: " + ec.message());

    DatasetManifest index{{}, manifest.num_classes};
    for (std::size_t i = 0; i < encoded.size(); ++i) {
        const auto& e = manifest.entries[i];
        const auto path = out_dir / (e.video_id + ".tdfv");
        save_video_vector(encoded[i].vector, path);
        index.entries.push_back({e.video_id, path, e.label});
    }
    write_manifest(index, out_dir / "index.tsv");
    return index;
}

std::vector<LabeledVector> load_encoded(const DatasetManifest& encoded) {
    std::vector<LabeledVector> out;
    out.reserve(encoded.entries.size());
    for (const auto& e : encoded.entries) {
        out.push_back({load_video_vector(e.feature_path), e.label});
        if (out.back().vector.values.size() != out.front().vector.values.size()) {
            throw DataError("encoded video '" + e.video_id + "' has a different dimension");
        }
    }
    return out;
}

}  // namespace tdf
