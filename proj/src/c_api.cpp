#include "tdf/tdf.h"

#include <cstring>
#include <exception>
#include <memory>
#include <string>

#include "tdf/error.hpp"
#include "tdf/pipeline.hpp"
#include "tdf/synth.hpp"

struct tdf_config {
    tdf::PipelineConfig value;
};
struct tdf_manifest {
    tdf::DatasetManifest value;
};
struct tdf_bundle {
    tdf::ModelBundle value;
};
struct tdf_svm {
    tdf::LinearSvmModel value;
};
struct tdf_report {
    tdf::EvaluationReport value;
};
struct tdf_experiment {
    std::vector<tdf_report> runs;
    double mean_accuracy = 0.0;
};
struct tdf_predictions {
    std::vector<std::string> ids;
    std::vector<std::uint32_t> classes;
    std::vector<Eigen::VectorXd> scores;
};

namespace {

thread_local std::string last_error;

template <class Fn>
tdf_status guarded(Fn&& fn) {
    try {
        fn();
        last_error.clear();
        return TDF_OK;
    } catch (const tdf::ConfigError& e) {
        last_error = e.what();
        return TDF_ERR_CONFIG;
    } catch (const tdf::DataError& e) {
        last_error = e.what();
        return TDF_ERR_DATA;
    } catch (const tdf::IoError& e) {
        last_error = e.what();
        return TDF_ERR_IO;
    } catch (const std::filesystem::filesystem_error& e) {
        last_error = e.what();
        return TDF_ERR_IO;
    } catch (const std::exception& e) {
        last_error = e.what();
        return TDF_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown error";
        return TDF_ERR_INTERNAL;
    }
}

void require(const void* p, const char* what) {
    if (p == nullptr) throw tdf::ConfigError(std::string(what) + " must not be NULL");
}

char* duplicate(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

}  // namespace

extern "C" {

const char* tdf_version(void) { return "1.0.0"; }

const char* tdf_last_error(void) { return last_error.c_str(); }

void tdf_string_free(char* s) { delete[] s; }

tdf_status tdf_config_load(const char* path, tdf_config** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new tdf_config{tdf::load_config(path)};
    });
}

tdf_status tdf_config_parse(const char* text, tdf_config** out) {
    return guarded([&] {
        require(text, "text");
        require(out, "out");
        *out = new tdf_config{tdf::parse_config(text)};
    });
}

tdf_status tdf_config_format(const tdf_config* config, char** out_text) {
    return guarded([&] {
        require(config, "config");
        require(out_text, "out_text");
        *out_text = duplicate(tdf::format_config(config->value));
    });
}

void tdf_config_free(tdf_config* config) { delete config; }

uint64_t tdf_config_seed(const tdf_config* config) { return config ? config->value.seed : 0; }

double tdf_config_train_fraction(const tdf_config* config) { return config ? config->value.train_fraction : 0.0; }

tdf_status tdf_manifest_load(const char* path, tdf_manifest** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new tdf_manifest{tdf::read_manifest(path)};
    });
}

tdf_status tdf_manifest_save(const tdf_manifest* manifest, const char* path) {
    return guarded([&] {
        require(manifest, "manifest");
        require(path, "path");
        tdf::write_manifest(manifest->value, path);
    });
}

size_t tdf_manifest_size(const tdf_manifest* manifest) { return manifest ? manifest->value.entries.size() : 0; }

uint32_t tdf_manifest_num_classes(const tdf_manifest* manifest) { return manifest ? manifest->value.num_classes : 0; }

tdf_status tdf_manifest_split(const tdf_manifest* manifest, double train_fraction, uint64_t seed, tdf_manifest** train,
                              tdf_manifest** test) {
    return guarded([&] {
        require(manifest, "manifest");
        require(train, "train");
        require(test, "test");
        auto [a, b] = tdf::split_train_test(manifest->value, train_fraction, seed);
        auto ta = std::make_unique<tdf_manifest>(tdf_manifest{std::move(a)});
        auto tb = std::make_unique<tdf_manifest>(tdf_manifest{std::move(b)});
        *train = ta.release();
        *test = tb.release();
    });
}

void tdf_manifest_free(tdf_manifest* manifest) { delete manifest; }

tdf_status tdf_synth(const char* spec_path, const char* out_dir, char** out_manifest_path) {
    return guarded([&] {
        require(spec_path, "spec_path");
        require(out_dir, "out_dir");
        const auto spec = tdf::load_synthetic_spec(spec_path);
        tdf::generate_synthetic_dataset(spec, out_dir);
        if (out_manifest_path) {
            *out_manifest_path = duplicate((std::filesystem::path(out_dir) / "manifest.tsv").string());
        }
    });
}

tdf_status tdf_fit(const tdf_config* config, const tdf_manifest* train, tdf_bundle** out) {
    return guarded([&] {
        require(config, "config");
        require(train, "train");
        require(out, "out");
        *out = new tdf_bundle{tdf::fit_models(config->value, train->value)};
    });
}

tdf_status tdf_bundle_save(const tdf_bundle* bundle, const char* dir) {
    return guarded([&] {
        require(bundle, "bundle");
        require(dir, "dir");
        tdf::save_bundle(bundle->value, dir);
    });
}

tdf_status tdf_bundle_load(const tdf_config* config, const char* dir, tdf_bundle** out) {
    return guarded([&] {
        require(config, "config");
        require(dir, "dir");
        require(out, "out");
        *out = new tdf_bundle{tdf::load_bundle(config->value, dir)};
    });
}

void tdf_bundle_free(tdf_bundle* bundle) { delete bundle; }

tdf_status tdf_encode(const tdf_config* config, const tdf_bundle* bundle, const tdf_manifest* manifest,
                      const char* out_dir, tdf_manifest** out_index) {
    return guarded([&] {
        require(config, "config");
        require(bundle, "bundle");
        require(manifest, "manifest");
        require(out_dir, "out_dir");
        auto index = tdf::encode_to_directory(config->value, bundle->value, manifest->value, out_dir);
        if (out_index) *out_index = new tdf_manifest{std::move(index)};
    });
}

tdf_status tdf_train(const tdf_config* config, const tdf_manifest* encoded, tdf_svm** out) {
    return guarded([&] {
        require(config, "config");
        require(encoded, "encoded");
        require(out, "out");
        const auto data = tdf::load_encoded(encoded->value);
        *out = new tdf_svm{tdf::train_linear_svm(data, encoded->value.num_classes, tdf::svm_options(config->value))};
    });
}

tdf_status tdf_svm_save(const tdf_svm* model, const char* path) {
    return guarded([&] {
        require(model, "model");
        require(path, "path");
        tdf::save_svm(model->value, path);
    });
}

tdf_status tdf_svm_load(const char* path, tdf_svm** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new tdf_svm{tdf::load_svm(path)};
    });
}

size_t tdf_svm_num_classes(const tdf_svm* model) {
    return model ? static_cast<size_t>(model->value.num_classes()) : 0;
}

size_t tdf_svm_dims(const tdf_svm* model) { return model ? static_cast<size_t>(model->value.dims()) : 0; }

void tdf_svm_free(tdf_svm* model) { delete model; }

tdf_status tdf_predict(const tdf_svm* model, const tdf_manifest* encoded, tdf_predictions** out) {
    return guarded([&] {
        require(model, "model");
        require(encoded, "encoded");
        require(out, "out");
        const auto data = tdf::load_encoded(encoded->value);
        auto p = std::make_unique<tdf_predictions>();
        for (std::size_t i = 0; i < data.size(); ++i) {
            auto [cls, scores] = tdf::predict(model->value, data[i].vector.values);
            p->ids.push_back(encoded->value.entries[i].video_id);
            p->classes.push_back(static_cast<std::uint32_t>(cls));
            p->scores.push_back(std::move(scores));
        }
        *out = p.release();
    });
}

size_t tdf_predictions_size(const tdf_predictions* p) { return p ? p->ids.size() : 0; }

const char* tdf_predictions_video_id(const tdf_predictions* p, size_t i) {
    return p && i < p->ids.size() ? p->ids[i].c_str() : nullptr;
}

uint32_t tdf_predictions_class(const tdf_predictions* p, size_t i) {
    return p && i < p->classes.size() ? p->classes[i] : 0;
}

size_t tdf_predictions_scores(const tdf_predictions* p, size_t i, double* out, size_t capacity) {
    if (!p || i >= p->scores.size() || !out) return 0;
    const auto n = std::min(capacity, static_cast<size_t>(p->scores[i].size()));
    for (size_t c = 0; c < n; ++c) out[c] = p->scores[i](static_cast<Eigen::Index>(c));
    return n;
}

void tdf_predictions_free(tdf_predictions* p) { delete p; }

tdf_status tdf_evaluate(const tdf_svm* model, const tdf_manifest* encoded, tdf_report** out) {
    return guarded([&] {
        require(model, "model");
        require(encoded, "encoded");
        require(out, "out");
        *out = new tdf_report{tdf::evaluate(model->value, tdf::load_encoded(encoded->value))};
    });
}

double tdf_report_overall_accuracy(const tdf_report* report) { return report ? report->value.overall_accuracy : 0.0; }

size_t tdf_report_num_classes(const tdf_report* report) {
    return report ? report->value.per_class_accuracy.size() : 0;
}

double tdf_report_class_accuracy(const tdf_report* report, size_t cls) {
    return report && cls < report->value.per_class_accuracy.size() ? report->value.per_class_accuracy[cls] : 0.0;
}

uint64_t tdf_report_confusion(const tdf_report* report, size_t truth, size_t predicted) {
    if (!report || truth >= report->value.confusion.size() || predicted >= report->value.confusion.size()) return 0;
    return report->value.confusion[truth][predicted];
}

tdf_status tdf_report_format(const tdf_report* report, char** out_text) {
    return guarded([&] {
        require(report, "report");
        require(out_text, "out_text");
        *out_text = duplicate(tdf::format_report(report->value));
    });
}

void tdf_report_free(tdf_report* report) { delete report; }

tdf_status tdf_run(const tdf_config* config, const tdf_manifest* manifest, int repetitions, tdf_experiment** out) {
    return guarded([&] {
        require(config, "config");
        require(manifest, "manifest");
        require(out, "out");
        auto result = tdf::run_repeated_experiment(config->value, manifest->value, repetitions);
        auto e = std::make_unique<tdf_experiment>();
        for (auto& r : result.runs) e->runs.push_back(tdf_report{std::move(r)});
        e->mean_accuracy = result.mean_accuracy;
        *out = e.release();
    });
}

size_t tdf_experiment_num_runs(const tdf_experiment* e) { return e ? e->runs.size() : 0; }

double tdf_experiment_mean_accuracy(const tdf_experiment* e) { return e ? e->mean_accuracy : 0.0; }

const tdf_report* tdf_experiment_run(const tdf_experiment* e, size_t i) {
    return e && i < e->runs.size() ? &e->runs[i] : nullptr;
}

tdf_status tdf_experiment_format(const tdf_experiment* e, char** out_text) {
    return guarded([&] {
        require(e, "experiment");
        require(out_text, "out_text");
        tdf::ExperimentResult result;
        for (const auto& r : e->runs) result.runs.push_back(r.value);
        result.mean_accuracy = e->mean_accuracy;
        *out_text = duplicate(tdf::format_experiment(result));
    });
}

void tdf_experiment_free(tdf_experiment* e) { delete e; }

}  // extern "C"
