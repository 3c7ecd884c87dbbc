// tdf: command-line front end over the C API.
//
// Exit codes: 0 success, 1 usage or config error, 2 data or artifact error,
// 3 I/O error while writing outputs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tdf/tdf.h"

namespace {

// Raised after the diagnostic line has been printed.
struct Exit {
    int code;
};

// Reading a missing or broken input artifact is a data error for every stage.
enum class Role { input, output, compute };

void check(tdf_status status, const std::string& stage, Role role = Role::compute) {
    if (status == TDF_OK) return;
    int code = static_cast<int>(status);
    if (role == Role::input && status == TDF_ERR_IO) code = 2;
    if (status == TDF_ERR_INTERNAL) code = 2;
    std::fprintf(stderr, "tdf %s: %s\n", stage.c_str(), tdf_last_error());
    throw Exit{code};
}

template <class T, void (*Free)(T*)>
struct Handle {
    T* ptr = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    ~Handle() { Free(ptr); }
    T** out() { return &ptr; }
    T* get() const { return ptr; }
};

using Config = Handle<tdf_config, tdf_config_free>;
using Manifest = Handle<tdf_manifest, tdf_manifest_free>;
using Bundle = Handle<tdf_bundle, tdf_bundle_free>;
using Svm = Handle<tdf_svm, tdf_svm_free>;
using Report = Handle<tdf_report, tdf_report_free>;
using Experiment = Handle<tdf_experiment, tdf_experiment_free>;
using Predictions = Handle<tdf_predictions, tdf_predictions_free>;
using Text = Handle<char, tdf_string_free>;

void write_text(const std::filesystem::path& path, const std::string& text, const std::string& stage) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    out.flush();
    if (!out) {
        std::fprintf(stderr, "tdf %s: %s: cannot write file\n", stage.c_str(), path.string().c_str());
        throw Exit{3};
    }
}

void load_config(const std::string& path, Config& config, const std::string& stage) {
    check(tdf_config_load(path.c_str(), config.out()), stage);
}

void load_manifest(const std::string& path, Manifest& manifest, const std::string& stage) {
    check(tdf_manifest_load(path.c_str(), manifest.out()), stage, Role::input);
}

int cmd_synth(const std::string& spec, const std::string& out) {
    Text manifest_path;
    check(tdf_synth(spec.c_str(), out.c_str(), manifest_path.out()), "synth", Role::output);
    std::printf("%s\n", manifest_path.get());
    return 0;
}

int cmd_fit(const std::string& config_path, const std::string& manifest_path, const std::string& out, int run,
            bool all) {
    Config config;
    load_config(config_path, config, "fit");
    Manifest manifest;
    load_manifest(manifest_path, manifest, "fit");

    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) {
        std::fprintf(stderr, "tdf fit: %s: cannot create directory\n", out.c_str());
        throw Exit{3};
    }

    Bundle bundle;
    if (all) {
        check(tdf_fit(config.get(), manifest.get(), bundle.out()), "fit");
    } else {
        Manifest train, test;
        const auto seed = tdf_config_seed(config.get()) + static_cast<std::uint64_t>(run);
        check(tdf_manifest_split(manifest.get(), tdf_config_train_fraction(config.get()), seed, train.out(), test.out()),
              "fit");
        const auto dir = std::filesystem::path(out);
        check(tdf_manifest_save(train.get(), (dir / "train.tsv").string().c_str()), "fit", Role::output);
        check(tdf_manifest_save(test.get(), (dir / "test.tsv").string().c_str()), "fit", Role::output);
        check(tdf_fit(config.get(), train.get(), bundle.out()), "fit");
    }
    check(tdf_bundle_save(bundle.get(), out.c_str()), "fit", Role::output);
    std::printf("%s\n", out.c_str());
    return 0;
}

int cmd_encode(const std::string& config_path, const std::string& bundle_dir, const std::string& manifest_path,
               const std::string& out) {
    Config config;
    load_config(config_path, config, "encode");
    Bundle bundle;
    check(tdf_bundle_load(config.get(), bundle_dir.c_str(), bundle.out()), "encode", Role::input);
    Manifest manifest;
    load_manifest(manifest_path, manifest, "encode");
    Manifest index;
    const tdf_status st = tdf_encode(config.get(), bundle.get(), manifest.get(), out.c_str(), index.out());
    // Unreadable feature files surface as I/O errors from the same call; only
    // a failure to create the output tree is an output error.
    check(st, "encode", std::filesystem::is_directory(out) ? Role::input : Role::output);
    std::printf("%s\n", (std::filesystem::path(out) / "index.tsv").string().c_str());
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& encoded, const std::string& out) {
    Config config;
    load_config(config_path, config, "train");
    Manifest index;
    load_manifest(encoded, index, "train");
    Svm model;
    check(tdf_train(config.get(), index.get(), model.out()), "train", Role::input);
    check(tdf_svm_save(model.get(), out.c_str()), "train", Role::output);
    std::printf("%s\n", out.c_str());
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& encoded) {
    Svm model;
    check(tdf_svm_load(model_path.c_str(), model.out()), "predict", Role::input);
    Manifest index;
    load_manifest(encoded, index, "predict");
    Predictions preds;
    check(tdf_predict(model.get(), index.get(), preds.out()), "predict", Role::input);

    std::vector<double> scores(tdf_svm_num_classes(model.get()));
    for (size_t i = 0; i < tdf_predictions_size(preds.get()); ++i) {
        const size_t n = tdf_predictions_scores(preds.get(), i, scores.data(), scores.size());
        std::printf("%s\t%u", tdf_predictions_video_id(preds.get(), i), tdf_predictions_class(preds.get(), i));
        for (size_t c = 0; c < n; ++c) std::printf("\t%.9g", scores[c]);
        std::printf("\n");
    }
    return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& encoded) {
    Svm model;
    check(tdf_svm_load(model_path.c_str(), model.out()), "evaluate", Role::input);
    Manifest index;
    load_manifest(encoded, index, "evaluate");
    Report report;
    check(tdf_evaluate(model.get(), index.get(), report.out()), "evaluate", Role::input);
    Text text;
    check(tdf_report_format(report.get(), text.out()), "evaluate");
    std::fputs(text.get(), stdout);
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& manifest_path, int repeat, const std::string& reports) {
    Config config;
    load_config(config_path, config, "run");
    Manifest manifest;
    load_manifest(manifest_path, manifest, "run");
    Experiment experiment;
    check(tdf_run(config.get(), manifest.get(), repeat, experiment.out()), "run", Role::input);

    if (!reports.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(reports, ec);
        if (ec) {
            std::fprintf(stderr, "tdf run: %s: cannot create directory\n", reports.c_str());
            throw Exit{3};
        }
        for (size_t r = 0; r < tdf_experiment_num_runs(experiment.get()); ++r) {
            Text text;
            check(tdf_report_format(tdf_experiment_run(experiment.get(), r), text.out()), "run");
            write_text(std::filesystem::path(reports) / ("run_" + std::to_string(r + 1) + ".tsv"), text.get(), "run");
        }
    }
    Text table;
    check(tdf_experiment_format(experiment.get(), table.out()), "run");
    std::fputs(table.get(), stdout);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporal DFT feature encoding and linear SVM classification"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tdf_version());

    std::string spec, out, config, manifest, bundle, encoded, model, reports;
    int run = 1;
    int repeat = 10;
    bool all = false;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic temporal dataset");
    synth->add_option("--spec", spec, "Generator spec (key=value)")->required();
    synth->add_option("--out", out, "Output directory")->required();

    auto* fit = app.add_subcommand("fit", "Split a manifest and fit PCA and branch codebooks on the training part");
    fit->add_option("--config", config, "Pipeline config")->required();
    fit->add_option("--manifest", manifest, "Dataset manifest")->required();
    fit->add_option("--out", out, "Bundle directory")->required();
    fit->add_option("--run", run, "Repetition index; the split uses seed + run")->check(CLI::PositiveNumber);
    fit->add_flag("--all", all, "Fit on the whole manifest without splitting");

    auto* encode = app.add_subcommand("encode", "Encode videos to fixed-length vectors");
    encode->add_option("--config", config, "Pipeline config")->required();
    encode->add_option("--bundle", bundle, "Bundle directory from fit")->required();
    encode->add_option("--manifest", manifest, "Manifest of feature files")->required();
    encode->add_option("--out", out, "Output directory")->required();

    auto* train = app.add_subcommand("train", "Train the linear SVM on encoded vectors");
    train->add_option("--config", config, "Pipeline config")->required();
    train->add_option("--encoded", encoded, "index.tsv from encode")->required();
    train->add_option("--out", out, "Model file")->required();

    auto* predict = app.add_subcommand("predict", "Print video_id, predicted class and scores");
    predict->add_option("--model", model, "Model file")->required();
    predict->add_option("--encoded", encoded, "index.tsv from encode")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Print the evaluation report");
    evaluate->add_option("--model", model, "Model file")->required();
    evaluate->add_option("--encoded", encoded, "index.tsv from encode")->required();

    auto* runcmd = app.add_subcommand("run", "Repeated split/fit/encode/train/evaluate");
    runcmd->add_option("--config", config, "Pipeline config")->required();
    runcmd->add_option("--manifest", manifest, "Dataset manifest")->required();
    runcmd->add_option("--repeat", repeat, "Repetitions")->check(CLI::PositiveNumber);
    runcmd->add_option("--reports", reports, "Directory for per-run report files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        for (auto& ch : msg) {
            if (ch == '\n') ch = ' ';
        }
        std::fprintf(stderr, "tdf: %s\n", msg.c_str());
        return 1;
    }

    try {
        if (*synth) return cmd_synth(spec, out);
        if (*fit) return cmd_fit(config, manifest, out, run, all);
        if (*encode) return cmd_encode(config, bundle, manifest, out);
        if (*train) return cmd_train(config, encoded, out);
        if (*predict) return cmd_predict(model, encoded);
        if (*evaluate) return cmd_evaluate(model, encoded);
        if (*runcmd) return cmd_run(config, manifest, repeat, reports);
    } catch (const Exit& e) {
        return e.code;
    }
    return 1;
}
