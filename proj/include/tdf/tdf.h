/*
 * C interface to the temporal DFT feature library.
 *
 * Every fallible call returns a tdf_status; on failure a one-line message is
 * available from tdf_last_error() on the calling thread until the next call.
 * Objects are opaque handles released with their matching *_free function
 * (passing NULL is allowed). Strings returned through char** are allocated by
 * the library and released with tdf_string_free.
 */
#ifndef TDF_TDF_H
#define TDF_TDF_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(TDF_BUILDING_LIBRARY)
#    define TDF_API __declspec(dllexport)
#  else
#    define TDF_API __declspec(dllimport)
#  endif
#else
#  define TDF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
typedef enum tdf_status {
    TDF_OK = 0,
    TDF_ERR_CONFIG = 1,   /* bad arguments or configuration text */
    TDF_ERR_DATA = 2,     /* invalid data, model/config mismatch */
    TDF_ERR_IO = 3,       /* filesystem failure */
    TDF_ERR_INTERNAL = 4
} tdf_status;

typedef struct tdf_config tdf_config;
typedef struct tdf_manifest tdf_manifest;
typedef struct tdf_bundle tdf_bundle;
typedef struct tdf_svm tdf_svm;
typedef struct tdf_report tdf_report;
typedef struct tdf_experiment tdf_experiment;
typedef struct tdf_predictions tdf_predictions;

TDF_API const char* tdf_version(void);
TDF_API const char* tdf_last_error(void);
TDF_API void tdf_string_free(char* s);

/* Pipeline configuration (key=value text). */
TDF_API tdf_status tdf_config_load(const char* path, tdf_config** out);
TDF_API tdf_status tdf_config_parse(const char* text, tdf_config** out);
TDF_API tdf_status tdf_config_format(const tdf_config* config, char** out_text);
TDF_API void tdf_config_free(tdf_config* config);

/* Dataset manifests (video_id TAB feature_path TAB label). */
TDF_API tdf_status tdf_manifest_load(const char* path, tdf_manifest** out);
TDF_API tdf_status tdf_manifest_save(const tdf_manifest* manifest, const char* path);
TDF_API size_t tdf_manifest_size(const tdf_manifest* manifest);
TDF_API uint32_t tdf_manifest_num_classes(const tdf_manifest* manifest);
/* Stratified per-class split; deterministic in seed. */
TDF_API tdf_status tdf_manifest_split(const tdf_manifest* manifest, double train_fraction, uint64_t seed,
                                      tdf_manifest** train, tdf_manifest** test);
TDF_API void tdf_manifest_free(tdf_manifest* manifest);

/* Synthetic dataset: reads a generator spec, writes features and
 * manifest.tsv under out_dir and returns the manifest path. */
TDF_API tdf_status tdf_synth(const char* spec_path, const char* out_dir, char** out_manifest_path);

/* Model bundle (PCA + per-branch codebooks/GMMs). */
TDF_API tdf_status tdf_fit(const tdf_config* config, const tdf_manifest* train, tdf_bundle** out);
TDF_API tdf_status tdf_bundle_save(const tdf_bundle* bundle, const char* dir);
TDF_API tdf_status tdf_bundle_load(const tdf_config* config, const char* dir, tdf_bundle** out);
TDF_API void tdf_bundle_free(tdf_bundle* bundle);

/* Encodes every manifest entry to out_dir/<video_id>.tdfv and writes
 * out_dir/index.tsv; returns the index manifest. */
TDF_API tdf_status tdf_encode(const tdf_config* config, const tdf_bundle* bundle, const tdf_manifest* manifest,
                              const char* out_dir, tdf_manifest** out_index);

/* Linear SVM over an encoded index manifest. */
TDF_API tdf_status tdf_train(const tdf_config* config, const tdf_manifest* encoded, tdf_svm** out);
TDF_API tdf_status tdf_svm_save(const tdf_svm* model, const char* path);
TDF_API tdf_status tdf_svm_load(const char* path, tdf_svm** out);
TDF_API size_t tdf_svm_num_classes(const tdf_svm* model);
TDF_API size_t tdf_svm_dims(const tdf_svm* model);
TDF_API void tdf_svm_free(tdf_svm* model);

TDF_API tdf_status tdf_predict(const tdf_svm* model, const tdf_manifest* encoded, tdf_predictions** out);
TDF_API size_t tdf_predictions_size(const tdf_predictions* p);
TDF_API const char* tdf_predictions_video_id(const tdf_predictions* p, size_t i);
TDF_API uint32_t tdf_predictions_class(const tdf_predictions* p, size_t i);
/* Copies min(capacity, num_classes) scores of entry i into out. */
TDF_API size_t tdf_predictions_scores(const tdf_predictions* p, size_t i, double* out, size_t capacity);
TDF_API void tdf_predictions_free(tdf_predictions* p);

TDF_API tdf_status tdf_evaluate(const tdf_svm* model, const tdf_manifest* encoded, tdf_report** out);
TDF_API double tdf_report_overall_accuracy(const tdf_report* report);
TDF_API size_t tdf_report_num_classes(const tdf_report* report);
TDF_API double tdf_report_class_accuracy(const tdf_report* report, size_t cls);
TDF_API uint64_t tdf_report_confusion(const tdf_report* report, size_t truth, size_t predicted);
TDF_API tdf_status tdf_report_format(const tdf_report* report, char** out_text);
TDF_API void tdf_report_free(tdf_report* report);

/* Repeated split/fit/encode/train/evaluate runs. */
TDF_API tdf_status tdf_run(const tdf_config* config, const tdf_manifest* manifest, int repetitions,
                           tdf_experiment** out);
TDF_API size_t tdf_experiment_num_runs(const tdf_experiment* e);
TDF_API double tdf_experiment_mean_accuracy(const tdf_experiment* e);
/* Borrowed view of run i (0-based); owned by the experiment. */
TDF_API const tdf_report* tdf_experiment_run(const tdf_experiment* e, size_t i);
TDF_API tdf_status tdf_experiment_format(const tdf_experiment* e, char** out_text);
TDF_API void tdf_experiment_free(tdf_experiment* e);

/* Seed + train_fraction accessors used by staged tools. */
TDF_API uint64_t tdf_config_seed(const tdf_config* config);
TDF_API double tdf_config_train_fraction(const tdf_config* config);

#ifdef __cplusplus
}
#endif

#endif /* TDF_TDF_H */
