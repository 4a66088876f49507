/* C ABI for the ontolabel weak-supervision engine. */

#ifndef ONTOLABEL_H
#define ONTOLABEL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible entry point.
typedef enum OlStatus {
  OL_STATUS_OK = 0,
  OL_STATUS_NULL_ARGUMENT = 1,
  OL_STATUS_INVALID_UTF8 = 2,
  OL_STATUS_IO = 3,
  OL_STATUS_PARSE = 4,
  OL_STATUS_INVALID_INPUT = 5,
  OL_STATUS_RUNTIME = 6,
} OlStatus;

// Opaque corpus handle.
typedef struct OlCorpus OlCorpus;

// Opaque label-matrix handle.
typedef struct OlLabelMatrix OlLabelMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as `name major.minor.patch`. Free with
// [`ol_string_free`].
char *ol_version(void);

// Message for the most recent error on this thread, or NULL. Free with
// [`ol_string_free`].
char *ol_last_error(void);

// Release a string allocated by this library.
//
// # Safety
// `s` must be a pointer previously returned by this library and not yet
// freed; NULL is ignored.
void ol_string_free(char *s);

// Tokenize text into sentences of tokens, returned as a JSON array of
// `{"index", "tokens": [{"text", "char_start", "char_end"}]}`.
//
// # Safety
// `text` must be NUL-terminated UTF-8; `out_json` must be a valid
// pointer.
enum OlStatus ol_tokenize_json(const char *text, char **out_json);

// Load a JSONL corpus file against a schema given as comma-separated
// class names plus the default class index.
//
// # Safety
// String arguments must be NUL-terminated UTF-8; `out` must be valid.
enum OlStatus ol_corpus_load(const char *path,
                             const char *class_names_csv,
                             uint32_t default_class,
                             struct OlCorpus **out);

// # Safety
// `c` must be a handle from [`ol_corpus_load`], not yet freed; NULL is
// ignored.
void ol_corpus_free(struct OlCorpus *c);

// # Safety
// `c` must be a live corpus handle.
int64_t ol_corpus_num_documents(const struct OlCorpus *c);

// # Safety
// `c` must be a live corpus handle.
int64_t ol_corpus_num_tokens(const struct OlCorpus *c);

// # Safety
// `c` must be a live corpus handle.
int64_t ol_corpus_num_gold_spans(const struct OlCorpus *c);

// Read a label matrix from its binary file (with the text sidecar next
// to it).
//
// # Safety
// `path` must be NUL-terminated UTF-8; `out` must be valid.
enum OlStatus ol_label_matrix_read(const char *path, struct OlLabelMatrix **out);

// # Safety
// `m` must be a handle from [`ol_label_matrix_read`], not yet freed;
// NULL is ignored.
void ol_label_matrix_free(struct OlLabelMatrix *m);

// # Safety
// `m` must be a live matrix handle.
int64_t ol_label_matrix_rows(const struct OlLabelMatrix *m);

// # Safety
// `m` must be a live matrix handle.
int64_t ol_label_matrix_cols(const struct OlLabelMatrix *m);

// A single vote (`-1` abstain, `0..k-1` a class); `-128` on bad indices.
//
// # Safety
// `m` must be a live matrix handle.
int8_t ol_label_matrix_vote(const struct OlLabelMatrix *m, uint64_t row, uint64_t col);

// Fit the label model on a matrix. `config_json` may be NULL for
// defaults. The fitted parameters are returned as JSON.
//
// # Safety
// `m` must be a live matrix handle; strings NUL-terminated UTF-8;
// `out_params_json` valid.
enum OlStatus ol_fit_label_model(const struct OlLabelMatrix *m,
                                 const char *class_names_csv,
                                 uint32_t default_class,
                                 const char *config_json,
                                 char **out_params_json);

// Majority-vote hard labels as a JSON array of integers.
//
// # Safety
// `m` must be a live matrix handle; strings NUL-terminated UTF-8;
// `out_labels_json` valid.
enum OlStatus ol_majority_vote_json(const struct OlLabelMatrix *m,
                                    const char *class_names_csv,
                                    uint32_t default_class,
                                    char **out_labels_json);

// Posterior soft labels for a matrix under fitted parameters, written to
// `out_path` as JSONL; hard labels are returned as a JSON array.
//
// # Safety
// `m` must be a live matrix handle; strings NUL-terminated UTF-8;
// `out_hard_json` valid.
enum OlStatus ol_predict_proba_jsonl(const struct OlLabelMatrix *m,
                                     const char *params_json,
                                     const char *class_names_csv,
                                     uint32_t default_class,
                                     const char *out_path,
                                     char **out_hard_json);

// Run the whole pipeline for a configuration file into a run directory.
// `seeds_csv` may be NULL to use the configured seeds.
//
// # Safety
// Strings must be NUL-terminated UTF-8.
enum OlStatus ol_run_pipeline(const char *config_path, const char *out_dir, const char *seeds_csv);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ONTOLABEL_H */
