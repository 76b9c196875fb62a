#ifndef CHRONOLM_H
#define CHRONOLM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ChronolmStatus {
  CHRONOLM_STATUS_OK = 0,
  CHRONOLM_STATUS_NULL_ARGUMENT = 1,
  CHRONOLM_STATUS_INVALID_UTF8 = 2,
  CHRONOLM_STATUS_MISSING_INPUT = 3,
  CHRONOLM_STATUS_MALFORMED = 4,
  CHRONOLM_STATUS_CONFIG = 5,
  CHRONOLM_STATUS_RUNTIME = 6,
  CHRONOLM_STATUS_OUT_OF_VOCABULARY = 7,
  CHRONOLM_STATUS_BUFFER_TOO_SMALL = 8,
  CHRONOLM_STATUS_PANIC = 9,
} ChronolmStatus;

// A citation graph read from `nodes.tsv` and `edges.tsv`.
typedef struct ChronolmGraph ChronolmGraph;

// A checkpoint loaded as an inference model.
typedef struct ChronolmModel ChronolmModel;

// A vocabulary read from its TSV file.
typedef struct ChronolmVocab ChronolmVocab;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, a static string.
const char *chronolm_version(void);

// Message of the last failed call on this thread, or NULL after a success.
// The pointer stays valid until the next call into the library on this
// thread.
const char *chronolm_last_error(void);

// # Safety
// `path` must be a valid C string and `out` a valid pointer.
enum ChronolmStatus chronolm_vocab_load(const char *path, struct ChronolmVocab **out);

// Number of entries including special tokens; 0 for NULL.
//
// # Safety
// `vocab` must be NULL or a live handle.
size_t chronolm_vocab_size(const struct ChronolmVocab *vocab);

// # Safety
// `vocab` must be NULL or a handle not yet freed.
void chronolm_vocab_free(struct ChronolmVocab *vocab);

// # Safety
// `path` must be a valid C string and `out` a valid pointer.
enum ChronolmStatus chronolm_model_load(const char *path, struct ChronolmModel **out);

// Last corpus year the checkpoint was trained through; 0 for NULL.
//
// # Safety
// `model` must be NULL or a live handle.
int32_t chronolm_model_year(const struct ChronolmModel *model);

// Width of the [CLS] feature vector; 0 for NULL.
//
// # Safety
// `model` must be NULL or a live handle.
size_t chronolm_model_hidden_size(const struct ChronolmModel *model);

// # Safety
// `model` must be NULL or a handle not yet freed.
void chronolm_model_free(struct ChronolmModel *model);

// Probability of `token` at the single `[MASK]` of `sentence`.
//
// # Safety
// Handles must be live, strings valid, `probability` a valid pointer.
enum ChronolmStatus chronolm_token_probability(const struct ChronolmModel *model,
                                               const struct ChronolmVocab *vocab,
                                               const char *sentence,
                                               const char *token,
                                               double *probability);

// Writes the [CLS] vector of `text` into `buffer`. `written` receives the
// vector length even when `capacity` is too small.
//
// # Safety
// Handles must be live, `buffer` must hold `capacity` doubles.
enum ChronolmStatus chronolm_encode_cls(const struct ChronolmModel *model,
                                        const struct ChronolmVocab *vocab,
                                        const char *text,
                                        double *buffer,
                                        size_t capacity,
                                        size_t *written);

// Writes `(1 - lambda) * a + lambda * b` to `out_path`.
//
// # Safety
// All paths must be valid C strings.
enum ChronolmStatus chronolm_interpolate(const char *a_path,
                                         const char *b_path,
                                         double lambda,
                                         const char *out_path);

// # Safety
// Paths must be valid C strings and `out` a valid pointer.
enum ChronolmStatus chronolm_graph_load(const char *nodes_path,
                                        const char *edges_path,
                                        struct ChronolmGraph **out);

// Node count; 0 for NULL.
//
// # Safety
// `graph` must be NULL or a live handle.
size_t chronolm_graph_num_nodes(const struct ChronolmGraph *graph);

// Index of the node with identifier `id`.
//
// # Safety
// `graph` must be live, `id` valid and `index` a valid pointer.
enum ChronolmStatus chronolm_graph_node_index(const struct ChronolmGraph *graph,
                                              const char *id,
                                              size_t *index);

// Scores `n` node pairs `(sources[i], targets[i])` with a topological
// predictor: `cn`, `jc`, `pa`, `aa`, `ra` or `ppr` (restart 0.15).
//
// # Safety
// `graph` must be live; the three arrays must each hold `n` elements.
enum ChronolmStatus chronolm_graph_score(const struct ChronolmGraph *graph,
                                         const char *predictor,
                                         const size_t *sources,
                                         const size_t *targets,
                                         size_t n,
                                         double *scores);

// # Safety
// `graph` must be NULL or a handle not yet freed.
void chronolm_graph_free(struct ChronolmGraph *graph);

// Rank-based ROC AUC with ties counted half. `labels` holds 0 or 1.
//
// # Safety
// `scores` and `labels` must hold `n` elements; `auc` must be valid.
enum ChronolmStatus chronolm_auc(const double *scores,
                                 const uint8_t *labels,
                                 size_t n,
                                 double *auc);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHRONOLM_H */
