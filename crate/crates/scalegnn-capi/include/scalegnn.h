/* C interface to the scalegnn library. */

#ifndef SCALEGNN_H
#define SCALEGNN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum SgStatus {
  SgOk = 0,
  SgErrInvalidArgument = 1,
  SgErrData = 2,
  SgErrCompute = 3,
  SgErrNullPointer = 4,
} SgStatus;

/**
 * Opaque task dataset (uniform task kind).
 */
typedef struct SgDataset SgDataset;

/**
 * Opaque attributed graph.
 */
typedef struct SgGraph SgGraph;

/**
 * Opaque trained model (spec plus parameters).
 */
typedef struct SgModel SgModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static C string.
 */
const char *sg_version(void);

/**
 * Message for the most recent failure on this thread. Valid until the
 * next failing call on the same thread.
 */
const char *sg_last_error(void);

/**
 * Generate a random graph: kind is er | knn | planar | lobster with the
 * library's default parameters for that family.
 *
 * # Safety
 * `kind` must be a valid C string and `out` a valid pointer.
 */
enum SgStatus sg_graph_generate(const char *kind, uintptr_t n, uint64_t seed, struct SgGraph **out);

/**
 * # Safety
 * `graph` must come from this library and not be freed yet.
 */
void sg_graph_free(struct SgGraph *graph);

/**
 * # Safety
 * Valid `graph` and `out` pointers.
 */
enum SgStatus sg_graph_num_nodes(const struct SgGraph *graph, uintptr_t *out);

/**
 * # Safety
 * Valid `graph` and `out` pointers.
 */
enum SgStatus sg_graph_num_edges(const struct SgGraph *graph, uintptr_t *out);

/**
 * Longest shortest-path hop count over reachable pairs.
 *
 * # Safety
 * Valid `graph` and `out` pointers.
 */
enum SgStatus sg_graph_diameter(const struct SgGraph *graph, uintptr_t *out);

/**
 * Exact shortest-path length over directed edges (weight 1 when the
 * graph is unweighted). Fails if the target is unreachable.
 *
 * # Safety
 * Valid `graph` and `out` pointers.
 */
enum SgStatus sg_shortest_path_length(const struct SgGraph *graph,
                                      uintptr_t source,
                                      uintptr_t target,
                                      double *out);

/**
 * # Safety
 * Valid `graph` and `out` pointers.
 */
enum SgStatus sg_component_count(const struct SgGraph *graph, uintptr_t *out);

/**
 * Exact optimal closed-tour length for up to 16 points given as
 * interleaved x,y pairs.
 *
 * # Safety
 * `xy` must point to `2*n` readable doubles; `out` must be valid.
 */
enum SgStatus sg_tsp_exact(const double *xy, uintptr_t n, double *out);

/**
 * Nearest-neighbour plus 2-opt tour; `out_approximate` is set to 1 to
 * flag that the length is an upper bound.
 *
 * # Safety
 * `xy` must point to `2*n` readable doubles; outputs must be valid.
 */
enum SgStatus sg_tsp_heuristic(const double *xy,
                               uintptr_t n,
                               double *out_length,
                               int *out_approximate);

/**
 * Generate a dataset. Tasks: shortest-path | component-counting | tsp |
 * physics | navigation. Pass `weighted = 0` for unit edge weights.
 *
 * # Safety
 * `task` and `generator` must be valid C strings; `out` a valid pointer.
 */
enum SgStatus sg_dataset_generate(const char *task,
                                  const char *generator,
                                  uintptr_t n_min,
                                  uintptr_t n_max,
                                  uintptr_t count,
                                  uint64_t seed,
                                  int weighted,
                                  double weight_min,
                                  double weight_max,
                                  struct SgDataset **out);

/**
 * # Safety
 * Valid `dataset` and `out` pointers.
 */
enum SgStatus sg_dataset_len(const struct SgDataset *dataset, uintptr_t *out);

/**
 * Scalar target of sample `index` (NaN for per-node targets).
 *
 * # Safety
 * Valid `dataset` and `out` pointers.
 */
enum SgStatus sg_dataset_target(const struct SgDataset *dataset, uintptr_t index, double *out);

/**
 * Write newline-delimited JSON records.
 *
 * # Safety
 * Valid `dataset` handle; `path` a valid C string.
 */
enum SgStatus sg_dataset_write(const struct SgDataset *dataset, const char *path);

/**
 * # Safety
 * `path` a valid C string; `out` a valid pointer.
 */
enum SgStatus sg_dataset_read(const char *path, struct SgDataset **out);

/**
 * # Safety
 * `dataset` must come from this library and not be freed yet.
 */
void sg_dataset_free(struct SgDataset *dataset);

/**
 * Load a checkpoint JSON written by training.
 *
 * # Safety
 * `path` a valid C string; `out` a valid pointer.
 */
enum SgStatus sg_model_load(const char *path, struct SgModel **out);

/**
 * Run streaming inference on a dataset sample and return the model's
 * scalar prediction.
 *
 * # Safety
 * Valid handles and `out` pointer.
 */
enum SgStatus sg_model_predict_sample(const struct SgModel *model,
                                      const struct SgDataset *dataset,
                                      uintptr_t index,
                                      double *out);

/**
 * # Safety
 * `model` must come from this library and not be freed yet.
 */
void sg_model_free(struct SgModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCALEGNN_H */
