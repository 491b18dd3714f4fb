#ifndef BELIEFDIAG_H
#define BELIEFDIAG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Evidence propagation followed by probability propagation.
 */
#define BD_STRATEGY_BATCH 0

/**
 * Message passing on a forest, one assertion at a time.
 */
#define BD_STRATEGY_MESSAGE 1

/**
 * Message passing on a forest, all assertions at once.
 */
#define BD_STRATEGY_PRIORITY 2

/**
 * Result of every call.
 */
typedef enum BdStatus {
  BD_STATUS_OK = 0,
  BD_STATUS_NULL_ARGUMENT = 1,
  BD_STATUS_INVALID_UTF8 = 2,
  BD_STATUS_PARSE_ERROR = 3,
  BD_STATUS_INVALID_DIAGRAM = 4,
  BD_STATUS_UNKNOWN_NODE = 5,
  BD_STATUS_UNKNOWN_OUTCOME = 6,
  BD_STATUS_OUT_OF_RANGE = 7,
  BD_STATUS_IMPOSSIBLE_EVIDENCE = 8,
  BD_STATUS_NOT_SINGLY_CONNECTED = 9,
  BD_STATUS_NOT_A_FOREST = 10,
  BD_STATUS_INFERENCE_ERROR = 11,
  BD_STATUS_PANIC = 12,
} BdStatus;

/**
 * A parsed diagram plus the evidence asserted on it so far.
 */
typedef struct BdDiagram BdDiagram;

/**
 * Posterior marginals from [`bd_query`].
 */
typedef struct BdReport BdReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread, or NULL after a successful call. The
 * pointer stays valid until the next call on this thread.
 */
const char *bd_last_error_message(void);

/**
 * Parses a network document. Evidence in the document's evidence block is
 * recorded on the handle.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum BdStatus bd_diagram_parse(const char *text, struct BdDiagram **out);

/**
 * Releases a diagram. NULL is ignored.
 *
 * # Safety
 * `d` must come from [`bd_diagram_parse`] and not be used afterwards.
 */
void bd_diagram_free(struct BdDiagram *d);

/**
 * # Safety
 * `d` must be a live diagram handle and `out` a valid pointer.
 */
enum BdStatus bd_diagram_node_count(const struct BdDiagram *d, size_t *out);

/**
 * Index of the node called `name`; indices run from 0 in declaration order.
 *
 * # Safety
 * `d` must be a live diagram handle, `name` a NUL-terminated string and
 * `out` a valid pointer.
 */
enum BdStatus bd_diagram_node_index(const struct BdDiagram *d, const char *name, size_t *out);

/**
 * Number of outcomes of node `node`.
 *
 * # Safety
 * `d` must be a live diagram handle and `out` a valid pointer.
 */
enum BdStatus bd_diagram_outcome_count(const struct BdDiagram *d, size_t node, size_t *out);

/**
 * Records the assertion `node = outcome` for later queries.
 *
 * # Safety
 * `d` must be a live diagram handle; `node` and `outcome` NUL-terminated
 * strings.
 */
enum BdStatus bd_diagram_observe(struct BdDiagram *d, const char *node, const char *outcome);

/**
 * Forgets every recorded assertion.
 *
 * # Safety
 * `d` must be a live diagram handle.
 */
enum BdStatus bd_diagram_clear_evidence(struct BdDiagram *d);

/**
 * Posterior marginals given the recorded evidence. The diagram itself is
 * left unchanged. `strategy` is one of the `BD_STRATEGY_*` constants.
 *
 * # Safety
 * `d` must be a live diagram handle and `out` a valid pointer.
 */
enum BdStatus bd_query(const struct BdDiagram *d,
                       uint32_t strategy,
                       bool allow_fallback,
                       struct BdReport **out);

/**
 * Posterior probability of outcome `outcome` of node `node`.
 *
 * # Safety
 * `r` must be a live report handle and `out` a valid pointer.
 */
enum BdStatus bd_report_marginal(const struct BdReport *r,
                                 size_t node,
                                 size_t outcome,
                                 double *out);

/**
 * Releases a report. NULL is ignored.
 *
 * # Safety
 * `r` must come from [`bd_query`] and not be used afterwards.
 */
void bd_report_free(struct BdReport *r);

/**
 * The diagram in the network text format.
 *
 * # Safety
 * `d` must be a live diagram handle and `out` a valid pointer. Free the
 * result with [`bd_string_free`].
 */
enum BdStatus bd_diagram_write(const struct BdDiagram *d, char **out);

/**
 * The diagram as Graphviz DOT.
 *
 * # Safety
 * As [`bd_diagram_write`].
 */
enum BdStatus bd_diagram_dot(const struct BdDiagram *d, char **out);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void bd_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BELIEFDIAG_H */
