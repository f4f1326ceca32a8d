#ifndef POSETGAME_H
#define POSETGAME_H

#include <stdbool.h>
#include <stdint.h>
#include <stddef.h>

// Include per-round solver state in the solution.
#define PG_FLAG_TRACE 1

// Write decimals instead of exact fractions.
#define PG_FLAG_DECIMAL 2

// Reject explicit chain values and use the affine solver only.
#define PG_FLAG_AFFINE 4

// Result of every call. The first five values match the CLI exit status.
typedef enum PgStatus {
  PG_STATUS_OK = 0,
  PG_STATUS_MALFORMED_INPUT = 1,
  PG_STATUS_CONDITIONS_VIOLATED = 2,
  PG_STATUS_RESOURCE_LIMIT = 3,
  PG_STATUS_INTERNAL = 4,
  PG_STATUS_NULL_ARGUMENT = 5,
  PG_STATUS_INVALID_UTF8 = 6,
  PG_STATUS_PANIC = 7,
} PgStatus;

// A validated flow network.
typedef struct PgNetwork PgNetwork;

// A parsed chain-constraint problem.
typedef struct PgProblem PgProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses a problem document. On success `*out` owns a new handle.
//
// # Safety
// `json` must be a nul-terminated string and `out` a valid pointer.
enum PgStatus pg_problem_from_json(const char *json, struct PgProblem **out);

// # Safety
// `problem` must come from [`pg_problem_from_json`] or be null.
void pg_problem_free(struct PgProblem *problem);

// Checks the chain slack and conservation conditions. Returns
// `PG_STATUS_CONDITIONS_VIOLATED` when either fails; both flags are
// written in that case too.
//
// # Safety
// Pointers must be valid; the output flags may be null.
enum PgStatus pg_problem_check(const struct PgProblem *problem,
                               bool *necessary_ok,
                               bool *conservation_ok);

// Solves the problem and writes the solution document to `*out_json`.
//
// # Safety
// `problem` and `out_json` must be valid.
enum PgStatus pg_problem_solve(const struct PgProblem *problem, uint32_t flags, char **out_json);

// Parses a network document. On success `*out` owns a new handle.
//
// # Safety
// `json` must be a nul-terminated string and `out` a valid pointer.
enum PgStatus pg_network_from_json(const char *json, struct PgNetwork **out);

// # Safety
// `network` must come from [`pg_network_from_json`] or be null.
void pg_network_free(struct PgNetwork *network);

// Computes a mixed equilibrium.
//
// # Safety
// `network` and `out_json` must be valid.
enum PgStatus pg_network_solve_ne(const struct PgNetwork *network, uint32_t flags, char **out_json);

// Computes best-response gaps for a profile document. `*is_ne` is set when
// neither player can gain; the report is written either way.
//
// # Safety
// All pointers except `is_ne` must be valid.
enum PgStatus pg_network_verify_ne(const struct PgNetwork *network,
                                   const char *profile_json,
                                   uint32_t flags,
                                   bool *is_ne,
                                   char **out_json);

// Paths and edges used by some equilibrium.
//
// # Safety
// `network` and `out_json` must be valid.
enum PgStatus pg_network_critical(const struct PgNetwork *network, char **out_json);

// Flow, cost and interdiction totals at the computed equilibrium.
//
// # Safety
// `network` and `out_json` must be valid.
enum PgStatus pg_network_quantities(const struct PgNetwork *network,
                                    uint32_t flags,
                                    char **out_json);

// Looks for an equilibrium in which the interdictor stays idle.
//
// # Safety
// `network` and `out_json` must be valid.
enum PgStatus pg_network_pure_ne(const struct PgNetwork *network, uint32_t flags, char **out_json);

// # Safety
// `s` must come from this library or be null.
void pg_string_free(char *s);

// Message for the last failed call on this thread, or null. Valid until
// the next call on the same thread.
const char *pg_last_error_message(void);

// Library version as a static string.
const char *pg_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POSETGAME_H */
