#ifndef PINET_H
#define PINET_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum PinetStatus {
  PINET_STATUS_OK = 0,
  PINET_STATUS_NULL_ARGUMENT = 1,
  PINET_STATUS_INVALID_UTF8 = 2,
  PINET_STATUS_IO = 3,
  PINET_STATUS_INVALID_SCENARIO = 4,
  PINET_STATUS_UNKNOWN_OBJECTIVE = 5,
  PINET_STATUS_INFEASIBLE = 6,
  /**
   * A solve stopped at the node limit before finding any assignment.
   */
  PINET_STATUS_NODE_LIMIT = 7,
  PINET_STATUS_INTERNAL = 8,
} PinetStatus;

/**
 * Opaque scenario handle.
 */
typedef struct PinetScenario PinetScenario;

/**
 * Solver settings. Start from [`pinet_solver_options_default`].
 */
typedef struct PinetSolverOptions {
  bool per_module_destinations;
  /**
   * 0 searches until optimality is proven.
   */
  uint64_t node_limit;
} PinetSolverOptions;

/**
 * KPI values of one solve, in reporting units (modules, hours, currency, hours).
 */
typedef struct PinetKpis {
  double kpi1;
  double kpi2;
  double kpi3;
  double kpi4;
  double objective_value;
  /**
   * True when the search finished; false when it stopped at the node limit.
   */
  bool proven_optimal;
  uint64_t explored;
  size_t modules;
} PinetKpis;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *pinet_version(void);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call on the same thread.
 */
const char *pinet_last_error(void);

struct PinetSolverOptions pinet_solver_options_default(void);

/**
 * Loads and validates a TOML scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum PinetStatus pinet_scenario_load_file(const char *path, struct PinetScenario **out);

/**
 * Parses and validates a scenario from TOML text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a writable pointer.
 */
enum PinetStatus pinet_scenario_load_str(const char *toml, struct PinetScenario **out);

/**
 * # Safety
 * `scenario` must be null or a handle from `pinet_scenario_load*` not yet freed.
 */
void pinet_scenario_free(struct PinetScenario *scenario);

/**
 * Number of modules over all shipments.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
size_t pinet_scenario_module_count(const struct PinetScenario *scenario);

/**
 * Solves the routing problem for `objective` ("J1".."J4" or "C1".."C4") at
 * nominal hub times. `options` may be null for the defaults.
 *
 * # Safety
 * `scenario` must be a live handle, `objective` a NUL-terminated string,
 * `options` null or readable, and `out` writable.
 */
enum PinetStatus pinet_solve(const struct PinetScenario *scenario,
                             const char *objective_name,
                             const struct PinetSolverOptions *options_ptr,
                             struct PinetKpis *out);

/**
 * Writes the mixed-integer model for `objective` in LP format into a new
 * string owned by the caller.
 *
 * # Safety
 * Same as [`pinet_solve`]; `out` receives a string for [`pinet_string_free`].
 */
enum PinetStatus pinet_export_lp(const struct PinetScenario *scenario,
                                 const char *objective_name,
                                 const struct PinetSolverOptions *options_ptr,
                                 char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void pinet_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PINET_H */
