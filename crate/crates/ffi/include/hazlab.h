#ifndef HAZLAB_H
#define HAZLAB_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum HazlabStatus {
  HAZLAB_STATUS_OK = 0,
  HAZLAB_STATUS_NULL_ARGUMENT = 1,
  HAZLAB_STATUS_INVALID_UTF8 = 2,
  HAZLAB_STATUS_INVALID_ARGUMENT = 3,
  HAZLAB_STATUS_NOT_FOUND = 4,
  HAZLAB_STATUS_VERSION_CONFLICT = 5,
  HAZLAB_STATUS_RULE_VIOLATION = 6,
  HAZLAB_STATUS_MALFORMED_INPUT = 7,
  HAZLAB_STATUS_INVALID_MODEL = 8,
  HAZLAB_STATUS_IO = 9,
  HAZLAB_STATUS_PANIC = 10,
} HazlabStatus;

/**
 * Opaque project handle. Safe to share between threads.
 */
typedef struct HazlabProject HazlabProject;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *hazlab_version(void);

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call on the same thread.
 */
const char *hazlab_last_error_message(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void hazlab_string_free(char *s);

/**
 * Opens a project file. Decisions are persisted to it on every change.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum HazlabStatus hazlab_project_open(const char *path, struct HazlabProject **out);

/**
 * Builds an in-memory project from HazLang source. On model errors returns
 * `InvalidModel` and the last error lists the findings.
 *
 * # Safety
 * `source` and `name` must be NUL-terminated strings; `out` must be writable.
 */
enum HazlabStatus hazlab_project_from_hzl(const char *source,
                                          const char *name,
                                          struct HazlabProject **out);

/**
 * Releases a project handle. NULL is ignored.
 *
 * # Safety
 * `project` must come from this library and not be freed twice.
 */
void hazlab_project_free(struct HazlabProject *project);

/**
 * Writes the project to `path` and keeps persisting there.
 *
 * # Safety
 * `project` must be a live handle and `path` a NUL-terminated string.
 */
enum HazlabStatus hazlab_project_save(const struct HazlabProject *project, const char *path);

/**
 * Full project document as JSON.
 *
 * # Safety
 * `project` must be a live handle; `out` must be writable.
 */
enum HazlabStatus hazlab_project_json(const struct HazlabProject *project, char **out);

/**
 * Runs generation. `strategy` is "deviation", "malfunction" or "both";
 * `catalog` may be NULL to use every catalog. Writes the generation summary.
 *
 * # Safety
 * `project` must be a live handle, `strategy` a NUL-terminated string,
 * `catalog` NULL or NUL-terminated; `out` must be writable.
 */
enum HazlabStatus hazlab_project_generate(const struct HazlabProject *project,
                                          const char *strategy,
                                          const char *catalog,
                                          char **out);

/**
 * Comparison report for one catalog. `catalog` may be NULL when the project
 * has exactly one.
 *
 * # Safety
 * `project` must be a live handle, `catalog` NULL or NUL-terminated; `out`
 * must be writable.
 */
enum HazlabStatus hazlab_project_compare_json(const struct HazlabProject *project,
                                              const char *catalog,
                                              char **out);

/**
 * Records a decision. `command_json` has the fields `phs`, `new_status`,
 * `rationale`, `reviewer` and `expected_version`. Writes the new review state.
 *
 * # Safety
 * `project` must be a live handle, `command_json` NUL-terminated; `out` must
 * be writable.
 */
enum HazlabStatus hazlab_project_record_decision(const struct HazlabProject *project,
                                                 const char *command_json,
                                                 char **out);

/**
 * Creates a hazard on a hazardous PHS. Writes the created hazard.
 *
 * # Safety
 * `project` must be a live handle, `hazard_json` NUL-terminated; `out` must
 * be writable.
 */
enum HazlabStatus hazlab_project_create_hazard(const struct HazlabProject *project,
                                               const char *hazard_json,
                                               char **out);

/**
 * Links a hazard to the malfunctions that map to its deviation. Writes the
 * trace links.
 *
 * # Safety
 * `project` must be a live handle, `hazard` NUL-terminated, `catalog` NULL
 * or NUL-terminated; `out` must be writable.
 */
enum HazlabStatus hazlab_project_trace(const struct HazlabProject *project,
                                       const char *hazard,
                                       const char *catalog,
                                       char **out);

/**
 * Exports the worksheet as "csv" or "json".
 *
 * # Safety
 * `project` must be a live handle, `format` NUL-terminated; `out` must be
 * writable.
 */
enum HazlabStatus hazlab_project_export(const struct HazlabProject *project,
                                        const char *format,
                                        char **out);

/**
 * Imports an edited worksheet. `format` may be NULL to detect it. A malformed
 * document changes nothing and returns `MalformedInput`. Writes
 * `{"applied": n, "warnings": [...]}`.
 *
 * # Safety
 * `project` must be a live handle, `doc` and `reviewer` NUL-terminated,
 * `format` NULL or NUL-terminated; `out` must be writable.
 */
enum HazlabStatus hazlab_project_import(const struct HazlabProject *project,
                                        const char *doc,
                                        const char *format,
                                        const char *reviewer,
                                        char **out);

/**
 * Summary report as JSON.
 *
 * # Safety
 * `project` must be a live handle; `out` must be writable.
 */
enum HazlabStatus hazlab_project_summary_json(const struct HazlabProject *project, char **out);

/**
 * Checks HazLang source without building a project. Writes the findings as a
 * JSON array and returns `InvalidModel` when any of them is an error.
 *
 * # Safety
 * `path` and `source` must be NUL-terminated; `out` must be writable.
 */
enum HazlabStatus hazlab_check_source(const char *path, const char *source, char **out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* HAZLAB_H */
