#ifndef COTRANSPORT_H
#define COTRANSPORT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  CT_STATUS_OK = 0,
  CT_STATUS_NULL_POINTER = 1,
  CT_STATUS_INVALID_ARGUMENT = 2,
  CT_STATUS_CONFIG = 3,
  CT_STATUS_IO = 4,
  CT_STATUS_NO_PATH = 5,
  CT_STATUS_PLANNING = 6,
  CT_STATUS_FAULT = 7,
  CT_STATUS_BUFFER_TOO_SMALL = 8,
  CT_STATUS_PANIC = 9,
} CtStatus;

/**
 * Run summary.
 */
typedef struct CtMetrics CtMetrics;

/**
 * Scenario configuration.
 */
typedef struct CtScenario CtScenario;

/**
 * Piecewise-polynomial reference.
 */
typedef struct CtTrajectory CtTrajectory;

/**
 * Running simulation.
 */
typedef struct CtWorld CtWorld;

/**
 * Scalar summary statistics. Missing values read as NaN.
 */
typedef struct {
  uint64_t samples;
  double rmse_x;
  double rmse_y;
  double rmse_theta;
  double rmse_eta1;
  double rmse_eta2;
  double follower_force_rmse_x;
  double follower_force_rmse_y;
  uint32_t trigger_events;
} CtMetricsSummary;

/**
 * Payload state: CoG position, heading, body-frame velocity of `c2`, yaw rate.
 */
typedef struct {
  double x;
  double y;
  double z;
  double theta;
  double v;
  double v_lat;
  double omega;
} CtPayloadState;

typedef struct {
  double x;
  double y;
  double t;
} CtWaypoint;

typedef struct {
  double x;
  double y;
  double vx;
  double vy;
  double ax;
  double ay;
  double theta;
  double speed;
  double omega;
} CtReference;

typedef struct {
  double x;
  double y;
  double theta;
} CtPose;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (capacity `cap`,
 * including the terminating NUL). Returns the message length; the copy only
 * happens when `cap` exceeds it.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t ct_last_error(char *buf, size_t cap);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ct_version(void);

/**
 * Loads and validates a scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
CtStatus ct_scenario_load(const char *path, CtScenario **out);

/**
 * Parses and validates scenario text. Relative paths resolve against the working directory.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
CtStatus ct_scenario_parse(const char *text, CtScenario **out);

/**
 * # Safety
 * `scenario` must be a handle from this library.
 */
CtStatus ct_scenario_set_seed(CtScenario *scenario, uint64_t seed);

/**
 * # Safety
 * `scenario` must be a handle from this library, or null.
 */
void ct_scenario_free(CtScenario *scenario);

/**
 * Runs a scenario to completion without writing files.
 *
 * # Safety
 * `scenario` must be a handle from this library; `out` must be writable.
 */
CtStatus ct_run(const CtScenario *scenario, CtMetrics **out);

/**
 * Runs a scenario writing `<name>.csv` and `<name>.metrics.json` into `dir`.
 *
 * # Safety
 * `scenario` must be a handle from this library; `dir` a NUL-terminated string.
 * `out` may be null when the metrics are not needed.
 */
CtStatus ct_run_to_dir(const CtScenario *scenario, const char *dir, CtMetrics **out);

/**
 * # Safety
 * `metrics` must be a handle from this library; `out` must be writable.
 */
CtStatus ct_metrics_summary(const CtMetrics *metrics, CtMetricsSummary *out);

/**
 * Full metrics as JSON. Writes the length (without NUL) to `len` and copies
 * into `buf` when `cap` is large enough, else returns `BufferTooSmall`.
 *
 * # Safety
 * `metrics` must be a handle from this library; `buf` null or `cap` bytes; `len` writable.
 */
CtStatus ct_metrics_json(const CtMetrics *metrics, char *buf, size_t cap, size_t *len);

/**
 * # Safety
 * `metrics` must be a handle from this library, or null.
 */
void ct_metrics_free(CtMetrics *metrics);

/**
 * Creates a world at time zero. The scenario may be freed afterwards.
 *
 * # Safety
 * `scenario` must be a handle from this library; `out` must be writable.
 */
CtStatus ct_world_new(const CtScenario *scenario, CtWorld **out);

/**
 * Advances `ticks` control periods.
 *
 * # Safety
 * `world` must be a handle from this library.
 */
CtStatus ct_world_advance(CtWorld *world, uint64_t ticks);

/**
 * # Safety
 * `world` must be a handle from this library; `t` and `state` writable.
 */
CtStatus ct_world_state(const CtWorld *world, double *t, CtPayloadState *state);

/**
 * # Safety
 * `world` must be a handle from this library, or null.
 */
void ct_world_free(CtWorld *world);

/**
 * Rest-to-rest minimum-snap trajectory through `n` waypoints.
 *
 * # Safety
 * `waypoints` must point to `n` elements; `out` must be writable.
 */
CtStatus ct_trajectory_new(const CtWaypoint *waypoints,
                           size_t n,
                           double altitude,
                           CtTrajectory **out);

/**
 * # Safety
 * `traj` must be a handle from this library; `start` and `end` writable.
 */
CtStatus ct_trajectory_span(const CtTrajectory *traj, double *start, double *end);

/**
 * Reference at time `t`. `previous_heading` resolves the heading where the speed vanishes.
 *
 * # Safety
 * `traj` must be a handle from this library; `out` writable.
 */
CtStatus ct_trajectory_sample(const CtTrajectory *traj,
                              double t,
                              double previous_heading,
                              CtReference *out);

/**
 * # Safety
 * `traj` must be a handle from this library, or null.
 */
void ct_trajectory_free(CtTrajectory *traj);

/**
 * Plans timed waypoints over an occupancy grid given in its text format,
 * with default planner settings. `count` receives the number of waypoints;
 * they are copied only when `cap` suffices, else `BufferTooSmall`.
 *
 * # Safety
 * `grid_text` must be NUL-terminated; `out` null or `cap` elements; `count` writable.
 */
CtStatus ct_plan(const char *grid_text,
                 CtPose start,
                 CtPose goal,
                 CtWaypoint *out,
                 size_t cap,
                 size_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COTRANSPORT_H */
