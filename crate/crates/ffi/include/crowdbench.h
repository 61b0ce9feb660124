#ifndef CROWDBENCH_H
#define CROWDBENCH_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a fallible call.
 */
typedef enum CbStatus {
  CB_STATUS_OK = 0,
  CB_STATUS_NULL_POINTER = 1,
  CB_STATUS_INVALID_ARGUMENT = 2,
  CB_STATUS_IO = 3,
  CB_STATUS_PARSE = 4,
  /**
   * The episode has already ended.
   */
  CB_STATUS_TERMINATED = 5,
  CB_STATUS_OUT_OF_RANGE = 6,
  CB_STATUS_BUFFER_TOO_SMALL = 7,
  CB_STATUS_PANIC = 8,
  CB_STATUS_INTERNAL = 9,
} CbStatus;

typedef enum CbControlMode {
  CB_CONTROL_MODE_UNICYCLE = 0,
  CB_CONTROL_MODE_HOLONOMIC = 1,
} CbControlMode;

typedef enum CbTerminationKind {
  CB_TERMINATION_KIND_RUNNING = 0,
  CB_TERMINATION_KIND_COMPLETION = 1,
  CB_TERMINATION_KIND_TIMEOUT = 2,
  CB_TERMINATION_KIND_ENVIRONMENT_COLLISION = 3,
} CbTerminationKind;

typedef enum CbPlannerKind {
  CB_PLANNER_KIND_SOCIAL_FORCES = 0,
  CB_PLANNER_KIND_ORCA = 1,
  CB_PLANNER_KIND_BASELINE = 2,
} CbPlannerKind;

/**
 * Loaded episode library.
 */
typedef struct CbLibrary CbLibrary;

/**
 * A bundled planner.
 */
typedef struct CbPlanner CbPlanner;

/**
 * One running episode.
 */
typedef struct CbSimulator CbSimulator;

/**
 * A command in either control mode; `a` and `b` are `(v, omega)` for
 * unicycle commands and `(vx, vy)` for holonomic ones.
 */
typedef struct CbCommand {
  enum CbControlMode mode;
  double a;
  double b;
} CbCommand;

/**
 * A disc agent: id -1 is the robot.
 */
typedef struct CbAgent {
  int64_t id;
  double x;
  double y;
  double heading;
  double vx;
  double vy;
  double radius;
} CbAgent;

typedef struct CbTermination {
  enum CbTerminationKind kind;
  bool success;
  uint32_t pedestrian_collisions;
  uint64_t tick;
  double sim_time;
} CbTermination;

/**
 * Per-episode summary metrics. Undefined values are NaN.
 */
typedef struct CbMetrics {
  bool success;
  uint32_t pedestrian_collisions;
  double path_length;
  double path_length_ratio;
  double goal_traversal_ratio;
  double path_irregularity;
  double traversal_time;
  double average_speed;
  double energy;
  double mean_closest_pedestrian_distance;
  double mean_time_to_collision;
} CbMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (always
 * NUL-terminated when `len > 0`) and returns the full message length in
 * bytes, or 0 when the last call succeeded.
 */
size_t cb_last_error(char *buf, size_t len);

/**
 * Wire protocol version spoken by this build.
 */
uint32_t cb_protocol_version(void);

void cb_string_free(char *s);

/**
 * Loads the library directory at `path`.
 */
enum CbStatus cb_library_load(const char *path, struct CbLibrary **out);

void cb_library_free(struct CbLibrary *lib);

enum CbStatus cb_library_episode_count(const struct CbLibrary *lib, size_t *out);

/**
 * Name of episode `index` as a newly allocated string.
 */
enum CbStatus cb_library_episode_name(const struct CbLibrary *lib, size_t index, char **out);

/**
 * Starts episode `index` with the default robot in `mode`.
 */
enum CbStatus cb_simulator_new(const struct CbLibrary *lib,
                               size_t index,
                               enum CbControlMode mode,
                               struct CbSimulator **out);

void cb_simulator_free(struct CbSimulator *sim);

/**
 * Advances one tick. Returns [`CbStatus::Terminated`] once the episode
 * has ended and [`CbStatus::InvalidArgument`] for a command in the wrong
 * control mode.
 */
enum CbStatus cb_simulator_step(struct CbSimulator *sim, const struct CbCommand *command);

enum CbStatus cb_simulator_robot(const struct CbSimulator *sim, struct CbAgent *out);

/**
 * Copies the pedestrians present at the current tick into `buf`.
 * `count` receives the number present; when it exceeds `capacity` nothing
 * is copied and [`CbStatus::BufferTooSmall`] is returned.
 */
enum CbStatus cb_simulator_pedestrians(const struct CbSimulator *sim,
                                       struct CbAgent *buf,
                                       size_t capacity,
                                       size_t *count);

enum CbStatus cb_simulator_termination(const struct CbSimulator *sim, struct CbTermination *out);

/**
 * The episode log so far, as JSON lines.
 */
enum CbStatus cb_simulator_log_jsonl(const struct CbSimulator *sim, char **out);

/**
 * Metrics of a finished episode given its JSON-lines log.
 */
enum CbStatus cb_metrics_from_log(const char *jsonl, struct CbMetrics *out);

/**
 * Smallest time-to-collision between `robot` and `count` pedestrians,
 * saturated at 10 s.
 */
enum CbStatus cb_time_to_collision(const struct CbAgent *robot,
                                   const struct CbAgent *pedestrians,
                                   size_t count,
                                   double *out);

/**
 * A bundled planner with default parameters.
 */
enum CbStatus cb_planner_new(enum CbPlannerKind kind, struct CbPlanner **out);

void cb_planner_free(struct CbPlanner *planner);

/**
 * Control mode the planner's commands use; create the simulator with it.
 */
enum CbStatus cb_planner_control_mode(const struct CbPlanner *planner, enum CbControlMode *out);

/**
 * Prepares the planner for the simulator's episode.
 */
enum CbStatus cb_planner_reset(struct CbPlanner *planner, const struct CbSimulator *sim);

/**
 * Command for the simulator's current state.
 */
enum CbStatus cb_planner_plan(struct CbPlanner *planner,
                              const struct CbSimulator *sim,
                              struct CbCommand *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CROWDBENCH_H */
