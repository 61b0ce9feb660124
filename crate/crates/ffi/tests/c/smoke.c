#include <stdio.h>
#include <string.h>

#include "crowdbench.h"

#define CHECK(call)                                                        \
  do {                                                                     \
    CbStatus s_ = (call);                                                  \
    if (s_ != CB_STATUS_OK) {                                              \
      char msg_[256];                                                      \
      cb_last_error(msg_, sizeof msg_);                                    \
      fprintf(stderr, "%s failed (%d): %s\n", #call, (int)s_, msg_);      \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(int argc, char **argv) {
  if (argc != 2) {
    fprintf(stderr, "usage: smoke <library>\n");
    return 2;
  }
  CbLibrary *lib = NULL;
  CHECK(cb_library_load(argv[1], &lib));
  size_t n = 0;
  CHECK(cb_library_episode_count(lib, &n));

  CbPlanner *planner = NULL;
  CHECK(cb_planner_new(CB_PLANNER_KIND_ORCA, &planner));
  CbControlMode mode;
  CHECK(cb_planner_control_mode(planner, &mode));

  for (size_t i = 0; i < n; i++) {
    CbSimulator *sim = NULL;
    CHECK(cb_simulator_new(lib, i, mode, &sim));
    CHECK(cb_planner_reset(planner, sim));
    CbTermination term;
    CbCommand cmd;
    for (;;) {
      CHECK(cb_simulator_termination(sim, &term));
      if (term.kind != CB_TERMINATION_KIND_RUNNING) break;
      CHECK(cb_planner_plan(planner, sim, &cmd));
      CHECK(cb_simulator_step(sim, &cmd));
    }
    char *log = NULL;
    CHECK(cb_simulator_log_jsonl(sim, &log));
    CbMetrics m;
    CHECK(cb_metrics_from_log(log, &m));
    cb_string_free(log);

    char *name = NULL;
    CHECK(cb_library_episode_name(lib, i, &name));
    printf("%s kind=%d ticks=%llu success=%d collisions=%u path=%.3f\n", name,
           (int)term.kind, (unsigned long long)term.tick, (int)m.success,
           m.pedestrian_collisions, m.path_length);
    cb_string_free(name);
    cb_simulator_free(sim);
  }

  if (cb_library_episode_count(NULL, &n) != CB_STATUS_NULL_POINTER) return 1;
  char msg[64];
  if (cb_last_error(msg, sizeof msg) == 0 || strstr(msg, "null") == NULL) return 1;

  printf("protocol %u\n", cb_protocol_version());
  cb_planner_free(planner);
  cb_library_free(lib);
  return 0;
}
