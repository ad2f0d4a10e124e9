/* Plans a route, fits a trajectory and runs a short scenario through the C API. */
#include <stdio.h>
#include "cotransport.h"

static const char *GRID =
    "6 4 1.0\n"
    "000000\n"
    "000000\n"
    "000000\n"
    "000000\n";

static const char *SCENARIO =
    "name = \"smoke\"\n"
    "duration = 2.0\n"
    "[trajectory]\n"
    "waypoints = [[0.0, 0.0, 0.0], [1.0, 0.5, 4.0]]\n";

int main(void) {
    char msg[256];
    CtWaypoint pts[16];
    size_t n = 0;
    CtPose start = {0.5, 0.5, 0.0}, goal = {5.5, 3.5, 0.0};
    if (ct_plan(GRID, start, goal, pts, 16, &n) != CT_STATUS_OK) {
        ct_last_error(msg, sizeof msg);
        fprintf(stderr, "plan: %s\n", msg);
        return 1;
    }

    CtTrajectory *traj = NULL;
    if (ct_trajectory_new(pts, n, 1.0, &traj) != CT_STATUS_OK) return 2;
    CtReference ref;
    double t0, t1;
    ct_trajectory_span(traj, &t0, &t1);
    ct_trajectory_sample(traj, t1, 0.0, &ref);
    ct_trajectory_free(traj);

    CtScenario *sc = NULL;
    if (ct_scenario_parse(SCENARIO, &sc) != CT_STATUS_OK) return 3;
    CtMetrics *m = NULL;
    if (ct_run(sc, &m) != CT_STATUS_OK) return 4;
    CtMetricsSummary s;
    ct_metrics_summary(m, &s);
    ct_metrics_free(m);
    ct_scenario_free(sc);

    if (ct_plan(GRID, start, (CtPose){9.0, 9.0, 0.0}, pts, 16, &n) == CT_STATUS_OK) return 5;

    printf("%zu %.3f %.3f %llu\n", n, ref.x, ref.y, (unsigned long long)s.samples);
    return 0;
}
