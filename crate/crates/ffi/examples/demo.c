/* Runs the default scenario through the C API and prints the estimates. */
#include <stdio.h>

#include "jade.h"

static int fail(const char *what, JadeStatus st) {
    const char *msg = jade_last_error_message();
    fprintf(stderr, "%s failed (%d): %s\n", what, (int)st, msg ? msg : "");
    return 1;
}

int main(void) {
    JadeScenario *scenario = jade_scenario_default();
    JadeReport *report = NULL;
    JadeStatus st;

    jade_scenario_set_seed(scenario, 3);
    jade_scenario_set_snapshots(scenario, 100);
    st = jade_run(scenario, &report);
    if (st != JADE_STATUS_OK) {
        jade_scenario_free(scenario);
        return fail("jade_run", st);
    }
    for (size_t i = 0; i < jade_report_path_count(report); i++) {
        double theta, slope;
        jade_report_theta_deg(report, i, &theta);
        jade_report_slope_median(report, i, &slope);
        printf("path %zu: theta %.6f deg, slope %.4f\n", i, theta, slope);
    }

    st = jade_report_theta_deg(report, 99, NULL);
    printf("out of range: %d\n", (int)st);

    jade_report_free(report);
    jade_scenario_free(scenario);
    return 0;
}
