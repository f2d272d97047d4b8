#include <stdio.h>
#include <stdlib.h>

#include "nfwpt.h"

#define CHECK(call)                                                          \
    do {                                                                     \
        NfwptStatus st_ = (call);                                            \
        if (st_ != NFWPT_STATUS_OK) {                                        \
            fprintf(stderr, "%s failed (%d): %s\n", #call, (int)st_,         \
                    nfwpt_last_error());                                     \
            return 1;                                                        \
        }                                                                    \
    } while (0)

int main(int argc, char **argv) {
    if (argc != 2) {
        fprintf(stderr, "usage: smoke CONFIG\n");
        return 2;
    }
    NfwptScenario *scenario = NULL;
    CHECK(nfwpt_scenario_load(argv[1], &scenario));

    NfwptField *bf = NULL;
    CHECK(nfwpt_simulate_field(scenario, NFWPT_STRATEGY_BF, 0, &bf));
    size_t nx = 0, ny = 0;
    CHECK(nfwpt_field_dims(bf, &nx, &ny));
    double *values = malloc(nx * ny * sizeof(double));
    CHECK(nfwpt_field_values(bf, values, nx * ny));

    NfwptSpot spot;
    CHECK(nfwpt_field_spot(bf, 0.0, 0.0, 3.0, &spot));

    double sigmas[2] = {0.0, 0.349};
    NfwptSweep *sweep = NULL;
    CHECK(nfwpt_sweep_sigma(scenario, sigmas, 2, 200, 1, &sweep));
    double p50[2];
    CHECK(nfwpt_sweep_p50_dbm(sweep, p50, 2));

    if (nfwpt_simulate_field(scenario, 99, 0, &bf) != NFWPT_STATUS_INVALID_ARGUMENT) {
        return 1;
    }

    printf("%zu %zu %.6f %.6f %.6f\n", nx, ny, spot.equivalent_diameter_m / spot.wavelength_m, p50[0],
           p50[0] - p50[1]);
    free(values);
    nfwpt_sweep_free(sweep);
    nfwpt_field_free(bf);
    nfwpt_scenario_free(scenario);
    return 0;
}
