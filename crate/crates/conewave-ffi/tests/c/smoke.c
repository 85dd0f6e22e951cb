#include "conewave.h"
#include <math.h>
#include <stdio.h>

#define CHECK(cond)                                   \
    do {                                              \
        if (!(cond)) {                                \
            fprintf(stderr, "failed: %s\n", #cond);   \
            return 1;                                 \
        }                                             \
    } while (0)

int main(void) {
    CwComplex zero = {0.0, 0.0};
    CwComplex v0 = {0.75, 0.0};
    CwComplex a0 = {0.05, 0.0};
    CwOperator *op = NULL;
    CHECK(cw_operator_new_scalar(3, zero, v0, a0, 1.0, &op) == CW_STATUS_OK);

    double lo, hi;
    CHECK(cw_weight_window(op, 0.0, &lo, &hi) == CW_STATUS_OK);
    CHECK(fabs(lo) < 1e-12 && fabs(hi - 2.0) < 1e-12);

    CwComplex plus, minus;
    CHECK(cw_indicial_roots(op, 0.0, 0, &plus, &minus) == CW_STATUS_OK);
    CHECK(fabs(plus.re - 0.5) < 1e-12 && fabs(minus.re + 1.5) < 1e-12);

    CwVerdict verdict;
    double measure;
    CHECK(cw_admissibility_scan(op, 0.0, 1.5, 2, 9, &verdict, &measure) == CW_STATUS_OK);
    CHECK(verdict == CW_VERDICT_ADMISSIBLE && measure > 0.1);
    cw_operator_free(op);

    CHECK(cw_weight_window(NULL, 0.0, &lo, &hi) == CW_STATUS_NULL_POINTER);
    char buf[128];
    CHECK(cw_last_error(buf, sizeof buf) > 0);

    CHECK(fabs(cw_dirac_coulomb_gap(0.0) - 0.5) < 1e-15);
    printf("ok %s\n", cw_version());
    return 0;
}
