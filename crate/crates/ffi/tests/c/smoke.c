#include <math.h>
#include <stdio.h>
#include "bliss_moser.h"

int main(void) {
    BmGridFn *w = NULL;
    if (bm_gridfn_moser(100.0, 2, &w) != BM_STATUS_OK) return 1;
    double e = 0.0;
    if (bm_gridfn_energy(w, 2, &e) != BM_STATUS_OK || fabs(e - 1.0) > 1e-14) return 2;
    BmWeight zero = {0.0, 0.0, BM_PERTURBATION_NONE};
    BmQuadResult r;
    if (bm_eval_functional(w, zero, 2, 1e-9, 1e-12, &r) != BM_STATUS_OK || fabs(r.value - 1.0) > 1e-12) return 3;
    bm_gridfn_free(w);
    double c = 0.0;
    if (bm_bliss_constant(2, 2.0, &c) != BM_STATUS_OK || fabs(c - 1.5) > 1e-13) return 4;
    if (bm_bliss_constant(1, 2.0, &c) != BM_STATUS_INVALID_ARGUMENT) return 5;
    printf("%s\n", bm_last_error());
    return 0;
}
