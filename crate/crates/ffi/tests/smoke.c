#include <stdio.h>
#include <string.h>
#include "empc.h"

int main(int argc, char **argv) {
    if (argc < 2) return 10;
    FILE *f = fopen(argv[1], "rb");
    if (!f) return 11;
    char json[8192];
    size_t n = fread(json, 1, sizeof json - 1, f);
    fclose(f);
    json[n] = 0;

    EmpcProblem *p = NULL;
    EmpcQp *qp = NULL;
    EmpcResult *r = NULL;
    if (empc_problem_from_json(json, &p) != EMPC_STATUS_OK) return 1;
    if (empc_qp_build(p, &qp) != EMPC_STATUS_OK) return 2;
    double theta[2] = {1.0, 0.0};
    if (empc_solve(qp, theta, 2, NULL, 0, &r) != EMPC_STATUS_OK) return 3;
    double z = 0.0;
    size_t len = 0;
    if (empc_result_z(r, &z, 1, &len) != EMPC_STATUS_OK || len != 1) return 4;
    char hex[16];
    if (empc_result_active_set(r, hex, sizeof hex) != EMPC_STATUS_OK) return 5;
    printf("z* = %.17g, active set = %s\n", z, hex);
    int ok = z > 1.0 - 1e-12 && z < 1.0 + 1e-12 && strcmp(hex, "0x1") == 0;
    empc_result_free(r);
    empc_qp_free(qp);
    empc_problem_free(p);
    return ok ? 0 : 6;
}
