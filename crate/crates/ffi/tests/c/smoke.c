#include <stdio.h>
#include <string.h>

#include "temporal_sampling.h"

static const char DATA[] =
    "{\"problem_id\":\"p1\",\"checkpoint\":\"0\",\"sample\":0,\"answer\":\"4\",\"correct\":true,\"reward\":0.9}\n"
    "{\"problem_id\":\"p1\",\"checkpoint\":\"0\",\"sample\":1,\"answer\":\"5\",\"correct\":false,\"reward\":0.1}\n"
    "{\"problem_id\":\"p1\",\"checkpoint\":\"1\",\"sample\":0,\"answer\":\"5\",\"correct\":false,\"reward\":0.2}\n"
    "{\"problem_id\":\"p1\",\"checkpoint\":\"1\",\"sample\":1,\"answer\":\"4\",\"correct\":true,\"reward\":0.8}\n";

int main(void) {
    TsDataset *ds = NULL;
    if (ts_dataset_load_jsonl((const uint8_t *)DATA, strlen(DATA), &ds) != TS_STATUS_OK) {
        fprintf(stderr, "load: %s\n", ts_last_error());
        return 1;
    }
    size_t alloc[3];
    double value = -1.0, per_problem[1];
    TsAggregate bon;
    if (ts_balanced_partition(7, 3, alloc, 3) != TS_STATUS_OK || alloc[0] != 3 || alloc[2] != 2) return 2;
    if (ts_pass_at_k_given_t(ds, 2, 2, &value, per_problem, 1) != TS_STATUS_OK || value != 0.75) return 3;
    /* k = 4 draws every sample; the 0.9 reward is correct */
    if (ts_best_of_n_at_k_given_t(ds, 4, 2, 100, 7, &bon) != TS_STATUS_OK || bon.value != 1.0) return 4;
    if (ts_pass_at_k(ds, 3, 0, &value, NULL, 0) != TS_STATUS_BUDGET_EXCEEDS_SAMPLES) return 5;
    if (ts_last_error() == NULL) return 6;
    ts_dataset_free(ds);
    printf("ok %s\n", ts_version());
    return 0;
}
