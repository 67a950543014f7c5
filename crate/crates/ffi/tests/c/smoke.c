#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "gazekit.h"

#define CHECK(call)                                                            \
    do {                                                                       \
        GkStatus s_ = (call);                                                  \
        if (s_ != GK_STATUS_OK) {                                              \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_,                  \
                    gk_last_error_message());                                  \
            return 1;                                                          \
        }                                                                      \
    } while (0)

int main(void) {
    GkRecording *rec = NULL;
    GkLabels *labels = NULL;
    GkScores scores;
    size_t n = 0, written = 0;

    CHECK(gk_recording_synth_default(4, 0.05, &rec));
    CHECK(gk_recording_len(rec, &n));
    GkThresholds t = gk_thresholds_default();
    CHECK(gk_classify(rec, GK_ALGORITHM_IVDT, &t, &labels));

    uint8_t *codes = malloc(n);
    CHECK(gk_labels_copy(labels, codes, n, &written));
    size_t sac = 0;
    for (size_t i = 0; i < written; i++)
        sac += codes[i] == GK_LABEL_SACCADE;
    CHECK(gk_score(rec, labels, &scores));
    printf("%s n=%zu saccade=%zu fqns=%.2f\n", gk_version(), n, sac, scores.fqns);

    if (gk_recording_len(NULL, &n) != GK_STATUS_NULL_POINTER)
        return 2;
    free(codes);
    gk_labels_free(labels);
    gk_recording_free(rec);
    return (written == n && sac > 0 && scores.fqns > 50.0 && !isnan(scores.sqns)) ? 0 : 3;
}
