#ifndef GAZEKIT_H
#define GAZEKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum GkAlgorithm {
  GK_ALGORITHM_IVT = 0,
  GK_ALGORITHM_IVDT = 1,
  GK_ALGORITHM_IVDT_HMM = 2,
  GK_ALGORITHM_IBDT = 3,
} GkAlgorithm;

// Per-sample label codes written by `gk_labels_copy`.
enum GkLabel {
  GK_LABEL_FIXATION = 0,
  GK_LABEL_SACCADE = 1,
  GK_LABEL_SMOOTH_PURSUIT = 2,
  GK_LABEL_UNCLASSIFIED = 3,
};
typedef uint8_t GkLabel;

// Result code of every call.
typedef enum GkStatus {
  GK_STATUS_OK = 0,
  GK_STATUS_NULL_POINTER = 1,
  GK_STATUS_INVALID_ARGUMENT = 2,
  GK_STATUS_IO = 3,
  GK_STATUS_FORMAT = 4,
  // The input was readable but classification or scoring is undefined
  // for it (too short, no stimulus steps, degenerate data).
  GK_STATUS_DOMAIN = 5,
  GK_STATUS_PANIC = 6,
} GkStatus;

// One label per sample.
typedef struct GkLabels GkLabels;

// A gaze recording, optionally with its stimulus and true labels.
typedef struct GkRecording GkRecording;

typedef struct GkThresholds {
  // deg/s
  double velocity;
  // deg
  double dispersion;
  // ms
  double duration_ms;
} GkThresholds;

// Behavioral scores; NaN marks a score that is undefined for the input.
typedef struct GkScores {
  double fqns;
  double sqns;
  double pqns;
  double misfix;
  double fqls;
  double pqls_p;
  double pqls_v;
} GkScores;

// Library version as a static NUL-terminated string.
const char *gk_version(void);

// Message for the last failed call on this thread, or NULL. The pointer is
// valid until the next failing call on the same thread.
const char *gk_last_error_message(void);

// The default tuned thresholds (75 deg/s, 0.67 deg, 150 ms).
struct GkThresholds gk_thresholds_default(void);

// Reads a CSV file with the standard column names.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum GkStatus gk_recording_from_csv_path(const char *path, struct GkRecording **out);

// Parses CSV text held in memory.
//
// # Safety
// `data` must point to `len` readable bytes; `out` must be writable.
enum GkStatus gk_recording_from_csv_buffer(const uint8_t *data,
                                           size_t len,
                                           struct GkRecording **out);

// Builds a recording from parallel arrays. A non-positive `rate_hz` infers
// the rate from the timestamps. Non-finite coordinates mark invalid samples.
//
// # Safety
// `t_ms`, `x_deg` and `y_deg` must each point to `n` values.
enum GkStatus gk_recording_from_samples(const double *t_ms,
                                        const double *x_deg,
                                        const double *y_deg,
                                        size_t n,
                                        double rate_hz,
                                        struct GkRecording **out);

// Synthesizes the built-in step-ramp recording, with stimulus and truth.
//
// # Safety
// `out` must be writable.
enum GkStatus gk_recording_synth_default(uint64_t seed, double noise_std, struct GkRecording **out);

// Decimates to `target_hz`, keeping stimulus and truth aligned.
//
// # Safety
// `rec` must be a live handle; `out` must be writable.
enum GkStatus gk_recording_resample(const struct GkRecording *rec,
                                    double target_hz,
                                    struct GkRecording **out);

// # Safety
// `rec` must be a live handle; `out_len` must be writable.
enum GkStatus gk_recording_len(const struct GkRecording *rec, size_t *out_len);

// # Safety
// `rec` must be a live handle; `out_hz` must be writable.
enum GkStatus gk_recording_rate_hz(const struct GkRecording *rec, double *out_hz);

// Whether the recording carries a stimulus track, which scoring needs.
//
// # Safety
// `rec` must be a live handle; `out` must be writable.
enum GkStatus gk_recording_has_stimulus(const struct GkRecording *rec, bool *out);

// True labels of a synthetic recording, as a new handle.
//
// # Safety
// `rec` must be a live handle; `out` must be writable.
enum GkStatus gk_recording_truth(const struct GkRecording *rec, struct GkLabels **out);

// # Safety
// `rec` must be NULL or a handle not yet freed.
void gk_recording_free(struct GkRecording *rec);

// Labels every sample. `thresholds` may be NULL for the defaults.
//
// # Safety
// `rec` must be a live handle; `thresholds` NULL or readable; `out` writable.
enum GkStatus gk_classify(const struct GkRecording *rec,
                          enum GkAlgorithm algorithm,
                          const struct GkThresholds *thresholds,
                          struct GkLabels **out);

// Wraps label codes produced elsewhere so they can be scored.
//
// # Safety
// `codes` must point to `n` bytes; `out` must be writable.
enum GkStatus gk_labels_from_codes(const uint8_t *codes, size_t n, struct GkLabels **out);

// # Safety
// `labels` must be a live handle; `out_len` must be writable.
enum GkStatus gk_labels_len(const struct GkLabels *labels, size_t *out_len);

// Writes up to `cap` label codes (see [`GkLabel`]) into `buf` and the
// number written into `out_written`. Fails if `cap` is too small.
//
// # Safety
// `labels` must be a live handle; `buf` must hold `cap` bytes.
enum GkStatus gk_labels_copy(const struct GkLabels *labels,
                             uint8_t *buf,
                             size_t cap,
                             size_t *out_written);

// # Safety
// `labels` must be NULL or a handle not yet freed.
void gk_labels_free(struct GkLabels *labels);

// Scores `labels` against the recording's stimulus with default settings.
//
// # Safety
// `rec` and `labels` must be live handles; `out` must be writable.
enum GkStatus gk_score(const struct GkRecording *rec,
                       const struct GkLabels *labels,
                       struct GkScores *out);

#endif  /* GAZEKIT_H */
