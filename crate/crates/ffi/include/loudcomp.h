#ifndef LOUDCOMP_H
#define LOUDCOMP_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum LcStatus {
  LC_STATUS_OK = 0,
  LC_STATUS_NULL_POINTER = 1,
  LC_STATUS_INVALID_ARGUMENT = 2,
  LC_STATUS_IO = 3,
  LC_STATUS_INTEGRITY = 4,
  LC_STATUS_SAMPLE_RATE_MISMATCH = 5,
  LC_STATUS_TOO_SHORT = 6,
  LC_STATUS_LENGTH_MISMATCH = 7,
  LC_STATUS_NOT_BRACKETED = 8,
  // The caller's buffer is too small; the required size was reported.
  LC_STATUS_BUFFER_TOO_SMALL = 9,
  // The handle can no longer be used for this call.
  LC_STATUS_INVALID_STATE = 10,
  LC_STATUS_INTERNAL = 11,
} LcStatus;

typedef enum LcWindow {
  LC_WINDOW_HANN = 0,
  LC_WINDOW_RECT = 1,
} LcWindow;

typedef struct LcAudiogram LcAudiogram;

typedef struct LcGainTable LcGainTable;

typedef struct LcProcessor LcProcessor;

typedef struct LcProcessorConfig {
  // Power of two, at least 4; must match the table.
  uint32_t window_length;
  enum LcWindow window;
  // dB SPL of a full-scale sine.
  double full_scale_spl;
  // Samples between exact spectrum recomputations, at least 1.
  uint32_t resync_interval;
} LcProcessorConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread; empty if none. Valid until
// the next failing call on the same thread.
const char *lc_last_error(void);

// Library version as a static NUL-terminated string.
const char *lc_version(void);

struct LcProcessorConfig lc_processor_config_default(void);

// Audiogram from `n` strictly increasing frequencies (Hz) and losses (dB HL).
//
// # Safety
// `freqs_hz` and `hl_db` must point to `n` readable doubles.
enum LcStatus lc_audiogram_new(const double *freqs_hz,
                               const double *hl_db,
                               size_t n,
                               double ohc_fraction,
                               struct LcAudiogram **out);

// Audiogram from a JSON document with `frequencies_hz`, `hl_db` and
// optional `ohc_fraction`.
//
// # Safety
// `json` must be a NUL-terminated string.
enum LcStatus lc_audiogram_from_json(const char *json, struct LcAudiogram **out);

// # Safety
// `a` must be null or a handle from this library, not yet freed.
void lc_audiogram_free(struct LcAudiogram *a);

// Build the compensation table, or the inverse one when `inverse` is
// nonzero, with the default layout at `sample_rate`.
//
// # Safety
// `audiogram` must be a live handle; `out` must be writable.
enum LcStatus lc_table_build(const struct LcAudiogram *audiogram,
                             int inverse,
                             uint32_t sample_rate,
                             struct LcGainTable **out);

// Interpolated gain in dB at frequency `f_hz` and filter level `level_db`.
//
// # Safety
// `table` must be a live handle; `gain_db` must be writable.
enum LcStatus lc_table_lookup(const struct LcGainTable *table,
                              double f_hz,
                              double level_db,
                              double *gain_db);

// Serialise a table. `*len` receives the encoded size; when `buf` is null
// or `cap` is smaller, nothing is copied and `BufferTooSmall` is returned.
//
// # Safety
// `buf` must be null or point to `cap` writable bytes; `len` must be
// writable.
enum LcStatus lc_table_export(const struct LcGainTable *table,
                              uint8_t *buf,
                              size_t cap,
                              size_t *len);

// Decode a table produced by [`lc_table_export`].
//
// # Safety
// `bytes` must point to `len` readable bytes; `out` must be writable.
enum LcStatus lc_table_import(const uint8_t *bytes, size_t len, struct LcGainTable **out);

// # Safety
// `table` must be a live handle.
uint32_t lc_table_sample_rate(const struct LcGainTable *table);

// # Safety
// `t` must be null or a handle from this library, not yet freed. Processors
// created from the table stay valid.
void lc_table_free(struct LcGainTable *t);

// Process a whole signal; `output` receives `n` samples.
//
// # Safety
// `input` and `output` must point to `n` doubles; `config` may be null for
// defaults.
enum LcStatus lc_process(const struct LcGainTable *table,
                         const struct LcProcessorConfig *config,
                         const double *input_samples,
                         double *output_samples,
                         size_t n,
                         uint32_t sample_rate);

// Streaming processor holding its own reference to `table`.
//
// # Safety
// `table` must be a live handle; `config` may be null for defaults.
enum LcStatus lc_processor_new(const struct LcGainTable *table,
                               const struct LcProcessorConfig *config,
                               struct LcProcessor **out);

// Samples consumed before the first output.
//
// # Safety
// `p` must be a live handle.
size_t lc_processor_latency(const struct LcProcessor *p);

// Feed `n` samples. Up to `n` outputs are written to `out`, which must
// hold `cap >= n` samples; `*written` receives the count.
//
// # Safety
// `input` must point to `n` doubles, `out` to `cap` doubles.
enum LcStatus lc_processor_push(struct LcProcessor *p,
                                const double *input_samples,
                                size_t n,
                                double *out,
                                size_t cap,
                                size_t *written);

// Flush the remaining outputs (at most the latency) into `out`. The
// processor cannot be pushed afterwards.
//
// # Safety
// `out` must point to `cap` doubles.
enum LcStatus lc_processor_finish(struct LcProcessor *p, double *out, size_t cap, size_t *written);

// # Safety
// `p` must be null or a handle from this library, not yet freed.
void lc_processor_free(struct LcProcessor *p);

// STOI of `degraded` against `clean`, both `n` samples at `sample_rate`.
//
// # Safety
// Both arrays must hold `n` doubles; `score` must be writable.
enum LcStatus lc_stoi(const double *clean,
                      const double *degraded,
                      size_t n,
                      uint32_t sample_rate,
                      double *score);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOUDCOMP_H */
