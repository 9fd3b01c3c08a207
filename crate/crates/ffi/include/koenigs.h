#ifndef KOENIGS_H
#define KOENIGS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KoenigsStatus {
  KOENIGS_STATUS_OK = 0,
  KOENIGS_STATUS_SYNTAX = 1,
  KOENIGS_STATUS_UNKNOWN_IDENTIFIER = 2,
  KOENIGS_STATUS_MALFORMED_LITERAL = 3,
  KOENIGS_STATUS_DOMAIN = 4,
  KOENIGS_STATUS_OVERFLOW = 5,
  KOENIGS_STATUS_INSTABILITY = 6,
  KOENIGS_STATUS_AMBIGUITY = 7,
  KOENIGS_STATUS_INCONCLUSIVE = 8,
  KOENIGS_STATUS_DEGENERATE = 9,
  KOENIGS_STATUS_PRECONDITION = 10,
  KOENIGS_STATUS_CORPUS = 11,
  KOENIGS_STATUS_IO = 12,
  KOENIGS_STATUS_USAGE = 13,
  KOENIGS_STATUS_NULL_POINTER = 20,
  KOENIGS_STATUS_PANIC = 21,
} KoenigsStatus;

typedef enum KoenigsType {
  KOENIGS_TYPE_IDENTITY = 0,
  KOENIGS_TYPE_ELLIPTIC = 1,
  KOENIGS_TYPE_ELLIPTIC_AUTOMORPHISM = 2,
  KOENIGS_TYPE_HYPERBOLIC = 3,
  KOENIGS_TYPE_PARABOLIC = 4,
} KoenigsType;

typedef enum KoenigsStep {
  KOENIGS_STEP_ZERO = 0,
  KOENIGS_STEP_POSITIVE = 1,
  KOENIGS_STEP_INCONCLUSIVE = 2,
} KoenigsStep;

// Opaque parsed map.
typedef struct KoenigsMap KoenigsMap;

typedef struct KoenigsComplex {
  double re;
  double im;
} KoenigsComplex;

typedef struct KoenigsDwReport {
  struct KoenigsComplex location;
  double multiplier;
  double multiplier_error;
  enum KoenigsType kind;
  // 1 when the point is inside the disc.
  uint8_t interior;
  uint8_t automorphism;
} KoenigsDwReport;

typedef struct KoenigsStepReport {
  enum KoenigsStep decision;
  enum KoenigsStep q_decision;
  double distortion_last;
  double q_last;
  // Orbit length actually computed.
  size_t length;
} KoenigsStepReport;

typedef struct KoenigsSlc {
  struct KoenigsComplex c;
  double disagreement;
  // 1 when the partner is the identity.
  uint8_t identity;
} KoenigsSlc;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses a NUL-terminated map expression into a new handle stored in `*out`.
//
// # Safety
// `src` must be a valid C string and `out` a writable pointer.
enum KoenigsStatus koenigs_map_parse(const char *src, struct KoenigsMap **out);

// Releases a handle; null is ignored.
//
// # Safety
// `map` must come from [`koenigs_map_parse`] and not be used afterwards.
void koenigs_map_free(struct KoenigsMap *map);

// # Safety
// `map` must be a live handle and `out` writable.
enum KoenigsStatus koenigs_map_eval(const struct KoenigsMap *map,
                                    struct KoenigsComplex z,
                                    struct KoenigsComplex *out);

// # Safety
// `map` must be a live handle and `out` writable.
enum KoenigsStatus koenigs_map_deriv(const struct KoenigsMap *map,
                                     struct KoenigsComplex z,
                                     struct KoenigsComplex *out);

// Denjoy-Wolff point, multiplier and type with default options.
//
// # Safety
// `map` must be a live handle and `out` writable.
enum KoenigsStatus koenigs_classify(const struct KoenigsMap *map, struct KoenigsDwReport *out);

// Hyperbolic step decision along the orbit of `z0` with at most `n` steps.
//
// # Safety
// `map` must be a live handle and `out` writable.
enum KoenigsStatus koenigs_step(const struct KoenigsMap *map,
                                struct KoenigsComplex z0,
                                size_t n,
                                struct KoenigsStepReport *out);

// Pseudo-hyperbolic and hyperbolic distance in the disc.
//
// # Safety
// Both output pointers must be writable.
enum KoenigsStatus koenigs_dist_disc(struct KoenigsComplex z,
                                     struct KoenigsComplex w,
                                     double *pseudo,
                                     double *hyperbolic);

// Simultaneous linearization coefficient of `psi` with respect to `phi`, all methods.
//
// # Safety
// Both handles must be live and `out` writable.
enum KoenigsStatus koenigs_slc(const struct KoenigsMap *phi,
                               const struct KoenigsMap *psi,
                               struct KoenigsSlc *out);

// Message of the last failure on this thread, or null. Valid until the next call.
const char *koenigs_last_error_message(void);

// Byte offset of the last parse failure on this thread, or −1.
int64_t koenigs_last_error_offset(void);

// Library version as a static C string.
const char *koenigs_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KOENIGS_H */
