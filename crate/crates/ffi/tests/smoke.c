#include <math.h>
#include <stdio.h>
#include "koenigs.h"

int main(void) {
  KoenigsMap *map = NULL;
  if (koenigs_map_parse("(1+z^2)/2", &map) != KOENIGS_STATUS_OK) return 1;
  KoenigsDwReport r;
  if (koenigs_classify(map, &r) != KOENIGS_STATUS_OK) return 2;
  if (r.kind != KOENIGS_TYPE_PARABOLIC || fabs(r.location.re - 1.0) > 1e-6) return 3;
  KoenigsComplex z = {0.5, 0.0}, w;
  if (koenigs_map_eval(map, z, &w) != KOENIGS_STATUS_OK || fabs(w.re - 0.625) > 1e-15) return 4;
  koenigs_map_free(map);
  KoenigsMap *bad = NULL;
  if (koenigs_map_parse("z^", &bad) != KOENIGS_STATUS_SYNTAX || bad != NULL) return 5;
  if (koenigs_last_error_offset() != 2) return 6;
  printf("%s\n", koenigs_last_error_message());
  return 0;
}
