/* Compiles the public header as C and runs a minimal session. */
#include "gpslam/gpslam.h"

#include <stdio.h>

int main(void) {
  gpslam_config* cfg = NULL;
  gpslam_cloud* cloud = NULL;
  gpslam_map* map = NULL;
  int i, j;

  if (gpslam_config_create(&cfg) != GPSLAM_OK) return 1;
  if (gpslam_cloud_create(&cloud) != GPSLAM_OK) return 1;
  for (i = 0; i < 30; ++i)
    for (j = 0; j < 30; ++j) gpslam_cloud_push(cloud, 0.05 * i, 0.05 * j, 0.5);
  if (gpslam_map_build(cfg, cloud, NULL, &map) != GPSLAM_OK) {
    fprintf(stderr, "%s\n", gpslam_last_error());
    return 1;
  }
  printf("gpslam %s: %zu samples\n", gpslam_version(), gpslam_map_sample_count(map));
  gpslam_map_destroy(map);
  gpslam_cloud_destroy(cloud);
  gpslam_config_destroy(cfg);
  return 0;
}
