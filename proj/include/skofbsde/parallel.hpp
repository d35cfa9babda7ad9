#pragma once

namespace skofbsde {

// Worker count used by the OpenMP kernels. Honors SKOFBSDE_THREADS as a cap
// on the OpenMP default; 1 when built without OpenMP.
int worker_count();

/// Applies SKOFBSDE_THREADS to the OpenMP runtime. Returns the resulting count.
int configure_workers_from_env();

}  // namespace skofbsde
