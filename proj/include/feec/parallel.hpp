#pragma once

namespace feec {

/// Worker count for parallel kernels: OpenMP default, capped by FEECPROJ_THREADS when set.
int worker_count();

}  // namespace feec
