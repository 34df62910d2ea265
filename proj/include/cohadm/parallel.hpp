#pragma once

namespace cohadm {

/// Width of the parallel maps over Gauss points. Read once from COHADM_THREADS
/// (unset or 0: runtime default). Always 1 when built without OpenMP.
int worker_threads();

} // namespace cohadm
