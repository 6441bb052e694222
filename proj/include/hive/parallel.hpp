#pragma once

namespace hive::par {

// Global worker-count knob shared by all parallel kernels. 0 selects the
// OpenMP default; 1 forces the serial path. Every kernel in this library is
// required to produce bit-identical results for any thread count, so the
// switch exists for testing and benchmarking, not correctness.
void set_threads(int n);
int threads();

// True when the parallel path is active (threads() != 1).
bool enabled();

} // namespace hive::par
