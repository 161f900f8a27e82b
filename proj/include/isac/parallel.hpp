#pragma once

#include <functional>

namespace isac {

/// Sets the OpenMP thread count for subsequent parallel kernels.
/// n <= 0 keeps the runtime default. No-op in builds without OpenMP.
void set_num_threads(int n);

int max_threads();

/// Dispatches fn(i) for i in [0, n) across OpenMP threads with a static
/// schedule. Every index writes only its own output slot, so results are
/// identical to serial_for regardless of the thread count.
void parallel_for(int n, const std::function<void(int)>& fn);

/// Serial reference loop with the same contract as parallel_for.
void serial_for(int n, const std::function<void(int)>& fn);

}  // namespace isac
