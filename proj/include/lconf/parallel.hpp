#pragma once

namespace lconf {

// Caps the worker count used by the parallel loops in graph and laplace.
// n <= 0 restores the OpenMP default.
void set_thread_count(int n);
int thread_count();

}  // namespace lconf
