#include "lconf/parallel.hpp"

#include <omp.h>

namespace lconf {

namespace {
int g_threads = 0;
}

void set_thread_count(int n) {
  g_threads = n > 0 ? n : 0;
  omp_set_num_threads(g_threads > 0 ? g_threads : omp_get_num_procs());
}

int thread_count() { return g_threads > 0 ? g_threads : omp_get_max_threads(); }

}  // namespace lconf
