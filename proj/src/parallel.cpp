#include "isac/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace isac {

void set_num_threads(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void parallel_for(int n, const std::function<void(int)>& fn) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        fn(i);
    }
#else
    serial_for(n, fn);
#endif
}

void serial_for(int n, const std::function<void(int)>& fn) {
    for (int i = 0; i < n; ++i) {
        fn(i);
    }
}

}  // namespace isac
