#include "nbb/parallel.hpp"

#ifdef NBB_HAVE_OPENMP
#include <omp.h>
#endif

namespace nbb {

namespace {
#ifdef NBB_HAVE_OPENMP
const int kDefaultThreads = omp_get_max_threads();
#endif
}  // namespace

void set_num_threads(int threads) {
#ifdef NBB_HAVE_OPENMP
    omp_set_num_threads(threads < 1 ? kDefaultThreads : threads);
#else
    (void)threads;
#endif
}

int num_threads() {
#ifdef NBB_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace nbb
