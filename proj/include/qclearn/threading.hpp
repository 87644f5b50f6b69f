#pragma once

#include <cstdint>
#include <type_traits>

namespace qclearn {

// Worker count for data generation and linear algebra. Defaults to the
// QCLEARN_THREADS environment variable, then hardware concurrency. All
// parallel loops in this library write disjoint outputs in a fixed order,
// so results do not depend on the thread count.
void set_threads(int n);
int threads();

// Runs fn(begin, end) over [0, count) split into contiguous chunks.
void parallel_for(std::int64_t count, void (*fn)(std::int64_t, std::int64_t, void*), void* ctx);

template <typename Fn>
void parallel_chunks(std::int64_t count, Fn&& fn) {
    using F = std::remove_reference_t<Fn>;
    struct Ctx {
        F* fn;
    } ctx{&fn};
    parallel_for(
        count,
        [](std::int64_t b, std::int64_t e, void* c) { (*static_cast<Ctx*>(c)->fn)(b, e); },
        &ctx);
}

}  // namespace qclearn
