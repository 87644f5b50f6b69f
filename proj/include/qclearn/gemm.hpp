#pragma once

#include <cstdint>

namespace qclearn {

// C = alpha * op(A) * op(B) + beta * C with row-major operands.
// op(A) is M x K, op(B) is K x N, C is M x N with leading dimension ldc.
// Blocked and register-tiled (FMA intrinsics when available); work is split
// across row blocks of C, so results are independent of the thread count.
void gemm(bool trans_a, bool trans_b, std::int64_t m, std::int64_t n, std::int64_t k,
          double alpha, const double* a, std::int64_t lda, const double* b, std::int64_t ldb,
          double beta, double* c, std::int64_t ldc);

}  // namespace qclearn
