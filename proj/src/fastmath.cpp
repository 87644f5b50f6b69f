#include "qclearn/fastmath.hpp"

#include <algorithm>
#include <cmath>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define QCLEARN_FAST_EXP 1
#endif

namespace qclearn {

#ifdef QCLEARN_FAST_EXP

namespace {

// Cephes-style expansion: reduce x = n ln2 + r, evaluate the Pade form
// 1 + 2 x P(x^2) / (Q(x^2) - x P(x^2)) on r, then scale by 2^n.
inline __m256d exp4(__m256d x) {
    const __m256d max_x = _mm256_set1_pd(700.0);
    const __m256d min_x = _mm256_set1_pd(-700.0);
    x = _mm256_min_pd(max_x, _mm256_max_pd(min_x, x));

    const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
    const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);

    __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                                _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    x = _mm256_fnmadd_pd(n, c1, x);
    x = _mm256_fnmadd_pd(n, c2, x);

    const __m256d p0 = _mm256_set1_pd(1.26177193074810590878e-4);
    const __m256d p1 = _mm256_set1_pd(3.02994407707441961300e-2);
    const __m256d p2 = _mm256_set1_pd(9.99999999999999999910e-1);
    const __m256d q0 = _mm256_set1_pd(3.00198505138664455042e-6);
    const __m256d q1 = _mm256_set1_pd(2.52448340349684104192e-3);
    const __m256d q2 = _mm256_set1_pd(2.27265548208155028766e-1);
    const __m256d q3 = _mm256_set1_pd(2.00000000000000000005e0);

    const __m256d xx = _mm256_mul_pd(x, x);
    __m256d px = _mm256_fmadd_pd(p0, xx, p1);
    px = _mm256_fmadd_pd(px, xx, p2);
    px = _mm256_mul_pd(px, x);
    __m256d qx = _mm256_fmadd_pd(q0, xx, q1);
    qx = _mm256_fmadd_pd(qx, xx, q2);
    qx = _mm256_fmadd_pd(qx, xx, q3);
    const __m256d r =
        _mm256_add_pd(_mm256_set1_pd(1.0),
                      _mm256_mul_pd(_mm256_set1_pd(2.0),
                                    _mm256_div_pd(px, _mm256_sub_pd(qx, px))));

    // 2^n via exponent-field arithmetic; |n| <= 1011 keeps it normal.
    const __m256d magic = _mm256_set1_pd(6755399441055744.0);  // 1.5 * 2^52
    const __m256i ni = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(n, magic)),
                                        _mm256_castpd_si256(magic));
    const __m256i pow2 =
        _mm256_slli_epi64(_mm256_add_epi64(ni, _mm256_set1_epi64x(1023)), 52);
    return _mm256_mul_pd(r, _mm256_castsi256_pd(pow2));
}

}  // namespace

void vec_exp(const double* in, double* out, std::int64_t n) {
    std::int64_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, exp4(_mm256_loadu_pd(in + i)));
    if (i < n) {
        double buf[4] = {0.0, 0.0, 0.0, 0.0};
        std::copy(in + i, in + n, buf);
        _mm256_storeu_pd(buf, exp4(_mm256_loadu_pd(buf)));
        std::copy(buf, buf + (n - i), out + i);
    }
}

#else

void vec_exp(const double* in, double* out, std::int64_t n) {
    for (std::int64_t i = 0; i < n; ++i)
        out[i] = std::exp(std::clamp(in[i], -700.0, 700.0));
}

#endif

}  // namespace qclearn
