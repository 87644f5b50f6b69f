#include "qclearn/gemm.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

#include "qclearn/threading.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define QCLEARN_GEMM_FMA 1
#endif

namespace qclearn {

namespace {

// Register tile and cache blocking. KC covers the full K of the conv GEMMs
// (9 * 32 channels = 288) so C is written in a single pass. Packed panels
// are MR/NR interleaved; the pack loops are ordered so the strided side of
// the copy always lands in the small packed buffer, not the source matrix.
constexpr std::int64_t MR = 6;
constexpr std::int64_t NR = 8;
constexpr std::int64_t KC = 320;
constexpr std::int64_t MC = 120;   // multiple of MR
constexpr std::int64_t NC = 4096;  // multiple of NR

void pack_a(const double* a, std::int64_t lda, bool trans, std::int64_t i0, std::int64_t mc,
            std::int64_t p0, std::int64_t kc, double* buf) {
    for (std::int64_t ir = 0; ir < mc; ir += MR) {
        const std::int64_t rows = std::min(MR, mc - ir);
        if (!trans) {
            // op(A)[i][p] = A[i*lda + p]: stream the source rows.
            for (std::int64_t r = 0; r < rows; ++r) {
                const double* src = a + (i0 + ir + r) * lda + p0;
                for (std::int64_t p = 0; p < kc; ++p) buf[p * MR + r] = src[p];
            }
        } else {
            // op(A)[i][p] = A[p*lda + i]: stream the source rows (p-major).
            for (std::int64_t p = 0; p < kc; ++p) {
                const double* src = a + (p0 + p) * lda + i0 + ir;
                for (std::int64_t r = 0; r < rows; ++r) buf[p * MR + r] = src[r];
            }
        }
        if (rows < MR)
            for (std::int64_t p = 0; p < kc; ++p)
                for (std::int64_t r = rows; r < MR; ++r) buf[p * MR + r] = 0.0;
        buf += kc * MR;
    }
}

void pack_b(const double* b, std::int64_t ldb, bool trans, std::int64_t p0, std::int64_t kc,
            std::int64_t j0, std::int64_t nc, double* buf) {
    for (std::int64_t jr = 0; jr < nc; jr += NR) {
        const std::int64_t cols = std::min(NR, nc - jr);
        if (!trans) {
            // op(B)[p][j] = B[p*ldb + j]
            for (std::int64_t p = 0; p < kc; ++p) {
                const double* src = b + (p0 + p) * ldb + j0 + jr;
                for (std::int64_t c = 0; c < cols; ++c) buf[p * NR + c] = src[c];
            }
        } else {
            // op(B)[p][j] = B[j*ldb + p]
            for (std::int64_t c = 0; c < cols; ++c) {
                const double* src = b + (j0 + jr + c) * ldb + p0;
                for (std::int64_t p = 0; p < kc; ++p) buf[p * NR + c] = src[p];
            }
        }
        if (cols < NR)
            for (std::int64_t p = 0; p < kc; ++p)
                for (std::int64_t c = cols; c < NR; ++c) buf[p * NR + c] = 0.0;
        buf += kc * NR;
    }
}

struct TileArgs {
    double* c;
    std::int64_t ldc;
    std::int64_t rows, cols;  // valid extent, <= MR x NR
    double alpha, beta;
    bool first_k_block;
};

#ifdef QCLEARN_GEMM_FMA

void micro_kernel(std::int64_t kc, const double* ap, const double* bp, const TileArgs& t) {
    __m256d c[MR][2];
    for (int r = 0; r < MR; ++r) {
        c[r][0] = _mm256_setzero_pd();
        c[r][1] = _mm256_setzero_pd();
    }
    for (std::int64_t p = 0; p < kc; ++p) {
        const __m256d b0 = _mm256_loadu_pd(bp + p * NR);
        const __m256d b1 = _mm256_loadu_pd(bp + p * NR + 4);
        const double* apos = ap + p * MR;
        for (int r = 0; r < MR; ++r) {
            const __m256d av = _mm256_set1_pd(apos[r]);
            c[r][0] = _mm256_fmadd_pd(av, b0, c[r][0]);
            c[r][1] = _mm256_fmadd_pd(av, b1, c[r][1]);
        }
    }
    if (t.rows == MR && t.cols == NR && t.alpha == 1.0) {
        if (t.first_k_block && t.beta == 0.0) {
            for (int r = 0; r < MR; ++r) {
                _mm256_storeu_pd(t.c + r * t.ldc, c[r][0]);
                _mm256_storeu_pd(t.c + r * t.ldc + 4, c[r][1]);
            }
            return;
        }
        if (!t.first_k_block) {
            for (int r = 0; r < MR; ++r) {
                double* cpos = t.c + r * t.ldc;
                _mm256_storeu_pd(cpos, _mm256_add_pd(_mm256_loadu_pd(cpos), c[r][0]));
                _mm256_storeu_pd(cpos + 4, _mm256_add_pd(_mm256_loadu_pd(cpos + 4), c[r][1]));
            }
            return;
        }
    }
    double acc[MR * NR];
    for (int r = 0; r < MR; ++r) {
        _mm256_storeu_pd(acc + r * NR, c[r][0]);
        _mm256_storeu_pd(acc + r * NR + 4, c[r][1]);
    }
    for (std::int64_t r = 0; r < t.rows; ++r)
        for (std::int64_t j = 0; j < t.cols; ++j) {
            const double v = t.alpha * acc[r * NR + j];
            double& out = t.c[r * t.ldc + j];
            if (t.first_k_block)
                out = (t.beta == 0.0 ? 0.0 : t.beta * out) + v;
            else
                out += v;
        }
}

#else

void micro_kernel(std::int64_t kc, const double* ap, const double* bp, const TileArgs& t) {
    double acc[MR * NR] = {0.0};
    for (std::int64_t p = 0; p < kc; ++p) {
        const double* bpos = bp + p * NR;
        const double* apos = ap + p * MR;
        for (int r = 0; r < MR; ++r) {
            const double av = apos[r];
            for (int j = 0; j < NR; ++j) acc[r * NR + j] += av * bpos[j];
        }
    }
    for (std::int64_t r = 0; r < t.rows; ++r)
        for (std::int64_t j = 0; j < t.cols; ++j) {
            const double v = t.alpha * acc[r * NR + j];
            double& out = t.c[r * t.ldc + j];
            if (t.first_k_block)
                out = (t.beta == 0.0 ? 0.0 : t.beta * out) + v;
            else
                out += v;
        }
}

#endif

struct GemmJob {
    const double* a;
    double* c;
    std::int64_t m, n, k, lda, ldc;
    bool trans_a;
    double alpha, beta;
    std::int64_t jc, nc, pc, kc;
    const double* b_pack;
    bool first_k_block;
};

void run_m_range(const GemmJob& job, std::int64_t ic_begin, std::int64_t ic_end,
                 std::vector<double>& a_buf) {
    for (std::int64_t ic = ic_begin; ic < ic_end; ic += MC) {
        const std::int64_t mc = std::min(MC, job.m - ic);
        a_buf.resize(static_cast<std::size_t>(((mc + MR - 1) / MR) * MR * job.kc));
        pack_a(job.a, job.lda, job.trans_a, ic, mc, job.pc, job.kc, a_buf.data());
        for (std::int64_t jr = 0; jr < job.nc; jr += NR) {
            const double* bp = job.b_pack + (jr / NR) * job.kc * NR;
            for (std::int64_t ir = 0; ir < mc; ir += MR) {
                TileArgs tile{job.c + (ic + ir) * job.ldc + job.jc + jr,
                              job.ldc,
                              std::min(MR, mc - ir),
                              std::min(NR, job.nc - jr),
                              job.alpha,
                              job.beta,
                              job.first_k_block};
                micro_kernel(job.kc, a_buf.data() + (ir / MR) * job.kc * MR, bp, tile);
            }
        }
    }
}

}  // namespace

void gemm(bool trans_a, bool trans_b, std::int64_t m, std::int64_t n, std::int64_t k,
          double alpha, const double* a, std::int64_t lda, const double* b, std::int64_t ldb,
          double beta, double* c, std::int64_t ldc) {
    if (m <= 0 || n <= 0) return;
    if (k <= 0 || alpha == 0.0) {
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j < n; ++j) {
                double& out = c[i * ldc + j];
                out = beta == 0.0 ? 0.0 : beta * out;
            }
        return;
    }

    std::vector<double> b_buf;
    GemmJob job{a, c, m, n, k, lda, ldc, trans_a, alpha, beta, 0, 0, 0, 0, nullptr, true};

    const bool parallel = threads() > 1 && m * n * k >= 262144;
    for (std::int64_t jc = 0; jc < n; jc += NC) {
        const std::int64_t nc = std::min(NC, n - jc);
        for (std::int64_t pc = 0; pc < k; pc += KC) {
            const std::int64_t kc = std::min(KC, k - pc);
            b_buf.resize(static_cast<std::size_t>(((nc + NR - 1) / NR) * NR * kc));
            pack_b(b, ldb, trans_b, pc, kc, jc, nc, b_buf.data());
            job.jc = jc;
            job.nc = nc;
            job.pc = pc;
            job.kc = kc;
            job.b_pack = b_buf.data();
            job.first_k_block = pc == 0;
            if (!parallel) {
                static thread_local std::vector<double> a_buf;
                run_m_range(job, 0, m, a_buf);
            } else {
                const std::int64_t blocks = (m + MC - 1) / MC;
                parallel_chunks(blocks, [&](std::int64_t bb, std::int64_t be) {
                    thread_local std::vector<double> a_buf;
                    run_m_range(job, bb * MC, std::min(m, be * MC), a_buf);
                });
            }
        }
    }
}

}  // namespace qclearn
