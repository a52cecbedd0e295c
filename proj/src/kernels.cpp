#include "nlg/kernels.hpp"

#include <cassert>
#include <cmath>
#include <cstdlib>
#include <mutex>

#if defined(__x86_64__) || defined(_M_X64)
#define NLG_X86 1
#include <immintrin.h>
#else
#define NLG_X86 0
#endif

namespace nlg::kernels {

namespace {

// ---------------------------------------------------------------------------
// Scalar reference kernels.
//
// Reductions run four interleaved accumulator lanes combined in a fixed
// order, with std::fma for multiply-accumulate. The AVX2 variants use the
// same tree, so both implementations produce bitwise identical results and
// the equivalence tests can assert exact equality.
// ---------------------------------------------------------------------------

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        acc[0] = std::fma(a[i + 0], b[i + 0], acc[0]);
        acc[1] = std::fma(a[i + 1], b[i + 1], acc[1]);
        acc[2] = std::fma(a[i + 2], b[i + 2], acc[2]);
        acc[3] = std::fma(a[i + 3], b[i + 3], acc[3]);
    }
    for (std::size_t i = n4; i < n; ++i) acc[i - n4] = std::fma(a[i], b[i], acc[i - n4]);
    return (acc[0] + acc[2]) + (acc[1] + acc[3]);
}

double sum_scalar(const double* a, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        acc[0] += a[i + 0];
        acc[1] += a[i + 1];
        acc[2] += a[i + 2];
        acc[3] += a[i + 3];
    }
    for (std::size_t i = n4; i < n; ++i) acc[i - n4] += a[i];
    return (acc[0] + acc[2]) + (acc[1] + acc[3]);
}

double abs_max_scalar(const double* a, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(a[i]));
    return m;
}

double weighted_abs_sum_scalar(const double* w, const double* a, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        acc[0] = std::fma(w[i + 0], std::fabs(a[i + 0]), acc[0]);
        acc[1] = std::fma(w[i + 1], std::fabs(a[i + 1]), acc[1]);
        acc[2] = std::fma(w[i + 2], std::fabs(a[i + 2]), acc[2]);
        acc[3] = std::fma(w[i + 3], std::fabs(a[i + 3]), acc[3]);
    }
    for (std::size_t i = n4; i < n; ++i) acc[i - n4] = std::fma(w[i], std::fabs(a[i]), acc[i - n4]);
    return (acc[0] + acc[2]) + (acc[1] + acc[3]);
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void scale_scalar(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void pointwise_mul_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

#if NLG_X86

// ---------------------------------------------------------------------------
// AVX2 + FMA kernels. Compiled with per-function target attributes so the
// whole translation unit builds without -mavx2; runtime dispatch keeps them
// off CPUs that lack the instructions.
// ---------------------------------------------------------------------------

__attribute__((target("avx2,fma"))) double dot_avx2(const double* a, const double* b,
                                                    std::size_t n) {
    __m256d vacc = _mm256_setzero_pd();
    std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        vacc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), vacc);
    }
    alignas(32) double acc[4];
    _mm256_store_pd(acc, vacc);
    for (std::size_t i = n4; i < n; ++i) acc[i - n4] = std::fma(a[i], b[i], acc[i - n4]);
    return (acc[0] + acc[2]) + (acc[1] + acc[3]);
}

__attribute__((target("avx2,fma"))) double sum_avx2(const double* a, std::size_t n) {
    __m256d vacc = _mm256_setzero_pd();
    std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < n4; i += 4) vacc = _mm256_add_pd(vacc, _mm256_loadu_pd(a + i));
    alignas(32) double acc[4];
    _mm256_store_pd(acc, vacc);
    for (std::size_t i = n4; i < n; ++i) acc[i - n4] += a[i];
    return (acc[0] + acc[2]) + (acc[1] + acc[3]);
}

__attribute__((target("avx2,fma"))) double abs_max_avx2(const double* a, std::size_t n) {
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d vmax = _mm256_setzero_pd();
    std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        vmax = _mm256_max_pd(vmax, _mm256_andnot_pd(sign_mask, _mm256_loadu_pd(a + i)));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, vmax);
    double m = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
    for (std::size_t i = n4; i < n; ++i) m = std::max(m, std::fabs(a[i]));
    return m;
}

__attribute__((target("avx2,fma"))) double weighted_abs_sum_avx2(const double* w, const double* a,
                                                                 std::size_t n) {
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d vacc = _mm256_setzero_pd();
    std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        __m256d av = _mm256_andnot_pd(sign_mask, _mm256_loadu_pd(a + i));
        vacc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), av, vacc);
    }
    alignas(32) double acc[4];
    _mm256_store_pd(acc, vacc);
    for (std::size_t i = n4; i < n; ++i) acc[i - n4] = std::fma(w[i], std::fabs(a[i]), acc[i - n4]);
    return (acc[0] + acc[2]) + (acc[1] + acc[3]);
}

__attribute__((target("avx2,fma"))) void axpy_avx2(double alpha, const double* x, double* y,
                                                   std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        __m256d vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, vy);
    }
    for (std::size_t i = n4; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

__attribute__((target("avx2,fma"))) void scale_avx2(double alpha, double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (std::size_t i = n4; i < n; ++i) x[i] *= alpha;
}

__attribute__((target("avx2,fma"))) void pointwise_mul_avx2(const double* a, const double* b,
                                                            double* out, std::size_t n) {
    std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (std::size_t i = n4; i < n; ++i) out[i] = a[i] * b[i];
}

#endif  // NLG_X86

struct Dispatch {
    double (*dot)(const double*, const double*, std::size_t) = dot_scalar;
    double (*sum)(const double*, std::size_t) = sum_scalar;
    double (*abs_max)(const double*, std::size_t) = abs_max_scalar;
    double (*weighted_abs_sum)(const double*, const double*, std::size_t) = weighted_abs_sum_scalar;
    void (*axpy)(double, const double*, double*, std::size_t) = axpy_scalar;
    void (*scale)(double, double*, std::size_t) = scale_scalar;
    void (*pointwise_mul)(const double*, const double*, double*, std::size_t) = pointwise_mul_scalar;
    const char* name = "scalar";
};

Dispatch g_dispatch;
std::once_flag g_init_once;

bool cpu_has_avx2() {
#if NLG_X86
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

void apply(Impl impl) {
    Dispatch d;
#if NLG_X86
    if ((impl == Impl::Avx2 || impl == Impl::Auto) && cpu_has_avx2()) {
        d.dot = dot_avx2;
        d.sum = sum_avx2;
        d.abs_max = abs_max_avx2;
        d.weighted_abs_sum = weighted_abs_sum_avx2;
        d.axpy = axpy_avx2;
        d.scale = scale_avx2;
        d.pointwise_mul = pointwise_mul_avx2;
        d.name = "avx2";
    }
#else
    (void)impl;
#endif
    g_dispatch = d;
}

void init_from_env() {
    Impl impl = Impl::Auto;
    if (const char* env = std::getenv("NLG_KERNEL")) {
        std::string v(env);
        if (v == "scalar") impl = Impl::Scalar;
        else if (v == "avx2") impl = Impl::Avx2;
    }
    apply(impl);
}

const Dispatch& dispatch() {
    std::call_once(g_init_once, init_from_env);
    return g_dispatch;
}

}  // namespace

void select(Impl impl) {
    std::call_once(g_init_once, init_from_env);
    apply(impl);
}

std::string active_name() { return dispatch().name; }

bool avx2_available() { return cpu_has_avx2(); }

double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    return dispatch().dot(a.data(), b.data(), a.size());
}

double sum(std::span<const double> a) { return dispatch().sum(a.data(), a.size()); }

double abs_max(std::span<const double> a) { return dispatch().abs_max(a.data(), a.size()); }

double weighted_abs_sum(std::span<const double> w, std::span<const double> a) {
    assert(w.size() == a.size());
    return dispatch().weighted_abs_sum(w.data(), a.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    dispatch().axpy(alpha, x.data(), y.data(), x.size());
}

void scale(double alpha, std::span<double> x) { dispatch().scale(alpha, x.data(), x.size()); }

void pointwise_mul(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    assert(a.size() == b.size() && a.size() == out.size());
    dispatch().pointwise_mul(a.data(), b.data(), out.data(), a.size());
}

}  // namespace nlg::kernels
