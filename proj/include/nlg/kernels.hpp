#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace nlg::kernels {

/// Which kernel set the library routes array arithmetic through.
/// Auto picks the widest instruction set the CPU supports.
enum class Impl { Auto, Scalar, Avx2 };

/// Select the kernel implementation globally. Auto (the default) probes the
/// CPU once; the NLG_KERNEL environment variable ("scalar"/"avx2") overrides
/// the probe before the first call.
void select(Impl impl);

/// Name of the implementation currently in effect ("scalar" or "avx2").
std::string active_name();

bool avx2_available();

// Reductions. The scalar reference accumulates in four interleaved partial
// sums with std::fma, matching the vector lane structure, so scalar and AVX2
// results are bitwise identical.
double dot(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> a);
double abs_max(std::span<const double> a);
// sum_i w[i] * |a[i]|, the weighted L1 norm used by residual reports.
double weighted_abs_sum(std::span<const double> w, std::span<const double> a);

// Elementwise updates.
void axpy(double alpha, std::span<const double> x, std::span<double> y);  // y += alpha*x
void scale(double alpha, std::span<double> x);                            // x *= alpha
void pointwise_mul(std::span<const double> a, std::span<const double> b,
                   std::span<double> out);  // out = a .* b

}  // namespace nlg::kernels
