#pragma once

#include <array>
#include <cstddef>
#include <span>

namespace nlg {

/// Weighted least-squares polynomial fit around a center point in 2-D,
/// degree 2, 3, or 4. Coefficients are stored for monomials
///   [1, x, y, x^2, xy, y^2, x^3, x^2 y, x y^2, y^3,
///    x^4, x^3 y, x^2 y^2, x y^3, y^4]
/// in coordinates relative to the center. The fit reproduces polynomials up
/// to its degree exactly, which several tests lean on.
struct Fit2D {
    std::array<double, 15> c{};
    int degree = 2;

    double value() const { return c[0]; }
    std::array<double, 2> grad() const { return {c[1], c[2]}; }
    // Hessian entries (xx, xy, yy).
    std::array<double, 3> hess() const { return {2.0 * c[3], c[4], 2.0 * c[5]}; }
    double laplacian() const { return 2.0 * c[3] + 2.0 * c[5]; }

    double eval(double dx, double dy) const;
    std::array<double, 2> eval_grad(double dx, double dy) const;
};

/// Fit scattered samples (points flat xy pairs) around `center`. Throws
/// FitFailure when the stencil cannot support the requested degree.
Fit2D fit_scattered(const std::array<double, 2>& center, std::span<const double> points_xy,
                    std::span<const double> values, int degree);

/// Linear operator form of the fit: row-major (terms x n) matrix mapping the
/// n stencil values to the polynomial coefficients.
std::size_t fit_term_count(int degree);
void fit_operator(const std::array<double, 2>& center, std::span<const double> points_xy,
                  int degree, std::span<double> op_out);

}  // namespace nlg
