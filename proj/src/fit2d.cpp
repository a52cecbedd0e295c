#include "nlg/fit2d.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "nlg/errors.hpp"

namespace nlg {

namespace {

void monomials(double x, double y, int degree, double* row) {
    row[0] = 1.0;
    row[1] = x;
    row[2] = y;
    row[3] = x * x;
    row[4] = x * y;
    row[5] = y * y;
    if (degree >= 3) {
        row[6] = x * x * x;
        row[7] = x * x * y;
        row[8] = x * y * y;
        row[9] = y * y * y;
    }
    if (degree >= 4) {
        row[10] = x * x * x * x;
        row[11] = x * x * x * y;
        row[12] = x * x * y * y;
        row[13] = x * y * y * y;
        row[14] = y * y * y * y;
    }
}

}  // namespace

double Fit2D::eval(double dx, double dy) const {
    double row[15] = {};
    monomials(dx, dy, degree, row);
    double acc = 0.0;
    std::size_t terms = fit_term_count(degree);
    for (std::size_t t = 0; t < terms; ++t) acc += c[t] * row[t];
    return acc;
}

std::array<double, 2> Fit2D::eval_grad(double dx, double dy) const {
    std::array<double, 2> g{c[1] + 2 * c[3] * dx + c[4] * dy, c[2] + c[4] * dx + 2 * c[5] * dy};
    if (degree >= 3) {
        g[0] += 3 * c[6] * dx * dx + 2 * c[7] * dx * dy + c[8] * dy * dy;
        g[1] += c[7] * dx * dx + 2 * c[8] * dx * dy + 3 * c[9] * dy * dy;
    }
    if (degree >= 4) {
        g[0] += 4 * c[10] * dx * dx * dx + 3 * c[11] * dx * dx * dy + 2 * c[12] * dx * dy * dy +
                c[13] * dy * dy * dy;
        g[1] += c[11] * dx * dx * dx + 2 * c[12] * dx * dx * dy + 3 * c[13] * dx * dy * dy +
                4 * c[14] * dy * dy * dy;
    }
    return g;
}

std::size_t fit_term_count(int degree) {
    if (degree >= 4) return 15u;
    return degree >= 3 ? 10u : 6u;
}

void fit_operator(const std::array<double, 2>& center, std::span<const double> points_xy,
                  int degree, std::span<double> op_out) {
    const std::size_t n = points_xy.size() / 2;
    const std::size_t terms = fit_term_count(degree);
    require(n >= terms, ErrorCode::FitFailure, "stencil smaller than polynomial basis");

    // Scale offsets to O(1) for conditioning.
    double rmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = points_xy[2 * i] - center[0], dy = points_xy[2 * i + 1] - center[1];
        rmax = std::max(rmax, std::hypot(dx, dy));
    }
    if (rmax <= 0.0) fail(ErrorCode::FitFailure, "degenerate stencil (all points coincide)");
    double scale = 1.0 / rmax;

    Eigen::MatrixXd A(n, terms);
    Eigen::VectorXd w(n);
    for (std::size_t i = 0; i < n; ++i) {
        double dx = (points_xy[2 * i] - center[0]) * scale;
        double dy = (points_xy[2 * i + 1] - center[1]) * scale;
        double row[15] = {};
        monomials(dx, dy, degree, row);
        double d = std::hypot(dx, dy);
        double wi = std::pow(std::max(0.0, 1.0 - d / 1.0001), 2.0) + 1e-6;
        w(i) = std::sqrt(wi);
        for (std::size_t t = 0; t < terms; ++t) A(i, t) = row[t] * w(i);
    }

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    require(cod.rank() == static_cast<Eigen::Index>(terms), ErrorCode::FitFailure,
            "rank-deficient stencil");
    // pinv maps weighted residual space; fold the weights back in.
    Eigen::MatrixXd pinv = cod.pseudoInverse();  // terms x n
    for (std::size_t t = 0; t < terms; ++t) {
        // Unscale: coefficient of monomial of total degree d picks scale^d.
        static const int total_deg[15] = {0, 1, 1, 2, 2, 2, 3, 3, 3, 3, 4, 4, 4, 4, 4};
        double unscale = std::pow(scale, total_deg[t]);
        for (std::size_t i = 0; i < n; ++i) {
            op_out[t * n + i] = pinv(t, i) * w(i) * unscale;
        }
    }
}

Fit2D fit_scattered(const std::array<double, 2>& center, std::span<const double> points_xy,
                    std::span<const double> values, int degree) {
    const std::size_t n = points_xy.size() / 2;
    const std::size_t terms = fit_term_count(degree);
    std::vector<double> op(terms * n);
    fit_operator(center, points_xy, degree, op);
    Fit2D fit;
    fit.degree = degree;
    for (std::size_t t = 0; t < terms; ++t) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += op[t * n + i] * values[i];
        fit.c[t] = acc;
    }
    return fit;
}

}  // namespace nlg
