#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace nlg {

/// Piecewise-polynomial interpolant on a uniform 1-D knot grid.
///
/// Three representations share one evaluation interface:
///   - cubic spline through node values (not-a-knot or periodic closure),
///   - cubic Hermite from node values and first derivatives,
///   - quintic Hermite from node values, first and second derivatives.
/// Non-periodic interpolants extrapolate by continuing the end polynomial,
/// which is what the tubular extension of a base embedding relies on.
class Interp1D {
  public:
    enum class Closure { NotAKnot, Periodic };

    Interp1D() = default;

    static Interp1D spline(double x0, double h, std::vector<double> values, Closure closure);
    static Interp1D hermite(double x0, double h, std::vector<double> values,
                            std::vector<double> derivs, Closure closure);
    static Interp1D hermite(double x0, double h, std::vector<double> values,
                            std::vector<double> derivs, std::vector<double> second,
                            Closure closure);

    double eval(double x) const;
    double deriv(double x) const;
    double deriv2(double x) const;

    /// Integral of the interpolant from the first knot to x, exact for the
    /// stored piecewise polynomial (all representations).
    double integral_from_start(double x) const;

    bool periodic() const { return closure_ == Closure::Periodic; }
    double x_min() const { return x0_; }
    double x_max() const { return x0_ + h_ * static_cast<double>(intervals()); }
    double period() const { return h_ * static_cast<double>(values_.size()); }
    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }

  private:
    enum class Kind { Spline, HermiteCubic, HermiteQuintic };

    std::size_t intervals() const {
        return closure_ == Closure::Periodic ? values_.size() : values_.size() - 1;
    }
    void locate(double x, std::size_t& idx, double& u) const;
    double partial_integral(std::size_t i, double u) const;
    void build_prefix();

    Kind kind_ = Kind::Spline;
    Closure closure_ = Closure::NotAKnot;
    double x0_ = 0.0;
    double h_ = 1.0;
    std::vector<double> values_;
    std::vector<double> d1_;      // Hermite first derivatives
    std::vector<double> d2_;      // spline second derivatives, or Hermite second derivatives
    std::vector<double> prefix_;  // integral up to each knot (spline only)
};

/// Solve f(x) = y for a strictly monotone scalar function on [lo, hi] by
/// safeguarded Newton iteration (bisection fallback). fp may be null.
double invert_monotone(const std::function<double(double)>& f,
                       const std::function<double(double)>& fp, double y, double lo, double hi,
                       double tol = 1e-14);

}  // namespace nlg
