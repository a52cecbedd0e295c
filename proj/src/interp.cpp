#include "nlg/interp.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace nlg {

namespace {

// Thomas algorithm for a tridiagonal system with constant bands (a, b, c).
std::vector<double> solve_tridiag_const(double a, double b, double c, std::vector<double> rhs) {
    std::size_t n = rhs.size();
    if (n == 0) return rhs;
    std::vector<double> cp(n, 0.0);
    cp[0] = c / b;
    rhs[0] /= b;
    for (std::size_t i = 1; i < n; ++i) {
        double m = b - a * cp[i - 1];
        cp[i] = c / m;
        rhs[i] = (rhs[i] - a * rhs[i - 1]) / m;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= cp[i] * rhs[i + 1];
    return rhs;
}

// Cyclic tridiagonal with constant bands via Sherman-Morrison.
std::vector<double> solve_cyclic_const(double a, double b, double c, std::vector<double> rhs) {
    std::size_t n = rhs.size();
    if (n == 1) return {rhs[0] / (a + b + c)};
    if (n == 2) {
        // Both off-diagonals wrap onto the same entry.
        double b00 = b, b01 = a + c, b10 = a + c, b11 = b;
        double det = b00 * b11 - b01 * b10;
        return {(rhs[0] * b11 - b01 * rhs[1]) / det, (b00 * rhs[1] - b10 * rhs[0]) / det};
    }
    // Sherman-Morrison: wrap corners A[0][n-1]=a and A[n-1][0]=c are removed
    // by a rank-one update u v^T with u=(gamma,0,..,0,c), v=(1,0,..,0,a/gamma).
    double gamma = -b;
    std::vector<double> dl(n, a), dm(n, b), du(n, c);
    dm[0] = b - gamma;
    dm[n - 1] = b - a * c / gamma;
    auto thomas = [&](std::vector<double> r) {
        std::vector<double> cp(n, 0.0);
        cp[0] = du[0] / dm[0];
        r[0] /= dm[0];
        for (std::size_t i = 1; i < n; ++i) {
            double m = dm[i] - dl[i] * cp[i - 1];
            cp[i] = du[i] / m;
            r[i] = (r[i] - dl[i] * r[i - 1]) / m;
        }
        for (std::size_t i = n - 1; i-- > 0;) r[i] -= cp[i] * r[i + 1];
        return r;
    };
    std::vector<double> zu(n, 0.0);
    zu[0] = gamma;
    zu[n - 1] = c;
    std::vector<double> x = thomas(std::move(rhs));
    std::vector<double> z = thomas(std::move(zu));
    double fact = (x[0] + a * x[n - 1] / gamma) / (1.0 + z[0] + a * z[n - 1] / gamma);
    for (std::size_t i = 0; i < n; ++i) x[i] -= fact * z[i];
    return x;
}

}  // namespace

Interp1D Interp1D::spline(double x0, double h, std::vector<double> values, Closure closure) {
    Interp1D s;
    s.kind_ = Kind::Spline;
    s.closure_ = closure;
    s.x0_ = x0;
    s.h_ = h;
    s.values_ = std::move(values);
    std::size_t n = s.values_.size();
    assert(n >= 2);
    const auto& y = s.values_;
    double inv_h2 = 6.0 / (h * h);

    if (closure == Closure::Periodic) {
        std::vector<double> rhs(n);
        for (std::size_t i = 0; i < n; ++i) {
            double ym = y[(i + n - 1) % n], yp = y[(i + 1) % n];
            rhs[i] = inv_h2 * (ym - 2.0 * y[i] + yp);
        }
        s.d2_ = solve_cyclic_const(1.0, 4.0, 1.0, std::move(rhs));
    } else {
        s.d2_.assign(n, 0.0);
        if (n == 2) {
            // Linear segment.
        } else if (n == 3) {
            // Single quadratic through three points: constant second derivative.
            double m = (y[0] - 2.0 * y[1] + y[2]) / (h * h);
            s.d2_ = {m, m, m};
        } else {
            // Uniform-grid not-a-knot: the corner conditions decouple M_1 and
            // M_{n-2} as plain second differences.
            std::vector<double> m(n, 0.0);
            m[1] = (y[0] - 2.0 * y[1] + y[2]) / (h * h);
            m[n - 2] = (y[n - 3] - 2.0 * y[n - 2] + y[n - 1]) / (h * h);
            if (n > 4) {
                std::size_t inner = n - 4;  // unknowns M_2 .. M_{n-3}
                std::vector<double> rhs(inner);
                for (std::size_t k = 0; k < inner; ++k) {
                    std::size_t i = k + 2;
                    rhs[k] = inv_h2 * (y[i - 1] - 2.0 * y[i] + y[i + 1]);
                }
                rhs[0] -= m[1];
                rhs[inner - 1] -= m[n - 2];
                auto sol = solve_tridiag_const(1.0, 4.0, 1.0, std::move(rhs));
                for (std::size_t k = 0; k < inner; ++k) m[k + 2] = sol[k];
            }
            m[0] = 2.0 * m[1] - m[2];
            m[n - 1] = 2.0 * m[n - 2] - m[n - 3];
            s.d2_ = std::move(m);
        }
    }
    s.build_prefix();
    return s;
}

Interp1D Interp1D::hermite(double x0, double h, std::vector<double> values,
                           std::vector<double> derivs, Closure closure) {
    Interp1D s;
    s.kind_ = Kind::HermiteCubic;
    s.closure_ = closure;
    s.x0_ = x0;
    s.h_ = h;
    s.values_ = std::move(values);
    s.d1_ = std::move(derivs);
    assert(s.values_.size() == s.d1_.size());
    s.build_prefix();
    return s;
}

Interp1D Interp1D::hermite(double x0, double h, std::vector<double> values,
                           std::vector<double> derivs, std::vector<double> second,
                           Closure closure) {
    Interp1D s;
    s.kind_ = Kind::HermiteQuintic;
    s.closure_ = closure;
    s.x0_ = x0;
    s.h_ = h;
    s.values_ = std::move(values);
    s.d1_ = std::move(derivs);
    s.d2_ = std::move(second);
    assert(s.values_.size() == s.d1_.size() && s.values_.size() == s.d2_.size());
    s.build_prefix();
    return s;
}

void Interp1D::locate(double x, std::size_t& idx, double& u) const {
    std::size_t m = intervals();
    double t = (x - x0_) / h_;
    if (closure_ == Closure::Periodic) {
        double nm = static_cast<double>(m);
        t = std::fmod(t, nm);
        if (t < 0.0) t += nm;
        idx = std::min(static_cast<std::size_t>(t), m - 1);
        u = t - static_cast<double>(idx);
    } else {
        // Clamp to the end intervals; u may leave [0,1] there (extrapolation).
        if (t <= 0.0) {
            idx = 0;
        } else if (t >= static_cast<double>(m)) {
            idx = m - 1;
        } else {
            idx = std::min(static_cast<std::size_t>(t), m - 1);
        }
        u = t - static_cast<double>(idx);
    }
}

double Interp1D::eval(double x) const {
    std::size_t i;
    double u;
    locate(x, i, u);
    std::size_t j = (i + 1) % values_.size();
    double yi = values_[i], yj = values_[j];
    switch (kind_) {
        case Kind::Spline: {
            double mi = d2_[i], mj = d2_[j];
            double a = 1.0 - u;
            return yi * a + yj * u +
                   (h_ * h_ / 6.0) * ((a * a * a - a) * mi + (u * u * u - u) * mj);
        }
        case Kind::HermiteCubic: {
            double di = d1_[i] * h_, dj = d1_[j] * h_;
            double u2 = u * u, u3 = u2 * u;
            double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u;
            double h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
            return h00 * yi + h10 * di + h01 * yj + h11 * dj;
        }
        case Kind::HermiteQuintic: {
            double di = d1_[i] * h_, dj = d1_[j] * h_;
            double si = d2_[i] * h_ * h_, sj = d2_[j] * h_ * h_;
            double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
            double H0 = 1 - 10 * u3 + 15 * u4 - 6 * u5;
            double H1 = u - 6 * u3 + 8 * u4 - 3 * u5;
            double H2 = 0.5 * u2 - 1.5 * u3 + 1.5 * u4 - 0.5 * u5;
            double H3 = 10 * u3 - 15 * u4 + 6 * u5;
            double H4 = -4 * u3 + 7 * u4 - 3 * u5;
            double H5 = 0.5 * u3 - u4 + 0.5 * u5;
            return yi * H0 + di * H1 + si * H2 + yj * H3 + dj * H4 + sj * H5;
        }
    }
    return 0.0;
}

double Interp1D::deriv(double x) const {
    std::size_t i;
    double u;
    locate(x, i, u);
    std::size_t j = (i + 1) % values_.size();
    double yi = values_[i], yj = values_[j];
    switch (kind_) {
        case Kind::Spline: {
            double mi = d2_[i], mj = d2_[j];
            double a = 1.0 - u;
            return (yj - yi) / h_ +
                   (h_ / 6.0) * ((1.0 - 3.0 * a * a) * mi + (3.0 * u * u - 1.0) * mj);
        }
        case Kind::HermiteCubic: {
            double di = d1_[i] * h_, dj = d1_[j] * h_;
            double u2 = u * u;
            double g00 = 6 * u2 - 6 * u, g10 = 3 * u2 - 4 * u + 1;
            double g01 = -6 * u2 + 6 * u, g11 = 3 * u2 - 2 * u;
            return (g00 * yi + g10 * di + g01 * yj + g11 * dj) / h_;
        }
        case Kind::HermiteQuintic: {
            double di = d1_[i] * h_, dj = d1_[j] * h_;
            double si = d2_[i] * h_ * h_, sj = d2_[j] * h_ * h_;
            double u2 = u * u, u3 = u2 * u, u4 = u3 * u;
            double G0 = -30 * u2 + 60 * u3 - 30 * u4;
            double G1 = 1 - 18 * u2 + 32 * u3 - 15 * u4;
            double G2 = u - 4.5 * u2 + 6 * u3 - 2.5 * u4;
            double G3 = 30 * u2 - 60 * u3 + 30 * u4;
            double G4 = -12 * u2 + 28 * u3 - 15 * u4;
            double G5 = 1.5 * u2 - 4 * u3 + 2.5 * u4;
            return (yi * G0 + di * G1 + si * G2 + yj * G3 + dj * G4 + sj * G5) / h_;
        }
    }
    return 0.0;
}

double Interp1D::deriv2(double x) const {
    std::size_t i;
    double u;
    locate(x, i, u);
    std::size_t j = (i + 1) % values_.size();
    double yi = values_[i], yj = values_[j];
    switch (kind_) {
        case Kind::Spline:
            return (1.0 - u) * d2_[i] + u * d2_[j];
        case Kind::HermiteCubic: {
            double di = d1_[i] * h_, dj = d1_[j] * h_;
            return ((12 * u - 6) * yi + (6 * u - 4) * di + (6 - 12 * u) * yj + (6 * u - 2) * dj) /
                   (h_ * h_);
        }
        case Kind::HermiteQuintic: {
            double di = d1_[i] * h_, dj = d1_[j] * h_;
            double si = d2_[i] * h_ * h_, sj = d2_[j] * h_ * h_;
            double u2 = u * u, u3 = u2 * u;
            double F0 = -60 * u + 180 * u2 - 120 * u3;
            double F1 = -36 * u + 96 * u2 - 60 * u3;
            double F2 = 1 - 9 * u + 18 * u2 - 10 * u3;
            double F3 = 60 * u - 180 * u2 + 120 * u3;
            double F4 = -24 * u + 84 * u2 - 60 * u3;
            double F5 = 3 * u - 12 * u2 + 10 * u3;
            return (yi * F0 + di * F1 + si * F2 + yj * F3 + dj * F4 + sj * F5) / (h_ * h_);
        }
    }
    return 0.0;
}

double Interp1D::partial_integral(std::size_t i, double u) const {
    std::size_t j = (i + 1) % values_.size();
    double yi = values_[i], yj = values_[j];
    switch (kind_) {
        case Kind::Spline: {
            double mi = d2_[i], mj = d2_[j];
            double a = 1.0 - u;
            return h_ * (yi * u + (yj - yi) * u * u / 2.0) +
                   (h_ * h_ * h_ / 6.0) *
                       (mi * ((1.0 - a * a * a * a) / 4.0 - (u - u * u / 2.0)) +
                        mj * (u * u * u * u / 4.0 - u * u / 2.0));
        }
        case Kind::HermiteCubic: {
            double di = d1_[i] * h_, dj = d1_[j] * h_;
            double u2 = u * u, u3 = u2 * u, u4 = u3 * u;
            double I00 = u4 / 2 - u3 + u;
            double I10 = u4 / 4 - 2.0 * u3 / 3 + u2 / 2;
            double I01 = -u4 / 2 + u3;
            double I11 = u4 / 4 - u3 / 3;
            return h_ * (yi * I00 + di * I10 + yj * I01 + dj * I11);
        }
        case Kind::HermiteQuintic: {
            double di = d1_[i] * h_, dj = d1_[j] * h_;
            double si = d2_[i] * h_ * h_, sj = d2_[j] * h_ * h_;
            double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u, u6 = u5 * u;
            double I0 = u - 2.5 * u4 + 3 * u5 - u6;
            double I1 = u2 / 2 - 1.5 * u4 + 1.6 * u5 - 0.5 * u6;
            double I2 = u3 / 6 - 0.375 * u4 + 0.3 * u5 - u6 / 12;
            double I3 = 2.5 * u4 - 3 * u5 + u6;
            double I4 = -u4 + 1.4 * u5 - 0.5 * u6;
            double I5 = u4 / 8 - u5 / 5 + u6 / 12;
            return h_ * (yi * I0 + di * I1 + si * I2 + yj * I3 + dj * I4 + sj * I5);
        }
    }
    return 0.0;
}

void Interp1D::build_prefix() {
    std::size_t m = intervals();
    prefix_.assign(m + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i) prefix_[i + 1] = prefix_[i] + partial_integral(i, 1.0);
}

double Interp1D::integral_from_start(double x) const {
    std::size_t m = intervals();
    double whole = 0.0;
    double t = (x - x0_) / h_;
    if (closure_ == Closure::Periodic) {
        double nm = static_cast<double>(m);
        double wraps = std::floor(t / nm);
        whole = wraps * prefix_[m];
        t -= wraps * nm;
    } else {
        t = std::clamp(t, 0.0, static_cast<double>(m));
    }
    std::size_t i = std::min(static_cast<std::size_t>(t), m - 1);
    double u = t - static_cast<double>(i);
    return whole + prefix_[i] + partial_integral(i, u);
}

double invert_monotone(const std::function<double(double)>& f,
                       const std::function<double(double)>& fp, double y, double lo, double hi,
                       double tol) {
    double flo = f(lo) - y, fhi = f(hi) - y;
    bool increasing = fhi > flo;
    if (!increasing) {
        std::swap(flo, fhi);
    }
    if (flo > 0.0) return increasing ? lo : hi;
    if (fhi < 0.0) return increasing ? hi : lo;
    double a = lo, b = hi;
    double x = 0.5 * (a + b);
    for (int iter = 0; iter < 200; ++iter) {
        double fx = f(x) - y;
        if ((fx > 0.0) == increasing) {
            b = x;
        } else {
            a = x;
        }
        double step = 0.0;
        bool newton_ok = false;
        if (fp) {
            double dfx = fp(x);
            if (std::fabs(dfx) > 1e-300) {
                step = -fx / dfx;
                double xn = x + step;
                if (xn > std::min(a, b) && xn < std::max(a, b)) {
                    x = xn;
                    newton_ok = true;
                }
            }
        }
        if (!newton_ok) {
            x = 0.5 * (a + b);
            step = 0.5 * (b - a);
        }
        if (std::fabs(step) < tol * (1.0 + std::fabs(x))) break;
    }
    return x;
}

}  // namespace nlg
