#pragma once

#include <cfloat>
#include <cmath>
#include <complex>
#include <limits>
#include <math.h>
#include <numbers>

#include "dbose/detail/chebyshev.hpp"
#include "dbose/errors.hpp"

namespace dbose {

using Complex = std::complex<double>;

struct SpecFunResult {
    double value = 0.0;
    double est_abs_error = 0.0;
    bool underflow = false;  // value flushed to 0, not an error
};

namespace detail {

inline constexpr double euler_gamma = 0.57721566490153286061;

// K0, K1 by the ascending series, 0 < x <= 2
inline void k01_series(double x, double& k0, double& k1, double& err) {
    const double y = 0.25 * x * x;
    const double lg = std::log(0.5 * x) + euler_gamma;
    // K0 = -(ln(x/2)+g) I0 + sum H_k y^k/(k!)^2
    // K1 = 1/x + ln(x/2) I1 - (x/4) sum (H_k + H_{k+1} - 2g) y^k/(k!(k+1)!)
    double t0 = 1.0;  // y^k/(k!)^2
    double t1 = 1.0;  // y^k/(k!(k+1)!)
    double i0 = 1.0, i1 = 1.0, s0 = 0.0, s1 = 1.0 - 2.0 * euler_gamma;
    double h = 0.0;
    double abs0 = 0.0, abs1 = std::abs(s1);
    for (int k = 1; k < 60; ++k) {
        t0 *= y / (double(k) * k);
        t1 *= y / (double(k) * (k + 1));
        h += 1.0 / k;
        i0 += t0;
        i1 += t1;
        s0 += h * t0;
        double c1 = (2.0 * h + 1.0 / (k + 1) - 2.0 * euler_gamma) * t1;
        s1 += c1;
        abs0 += std::abs(h * t0);
        abs1 += std::abs(c1);
        if (t0 < 1e-18 * i0 && t1 < 1e-18 * i1) break;
    }
    // I1 = (x/2) * sum y^k/(k!(k+1)!)
    k0 = -lg * i0 + s0;
    k1 = 1.0 / x + (lg - euler_gamma) * 0.5 * x * i1 - 0.25 * x * s1;
    err = 4.0 * DBL_EPSILON * (std::abs(lg) * i0 + abs0);
    (void)abs1;
}

// e^x K0, e^x K1 by the trapezoid rule on K_nu(x) = int_0^inf e^{-x cosh t} cosh(nu t) dt
inline void k01_scaled_trapezoid(double x, double& k0s, double& k1s) {
    const double h = 0.1;
    double s0 = 0.5, s1 = 0.5;  // t = 0 term, half weight
    for (int j = 1; j < 400; ++j) {
        double t = j * h;
        double ch = std::cosh(t);
        double e = std::exp(-x * (ch - 1.0));
        s0 += e;
        s1 += e * ch;
        if (e < 1e-19) break;
    }
    k0s = h * s0;
    k1s = h * s1;
}

// e^x K_nu(x) ~ sqrt(pi/2x) sum a_k(nu)/x^k, large x
inline double k_scaled_asymptotic(double nu, double x, double& err) {
    const double mu = 4.0 * nu * nu;
    double term = 1.0, sum = 1.0;
    err = 0.0;
    for (int k = 1; k < 200; ++k) {
        double next = term * (mu - (2.0 * k - 1) * (2.0 * k - 1)) / (k * 8.0 * x);
        if (std::abs(next) >= std::abs(term)) break;
        term = next;
        sum += term;
        err = std::abs(term);
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    double pre = std::sqrt(std::numbers::pi / (2.0 * x));
    err = pre * (err + 2.0 * DBL_EPSILON * std::abs(sum));
    return pre * sum;
}

inline constexpr double k_series_max = 2.0;
inline constexpr double k_asym_min = 30.0;

// scaled pair e^x K0(x), e^x K1(x)
inline void k01_scaled(double x, double& k0s, double& k1s, double& err0) {
    if (x <= k_series_max) {
        double k0, k1;
        k01_series(x, k0, k1, err0);
        double ex = std::exp(x);
        k0s = k0 * ex;
        k1s = k1 * ex;
        err0 *= ex;
    } else if (x <= k_asym_min) {
        k01_scaled_trapezoid(x, k0s, k1s);
        err0 = 8.0 * DBL_EPSILON * k0s;
    } else {
        double e1;
        k0s = k_scaled_asymptotic(0.0, x, err0);
        k1s = k_scaled_asymptotic(1.0, x, e1);
    }
}

inline void check_positive(double x, const char* what) {
    if (!(x > 0.0)) throw DomainError(std::string(what) + ": argument must be > 0");
}

inline SpecFunResult unscale(double vs, double es, double x) {
    SpecFunResult r;
    double ex = std::exp(-x);
    r.value = vs * ex;
    r.est_abs_error = es * ex;
    if (r.value < DBL_MIN) {
        r.value = 0.0;
        r.est_abs_error = DBL_MIN;
        r.underflow = true;
    }
    return r;
}

}  // namespace detail

inline SpecFunResult bessel_k0_result(double x) {
    detail::check_positive(x, "bessel_k0");
    if (x <= detail::k_series_max) {
        double k0, k1, err;
        detail::k01_series(x, k0, k1, err);
        return {k0, err, false};
    }
    double k0s, k1s, err;
    detail::k01_scaled(x, k0s, k1s, err);
    return detail::unscale(k0s, err, x);
}

inline SpecFunResult bessel_k1_result(double x) {
    detail::check_positive(x, "bessel_k1");
    if (x <= detail::k_series_max) {
        double k0, k1, err;
        detail::k01_series(x, k0, k1, err);
        return {k1, 4.0 * DBL_EPSILON * k1, false};
    }
    double k0s, k1s, err;
    detail::k01_scaled(x, k0s, k1s, err);
    return detail::unscale(k1s, 8.0 * DBL_EPSILON * k1s, x);
}

inline double bessel_k0(double x) { return bessel_k0_result(x).value; }
inline double bessel_k1(double x) { return bessel_k1_result(x).value; }

// e^x K0(x), e^x K1(x): no underflow, used for weights and ratios
inline double bessel_k0_scaled(double x) {
    detail::check_positive(x, "bessel_k0_scaled");
    double a, b, e;
    detail::k01_scaled(x, a, b, e);
    return a;
}

inline double bessel_k1_scaled(double x) {
    detail::check_positive(x, "bessel_k1_scaled");
    double a, b, e;
    detail::k01_scaled(x, a, b, e);
    return b;
}

namespace detail {

inline double khat_direct(double x) {
    double a, b, e;
    k01_scaled(x, a, b, e);
    return x * b / a;
}

// the trapezoid branch is the slow one; tabulate it
inline const ChebPanels& khat_mid_table() {
    static const ChebPanels tab(khat_direct, k_series_max, k_asym_min, 56, 14);
    return tab;
}

}  // namespace detail

// xK1(x)/K0(x); 0 at the origin
inline double khat_ratio(double x) {
    if (!(x >= 0.0)) throw DomainError("khat_ratio: argument must be >= 0");
    if (x == 0.0) return 0.0;
    if (x < 1e-3) {
        // xK1 = 1 + (x^2/2)(L - 1/2) + ..., K0 = -L(1 + x^2/4) + x^2/4 + ..., L = ln(x/2)+g
        double L = std::log(0.5 * x) + detail::euler_gamma;
        double x2 = x * x;
        double num = 1.0 + 0.5 * x2 * (L - 0.5);
        double den = -L * (1.0 + 0.25 * x2) + 0.25 * x2;
        return num / den;
    }
    if (x > detail::k_series_max && x <= detail::k_asym_min) return detail::khat_mid_table()(x);
    if (std::isinf(x)) return x;
    return detail::khat_direct(x);
}

inline double heat_kernel_2d(double t, Complex z) {
    if (!(t > 0.0)) throw DomainError("heat_kernel_2d: t must be > 0");
    return std::exp(-std::norm(z) / (2.0 * t)) / (2.0 * std::numbers::pi * t);
}

// radial form P_t(r), r = |z|
inline double heat_kernel_2d(double t, double r) {
    if (!(t > 0.0)) throw DomainError("heat_kernel_2d: t must be > 0");
    return std::exp(-r * r / (2.0 * t)) / (2.0 * std::numbers::pi * t);
}

// reentrant libm lgamma (plain lgamma writes the global signgam)
inline double log_gamma(double u) {
    if (!(u > 0.0)) throw DomainError("log_gamma: argument must be > 0");
    int sign;
    return ::lgamma_r(u, &sign);
}

}  // namespace dbose
