#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>

#include "dbose/detail/chebyshev.hpp"
#include "dbose/errors.hpp"
#include "dbose/quadrature.hpp"
#include "dbose/specfun.hpp"

namespace dbose {

struct KernelParams {
    double beta = 1.0;
    QuadConfig quad{};

    void validate() const {
        if (!(beta > 0)) throw ConfigError("KernelParams: beta must be > 0");
        quad.validate();
    }
};

// f on the plane; radial == true means f(z) depends on |z| only
struct PlaneFunction {
    std::function<double(Complex)> f;
    bool radial = false;

    double operator()(Complex z) const { return f(z); }
    static PlaneFunction constant(double c) {
        return {[c](Complex) { return c; }, true};
    }
    static PlaneFunction disc_indicator(double R) {
        return {[R](Complex z) { return std::abs(z) <= R ? 1.0 : 0.0; }, true};
    }
    static PlaneFunction annulus_indicator(double r1, double r2) {
        return {[r1, r2](Complex z) {
                    double r = std::abs(z);
                    return (r >= r1 && r <= r2) ? 1.0 : 0.0;
                },
                true};
    }
};

inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double four_pi = 4.0 * std::numbers::pi;

namespace detail {

inline constexpr double s_small_x = 0.36787944117144233;  // e^{-1}
inline constexpr double s_large_x = 40.0;

// log of beta^u tau^{u-1}/Gamma(u) (minus x = beta*tau when scaled)
inline double s_log_integrand(double u, double logx, double logtau, double shift) {
    if (u <= 0.0) return -std::numeric_limits<double>::infinity();
    return u * logx - logtau - log_gamma(u) - shift;
}

// peak of u -> u log x - lgamma(u): digamma(u) = log x
inline double s_peak(double logx) {
    double lo = 1e-300, hi = std::max(2.0, std::exp(logx) + 2.0);
    while (boost::math::digamma(hi) < logx) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
        double mid = (lo < 1e-6 * hi) ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
        if (boost::math::digamma(mid) < logx) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// 4 pi int_0^inf g(u) beta^u tau^{u-1}/Gamma(u) du, optionally times e^{-beta tau}
template <class G>
double s_u_quadrature(double beta, double tau, G&& g, bool scaled, const QuadConfig& q) {
    const double logtau = std::log(tau);
    const double logx = std::log(beta) + logtau;
    const double shift = scaled ? beta * tau : 0.0;
    const double up = s_peak(logx);
    const double lpeak = s_log_integrand(up, logx, logtau, shift);
    auto f = [&](double u) {
        double l = s_log_integrand(u, logx, logtau, shift);
        double e = std::exp(l);
        return e == 0.0 ? 0.0 : g(u) * e;
    };
    // concave log integrand: tail past U is below e^{l(U)}/(-l'(U))
    double width = std::max(1.0, std::sqrt(up));
    double U = up + 8.0 * width;
    std::vector<double> br{up};
    if (up < 0.5) br = {0.25 * up, up, 4.0 * up, 16.0 * up};
    double val = 0.0;
    for (int it = 0; it < 60; ++it) {
        auto r = integrate(f, 0.0, U, q, br);
        val = r.value;
        double lU = s_log_integrand(U, logx, logtau, shift);
        double slope = logx - boost::math::digamma(U);
        if (slope < 0.0) {
            double tail = std::exp(lU - std::log(-slope));
            // |g| <= 1 assumed for the tail bound
            if (tail <= std::max(q.abs_tol, 1e-3 * q.rel_tol * std::abs(val)) ||
                tail <= 1e-3 * q.rel_tol * std::exp(lpeak))
                return four_pi * val;
        }
        U *= 2.0;
    }
    throw QuadratureError("s_beta: u-tail bound not met", four_pi * val, 0.0);
}

// e^{-beta tau} tau log^2(tau) s_g(tau) for tau = e^{-1/v}:
// 4 pi e^{-beta tau} int_0^inf g(w v) beta^{w v} w e^{-w}/Gamma(1 + w v) dw
template <class G>
double s_tl2_quadrature(double beta, double v, G&& g, const QuadConfig& q) {
    const double lb = std::log(beta);
    auto f = [&](double w) {
        if (w <= 0.0) return 0.0;
        double u = w * v;
        double l = std::log(w) - w + u * lb - log_gamma(1.0 + u);
        double e = std::exp(l);
        return e == 0.0 ? 0.0 : g(u) * e;
    };
    auto r = integrate_to_inf(f, 0.0, q);
    double tau = std::exp(-1.0 / v);
    return four_pi * std::exp(-beta * tau) * r.value;
}

inline double one(double) { return 1.0; }

// beta = 1 tables: phi(v) = x log^2(x) s^1(x) for x <= e^{-1} (v = 1/log(1/x)),
// psi(y) = e^{-x} s^1(x) for x = e^y in [e^{-1}, 40]
class SOneTable {
public:
    static const SOneTable& get() {
        static const SOneTable t;
        return t;
    }

    // e^{-x} s^1(x)
    double scaled(double x) const {
        if (x <= s_small_x) {
            double L = -std::log(x);
            return std::exp(-x) * phi(1.0 / L) / (x * L * L);
        }
        if (x >= s_large_x) return four_pi;
        return psi_(std::log(x));
    }

    // x log^2 x s^1(x) at v = 1/log(1/x) in [0, 1]
    double phi(double v) const { return v < phi_split ? phi_lo_(v) : phi_hi_(v); }

private:
    static constexpr double phi_split = 0.125;

    SOneTable() {
        QuadConfig q;
        q.rel_tol = 1e-14;
        q.abs_tol = 1e-300;
        auto phi_direct = [&](double v) {
            if (v <= 0.0) return four_pi;
            return s_tl2_quadrature(1.0, v, one, q) / std::exp(-std::exp(-1.0 / v));
        };
        phi_lo_ = ChebPanels(phi_direct, 0.0, phi_split, 16, 18);
        phi_hi_ = ChebPanels(phi_direct, phi_split, 1.0, 28, 18);
        auto psi_direct = [&](double y) { return s_u_quadrature(1.0, std::exp(y), one, true, q); };
        psi_ = ChebPanels(psi_direct, -1.0, std::log(s_large_x), 48, 18);
    }

    ChebPanels phi_lo_, phi_hi_, psi_;
};

// hot-path evaluators of e^{-beta tau} s^beta(tau) and its v-form
struct SFast {
    double beta;
    double scaled(double tau) const { return beta * SOneTable::get().scaled(beta * tau); }
    // e^{-beta tau} tau log^2(tau) s^beta(tau), tau = e^{-1/v}; needs beta*tau <= e^{-1}
    double tl2(double v) const {
        double d = 1.0 - v * std::log(beta);
        double tau = std::exp(-1.0 / v);
        return std::exp(-beta * tau) * SOneTable::get().phi(v / d) / (d * d);
    }
};

// direct quadrature, any bounded weight g(u)
struct SWeighted {
    double beta;
    std::function<double(double)> g;
    QuadConfig q;
    double scaled(double tau) const {
        return beta * tau < 1e-300 ? 0.0 : s_u_quadrature(beta, tau, g, true, q);
    }
    double tl2(double v) const { return s_tl2_quadrature(beta, v, g, q); }
};

// int_0^T e^{-beta tau} s(tau) K(T - tau) d tau; s from an SFast/SWeighted evaluator.
// Near tau = 0 use v = 1/log(1/tau); near tau = T use y = log(T - tau).
template <class S, class K>
double s_convolve(const S& s, double T, K&& kern, const QuadConfig& q) {
    const double beta = s.beta;
    const double tauA = std::min(0.5 * T, s_small_x * std::min(1.0, 1.0 / beta));
    const double vA = -1.0 / std::log(tauA);
    double total = 0.0;
    auto fa = [&](double v) {
        if (v <= 0.0) return 0.0;
        double tau = std::exp(-1.0 / v);
        double k = kern(T - tau);
        return k == 0.0 ? 0.0 : s.tl2(v) * k;
    };
    total += integrate(fa, 0.0, vA, q, {0.25 * vA, 0.5 * vA}).value;
    if (0.5 * T > tauA) {
        auto fb = [&](double tau) {
            double k = kern(T - tau);
            return k == 0.0 ? 0.0 : s.scaled(tau) * k;
        };
        total += integrate(fb, tauA, 0.5 * T, q).value;
    }
    const double ymax = std::log(0.5 * T);
    const double ymin = std::log(T) - 70.0;
    auto fc = [&](double y) {
        double sig = std::exp(y);
        double k = kern(sig);
        return k == 0.0 ? 0.0 : s.scaled(T - sig) * k * sig;
    };
    std::vector<double> br;
    for (double y = ymax - 4.0; y > ymin; y -= 8.0) br.push_back(y);
    total += integrate(fc, ymin, ymax, q, br).value;
    return total;
}

// int_0^T G_s(r0) G_{T-s}(r1) ds, closed form
inline double heat_pair(double T, double r0, double r1) {
    double d = r0 + r1;
    return std::exp(-d * d / (2.0 * T)) * bessel_k0_scaled(r0 * r1 / T) / (2.0 * std::numbers::pi * std::numbers::pi * T);
}

// (1/2pi) int_0^{2pi} exp(x (cos phi - 1)) dphi = e^{-x} I0(x), trapezoid
inline double angular_gauss_mean(double x) {
    if (x < 1e-300) return 1.0;
    int n = 16 + static_cast<int>(10.0 * std::sqrt(x));
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += std::exp(x * (std::cos(two_pi * k / n) - 1.0));
    return s / n;
}

inline int angular_nodes(double x) { return 32 + static_cast<int>(12.0 * std::sqrt(x)); }

// angular mean of f over the circle of radius r, trapezoid
inline double circle_mean(const PlaneFunction& f, double r, int n = 64) {
    if (f.radial) return f(Complex(r, 0.0));
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += f(std::polar(r, two_pi * (k + 0.5) / n));
    return s / n;
}

inline constexpr double zero_radius = 1e-9;

}  // namespace detail

// ---------------------------------------------------------------- s^beta

inline double s_beta(double beta, double tau, const QuadConfig& q = {}) {
    if (!(beta > 0)) throw DomainError("s_beta: beta must be > 0");
    if (!(tau > 0)) throw DomainError("s_beta: tau must be > 0");
    return detail::s_u_quadrature(beta, tau, detail::one, false, q);
}

inline double s_beta_weighted(double beta, double tau, const std::function<double(double)>& g,
                              const QuadConfig& q = {}) {
    if (!(beta > 0)) throw DomainError("s_beta_weighted: beta must be > 0");
    if (!(tau > 0)) throw DomainError("s_beta_weighted: tau must be > 0");
    return detail::s_u_quadrature(beta, tau, g, false, q);
}

// e^{-beta tau} s^beta(tau) from the tables
inline double s_beta_scaled_fast(double beta, double tau) { return detail::SFast{beta}.scaled(tau); }

// ---------------------------------------------------------------- densities

inline double mu0_density(double beta, Complex z) {
    double r = std::abs(z);
    if (r == 0.0) return std::numeric_limits<double>::infinity();
    double k = bessel_k0(std::sqrt(2.0 * beta) * r);
    return 2.0 * beta / std::numbers::pi * k * k;
}

inline double hitting_time_density(double beta, Complex z0, double s) {
    double r = std::abs(z0);
    if (r == 0.0) throw DomainError("hitting_time_density: z0 must be nonzero");
    if (!(s > 0)) return 0.0;
    double a = std::sqrt(2.0 * beta) * r;
    return std::exp(-beta * s - r * r / (2.0 * s) + a) / (2.0 * bessel_k0_scaled(a) * s);
}

inline double ring_kernel(const KernelParams& kp, double t, Complex z) {
    if (!(t > 0)) throw DomainError("ring_kernel: t must be > 0");
    const double beta = kp.beta, r = std::abs(z);
    if (r == 0.0) return std::numeric_limits<double>::infinity();
    auto kern = [&](double sig) { return std::exp(-beta * sig) * heat_kernel_2d(2.0 * sig, r); };
    return std::exp(beta * t) * detail::s_convolve(detail::SFast{beta}, t, kern, kp.quad);
}

inline double semigroup_kernel(const KernelParams& kp, double t, Complex z0, Complex z1) {
    if (!(t > 0)) throw DomainError("semigroup_kernel: t must be > 0");
    const double beta = kp.beta, r0 = std::abs(z0), r1 = std::abs(z1);
    if (r0 == 0.0 || r1 == 0.0) return std::numeric_limits<double>::infinity();
    // int_0^t s(tau) int_0^{t-tau} P_2s(z0) P_2(t-tau-s)(z1) ds dtau, inner in closed form
    auto kern = [&](double sig) { return std::exp(-beta * sig) * 0.5 * detail::heat_pair(2.0 * sig, r0, r1); };
    double conv = std::exp(beta * t) * detail::s_convolve(detail::SFast{beta}, t, kern, kp.quad);
    return heat_kernel_2d(2.0 * t, z0 - z1) + conv;
}

// P^beta_t f(z0) for radial f supported in [lo, hi]; the Gaussian part is averaged over
// the circle in closed form, the convolution part is radial already
inline double semigroup_apply_radial(const KernelParams& kp, double t, Complex z0,
                                     const std::function<double(double)>& f, double lo, double hi) {
    if (!(t > 0)) throw DomainError("semigroup_apply_radial: t must be > 0");
    const double beta = kp.beta, r0 = std::abs(z0);
    if (r0 == 0.0) throw DomainError("semigroup_apply_radial: z0 must be nonzero");
    QuadConfig qi = kp.quad;
    qi.rel_tol = std::max(1e-14, 0.1 * kp.quad.rel_tol);
    auto g = [&](double rho) {
        if (rho <= 0.0) return 0.0;
        double fv = f(rho);
        if (fv == 0.0) return 0.0;
        double d = r0 - rho;
        double heat = std::exp(-d * d / (4.0 * t)) * detail::angular_gauss_mean(r0 * rho / (2.0 * t)) /
                      (2.0 * two_pi * t);
        auto kern = [&](double sig) { return std::exp(-beta * sig) * 0.5 * detail::heat_pair(2.0 * sig, r0, rho); };
        double conv = std::exp(beta * t) * detail::s_convolve(detail::SFast{beta}, t, kern, qi);
        return two_pi * rho * fv * (heat + conv);
    };
    std::vector<double> br;
    if (r0 > lo && r0 < hi) br.push_back(r0);
    return integrate(g, lo, hi, kp.quad, br).value;
}

namespace detail {

// p = radial + gauss * exp(-|z0 - z1|^2 / (2t)); gauss = 0 on the zero branches
struct PdownParts {
    double radial = 0.0;
    double gauss = 0.0;
};

inline PdownParts pdown_parts(const KernelParams& kp, double t, double r0, double r1) {
    const double beta = kp.beta, a = std::sqrt(2.0 * beta);
    const double pref = std::numbers::pi / (2.0 * beta);
    const SFast s{beta};
    PdownParts out;
    bool z0zero = r0 < zero_radius, z1zero = r1 < zero_radius;
    if (z0zero && z1zero) {
        out.radial = pref * s.scaled(t) / (2.0 * std::numbers::pi * std::numbers::pi);
    } else if (z0zero || z1zero) {
        double r = z0zero ? r1 : r0;
        auto kern = [&](double sig) { return std::exp(-beta * sig - r * r / (2.0 * sig) + a * r) / (two_pi * sig); };
        double c = s_convolve(s, t, kern, kp.quad);
        out.radial = pref * c / (two_pi * bessel_k0_scaled(a * r));
    } else {
        double k0 = bessel_k0_scaled(a * r0), k1 = bessel_k0_scaled(a * r1);
        double ea = a * (r0 + r1);
        auto kern = [&](double sig) {
            double d = r0 + r1;
            return std::exp(-beta * sig - d * d / (2.0 * sig) + ea) * bessel_k0_scaled(r0 * r1 / sig) /
                   (2.0 * std::numbers::pi * std::numbers::pi * sig);
        };
        double c = s_convolve(s, t, kern, kp.quad);
        out.radial = pref * 0.5 * c / (k0 * k1);
        out.gauss = pref * std::exp(-beta * t + ea) / (two_pi * t * k0 * k1);
    }
    return out;
}

}  // namespace detail

inline double pdown_density(const KernelParams& kp, double t, Complex z0, Complex z1) {
    if (!(t > 0)) throw DomainError("pdown_density: t must be > 0");
    auto p = detail::pdown_parts(kp, t, std::abs(z0), std::abs(z1));
    if (p.gauss == 0.0) return p.radial;
    return p.radial + p.gauss * std::exp(-std::norm(z0 - z1) / (2.0 * t));
}

// density of |Z_t| at radius r under P_{z0}: 2 pi r * angular mean of p * mu0
inline double radial_marginal_density(const KernelParams& kp, double t, double r0, double r) {
    if (r <= 0.0) return 0.0;
    auto p = detail::pdown_parts(kp, t, r0, r);
    double ang = p.radial;
    if (p.gauss != 0.0) {
        double d = r0 - r;
        ang += p.gauss * std::exp(-d * d / (2.0 * t)) * detail::angular_gauss_mean(r0 * r / t);
    }
    return two_pi * r * ang * mu0_density(kp.beta, Complex(r, 0.0));
}

// CDF of |Z_t| on an increasing grid of radii (grid[0] >= 0)
inline std::vector<double> radial_marginal_cdf(const KernelParams& kp, double t, double r0,
                                               const std::vector<double>& grid) {
    std::vector<double> out(grid.size());
    QuadConfig q = kp.quad;
    q.rel_tol = std::max(q.rel_tol, 1e-9);
    q.abs_tol = std::max(q.abs_tol, 1e-13);
    auto dens = [&](double r) { return radial_marginal_density(kp, t, r0, r); };
    double acc = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] > prev) {
            if (prev == 0.0)
                acc += integrate_graded(dens, 0.0, grid[i], q).value;
            else
                acc += integrate(dens, prev, grid[i], q).value;
        }
        out[i] = acc;
        prev = grid[i];
    }
    return out;
}

// ---------------------------------------------------------------- Theorem 2.1 (2), (3)

namespace detail {

// P_T f_beta(0) = int G_T(z) f(z) K0(a|z|) dz
inline double heat_fbeta_at_zero(const KernelParams& kp, double T, const PlaneFunction& f, const QuadConfig& q) {
    const double a = std::sqrt(2.0 * kp.beta);
    auto g = [&](double rho) {
        if (rho <= 0.0) return 0.0;
        double fb = circle_mean(f, rho);
        if (fb == 0.0) return 0.0;
        return rho * std::exp(-rho * rho / (2.0 * T)) / T * fb * bessel_k0(a * rho);
    };
    double R = std::sqrt(2.0 * T * 750.0);
    double s = std::sqrt(T);
    return integrate(g, 0.0, R, q, {0.1 * s, s, 3.0 * s, 6.0 * s}).value;
}

// P_t f_beta(z0), z0 != 0, polar quadrature around the origin
inline double heat_fbeta(const KernelParams& kp, double t, Complex z0, const PlaneFunction& f, const QuadConfig& q) {
    const double a = std::sqrt(2.0 * kp.beta), r0 = std::abs(z0);
    auto g = [&](double rho) {
        if (rho <= 0.0) return 0.0;
        double x = r0 * rho / t;
        double d = r0 - rho;
        double base = std::exp(-d * d / (2.0 * t)) / (two_pi * t);
        if (base == 0.0) return 0.0;
        double ang;
        if (f.radial) {
            ang = f(Complex(rho, 0.0)) * angular_gauss_mean(x);
        } else {
            int n = angular_nodes(x);
            double sum = 0.0;
            for (int k = 0; k < n; ++k) {
                Complex z = std::polar(rho, std::arg(z0) + two_pi * (k + 0.5) / n);
                sum += f(z) * std::exp(x * (std::cos(two_pi * (k + 0.5) / n) - 1.0));
            }
            ang = sum / n;
        }
        return two_pi * rho * base * ang * bessel_k0(a * rho);
    };
    double s = std::sqrt(t);
    std::vector<double> br{r0, std::max(0.0, r0 - 4 * s), r0 + 4 * s, 0.5 * r0};
    return integrate(g, 0.0, r0 + 40.0 * s, q, br).value;
}

}  // namespace detail

inline double joint_law_eval(const KernelParams& kp, double t, Complex z0, const PlaneFunction& f,
                             const std::function<double(double)>& g) {
    if (!(t > 0)) throw DomainError("joint_law_eval: t must be > 0");
    const double beta = kp.beta, a = std::sqrt(2.0 * beta), r0 = std::abs(z0);
    QuadConfig q = kp.quad;
    QuadConfig qi = q;  // inner rules a notch tighter than the outer one
    qi.rel_tol = std::max(1e-14, 0.1 * q.rel_tol);
    detail::SWeighted sg{beta, g, qi};
    if (r0 < detail::zero_radius) {
        auto kern = [&](double sig) { return std::exp(-beta * sig) * detail::heat_fbeta_at_zero(kp, sig, f, qi); };
        return detail::s_convolve(sg, t, kern, q) / two_pi;
    }
    const double k0s = bessel_k0_scaled(a * r0);
    double first = 0.0;
    double g0 = g(0.0);
    if (g0 != 0.0) first = std::exp(-beta * t + a * r0) * detail::heat_fbeta(kp, t, z0, f, qi) / k0s * g0;
    // int_0^t e^{-beta s} G_s(r0)/(2 K0) J(t-s) ds, J(T) = 2 pi e^{-beta T} int s_g P f_beta(0);
    // swapped into rho-outer / tau-inner with the closed-form heat pair
    auto outer = [&](double rho) {
        if (rho <= 0.0) return 0.0;
        double fb = detail::circle_mean(f, rho);
        if (fb == 0.0) return 0.0;
        auto kern = [&](double sig) { return std::exp(-beta * sig) * detail::heat_pair(sig, r0, rho); };
        double c = detail::s_convolve(sg, t, kern, qi);
        return two_pi * rho * fb * bessel_k0(a * rho) * c;
    };
    double s = std::sqrt(t);
    double R = r0 + 40.0 * s;
    double second = integrate(outer, 0.0, R, q, {r0, 0.1 * s, s}).value;
    second *= std::exp(a * r0) / (2.0 * k0s);
    return first + second;
}

inline double local_time_mean_profile(const KernelParams& kp, double t, Complex z0, const std::function<double(double)>& h) {
    if (!(t > 0)) throw DomainError("local_time_mean_profile: t must be > 0");
    const double beta = kp.beta, a = std::sqrt(2.0 * beta), r0 = std::abs(z0);
    const detail::SFast s{beta};
    if (r0 < detail::zero_radius) {
        auto kern = [&](double sig) { return h(t - sig); };
        return detail::s_convolve(s, t, kern, kp.quad) / four_pi;
    }
    QuadConfig qi = kp.quad;
    qi.rel_tol = std::max(1e-14, 0.1 * kp.quad.rel_tol);
    const double k0s = bessel_k0_scaled(a * r0);
    // int_0^t h(tau) [int_0^tau e^{-beta s} G_s(r0) shat(tau - s) ds] dtau / (4 K0)
    auto outer = [&](double tau) {
        if (tau <= 0.0) return 0.0;
        double hv = h(tau);
        if (hv == 0.0) return 0.0;
        auto kern = [&](double sig) {
            return std::exp(-beta * sig - r0 * r0 / (2.0 * sig) + a * r0) / (two_pi * sig);
        };
        return hv * detail::s_convolve(s, tau, kern, qi);
    };
    return integrate(outer, 0.0, t, kp.quad).value / (4.0 * k0s);
}

// ---------------------------------------------------------------- generator

// P(x,y) exp(-|z-c|^2/(2 s^2)) chi(|z|), P quadratic, chi = 1 on [0,R-1], 0 past R (C^2 blend)
class TestFunction {
public:
    struct Poly {
        double c0 = 1, cx = 0, cy = 0, cxx = 0, cxy = 0, cyy = 0;
    };

    TestFunction() = default;
    TestFunction(Poly p, Complex center, double width, double cutoff = 6.0)
        : p_(p), c_(center), s2_(width * width), R_(cutoff) {}

    static TestFunction constant(double c) { return TestFunction(Poly{c}, 0.0, 0.0); }
    // exp(-|z|^2 / (2 s^2))
    static TestFunction gaussian(double width, Complex center = 0.0) { return TestFunction(Poly{}, center, width); }

    double value(Complex z) const {
        double v = poly(z) * chi(std::abs(z));
        return s2_ > 0 ? v * gauss(z) : v;
    }

    // (df/dx, df/dy) packed as a complex number
    Complex grad(Complex z) const {
        double x = z.real(), y = z.imag(), r = std::abs(z);
        double P = poly(z), E = s2_ > 0 ? gauss(z) : 1.0, X = chi(r), dX = dchi(r);
        Complex gP(p_.cx + 2 * p_.cxx * x + p_.cxy * y, p_.cy + p_.cxy * x + 2 * p_.cyy * y);
        Complex gE = s2_ > 0 ? -E * (z - c_) / s2_ : Complex(0.0);
        Complex gX = r > 0 ? dX * z / r : Complex(0.0);
        return gP * E * X + P * gE * X + P * E * gX;
    }

    double laplacian(Complex z) const {
        double r = std::abs(z);
        double P = poly(z), E = s2_ > 0 ? gauss(z) : 1.0, X = chi(r);
        double x = z.real(), y = z.imag();
        Complex gP(p_.cx + 2 * p_.cxx * x + p_.cxy * y, p_.cy + p_.cxy * x + 2 * p_.cyy * y);
        double lP = 2 * p_.cxx + 2 * p_.cyy;
        Complex gE = s2_ > 0 ? -E * (z - c_) / s2_ : Complex(0.0);
        double lE = s2_ > 0 ? E * (std::norm(z - c_) / (s2_ * s2_) - 2.0 / s2_) : 0.0;
        double dX = dchi(r), d2X = d2chi(r);
        Complex gX = r > 0 ? dX * z / r : Complex(0.0);
        double lX = r > 0 ? d2X + dX / r : 0.0;
        auto dot = [](Complex u, Complex v) { return u.real() * v.real() + u.imag() * v.imag(); };
        return lP * E * X + P * lE * X + P * E * lX +
               2.0 * (dot(gP, gE) * X + dot(gP, gX) * E + P * dot(gE, gX));
    }

    bool radial() const { return c_ == Complex(0.0) && p_.cx == 0 && p_.cy == 0 && p_.cxy == 0 && p_.cxx == p_.cyy; }

private:
    double poly(Complex z) const {
        double x = z.real(), y = z.imag();
        return p_.c0 + p_.cx * x + p_.cy * y + p_.cxx * x * x + p_.cxy * x * y + p_.cyy * y * y;
    }
    double gauss(Complex z) const { return std::exp(-std::norm(z - c_) / (2.0 * s2_)); }
    // smootherstep blend on [R-1, R]
    double u(double r) const { return r - (R_ - 1.0); }
    double chi(double r) const {
        double s = u(r);
        if (s <= 0) return 1.0;
        if (s >= 1) return 0.0;
        return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    }
    double dchi(double r) const {
        double s = u(r);
        if (s <= 0 || s >= 1) return 0.0;
        return -30.0 * s * s * (1.0 - s) * (1.0 - s);
    }
    double d2chi(double r) const {
        double s = u(r);
        if (s <= 0 || s >= 1) return 0.0;
        return -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
    }

    Poly p_{};
    Complex c_{0.0};
    double s2_ = 0.0;
    double R_ = 6.0;
};

// khat(sqrt(2 beta)|z|) z/|z|^2, the inward drift magnitude as a plane vector
inline Complex drift_vector(double beta, Complex z) {
    double r2 = std::norm(z);
    if (r2 == 0.0) throw DomainError("drift: z must be nonzero");
    return khat_ratio(std::sqrt(2.0 * beta * r2)) * z / r2;
}

// A f(z) = Lap f / 2 - <drift, grad f>; drift_scale != 1 only for mutation runs
inline double generator_apply(double beta, const TestFunction& f, Complex z, double drift_scale = 1.0) {
    if (z == Complex(0.0)) throw DomainError("generator_apply: z must be nonzero");
    Complex d = drift_scale * drift_vector(beta, z);
    Complex g = f.grad(z);
    return 0.5 * f.laplacian(z) - (d.real() * g.real() + d.imag() * g.imag());
}

}  // namespace dbose
