#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "dbose/errors.hpp"

namespace dbose {

struct QuadConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    int max_depth = 40;             // deepest bisection allowed for one interval
    double grading_exponent = 4.0;  // x = a + (b-a) w^p near a singular endpoint

    void validate() const {
        if (!(rel_tol > 0 && rel_tol < 1) || !(abs_tol > 0 && abs_tol < 1))
            throw ConfigError("QuadConfig: tolerances must lie in (0,1)");
        if (max_depth < 4) throw ConfigError("QuadConfig: max_depth must be >= 4");
        if (!(grading_exponent >= 1)) throw ConfigError("QuadConfig: grading_exponent must be >= 1");
    }
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    long evaluations = 0;
};

namespace detail {

// Gauss-Kronrod 10/21 (QUADPACK qk21)
inline constexpr double gk21_x[11] = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
inline constexpr double gk21_wk[11] = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525612939, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr double gk21_wg[5] = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
    double a, b, value, error;
    int depth;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk21(F& f, double a, double b, int depth, long& nev) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double fc = f(c);
    double rk = fc * gk21_wk[10], rg = 0.0;
    double fabs_sum = std::abs(fc) * gk21_wk[10];
    double fv1[10], fv2[10];
    for (int j = 0; j < 10; ++j) {
        double dx = h * gk21_x[j];
        double f1 = f(c - dx), f2 = f(c + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        rk += gk21_wk[j] * (f1 + f2);
        fabs_sum += gk21_wk[j] * (std::abs(f1) + std::abs(f2));
        if (j % 2 == 1) rg += gk21_wg[j / 2] * (f1 + f2);
    }
    nev += 21;
    double mean = 0.5 * rk;
    double asc = gk21_wk[10] * std::abs(fc - mean);
    for (int j = 0; j < 10; ++j) asc += gk21_wk[j] * (std::abs(fv1[j] - mean) + std::abs(fv2[j] - mean));
    double val = rk * h;
    double err = std::abs((rk - rg) * h);
    asc *= std::abs(h);
    if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
    double resabs = fabs_sum * std::abs(h);
    const double eps = std::numeric_limits<double>::epsilon();
    if (resabs > std::numeric_limits<double>::min() / (50 * eps))
        err = std::max(50.0 * eps * resabs, err);
    if (!std::isfinite(val)) err = std::numeric_limits<double>::infinity();
    return {a, b, val, err, depth};
}

}  // namespace detail

// globally adaptive Gauss-Kronrod on [a,b], optional interior breakpoints
template <class F>
QuadResult integrate(F&& f, double a, double b, const QuadConfig& cfg,
                     const std::vector<double>& breaks = {}) {
    QuadResult out;
    if (a == b) return out;
    double sign = 1.0;
    if (b < a) {
        std::swap(a, b);
        sign = -1.0;
    }
    std::vector<double> pts{a};
    for (double p : breaks)
        if (p > a && p < b) pts.push_back(p);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());

    std::priority_queue<detail::Segment> heap;
    double total = 0.0, total_err = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (pts[i + 1] <= pts[i]) continue;
        auto s = detail::gk21(f, pts[i], pts[i + 1], 0, out.evaluations);
        total += s.value;
        total_err += s.error;
        heap.push(s);
    }
    const std::size_t max_segments = 20000;
    // tolerance never below the rule's own round-off floor
    const double eps_floor = 200.0 * std::numeric_limits<double>::epsilon();
    while (total_err > std::max({cfg.abs_tol, cfg.rel_tol * std::abs(total), eps_floor * std::abs(total)})) {
        detail::Segment s = heap.top();
        if (s.depth >= cfg.max_depth || heap.size() >= max_segments || !std::isfinite(total_err)) {
            throw QuadratureError("adaptive quadrature did not converge on [" + std::to_string(a) + ", " +
                                      std::to_string(b) + "], error " + std::to_string(total_err),
                                  sign * total, total_err);
        }
        heap.pop();
        double m = 0.5 * (s.a + s.b);
        auto l = detail::gk21(f, s.a, m, s.depth + 1, out.evaluations);
        auto r = detail::gk21(f, m, s.b, s.depth + 1, out.evaluations);
        total += l.value + r.value - s.value;
        total_err += l.error + r.error - s.error;
        heap.push(l);
        heap.push(r);
        if (heap.size() % 64 == 0) {
            // refresh sums to keep round-off out of the stopping test
            auto copy = heap;
            total = total_err = 0.0;
            while (!copy.empty()) {
                total += copy.top().value;
                total_err += copy.top().error;
                copy.pop();
            }
        }
    }
    out.value = sign * total;
    out.error = total_err;
    return out;
}

// int_a^inf via x = a + s/(1-s)
template <class F>
QuadResult integrate_to_inf(F&& f, double a, const QuadConfig& cfg) {
    auto g = [&](double s) {
        double om = 1.0 - s;
        double x = a + s / om;
        double v = f(x);
        return v == 0.0 ? 0.0 : v / (om * om);
    };
    return integrate(g, 0.0, 1.0, cfg);
}

// endpoint singularity at a: x = a + (b-a) w^p
template <class F>
QuadResult integrate_graded(F&& f, double a, double b, const QuadConfig& cfg) {
    const double p = cfg.grading_exponent;
    auto g = [&](double w) {
        if (w <= 0.0) return 0.0;
        double wp = std::pow(w, p - 1.0);
        return f(a + (b - a) * wp * w) * p * wp * (b - a);
    };
    return integrate(g, 0.0, 1.0, cfg);
}

}  // namespace dbose
