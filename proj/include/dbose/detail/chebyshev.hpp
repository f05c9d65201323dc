#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

namespace dbose::detail {

// piecewise Chebyshev interpolant on [lo, lo + n_panels*width], equal panels
class ChebPanels {
public:
    ChebPanels() = default;

    template <class F>
    ChebPanels(F&& f, double lo, double hi, int n_panels, int degree)
        : lo_(lo), width_((hi - lo) / n_panels), n_(n_panels), deg_(degree),
          c_(static_cast<std::size_t>(n_panels) * (degree + 1)) {
        const int m = degree + 1;
        std::vector<double> fx(m);
        for (int p = 0; p < n_panels; ++p) {
            const double a = lo + p * width_;
            for (int k = 0; k < m; ++k) {
                double node = std::cos(std::numbers::pi * (k + 0.5) / m);
                fx[k] = f(a + 0.5 * width_ * (node + 1.0));
            }
            for (int j = 0; j < m; ++j) {
                double s = 0.0;
                for (int k = 0; k < m; ++k)
                    s += fx[k] * std::cos(std::numbers::pi * j * (k + 0.5) / m);
                c_[p * m + j] = (j == 0 ? 1.0 : 2.0) * s / m;
            }
        }
    }

    double lo() const { return lo_; }
    double hi() const { return lo_ + n_ * width_; }

    // Clenshaw; x clamped into range
    double operator()(double x) const {
        double r = (x - lo_) / width_;
        int p = static_cast<int>(r);
        if (p < 0) p = 0;
        if (p >= n_) p = n_ - 1;
        const double t = 2.0 * (r - p) - 1.0;
        const double* c = &c_[static_cast<std::size_t>(p) * (deg_ + 1)];
        double b1 = 0.0, b2 = 0.0;
        for (int j = deg_; j >= 1; --j) {
            double b0 = 2.0 * t * b1 - b2 + c[j];
            b2 = b1;
            b1 = b0;
        }
        return t * b1 - b2 + c[0];
    }

    // size of the trailing coefficients, a cheap fit-quality proxy
    double tail() const {
        double m = 0.0;
        for (int p = 0; p < n_; ++p) {
            const double* c = &c_[static_cast<std::size_t>(p) * (deg_ + 1)];
            m = std::max(m, std::abs(c[deg_]) + std::abs(c[deg_ - 1]));
        }
        return m;
    }

private:
    double lo_ = 0.0, width_ = 1.0;
    int n_ = 0, deg_ = 0;
    std::vector<double> c_;
};

}  // namespace dbose::detail
