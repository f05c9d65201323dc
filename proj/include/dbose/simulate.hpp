#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "dbose/errors.hpp"
#include "dbose/parallel.hpp"
#include "dbose/rng.hpp"
#include "dbose/specfun.hpp"

namespace dbose {

// (j', j) with 1 <= j < j' <= N, 1-based particle labels
struct Edge {
    int hi = 2;
    int lo = 1;

    void validate(int n) const {
        if (!(lo >= 1 && lo < hi && hi <= n))
            throw ConfigError("edge (" + std::to_string(hi) + "," + std::to_string(lo) +
                              ") needs 1 <= j < j' <= N = " + std::to_string(n));
    }
    bool operator==(const Edge&) const = default;
    bool contains(int j) const { return j == hi || j == lo; }
};

// sigma(j) . sigma(k): 2 if equal, +-1 if sharing one particle, 0 if disjoint
inline int sigma_dot(Edge a, Edge b) {
    auto comp = [](Edge e, int p) { return p == e.hi ? 1 : (p == e.lo ? -1 : 0); };
    return comp(a, a.hi) * comp(b, a.hi) + comp(a, a.lo) * comp(b, a.lo);
}

struct ModelParams {
    double beta = 1.0;
    int n_particles = 2;
    Edge edge{};

    void validate() const {
        if (!(beta > 0 && std::isfinite(beta))) throw ConfigError("beta must be a positive finite number");
        if (n_particles < 2) throw ConfigError("n_particles must be >= 2");
        edge.validate(n_particles);
    }
};

enum class RadialScheme {
    reflected_split,  // default, see simulate_radial_sq
    truncated_euler,
};

struct SimConfig {
    double t_end = 1.0;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    long n_paths = 1;
    double zero_threshold = -1.0;  // < 0: use dt * 1e-2
    RadialScheme scheme = RadialScheme::reflected_split;
    double drift_scale = 1.0;  // != 1 only for mutation runs
    int workers = 0;           // 0: DBOSE_WORKERS or hardware count

    int steps() const { return int(std::llround(t_end / dt)); }
    double threshold() const { return zero_threshold < 0 ? 1e-2 * dt : zero_threshold; }

    void validate() const {
        if (!(dt > 0 && t_end > 0 && dt <= t_end)) throw ConfigError("need 0 < dt <= t_end");
        double m = t_end / dt;
        if (std::abs(m - std::round(m)) > 1e-6 * m) throw ConfigError("t_end must be a multiple of dt");
        if (steps() > 100000000) throw ConfigError("too many steps");
        if (n_paths < 1) throw ConfigError("n_paths must be >= 1");
        if (!(drift_scale >= 0 && std::isfinite(drift_scale))) throw ConfigError("drift_scale must be >= 0");
    }
};

struct SkewProductConfig {
    double alpha_rho = 0.0;
    double alpha_theta = 0.0;
    double theta0 = 0.0;

    void validate() const {
        if (!(alpha_rho >= 0 && alpha_rho < 0.5) || !(alpha_theta >= 0 && alpha_theta < 0.5))
            throw ConfigError("alpha_rho, alpha_theta must lie in [0, 1/2)");
    }
};

// driving increments, one entry per step
struct Noise {
    std::vector<double> radial;       // dB of the squared radial SDE
    std::vector<double> radial_perp;  // auxiliary normal of the split step
    std::vector<double> bridge_u;     // uniform for the bridge minimum
    std::vector<double> angular;      // dW_theta
    std::vector<Complex> rel;         // Cartesian increments of the relative motion's BM
    std::vector<Complex> com;         // W^{i'} increments (N-particle paths)
    std::vector<std::vector<Complex>> free;  // by 0-based particle, empty for the edge pair
};

struct Path {
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t index = 0;
    double beta = 1.0;
    double zero_threshold = 0.0;
    int n_particles = 0;  // 0: radial-squared only, 1: relative motion
    Edge edge{};
    std::vector<double> times;
    std::vector<Complex> positions;  // time-major, n_particles per row
    std::vector<Complex> rel;        // the relative-motion track
    std::vector<double> radial_sq;
    std::vector<double> radial_sq_cmp;  // BESQ(2) under shared noise (radial-only runs)
    std::vector<int> zero_hits;
    Noise noise;

    int steps() const { return int(radial_sq.size()) - 1; }
    double t_end() const { return times.empty() ? 0.0 : times.back(); }
    // particle j (1-based) at grid index n
    Complex position(int n, int j) const { return positions[std::size_t(n) * n_particles + (j - 1)]; }
    bool is_zero_hit(int n) const { return radial_sq[n] <= zero_threshold; }
};

// drift of the relative motion as a plane vector: -khat(sqrt(2 beta)|z|) / conj(z)
inline Complex drift_cartesian(double beta, Complex z) {
    double r2 = std::norm(z);
    if (r2 == 0.0) throw DomainError("drift_cartesian: z must be nonzero");
    return -khat_ratio(std::sqrt(2.0 * beta * r2)) * z / r2;
}

namespace detail {

// One path of X = |Z|^2 (and optionally the angle). The radial track only consumes the
// radial/radial_perp/bridge channels, so radial-only and full runs share X bit for bit.
class RelativeStepper {
public:
    RelativeStepper(const ModelParams& p, const SimConfig& c, std::uint64_t index, Complex z0, bool angular,
                    bool comparison)
        : a_(std::sqrt(2.0 * p.beta)), dt_(c.dt), sq_(std::sqrt(c.dt)), thr_(c.threshold()),
          floor_(std::max(c.threshold(), 1e-300)), scale_(c.drift_scale), scheme_(c.scheme),
          angular_(angular), cmp_(comparison), rad_(c.seed, index, Channel::radial),
          perp_(c.seed, index, Channel::radial_perp), bridge_(c.seed, index, Channel::bridge),
          ang_(c.seed, index, Channel::angular), restart_(c.seed, index, Channel::restart) {
        x_ = xc_ = std::norm(z0);
        if (angular_) theta_ = (z0 == Complex(0.0)) ? two_pi_ * restart_.uniform() : std::arg(z0);
    }

    void step() {
        dB_ = sq_ * rad_.normal();
        dBp_ = sq_ * perp_.normal();
        double xp = std::max(x_, 0.0);
        double delta = 2.0 * (1.0 - scale_ * khat_ratio(a_ * std::sqrt(xp)));
        double xn, xcn = 0.0;
        if (scheme_ == RadialScheme::reflected_split) {
            // Near 0: sqrt(X) moves as 1-d BM reflected at 0 (exact endpoint via the bridge
            // minimum), plus (delta - 1) times an independent squared increment.
            // Away from 0 (delta <= 1, r >= 4 sqrt(dt)): Euler on r = sqrt(X), driven by dB alone.
            // Either way X <= X', since the Euler endpoint never exceeds r + dB <= R'.
            u_ = bridge_.uniform();
            double m = 0.5 * (dB_ - std::sqrt(dB_ * dB_ - 2.0 * dt_ * std::log(u_)));
            double r = std::sqrt(xp);
            double re = r + dB_ + (delta - 1.0) * dt_ / (2.0 * r);
            if (delta <= 1.0 && r >= 4.0 * sq_ && re > 0.0) {
                xn = re * re;
            } else {
                double R = std::max(r + dB_, dB_ - m);
                xn = std::max(R * R + (delta - 1.0) * dBp_ * dBp_, 0.0);
            }
            if (cmp_) {
                double Rc = std::max(std::sqrt(xc_) + dB_, dB_ - m);
                xcn = Rc * Rc + dBp_ * dBp_;
            }
        } else {
            xn = x_ + delta * dt_ + 2.0 * std::sqrt(xp) * dB_;
            if (cmp_) {
                double xcp = std::max(xc_, 0.0);
                xcn = xc_ + 2.0 * dt_ + 2.0 * std::sqrt(xcp) * dB_;
            }
        }
        if (std::isnan(xn)) throw std::runtime_error("NaN in radial track");
        if (angular_) {
            dWt_ = sq_ * ang_.normal();
            double e_re = std::cos(theta_), e_im = std::sin(theta_);
            dW_ = Complex(e_re, e_im) * Complex(dB_, dWt_);
            theta_ += dWt_ / std::sqrt(std::max(xp, floor_));
            if (xn <= thr_) theta_ = two_pi_ * restart_.uniform();
        }
        x_ = xn;
        xc_ = xcn;
        hit_ = x_ <= thr_;
    }

    double x() const { return x_; }
    double x_cmp() const { return xc_; }
    double theta() const { return theta_; }
    Complex z() const { return std::polar(std::sqrt(std::max(x_, 0.0)), theta_); }
    bool hit() const { return hit_; }
    double dB() const { return dB_; }
    double dB_perp() const { return dBp_; }
    double bridge_u() const { return u_; }
    double dW_theta() const { return dWt_; }
    Complex dW() const { return dW_; }

private:
    static constexpr double two_pi_ = 2.0 * std::numbers::pi;
    double a_, dt_, sq_, thr_, floor_, scale_;
    RadialScheme scheme_;
    bool angular_, cmp_;
    Stream rad_, perp_, bridge_, ang_, restart_;
    double x_ = 0.0, xc_ = 0.0, theta_ = 0.0;
    double dB_ = 0.0, dBp_ = 0.0, u_ = 0.0, dWt_ = 0.0;
    Complex dW_{0.0};
    bool hit_ = false;
};

inline Path path_shell(const ModelParams& p, const SimConfig& c, std::uint64_t index, int n_particles) {
    Path out;
    out.dt = c.dt;
    out.seed = c.seed;
    out.index = index;
    out.beta = p.beta;
    out.zero_threshold = c.threshold();
    out.n_particles = n_particles;
    out.edge = p.edge;
    const int M = c.steps();
    out.times.resize(M + 1);
    for (int n = 0; n <= M; ++n) out.times[n] = n * c.dt;
    out.radial_sq.reserve(M + 1);
    return out;
}

}  // namespace detail

// X_t = |Z_t|^2 with drift 2(1 - khat(sqrt(2 beta X))) and diffusion 2 sqrt(X), plus the
// BESQ(2) comparison track X' driven by the same noise.
inline Path simulate_radial_sq(const ModelParams& p, const SimConfig& c, double x0, std::uint64_t index = 0) {
    p.validate();
    c.validate();
    if (!(x0 >= 0)) throw DomainError("simulate_radial_sq: x0 must be >= 0");
    Path out = detail::path_shell(p, c, index, 0);
    const int M = c.steps();
    detail::RelativeStepper st(p, c, index, Complex(std::sqrt(x0), 0.0), false, true);
    out.radial_sq.push_back(x0);
    out.radial_sq_cmp.reserve(M + 1);
    out.radial_sq_cmp.push_back(x0);
    out.noise.radial.reserve(M);
    out.noise.radial_perp.reserve(M);
    if (c.scheme == RadialScheme::reflected_split) out.noise.bridge_u.reserve(M);
    if (x0 <= c.threshold()) out.zero_hits.push_back(0);
    for (int n = 0; n < M; ++n) {
        st.step();
        out.radial_sq.push_back(st.x());
        out.radial_sq_cmp.push_back(st.x_cmp());
        out.noise.radial.push_back(st.dB());
        out.noise.radial_perp.push_back(st.dB_perp());
        if (c.scheme == RadialScheme::reflected_split) out.noise.bridge_u.push_back(st.bridge_u());
        if (st.hit()) out.zero_hits.push_back(n + 1);
    }
    return out;
}

// single complex particle: radial track plus the angular clock, angle redrawn at zero hits
inline Path simulate_relative_motion(const ModelParams& p, const SimConfig& c, Complex z0, std::uint64_t index = 0) {
    p.validate();
    c.validate();
    Path out = detail::path_shell(p, c, index, 1);
    const int M = c.steps();
    detail::RelativeStepper st(p, c, index, z0, true, false);
    out.rel.reserve(M + 1);
    out.rel.push_back(z0);
    out.radial_sq.push_back(std::norm(z0));
    auto& nz = out.noise;
    nz.radial.reserve(M);
    nz.radial_perp.reserve(M);
    nz.angular.reserve(M);
    nz.rel.reserve(M);
    if (std::norm(z0) <= c.threshold()) out.zero_hits.push_back(0);
    for (int n = 0; n < M; ++n) {
        st.step();
        out.rel.push_back(st.z());
        out.radial_sq.push_back(st.x());
        nz.radial.push_back(st.dB());
        nz.radial_perp.push_back(st.dB_perp());
        if (c.scheme == RadialScheme::reflected_split) nz.bridge_u.push_back(st.bridge_u());
        nz.angular.push_back(st.dW_theta());
        nz.rel.push_back(st.dW());
        if (st.hit()) out.zero_hits.push_back(n + 1);
    }
    out.positions = out.rel;
    return out;
}

inline Complex complex_normal(Stream& s, double sd) {
    double a = s.normal();
    double b = s.normal();
    return Complex(sd * a, sd * b);
}

// N-particle stochastic one-delta motion
inline Path assemble_one_delta(const ModelParams& p, const SimConfig& c, const std::vector<Complex>& z0,
                               std::uint64_t index = 0) {
    p.validate();
    c.validate();
    const int N = p.n_particles;
    if (int(z0.size()) != N)
        throw ConfigError("assemble_one_delta: z0 has " + std::to_string(z0.size()) + " entries, N = " +
                          std::to_string(N));
    const double r2 = std::numbers::sqrt2;
    const int ip = p.edge.hi, i = p.edge.lo;
    const Complex zi0 = (z0[ip - 1] - z0[i - 1]) / r2;
    const Complex zc0 = (z0[ip - 1] + z0[i - 1]) / r2;

    Path rel = simulate_relative_motion(p, c, zi0, index);
    Path out = std::move(rel);
    out.n_particles = N;
    const int M = c.steps();
    const double sq = std::sqrt(c.dt);

    Stream com(c.seed, index, Channel::com);
    out.noise.com.resize(M);
    for (int n = 0; n < M; ++n) out.noise.com[n] = complex_normal(com, sq);
    out.noise.free.assign(N, {});
    for (int k = 1; k <= N; ++k) {
        if (p.edge.contains(k)) continue;
        Stream s(c.seed, index, free_channel(k));
        auto& v = out.noise.free[k - 1];
        v.resize(M);
        for (int n = 0; n < M; ++n) v[n] = complex_normal(s, sq);
    }

    out.positions.assign(std::size_t(M + 1) * N, Complex(0.0));
    Complex wc(0.0);
    std::vector<Complex> wfree(N, Complex(0.0));
    for (int n = 0; n <= M; ++n) {
        if (n > 0) {
            wc += out.noise.com[n - 1];
            for (int k = 1; k <= N; ++k)
                if (!p.edge.contains(k)) wfree[k - 1] += out.noise.free[k - 1][n - 1];
        }
        Complex* row = &out.positions[std::size_t(n) * N];
        const Complex base = zc0 + wc;
        for (int k = 1; k <= N; ++k) {
            if (k == ip)
                row[k - 1] = (base + out.rel[n]) / r2;
            else if (k == i)
                row[k - 1] = (base - out.rel[n]) / r2;
            else
                row[k - 1] = z0[k - 1] + wfree[k - 1];
        }
    }
    return out;
}

// Z^j = (Z^{j'} - Z^j)/sqrt2; for the simulated edge the stored track is returned as is
inline std::vector<Complex> relative_coords(const Path& path, Edge j) {
    if (path.n_particles < 2) throw ConfigError("relative_coords needs an N-particle path");
    j.validate(path.n_particles);
    if (j == path.edge) return path.rel;
    const int M = path.steps();
    std::vector<Complex> out(M + 1);
    for (int n = 0; n <= M; ++n)
        out[n] = (path.position(n, j.hi) - path.position(n, j.lo)) / std::numbers::sqrt2;
    return out;
}

// increments of particle k's driving BM W^k
inline std::vector<Complex> particle_noise(const Path& path, int k) {
    const Noise& nz = path.noise;
    if (nz.rel.empty() || nz.com.empty()) throw ConfigError("path carries no Cartesian noise");
    if (!path.edge.contains(k)) return nz.free.at(k - 1);
    const int M = path.steps();
    std::vector<Complex> out(M);
    const double s = k == path.edge.hi ? 1.0 : -1.0;
    for (int n = 0; n < M; ++n) out[n] = (nz.com[n] + s * nz.rel[n]) / std::numbers::sqrt2;
    return out;
}

// increments of W^j = U^j + i V^j
inline std::vector<Complex> edge_noise(const Path& path, Edge j) {
    j.validate(path.n_particles);
    if (j == path.edge) return path.noise.rel;
    auto a = particle_noise(path, j.hi), b = particle_noise(path, j.lo);
    for (std::size_t n = 0; n < a.size(); ++n) a[n] = (a[n] - b[n]) / std::numbers::sqrt2;
    return a;
}

struct Covariation {
    double uu = 0.0;            // realized <U^j, U^k>_T
    double vv = 0.0;            // realized <V^j, V^k>_T
    double uv = 0.0;            // realized <U^j, V^k>_T
    double bb = 0.0;            // realized <B^j, B^k>_T
    double cos_integral = 0.0;  // int_0^T cos(arg Z^j - arg Z^k) ds
    int sigma_dot = 0;          // sigma(j) . sigma(k)
};

inline Covariation realized_covariation(const Path& path, Edge j, Edge k) {
    auto wj = edge_noise(path, j), wk = edge_noise(path, k);
    auto zj = relative_coords(path, j), zk = relative_coords(path, k);
    Covariation c;
    c.sigma_dot = sigma_dot(j, k);
    const int M = path.steps();
    for (int n = 0; n < M; ++n) {
        c.uu += wj[n].real() * wk[n].real();
        c.vv += wj[n].imag() * wk[n].imag();
        c.uv += wj[n].real() * wk[n].imag();
        double aj = std::abs(zj[n]), ak = std::abs(zk[n]);
        if (aj > 0 && ak > 0) {
            // dB^j = <Z^j, dW^j>/|Z^j|
            double bj = (zj[n].real() * wj[n].real() + zj[n].imag() * wj[n].imag()) / aj;
            double bk = (zk[n].real() * wk[n].real() + zk[n].imag() * wk[n].imag()) / ak;
            c.bb += bj * bk;
            c.cos_integral += (zj[n].real() * zk[n].real() + zj[n].imag() * zk[n].imag()) / (aj * ak) * path.dt;
        } else {
            c.cos_integral += path.dt;  // arg undefined on a null set; cos 0 convention
        }
    }
    return c;
}

// |Z^j_T|^2 - |Z^j_0|^2 - int [2 - sigma(j).sigma(i) Re(Z^j/Z^i) khat] ds - int 2 <Z^j, dW^j>, over T
inline double ito_residual_radial_sq(const Path& path, Edge j) {
    auto w = edge_noise(path, j);
    auto z = relative_coords(path, j);
    const auto& zi = path.rel;
    const double a = std::sqrt(2.0 * path.beta);
    const double sd = sigma_dot(j, path.edge);
    const int M = path.steps();
    double acc = std::norm(z[M]) - std::norm(z[0]);
    for (int n = 0; n < M; ++n) {
        double drift = 2.0;
        double ri = std::abs(zi[n]);
        if (sd != 0 && ri > 0) drift -= sd * (z[n] / zi[n]).real() * khat_ratio(a * ri);
        acc -= drift * path.dt;
        acc -= 2.0 * (z[n].real() * w[n].real() + z[n].imag() * w[n].imag());
    }
    return acc / path.t_end();
}

// one explicit step of the general skew-product SDE
inline Complex skew_assemble_step(const SkewProductConfig& cfg, double rho, double theta, double dW_rho,
                                  double dW_theta, double dA_rho, double dt) {
    if (!(rho > 0)) throw DomainError("skew_assemble_step: rho must be > 0");
    const double s = std::sqrt(1.0 - 2.0 * cfg.alpha_theta);
    const double c = std::cos(theta), sn = std::sin(theta);
    const Complex e(c, sn);
    const Complex zbar = rho * std::conj(e);
    Complex inc = ((1.0 - 2.0 * cfg.alpha_rho) - (1.0 - 2.0 * cfg.alpha_theta)) / (2.0 * zbar) * dt + e * dA_rho;
    // the Brownian pair W_Z = U + iV and its direction-dependent weights
    const double nu = std::sqrt(c * c + s * s * sn * sn), nv = std::sqrt(sn * sn + s * s * c * c);
    const double dU = (c * dW_rho - s * sn * dW_theta) / nu;
    const double dV = (sn * dW_rho + s * c * dW_theta) / nv;
    inc += Complex(nu * dU, nv * dV);
    return inc;
}

struct SkewNoise {
    std::vector<double> w_rho;    // cumulative, M + 1 entries
    std::vector<double> w_theta;  // cumulative
    std::vector<double> d_rho;    // per-step increments, 0 on skipped steps
    std::vector<double> d_theta;
    std::vector<char> skipped;    // step starts at a flagged zero hit
};

// project the Cartesian increments onto the radial and angular directions
inline SkewNoise decompose_skew(const Path& path) {
    if (path.noise.rel.empty()) throw ConfigError("decompose_skew: path carries no Cartesian noise");
    const auto& z = path.rel;
    const int M = path.steps();
    SkewNoise out;
    out.w_rho.assign(M + 1, 0.0);
    out.w_theta.assign(M + 1, 0.0);
    out.d_rho.assign(M, 0.0);
    out.d_theta.assign(M, 0.0);
    out.skipped.assign(M, 0);
    for (int n = 0; n < M; ++n) {
        double r = std::abs(z[n]);
        if (path.is_zero_hit(n) || r == 0.0) {
            out.skipped[n] = 1;
        } else {
            Complex dw = path.noise.rel[n];
            out.d_rho[n] = (z[n].real() * dw.real() + z[n].imag() * dw.imag()) / r;
            out.d_theta[n] = (-z[n].imag() * dw.real() + z[n].real() * dw.imag()) / r;
        }
        out.w_rho[n + 1] = out.w_rho[n] + out.d_rho[n];
        out.w_theta[n + 1] = out.w_theta[n] + out.d_theta[n];
    }
    return out;
}

// Rebuild the track from decomposed noise by skew_assemble_step (alpha = 0, BES(0,beta-down)
// finite-variation part). Inside |z| < anchor_radius the coefficients are too singular for an
// explicit step to track the angle, so the rebuild restarts from the stored point there, and
// after every flagged zero hit.
inline std::vector<Complex> reassemble_skew(const Path& path, const SkewNoise& sk, double anchor_radius = 0.5) {
    const int M = path.steps();
    const double a = std::sqrt(2.0 * path.beta);
    SkewProductConfig cfg;
    std::vector<Complex> out(M + 1);
    out[0] = path.rel[0];
    for (int n = 0; n < M; ++n) {
        Complex zn = out[n];
        double rho = std::abs(zn);
        if (sk.skipped[n] || rho == 0.0 || std::abs(path.rel[n]) < anchor_radius) {
            out[n + 1] = path.rel[n + 1];
            continue;
        }
        double dA = -khat_ratio(a * rho) / rho * path.dt;
        out[n + 1] = zn + skew_assemble_step(cfg, rho, std::arg(zn), sk.d_rho[n], sk.d_theta[n], dA, path.dt);
    }
    return out;
}

// batch of independent paths; f(index) -> T, results in index order
template <class T, class F>
std::vector<T> map_paths(long n, int workers, F&& f) {
    std::vector<T> out(n);
    parallel_for(n, resolve_workers(workers), [&](long i) { out[i] = f(std::uint64_t(i)); });
    return out;
}

}  // namespace dbose
