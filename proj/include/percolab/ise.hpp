#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace perc {

struct IseEvalConfig {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    int max_subdivisions = 15;  // adaptive bisection depth
};

namespace detail {

// Adaptive Gauss-Kronrod on a finite interval; throws if the error estimate
// misses the requested tolerance.
template <typename F>
double integrate_finite(F&& f, double a, double b, const IseEvalConfig& cfg) {
    double err = 0.0, l1 = 0.0;
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    double v = GK::integrate(f, a, b, cfg.max_subdivisions, cfg.rel_tol, &err, &l1);
    if (err > cfg.abs_tol + cfg.rel_tol * std::abs(v) && err > 1e3 * cfg.abs_tol)
        throw std::runtime_error("quadrature tolerance not reached");
    return v;
}

// [0, inf) via t = u/(1-u), dt = du/(1-u)^2; refine near u=1 separately so
// the fast Gaussian tail does not hide structure at moderate t.
template <typename F>
double integrate_semi_infinite(F&& f, const IseEvalConfig& cfg) {
    auto g = [&](double u) {
        const double w = 1.0 - u;
        const double t = u / w;
        return f(t) / (w * w);
    };
    return integrate_finite(g, 0.0, 0.5, cfg) + integrate_finite(g, 0.5, 1.0, cfg);
}

// Second divided difference of exp at three real points: the closed form of
// the simplex integral behind the three-point density. Symmetric by
// construction (points are sorted), stable via a centered series when the
// points cluster.
inline double exp_divided_diff2(double a, double b, double c) {
    double x[3] = {a, b, c};
    std::sort(x, x + 3);
    const double mu = (x[0] + x[1] + x[2]) / 3.0;
    const double y0 = x[0] - mu, y1 = x[1] - mu, y2 = x[2] - mu;
    const double spread = x[2] - x[0];
    if (spread < 0.5) {
        // dd2 exp at mu + y = e^mu * sum_m h_m(y) / (m+2)!  (h_m complete
        // homogeneous symmetric; y sums to zero so convergence is fast)
        double sum = 0.0;
        double factorial = 2.0;  // (m+2)! running value
        int small_terms = 0;
        for (int m = 0;; ++m) {
            // h_m(y0,y1,y2) = sum_{i+j+k=m} y0^i y1^j y2^k
            double hm = 0.0;
            double p0 = 1.0;
            for (int i = 0; i <= m; ++i) {
                double p1 = 1.0, inner = 0.0;
                for (int j = 0; j <= m - i; ++j) {
                    inner += p1 * std::pow(y2, m - i - j);
                    p1 *= y1;
                }
                hm += p0 * inner;
                p0 *= y0;
            }
            const double term = hm / factorial;
            sum += term;
            // h_1 vanishes identically (the y sum to zero), so insist on two
            // consecutive negligible terms before declaring convergence
            small_terms = std::abs(term) < 1e-18 * std::abs(sum) + 1e-300 ? small_terms + 1 : 0;
            if (small_terms >= 2 || m > 60) break;
            factorial *= static_cast<double>(m + 3);
        }
        return std::exp(mu) * sum;
    }
    auto dd1 = [](double u, double v) {
        // (e^u - e^v)/(u - v), stable for u near v; the centered sinh form
        // overflows once |u - v| is large even when both exponentials
        // underflow, so fall back to the direct quotient there
        const double h = 0.5 * (u - v);
        if (std::abs(h) > 30.0) return (std::exp(u) - std::exp(v)) / (u - v);
        const double m = 0.5 * (u + v);
        const double s = std::abs(h) < 1e-8 ? 1.0 + h * h / 6.0 : std::sinh(h) / h;
        return std::exp(m) * s;
    };
    return (dd1(x[1], x[2]) - dd1(x[0], x[1])) / (x[2] - x[0]);
}

inline double sq_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

}  // namespace detail

// Fourier transform of the ISE mean mass density:
//   int_0^inf t exp(-t^2/2) exp(-k^2 t / 2) dt,  a function of |k|^2 only.
inline double ise_two_point_hat(double k, const IseEvalConfig& cfg = {}) {
    if (!std::isfinite(k)) throw std::invalid_argument("ise_two_point_hat: k not finite");
    const double c = 0.5 * k * k;
    return detail::integrate_semi_infinite(
        [c](double t) { return t * std::exp(-0.5 * t * t - c * t); }, cfg);
}

// Closed form of the same integral (complete the square):
//   1 - c e^{c^2/2} sqrt(pi/2) erfc(c/sqrt(2)),  c = k^2/2.
// The exp * erfc product is evaluated via erfcx to stay finite at large k.
inline double ise_two_point_hat_closed(double k) {
    const double c = 0.5 * k * k;
    // erfc(c/sqrt(2)) * e^{c^2/2} computed as a scaled product so it stays
    // finite at large k.
    const double arg = c / std::sqrt(2.0);
    double scaled;  // e^{arg^2} erfc(arg)
    if (arg < 25.0) {
        scaled = std::exp(arg * arg) * std::erfc(arg);
    } else {
        // asymptotic erfcx(x) ~ 1/(x sqrt(pi)) (1 - 1/(2x^2) + 3/(4x^4))
        const double x2 = arg * arg;
        scaled = (1.0 - 0.5 / x2 + 0.75 / (x2 * x2)) / (arg * std::sqrt(M_PI));
    }
    return 1.0 - c * std::sqrt(M_PI / 2.0) * scaled;
}

// Position-space ISE mean mass density in dimension d:
//   int_0^inf t exp(-t^2/2) (2 pi t)^{-d/2} exp(-|x|^2 / 2t) dt.
inline double ise_two_point_x(double r, int d, const IseEvalConfig& cfg = {}) {
    if (d < 1) throw std::invalid_argument("ise_two_point_x: d must be >= 1");
    if (d >= 2 && r == 0.0)
        throw std::invalid_argument("ise_two_point_x: integrand singular at x=0 for d>=2");
    const double r2 = r * r;
    const double hd = 0.5 * d;
    // t = v^2 removes the t^{1-d/2} endpoint cusp at t=0 (d odd / small r)
    return detail::integrate_semi_infinite(
        [r2, hd](double v) {
            const double t = v * v;
            if (t <= 0.0) return 0.0;
            const double log_gauss = -hd * std::log(2.0 * M_PI * t) - 0.5 * r2 / t;
            return 2.0 * v * t * std::exp(-0.5 * t * t + log_gauss);
        },
        cfg);
}

inline double ise_two_point_x(const std::vector<double>& x, const IseEvalConfig& cfg = {}) {
    return ise_two_point_x(std::sqrt(detail::sq_norm(x)), static_cast<int>(x.size()), cfg);
}

// Fourier transform of the ISE three-point function, branch point location
// unfixed:
//   int int int (t1+t2+t3) e^{-(t1+t2+t3)^2/2}
//               e^{-[(k+l)^2 t1 + k^2 t2 + l^2 t3]/2} dt.
// Reduced before quadrature: with s = t1+t2+t3 the simplex section integrates
// to s^2 times the second divided difference of exp at {-a s, -b s, -c s},
// a=(k+l)^2/2, b=k^2/2, c=l^2/2, leaving a single semi-infinite integral.
inline double ise_three_point_hat_sq(double kl2, double k2, double l2,
                                     const IseEvalConfig& cfg = {}) {
    const double a = 0.5 * kl2, b = 0.5 * k2, c = 0.5 * l2;
    return detail::integrate_semi_infinite(
        [a, b, c](double s) {
            return s * s * s * std::exp(-0.5 * s * s) *
                   detail::exp_divided_diff2(-a * s, -b * s, -c * s);
        },
        cfg);
}

inline double ise_three_point_hat(const std::vector<double>& k, const std::vector<double>& l,
                                  const IseEvalConfig& cfg = {}) {
    if (k.size() != l.size())
        throw std::invalid_argument("ise_three_point_hat: k and l dimensions differ");
    std::vector<double> kl(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) kl[i] = k[i] + l[i];
    return ise_three_point_hat_sq(detail::sq_norm(kl), detail::sq_norm(k),
                                  detail::sq_norm(l), cfg);
}

// Scalar-magnitude convenience (k and l along orthogonal axes is not implied;
// callers pass the real squared norms).
inline double ise_three_point_hat(double kmag, double lmag, const IseEvalConfig& cfg = {}) {
    const double k2 = kmag * kmag, l2 = lmag * lmag;
    const double kl2 = (kmag + lmag) * (kmag + lmag);  // collinear k, l
    return ise_three_point_hat_sq(kl2, k2, l2, cfg);
}

}  // namespace perc
