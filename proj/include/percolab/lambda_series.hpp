#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "percolab/ise.hpp"

namespace perc {

// Generating function  Lambda_z(k) = 1 / (k^2 + 2^{3/2} sqrt(1-z)), with the
// branch of sqrt(1-z) positive on z in (-inf, 1); power series coefficients
// lambda_n(k) computed by a reciprocal-series recursion and, independently,
// by contour integration on a circle of radius r < 1.

enum class SeriesMethod { Recursion, Contour };

struct SeriesCoefficients {
    double k = 0.0;
    std::vector<double> coeffs;  // lambda_0 .. lambda_N
    SeriesMethod method = SeriesMethod::Recursion;
};

inline std::complex<double> lambda_at(std::complex<double> z, double k) {
    if (std::abs(z) >= 1.0) throw std::invalid_argument("lambda_at: requires |z| < 1");
    const std::complex<double> root = std::sqrt(std::complex<double>(1.0, 0.0) - z);
    return 1.0 / (k * k + std::pow(2.0, 1.5) * root);
}

// Coefficients s_m of sqrt(1-z) = sum_m s_m z^m: s_0 = 1,
// s_m = s_{m-1} (m - 3/2) / m.
inline std::vector<long double> sqrt_series_coeffs(std::size_t n) {
    std::vector<long double> s(n + 1);
    s[0] = 1.0L;
    for (std::size_t m = 1; m <= n; ++m)
        s[m] = s[m - 1] * (static_cast<long double>(m) - 1.5L) / static_cast<long double>(m);
    return s;
}

// lambda_0 = 1/(k^2 + 2^{3/2});
// lambda_n = -lambda_0 2^{3/2} sum_{m=1}^{n} s_m lambda_{n-m}.
// Accumulated in long double; all tail terms have one sign, so the sum is
// well conditioned.
inline SeriesCoefficients coefficients_by_recursion(double k, std::size_t n_max) {
    const long double two32 = std::pow(2.0L, 1.5L);
    const long double lam0 = 1.0L / (static_cast<long double>(k) * k + two32);
    const auto s = sqrt_series_coeffs(n_max);
    std::vector<long double> lam(n_max + 1);
    lam[0] = lam0;
    for (std::size_t n = 1; n <= n_max; ++n) {
        long double acc = 0.0L;
        for (std::size_t m = 1; m <= n; ++m) acc += s[m] * lam[n - m];
        lam[n] = -lam0 * two32 * acc;
    }
    SeriesCoefficients out;
    out.k = k;
    out.method = SeriesMethod::Recursion;
    out.coeffs.assign(lam.begin(), lam.end());
    return out;
}

namespace detail {

// The trapezoidal Cauchy sum divides by r^n, which amplifies rounding by
// r^{-n}; the contour route therefore runs in 200-digit arithmetic so it
// stays an honest independent oracle down to r = 0.3, n = 200.
using MpReal = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<200>>;

struct MpComplex {
    MpReal re, im;
};

inline MpComplex mp_mul(const MpComplex& a, const MpComplex& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

// principal sqrt (re >= 0)
inline MpComplex mp_sqrt(const MpComplex& w) {
    using boost::multiprecision::sqrt;
    const MpReal mag = sqrt(w.re * w.re + w.im * w.im);
    MpReal re = sqrt((mag + w.re) / 2);
    MpReal im = sqrt((mag - w.re) / 2);
    if (w.im < 0) im = -im;
    return {re, im};
}

inline MpComplex mp_inv(const MpComplex& w) {
    const MpReal d = w.re * w.re + w.im * w.im;
    return {w.re / d, -w.im / d};
}

}  // namespace detail

// lambda_n = (1/2 pi i) oint Lambda_z z^{-n-1} dz on |z| = r, discretized by
// the M-point trapezoidal rule (spectrally accurate; aliasing error r^M).
inline SeriesCoefficients coefficients_by_contour(double k, std::size_t n_max, double r,
                                                  std::size_t m_points) {
    if (!(r > 0.0 && r < 1.0))
        throw std::invalid_argument("coefficients_by_contour: radius must be in (0,1)");
    if (m_points < 4 * (n_max + 1))
        throw std::invalid_argument("coefficients_by_contour: need M >= 4N points");
    using detail::MpComplex;
    using detail::MpReal;
    const MpReal rr(r);
    const MpReal kk = MpReal(k) * MpReal(k);
    const MpReal two32 = sqrt(MpReal(8));
    const MpReal pi = boost::math::constants::pi<MpReal>();

    // sample Lambda on the circle and the unit phase
    std::vector<MpComplex> lam_vals(m_points), phase(m_points);
    for (std::size_t j = 0; j < m_points; ++j) {
        const MpReal theta = 2 * pi * MpReal(j) / MpReal(static_cast<unsigned>(m_points));
        const MpReal c = cos(theta), s = sin(theta);
        phase[j] = {c, -s};  // e^{-i theta}
        MpComplex z{rr * c, rr * s};
        MpComplex root = detail::mp_sqrt({1 - z.re, -z.im});
        lam_vals[j] = detail::mp_inv({kk + two32 * root.re, two32 * root.im});
    }
    SeriesCoefficients out;
    out.k = k;
    out.method = SeriesMethod::Contour;
    out.coeffs.resize(n_max + 1);
    // running factors e^{-i n theta_j}, coefficient = sum_j Lambda_j e^{-i n theta_j} / (M r^n)
    std::vector<MpComplex> rot(m_points, MpComplex{MpReal(1), MpReal(0)});
    MpReal rpow(1);
    const double imag_budget = 1e-10;
    for (std::size_t n = 0; n <= n_max; ++n) {
        MpReal sum_re(0), sum_im(0);
        for (std::size_t j = 0; j < m_points; ++j) {
            const MpComplex t = detail::mp_mul(lam_vals[j], rot[j]);
            sum_re += t.re;
            sum_im += t.im;
        }
        const MpReal denom = MpReal(static_cast<unsigned>(m_points)) * rpow;
        const double re = static_cast<double>(sum_re / denom);
        const double im = static_cast<double>(sum_im / denom);
        if (std::abs(im) > imag_budget)
            throw std::runtime_error("coefficients_by_contour: imaginary residue " +
                                     std::to_string(im) + " at n=" + std::to_string(n));
        out.coeffs[n] = re;
        rpow *= rr;
        for (std::size_t j = 0; j < m_points; ++j) rot[j] = detail::mp_mul(rot[j], phase[j]);
    }
    return out;
}

// Partial sum of the series at z (for convergence checks).
inline double series_partial_sum(const SeriesCoefficients& s, double z) {
    long double acc = 0.0L, zp = 1.0L;
    for (double c : s.coeffs) {
        acc += static_cast<long double>(c) * zp;
        zp *= z;
    }
    return static_cast<double>(acc);
}

// Link to ISE:  lambda_n(k n^{-1/4}) = A^(2)-hat(k) / sqrt(8 pi n) + O(n^{-3/2}).
struct CnasyRow {
    std::size_t n;
    double scaled;  // sqrt(8 pi n) lambda_n(k n^{-1/4})
    double ise;     // A^(2)-hat(k)
    double gap;     // |scaled - ise|
};

inline std::vector<CnasyRow> verify_cnasy(double k, const std::vector<std::size_t>& ns,
                                          const IseEvalConfig& cfg = {}) {
    const double ise = ise_two_point_hat(k, cfg);
    std::vector<CnasyRow> rows;
    rows.reserve(ns.size());
    for (std::size_t n : ns) {
        if (n < 1) throw std::invalid_argument("verify_cnasy: n must be >= 1");
        const double kn = k * std::pow(static_cast<double>(n), -0.25);
        const auto series = coefficients_by_recursion(kn, n);
        const double scaled = std::sqrt(8.0 * M_PI * static_cast<double>(n)) * series.coeffs[n];
        rows.push_back({n, scaled, ise, std::abs(scaled - ise)});
    }
    return rows;
}

}  // namespace perc
