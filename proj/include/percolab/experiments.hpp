#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "percolab/estimators.hpp"
#include "percolab/ise.hpp"
#include "percolab/lambda_series.hpp"
#include "percolab/sampler.hpp"

namespace perc {

// ---------------------------------------------------------------------------
// critical point estimation
// ---------------------------------------------------------------------------

struct PcProbe {
    double p;
    double statistic;  // log-log curvature of the tail P(|C| >= 2^j)
};

struct CriticalPointEstimate {
    double p_hat = 0.0;
    double lo = 0.0, hi = 1.0;
    std::vector<PcProbe> history;
};

struct PcOptions {
    std::uint64_t samples_per_probe = 100000;
    std::size_t size_cap = 4096;
    int j_min = 3;
    int j_max = 11;  // tail window [2^j_min, 2^j_max]
    double target_width = 1e-3;
    int max_probes = 40;
    double p_lo = 0.0, p_hi = 1.0;
    std::uint64_t seed = 1;
    unsigned workers = 1;
};

namespace detail {

// Quadratic coefficient of log2 P-hat(|C| >= 2^j) against j over the window.
// Negative (concave) below p_c, positive (tail flattens toward the infinite-
// cluster atom) above, near zero at p_c where the tail is a power law.
inline double tail_curvature(const ModelSpec& m, const PcOptions& opt, std::uint64_t seed) {
    const int jn = opt.j_max - opt.j_min + 1;
    std::vector<double> ge(static_cast<std::size_t>(jn), 0.0);
    using Local = std::vector<double>;
    sample_batch_chunked<Local>(
        m, seed, opt.size_cap, opt.samples_per_probe, opt.workers, 2048,
        [jn](std::uint64_t) { return Local(static_cast<std::size_t>(jn), 0.0); },
        [&](Local& loc, const Cluster& c, std::uint64_t, RngStream&) {
            const double n = c.truncated ? static_cast<double>(opt.size_cap) + 1.0
                                         : static_cast<double>(c.size());
            for (int j = opt.j_min; j <= opt.j_max; ++j)
                if (n >= std::ldexp(1.0, j)) loc[static_cast<std::size_t>(j - opt.j_min)] += 1.0;
        },
        [&](Local& loc, std::uint64_t) {
            for (int i = 0; i < jn; ++i) ge[static_cast<std::size_t>(i)] += loc[static_cast<std::size_t>(i)];
        });
    // least-squares quadratic fit of y_j = log2(count_j) on j, restricted to
    // occupied bins; a tail too thin to fit means we are deep subcritical
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, sy = 0, sxy = 0, sx2y = 0;
    int used = 0;
    for (int i = 0; i < jn; ++i) {
        const double cnt = ge[static_cast<std::size_t>(i)];
        if (cnt < 30.0) continue;
        ++used;
        const double x = static_cast<double>(i);
        const double y = std::log2(cnt / static_cast<double>(opt.samples_per_probe));
        const double x2 = x * x;
        s0 += 1;
        s1 += x;
        s2 += x2;
        s3 += x2 * x;
        s4 += x2 * x2;
        sy += y;
        sxy += x * y;
        sx2y += x2 * y;
    }
    if (used < 5) return -1.0;  // tail collapsed: below p_c
    // solve the 3x3 normal equations for the quadratic coefficient
    const double a[3][4] = {{s0, s1, s2, sy}, {s1, s2, s3, sxy}, {s2, s3, s4, sx2y}};
    double mtx[3][4];
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) mtx[r][c] = a[r][c];
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(mtx[r][col]) > std::abs(mtx[piv][col])) piv = r;
        for (int c = 0; c < 4; ++c) std::swap(mtx[col][c], mtx[piv][c]);
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = mtx[r][col] / mtx[col][col];
            for (int c = col; c < 4; ++c) mtx[r][c] -= f * mtx[col][c];
        }
    }
    return mtx[2][3] / mtx[2][2];
}

}  // namespace detail

// Bisection on the tail-curvature statistic; the statistic is increasing in
// p, so the sign drives the bracket. Deterministic given (seed, options).
inline CriticalPointEstimate estimate_pc(ModelSpec m, const PcOptions& opt) {
    CriticalPointEstimate est;
    double lo = opt.p_lo, hi = opt.p_hi;
    for (int probe = 0; probe < opt.max_probes && hi - lo > opt.target_width; ++probe) {
        const double p = 0.5 * (lo + hi);
        m.bond_density = p;
        const double stat =
            detail::tail_curvature(m, opt, RngStream::mix(opt.seed ^ (0xabcdull + probe)));
        est.history.push_back({p, stat});
        if (stat < 0.0)
            lo = p;
        else
            hi = p;
    }
    est.lo = lo;
    est.hi = hi;
    est.p_hat = 0.5 * (lo + hi);
    return est;
}

// ---------------------------------------------------------------------------
// constants and exponents from a finalized critical run
// ---------------------------------------------------------------------------

struct ScalingFit {
    double c_hat = 0.0;
    double d_hat = 0.0;
    double objective = 0.0;
    std::vector<std::pair<double, double>> eps1;  // (z, residual at k=0)
    std::vector<std::pair<double, double>> eps2;  // (k, residual at largest z)
};

struct ExponentEstimate {
    std::string name;
    double value = 0.0;
    double se = 0.0;
    int window_lo_j = 0, window_hi_j = 0;
};

namespace detail {

inline double golden_min(const std::function<double(double)>& f, double a, double b,
                         int iters = 80) {
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters; ++i) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

inline double zeta_partial_32(std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t n = lo; n < hi; ++n) s += std::pow(static_cast<double>(n), -1.5);
    return s;
}

}  // namespace detail

// C-hat from P(|C|=n) ~ C / (sqrt(8 pi) n^{3/2}) over dyadic bins: the bin
// mass divided by the exact partial zeta sum is an unbiased C estimate under
// the power law. D-hat collapses q-hat_n(c n^{-1/4}) onto A^(2)-hat(c D).
inline ScalingFit fit_constants(const FinalizedEstimates& est, int bin_lo, int bin_hi,
                                const IseEvalConfig& ise_cfg = {}) {
    const auto& cfg = est.config();
    if (cfg.n_dyadic() == 0) throw std::invalid_argument("fit_constants: no dyadic bins");
    ScalingFit fit;
    double csum = 0.0;
    int cn = 0;
    for (int b = bin_lo; b <= bin_hi; ++b) {
        const std::size_t lo = std::size_t{1} << static_cast<unsigned>(cfg.dyadic_min_j + b);
        const double mass = est.p_hat_dyadic(b).value;
        if (mass <= 0.0) continue;
        csum += mass * std::sqrt(8.0 * M_PI) / detail::zeta_partial_32(lo, 2 * lo);
        ++cn;
    }
    if (cn == 0) throw std::runtime_error("fit_constants: requested bins are empty");
    fit.c_hat = csum / cn;

    if (!cfg.scaled_c.empty()) {
        // tabulate A^(2)-hat on demand
        std::vector<std::pair<double, double>> cache;
        auto ise = [&](double k) {
            for (auto& e : cache)
                if (e.first == k) return e.second;
            const double v = ise_two_point_hat_closed(k);
            cache.emplace_back(k, v);
            return v;
        };
        auto objective = [&](double D) {
            double obj = 0.0;
            for (int b = bin_lo; b <= bin_hi; ++b) {
                if (est.bin_count_dyadic(b) <= 0.0) continue;
                for (std::size_t s = 0; s < cfg.scaled_c.size(); ++s) {
                    const double q = est.q_hat_scaled(b, static_cast<int>(s)).value.real();
                    const double r = q - ise(cfg.scaled_c[s] * D);
                    obj += r * r;
                }
            }
            return obj;
        };
        fit.d_hat = detail::golden_min(objective, 1e-3, 8.0);
        fit.objective = objective(fit.d_hat);
    }
    return fit;
}

// Slope of log P-hat(|C|=n) against log n over dyadic bins; delta = 2 means
// slope -3/2. Bin mass is converted to a density at the geometric bin centre.
inline ExponentEstimate check_delta(const FinalizedEstimates& est, int bin_lo, int bin_hi) {
    const auto& cfg = est.config();
    if (bin_hi - bin_lo + 1 < 3)
        throw std::invalid_argument("check_delta: fit window must span >= 3 dyadic bins");
    std::vector<double> xs, ys, ws;
    for (int b = bin_lo; b <= bin_hi; ++b) {
        const double lo = std::ldexp(1.0, cfg.dyadic_min_j + b);
        const double cnt = est.bin_count_dyadic(b);
        const auto mass = est.p_hat_dyadic(b);
        if (cnt < 8.0) throw std::runtime_error("check_delta: insufficient bin occupancy");
        xs.push_back(std::log(lo * std::sqrt(2.0)));
        ys.push_back(std::log(mass.value / lo));  // width = lo
        ws.push_back(cnt);  // ~ 1/var(log mass)
    }
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sw += ws[i];
        swx += ws[i] * xs[i];
        swy += ws[i] * ys[i];
        swxx += ws[i] * xs[i] * xs[i];
        swxy += ws[i] * xs[i] * ys[i];
    }
    const double denom = sw * swxx - swx * swx;
    ExponentEstimate e;
    e.name = "delta";
    e.value = (sw * swxy - swx * swy) / denom;
    e.se = std::sqrt(sw / denom);
    e.window_lo_j = cfg.dyadic_min_j + bin_lo;
    e.window_hi_j = cfg.dyadic_min_j + bin_hi;
    return e;
}

// ---------------------------------------------------------------------------
// Theorem 3 shape check: tau_z-hat(k) vs C Lambda_z(D k)
// ---------------------------------------------------------------------------

struct Theorem3Config {
    ModelSpec model;            // with bond_density set to the estimated p_c
    std::vector<double> z_grid;  // ascending
    std::vector<double> k_mags;  // descending (halving), axis wave numbers, may start with 0
    std::uint64_t samples = 200000;
    std::size_t size_cap = 8192;
    std::uint64_t seed = 7;
    unsigned workers = 1;
    // z at which the eps2(k) residual row is reported; values beyond this one
    // still enter the fit (they anchor it deeper in the asymptotic regime).
    // Negative: use the largest z in the grid.
    double eps2_z = -1.0;
};

struct Theorem3Result {
    ScalingFit fit;
    // tau[z][k] estimates with errors, for reporting
    std::vector<std::vector<ComplexEstimate>> tau;
};

// Fit of tau tables against C Lambda_z(D k). The two parameters decouple:
//   D from the k-profiles tau(z,k)/tau(z,0) vs Lambda_z(Dk)/Lambda_z(0) --
//     the O(sqrt(1-z)) amplitude correction cancels in the ratio, so D is
//     not dragged around trying to absorb it;
//   C by extrapolating the small-k column: tau/Lambda tends to C with an
//     O(sqrt(1-z)) correction, so a linear fit in sqrt(1-z) takes its
//     intercept as the limit, without the mid-grid bias a joint
//     least-squares C would pick up.
// Residual tables follow the same split: eps1(z) is the absolute residual
// of the smallest-|k| column against C Lambda (the amplitude error), and
// eps2(k) is the ratio residual of the row at z nearest eps2_z (largest z
// when eps2_z < 0) -- the pure k-shape error with the shared amplitude
// correction divided out.
inline ScalingFit fit_lambda_shape(const std::vector<double>& z_grid,
                                   const std::vector<double>& k_mags,
                                   const std::vector<std::vector<double>>& tau,
                                   double eps2_z = -1.0) {
    if (z_grid.size() < 2 || k_mags.empty())
        throw std::invalid_argument("fit_lambda_shape: need >= 2 z values and >= 1 k");
    ScalingFit fit;
    std::size_t k0 = 0;
    for (std::size_t ki = 1; ki < k_mags.size(); ++ki)
        if (std::abs(k_mags[ki]) < std::abs(k_mags[k0])) k0 = ki;

    auto lam = [](double z, double karg) {
        return std::abs(lambda_at(std::complex<double>(z, 0.0), karg));
    };
    auto ratio_residual = [&](double D, std::size_t zi, std::size_t ki) {
        const double g = tau[zi][ki] / tau[zi][k0];
        const double gm = lam(z_grid[zi], D * k_mags[ki]) / lam(z_grid[zi], D * k_mags[k0]);
        return g / gm - 1.0;
    };
    auto objective = [&](double D) {
        double obj = 0.0;
        for (std::size_t zi = 0; zi < z_grid.size(); ++zi)
            for (std::size_t ki = 0; ki < k_mags.size(); ++ki) {
                if (ki == k0) continue;
                const double r = ratio_residual(D, zi, ki);
                obj += r * r;
            }
        return obj;
    };
    fit.d_hat = detail::golden_min(objective, 1e-2, 50.0);
    fit.objective = objective(fit.d_hat);
    {
        double s0 = 0, s1 = 0, s2 = 0, sy = 0, sxy = 0;
        for (std::size_t zi = 0; zi < z_grid.size(); ++zi) {
            const double x = std::sqrt(1.0 - z_grid[zi]);
            const double y = tau[zi][k0] / lam(z_grid[zi], fit.d_hat * k_mags[k0]);
            s0 += 1;
            s1 += x;
            s2 += x * x;
            sy += y;
            sxy += x * y;
        }
        fit.c_hat = (s2 * sy - s1 * sxy) / (s0 * s2 - s1 * s1);
    }

    std::size_t zrep = z_grid.size() - 1;
    if (eps2_z >= 0.0)
        for (std::size_t zi = 0; zi < z_grid.size(); ++zi)
            if (std::abs(z_grid[zi] - eps2_z) < std::abs(z_grid[zrep] - eps2_z)) zrep = zi;
    for (std::size_t zi = 0; zi < z_grid.size(); ++zi) {
        const double model = fit.c_hat * lam(z_grid[zi], fit.d_hat * k_mags[k0]);
        fit.eps1.emplace_back(z_grid[zi], std::abs(tau[zi][k0] / model - 1.0));
    }
    for (std::size_t ki = 0; ki < k_mags.size(); ++ki)
        fit.eps2.emplace_back(k_mags[ki],
                              ki == k0 ? 0.0 : std::abs(ratio_residual(fit.d_hat, zrep, ki)));
    return fit;
}

inline Theorem3Result check_theorem3_shape(const Theorem3Config& cfg) {
    if (cfg.z_grid.empty() || cfg.k_mags.empty())
        throw std::invalid_argument("check_theorem3_shape: empty grid");
    const int d = cfg.model.dimension;
    std::vector<std::vector<double>> ks;
    for (double km : cfg.k_mags) {
        std::vector<double> k(static_cast<std::size_t>(d), 0.0);
        k[0] = km;
        ks.push_back(std::move(k));
    }
    std::vector<ZWeightedAccumulator> accs;
    for (double z : cfg.z_grid) accs.emplace_back(z, ks);

    using Local = std::vector<ZWeightedAccumulator>;
    std::vector<double> zs = cfg.z_grid;
    sample_batch_chunked<Local>(
        cfg.model, cfg.seed, cfg.size_cap, cfg.samples, cfg.workers, 4096,
        [&](std::uint64_t) {
            Local l;
            for (double z : zs) l.emplace_back(z, ks);
            return l;
        },
        [&](Local& l, const Cluster& c, std::uint64_t i, RngStream&) {
            if (c.truncated) {
                for (auto& a : l) a.accumulate(c, 0.0, i / 4096);
                return;
            }
            for (auto& a : l) a.accumulate_weighted(c, i / 4096);
        },
        [&](Local& l, std::uint64_t) {
            for (std::size_t zi = 0; zi < accs.size(); ++zi)
                accs[zi].merge(std::move(l[zi]));
        });

    Theorem3Result res;
    res.tau.resize(cfg.z_grid.size());
    for (std::size_t zi = 0; zi < cfg.z_grid.size(); ++zi)
        for (std::size_t ki = 0; ki < cfg.k_mags.size(); ++ki)
            res.tau[zi].push_back(accs[zi].tau_z_hat(static_cast<int>(ki)));

    std::vector<std::vector<double>> table(cfg.z_grid.size(),
                                           std::vector<double>(cfg.k_mags.size(), 0.0));
    for (std::size_t zi = 0; zi < cfg.z_grid.size(); ++zi)
        for (std::size_t ki = 0; ki < cfg.k_mags.size(); ++ki)
            table[zi][ki] = res.tau[zi][ki].value.real();
    res.fit = fit_lambda_shape(cfg.z_grid, cfg.k_mags, table, cfg.eps2_z);
    return res;
}

// ---------------------------------------------------------------------------
// backbone scaling probe (exploratory)
// ---------------------------------------------------------------------------

struct BackboneProbeRow {
    std::size_t n_nominal;
    double mean_backbone = 0.0;
    double clusters = 0.0;
};

struct BackboneProbeResult {
    std::vector<BackboneProbeRow> rows;
    double exponent = 0.0;  // LS slope of log mean size vs log n
    double se = 0.0;
};

// Marks the far pair as (origin, uniformly chosen cluster site) and records
// mean backbone size per dyadic bin.
inline BackboneProbeResult backbone_scaling_probe(const ModelSpec& m, std::uint64_t seed,
                                                  std::size_t size_cap, std::uint64_t count,
                                                  int j_min, int j_max, unsigned workers = 1) {
    const int jn = j_max - j_min + 1;
    struct Local {
        std::vector<double> sum, cnt;
    };
    std::vector<double> sum(static_cast<std::size_t>(jn), 0.0), cnt(static_cast<std::size_t>(jn), 0.0);
    sample_batch_chunked<Local>(
        m, seed, size_cap, count, workers, 1024,
        [jn](std::uint64_t) {
            return Local{std::vector<double>(static_cast<std::size_t>(jn), 0.0),
                         std::vector<double>(static_cast<std::size_t>(jn), 0.0)};
        },
        [&](Local& loc, const Cluster& c, std::uint64_t, RngStream& rng) {
            if (c.truncated || c.size() < 2) return;
            int j = 0;
            std::size_t v = c.size();
            while (v > 1) {
                v >>= 1;
                ++j;
            }
            if (j < j_min || j > j_max) return;
            const auto y = static_cast<std::uint32_t>(rng.next_below(c.size()));
            const auto bb = extract_backbone(c, 0u, y);
            loc.sum[static_cast<std::size_t>(j - j_min)] += static_cast<double>(bb.site_indices.size());
            loc.cnt[static_cast<std::size_t>(j - j_min)] += 1.0;
        },
        [&](Local& loc, std::uint64_t) {
            for (int i = 0; i < jn; ++i) {
                sum[static_cast<std::size_t>(i)] += loc.sum[static_cast<std::size_t>(i)];
                cnt[static_cast<std::size_t>(i)] += loc.cnt[static_cast<std::size_t>(i)];
            }
        });
    BackboneProbeResult res;
    std::vector<double> xs, ys;
    for (int i = 0; i < jn; ++i) {
        if (cnt[static_cast<std::size_t>(i)] < 4.0) continue;
        BackboneProbeRow row;
        row.n_nominal = std::size_t{1} << static_cast<unsigned>(j_min + i);
        row.mean_backbone = sum[static_cast<std::size_t>(i)] / cnt[static_cast<std::size_t>(i)];
        row.clusters = cnt[static_cast<std::size_t>(i)];
        res.rows.push_back(row);
        xs.push_back(std::log(static_cast<double>(row.n_nominal) * std::sqrt(2.0)));
        ys.push_back(std::log(row.mean_backbone));
    }
    if (xs.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = static_cast<double>(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sx += xs[i];
            sy += ys[i];
            sxx += xs[i] * xs[i];
            sxy += xs[i] * ys[i];
        }
        res.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        double ssr = 0.0;
        const double b0 = (sy - res.exponent * sx) / n;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double r = ys[i] - b0 - res.exponent * xs[i];
            ssr += r * r;
        }
        if (xs.size() > 2)
            res.se = std::sqrt(ssr / (n - 2.0) * n / (n * sxx - sx * sx));
    }
    return res;
}

}  // namespace perc
