#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "percolab/experiments.hpp"

using namespace perc;

TEST_CASE("d=1 critical point is found at 1") {
    // p_c = 1 on the line: everything below is deep subcritical, so the
    // bisection should ride the upper bracket.
    PcOptions opt;
    opt.samples_per_probe = 20000;
    opt.size_cap = 4096;
    opt.j_min = 2;
    opt.j_max = 9;
    opt.target_width = 1.0 / 64.0;
    opt.seed = 5;
    const auto est = estimate_pc(nearest_neighbour(1, 0.5), opt);
    CHECK(est.hi == 1.0);
    CHECK(est.p_hat > 0.95);
    for (const auto& h : est.history) CHECK(h.statistic < 0.0);
}

TEST_CASE("tail curvature signs bracket the d=2 critical point") {
    PcOptions opt;
    opt.samples_per_probe = 40000;
    opt.size_cap = 8192;
    opt.j_min = 3;
    opt.j_max = 11;
    opt.seed = 17;
    // p_c(bond, square lattice) = 1/2
    const double below = detail::tail_curvature(nearest_neighbour(2, 0.40), opt, 1);
    const double above = detail::tail_curvature(nearest_neighbour(2, 0.60), opt, 2);
    CHECK(below < 0.0);
    CHECK(above > 0.0);
}

TEST_CASE("estimate_pc brackets 1/2 in d=2") {
    PcOptions opt;
    opt.samples_per_probe = 50000;
    opt.size_cap = 8192;
    opt.j_min = 3;
    opt.j_max = 11;
    opt.target_width = 0.02;
    opt.p_lo = 0.25;
    opt.p_hi = 0.75;
    opt.seed = 23;
    const auto est = estimate_pc(nearest_neighbour(2, 0.0), opt);
    CHECK(std::abs(est.p_hat - 0.5) < 0.05);
    CHECK(est.hi - est.lo <= 0.02);
}

TEST_CASE("golden section minimizer") {
    CHECK(std::abs(detail::golden_min([](double x) { return (x - 2.3) * (x - 2.3); }, 0.0,
                                      8.0) -
                   2.3) < 1e-9);
    // value comparisons stall near sqrt(eps) for a quadratic minimum
    CHECK(std::abs(detail::golden_min([](double x) { return std::cos(x); }, 2.0, 4.5) -
                   M_PI) < 1e-6);
}

TEST_CASE("check_delta recovers a synthetic power law exactly") {
    // feed the accumulator hand-made clusters whose size histogram follows
    // P(n) proportional to n^{-3/2} exactly; the weighted fit must return
    // a slope near -3/2 with tiny residual scatter.
    AccumulatorConfig cfg;
    cfg.d = 1;
    cfg.dyadic_min_j = 2;
    cfg.dyadic_max_j = 8;
    EstimatorAccumulator acc(cfg);
    Cluster c;
    c.d = 1;
    std::uint64_t chunk = 0;
    for (std::size_t n = 4; n < 512; ++n) {
        c.coords.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) c.coords[i] = static_cast<Coord>(i);
        // integer multiplicities proportional to n^{-3/2} * big constant
        const auto copies = static_cast<std::size_t>(std::round(2e6 * std::pow(n, -1.5)));
        for (std::size_t r = 0; r < copies; ++r) acc.accumulate(c, chunk++ % 64);
    }
    const auto fin = acc.finalize();
    const auto e = check_delta(fin, 0, 6);
    CHECK(std::abs(e.value - (-1.5)) < 0.05);
    CHECK(e.window_lo_j == 2);
    CHECK(e.window_hi_j == 8);

    CHECK_THROWS_AS(check_delta(fin, 0, 1), std::invalid_argument);
}

TEST_CASE("fit_constants recovers C and D from synthetic ideal data") {
    // same synthetic histogram, now with scaled Fourier slots: line clusters
    // of length n have q-hat_n(theta) = |sum e^{i theta x}|-style kernels, so
    // instead inject the target directly: check the C estimate alone here.
    AccumulatorConfig cfg;
    cfg.d = 1;
    cfg.dyadic_min_j = 3;
    cfg.dyadic_max_j = 7;
    EstimatorAccumulator acc(cfg);
    Cluster c;
    c.d = 1;
    std::uint64_t chunk = 0;
    const double C_true = 1.7;
    std::uint64_t total = 0;
    for (std::size_t n = 8; n < 256; ++n) {
        c.coords.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) c.coords[i] = static_cast<Coord>(i);
        const auto copies = static_cast<std::size_t>(
            std::round(C_true / std::sqrt(8.0 * M_PI) * 4e6 * std::pow(n, -1.5)));
        for (std::size_t r = 0; r < copies; ++r) acc.accumulate(c, chunk++ % 64);
        total += copies;
    }
    // pad the total so bin mass = count / total has the right normalization
    Cluster single;
    single.d = 1;
    single.coords.assign(1, 0);
    for (std::uint64_t r = total; r < 4000000; ++r) acc.accumulate(single, chunk++ % 64);
    const auto fit = fit_constants(acc.finalize(), 0, 4);
    CHECK(std::abs(fit.c_hat - C_true) < 0.02 * C_true);
    CHECK(fit.d_hat == 0.0);  // no scaled slots configured
}

TEST_CASE("shape fit recovers (C, D) exactly from exact Lambda input") {
    const double C = 2.5, D = 1.3;
    const std::vector<double> zg{0.3, 0.5, 0.7, 0.85};
    const std::vector<double> kg{0.8, 0.4, 0.2, 0.0};
    std::vector<std::vector<double>> table;
    for (double z : zg) {
        std::vector<double> row;
        for (double k : kg)
            row.push_back(C * std::abs(lambda_at(std::complex<double>(z, 0.0), D * k)));
        table.push_back(std::move(row));
    }
    const auto fit = fit_lambda_shape(zg, kg, table);
    CHECK(std::abs(fit.d_hat - D) < 1e-6);
    CHECK(std::abs(fit.c_hat - C) < 1e-6);
    CHECK(fit.objective < 1e-12);
    for (auto [z, e] : fit.eps1) CHECK(e < 1e-7);

    CHECK_THROWS_AS(fit_lambda_shape({0.5}, kg, {table[0]}), std::invalid_argument);
}

TEST_CASE("shape fit extrapolates the sqrt(1-z) correction out of C") {
    // tau = C Lambda (1 + 0.8 sqrt(1-z)): the intercept estimate must land on
    // C, and the residual column must decrease toward z = 1.
    const double C = 1.9, D = 0.7;
    const std::vector<double> zg{0.9, 0.95, 0.98, 0.995, 0.998};
    const std::vector<double> kg{0.4, 0.2, 0.0};
    std::vector<std::vector<double>> table;
    for (double z : zg) {
        std::vector<double> row;
        for (double k : kg)
            row.push_back(C * std::abs(lambda_at(std::complex<double>(z, 0.0), D * k)) *
                          (1.0 + 0.8 * std::sqrt(1.0 - z)));
        table.push_back(std::move(row));
    }
    const auto fit = fit_lambda_shape(zg, kg, table, 0.98);
    CHECK(std::abs(fit.c_hat - C) / C < 0.02);
    for (std::size_t i = 1; i < fit.eps1.size(); ++i)
        CHECK(fit.eps1[i].second < fit.eps1[i - 1].second);
    // the correction factorizes, so it cancels in the k-profile ratios:
    // D comes back exact and the eps2 row is zero
    CHECK(std::abs(fit.d_hat - D) < 1e-6);
    REQUIRE(fit.eps2.size() == kg.size());
    for (auto [k, e] : fit.eps2) CHECK(e < 1e-9);
}

TEST_CASE("theorem-3 pipeline smoke test in d=1") {
    Theorem3Config cfg;
    cfg.model = nearest_neighbour(1, 0.6);
    cfg.z_grid = {0.4, 0.6, 0.8};
    cfg.k_mags = {0.8, 0.4, 0.0};
    cfg.samples = 30000;
    cfg.size_cap = 1 << 12;
    cfg.seed = 3;
    const auto res = check_theorem3_shape(cfg);
    REQUIRE(res.tau.size() == 3);
    REQUIRE(res.tau[0].size() == 3);
    // tau_z-hat(0) increases with z and decreases with |k|
    CHECK(res.tau[0][2].value.real() < res.tau[2][2].value.real());
    CHECK(res.tau[2][0].value.real() < res.tau[2][2].value.real());
    CHECK(res.fit.eps1.size() == 3);
    CHECK(res.fit.eps2.size() == 3);
    CHECK(res.fit.d_hat > 0.0);
}

TEST_CASE("backbone probe: trees have backbone = path") {
    // d=1 clusters are segments; the backbone between 0 and a uniform y is
    // the sub-segment, mean size (n+ish)/2, so slope of log mean vs log n
    // should approach 1.
    const auto res =
        backbone_scaling_probe(nearest_neighbour(1, 0.9), 11, 1 << 12, 40000, 3, 8);
    REQUIRE(res.rows.size() >= 4);
    CHECK(std::abs(res.exponent - 1.0) < 0.2);
    for (const auto& row : res.rows) {
        CHECK(row.mean_backbone >= 1.0);
        CHECK(row.mean_backbone <= static_cast<double>(row.n_nominal) * 2.0);
    }
}
