#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "percolab/graph.hpp"
#include "percolab/lattice.hpp"

namespace perc {

// Exact small-instance ground truth by exhaustive enumeration: lattice
// animals containing the origin, internal bond subsets, perimeter vacancy.
// Nearest-neighbour only, d <= 2, n_max <= 6 (guard rails, not tuning knobs).

struct EnumerationDomain {
    int d = 2;
    int n_max = 4;

    void validate() const {
        if (d < 1 || d > 2)
            throw std::invalid_argument("EnumerationDomain: d must be 1 or 2");
        if (n_max < 1 || n_max > 6)
            throw std::invalid_argument("EnumerationDomain: n_max must be in [1,6]");
    }
};

struct ClusterShape {
    std::vector<Point> sites;  // sorted, contains origin
    std::vector<std::pair<std::uint32_t, std::uint32_t>> internal_bonds;
    std::size_t perimeter = 0;  // bonds with exactly one endpoint inside
    double probability = 0.0;   // P(C(0) = sites as a site set)
};

namespace detail {

struct UnionFind {
    std::vector<int> p;
    explicit UnionFind(int n) : p(n) {
        for (int i = 0; i < n; ++i) p[i] = i;
    }
    int find(int x) { return p[x] == x ? x : p[x] = find(p[x]); }
    void unite(int a, int b) { p[find(a)] = find(b); }
};

// Probability that the internal bonds connect all sites, summed over bond
// configurations: sum over connected spanning subsets B of p^|B| (1-p)^(I-|B|).
inline double connected_spanning_probability(std::size_t n_sites,
                                             const std::vector<std::pair<std::uint32_t, std::uint32_t>>& bonds,
                                             double p) {
    if (n_sites == 1) return 1.0;
    const std::size_t nb = bonds.size();
    if (nb >= 26) throw std::invalid_argument("oracle: too many internal bonds");
    double total = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << nb); ++mask) {
        UnionFind uf(static_cast<int>(n_sites));
        int bits = 0;
        for (std::size_t i = 0; i < nb; ++i)
            if (mask & (1u << i)) {
                uf.unite(static_cast<int>(bonds[i].first), static_cast<int>(bonds[i].second));
                ++bits;
            }
        int root = uf.find(0);
        bool connected = true;
        for (std::size_t v = 1; v < n_sites; ++v)
            if (uf.find(static_cast<int>(v)) != root) {
                connected = false;
                break;
            }
        if (connected)
            total += std::pow(p, bits) * std::pow(1.0 - p, static_cast<double>(nb - bits));
    }
    return total;
}

}  // namespace detail

// All connected site sets containing the origin with size <= n_max.
inline std::vector<std::vector<Point>> enumerate_animals(const EnumerationDomain& dom) {
    dom.validate();
    const ModelSpec m = nearest_neighbour(dom.d, 0.5);
    std::set<std::vector<Point>> seen;
    std::vector<std::vector<Point>> frontier{{Point(dom.d, 0)}};
    seen.insert(frontier[0]);
    std::vector<std::vector<Point>> all(frontier);
    for (int size = 1; size < dom.n_max; ++size) {
        std::vector<std::vector<Point>> next;
        for (const auto& a : frontier) {
            for (const auto& s : a) {
                for (const auto& nb : neighbours(m, s)) {
                    if (std::binary_search(a.begin(), a.end(), nb)) continue;
                    auto grown = a;
                    grown.insert(std::lower_bound(grown.begin(), grown.end(), nb), nb);
                    if (seen.insert(grown).second) next.push_back(grown);
                }
            }
        }
        all.insert(all.end(), next.begin(), next.end());
        frontier = std::move(next);
    }
    return all;
}

// Full exact law of C(0) restricted to |C(0)| <= n_max;
// P(C(0) = A) = [spanning-connected internal mass] * (1-p)^{perimeter(A)}.
inline std::vector<ClusterShape> exact_cluster_law(const EnumerationDomain& dom, double p) {
    dom.validate();
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("exact_cluster_law: bad p");
    const ModelSpec m = nearest_neighbour(dom.d, p);
    std::vector<ClusterShape> out;
    for (auto& sites : enumerate_animals(dom)) {
        ClusterShape sh;
        sh.sites = sites;
        for (std::uint32_t i = 0; i < sites.size(); ++i)
            for (const auto& nb : neighbours(m, sites[i])) {
                auto it = std::lower_bound(sites.begin(), sites.end(), nb);
                if (it != sites.end() && *it == nb) {
                    auto j = static_cast<std::uint32_t>(it - sites.begin());
                    if (j > i) sh.internal_bonds.emplace_back(i, j);
                } else {
                    ++sh.perimeter;
                }
            }
        sh.probability = detail::connected_spanning_probability(sites.size(),
                                                                sh.internal_bonds, p) *
                         std::pow(1.0 - p, static_cast<double>(sh.perimeter));
        out.push_back(std::move(sh));
    }
    return out;
}

inline std::map<std::size_t, double> exact_size_law(const std::vector<ClusterShape>& shapes) {
    std::map<std::size_t, double> law;
    for (const auto& sh : shapes) law[sh.sites.size()] += sh.probability;
    return law;
}

// tau(x;n) = P(C(0) contains x, |C(0)| = n)
inline double exact_tau(const std::vector<ClusterShape>& shapes, const Point& x,
                        std::size_t n) {
    double t = 0.0;
    for (const auto& sh : shapes)
        if (sh.sites.size() == n &&
            std::binary_search(sh.sites.begin(), sh.sites.end(), x))
            t += sh.probability;
    return t;
}

inline double exact_tau3(const std::vector<ClusterShape>& shapes, const Point& x,
                         const Point& y, std::size_t n) {
    double t = 0.0;
    for (const auto& sh : shapes)
        if (sh.sites.size() == n &&
            std::binary_search(sh.sites.begin(), sh.sites.end(), x) &&
            std::binary_search(sh.sites.begin(), sh.sites.end(), y))
            t += sh.probability;
    return t;
}

namespace detail {
inline std::complex<double> fourier_sum(const std::vector<Point>& sites,
                                        const std::vector<double>& k) {
    std::complex<double> s{0.0, 0.0};
    for (const auto& x : sites) {
        double phase = 0.0;
        for (std::size_t i = 0; i < k.size(); ++i)
            phase += k[i] * static_cast<double>(x[i]);
        s += std::complex<double>(std::cos(phase), std::sin(phase));
    }
    return s;
}
}  // namespace detail

// tau-hat(k;n) = sum_x tau(x;n) e^{ikx}, summed exactly over the finite support.
inline std::complex<double> exact_tau_hat(const std::vector<ClusterShape>& shapes,
                                          const std::vector<double>& k, std::size_t n) {
    std::complex<double> t{0.0, 0.0};
    for (const auto& sh : shapes)
        if (sh.sites.size() == n) t += sh.probability * detail::fourier_sum(sh.sites, k);
    return t;
}

// tau3-hat(k,l;n): the double sum over cluster pairs factorizes per shape.
inline std::complex<double> exact_tau3_hat(const std::vector<ClusterShape>& shapes,
                                           const std::vector<double>& k,
                                           const std::vector<double>& l, std::size_t n) {
    std::complex<double> t{0.0, 0.0};
    for (const auto& sh : shapes)
        if (sh.sites.size() == n)
            t += sh.probability * detail::fourier_sum(sh.sites, k) *
                 detail::fourier_sum(sh.sites, l);
    return t;
}

// Exhaustive backbone: per-candidate unit-capacity flow test. This is the
// definitional reference for the sampler's bridge-tree extraction.
inline std::vector<std::uint32_t> exact_backbone(
    std::size_t n_sites, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& bonds,
    std::uint32_t x, std::uint32_t y) {
    if (x >= n_sites || y >= n_sites)
        throw std::invalid_argument("exact_backbone: endpoint outside cluster");
    std::vector<std::uint32_t> out;
    for (std::uint32_t u = 0; u < n_sites; ++u)
        if (backbone_member_by_flow(static_cast<int>(n_sites), bonds, static_cast<int>(x),
                                    static_cast<int>(y), static_cast<int>(u)))
            out.push_back(u);
    return out;
}

// Coefficient-wise derivative identity  n tau-hat(k;n) = tau3-hat(k,0;n),
// i.e. z d/dz tau_z-hat(k) = tau3_z-hat(k,0). Returns the max coefficient gap.
inline double derivative_identity_residual(const std::vector<ClusterShape>& shapes,
                                           const std::vector<double>& k,
                                           std::size_t n_max) {
    const std::vector<double> zero(k.size(), 0.0);
    double worst = 0.0;
    for (std::size_t n = 1; n <= n_max; ++n) {
        const auto lhs = static_cast<double>(n) * exact_tau_hat(shapes, k, n);
        const auto rhs = exact_tau3_hat(shapes, k, zero, n);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

}  // namespace perc
