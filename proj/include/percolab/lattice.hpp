#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <vector>

namespace perc {

using Coord = std::int64_t;

// A site of Z^d. Coordinates are signed 64-bit; desk-scale clusters never
// get anywhere near the bound.
using Point = std::vector<Coord>;

enum class Neighbourhood { NearestNeighbour, SpreadOut };

struct ModelSpec {
    int dimension = 1;
    Neighbourhood kind = Neighbourhood::NearestNeighbour;
    int range = 1;  // L, spread-out only (sup-norm ball)
    double bond_density = 0.0;

    void validate() const {
        if (dimension < 1) throw std::invalid_argument("ModelSpec: dimension must be >= 1");
        if (kind == Neighbourhood::SpreadOut && range < 1)
            throw std::invalid_argument("ModelSpec: spread-out range must be >= 1");
        if (!(bond_density >= 0.0 && bond_density <= 1.0))
            throw std::invalid_argument("ModelSpec: bond density must lie in [0,1]");
    }

    // 2d for nearest-neighbour, (2L+1)^d - 1 for spread-out.
    std::size_t coordination() const {
        if (kind == Neighbourhood::NearestNeighbour)
            return 2 * static_cast<std::size_t>(dimension);
        std::size_t n = 1;
        for (int i = 0; i < dimension; ++i) n *= static_cast<std::size_t>(2 * range + 1);
        return n - 1;
    }
};

inline ModelSpec nearest_neighbour(int d, double p) {
    ModelSpec m{d, Neighbourhood::NearestNeighbour, 1, p};
    m.validate();
    return m;
}

inline ModelSpec spread_out(int d, int L, double p) {
    ModelSpec m{d, Neighbourhood::SpreadOut, L, p};
    m.validate();
    return m;
}

// Neighbourhood offsets in a fixed lexicographic order, flattened to a
// single d-strided array. The order is what makes sampling reproducible.
inline std::vector<Coord> neighbourhood_offsets_flat(const ModelSpec& m) {
    m.validate();
    const int d = m.dimension;
    std::vector<Coord> flat;
    if (m.kind == Neighbourhood::NearestNeighbour) {
        flat.reserve(static_cast<std::size_t>(2 * d) * d);
        std::vector<Coord> off(d, 0);
        // lexicographic over offsets: for each axis, -1 then +1 would not be
        // lexicographic overall; enumerate the 2d unit vectors sorted.
        std::vector<Point> pts;
        for (int i = 0; i < d; ++i) {
            Point a(d, 0), b(d, 0);
            a[i] = -1;
            b[i] = +1;
            pts.push_back(a);
            pts.push_back(b);
        }
        std::sort(pts.begin(), pts.end());
        for (const auto& p : pts) flat.insert(flat.end(), p.begin(), p.end());
        return flat;
    }
    const Coord L = m.range;
    std::vector<Coord> off(d, -L);
    for (;;) {
        bool origin = true;
        for (Coord c : off)
            if (c != 0) { origin = false; break; }
        if (!origin) flat.insert(flat.end(), off.begin(), off.end());
        int i = d - 1;
        while (i >= 0 && off[i] == L) off[i--] = -L;
        if (i < 0) break;
        ++off[i];
    }
    return flat;
}

inline std::vector<Point> neighbourhood_offsets(const ModelSpec& m) {
    const auto flat = neighbourhood_offsets_flat(m);
    const int d = m.dimension;
    std::vector<Point> out;
    out.reserve(flat.size() / d);
    for (std::size_t i = 0; i < flat.size(); i += d)
        out.emplace_back(flat.begin() + i, flat.begin() + i + d);
    return out;
}

inline std::vector<Point> neighbours(const ModelSpec& m, const Point& x) {
    if (static_cast<int>(x.size()) != m.dimension)
        throw std::invalid_argument("neighbours: point dimension does not match model");
    auto out = neighbourhood_offsets(m);
    for (auto& y : out)
        for (int i = 0; i < m.dimension; ++i) y[i] += x[i];
    return out;
}

// Unordered lattice bond stored with lexicographically smaller endpoint first.
struct Bond {
    Point a, b;
    friend bool operator==(const Bond& u, const Bond& v) { return u.a == v.a && u.b == v.b; }
    friend bool operator<(const Bond& u, const Bond& v) {
        return u.a != v.a ? u.a < v.a : u.b < v.b;
    }
};

inline Bond canonical_bond(const Point& x, const Point& y) {
    if (x == y) throw std::invalid_argument("canonical_bond: endpoints must be distinct");
    if (x.size() != y.size())
        throw std::invalid_argument("canonical_bond: endpoint dimensions differ");
    return x < y ? Bond{x, y} : Bond{y, x};
}

}  // namespace perc
