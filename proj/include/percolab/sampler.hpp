#pragma once

#include <atomic>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "percolab/graph.hpp"
#include "percolab/lattice.hpp"
#include "percolab/rng.hpp"

namespace perc {

// A sampled cluster of the origin. Sites in discovery (BFS) order, flat
// d-strided coordinates; bonds as index pairs into the site list.
struct Cluster {
    int d = 0;
    std::vector<Coord> coords;  // size() == d * size
    std::vector<std::pair<std::uint32_t, std::uint32_t>> bonds;
    bool truncated = false;

    std::size_t size() const { return coords.size() / static_cast<std::size_t>(d); }
    Point site(std::size_t i) const {
        return Point(coords.begin() + static_cast<std::ptrdiff_t>(i) * d,
                     coords.begin() + static_cast<std::ptrdiff_t>(i + 1) * d);
    }
};

namespace detail {

struct Key128 {
    std::uint64_t lo = 0, hi = 0;
    friend bool operator==(const Key128& a, const Key128& b) {
        return a.lo == b.lo && a.hi == b.hi;
    }
};

struct Key128Hash {
    std::size_t operator()(const Key128& k) const {
        return RngStream::mix(k.lo ^ RngStream::mix(k.hi));
    }
};

// Packs d coordinates into 128 bits, floor(128/d) bits each (capped at 21).
// Throws if a coordinate leaves the packable range; desk-scale clusters
// stay far inside it.
struct SitePacker {
    int d;
    int bits;
    Coord max_abs;

    explicit SitePacker(int dim) : d(dim) {
        bits = 128 / d;
        if (bits > 21) bits = 21;
        if (bits < 4) throw std::invalid_argument("SitePacker: dimension too large to pack");
        max_abs = (Coord{1} << (bits - 1)) - 1;
    }

    Key128 pack(const Coord* c) const {
        unsigned __int128 v = 0;
        for (int i = 0; i < d; ++i) {
            if (c[i] > max_abs || c[i] < -max_abs)
                throw std::runtime_error("cluster growth left the packable coordinate range");
            v = (v << bits) | static_cast<unsigned __int128>(
                                  static_cast<std::uint64_t>(c[i] + max_abs + 1));
        }
        return Key128{static_cast<std::uint64_t>(v),
                      static_cast<std::uint64_t>(v >> 64)};
    }
};

}  // namespace detail

// Breadth-first lazy Bernoulli growth of C(0). Every lattice bond incident
// to the cluster is examined exactly once: a bond {x,y} is decided while
// expanding whichever endpoint is dequeued first, so later scans skip
// neighbours that are already expanded. The scan over a site's neighbourhood
// uses geometric skips, equivalent in law to per-bond Bernoulli draws.
class ClusterGrower {
   public:
    explicit ClusterGrower(const ModelSpec& m)
        : m_(m), packer_(m.dimension), offsets_(neighbourhood_offsets_flat(m)) {
        m_.validate();
        omega_ = offsets_.size() / static_cast<std::size_t>(m.dimension);
        const double p = m_.bond_density;
        inv_log1mp_ = p > 0.0 && p < 1.0 ? 1.0 / std::log1p(-p) : 0.0;
    }

    const ModelSpec& model() const { return m_; }

    Cluster grow(RngStream& rng, std::size_t size_cap) const {
        if (size_cap < 1) throw std::invalid_argument("grow: size_cap must be >= 1");
        const int d = m_.dimension;
        const double p = m_.bond_density;
        Cluster c;
        c.d = d;
        c.coords.assign(static_cast<std::size_t>(d), 0);
        std::unordered_map<detail::Key128, std::uint32_t, detail::Key128Hash> index;
        index.reserve(64);
        index.emplace(packer_.pack(c.coords.data()), 0u);

        std::vector<Coord> y(static_cast<std::size_t>(d));
        std::size_t head = 0;
        while (head < c.size()) {
            const std::size_t base = head * static_cast<std::size_t>(d);
            // scan the neighbourhood of site `head` for occupied bonds
            double pos = -1.0;
            for (;;) {
                if (p <= 0.0) break;
                if (p >= 1.0)
                    pos += 1.0;
                else
                    pos += 1.0 + geometric_skip(rng, inv_log1mp_);
                if (!(pos < static_cast<double>(omega_))) break;
                const auto j = static_cast<std::size_t>(pos);
                const Coord* off = offsets_.data() + j * static_cast<std::size_t>(d);
                for (int i = 0; i < d; ++i) y[i] = c.coords[base + i] + off[i];
                const auto key = packer_.pack(y.data());
                auto it = index.find(key);
                if (it != index.end()) {
                    if (it->second < head) continue;  // bond already examined from y
                    c.bonds.emplace_back(static_cast<std::uint32_t>(head), it->second);
                } else {
                    if (c.size() >= size_cap) {
                        c.truncated = true;
                        return c;
                    }
                    const auto idx = static_cast<std::uint32_t>(c.size());
                    index.emplace(key, idx);
                    c.coords.insert(c.coords.end(), y.begin(), y.end());
                    c.bonds.emplace_back(static_cast<std::uint32_t>(head), idx);
                }
            }
            ++head;
        }
        return c;
    }

    // Green-site variant: each cluster site is independently "not green"
    // with probability z; green_free means no site came up green.
    std::pair<Cluster, bool> grow_green(double z, RngStream& rng,
                                        std::size_t size_cap) const {
        if (!(z >= 0.0 && z <= 1.0))
            throw std::invalid_argument("grow_green: z must lie in [0,1]");
        Cluster c = grow(rng, size_cap);
        bool green_free = true;
        for (std::size_t i = 0; i < c.size(); ++i)
            if (!(rng.next_double() < z)) {
                green_free = false;
                break;
            }
        return {std::move(c), green_free};
    }

   private:
    ModelSpec m_;
    detail::SitePacker packer_;
    std::vector<Coord> offsets_;
    std::size_t omega_ = 0;
    double inv_log1mp_ = 0.0;
};

inline Cluster grow_cluster(const ModelSpec& m, const RngStreamSpec& rng,
                            std::size_t size_cap) {
    RngStream r(rng);
    return ClusterGrower(m).grow(r, size_cap);
}

inline std::pair<Cluster, bool> grow_cluster_green(const ModelSpec& m, double z,
                                                   const RngStreamSpec& rng,
                                                   std::size_t size_cap) {
    RngStream r(rng);
    return ClusterGrower(m).grow_green(z, r, size_cap);
}

// Backbone of a cluster between marked sites: all u with edge-disjoint
// occupied paths x->u and u->y. Computed from the bridge decomposition;
// validated in the tests against the exhaustive flow definition.
struct Backbone {
    std::vector<std::uint32_t> site_indices;  // indices into the parent cluster
};

inline std::uint32_t site_index_of(const Cluster& c, const Point& x) {
    for (std::size_t i = 0; i < c.size(); ++i) {
        bool eq = true;
        for (int j = 0; j < c.d; ++j)
            if (c.coords[i * static_cast<std::size_t>(c.d) + j] != x[static_cast<std::size_t>(j)]) {
                eq = false;
                break;
            }
        if (eq) return static_cast<std::uint32_t>(i);
    }
    throw std::invalid_argument("site_index_of: point not in cluster");
}

inline Backbone extract_backbone(const Cluster& c, std::uint32_t xi, std::uint32_t yi) {
    if (xi >= c.size() || yi >= c.size())
        throw std::invalid_argument("extract_backbone: endpoint index outside cluster");
    AdjGraph g(static_cast<int>(c.size()), c.bonds);
    auto mask = backbone_mask(g, static_cast<int>(xi), static_cast<int>(yi));
    Backbone b;
    for (std::uint32_t i = 0; i < c.size(); ++i)
        if (mask[i]) b.site_indices.push_back(i);
    return b;
}

inline Backbone extract_backbone(const Cluster& c, const Point& x, const Point& y) {
    return extract_backbone(c, site_index_of(c, x), site_index_of(c, y));
}

// 64-bit fingerprint of the sorted site list; used by determinism checks.
inline std::uint64_t cluster_fingerprint(const Cluster& c) {
    std::vector<Point> sites;
    sites.reserve(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) sites.push_back(c.site(i));
    std::sort(sites.begin(), sites.end());
    std::uint64_t h = 0x2545f4914f6cdd1dull ^ (static_cast<std::uint64_t>(c.d) << 32);
    for (const auto& s : sites)
        for (Coord v : s) h = RngStream::mix(h ^ static_cast<std::uint64_t>(v));
    h = RngStream::mix(h ^ (c.truncated ? 0xabcdull : 0x1234ull));
    return h;
}

// Deterministic chunked parallel driver: cluster i always uses stream i,
// chunk results are merged in ascending chunk order, so the outcome is
// independent of the worker count.
template <typename Local, typename MakeLocal, typename Consume, typename Merge>
void sample_batch_chunked(const ModelSpec& m, std::uint64_t seed, std::size_t size_cap,
                          std::uint64_t count, unsigned workers, std::size_t chunk_size,
                          MakeLocal make_local, Consume consume, Merge merge) {
    if (count < 1) throw std::invalid_argument("sample_batch: count must be >= 1");
    if (workers < 1) workers = 1;
    if (chunk_size < 1) chunk_size = 1;
    const std::uint64_t nchunks = (count + chunk_size - 1) / chunk_size;
    std::vector<Local> locals(static_cast<std::size_t>(nchunks));
    std::atomic<std::uint64_t> next{0};
    auto work = [&] {
        ClusterGrower grower(m);
        for (;;) {
            const std::uint64_t cidx = next.fetch_add(1);
            if (cidx >= nchunks) break;
            Local local = make_local(cidx);
            const std::uint64_t lo = cidx * chunk_size;
            const std::uint64_t hi = std::min<std::uint64_t>(lo + chunk_size, count);
            for (std::uint64_t i = lo; i < hi; ++i) {
                RngStream rng(seed, i);
                Cluster c = grower.grow(rng, size_cap);
                consume(local, c, i, rng);
            }
            locals[static_cast<std::size_t>(cidx)] = std::move(local);
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (std::uint64_t cidx = 0; cidx < nchunks; ++cidx)
        merge(locals[static_cast<std::size_t>(cidx)], cidx);
}

// Convenience stream of whole clusters (testing / cluster dumps).
template <typename Fn>
void sample_batch(const ModelSpec& m, std::uint64_t seed, std::size_t size_cap,
                  std::uint64_t count, unsigned workers, Fn&& per_cluster) {
    using LocalVec = std::vector<Cluster>;
    sample_batch_chunked<LocalVec>(
        m, seed, size_cap, count, workers, 256,
        [](std::uint64_t) { return LocalVec{}; },
        [](LocalVec& v, Cluster& c, std::uint64_t, RngStream&) { v.push_back(std::move(c)); },
        [&](LocalVec& v, std::uint64_t cidx) {
            for (std::size_t i = 0; i < v.size(); ++i)
                per_cluster(v[i], cidx * 256 + i);
        });
}

// Structural audit used by tests: connectivity, bond endpoints in range,
// no duplicate sites, bond offsets inside the model neighbourhood.
inline bool audit_cluster(const ModelSpec& m, const Cluster& c) {
    if (c.d != m.dimension) return false;
    const std::size_t n = c.size();
    // duplicates
    {
        std::vector<Point> sites;
        for (std::size_t i = 0; i < n; ++i) sites.push_back(c.site(i));
        std::sort(sites.begin(), sites.end());
        if (std::adjacent_find(sites.begin(), sites.end()) != sites.end()) return false;
    }
    // bond sanity + connectivity
    std::vector<std::vector<std::uint32_t>> adj(n);
    const Coord L = m.kind == Neighbourhood::SpreadOut ? m.range : 1;
    for (auto [a, b] : c.bonds) {
        if (a >= n || b >= n || a == b) return false;
        Coord sup = 0, l1 = 0;
        for (int i = 0; i < c.d; ++i) {
            Coord diff = std::abs(c.coords[a * static_cast<std::size_t>(c.d) + i] -
                                  c.coords[b * static_cast<std::size_t>(c.d) + i]);
            sup = std::max(sup, diff);
            l1 += diff;
        }
        if (m.kind == Neighbourhood::NearestNeighbour ? l1 != 1 : (sup == 0 || sup > L))
            return false;
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<char> seen(n, 0);
    std::vector<std::uint32_t> stack{0};
    seen[0] = 1;
    std::size_t cnt = 1;
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        for (auto u : adj[v])
            if (!seen[u]) {
                seen[u] = 1;
                ++cnt;
                stack.push_back(u);
            }
    }
    return cnt == n;
}

}  // namespace perc
