#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "percolab/sampler.hpp"

namespace perc {

using cxd = std::complex<double>;

// Size-conditioned Fourier accumulation. Exact bins (n = 1..exact_max) serve
// the estimator identities and oracle comparisons; dyadic bins [2^j, 2^{j+1})
// serve scaling plots. A cluster can contribute to one of each.
//
// Wave vectors come in two flavours:
//   - ks: absolute lattice arguments, evaluated for every bin;
//   - scaled_c: per-dyadic-bin axis arguments kappa = c * nominal^{-1/4}
//     (nominal = 2^j), the lattice k of the ISE scaling variable c.
// Three-point slots are (i,j) index pairs into ks; the unrestricted double
// sum factorizes as S_k * S_l, so accumulation stays O(n) per cluster.
struct AccumulatorConfig {
    int d = 1;
    std::size_t exact_max = 0;
    int dyadic_min_j = 0;
    int dyadic_max_j = -1;  // inclusive; -1 disables dyadic binning
    std::vector<std::vector<double>> ks;
    std::vector<std::pair<int, int>> pairs;
    std::vector<double> scaled_c;

    std::size_t n_dyadic() const {
        return dyadic_max_j < dyadic_min_j
                   ? 0
                   : static_cast<std::size_t>(dyadic_max_j - dyadic_min_j + 1);
    }
    void validate() const {
        for (const auto& k : ks)
            if (static_cast<int>(k.size()) != d)
                throw std::invalid_argument("AccumulatorConfig: wave vector dimension");
        for (auto [a, b] : pairs)
            if (a < 0 || b < 0 || a >= static_cast<int>(ks.size()) ||
                b >= static_cast<int>(ks.size()))
                throw std::invalid_argument("AccumulatorConfig: pair index out of range");
    }
};

namespace detail {

struct BinData {
    double count = 0.0;
    double sum_size = 0.0;
    std::vector<cxd> s1;  // per ks slot: sum over clusters of S_k
    std::vector<cxd> s3;  // per pair slot: sum of S_k * S_l
    std::vector<cxd> sc;  // per scaled slot (dyadic bins only)

    void add(const BinData& o) {
        count += o.count;
        sum_size += o.sum_size;
        for (std::size_t i = 0; i < s1.size(); ++i) s1[i] += o.s1[i];
        for (std::size_t i = 0; i < s3.size(); ++i) s3[i] += o.s3[i];
        for (std::size_t i = 0; i < sc.size(); ++i) sc[i] += o.sc[i];
    }
};

struct ChunkData {
    double total = 0.0;  // all samples, binned or not
    std::vector<BinData> exact, dyadic;
};

inline cxd fourier_sum_flat(const Cluster& c, const double* k) {
    double re = 0.0, im = 0.0;
    const int d = c.d;
    const std::size_t n = c.size();
    for (std::size_t i = 0; i < n; ++i) {
        double phase = 0.0;
        const Coord* x = c.coords.data() + i * static_cast<std::size_t>(d);
        for (int j = 0; j < d; ++j) phase += k[j] * static_cast<double>(x[j]);
        re += std::cos(phase);
        im += std::sin(phase);
    }
    return {re, im};
}

inline cxd fourier_sum_axis(const Cluster& c, double theta) {
    double re = 0.0, im = 0.0;
    const int d = c.d;
    const std::size_t n = c.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double phase = theta * static_cast<double>(c.coords[i * static_cast<std::size_t>(d)]);
        re += std::cos(phase);
        im += std::sin(phase);
    }
    return {re, im};
}

struct BatchStats {
    double value = 0.0, se = 0.0;
};

// batch-means standard error over the supplied per-batch (numerator,
// denominator) pairs of a ratio estimator
inline BatchStats ratio_batch_stats(const std::vector<double>& num,
                                    const std::vector<double>& den) {
    double tn = 0.0, td = 0.0;
    for (std::size_t b = 0; b < num.size(); ++b) {
        tn += num[b];
        td += den[b];
    }
    BatchStats st;
    st.value = td > 0.0 ? tn / td : 0.0;
    std::vector<double> means;
    for (std::size_t b = 0; b < num.size(); ++b)
        if (den[b] > 0.0) means.push_back(num[b] / den[b]);
    if (means.size() >= 2) {
        double m = 0.0;
        for (double v : means) m += v;
        m /= static_cast<double>(means.size());
        double ss = 0.0;
        for (double v : means) ss += (v - m) * (v - m);
        st.se = std::sqrt(ss / (static_cast<double>(means.size()) *
                                (static_cast<double>(means.size()) - 1.0)));
    }
    return st;
}

}  // namespace detail

struct ComplexEstimate {
    cxd value{0.0, 0.0};
    double se_re = 0.0, se_im = 0.0;
};

struct ScalarEstimate {
    double value = 0.0, se = 0.0;
};

class FinalizedEstimates;

// Accumulator with per-chunk storage: merging unions disjoint chunk maps, so
// merge is exactly associative and commutative, and finalization folds chunks
// in ascending id order -- results do not depend on worker scheduling.
class EstimatorAccumulator {
   public:
    static constexpr std::size_t kBatches = 32;

    EstimatorAccumulator() = default;
    explicit EstimatorAccumulator(AccumulatorConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
    }

    const AccumulatorConfig& config() const { return cfg_; }

    int exact_bin_of(std::size_t n) const {
        return n >= 1 && n <= cfg_.exact_max ? static_cast<int>(n - 1) : -1;
    }
    int dyadic_bin_of(std::size_t n) const {
        if (cfg_.n_dyadic() == 0 || n == 0) return -1;
        int j = 0;
        std::size_t v = n;
        while (v > 1) {
            v >>= 1;
            ++j;
        }
        if (j < cfg_.dyadic_min_j || j > cfg_.dyadic_max_j) return -1;
        return j - cfg_.dyadic_min_j;
    }
    std::size_t dyadic_nominal(int bin) const {
        return std::size_t{1} << static_cast<unsigned>(cfg_.dyadic_min_j + bin);
    }

    void accumulate(const Cluster& c, std::uint64_t chunk_id) {
        auto& chunk = chunk_of(chunk_id);
        chunk.total += 1.0;
        if (c.truncated) return;  // recorded in the total, excluded from bins
        const std::size_t n = c.size();
        std::vector<cxd> sk(cfg_.ks.size());
        const int eb = exact_bin_of(n);
        const int db = dyadic_bin_of(n);
        if (eb < 0 && db < 0) return;
        for (std::size_t i = 0; i < cfg_.ks.size(); ++i)
            sk[i] = detail::fourier_sum_flat(c, cfg_.ks[i].data());
        auto fill = [&](detail::BinData& bin) {
            bin.count += 1.0;
            bin.sum_size += static_cast<double>(n);
            for (std::size_t i = 0; i < sk.size(); ++i) bin.s1[i] += sk[i];
            for (std::size_t i = 0; i < cfg_.pairs.size(); ++i)
                bin.s3[i] += sk[static_cast<std::size_t>(cfg_.pairs[i].first)] *
                             sk[static_cast<std::size_t>(cfg_.pairs[i].second)];
        };
        if (eb >= 0) fill(chunk.exact[static_cast<std::size_t>(eb)]);
        if (db >= 0) {
            auto& bin = chunk.dyadic[static_cast<std::size_t>(db)];
            fill(bin);
            const double scale = std::pow(static_cast<double>(dyadic_nominal(db)), -0.25);
            for (std::size_t i = 0; i < cfg_.scaled_c.size(); ++i)
                bin.sc[i] += detail::fourier_sum_axis(c, cfg_.scaled_c[i] * scale);
        }
    }

    // merge requires disjoint chunk id sets (workers own disjoint chunks)
    void merge(EstimatorAccumulator&& other) {
        for (auto& [id, data] : other.chunks_) {
            auto [it, fresh] = chunks_.emplace(id, std::move(data));
            if (!fresh) throw std::logic_error("EstimatorAccumulator::merge: chunk collision");
        }
        other.chunks_.clear();
    }

    FinalizedEstimates finalize() const;

   private:
    friend class FinalizedEstimates;

    detail::ChunkData& chunk_of(std::uint64_t id) {
        auto it = chunks_.find(id);
        if (it == chunks_.end()) {
            detail::ChunkData fresh;
            fresh.exact.resize(cfg_.exact_max);
            fresh.dyadic.resize(cfg_.n_dyadic());
            for (auto* vec : {&fresh.exact, &fresh.dyadic})
                for (auto& b : *vec) {
                    b.s1.assign(cfg_.ks.size(), cxd{});
                    b.s3.assign(cfg_.pairs.size(), cxd{});
                }
            for (auto& b : fresh.dyadic) b.sc.assign(cfg_.scaled_c.size(), cxd{});
            it = chunks_.emplace(id, std::move(fresh)).first;
        }
        return it->second;
    }

    AccumulatorConfig cfg_;
    std::map<std::uint64_t, detail::ChunkData> chunks_;
};

// Read-side view: chunks folded (ascending id) into 32 batches for
// batch-means error bars, plus grand totals.
class FinalizedEstimates {
   public:
    explicit FinalizedEstimates(const EstimatorAccumulator& acc) : cfg_(acc.config()) {
        for (auto& b : batches_) {
            b.exact.resize(cfg_.exact_max);
            b.dyadic.resize(cfg_.n_dyadic());
            for (auto* vec : {&b.exact, &b.dyadic})
                for (auto& bin : *vec) {
                    bin.s1.assign(cfg_.ks.size(), cxd{});
                    bin.s3.assign(cfg_.pairs.size(), cxd{});
                }
            for (auto& bin : b.dyadic) bin.sc.assign(cfg_.scaled_c.size(), cxd{});
        }
        for (const auto& [id, data] : acc.chunks_) {
            auto& b = batches_[id % EstimatorAccumulator::kBatches];
            b.total += data.total;
            for (std::size_t i = 0; i < data.exact.size(); ++i) b.exact[i].add(data.exact[i]);
            for (std::size_t i = 0; i < data.dyadic.size(); ++i)
                b.dyadic[i].add(data.dyadic[i]);
        }
        for (const auto& b : batches_) total_ += b.total;
        if (total_ < 1.0) throw std::invalid_argument("FinalizedEstimates: empty accumulator");
    }

    const AccumulatorConfig& config() const { return cfg_; }
    double total_samples() const { return total_; }

    // P-hat(|C| = n) over an exact bin, or bin mass over a dyadic bin.
    ScalarEstimate p_hat_exact(std::size_t n) const {
        return ratio_stat([&](const detail::ChunkData& b) { return exact_bin(b, n).count; },
                          [&](const detail::ChunkData& b) { return b.total; });
    }
    ScalarEstimate p_hat_dyadic(int bin) const {
        return ratio_stat(
            [&](const detail::ChunkData& b) { return b.dyadic[static_cast<std::size_t>(bin)].count; },
            [&](const detail::ChunkData& b) { return b.total; });
    }

    // tau-hat(k;n) = (1/samples) sum over size-n clusters of S_k
    ComplexEstimate tau_hat_exact(std::size_t n, int slot) const {
        return complex_ratio(
            [&](const detail::ChunkData& b) { return exact_bin(b, n).s1[static_cast<std::size_t>(slot)]; },
            [&](const detail::ChunkData& b) { return b.total; });
    }

    // q-hat_n(k) = tau-hat / (n P-hat): mean of S_k normalized by total size;
    // equals 1 exactly at k = 0 because numerator and denominator accumulate
    // the same values.
    ComplexEstimate q_hat_exact(std::size_t n, int slot) const {
        return complex_ratio(
            [&](const detail::ChunkData& b) { return exact_bin(b, n).s1[static_cast<std::size_t>(slot)]; },
            [&](const detail::ChunkData& b) { return exact_bin(b, n).sum_size; });
    }
    ComplexEstimate q_hat_dyadic(int bin, int slot) const {
        return complex_ratio(
            [&](const detail::ChunkData& b) { return b.dyadic[static_cast<std::size_t>(bin)].s1[static_cast<std::size_t>(slot)]; },
            [&](const detail::ChunkData& b) { return b.dyadic[static_cast<std::size_t>(bin)].sum_size; });
    }
    ComplexEstimate q_hat_scaled(int bin, int c_slot) const {
        return complex_ratio(
            [&](const detail::ChunkData& b) { return b.dyadic[static_cast<std::size_t>(bin)].sc[static_cast<std::size_t>(c_slot)]; },
            [&](const detail::ChunkData& b) { return b.dyadic[static_cast<std::size_t>(bin)].sum_size; });
    }

    ComplexEstimate tau3_hat_exact(std::size_t n, int pair_slot) const {
        return complex_ratio(
            [&](const detail::ChunkData& b) { return exact_bin(b, n).s3[static_cast<std::size_t>(pair_slot)]; },
            [&](const detail::ChunkData& b) { return b.total; });
    }

    double bin_count_exact(std::size_t n) const {
        double c = 0.0;
        for (const auto& b : batches_) c += exact_bin(b, n).count;
        return c;
    }
    double bin_count_dyadic(int bin) const {
        double c = 0.0;
        for (const auto& b : batches_) c += b.dyadic[static_cast<std::size_t>(bin)].count;
        return c;
    }

   private:
    const detail::BinData& exact_bin(const detail::ChunkData& b, std::size_t n) const {
        if (n < 1 || n > cfg_.exact_max)
            throw std::invalid_argument("estimate: n outside exact bin range");
        return b.exact[n - 1];
    }

    template <typename Num, typename Den>
    ScalarEstimate ratio_stat(Num num, Den den) const {
        std::vector<double> ns, ds;
        for (const auto& b : batches_) {
            ns.push_back(num(b));
            ds.push_back(den(b));
        }
        auto st = detail::ratio_batch_stats(ns, ds);
        return {st.value, st.se};
    }

    template <typename Num, typename Den>
    ComplexEstimate complex_ratio(Num num, Den den) const {
        std::vector<double> nre, nim, ds;
        for (const auto& b : batches_) {
            const cxd v = num(b);
            nre.push_back(v.real());
            nim.push_back(v.imag());
            ds.push_back(den(b));
        }
        const auto re = detail::ratio_batch_stats(nre, ds);
        const auto im = detail::ratio_batch_stats(nim, ds);
        return {cxd{re.value, im.value}, re.se, im.se};
    }

    AccumulatorConfig cfg_;
    std::array<detail::ChunkData, EstimatorAccumulator::kBatches> batches_;
    double total_ = 0.0;
};

inline FinalizedEstimates EstimatorAccumulator::finalize() const {
    return FinalizedEstimates(*this);
}

// z-weighted generating-function accumulation: each sampled cluster enters
// with weight z^{|C|} (reweighted estimator) or with a green-free indicator
// (explicit estimator); both estimate tau_z-hat(k).
class ZWeightedAccumulator {
   public:
    ZWeightedAccumulator() = default;
    ZWeightedAccumulator(double z, std::vector<std::vector<double>> ks)
        : z_(z), ks_(std::move(ks)) {
        if (!(z >= 0.0 && z < 1.0))
            throw std::invalid_argument("ZWeightedAccumulator: z must lie in [0,1)");
    }

    double z() const { return z_; }
    const std::vector<std::vector<double>>& ks() const { return ks_; }

    void accumulate_weighted(const Cluster& c, std::uint64_t chunk_id) {
        accumulate(c, std::pow(z_, static_cast<double>(c.size())), chunk_id);
    }
    void accumulate_green(const Cluster& c, bool green_free, std::uint64_t chunk_id) {
        accumulate(c, green_free ? 1.0 : 0.0, chunk_id);
    }
    void accumulate(const Cluster& c, double weight, std::uint64_t chunk_id) {
        auto& ch = chunks_[chunk_id];
        if (ch.sums.empty()) ch.sums.assign(ks_.size(), cxd{});
        ch.total += 1.0;
        if (weight == 0.0) return;
        for (std::size_t i = 0; i < ks_.size(); ++i)
            ch.sums[i] += weight * detail::fourier_sum_flat(c, ks_[i].data());
    }

    void merge(ZWeightedAccumulator&& other) {
        for (auto& [id, data] : other.chunks_) {
            auto [it, fresh] = chunks_.emplace(id, std::move(data));
            if (!fresh) throw std::logic_error("ZWeightedAccumulator::merge: chunk collision");
        }
        other.chunks_.clear();
    }

    ComplexEstimate tau_z_hat(int slot) const {
        static constexpr std::size_t B = EstimatorAccumulator::kBatches;
        std::vector<double> nre(B, 0.0), nim(B, 0.0), ds(B, 0.0);
        for (const auto& [id, ch] : chunks_) {
            const std::size_t b = id % B;
            if (!ch.sums.empty()) {
                nre[b] += ch.sums[static_cast<std::size_t>(slot)].real();
                nim[b] += ch.sums[static_cast<std::size_t>(slot)].imag();
            }
            ds[b] += ch.total;
        }
        const auto re = detail::ratio_batch_stats(nre, ds);
        const auto im = detail::ratio_batch_stats(nim, ds);
        return {cxd{re.value, im.value}, re.se, im.se};
    }

   private:
    struct Chunk {
        double total = 0.0;
        std::vector<cxd> sums;
    };
    double z_ = 0.0;
    std::vector<std::vector<double>> ks_;
    std::map<std::uint64_t, Chunk> chunks_;
};

// Coefficient-wise residual of  z d/dz tau_z-hat(k) = tau3_z-hat(k,0):
// sequences of tau-hat(k;n) and tau3-hat(k,0;n) must satisfy
// n tau-hat(k;n) = tau3-hat(k,0;n) term by term.
inline double derivative_identity_residual(const std::vector<cxd>& tau_hat_by_n,
                                           const std::vector<cxd>& tau3_hat_k0_by_n) {
    if (tau_hat_by_n.size() != tau3_hat_k0_by_n.size())
        throw std::invalid_argument("derivative_identity_residual: length mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < tau_hat_by_n.size(); ++i) {
        const double n = static_cast<double>(i + 1);
        worst = std::max(worst, std::abs(n * tau_hat_by_n[i] - tau3_hat_k0_by_n[i]));
    }
    return worst;
}

}  // namespace perc
