#pragma once
//
// Random sequences in the polydisc with prescribed dyadic radii, plus a
// Monte Carlo harness for Riesz bounds of the induced node families.
//
// Randomness comes from a counter-based Philox4x64-10 generator keyed by the
// seed. Every angle is addressed by the counter (stream, n, i, j), so results
// do not depend on evaluation order or thread count.
//

#include <rkhs_lab/geometry.hpp>

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <map>
#include <sstream>

namespace rkhs_lab {

struct Philox4x64 {
    using block = std::array<std::uint64_t, 4>;
    using key_type = std::array<std::uint64_t, 2>;

    static block generate(block ctr, key_type key)
    {
        constexpr std::uint64_t m0 = 0xD2E7470EE14C6C93ULL, m1 = 0xCA5A826395121157ULL;
        constexpr std::uint64_t w0 = 0x9E3779B97F4A7C15ULL, w1 = 0xBB67AE8584CAA73BULL;
        for (int round = 0; round < 10; ++round) {
            if (round > 0) key[0] += w0, key[1] += w1;
            const unsigned __int128 p0 = static_cast<unsigned __int128>(m0) * ctr[0];
            const unsigned __int128 p1 = static_cast<unsigned __int128>(m1) * ctr[2];
            const auto hi0 = std::uint64_t(p0 >> 64), lo0 = std::uint64_t(p0);
            const auto hi1 = std::uint64_t(p1 >> 64), lo1 = std::uint64_t(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

    // 53-bit uniform in [0, 1)
    static double uniform(std::uint64_t bits) { return double(bits >> 11) * 0x1.0p-53; }
};

// angle in [0, 2 pi) for counter (stream, n, i, j)
inline double random_angle(std::uint64_t seed, std::uint64_t stream, std::uint64_t n, std::uint64_t i, std::uint64_t j)
{
    auto out = Philox4x64::generate({stream, n, i, j}, {seed, 0});
    return 2.0 * std::numbers::pi * Philox4x64::uniform(out[0]);
}

// r_n^i = 1 - 2^{-alpha_n^i}
struct RadiiSpec {
    int d = 1;
    std::vector<MultiIndex> exponents;

    void validate() const
    {
        require(d >= 1, errc::invalid_argument, "RadiiSpec needs d >= 1");
        for (const auto& a : exponents) {
            require(int(a.size()) == d, errc::dimension_mismatch, "exponent length differs from d");
            for (int x : a) require(x >= 0 && x <= 52, errc::invalid_argument, "radius exponents must lie in [0, 52]", x);
        }
    }

    std::size_t size() const { return exponents.size(); }
    double radius(std::size_t n, int i) const { return 1.0 - std::ldexp(1.0, -exponents[n][std::size_t(i)]); }
};

struct RandomPoint {
    std::vector<double> radius;
    std::vector<double> angle;

    std::vector<cplx> z() const
    {
        std::vector<cplx> out(radius.size());
        for (std::size_t i = 0; i < radius.size(); ++i) out[i] = std::polar(radius[i], angle[i]);
        return out;
    }
};

struct SequenceOptions {
    std::uint64_t stream = 0;
    // node n draws its angles at counter index counter_index[n]; equal indices
    // with equal radii give identical points
    std::vector<std::uint64_t> counter_index;
};

inline std::uint64_t counter_of(const SequenceOptions& o, std::size_t n)
{
    return o.counter_index.empty() ? std::uint64_t(n) : o.counter_index.at(n);
}

inline std::vector<RandomPoint> generate_random_sequence(const RadiiSpec& radii, std::uint64_t seed,
                                                         const SequenceOptions& opt = {})
{
    radii.validate();
    require(opt.counter_index.empty() || opt.counter_index.size() == radii.size(), errc::dimension_mismatch,
            "counter_index must have one entry per node");
    std::vector<RandomPoint> pts(radii.size());
    for (std::size_t n = 0; n < radii.size(); ++n) {
        auto& p = pts[n];
        for (int i = 0; i < radii.d; ++i) {
            p.radius.push_back(radii.radius(n, i));
            p.angle.push_back(random_angle(seed, opt.stream, counter_of(opt, n), std::uint64_t(i), 0));
        }
    }
    return pts;
}

// m with 1 - 2^{-m} <= r < 1 - 2^{-(m+1)}
inline int dyadic_cell(double r)
{
    require(r >= 0.0 && r < 1.0, errc::outside_domain, "modulus outside [0, 1)", r);
    int m = int(std::floor(-std::log2(1.0 - r)));
    m     = std::max(m, 0);
    while (m > 0 && r < 1.0 - std::ldexp(1.0, -m)) --m;
    while (r >= 1.0 - std::ldexp(1.0, -(m + 1))) ++m;
    return m;
}

struct DyadicHistogram {
    int d = 1;
    std::map<MultiIndex, long long> counts;

    long long total() const
    {
        long long s = 0;
        for (const auto& [m, c] : counts) s += c;
        return s;
    }

    void add_moduli(const std::vector<double>& moduli, long long multiplicity = 1)
    {
        require(int(moduli.size()) == d, errc::dimension_mismatch, "point dimension differs from histogram");
        MultiIndex m(moduli.size());
        for (std::size_t i = 0; i < moduli.size(); ++i) m[i] = dyadic_cell(moduli[i]);
        counts[m] += multiplicity;
    }
};

inline DyadicHistogram dyadic_histogram(const std::vector<RandomPoint>& points, int d)
{
    DyadicHistogram h{d, {}};
    for (const auto& p : points) h.add_moduli(p.radius);
    return h;
}

inline DyadicHistogram dyadic_histogram(const std::vector<std::vector<cplx>>& points, int d)
{
    DyadicHistogram h{d, {}};
    std::vector<double> mod(static_cast<std::size_t>(d));
    for (const auto& z : points) {
        require(int(z.size()) == d, errc::dimension_mismatch, "point dimension differs from histogram");
        for (int i = 0; i < d; ++i) mod[std::size_t(i)] = std::abs(z[std::size_t(i)]);
        h.add_moduli(mod);
    }
    return h;
}

struct SequenceStatistics {
    double sufficient = 0.0;  // sum N_m^{1+1/d} 2^{-|m|/d}
    double necessary  = 0.0;  // sum N_m^2 2^{-|m|}
};

inline SequenceStatistics interpolation_statistics(const DyadicHistogram& h, int d)
{
    require(d >= 1, errc::invalid_argument, "d must be >= 1");
    SequenceStatistics s;
    for (const auto& [m, c] : h.counts) {
        const double nm = double(c);
        const int    lm = total_degree(m);
        s.sufficient += std::pow(nm, 1.0 + 1.0 / d) * std::exp2(-double(lm) / d);
        s.necessary  += nm * nm * std::exp2(-double(lm));
    }
    return s;
}

//
// tail beyond the outermost occupied shell when shell totals keep growing by
// `growth` per level; each shell is bounded as a single cell, which dominates
// any split because both exponents exceed 1. Infinite when the series diverges
//
inline SequenceStatistics statistics_tail(const DyadicHistogram& h, int d, double growth)
{
    require(growth >= 0.0, errc::invalid_argument, "growth must be nonnegative");
    std::map<int, double> shells;
    for (const auto& [m, c] : h.counts) shells[total_degree(m)] += double(c);
    SequenceStatistics t;
    if (shells.empty()) return t;
    const auto [s0, n0] = *shells.rbegin();
    // sum_{k >= 1} (n0 g^k)^p 2^{-(s0 + k) / e}
    auto geometric = [&](double p, double e) {
        const double q = std::pow(growth, p) * std::exp2(-1.0 / e);
        if (q >= 1.0) return std::numeric_limits<double>::infinity();
        return std::pow(n0, p) * std::exp2(-double(s0) / e) * q / (1.0 - q);
    };
    t.sufficient = geometric(1.0 + 1.0 / d, double(d));
    t.necessary  = geometric(2.0, 1.0);
    return t;
}

// A_n^i = r_n^i diag(e^{i theta_{n,i,j}}), j < m_n
inline std::vector<MatrixTuple> build_matrix_sequence(const std::vector<Index>& dims, const RadiiSpec& radii,
                                                      std::uint64_t seed, const SequenceOptions& opt = {})
{
    radii.validate();
    require(dims.size() == radii.size(), errc::dimension_mismatch, "one size per node");
    require(opt.counter_index.empty() || opt.counter_index.size() == radii.size(), errc::dimension_mismatch,
            "counter_index must have one entry per node");
    std::vector<MatrixTuple> out;
    out.reserve(dims.size());
    for (std::size_t n = 0; n < dims.size(); ++n) {
        require(dims[n] >= 1, errc::invalid_argument, "node sizes must be >= 1");
        std::vector<CMatrix> mats;
        for (int i = 0; i < radii.d; ++i) {
            CMatrix a = CMatrix::Zero(dims[n], dims[n]);
            const double r = radii.radius(n, i);
            for (Index j = 0; j < dims[n]; ++j)
                a(j, j) = std::polar(r, random_angle(seed, opt.stream, counter_of(opt, n), std::uint64_t(i), std::uint64_t(j)));
            mats.push_back(std::move(a));
        }
        out.emplace_back(std::move(mats));
    }
    return out;
}

// sum m_n^{1+1/d} 2^{-|alpha_n|/d}
inline double matrix_sequence_statistic(const std::vector<Index>& dims, const RadiiSpec& radii)
{
    require(dims.size() == radii.size(), errc::dimension_mismatch, "one size per node");
    double s = 0;
    for (std::size_t n = 0; n < dims.size(); ++n)
        s += std::pow(double(dims[n]), 1.0 + 1.0 / radii.d) * std::exp2(-double(total_degree(radii.exponents[n])) / radii.d);
    return s;
}

//
// Monte Carlo Riesz bounds for diagonal node sequences with the Szego kernel
//
struct MonteCarloConfig {
    RadiiSpec          radii;
    std::vector<Index> dims;
    int                trials      = 1;
    int                degree      = 40;
    bool               closed_form = true;
    std::uint64_t      seed        = 0;
    unsigned           threads     = 1;
    std::vector<std::uint64_t> counter_index;
};

struct TrialRecord {
    int    trial = 0;
    double lower = 0.0;
    double upper = 0.0;
    double error_bar  = 0.0;
    double sufficient = 0.0;
    double necessary  = 0.0;
};

struct MonteCarloSummary {
    std::vector<TrialRecord> trials;  // ordered by trial index
    double min_lower    = 0.0;
    double median_lower = 0.0;
    double max_upper    = 0.0;
};

inline TrialRecord run_trial(const MonteCarloConfig& c, int t)
{
    SequenceOptions opt{std::uint64_t(t), c.counter_index};
    auto nodes = build_matrix_sequence(c.dims, c.radii, c.seed, opt);
    auto spec  = KernelSpec::szego(c.radii.d);
    auto fam   = c.closed_form ? kernel_family_exact(spec, nodes) : kernel_family(spec, nodes, c.degree);
    auto rb    = riesz_bounds(fam);

    DyadicHistogram h{c.radii.d, {}};
    std::vector<double> mod(static_cast<std::size_t>(c.radii.d));
    for (std::size_t n = 0; n < nodes.size(); ++n) {
        for (int i = 0; i < c.radii.d; ++i) mod[std::size_t(i)] = c.radii.radius(n, i);
        h.add_moduli(mod, c.dims[n]);
    }
    auto st = interpolation_statistics(h, c.radii.d);
    return {t, rb.lower, rb.upper, rb.error_bar, st.sufficient, st.necessary};
}

inline MonteCarloSummary monte_carlo_riesz(const MonteCarloConfig& c)
{
    c.radii.validate();
    require(c.trials >= 1, errc::invalid_argument, "trials must be >= 1");
    require(c.dims.size() == c.radii.size() && !c.dims.empty(), errc::dimension_mismatch, "one size per node, at least one node");
    MonteCarloSummary s;
    s.trials.resize(std::size_t(c.trials));
    parallel_for(std::size_t(c.trials), c.threads, [&](std::size_t t) { s.trials[t] = run_trial(c, int(t)); });

    std::vector<double> lows;
    for (const auto& r : s.trials) lows.push_back(r.lower);
    std::sort(lows.begin(), lows.end());
    s.min_lower    = lows.front();
    const std::size_t k = lows.size();
    s.median_lower = k % 2 ? lows[k / 2] : 0.5 * (lows[k / 2 - 1] + lows[k / 2]);
    for (const auto& r : s.trials) s.max_upper = std::max(s.max_upper, r.upper);
    return s;
}

inline std::string to_csv(const MonteCarloSummary& s)
{
    std::ostringstream os;
    os << "trial,lower,upper,error_bar,sufficient_sum,necessary_sum\n" << std::setprecision(17);
    for (const auto& r : s.trials)
        os << r.trial << ',' << r.lower << ',' << r.upper << ',' << r.error_bar << ',' << r.sufficient << ',' << r.necessary << '\n';
    return os.str();
}

} // namespace rkhs_lab
