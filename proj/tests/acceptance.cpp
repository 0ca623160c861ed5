//
// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.
//
#include "test_util.hpp"

#include <rkhs_lab/rkhs_lab.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>

using namespace rkhs_lab;
using namespace rkhs_test;

namespace {

struct Verdict {
    bool        pass = true;
    std::string detail;
};

std::string sci(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

cplx poly_at(const PolySeries& f, cplx l, cplx g, int dl, int dg)
{
    cplx s = 0;
    for (const auto& [k, a] : f.coeffs) {
        if (k[0] < dl || k[1] < dg) continue;
        double c = 1;
        for (int i = 0; i < dl; ++i) c *= double(k[0] - i);
        for (int i = 0; i < dg; ++i) c *= double(k[1] - i);
        s += a * c * std::pow(l, k[0] - dl) * std::pow(g, k[1] - dg);
    }
    return s;
}

double max_coeff_diff(const KernelVector& a, const KernelVector& b) { return (a.coeffs - b.coeffs).cwiseAbs().maxCoeff(); }

SubspaceFamily family_of(const std::vector<CMatrix>& spans)
{
    Index total = 0;
    std::vector<Index> sizes;
    for (const auto& s : spans) sizes.push_back(s.cols()), total += s.cols();
    CMatrix v(spans.front().rows(), total);
    Index c = 0;
    for (const auto& s : spans) v.middleCols(c, s.cols()) = s, c += s.cols();
    return SubspaceFamily::from_gram(v.adjoint() * v, sizes);
}

CMatrix ambient_basis(const CMatrix& s) { return s * orthonormalize(s.adjoint() * s).basis; }

std::vector<double> ranks_of(const std::vector<double>& x)
{
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
    std::vector<double> r(x.size());
    for (std::size_t k = 0; k < idx.size();) {
        std::size_t e = k;
        while (e + 1 < idx.size() && x[idx[e + 1]] == x[idx[k]]) ++e;
        for (std::size_t q = k; q <= e; ++q) r[idx[q]] = 0.5 * double(k + e);
        k = e + 1;
    }
    return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b)
{
    auto ra = ranks_of(a), rb = ranks_of(b);
    const double n = double(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n, mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t k = 0; k < ra.size(); ++k) {
        sab += (ra[k] - ma) * (rb[k] - mb);
        saa += (ra[k] - ma) * (ra[k] - ma);
        sbb += (rb[k] - mb) * (rb[k] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

// ---------------------------------------------------------------------------

Verdict functional_calculus()
{
    std::mt19937_64 rng(101);
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Index m = 1 + Index(trial % 4);
        auto t = random_commuting(rng, 2, m, 0.5, trial % 2 == 1);
        auto f = random_poly(rng, 2, trial % 6);
        worst = std::max(worst, max_abs(eval_poly(t, f) - eval_cauchy(t, f, 64)));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {worst < 1e-8 && secs < 30, "max entrywise error " + sci(worst) + " (< 1e-8), " + sci(secs) + " s (< 30 s)"};
}

Verdict derivative_example()
{
    std::mt19937_64 rng(102);
    double worst = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const cplx l = random_in_disc(rng, 0.7), g = random_in_disc(rng, 0.7);
        auto f = random_poly(rng, 2, 1 + trial % 6);
        CMatrix expect(2, 2);
        const cplx fz = poly_at(f, l, g, 0, 0);
        expect << fz, 2.0 * poly_at(f, l, g, 1, 0) + poly_at(f, l, g, 0, 1), 0.0, fz;
        worst = std::max(worst, max_abs(eval_poly(example_pair(l, g), f) - expect));
    }
    return {worst <= 1e-10, "max deviation from [[f, 2 d1 f + d2 f], [0, f]] " + sci(worst) + " (<= 1e-10)"};
}

Verdict kernel_coincidence()
{
    std::mt19937_64 rng(103);
    const KernelSpec s = KernelSpec::szego(2);
    const CVector e1 = CVector::Unit(2, 0), e2 = CVector::Unit(2, 1);
    double coincide = 0;
    for (int trial = 0; trial < 10; ++trial) {
        auto t = example_pair(random_in_disc(rng, 0.7), random_in_disc(rng, 0.7));
        auto k11 = kernel_vector(s, t, e1, e1, 30), k22 = kernel_vector(s, t, e2, e2, 30);
        auto k21 = kernel_vector(s, t, e2, e1, 30);
        coincide = std::max({coincide, max_coeff_diff(k11, k22), k21.coeffs.cwiseAbs().maxCoeff()});
    }

    // u^* f(A) v = f(z) u^* v + (2 d1 f + d2 f)(z) conj(u_1) v_2 on this node, so
    // (u, v) ~ (u', v') iff both pairings agree
    int agree = 0, equal_cases = 0;
    for (int trial = 0; trial < 100; ++trial) {
        auto t = example_pair(random_in_disc(rng, 0.7), random_in_disc(rng, 0.7));
        CVector u1 = random_vector(rng, 2), v1 = random_vector(rng, 2), u2 = random_vector(rng, 2), v2 = random_vector(rng, 2);
        const bool truth = trial % 2 == 0;
        if (truth) {
            while (std::abs(u2(0)) < 0.3) u2 = random_vector(rng, 2);
            const cplx a = u1.dot(v1), b = std::conj(u1(0)) * v1(1);
            v2(1) = b / std::conj(u2(0));
            v2(0) = (a - std::conj(u2(1)) * v2(1)) / std::conj(u2(0));
            ++equal_cases;
        }
        const bool moments = moment_equivalence(t, u1, v1, u2, v2, -1, 1e-10);
        auto ka = kernel_vector(s, t, u1, v1, 30), kb = kernel_vector(s, t, u2, v2, 30);
        const double scale = std::max(ka.coeffs.cwiseAbs().maxCoeff(), kb.coeffs.cwiseAbs().maxCoeff());
        const bool kernels = max_coeff_diff(ka, kb) <= 1e-10 * std::max(1.0, scale);
        agree += (moments == kernels && kernels == truth);
    }
    return {coincide <= 1e-12 && agree == 100,
            "kernel coincidence " + sci(coincide) + " (<= 1e-12) at D = 30; verdicts agree on " + std::to_string(agree) +
                "/100 pairs (" + std::to_string(equal_cases) + " equivalent)"};
}

Verdict extension_by_zero()
{
    std::mt19937_64 rng(104);
    double worst_excess = -1e300;
    int instances = 0;
    while (instances < 500) {
        const Index n = 2 + Index(rng() % 7);
        const Index r1 = 1 + Index(rng() % std::uint64_t(n - 1));
        const Index r2 = 1 + Index(rng() % std::uint64_t(n - r1));
        auto f = family_of({random_matrix(rng, n, r1), random_matrix(rng, n, r2)});
        const double s = sin_angle(f, {0}, {1});
        if (s < 1e-6) continue;
        CMatrix t = random_matrix(rng, 1 + Index(rng() % 3), f.ranks[0]);
        worst_excess = std::max(worst_excess, extend_by_zero_norm(t, f) - spectral_norm(t) / s);
        ++instances;
    }

    // T = <., h> with h the principal vector of H closest to F attains the bound
    double worst_gap = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Index n = 3 + Index(rng() % 6);
        const Index r1 = 1 + Index(rng() % std::uint64_t(n / 2)), r2 = 1 + Index(rng() % std::uint64_t(n - r1));
        auto f = family_of({random_matrix(rng, n, r1), random_matrix(rng, n, r2)});
        CMatrix x = f.bases[0].adjoint() * f.block(0, 1) * f.bases[1];
        Eigen::JacobiSVD<CMatrix> svd(x, Eigen::ComputeFullU);
        CMatrix t = svd.matrixU().col(0).adjoint();
        const double bound = 1.0 / sin_angle(f, {0}, {1});
        worst_gap = std::max(worst_gap, std::abs(extend_by_zero_norm(t, f) - bound));
    }
    return {worst_excess <= 1e-9 && worst_gap <= 1e-3,
            "max(ext - |T|/sin) " + sci(worst_excess) + " (<= 1e-9) on 500 pairs; aligned gap " + sci(worst_gap) + " (<= 1e-3)"};
}

Verdict parrott()
{
    std::mt19937_64 rng(105);
    std::uniform_int_distribution<int> dim(1, 5);
    double worst_excess = -1e300, worst_gain = -1e300;
    for (int trial = 0; trial < 200; ++trial) {
        CMatrix a = random_matrix(rng, dim(rng), dim(rng));
        CMatrix b = random_matrix(rng, a.rows(), dim(rng));
        CMatrix c = random_matrix(rng, dim(rng), a.cols());
        if (trial % 3 == 0) a *= 3.0;
        auto r = parrott_complete(a, b, c);
        CMatrix col(a.rows() + c.rows(), a.cols()), row(a.rows(), a.cols() + b.cols());
        col << a, c;
        row << a, b;
        worst_excess = std::max(worst_excess, r.block_norm - std::max(spectral_norm(col), spectral_norm(row)));

        // 41 x 41 grid on D + t E for a random unit direction E, then local refinement of D
        auto norm_at = [&](const CMatrix& d) {
            CMatrix w(a.rows() + c.rows(), a.cols() + b.cols());
            w << a, b, c, d;
            return spectral_norm(w);
        };
        CMatrix e = random_matrix(rng, r.d.rows(), r.d.cols());
        e /= e.norm();
        const double span = 1.0 + r.gamma;
        double best = norm_at(r.d);
        CMatrix best_d = r.d;
        for (int i = 0; i < 41; ++i)
            for (int j = 0; j < 41; ++j) {
                const cplx tz(span * (i - 20) / 20.0, span * (j - 20) / 20.0);
                CMatrix d = r.d + tz * e;
                const double v = norm_at(d);
                if (v < best) best = v, best_d = d;
            }
        std::vector<double> x0(std::size_t(2 * best_d.size()), 0.0);
        auto h = [&](const std::vector<double>& x) {
            CMatrix d = best_d;
            for (Index k = 0; k < d.size(); ++k) d.data()[k] += cplx(x[std::size_t(2 * k)], x[std::size_t(2 * k + 1)]);
            return norm_at(d);
        };
        auto x = detail::coordinate_descent(h, x0, 0.1 * span, 1e-10, 6);
        best = std::min(best, h(x));
        worst_gain = std::max(worst_gain, r.block_norm - best);
    }
    return {worst_excess <= 1e-9 && worst_gain <= 1e-7,
            "max(|W| - max(|[A;C]|, |[A B]|)) " + sci(worst_excess) + " (<= 1e-9); best search gain " + sci(worst_gain) +
                " (<= 1e-7) over 200 shapes"};
}

Verdict one_step()
{
    std::mt19937_64 rng(106);
    double werr = 0, nerr = 0;
    for (int prob = 0; prob < 5; ++prob) {
        std::vector<cplx> z{random_in_disc(rng, 0.9), random_in_disc(rng, 0.9)};
        auto p = InterpolationProblem::scalar(z, z);
        for (int k = 0; k < 10; ++k) {
            const cplx x = random_in_disc(rng, 0.9);
            auto r = one_step_extension(p, {x});
            werr = std::max(werr, std::abs(r.w - x));
            nerr = std::max({nerr, std::abs(r.extended_norm - 1.0), std::abs(r.base_norm - 1.0)});
        }
    }
    return {werr <= 1e-6 && nerr <= 1e-8,
            "|w - phi(z)| " + sci(werr) + " (<= 1e-6), |norm - 1| " + sci(nerr) + " (<= 1e-8) over 5 x 10 extensions"};
}

Verdict onevar_feasibility()
{
    std::mt19937_64 rng(107);
    int decided = 0, agree = 0, feasible = 0;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<cplx> z, w;
        for (int j = 0; j < 3; ++j) {
            z.push_back(random_in_disc(rng, 0.9));
            w.push_back(random_in_disc(rng, trial % 2 ? 1.0 : 0.6));
        }
        auto r = min_norm_onevar(InterpolationProblem::scalar(z, w));
        if (std::abs(r.value - 1.0) < 1e-6) continue;
        ++decided;
        const bool psd = is_psd(pick_matrix_scalar(z, w));
        feasible += psd;
        agree += ((r.value <= 1.0) == psd);
    }
    return {decided > 0 && agree == decided,
            std::to_string(agree) + "/" + std::to_string(decided) + " decided instances agree (" + std::to_string(feasible) +
                " feasible, " + std::to_string(200 - decided) + " in the undecided band)"};
}

Verdict nc_oracle()
{
    std::mt19937_64 rng(108);
    double worst_excess = -1e300, worst_riesz = 0, worst_orth = 0, worst_stein = 0;
    for (int set = 0; set < 20; ++set) {
        std::vector<cplx> a, b;
        std::vector<NCPoint> pts;
        while (a.size() < 3) {
            const cplx x = random_in_disc(rng, 0.99), y = random_in_disc(rng, 0.99);
            if (std::abs(x * y) > 0.7 || std::abs(x * y) < 1e-3) continue;
            a.push_back(x), b.push_back(y);
            pts.push_back(nilpotent_pair(x, y));
        }
        auto o = nilpotent_pair_oracle(a, b);
        NCFamilyOptions opt;
        opt.truncation.max_len = 40;
        opt.auto_increase      = false;
        auto tr = nc_family(pts, opt);
        worst_excess = std::max(worst_excess, (tr.family.joint_gram - o.gram).cwiseAbs().maxCoeff() - tr.family.gram_error);
        worst_riesz  = std::max(worst_riesz, std::abs(riesz_bounds(tr.family).lower - o.riesz.lower));
        worst_stein  = std::max(worst_stein, (nc_family_exact(pts).joint_gram - o.gram).cwiseAbs().maxCoeff());

        // K(e_p, e_q) with the shared constant term removed: the four pieces
        std::vector<std::pair<int, NCSeries>> pieces;
        for (const auto& z : pts) {
            auto vs = nc_node_vectors(z, opt.truncation);
            for (int k = 0; k < 4; ++k) {
                NCSeries s = vs[std::size_t(k)];
                for (auto it = s.coeffs.begin(); it != s.coeffs.end();)
                    it = it->first.len == 0 ? s.coeffs.erase(it) : std::next(it);
                pieces.emplace_back(k, std::move(s));
            }
        }
        for (const auto& [ka, sa] : pieces)
            for (const auto& [kb, sb] : pieces)
                if (ka != kb) worst_orth = std::max(worst_orth, std::abs(nc_inner_product(sa, sb).value));
    }
    return {worst_excess <= 0 && worst_riesz <= 1e-6 && worst_orth <= 1e-12,
            "max(|G_L - G_oracle| - tail bound) " + sci(worst_excess) + " (<= 0); riesz lower gap " + sci(worst_riesz) +
                " (<= 1e-6); piece overlap " + sci(worst_orth) + " (<= 1e-12); exact route " + sci(worst_stein)};
}

Verdict nc_sweep()
{
    // node 2 fixed at p = 0.48; node 1 keeps alpha = 0.9 and moves p toward 0.48
    const cplx a2 = 0.6, b2 = 0.8, p2 = a2 * b2, a1 = 0.9;
    std::vector<double> nc, szego;
    for (int k = 0; k < 30; ++k) {
        const double t  = double(k) / 30.0;
        const cplx   p1 = -0.4 + (p2 + 0.4) * t * (2.0 - t);
        std::vector<cplx> alphas{a1, a2}, betas{p1 / a1, b2};
        auto o = nilpotent_pair_oracle(alphas, betas);
        NCFamilyOptions opt;
        opt.auto_increase = false;
        auto tr = nc_family({nilpotent_pair(a1, p1 / a1), nilpotent_pair(a2, b2)}, opt);
        nc.push_back(riesz_bounds(tr.family).lower);
        szego.push_back(o.szego_riesz.lower);
    }
    int threshold = int(nc.size()) - 1;
    while (threshold > 0 && nc[std::size_t(threshold) - 1] > nc[std::size_t(threshold)]) --threshold;
    const double rho = spearman(nc, szego);
    const bool to_zero = nc.back() < 0.01 * nc.front();
    return {rho >= 0.99 && threshold <= 15 && to_zero,
            "Spearman " + sci(rho) + " (>= 0.99) over 30 points; strictly decreasing from point " + std::to_string(threshold) +
                "; lower " + sci(nc.front()) + " -> " + sci(nc.back())};
}

bool in_cell(double r, int m) { return 1.0 - std::ldexp(1.0, -m) <= r && r < 1.0 - std::ldexp(1.0, -(m + 1)); }

Verdict random_statistics()
{
    std::mt19937_64 rng(110);
    RadiiSpec radii{2, {}};
    for (int n = 0; n < 100000; ++n) radii.exponents.push_back({int(rng() % 53), int(rng() % 12)});
    auto pts = generate_random_sequence(radii, 7);
    std::vector<std::vector<cplx>> zs;
    for (const auto& p : pts) zs.push_back(p.z());
    bool partition = true;
    std::map<MultiIndex, long long> oracle_r, oracle_z;
    for (std::size_t n = 0; n < pts.size(); ++n) {
        MultiIndex mr(2), mz(2);
        for (int i = 0; i < 2; ++i) {
            int hr = 0, hz = 0;
            const double r = pts[n].radius[std::size_t(i)], a = std::abs(zs[n][std::size_t(i)]);
            for (int c = 0; c < 64; ++c) {
                if (in_cell(r, c)) mr[std::size_t(i)] = c, ++hr;
                if (in_cell(a, c)) mz[std::size_t(i)] = c, ++hz;
            }
            partition = partition && hr == 1 && hz == 1;
        }
        ++oracle_r[mr];
        ++oracle_z[mz];
    }
    auto hr = dyadic_histogram(pts, 2);
    auto hz = dyadic_histogram(zs, 2);
    partition = partition && hr.total() == 100000 && hz.total() == 100000 && hr.counts == oracle_r && hz.counts == oracle_z;

    double stat_err = 0;
    for (int d : {1, 2, 3})
        for (int K : {1, 10, 40}) {
            DyadicHistogram h{d, {}};
            for (int k = 0; k < K; ++k) {
                MultiIndex m(std::size_t(d), 0);
                m[std::size_t(k % d)] = k;
                h.counts[m] = 1;
            }
            auto s = interpolation_statistics(h, d);
            const double q = std::exp2(-1.0 / d);
            stat_err = std::max({stat_err, std::abs(s.sufficient - (1 - std::pow(q, K)) / (1 - q)),
                                 std::abs(s.necessary - (1 - std::exp2(-K)) / 0.5)});
        }

    MonteCarloConfig c;
    c.radii = RadiiSpec{2, {{1, 1}, {2, 1}, {2, 3}, {4, 2}, {5, 5}}};
    c.dims  = {2, 1, 2, 1, 3};
    c.trials = 24;
    c.seed   = 99;
    std::string ref;
    bool same = true;
    for (unsigned t : {1u, 4u, 8u}) {
        c.threads = t;
        auto csv  = to_csv(monte_carlo_riesz(c));
        if (ref.empty()) ref = csv;
        same = same && csv == ref;
    }
    return {partition && stat_err <= 1e-12 && same,
            std::string("partition of 1e5 points ") + (partition ? "exact" : "BROKEN") + "; geometric-sum error " + sci(stat_err) +
                " (<= 1e-12); CSV across 1/4/8 threads " + (same ? "identical" : "DIFFERS")};
}

Verdict riesz_soundness()
{
    std::mt19937_64 rng(111);
    long long violations = 0, samples = 0;
    double worst = -1e300;
    for (int fam = 0; fam < 100; ++fam) {
        const Index ambient = 2 + Index(rng() % 19);
        const int count = 1 + int(rng() % 5);
        std::vector<CMatrix> spans;
        for (int k = 0; k < count; ++k) {
            const Index r = 1 + Index(rng() % 3);
            CMatrix s = random_matrix(rng, ambient, std::min(r, ambient));
            if (rng() % 3 == 0) {
                CMatrix t(ambient, s.cols() + 1);
                t << s, s * random_matrix(rng, s.cols(), 1);
                s = t;
            }
            spans.push_back(s);
        }
        auto f = family_of(spans);
        auto r = riesz_bounds(f);
        std::vector<CMatrix> bases;
        for (const auto& s : spans) bases.push_back(ambient_basis(s));
        for (int k = 0; k < 200; ++k) {
            CVector sum = CVector::Zero(ambient);
            double a2 = 0;
            for (const auto& e : bases) {
                CVector h = e * random_vector(rng, e.cols());
                h /= h.norm();
                const cplx a = random_cplx(rng);
                sum += a * h;
                a2 += std::norm(a);
            }
            const double q = sum.squaredNorm() / a2;
            const double slack = r.error_bar + 1e-12;
            worst = std::max({worst, r.lower - slack - q, q - r.upper - slack});
            violations += (q < r.lower - slack || q > r.upper + slack);
            ++samples;
        }
    }
    return {violations == 0,
            std::to_string(violations) + " violations in " + std::to_string(samples) + " samples (max excursion " + sci(worst) + ")"};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"functional calculus: series vs contour quadrature", functional_calculus},
        {"Jordan pair: f(A) = [[f, 2 d1 f + d2 f], [0, f]]", derivative_example},
        {"kernel vector coincidence and moment equivalence", kernel_coincidence},
        {"extension by zero bounded by |T| / sin angle", extension_by_zero},
        {"Parrott completion optimality", parrott},
        {"one-step extension of phi(z) = z", one_step},
        {"one-variable feasibility vs Pick matrix", onevar_feasibility},
        {"NC truncation vs nilpotent oracle", nc_oracle},
        {"NC lower bound tracks the Szego pair", nc_sweep},
        {"random sequence statistics and reproducibility", random_statistics},
        {"Riesz certificate soundness", riesz_soundness},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Verdict v;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            v = criteria[k].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !v.pass;
        std::printf("%s  %2zu  %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), v.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - std::size_t(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
