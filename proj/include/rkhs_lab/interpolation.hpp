#pragma once
//
// Pick-type feasibility at matrix nodes, built on the compression operator R
// acting on the span of the node subspaces.
//
// With K_A(u,v) representing f -> u^* f(A) v, the adjoint of a multiplier
// acts as M_phi^* K_A(u,v) = K_A(phi(A)^* u, v); R is defined by the same
// rule with phi(A_j) replaced by the prescribed target at node j.
//

#include <rkhs_lab/geometry.hpp>

#include <functional>
#include <optional>

namespace rkhs_lab {

// [(1 - w_i conj(w_j)) / (1 - z_i conj(z_j))]
inline CMatrix pick_matrix_scalar(const std::vector<cplx>& nodes, const std::vector<cplx>& targets)
{
    require(nodes.size() == targets.size(), errc::dimension_mismatch, "one target per node");
    for (auto z : nodes) require(std::abs(z) < 1.0, errc::outside_domain, "Pick nodes must lie in the open disc", std::abs(z));
    const Index n = Index(nodes.size());
    CMatrix p(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            p(i, j) = (1.0 - targets[std::size_t(i)] * std::conj(targets[std::size_t(j)]))
                    / (1.0 - nodes[std::size_t(i)] * std::conj(nodes[std::size_t(j)]));
    return p;
}

inline bool is_psd(const CMatrix& h, double slack = default_psd_slack)
{
    return h.rows() == 0 || min_hermitian_eigenvalue(h) >= -slack;
}

struct InterpolationProblem {
    KernelSpec               spec;
    std::vector<MatrixTuple> nodes;
    std::vector<CMatrix>     targets;
    int                      degree      = 40;
    bool                     closed_form = false;  // exact Gram instead of truncation at `degree`
    double                   rank_tol    = default_rank_tol;
    unsigned                 threads     = 1;

    void validate() const
    {
        spec.validate();
        require(nodes.size() == targets.size(), errc::dimension_mismatch, "one target per node");
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            require(nodes[j].d() == spec.d, errc::dimension_mismatch, "node and kernel have different d");
            require(targets[j].rows() == nodes[j].m() && targets[j].cols() == nodes[j].m(), errc::dimension_mismatch,
                    "target size must match its node");
        }
        require(closed_form || degree >= 0, errc::invalid_argument, "degree must be >= 0");
    }

    static InterpolationProblem scalar(const std::vector<cplx>& nodes, const std::vector<cplx>& targets, int degree = 40,
                                       bool closed_form = true)
    {
        InterpolationProblem p;
        p.spec        = KernelSpec::szego(1);
        p.degree      = degree;
        p.closed_form = closed_form;
        require(nodes.size() == targets.size(), errc::dimension_mismatch, "one target per node");
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            p.nodes.push_back(MatrixTuple::scalar({nodes[j]}));
            p.targets.push_back(CMatrix::Constant(1, 1, targets[j]));
        }
        return p;
    }
};

namespace detail {

// joint Gram of the node spanning vectors followed by extra nodes
inline SubspaceFamily problem_family(const InterpolationProblem& p, const std::vector<MatrixTuple>& extra = {})
{
    std::vector<MatrixTuple> all = p.nodes;
    all.insert(all.end(), extra.begin(), extra.end());
    return p.closed_form ? kernel_family_exact(p.spec, all, p.threads, p.rank_tol)
                         : kernel_family(p.spec, all, p.degree, p.threads, p.rank_tol);
}

// coefficient action of R on the spanning vectors: R V = V S
inline CMatrix target_action(const InterpolationProblem& p)
{
    Index n = 0;
    for (const auto& t : p.nodes) n += t.m() * t.m();
    CMatrix s = CMatrix::Zero(n, n);
    Index off = 0;
    for (std::size_t j = 0; j < p.nodes.size(); ++j) {
        const Index m = p.nodes[j].m();
        const CMatrix& tg = p.targets[j];
        // K(T^* e_p, e_q) = sum_r conj(T(p,r)) K(e_r, e_q)
        for (Index pp = 0; pp < m; ++pp)
            for (Index q = 0; q < m; ++q)
                for (Index r = 0; r < m; ++r) s(off + r * m + q, off + pp * m + q) = std::conj(tg(pp, r));
        off += m * m;
    }
    return s;
}

} // namespace detail

struct CompressionOperator {
    CMatrix basis;        // C: V C is an orthonormal basis of the span
    CMatrix matrix;       // R in those coordinates
    CMatrix action;       // S with R V = V S
    double  norm = 0.0;
    double  error_bar = 0.0;
    double  reproduction_residual = 0.0;  // max_k ||R v_k - V S e_k|| inside the retained span
    double  dropped_mass = 0.0;           // sqrt of the largest discarded Gram eigenvalue
    double  min_eigenvalue = 0.0;         // smallest retained Gram eigenvalue
    int     rank = 0;
};

inline CompressionOperator compression_from_gram(const CMatrix& g, const CMatrix& s, double gram_error, double rank_tol)
{
    CompressionOperator r;
    auto o = orthonormalize(g, rank_tol);
    r.basis  = o.basis;
    r.rank   = o.rank;
    r.action = s;
    if (o.rank == 0) return r;
    r.min_eigenvalue = o.eigenvalues(o.eigenvalues.size() - o.rank);
    const double gerr = double(g.rows()) * gram_error;
    require(gerr == 0.0 || r.min_eigenvalue >= 1e3 * gerr, errc::ill_conditioned,
            "smallest retained Gram eigenvalue is within 1e3 of the truncation error", r.min_eigenvalue);

    r.matrix = o.basis.adjoint() * g * s * o.basis;
    r.norm   = spectral_norm(r.matrix);

    // E-coordinates of R v_k - V S e_k, using E^* V = C^* G
    CMatrix ev = o.basis.adjoint() * g;
    CMatrix z  = r.matrix * ev - ev * s;
    for (Index k = 0; k < z.cols(); ++k) r.reproduction_residual = std::max(r.reproduction_residual, z.col(k).norm());
    if (o.rank < g.rows()) r.dropped_mass = std::sqrt(std::max(0.0, o.eigenvalues(g.rows() - o.rank - 1)));

    if (gerr > 0) {
        const double c2 = std::pow(spectral_norm(o.basis), 2);
        const double e  = gerr * c2;
        const double s2 = std::pow(spectral_norm(s), 2);
        const double d2 = e * (s2 + r.norm * r.norm) / std::max(1e-300, 1.0 - e);
        r.error_bar     = r.norm > 0 ? std::min(std::sqrt(d2), d2 / r.norm) : std::sqrt(d2);
    }
    return r;
}

inline CompressionOperator compression_operator(const InterpolationProblem& p)
{
    p.validate();
    require(!p.nodes.empty(), errc::invalid_argument, "problem has no nodes");
    auto f = detail::problem_family(p);
    return compression_from_gram(f.joint_gram, detail::target_action(p), f.gram_error, p.rank_tol);
}

struct NormEstimate {
    double value     = 0.0;
    double error_bar = 0.0;
};

// ||R|| on the Szego span; equals the least sup norm of an interpolant in one variable
inline NormEstimate min_norm_onevar(const InterpolationProblem& p)
{
    require(p.spec.d == 1 && p.spec.alpha == std::vector<int>{1}, errc::invalid_argument,
            "one-variable minimal norm needs d = 1 and the Szego kernel");
    auto r = compression_operator(p);
    const double roundoff = 64 * std::numeric_limits<double>::epsilon() * (1.0 + r.norm) * double(r.basis.rows());
    return {r.norm, r.error_bar + roundoff};
}

//
// Parrott completion of [[A, B], [C, D]]
//
struct ParrottResult {
    CMatrix d;
    double  gamma      = 0.0;
    double  block_norm = 0.0;
    bool    closed_form = true;  // false when the fallback search produced d
};

namespace detail {

inline CMatrix assemble_blocks(const CMatrix& a, const CMatrix& b, const CMatrix& c, const CMatrix& d)
{
    CMatrix w(a.rows() + c.rows(), a.cols() + b.cols());
    w.topLeftCorner(a.rows(), a.cols())     = a;
    w.topRightCorner(b.rows(), b.cols())    = b;
    w.bottomLeftCorner(c.rows(), c.cols())  = c;
    w.bottomRightCorner(d.rows(), d.cols()) = d;
    return w;
}

inline double block_norm(const CMatrix& a, const CMatrix& b, const CMatrix& c, const CMatrix& d)
{
    return spectral_norm(assemble_blocks(a, b, c, d));
}

// D = -C V diag(sigma / (g^2 - sigma^2)) U^* B with A = U diag(sigma) V^*
inline CMatrix parrott_closed_form(const CMatrix& a, const CMatrix& b, const CMatrix& c, double g)
{
    if (a.size() == 0 || b.cols() == 0 || c.rows() == 0) return CMatrix::Zero(c.rows(), b.cols());
    Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const Index k  = sv.size();
    CMatrix mid = CMatrix::Zero(a.cols(), a.rows());
    const double g2 = g * g;
    for (Index i = 0; i < k; ++i) {
        const double gap = g2 - sv(i) * sv(i);
        if (gap > 1e-12 * g2) mid(i, i) = sv(i) / gap;
    }
    return -c * svd.matrixV() * mid * svd.matrixU().adjoint() * b;
}

inline double golden_section(const std::function<double(double)>& h, double lo, double hi, double tol)
{
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = h(x1), f2 = h(x2);
    while (hi - lo > tol) {
        if (f1 <= f2) {
            hi = x2, x2 = x1, f2 = f1;
            x1 = hi - phi * (hi - lo), f1 = h(x1);
        } else {
            lo = x1, x1 = x2, f1 = f2;
            x2 = lo + phi * (hi - lo), f2 = h(x2);
        }
    }
    return 0.5 * (lo + hi);
}

//
// minimize a convex function of n real parameters by cyclic golden-section
// line searches with a shrinking bracket
//
inline std::vector<double> coordinate_descent(const std::function<double(const std::vector<double>&)>& h,
                                              std::vector<double> x, double radius, double tol, int sweeps = 60)
{
    double best = h(x);
    for (int s = 0; s < sweeps && radius > tol; ++s) {
        const double before = best;
        for (std::size_t i = 0; i < x.size(); ++i) {
            auto line = [&](double t) {
                auto y = x;
                y[i]   = t;
                return h(y);
            };
            const double t  = golden_section(line, x[i] - radius, x[i] + radius, tol);
            const double ft = line(t);
            if (ft < best) x[i] = t, best = ft;
        }
        if (before - best < 1e-15 * std::max(1.0, best)) radius *= 0.25;
    }
    return x;
}

} // namespace detail

inline ParrottResult parrott_complete(const CMatrix& a, const CMatrix& b, const CMatrix& c)
{
    require(a.rows() == b.rows() && a.cols() == c.cols(), errc::dimension_mismatch, "Parrott blocks are not conformable");
    ParrottResult r;
    CMatrix col(a.rows() + c.rows(), a.cols()), row(a.rows(), a.cols() + b.cols());
    col << a, c;
    row << a, b;
    r.gamma = std::max(spectral_norm(col), spectral_norm(row));
    const double tol = 1e-9 * std::max(1.0, r.gamma);

    r.d          = detail::parrott_closed_form(a, b, c, r.gamma);
    r.block_norm = detail::block_norm(a, b, c, r.d);
    if (r.block_norm <= r.gamma + tol) return r;

    // continuation through slightly larger gamma, then direct local search
    r.closed_form = false;
    for (double eps : {1e-12, 1e-10, 1e-8, 1e-6}) {
        CMatrix d   = detail::parrott_closed_form(a, b, c, r.gamma * (1.0 + eps));
        double  nrm = detail::block_norm(a, b, c, d);
        if (nrm < r.block_norm) r.d = d, r.block_norm = nrm;
    }
    if (r.block_norm <= r.gamma + tol) return r;

    const Index n = r.d.size();
    std::vector<double> x(std::size_t(2 * n));
    for (Index k = 0; k < n; ++k) x[std::size_t(2 * k)] = r.d(k).real(), x[std::size_t(2 * k + 1)] = r.d(k).imag();
    auto unpack = [&](const std::vector<double>& y) {
        CMatrix d(r.d.rows(), r.d.cols());
        for (Index k = 0; k < n; ++k) d(k) = cplx(y[std::size_t(2 * k)], y[std::size_t(2 * k + 1)]);
        return d;
    };
    auto h = [&](const std::vector<double>& y) { return detail::block_norm(a, b, c, unpack(y)); };
    x = detail::coordinate_descent(h, x, std::max(1.0, r.gamma), 1e-12);
    CMatrix d = unpack(x);
    double nrm = detail::block_norm(a, b, c, d);
    if (nrm < r.block_norm) r.d = d, r.block_norm = nrm;
    return r;
}

//
// extend R to span{H_0, k_z} with R k_z = conj(w) k_z and minimize the norm
// over w. In the domain basis [E, f] (f the normalized part of k_z off H_0)
// and codomain basis [Q_g, k_hat], only the corner block depends on w, and it
// ranges over all of C, so the minimum is the Parrott value
//
struct ExtensionResult {
    cplx   w;
    double extended_norm     = 0.0;
    double parrott_prediction = 0.0;
    double base_norm         = 0.0;  // ||R||
    double compressed_norm   = 0.0;  // ||Q_g^* R_w||
    bool   consistent        = false;
    double residual_ratio    = 0.0;  // ||k_z - P_{H_0} k_z||^2 / ||k_z||^2
};

inline ExtensionResult one_step_extension(const InterpolationProblem& p, const std::vector<cplx>& z)
{
    p.validate();
    require(int(z.size()) == p.spec.d, errc::dimension_mismatch, "extension point dimension differs from kernel");
    detail::require_in_disc(z, "extension point");

    auto fam = detail::problem_family(p, {MatrixTuple::scalar(z)});
    const Index n = fam.joint_gram.rows() - 1;
    CMatrix g0 = fam.joint_gram.topLeftCorner(n, n);
    auto comp  = compression_from_gram(g0, detail::target_action(p), fam.gram_error, p.rank_tol);
    const int r = comp.rank;

    const CMatrix& c0 = comp.basis;
    CVector gk  = c0.adjoint() * fam.joint_gram.col(n).head(n);  // E^* k_z
    const double kk   = fam.joint_gram(n, n).real();
    const double tau2 = kk - gk.squaredNorm();
    ExtensionResult res;
    res.residual_ratio = tau2 / kk;
    require(res.residual_ratio > p.rank_tol, errc::kernel_in_span, "k_z lies in the span of the node subspaces",
            res.residual_ratio);
    const double tau = std::sqrt(tau2), knorm = std::sqrt(kk);

    const CMatrix& re = comp.matrix;
    CVector reg = r > 0 ? CVector(re * gk) : CVector(0);

    // M_w in the orthonormal basis [E, f]
    auto m_of = [&](cplx w) {
        CMatrix m = CMatrix::Zero(r + 1, r + 1);
        if (r > 0) {
            m.topLeftCorner(r, r) = re;
            m.col(r).head(r)      = (std::conj(w) * gk - reg) / tau;
        }
        m(r, r) = std::conj(w);
        return m;
    };

    // unitary U = [Q_g, kappa], kappa the coordinates of k_hat
    CVector kappa(r + 1);
    kappa.head(r) = gk / knorm;
    kappa(r)      = tau / knorm;
    Eigen::HouseholderQR<CMatrix> qr{CMatrix(kappa)};
    CMatrix u  = qr.householderQ() * CMatrix::Identity(r + 1, r + 1);
    CMatrix qg = u.rightCols(r);
    CVector kh = u.col(0);

    CMatrix m0  = m_of(0.0);
    CMatrix blk_a = qg.adjoint() * m0.leftCols(r);
    CMatrix blk_b = qg.adjoint() * m0.rightCols(1);
    CMatrix blk_c = kh.adjoint() * m0.leftCols(r);
    auto par = parrott_complete(blk_a, blk_b, blk_c);

    // D(w) = kh^* M_w e_r is affine in conj(w)
    const cplx d0 = (kh.adjoint() * m0.col(r))(0);
    const cplx d1 = (kh.adjoint() * (m_of(1.0).col(r) - m0.col(r)))(0);
    cplx w = std::conj((par.d(0, 0) - d0) / d1);

    res.base_norm          = comp.norm;
    res.compressed_norm    = spectral_norm(qg.adjoint() * m0);
    res.parrott_prediction = par.gamma;

    auto h = [&](const std::vector<double>& x) { return spectral_norm(m_of(cplx(x[0], x[1]))); };
    std::vector<double> x{w.real(), w.imag()};
    const double start = h(x);
    const double scale = std::max({1.0, std::abs(w), comp.norm});
    auto refined = detail::coordinate_descent(h, x, 1e-3 * scale, 1e-10 * scale);
    if (h(refined) < start) x = refined;

    res.w             = cplx(x[0], x[1]);
    res.extended_norm = h(x);
    res.consistent    = std::abs(res.extended_norm - res.parrott_prediction) <= 1e-8 * std::max(1.0, res.parrott_prediction);
    return res;
}

//
// bracket for the Gleason-type separation of a matrix node from the others:
// 1 / sup_k ||R^k|| over the kernel family (targets Id at the node, 0 at the
// others) is an upper bound; a polynomial witness phi with phi(node) = Id,
// phi(others) = 0 and certified sup norm gives the lower bound 1 / ||phi||
//
struct GleasonBracket {
    double upper_bound = 1.0;  // on rho_G
    double lower_bound = 0.0;
    std::vector<double> family_norms;
    double family_sup = 1.0;
    std::optional<PolySeries> witness;
    double witness_sup_bound = std::numeric_limits<double>::infinity();
    double witness_residual  = 0.0;
};

// sup over T^d of |phi|, certified through the Lipschitz bound of a grid
inline double certified_sup_norm(const PolySeries& phi, int grid = 0)
{
    const int d = phi.d;
    if (grid <= 0) grid = d == 1 ? 4096 : (d == 2 ? 256 : 32);
    std::vector<cplx> pts(static_cast<std::size_t>(grid));
    for (int k = 0; k < grid; ++k) pts[std::size_t(k)] = std::polar(1.0, 2.0 * std::numbers::pi * k / grid);
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    std::vector<cplx> z(static_cast<std::size_t>(d));
    double mx = 0;
    while (true) {
        for (int i = 0; i < d; ++i) z[std::size_t(i)] = pts[std::size_t(idx[std::size_t(i)])];
        mx = std::max(mx, std::abs(phi(z)));
        int pos = 0;
        while (pos < d && ++idx[std::size_t(pos)] == grid) idx[std::size_t(pos++)] = 0;
        if (pos == d) break;
    }
    return mx + std::numbers::pi / grid * phi.lipschitz_bound();
}

//
// least-squares polynomial of degree <= D with phi(A_j) = T_j, minimal l2
// coefficients; returns nullopt if the constraints are not met to tol
//
inline std::optional<PolySeries> interpolating_polynomial(const std::vector<MatrixTuple>& nodes,
                                                          const std::vector<CMatrix>& targets, int d, int D,
                                                          double tol, double* residual = nullptr)
{
    auto set = graded_indices(d, D);
    Index rows = 0;
    for (const auto& t : nodes) rows += t.m() * t.m();
    CMatrix a(rows, Index(set->list.size()));
    CVector rhs(rows);
    Index off = 0;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        const Index m = nodes[j].m();
        for (std::size_t c = 0; c < set->list.size(); ++c) {
            PolySeries mono(d, D);
            mono.add(set->list[c], 1.0);
            CMatrix v = eval_poly(nodes[j], mono);
            a.block(off, Index(c), m * m, 1) = Eigen::Map<CVector>(v.data(), m * m);
        }
        rhs.segment(off, m * m) = Eigen::Map<const CVector>(targets[j].data(), m * m);
        off += m * m;
    }
    CVector x = a.completeOrthogonalDecomposition().solve(rhs);
    const double res = (a * x - rhs).norm();
    if (residual) *residual = res;
    if (!(res <= tol)) return std::nullopt;
    PolySeries phi(d, D);
    for (std::size_t c = 0; c < set->list.size(); ++c)
        if (x(Index(c)) != cplx(0.0)) phi.add(set->list[c], x(Index(c)));
    return phi;
}

inline std::vector<KernelSpec> default_kernel_family(int d, int max_alpha = 3)
{
    std::vector<KernelSpec> fam;
    std::vector<int> a(static_cast<std::size_t>(d), 1);
    while (true) {
        fam.emplace_back(d, a);
        int pos = 0;
        while (pos < d && ++a[std::size_t(pos)] > max_alpha) a[std::size_t(pos++)] = 1;
        if (pos == d) break;
    }
    return fam;
}

struct GleasonOptions {
    int      degree        = 40;
    bool     closed_form   = true;
    int      witness_max_degree = 12;
    unsigned threads       = 1;
    std::optional<PolySeries> witness;  // caller-supplied
};

inline GleasonBracket gleason_matrix_lower_upper(const std::vector<KernelSpec>& family, const MatrixTuple& node,
                                                 const std::vector<MatrixTuple>& others, const GleasonOptions& opt = {})
{
    require(!family.empty(), errc::family_empty, "kernel family is empty");
    GleasonBracket b;
    const int d = node.d();

    std::vector<MatrixTuple> nodes{node};
    std::vector<CMatrix> targets{CMatrix::Identity(node.m(), node.m())};
    for (const auto& o : others) {
        nodes.push_back(o);
        targets.push_back(CMatrix::Zero(o.m(), o.m()));
    }

    b.family_norms.assign(family.size(), 0.0);
    parallel_for(family.size(), opt.threads, [&](std::size_t k) {
        InterpolationProblem p;
        p.spec        = family[k];
        p.nodes       = nodes;
        p.targets     = targets;
        p.degree      = opt.degree;
        p.closed_form = opt.closed_form;
        auto r        = compression_operator(p);
        b.family_norms[k] = r.norm - r.error_bar;
    });
    b.family_sup  = *std::max_element(b.family_norms.begin(), b.family_norms.end());
    b.upper_bound = b.family_sup > 0 ? std::min(1.0, 1.0 / b.family_sup) : 1.0;

    auto consider = [&](const PolySeries& phi, double resid) {
        const double s = certified_sup_norm(phi);
        if (s < b.witness_sup_bound) {
            b.witness_sup_bound = s;
            b.witness           = phi;
            b.witness_residual  = resid;
        }
    };
    if (opt.witness) {
        double resid = 0;
        for (std::size_t j = 0; j < nodes.size(); ++j) resid = std::max(resid, (eval_poly(nodes[j], *opt.witness) - targets[j]).norm());
        require(resid <= 1e-8, errc::invalid_argument, "supplied witness does not interpolate the targets", resid);
        consider(*opt.witness, resid);
    } else {
        for (int D = 0; D <= opt.witness_max_degree; ++D) {
            double resid = 0;
            if (auto phi = interpolating_polynomial(nodes, targets, d, D, 1e-10, &resid)) consider(*phi, resid);
        }
    }
    if (b.witness) b.lower_bound = std::min(b.upper_bound, 1.0 / b.witness_sup_bound);
    return b;
}

} // namespace rkhs_lab
