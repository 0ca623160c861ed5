#pragma once
//
// Distances on the polydisc and angle diagnostics for finite families of
// subspaces. Subspaces are described only
// through the joint Gram matrix of their spanning vectors, so the same code
// serves every ambient representation.
//

#include <rkhs_lab/rkhs_kernels.hpp>

#include <limits>
#include <numeric>

namespace rkhs_lab {

// |(w - z) / (1 - conj(w) z)|
inline double pseudo_hyperbolic(cplx z, cplx w)
{
    require(std::abs(z) < 1.0 && std::abs(w) < 1.0, errc::outside_domain, "pseudo-hyperbolic distance needs points in the open disc");
    return std::abs((w - z) / (1.0 - std::conj(w) * z));
}

inline double gleason_polydisc(const std::vector<cplx>& z, const std::vector<cplx>& w)
{
    require(z.size() == w.size(), errc::dimension_mismatch, "points have different dimension");
    double g = 0;
    for (std::size_t i = 0; i < z.size(); ++i) g = std::max(g, pseudo_hyperbolic(z[i], w[i]));
    return g;
}

struct SeparationReport {
    Eigen::MatrixXd      pairwise;
    double               weak_constant = 0.0;
    std::vector<double>  strong_products;
    double               strong_constant = 0.0;
};

inline SeparationReport separation_report(const std::vector<std::vector<cplx>>& points)
{
    const Index n = Index(points.size());
    require(n >= 2, errc::invalid_argument, "separation report needs at least two points");
    SeparationReport r;
    r.pairwise = Eigen::MatrixXd::Zero(n, n);
    for (Index a = 0; a < n; ++a)
        for (Index b = a + 1; b < n; ++b)
            r.pairwise(a, b) = r.pairwise(b, a) = gleason_polydisc(points[std::size_t(a)], points[std::size_t(b)]);
    r.weak_constant = std::numeric_limits<double>::infinity();
    for (Index a = 0; a < n; ++a) {
        double prod = 1.0;
        for (Index b = 0; b < n; ++b) {
            if (b == a) continue;
            prod *= r.pairwise(a, b);
            r.weak_constant = std::min(r.weak_constant, r.pairwise(a, b));
        }
        r.strong_products.push_back(prod);
    }
    r.strong_constant = *std::min_element(r.strong_products.begin(), r.strong_products.end());
    return r;
}

//
// a finite family of subspaces H_1..H_N given by the joint Gram G = V^* V of
// their concatenated spanning vectors; block n owns columns
// [offsets[n], offsets[n+1])
//
struct SubspaceFamily {
    CMatrix              joint_gram;
    std::vector<Index>   offsets{0};
    std::vector<CMatrix> bases;  // orthonormal coordinates per block
    std::vector<int>     ranks;
    double               gram_error = 0.0;  // entrywise bound on |G - G_true|
    double               rank_tol   = default_rank_tol;

    std::size_t size() const { return bases.size(); }

    Index block_size(std::size_t n) const { return offsets[n + 1] - offsets[n]; }

    static SubspaceFamily from_gram(CMatrix g, const std::vector<Index>& sizes, double gram_error = 0.0,
                                    double rank_tol = default_rank_tol)
    {
        SubspaceFamily f;
        f.rank_tol = rank_tol;
        for (Index s : sizes) f.offsets.push_back(f.offsets.back() + s);
        require(g.rows() == f.offsets.back() && g.cols() == f.offsets.back(), errc::dimension_mismatch,
                "joint Gram size differs from the sum of block sizes");
        f.joint_gram = std::move(g);
        f.gram_error = gram_error;
        for (std::size_t n = 0; n < sizes.size(); ++n) {
            auto o = orthonormalize(f.block(n, n), rank_tol);
            f.bases.push_back(std::move(o.basis));
            f.ranks.push_back(o.rank);
        }
        return f;
    }

    CMatrix block(std::size_t a, std::size_t b) const
    {
        return joint_gram.block(offsets[a], offsets[b], block_size(a), block_size(b));
    }

    // Gram of the spanning vectors of the listed blocks
    CMatrix sub_gram(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) const
    {
        Index nr = 0, nc = 0;
        for (auto a : rows) nr += block_size(a);
        for (auto b : cols) nc += block_size(b);
        CMatrix g(nr, nc);
        Index r0 = 0;
        for (auto a : rows) {
            Index c0 = 0;
            for (auto b : cols) {
                g.block(r0, c0, block_size(a), block_size(b)) = block(a, b);
                c0 += block_size(b);
            }
            r0 += block_size(a);
        }
        return g;
    }

    // B = C^* G C with C = blockdiag(bases): Gram of the orthonormal coordinates
    CMatrix coordinate_gram() const
    {
        Index total = 0;
        std::vector<Index> roff{0};
        for (int r : ranks) roff.push_back(roff.back() + r), total += r;
        CMatrix b(total, total);
        for (std::size_t x = 0; x < size(); ++x)
            for (std::size_t y = 0; y < size(); ++y)
                b.block(roff[x], roff[y], ranks[x], ranks[y]) = bases[x].adjoint() * block(x, y) * bases[y];
        return b;
    }

    // operator-norm bound of the perturbation of coordinate_gram induced by gram_error
    double coordinate_error() const
    {
        if (gram_error == 0.0) return 0.0;
        double c2 = 0;
        for (const auto& b : bases) c2 = std::max(c2, b.size() ? spectral_norm(b) : 0.0);
        return c2 * c2 * double(joint_gram.rows()) * gram_error;
    }
};

namespace detail {

inline std::vector<std::size_t> complement(std::size_t n, const std::vector<std::size_t>& sigma)
{
    std::vector<std::size_t> c;
    for (std::size_t k = 0; k < n; ++k)
        if (std::find(sigma.begin(), sigma.end(), k) == sigma.end()) c.push_back(k);
    return c;
}

// orthonormal basis of the span of the listed blocks and the cosine operator X = E_a^* E_b
struct SplitGeometry {
    int     rank_a = 0, rank_b = 0;
    CMatrix x;
};

inline SplitGeometry split_geometry(const SubspaceFamily& f, const std::vector<std::size_t>& a,
                                    const std::vector<std::size_t>& b)
{
    SplitGeometry s;
    auto oa  = orthonormalize(f.sub_gram(a, a), f.rank_tol);
    auto ob  = orthonormalize(f.sub_gram(b, b), f.rank_tol);
    s.rank_a = oa.rank;
    s.rank_b = ob.rank;
    s.x      = oa.basis.adjoint() * f.sub_gram(a, b) * ob.basis;
    return s;
}

inline double largest_singular(const CMatrix& x) { return x.size() == 0 ? 0.0 : spectral_norm(x); }

} // namespace detail

//
// sine of the least angle between span(blocks a) and span(blocks b):
// sqrt(1 - sigma_max^2) with sigma_max the largest cosine
//
inline double sin_angle(const SubspaceFamily& f, const std::vector<std::size_t>& a, const std::vector<std::size_t>& b)
{
    auto s = detail::split_geometry(f, a, b);
    require(s.rank_a > 0 && s.rank_b > 0, errc::rank_zero, "angle needs two nonzero subspaces");
    const double c = std::min(1.0, detail::largest_singular(s.x));
    return std::sqrt(std::max(0.0, 1.0 - c * c));
}

// first block against second block of a two-block joint Gram
inline double sin_angle(const CMatrix& joint_gram, Index size_a)
{
    auto f = SubspaceFamily::from_gram(joint_gram, {size_a, joint_gram.rows() - size_a});
    return sin_angle(f, {0}, {1});
}

struct RieszReport {
    double lower = 0.0;
    double upper = 0.0;
    double riesz_constant_estimate = std::numeric_limits<double>::infinity();
    bool   block_refined = false;
    double error_bar = 0.0;  // eigenvalue uncertainty from Gram truncation error
    CVector lower_witness;   // orthonormal coordinates attaining lower
    CVector upper_witness;
};

//
// extreme eigenvalues of the Gram of concatenated orthonormal bases. Any
// coordinate vector x = (x_1, ..., x_N) is a choice h_n = E_n x_n / |x_n| with
// weights |x_n|, so these are the exact subspace Riesz bounds; the eigenvector
// witnesses are verified and block_refined reports that check
//
inline RieszReport riesz_bounds(const SubspaceFamily& f)
{
    RieszReport r;
    CMatrix b = f.coordinate_gram();
    require(b.rows() > 0, errc::singular_gram, "family spans the zero subspace");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (b + b.adjoint()));
    r.lower = std::max(0.0, es.eigenvalues()(0));
    r.upper = es.eigenvalues()(b.rows() - 1);
    require(r.upper > 0, errc::singular_gram, "largest eigenvalue of the block Gram is not positive", r.upper);
    r.lower_witness = es.eigenvectors().col(0);
    r.upper_witness = es.eigenvectors().col(b.rows() - 1);
    r.error_bar     = f.coordinate_error();

    const double ql = r.lower_witness.dot(b * r.lower_witness).real();
    const double qu = r.upper_witness.dot(b * r.upper_witness).real();
    const double scale = std::max(1.0, r.upper);
    r.block_refined = std::abs(ql - es.eigenvalues()(0)) <= 1e-12 * scale && std::abs(qu - r.upper) <= 1e-12 * scale;

    r.riesz_constant_estimate = r.lower > 0 ? std::max(std::sqrt(r.upper), 1.0 / std::sqrt(r.lower))
                                            : std::numeric_limits<double>::infinity();
    return r;
}

// square of the best Bessel constant over unit-vector choices
inline double bessel_bound(const SubspaceFamily& f)
{
    CMatrix b = f.coordinate_gram();
    if (b.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (b + b.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(b.rows() - 1);
}

//
// norm of the projection onto span{H_j : j in sigma} along span{H_j : j not in
// sigma}; with X the cosine operator between orthonormal bases this is
// 1 / sqrt(1 - ||X||^2)
//
inline double skew_projection_norm(const SubspaceFamily& f, const std::vector<std::size_t>& sigma)
{
    auto rest = detail::complement(f.size(), sigma);
    auto s    = detail::split_geometry(f, sigma, rest);
    if (s.rank_a == 0) return 0.0;
    if (s.rank_b == 0) return 1.0;
    const double c   = detail::largest_singular(s.x);
    const double gap = 1.0 - c * c;
    require(gap > f.rank_tol, errc::degenerate_split, "the two spans intersect within rank tolerance", gap);
    return 1.0 / std::sqrt(gap);
}

//
// T given in the orthonormal coordinates of H = block 0 (columns = rank of H);
// norm of T on H extended by 0 on F = block 1, over span{H, F}:
// lambda_max of J^{-1/2} diag(T^* T, 0) J^{-1/2}, J the Gram of [E_H, E_F]
//
inline double extend_by_zero_norm(const CMatrix& t, const SubspaceFamily& f)
{
    require(f.size() == 2, errc::invalid_argument, "extension needs a family of exactly two blocks (H, F)");
    require(t.cols() == f.ranks[0], errc::dimension_mismatch, "operator columns must match the rank of H");
    const int rh = f.ranks[0], rf = f.ranks[1];
    if (rh == 0) return 0.0;
    CMatrix x = f.bases[0].adjoint() * f.block(0, 1) * f.bases[1];
    const double c = detail::largest_singular(x);
    require(1.0 - c * c > f.rank_tol, errc::degenerate_split, "H and F intersect within rank tolerance", 1.0 - c * c);

    CMatrix j = CMatrix::Identity(rh + rf, rh + rf);
    j.topRightCorner(rh, rf)    = x;
    j.bottomLeftCorner(rf, rh)  = x.adjoint();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(j);
    CMatrix jih = es.operatorInverseSqrt();
    CMatrix a   = CMatrix::Zero(rh + rf, rh + rf);
    a.topLeftCorner(rh, rh) = t.adjoint() * t;
    CMatrix m = jih * a * jih;
    Eigen::SelfAdjointEigenSolver<CMatrix> em(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, em.eigenvalues()(rh + rf - 1)));
}

struct StrongProductCertificate {
    std::vector<double> sines;   // s_n = sin angle(H_n, span of the others)
    double product = 1.0;        // prod s_n
    double projection_norm_bound = 1.0;  // prod 1 / s_n^2
};

inline StrongProductCertificate strong_product_certificate(const SubspaceFamily& f)
{
    StrongProductCertificate c;
    if (f.size() <= 1) {
        c.sines.assign(f.size(), 1.0);
        return c;
    }
    for (std::size_t n = 0; n < f.size(); ++n) {
        auto rest = detail::complement(f.size(), {n});
        auto s    = detail::split_geometry(f, {n}, rest);
        double sn = 1.0;
        if (s.rank_a > 0 && s.rank_b > 0) {
            const double cmax = std::min(1.0, detail::largest_singular(s.x));
            sn = std::sqrt(std::max(0.0, 1.0 - cmax * cmax));
        }
        c.sines.push_back(sn);
        c.product *= sn;
    }
    c.projection_norm_bound = c.product > 0 ? 1.0 / (c.product * c.product) : std::numeric_limits<double>::infinity();
    return c;
}

//
// families of node subspaces: truncated route (error-bounded Gram) and the
// exact closed-form route
//
inline SubspaceFamily kernel_family(const KernelSpec& spec, const std::vector<MatrixTuple>& nodes, int D,
                                    unsigned threads = 1, double rank_tol = default_rank_tol)
{
    std::vector<KernelVector> all;
    std::vector<Index> sizes;
    for (const auto& t : nodes) {
        auto vs = node_vectors(spec, t, D);
        sizes.push_back(Index(vs.size()));
        for (auto& v : vs) all.push_back(std::move(v));
    }
    auto [g, err] = assemble_gram(all, [](const KernelVector& a, const KernelVector& b) { return inner_product(a, b); }, threads);
    return SubspaceFamily::from_gram(std::move(g), sizes, err, rank_tol);
}

inline SubspaceFamily kernel_family_exact(const KernelSpec& spec, const std::vector<MatrixTuple>& nodes,
                                          unsigned threads = 1, double rank_tol = default_rank_tol)
{
    std::vector<Index> sizes;
    for (const auto& t : nodes) {
        require(t.d() == spec.d, errc::dimension_mismatch, "node and kernel have different d");
        sizes.push_back(t.m() * t.m());
    }
    return SubspaceFamily::from_gram(closed_form_node_gram(spec, nodes, threads), sizes, 0.0, rank_tol);
}

} // namespace rkhs_lab
