#pragma once
//
// Product kernels s^alpha on the polydisc and matrix-node kernel vectors.
//
// K_A(u,v) is the element representing f -> u^* f(A) v, so K_A(e_p, e_q)
// reproduces the (p,q) entry of f(A). In the orthonormal monomial basis
// e_l = sqrt(w_l) z^l its coefficients are c_l = sqrt(w_l) conj(u^* A^l v).
//

#include <rkhs_lab/matrix_calculus.hpp>

#include <limits>

namespace rkhs_lab {

struct KernelSpec {
    int              d = 1;
    std::vector<int> alpha{1};

    KernelSpec() = default;
    KernelSpec(int d_, std::vector<int> alpha_)
        : d(d_), alpha(std::move(alpha_))
    {
        validate();
    }

    // product Szego kernel s_d
    static KernelSpec szego(int d) { return KernelSpec(d, std::vector<int>(std::size_t(d), 1)); }

    void validate() const
    {
        require(d >= 1, errc::invalid_argument, "kernel spec needs d >= 1");
        require(int(alpha.size()) == d, errc::invalid_argument, "kernel spec needs one exponent per coordinate");
        for (int a : alpha) require(a >= 1, errc::invalid_argument, "kernel exponents must be >= 1");
    }

    bool operator==(const KernelSpec&) const = default;
};

namespace detail {

inline void require_in_disc(const std::vector<cplx>& z, const char* what)
{
    for (auto x : z)
        require(std::abs(x) < 1.0, errc::outside_domain, std::string(what) + " has a coordinate outside the open disc", std::abs(x));
}

// C(n + a - 1, n)
inline double multiset_binomial(int n, int a)
{
    double c = 1.0;
    for (int k = 1; k <= n; ++k) c = c * double(k + a - 1) / double(k);
    return c;
}

} // namespace detail

// prod_i (1 - conj(w^i) z^i)^(-alpha_i)
inline cplx kernel_value(const KernelSpec& spec, const std::vector<cplx>& z, const std::vector<cplx>& w)
{
    require(int(z.size()) == spec.d && int(w.size()) == spec.d, errc::dimension_mismatch, "point dimension differs from kernel");
    detail::require_in_disc(z, "z");
    detail::require_in_disc(w, "w");
    cplx k = 1.0;
    for (int i = 0; i < spec.d; ++i)
        k *= std::pow(1.0 - std::conj(w[std::size_t(i)]) * z[std::size_t(i)], -spec.alpha[std::size_t(i)]);
    return k;
}

// w_l = prod_i C(l_i + alpha_i - 1, l_i); ||z^l||^2 = 1 / w_l
inline double monomial_weight(const KernelSpec& spec, const MultiIndex& l)
{
    require(int(l.size()) == spec.d, errc::dimension_mismatch, "multi-index length differs from kernel");
    double w = 1.0;
    for (int i = 0; i < spec.d; ++i) w *= detail::multiset_binomial(l[std::size_t(i)], spec.alpha[std::size_t(i)]);
    return w;
}

//
// truncated element of the kernel space: dense coefficients over the graded
// index list of degree <= D
//
struct KernelVector {
    KernelSpec spec;
    int        degree = 0;
    CVector    coeffs;
    double     tail_bound = 0.0;

    const GradedIndexSet& indices() const { return *graded_indices(spec.d, degree); }

    cplx coeff(const MultiIndex& l) const
    {
        const auto& pos = indices().position;
        auto it = pos.find(l);
        return it == pos.end() ? cplx(0.0) : coeffs(Index(it->second));
    }

    double norm() const { return coeffs.norm(); }

    std::map<MultiIndex, cplx> to_map() const
    {
        std::map<MultiIndex, cplx> m;
        const auto& list = indices().list;
        for (std::size_t k = 0; k < list.size(); ++k) m.emplace(list[k], coeffs(Index(k)));
        return m;
    }
};

inline KernelVector zero_vector(const KernelSpec& spec, int degree)
{
    KernelVector k{spec, degree, CVector::Zero(Index(graded_indices(spec.d, degree)->list.size())), 0.0};
    return k;
}

// polynomial f = sum a_l z^l expressed in the orthonormal basis
inline KernelVector as_vector(const KernelSpec& spec, const PolySeries& f, int degree)
{
    require(f.d == spec.d, errc::dimension_mismatch, "series and kernel have different d");
    KernelVector k = zero_vector(spec, degree);
    const auto& pos = k.indices().position;
    for (const auto& [l, a] : f.coeffs) {
        require(total_degree(l) <= degree, errc::invalid_argument, "polynomial degree exceeds the truncation");
        k.coeffs(Index(pos.at(l))) += a / std::sqrt(monomial_weight(spec, l));
    }
    return k;
}

//
// certified bound on sum_{|l| > D} w_l ||A^l||^2 from the unitary triangular
// form T_i = Lambda_i + N_i with r_i = max |diag|, nu_i = ||N_i||:
//   ||T_i^n|| <= b_i(n) = sum_{k <= min(n, m-1)} C(n,k) r_i^(n-k) nu_i^k
//
namespace detail {

struct CoordinateTail {
    int    alpha;
    double r, nu;
    Index  m;

    double b(int n) const
    {
        double s = 0, c = 1;  // c = C(n,k)
        const int kmax = int(std::min<Index>(n, m - 1));
        for (int k = 0; k <= kmax; ++k) {
            if (k > 0) c = c * double(n - k + 1) / double(k);
            const double rp = (n - k == 0) ? 1.0 : std::pow(r, n - k);
            s += c * rp * std::pow(nu, k);
        }
        return s;
    }

    double a(int n) const
    {
        const double bn = b(n);
        return multiset_binomial(n, alpha) * bn * bn;
    }

    // a(n+1)/a(n) <= ratio(n) for n >= m-1, decreasing in n
    double ratio(int n) const
    {
        const double g = double(n + 1) / double(n + 2 - m);
        return double(n + alpha) / double(n + 1) * r * r * g * g;
    }

    // sum_{n > K} a(n)
    double tail_after(int K) const
    {
        if (r == 0.0) {
            double s = 0;
            for (int n = K + 1; n < int(m); ++n) s += a(n);
            return s;
        }
        const double target = 0.5 * (1.0 + r * r);
        double s = 0;
        int    n = K + 1;
        while (true) {
            if (n >= int(m) - 1) {
                const double q = ratio(n);
                if (q <= target)
                    return s + a(n) / (1.0 - q);
            }
            s += a(n);
            ++n;
            if (n > 100000)
                return std::numeric_limits<double>::infinity();
        }
    }
};

inline double kernel_tail_mass(const KernelSpec& spec, const std::vector<CoordinateTail>& coords, int D)
{
    const int d = spec.d;
    // explicit convolution up to N, union bound beyond
    int N = std::max(2 * D + 8, D + 40);
    for (int attempt = 0; attempt < 6; ++attempt, N *= 2) {
        std::vector<std::vector<double>> a(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i)
            for (int n = 0; n <= N; ++n) a[std::size_t(i)].push_back(coords[std::size_t(i)].a(n));

        std::vector<double> conv = a[0];
        for (int i = 1; i < d; ++i) {
            std::vector<double> next(std::size_t(N + 1), 0.0);
            for (int p = 0; p <= N; ++p)
                for (int q = 0; p + q <= N; ++q) next[std::size_t(p + q)] += conv[std::size_t(p)] * a[std::size_t(i)][std::size_t(q)];
            conv = std::move(next);
        }
        double expl = 0;
        for (int n = D + 1; n <= N; ++n) expl += conv[std::size_t(n)];

        const int K = N / d;
        double remainder = 0;
        for (int i = 0; i < d; ++i) {
            double prod = coords[std::size_t(i)].tail_after(K);
            for (int j = 0; j < d; ++j) {
                if (j == i) continue;
                double sj = 0;
                for (int n = 0; n <= K; ++n) sj += a[std::size_t(j)][std::size_t(n)];
                prod *= sj + coords[std::size_t(j)].tail_after(K);
            }
            remainder += prod;
        }
        if (!std::isfinite(remainder) || remainder > 1e-3 * expl + 1e-300) {
            if (attempt < 5) continue;
        }
        return expl + remainder;
    }
    return std::numeric_limits<double>::infinity();
}

} // namespace detail

struct NodeAnalysis {
    Triangularization   tri;
    std::vector<double> radii;
    std::vector<double> nilpotent_norms;
};

inline NodeAnalysis analyze_node(const KernelSpec& spec, const MatrixTuple& t)
{
    require(t.d() == spec.d, errc::dimension_mismatch, "node and kernel have different d");
    NodeAnalysis na{joint_triangularize(t), {}, {}};
    na.radii = spectrum_of_triangular(na.tri.upper).radii();
    for (int i = 0; i < t.d(); ++i) {
        require(na.radii[std::size_t(i)] < 1.0, errc::spectrum_on_boundary, "coordinate spectral radius >= 1", na.radii[std::size_t(i)]);
        CMatrix n = na.tri.upper[i].triangularView<Eigen::StrictlyUpper>();
        na.nilpotent_norms.push_back(spectral_norm(n));
    }
    return na;
}

// sqrt(sum_{|l|>D} w_l ||A^l||^2)
inline double node_tail_factor(const KernelSpec& spec, const NodeAnalysis& na, int D)
{
    std::vector<detail::CoordinateTail> coords;
    for (int i = 0; i < spec.d; ++i)
        coords.push_back({spec.alpha[std::size_t(i)], na.radii[std::size_t(i)], na.nilpotent_norms[std::size_t(i)], na.tri.q.rows()});
    return std::sqrt(detail::kernel_tail_mass(spec, coords, D));
}

namespace detail {

// A^l v over the graded index list
inline std::vector<CVector> graded_powers(const MatrixTuple& t, const GradedIndexSet& set, const CVector& v)
{
    std::vector<CVector> y(set.list.size());
    y[0] = v;
    for (std::size_t k = 1; k < set.list.size(); ++k) {
        MultiIndex l = set.list[k];
        int i = 0;
        while (l[std::size_t(i)] == 0) ++i;
        --l[std::size_t(i)];
        y[k] = t[i] * y[set.position.at(l)];
    }
    return y;
}

inline KernelVector kernel_vector_from(const KernelSpec& spec, const MatrixTuple& t, const CVector& u, const CVector& v,
                                       int D, double tail_factor)
{
    auto set = graded_indices(spec.d, D);
    auto y   = graded_powers(t, *set, v);
    KernelVector k{spec, D, CVector(Index(set->list.size())), tail_factor * u.norm() * v.norm()};
    for (std::size_t j = 0; j < set->list.size(); ++j)
        k.coeffs(Index(j)) = std::sqrt(monomial_weight(spec, set->list[j])) * std::conj(u.dot(y[j]));
    return k;
}

} // namespace detail

inline KernelVector kernel_vector(const KernelSpec& spec, const MatrixTuple& t, const CVector& u, const CVector& v, int D)
{
    spec.validate();
    require(D >= 0, errc::invalid_argument, "degree must be >= 0");
    require(u.size() == t.m() && v.size() == t.m(), errc::dimension_mismatch, "u and v must have length m");
    auto na = analyze_node(spec, t);
    return detail::kernel_vector_from(spec, t, u, v, D, node_tail_factor(spec, na, D));
}

struct InnerProduct {
    cplx   value;
    double error_bound;
};

//
// sum_l a_l conj(b_l) over the common truncation; the discarded part is
// bounded by ||a_{>D}|| ||b_{>D}|| plus summation roundoff
//
inline InnerProduct inner_product(const KernelVector& a, const KernelVector& b)
{
    require(a.spec == b.spec, errc::spec_mismatch, "kernel vectors belong to different spaces");
    const Index n = std::min(a.coeffs.size(), b.coeffs.size());
    cplx   s   = 0;
    double abs = 0;
    for (Index k = 0; k < n; ++k) {
        s += a.coeffs(k) * std::conj(b.coeffs(k));
        abs += std::abs(a.coeffs(k)) * std::abs(b.coeffs(k));
    }
    const double ta = a.coeffs.tail(a.coeffs.size() - n).norm() + a.tail_bound;
    const double tb = b.coeffs.tail(b.coeffs.size() - n).norm() + b.tail_bound;
    const double eps = std::numeric_limits<double>::epsilon();
    return {s, ta * tb + double(n + 1) * eps * abs};
}

//
// exact inner products between matrix-node kernels:
//   <K_A(u,v), K_B(s,t)> = (u^T (x) s^*) prod_i (I - conj(A_i) (x) B_i)^(-alpha_i) (conj(v) (x) t)
// returns the m_A m_B x m_A m_B matrix X with the Kronecker index (p,r) -> p m_B + r
//
inline CMatrix kernel_cross_operator(const KernelSpec& spec, const MatrixTuple& a, const MatrixTuple& b)
{
    require(a.d() == spec.d && b.d() == spec.d, errc::dimension_mismatch, "node and kernel have different d");
    const Index n = a.m() * b.m();
    CMatrix     x = CMatrix::Identity(n, n);
    for (int i = 0; i < spec.d; ++i) {
        CMatrix kr(n, n);
        const CMatrix ca = a[i].conjugate();
        for (Index p = 0; p < a.m(); ++p)
            for (Index q = 0; q < a.m(); ++q) kr.block(p * b.m(), q * b.m(), b.m(), b.m()) = ca(p, q) * b[i];
        Eigen::PartialPivLU<CMatrix> lu(CMatrix::Identity(n, n) - kr);
        const double rc = lu.rcond();
        require(rc > 1e-14, errc::spectrum_on_boundary, "kernel series diverges for this node pair", rc);
        CMatrix inv = lu.inverse();
        for (int k = 0; k < spec.alpha[std::size_t(i)]; ++k) x = x * inv;
    }
    return x;
}

inline cplx closed_form_inner(const KernelSpec& spec, const MatrixTuple& a, const CVector& u, const CVector& v,
                              const MatrixTuple& b, const CVector& s, const CVector& t)
{
    CMatrix x = kernel_cross_operator(spec, a, b);
    CVector left(a.m() * b.m()), right(a.m() * b.m());
    for (Index p = 0; p < a.m(); ++p)
        for (Index r = 0; r < b.m(); ++r) {
            left(p * b.m() + r)  = u(p) * std::conj(s(r));
            right(p * b.m() + r) = std::conj(v(p)) * t(r);
        }
    return left.transpose() * x * right;
}

//
// Gram matrix G = V^* V of a finite spanning family, with a rank-revealing
// orthonormal basis: the columns of V * ortho_basis are orthonormal
//
template <typename Vec>
struct SubspaceGram {
    std::vector<Vec> vectors;
    CMatrix          gram;
    CMatrix          ortho_basis;
    RVector          eigenvalues;  // ascending
    int              numeric_rank = 0;
    double           gram_error   = 0.0;
};

struct Orthonormalization {
    CMatrix basis;
    RVector eigenvalues;
    int     rank = 0;
};

inline Orthonormalization orthonormalize(const CMatrix& gram, double rank_tol = default_rank_tol)
{
    Orthonormalization o;
    if (gram.rows() == 0) {
        o.basis = CMatrix::Zero(0, 0);
        return o;
    }
    CMatrix h = 0.5 * (gram + gram.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    o.eigenvalues = es.eigenvalues();
    const double lmax = o.eigenvalues.maxCoeff();
    std::vector<Index> keep;
    if (lmax > 0)
        for (Index k = o.eigenvalues.size() - 1; k >= 0; --k)
            if (o.eigenvalues(k) > rank_tol * lmax) keep.push_back(k);
    o.rank  = int(keep.size());
    o.basis = CMatrix(gram.rows(), Index(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c)
        o.basis.col(Index(c)) = es.eigenvectors().col(keep[c]) / std::sqrt(o.eigenvalues(keep[c]));
    return o;
}

template <typename Vec>
SubspaceGram<Vec> make_subspace(std::vector<Vec> vectors, CMatrix gram, double gram_error, double rank_tol = default_rank_tol)
{
    SubspaceGram<Vec> s;
    s.vectors    = std::move(vectors);
    s.gram       = std::move(gram);
    s.gram_error = gram_error;
    auto o         = orthonormalize(s.gram, rank_tol);
    s.ortho_basis  = std::move(o.basis);
    s.eigenvalues  = std::move(o.eigenvalues);
    s.numeric_rank = o.rank;
    return s;
}

//
// G_ab = <v_b, v_a> for a list of vectors, entries computed independently
//
template <typename Vec, typename Inner>
std::pair<CMatrix, double> assemble_gram(const std::vector<Vec>& vs, Inner inner, unsigned threads = 1)
{
    const Index n = Index(vs.size());
    CMatrix g(n, n);
    std::vector<double> err(std::size_t(n * n), 0.0);
    parallel_for(std::size_t(n), threads, [&](std::size_t a) {
        for (Index b = Index(a); b < n; ++b) {
            auto ip = inner(vs[std::size_t(b)], vs[a]);
            g(Index(a), b) = ip.value;
            g(b, Index(a)) = std::conj(ip.value);
            err[a * std::size_t(n) + std::size_t(b)] = ip.error_bound;
        }
    });
    return {g, err.empty() ? 0.0 : *std::max_element(err.begin(), err.end())};
}

using KernelSubspace = SubspaceGram<KernelVector>;

// K_A(e_p, e_q) in the order p * m + q
inline std::vector<KernelVector> node_vectors(const KernelSpec& spec, const MatrixTuple& t, int D)
{
    auto na = analyze_node(spec, t);
    const double tail = node_tail_factor(spec, na, D);
    const Index m = t.m();
    std::vector<KernelVector> vs;
    for (Index p = 0; p < m; ++p)
        for (Index q = 0; q < m; ++q)
            vs.push_back(detail::kernel_vector_from(spec, t, CVector::Unit(m, p), CVector::Unit(m, q), D, tail));
    return vs;
}

inline KernelSubspace node_subspace(const KernelSpec& spec, const MatrixTuple& t, int D, unsigned threads = 1,
                                    double rank_tol = default_rank_tol)
{
    spec.validate();
    auto vs = node_vectors(spec, t, D);
    auto [g, err] = assemble_gram(vs, [](const KernelVector& a, const KernelVector& b) { return inner_product(a, b); }, threads);
    return make_subspace(std::move(vs), std::move(g), err, rank_tol);
}

//
// joint Gram of the spanning vectors of several node subspaces, blocks in
// node order; exact route through kernel_cross_operator
//
inline CMatrix closed_form_node_gram(const KernelSpec& spec, const std::vector<MatrixTuple>& nodes, unsigned threads = 1)
{
    std::vector<Index> off{0};
    for (const auto& t : nodes) off.push_back(off.back() + t.m() * t.m());
    CMatrix g(off.back(), off.back());
    const std::size_t n = nodes.size();
    parallel_for(n, threads, [&](std::size_t a) {
        for (std::size_t b = a; b < n; ++b) {
            // X((p,r),(q,s)) = <K_a(e_p,e_q), K_b(e_r,e_s)>
            CMatrix x = kernel_cross_operator(spec, nodes[a], nodes[b]);
            const Index ma = nodes[a].m(), mb = nodes[b].m();
            for (Index p = 0; p < ma; ++p)
                for (Index q = 0; q < ma; ++q)
                    for (Index r = 0; r < mb; ++r)
                        for (Index s = 0; s < mb; ++s) {
                            const cplx ip = x(p * mb + r, q * mb + s);
                            // G(row, col) = <v_col, v_row>
                            g(off[a] + p * ma + q, off[b] + r * mb + s) = std::conj(ip);
                            g(off[b] + r * mb + s, off[a] + p * ma + q) = ip;
                        }
        }
    });
    return g;
}

//
// u1^* A^l v1 == u2^* A^l v2 for |l| <= L; L >= d (m - 1) certifies equality
// for every l since the powers with l_i < m span the generated algebra
//
inline bool moment_equivalence(const MatrixTuple& t, const CVector& u1, const CVector& v1, const CVector& u2,
                               const CVector& v2, int L = -1, double tol = 1e-12)
{
    require(u1.size() == t.m() && v1.size() == t.m() && u2.size() == t.m() && v2.size() == t.m(),
            errc::dimension_mismatch, "vectors must have length m");
    if (L < 0) L = int(t.m()) * t.d();
    auto set = graded_indices(t.d(), L);
    auto y1  = detail::graded_powers(t, *set, v1);
    auto y2  = detail::graded_powers(t, *set, v2);
    for (std::size_t k = 0; k < set->list.size(); ++k) {
        const cplx a = u1.dot(y1[k]), b = u2.dot(y2[k]);
        if (std::abs(a - b) > tol * std::max({1.0, std::abs(a), std::abs(b)}))
            return false;
    }
    return true;
}

//
// coordinate multipliers are contractions on span{k_z} iff for each i
//   [(1 - z_n^i conj(z_j^i)) k(z_n, z_j)]_{n,j} >= 0
// where kmat(n, j) = k(z_n, z_j) = <k_{z_j}, k_{z_n}>
//
inline bool admissibility_check(const CMatrix& kmat, const std::vector<std::vector<cplx>>& points,
                                double slack = default_psd_slack)
{
    const Index n = Index(points.size());
    require(kmat.rows() == n && kmat.cols() == n, errc::dimension_mismatch, "Gram size differs from the point count");
    if (n == 0) return true;
    if (!is_hermitian(kmat, 1e-12)) return false;
    const std::size_t d = points.front().size();
    for (std::size_t i = 0; i < d; ++i) {
        CMatrix m(n, n);
        for (Index a = 0; a < n; ++a)
            for (Index b = 0; b < n; ++b)
                m(a, b) = (1.0 - points[std::size_t(a)][i] * std::conj(points[std::size_t(b)][i])) * kmat(a, b);
        if (min_hermitian_eigenvalue(m) < -slack) return false;
    }
    return true;
}

inline CMatrix kernel_matrix(const KernelSpec& spec, const std::vector<std::vector<cplx>>& points)
{
    const Index n = Index(points.size());
    CMatrix k(n, n);
    for (Index a = 0; a < n; ++a)
        for (Index b = 0; b < n; ++b) k(a, b) = kernel_value(spec, points[std::size_t(a)], points[std::size_t(b)]);
    return k;
}

inline bool admissibility_check(const KernelSpec& spec, const std::vector<std::vector<cplx>>& points,
                                double slack = default_psd_slack)
{
    return admissibility_check(kernel_matrix(spec, points), points, slack);
}

} // namespace rkhs_lab
