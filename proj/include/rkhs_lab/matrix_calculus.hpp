#pragma once
//
// Commuting matrix tuples and the evaluation of power series at them. A
// torus-quadrature Cauchy integral serves as an independent route.
//

#include <rkhs_lab/core.hpp>

#include <cmath>
#include <numbers>

namespace rkhs_lab {

//
// d-tuple of m x m complex matrices
//
class MatrixTuple
{
public:
    MatrixTuple() = default;

    explicit MatrixTuple(std::vector<CMatrix> mats)
        : mats_(std::move(mats))
    {
        require(!mats_.empty(), errc::invalid_argument, "matrix tuple needs d >= 1");
        const Index m = mats_.front().rows();
        require(m >= 1, errc::invalid_argument, "matrix tuple needs m >= 1");
        for (const auto& a : mats_)
            require(a.rows() == m && a.cols() == m, errc::dimension_mismatch,
                    "all matrices of a tuple must be square of identical size");
    }

    // point of D^d as a tuple of 1 x 1 matrices
    static MatrixTuple scalar(const std::vector<cplx>& point)
    {
        std::vector<CMatrix> mats;
        for (auto z : point) mats.push_back(CMatrix::Constant(1, 1, z));
        return MatrixTuple(std::move(mats));
    }

    int   d() const { return int(mats_.size()); }
    Index m() const { return mats_.empty() ? 0 : mats_.front().rows(); }

    const CMatrix& operator[](int i) const { return mats_[std::size_t(i)]; }
    const std::vector<CMatrix>& matrices() const { return mats_; }

    double max_frobenius() const
    {
        double s = 0;
        for (const auto& a : mats_) s = std::max(s, a.norm());
        return s;
    }

    // Q^* M^i Q for every i
    MatrixTuple similar(const CMatrix& q) const
    {
        std::vector<CMatrix> out;
        for (const auto& a : mats_) out.push_back(q.adjoint() * a * q);
        return MatrixTuple(std::move(out));
    }

private:
    std::vector<CMatrix> mats_;
};

// max_{i<j} || M^i M^j - M^j M^i ||_F
inline double commutator_defect(const MatrixTuple& t)
{
    double defect = 0;
    for (int i = 0; i < t.d(); ++i)
        for (int j = i + 1; j < t.d(); ++j)
            defect = std::max(defect, (t[i] * t[j] - t[j] * t[i]).norm());
    return defect;
}

inline double default_commute_tol(const MatrixTuple& t)
{
    return 1e-10 * (1.0 + t.max_frobenius());
}

inline bool is_commuting(const MatrixTuple& t, double tol = -1)
{
    if (tol < 0) tol = default_commute_tol(t);
    return commutator_defect(t) <= tol;
}

struct Triangularization {
    CMatrix     q;         // unitary, Q^* M^i Q = upper^i
    MatrixTuple upper;
    double      residual;  // largest strictly-lower entry left behind
};

namespace detail {

inline bool lex_less(cplx a, cplx b)
{
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
}

//
// common eigenvector of a commuting family (all s x s): restrict to the
// eigenspace of the lexicographically first eigenvalue of each member in turn
//
inline CVector common_eigenvector(const std::vector<CMatrix>& blocks, double tol)
{
    const Index s = blocks.front().rows();
    CMatrix     v = CMatrix::Identity(s, s);

    for (const auto& b : blocks) {
        if (v.cols() == 1)
            break;
        CMatrix c = v.adjoint() * b * v;
        Eigen::ComplexEigenSolver<CMatrix> es(c, false);
        auto ev = es.eigenvalues();
        cplx lambda = ev(0);
        for (Index k = 1; k < ev.size(); ++k)
            if (lex_less(ev(k), lambda)) lambda = ev(k);

        CMatrix shifted = c - lambda * CMatrix::Identity(c.rows(), c.cols());
        Eigen::JacobiSVD<CMatrix> svd(shifted, Eigen::ComputeFullV);
        const auto& sv    = svd.singularValues();
        const double scale = 1.0 + c.norm();
        Index nullity = 0;
        for (Index k = sv.size() - 1; k >= 0 && sv(k) <= 1e-10 * scale; --k) ++nullity;
        if (nullity == 0) {
            // eigenvalue of a defective cluster; accept the closest direction
            const double smin = sv(sv.size() - 1);
            if (smin > 1e-6 * scale)
                throw error(errc::degenerate_deflation, "no common invariant direction within tolerance", smin);
            nullity = 1;
        }
        v = (v * svd.matrixV().rightCols(nullity)).eval();
    }

    CVector x = v.col(0);
    x /= x.norm();
    double resid = 0;
    for (const auto& b : blocks) {
        cplx   mu = x.dot(b * x);
        resid     = std::max(resid, (b * x - mu * x).norm());
    }
    if (resid > tol)
        throw error(errc::degenerate_deflation, "common eigenvector residual above tolerance", resid);
    return x;
}

} // namespace detail

//
// unitary joint triangularization: deflate one common eigenvector at a time;
// when e_1 of the trailing block is already a common eigenvector it is kept,
// so triangular input returns Q = Id
//
inline Triangularization joint_triangularize(const MatrixTuple& t, double tol = -1)
{
    if (tol < 0) tol = default_commute_tol(t);
    const double defect = commutator_defect(t);
    require(defect <= tol, errc::not_commuting, "tuple does not commute within tolerance", defect);

    const Index m = t.m();
    const int   d = t.d();
    std::vector<CMatrix> b = t.matrices();
    CMatrix q = CMatrix::Identity(m, m);
    const double deflate_tol = std::max(tol, 1e-8 * (1.0 + t.max_frobenius()));

    for (Index k = 0; k + 1 < m; ++k) {
        const Index s = m - k;
        bool first_is_eigen = true;
        for (int i = 0; i < d && first_is_eigen; ++i)
            if (b[std::size_t(i)].col(k).tail(s - 1).norm() > tol) first_is_eigen = false;
        if (first_is_eigen)
            continue;

        std::vector<CMatrix> blocks;
        for (int i = 0; i < d; ++i) blocks.push_back(b[std::size_t(i)].bottomRightCorner(s, s));
        CVector v = detail::common_eigenvector(blocks, deflate_tol);

        Eigen::HouseholderQR<CMatrix> qr(v);
        CMatrix h = qr.householderQ() * CMatrix::Identity(s, s);

        for (auto& bi : b) {
            bi.rightCols(s) = (bi.rightCols(s) * h).eval();
            bi.bottomRows(s) = (h.adjoint() * bi.bottomRows(s)).eval();
        }
        q.rightCols(s) = (q.rightCols(s) * h).eval();
    }

    double residual = 0;
    for (const auto& bi : b)
        for (Index c = 0; c < m; ++c)
            for (Index r = c + 1; r < m; ++r) residual = std::max(residual, std::abs(bi(r, c)));
    if (residual > deflate_tol)
        throw error(errc::degenerate_deflation, "triangularization left a lower-triangular residual", residual);

    return {q, MatrixTuple(std::move(b)), residual};
}

//
// joint spectrum: the m diagonal d-tuples of the joint triangular form, in
// deflation order; points of a defective k-fold cluster carry the usual
// eps^(1/k) perturbation
//
struct JointSpectrum {
    std::vector<std::vector<cplx>> points;

    bool inside_polydisc() const
    {
        for (const auto& p : points)
            for (auto z : p)
                if (std::abs(z) >= 1.0) return false;
        return true;
    }

    // per-coordinate spectral radius
    std::vector<double> radii() const
    {
        std::vector<double> r(points.empty() ? 0 : points.front().size(), 0.0);
        for (const auto& p : points)
            for (std::size_t i = 0; i < p.size(); ++i) r[i] = std::max(r[i], std::abs(p[i]));
        return r;
    }
};

inline JointSpectrum spectrum_of_triangular(const MatrixTuple& upper)
{
    JointSpectrum js;
    for (Index j = 0; j < upper.m(); ++j) {
        std::vector<cplx> p;
        for (int i = 0; i < upper.d(); ++i) p.push_back(upper[i](j, j));
        js.points.push_back(std::move(p));
    }
    return js;
}

inline JointSpectrum joint_spectrum(const MatrixTuple& t, double tol = -1)
{
    return spectrum_of_triangular(joint_triangularize(t, tol).upper);
}

//
// truncated power series in d commuting variables
//
struct PolySeries {
    int d            = 1;
    int degree_bound = 0;
    std::map<MultiIndex, cplx> coeffs;

    PolySeries() = default;
    PolySeries(int d_, int degree)
        : d(d_), degree_bound(degree)
    {
        require(d >= 1 && degree >= 0, errc::invalid_argument, "PolySeries needs d >= 1, degree >= 0");
    }

    static PolySeries constant(int d, cplx c)
    {
        PolySeries p(d, 0);
        p.add(MultiIndex(std::size_t(d), 0), c);
        return p;
    }

    // z^{i}, i zero-based
    static PolySeries coordinate(int d, int i)
    {
        PolySeries p(d, 1);
        MultiIndex l(std::size_t(d), 0);
        l[std::size_t(i)] = 1;
        p.add(l, 1.0);
        return p;
    }

    PolySeries& add(const MultiIndex& l, cplx c)
    {
        require(int(l.size()) == d, errc::dimension_mismatch, "multi-index length differs from d");
        for (int x : l) require(x >= 0, errc::invalid_argument, "negative exponent");
        require(total_degree(l) <= degree_bound, errc::invalid_argument, "term exceeds degree bound");
        coeffs[l] += c;
        return *this;
    }

    cplx operator()(const std::vector<cplx>& z) const
    {
        require(int(z.size()) == d, errc::dimension_mismatch, "point dimension differs from series");
        cplx sum = 0;
        for (const auto& [l, a] : coeffs) {
            cplx term = a;
            for (int i = 0; i < d; ++i) term *= std::pow(z[std::size_t(i)], l[std::size_t(i)]);
            sum += term;
        }
        return sum;
    }

    // sum of |a_l| * |l|_1, a Lipschitz constant on the torus in each angle
    double lipschitz_bound() const
    {
        double s = 0;
        for (const auto& [l, a] : coeffs) s += std::abs(a) * total_degree(l);
        return s;
    }

    // partial derivative in coordinate i (zero-based)
    PolySeries derivative(int i) const
    {
        require(i >= 0 && i < d, errc::invalid_argument, "derivative coordinate out of range");
        PolySeries r(d, std::max(degree_bound - 1, 0));
        for (const auto& [l, a] : coeffs) {
            const int e = l[std::size_t(i)];
            if (e == 0) continue;
            MultiIndex k = l;
            k[std::size_t(i)] = e - 1;
            r.coeffs[k] += double(e) * a;
        }
        return r;
    }

    double coefficient_l1() const
    {
        double s = 0;
        for (const auto& [l, a] : coeffs) s += std::abs(a);
        return s;
    }

    friend PolySeries operator+(const PolySeries& a, const PolySeries& b)
    {
        require(a.d == b.d, errc::dimension_mismatch, "series dimensions differ");
        PolySeries r(a.d, std::max(a.degree_bound, b.degree_bound));
        for (const auto& [l, c] : a.coeffs) r.coeffs[l] += c;
        for (const auto& [l, c] : b.coeffs) r.coeffs[l] += c;
        return r;
    }

    friend PolySeries operator*(cplx s, const PolySeries& a)
    {
        PolySeries r = a;
        for (auto& [l, c] : r.coeffs) c *= s;
        return r;
    }

    friend PolySeries operator*(const PolySeries& a, const PolySeries& b)
    {
        require(a.d == b.d, errc::dimension_mismatch, "series dimensions differ");
        PolySeries r(a.d, a.degree_bound + b.degree_bound);
        for (const auto& [la, ca] : a.coeffs)
            for (const auto& [lb, cb] : b.coeffs) {
                MultiIndex l(la.size());
                for (std::size_t i = 0; i < l.size(); ++i) l[i] = la[i] + lb[i];
                r.coeffs[l] += ca * cb;
            }
        return r;
    }
};

namespace detail {

inline std::vector<std::vector<CMatrix>> coordinate_powers(const MatrixTuple& t, const std::vector<int>& max_exp)
{
    std::vector<std::vector<CMatrix>> pw(std::size_t(t.d()));
    for (int i = 0; i < t.d(); ++i) {
        auto& p = pw[std::size_t(i)];
        p.push_back(CMatrix::Identity(t.m(), t.m()));
        for (int k = 1; k <= max_exp[std::size_t(i)]; ++k) p.push_back(p.back() * t[i]);
    }
    return pw;
}

} // namespace detail

//
// sum_l a_l (M^1)^{l_1} ... (M^d)^{l_d}; exact for polynomials
//
inline CMatrix eval_poly(const MatrixTuple& t, const PolySeries& f)
{
    require(f.d == t.d(), errc::dimension_mismatch, "series and tuple have different d");
    std::vector<int> max_exp(std::size_t(t.d()), 0);
    for (const auto& [l, a] : f.coeffs)
        for (int i = 0; i < t.d(); ++i) max_exp[std::size_t(i)] = std::max(max_exp[std::size_t(i)], l[std::size_t(i)]);
    auto pw = detail::coordinate_powers(t, max_exp);

    CMatrix out = CMatrix::Zero(t.m(), t.m());
    for (const auto& [l, a] : f.coeffs) {
        CMatrix term = pw[0][std::size_t(l[0])];
        for (int i = 1; i < t.d(); ++i) term = term * pw[std::size_t(i)][std::size_t(l[std::size_t(i)])];
        out += a * term;
    }
    return out;
}

//
// product trapezoid rule on T^d for the matrix Cauchy integral
//   f(M) = (2 pi i)^{-d} \int f(xi) prod_i (xi^i - M^i)^{-1} dxi
//
inline CMatrix eval_cauchy(const MatrixTuple& t, const PolySeries& f, int quad_points)
{
    require(f.d == t.d(), errc::dimension_mismatch, "series and tuple have different d");
    require(quad_points >= 4, errc::invalid_argument, "quad_points must be >= 4");

    const int   d = t.d();
    const Index m = t.m();
    const int   q = quad_points;
    std::vector<cplx> nodes(static_cast<std::size_t>(q));
    for (int k = 0; k < q; ++k) nodes[std::size_t(k)] = std::polar(1.0, 2.0 * std::numbers::pi * k / q);

    // xi (xi - M^i)^{-1} for every coordinate and node
    std::vector<std::vector<CMatrix>> res(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        for (int k = 0; k < q; ++k) {
            const cplx xi = nodes[std::size_t(k)];
            CMatrix shifted = xi * CMatrix::Identity(m, m) - t[i];
            Eigen::PartialPivLU<CMatrix> lu(shifted);
            const double rc = lu.rcond();
            if (!(rc > 1e-12))
                throw error(errc::singular_resolvent, "resolvent numerically singular at a quadrature node", rc);
            res[std::size_t(i)].push_back(xi * lu.inverse());
        }
    }

    CMatrix out = CMatrix::Zero(m, m);
    std::vector<int> k(static_cast<std::size_t>(d), 0);
    std::vector<cplx> xi(static_cast<std::size_t>(d));
    while (true) {
        for (int i = 0; i < d; ++i) xi[std::size_t(i)] = nodes[std::size_t(k[std::size_t(i)])];
        const cplx fv = f(xi);
        CMatrix term = res[0][std::size_t(k[0])];
        for (int i = 1; i < d; ++i) term = term * res[std::size_t(i)][std::size_t(k[std::size_t(i)])];
        out += fv * term;

        int pos = 0;
        while (pos < d && ++k[std::size_t(pos)] == q) k[std::size_t(pos++)] = 0;
        if (pos == d) break;
    }
    return out / std::pow(double(q), d);
}

// ||f(t)||_F <= tol
inline bool vanishes_at(const PolySeries& f, const MatrixTuple& t, double tol)
{
    return eval_poly(t, f).norm() <= tol;
}

} // namespace rkhs_lab
