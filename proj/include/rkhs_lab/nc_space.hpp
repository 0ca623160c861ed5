#pragma once
//
// Truncated noncommutative Drury-Arveson space. NC kernel vectors are sparse
// word series; exact Grams come from a Stein equation, with a closed form
// for the nilpotent pairs Z^1 = [[0,a],[0,0]], Z^2 = [[0,0],[b,0]].
//
// Convention: K_Z(u,v) represents f -> u^* f(Z) v, so the coefficient of
// word w is v^* (Z^w)^* u. Inner products are linear in the first slot.
//

#include <rkhs_lab/geometry.hpp>

#include <map>
#include <string>

namespace rkhs_lab {

// packed word: base-d digits (first letter most significant) plus length
struct WordKey {
    int len = 0;
    unsigned __int128 digits = 0;

    friend bool operator<(const WordKey& a, const WordKey& b)
    {
        return a.len != b.len ? a.len < b.len : a.digits < b.digits;
    }
    friend bool operator==(const WordKey& a, const WordKey& b) = default;
};

inline void require_packable(int d, int L)
{
    require(d >= 1, errc::invalid_argument, "NC dimension must be >= 1");
    require(L >= 0, errc::invalid_argument, "word length must be >= 0");
    require(d == 1 || double(L) * std::log2(double(d)) <= 128.0, errc::truncation_too_large,
            "words of this length do not fit a packed key", double(L));
}

// letters in 1..d
struct NCWord {
    std::vector<int> letters;

    int length() const { return int(letters.size()); }

    WordKey key(int d) const
    {
        WordKey k{length(), 0};
        for (int a : letters) {
            require(a >= 1 && a <= d, errc::invalid_argument, "letter outside 1..d", a);
            k.digits = k.digits * unsigned(d) + unsigned(a - 1);
        }
        return k;
    }

    static NCWord from_key(const WordKey& k, int d)
    {
        NCWord w;
        w.letters.resize(std::size_t(k.len));
        auto x = k.digits;
        for (int i = k.len - 1; i >= 0; --i) {
            w.letters[std::size_t(i)] = int(x % unsigned(d)) + 1;
            x /= unsigned(d);
        }
        return w;
    }

    NCWord operator+(const NCWord& o) const
    {
        NCWord w = *this;
        w.letters.insert(w.letters.end(), o.letters.begin(), o.letters.end());
        return w;
    }

    std::string to_string() const
    {
        std::string s;
        for (int a : letters) {
            require(a <= 9, errc::invalid_argument, "string form needs d <= 9");
            s += char('0' + a);
        }
        return s;
    }

    static NCWord parse(const std::string& s)
    {
        NCWord w;
        for (char c : s) {
            require(c >= '1' && c <= '9', errc::invalid_argument, "word strings use letters 1..9");
            w.letters.push_back(c - '0');
        }
        return w;
    }

    friend bool operator==(const NCWord&, const NCWord&) = default;
};

// all words of length <= L, length-then-lex
inline std::vector<NCWord> words_up_to(int d, int L)
{
    require_packable(d, L);
    std::vector<NCWord> out{NCWord{}};
    std::size_t begin = 0;
    for (int len = 1; len <= L; ++len) {
        const std::size_t end = out.size();
        for (std::size_t k = begin; k < end; ++k)
            for (int a = 1; a <= d; ++a) {
                NCWord w = out[k];
                w.letters.push_back(a);
                out.push_back(std::move(w));
            }
        begin = end;
    }
    return out;
}

struct NCPoint {
    std::vector<CMatrix> matrices;
    double row_norm = 0.0;  // ||sum_i X^i X^i*||^{1/2}

    NCPoint() = default;
    explicit NCPoint(std::vector<CMatrix> mats)
        : matrices(std::move(mats))
    {
        require(!matrices.empty(), errc::invalid_argument, "NC point needs d >= 1");
        const Index n = matrices[0].rows();
        require(n >= 1, errc::invalid_argument, "NC point matrices must be nonempty");
        CMatrix s = CMatrix::Zero(n, n);
        for (const auto& x : matrices) {
            require(x.rows() == n && x.cols() == n, errc::dimension_mismatch, "NC point matrices must share a square size");
            require(x.allFinite(), errc::invalid_argument, "NC point has non-finite entries");
            s += x * x.adjoint();
        }
        row_norm = std::sqrt(spectral_norm(s));
    }

    int   d() const { return int(matrices.size()); }
    Index n() const { return matrices[0].rows(); }
    bool  in_ball() const { return row_norm < 1.0; }
    const CMatrix& operator[](int i) const { return matrices[std::size_t(i)]; }

    static NCPoint scalar(const std::vector<cplx>& z)
    {
        std::vector<CMatrix> m;
        for (auto x : z) m.push_back(CMatrix::Constant(1, 1, x));
        return NCPoint(std::move(m));
    }
};

inline NCPoint direct_sum(const NCPoint& a, const NCPoint& b)
{
    require(a.d() == b.d(), errc::dimension_mismatch, "direct sum needs equal d");
    std::vector<CMatrix> m;
    for (int i = 0; i < a.d(); ++i) {
        CMatrix x = CMatrix::Zero(a.n() + b.n(), a.n() + b.n());
        x.topLeftCorner(a.n(), a.n())     = a[i];
        x.bottomRightCorner(b.n(), b.n()) = b[i];
        m.push_back(std::move(x));
    }
    return NCPoint(std::move(m));
}

// Z^{w_1} Z^{w_2} ... ; identity for the empty word
inline CMatrix nc_eval_word(const NCPoint& z, const NCWord& w)
{
    CMatrix p = CMatrix::Identity(z.n(), z.n());
    for (int a : w.letters) {
        require(a >= 1 && a <= z.d(), errc::invalid_argument, "letter outside 1..d", a);
        p = p * z[a - 1];
    }
    return p;
}

struct NCSeries {
    int d       = 1;
    int max_len = 0;
    std::map<WordKey, cplx> coeffs;
    double tail_bound = 0.0;

    cplx coeff(const NCWord& w) const
    {
        auto it = coeffs.find(w.key(d));
        return it == coeffs.end() ? cplx(0.0) : it->second;
    }

    NCSeries& add(const NCWord& w, cplx c)
    {
        require(w.length() <= max_len, errc::invalid_argument, "word longer than the truncation");
        coeffs[w.key(d)] += c;
        return *this;
    }

    double norm() const
    {
        double s = 0;
        for (const auto& [k, c] : coeffs) s += std::norm(c);
        return std::sqrt(s);
    }

    std::map<std::string, cplx> by_word() const
    {
        std::map<std::string, cplx> out;
        for (const auto& [k, c] : coeffs) out[NCWord::from_key(k, d).to_string()] = c;
        return out;
    }
};

// sum_w c_w Z^w
inline CMatrix nc_eval_series(const NCPoint& z, const NCSeries& f)
{
    require(z.d() == f.d, errc::dimension_mismatch, "series and point have different d");
    CMatrix s = CMatrix::Zero(z.n(), z.n());
    for (const auto& [k, c] : f.coeffs) s += c * nc_eval_word(z, NCWord::from_key(k, f.d));
    return s;
}

struct NCTruncation {
    int         max_len   = 40;
    double      prune_tol = 1e-12;  // drop subtrees whose certified mass is below prune_tol * |u||v|
    std::size_t max_terms = std::size_t(1) << 22;
};

//
// depth-first word enumeration with y_{wi} = Z_i^* y_w, y_empty = u and
// c_w = v^* y_w. Exact zeros end a branch. Since the row of adjoints is a
// contraction, sum_{|s|=k} |c_{ws}|^2 <= |v|^2 r^{2k} |y_w|^2, which bounds
// both the pruned subtrees and the part beyond max_len
//
inline NCSeries nc_kernel_vector(const NCPoint& z, const CVector& u, const CVector& v, const NCTruncation& opt = {})
{
    require(z.in_ball(), errc::outside_ball, "point lies outside the NC unit ball", z.row_norm);
    require(u.size() == z.n() && v.size() == z.n(), errc::dimension_mismatch, "vector size differs from the point");
    require_packable(z.d(), opt.max_len);
    const int d = z.d(), L = opt.max_len;
    NCSeries s;
    s.d       = d;
    s.max_len = L;
    const double r = z.row_norm, un = u.norm(), vn = v.norm();
    if (un == 0.0 || vn == 0.0) return s;
    const double geo = 1.0 / std::sqrt(1.0 - r * r);

    std::vector<CMatrix> adj;
    for (int i = 0; i < d; ++i) adj.push_back(z[i].adjoint());

    double pruned2 = 0;
    std::vector<std::pair<WordKey, CVector>> stack{{WordKey{}, u}};
    while (!stack.empty()) {
        auto [k, y] = std::move(stack.back());
        stack.pop_back();
        const cplx c = v.dot(y);
        if (c != cplx(0.0)) {
            s.coeffs.emplace(k, c);
            require(s.coeffs.size() <= opt.max_terms, errc::truncation_too_large, "NC series exceeds the term cap",
                    double(s.coeffs.size()));
        }
        if (k.len == L) continue;
        for (int i = d - 1; i >= 0; --i) {
            CVector y2 = adj[std::size_t(i)] * y;
            const double yn = y2.norm();
            if (yn == 0.0) continue;
            if (opt.prune_tol > 0 && vn * yn * geo <= opt.prune_tol * un * vn) {
                pruned2 += std::pow(vn * yn * geo, 2);
                continue;
            }
            stack.push_back({WordKey{k.len + 1, k.digits * unsigned(d) + unsigned(i)}, std::move(y2)});
        }
    }
    const double beyond = un * vn * std::pow(r, L + 1) * geo;
    s.tail_bound = std::sqrt(beyond * beyond + pruned2);
    return s;
}

inline NCSeries nc_kernel_vector(const NCPoint& z, const CVector& u, const CVector& v, int L)
{
    NCTruncation opt;
    opt.max_len = L;
    return nc_kernel_vector(z, u, v, opt);
}

// sum_w a_w conj(b_w) over stored words, with tail and roundoff bound
inline InnerProduct nc_inner_product(const NCSeries& a, const NCSeries& b)
{
    require(a.d == b.d, errc::dimension_mismatch, "series have different d");
    cplx s = 0;
    double mag = 0;
    auto ia = a.coeffs.begin(), ib = b.coeffs.begin();
    std::size_t common = 0;
    while (ia != a.coeffs.end() && ib != b.coeffs.end()) {
        if (ia->first < ib->first) ++ia;
        else if (ib->first < ia->first) ++ib;
        else {
            s += ia->second * std::conj(ib->second);
            mag += std::abs(ia->second) * std::abs(ib->second);
            ++common, ++ia, ++ib;
        }
    }
    const double na = a.norm(), nb = b.norm();
    const double err = na * b.tail_bound + a.tail_bound * nb + a.tail_bound * b.tail_bound
                     + double(common + 1) * std::numeric_limits<double>::epsilon() * mag;
    return {s, err};
}

// K_Z(e_p, e_q) in the order p * n + q
inline std::vector<NCSeries> nc_node_vectors(const NCPoint& z, const NCTruncation& opt = {})
{
    const Index n = z.n();
    std::vector<NCSeries> vs;
    for (Index p = 0; p < n; ++p)
        for (Index q = 0; q < n; ++q) vs.push_back(nc_kernel_vector(z, CVector::Unit(n, p), CVector::Unit(n, q), opt));
    return vs;
}

using NCSubspace = SubspaceGram<NCSeries>;

inline NCSubspace nc_node_subspace(const NCPoint& z, const NCTruncation& opt = {}, unsigned threads = 1,
                                   double rank_tol = default_rank_tol)
{
    auto vs = nc_node_vectors(z, opt);
    auto [g, err] = assemble_gram(vs, [](const NCSeries& a, const NCSeries& b) { return nc_inner_product(a, b); }, threads);
    return make_subspace(std::move(vs), std::move(g), err, rank_tol);
}

//
// exact Gram: <K_Z(u,v), K_W(s,t)> = v^* X t with X = u s^* + sum_i Z_i^* X W_i
//
inline CMatrix nc_cross_operator(const NCPoint& a, const NCPoint& b)
{
    require(a.d() == b.d(), errc::dimension_mismatch, "points have different d");
    require(a.in_ball() && b.in_ball(), errc::outside_ball, "points must lie in the NC unit ball");
    // vec(B_i^* X A_i) = (A_i^T kron B_i^*) vec(X), X of size n_b x n_a
    const Index na = a.n(), nb = b.n();
    CMatrix m = CMatrix::Identity(na * nb, na * nb);
    for (int i = 0; i < a.d(); ++i) {
        CMatrix bs = b[i].adjoint();
        for (Index p = 0; p < na; ++p)
            for (Index q = 0; q < na; ++q)
                if (a[i](q, p) != cplx(0.0)) m.block(p * nb, q * nb, nb, nb) -= a[i](q, p) * bs;
    }
    return m;
}

inline cplx nc_closed_form_inner(const NCPoint& z, const CVector& u, const CVector& v, const NCPoint& w,
                                 const CVector& s, const CVector& t)
{
    // X = sum_w (Z^w)^* u s^* W^w solves X = u s^* + sum_i Z_i^* X W_i
    CMatrix m = nc_cross_operator(w, z);
    CMatrix p = u * s.adjoint();
    CVector x = m.partialPivLu().solve(Eigen::Map<const CVector>(p.data(), p.size()));
    Eigen::Map<const CMatrix> xm(x.data(), z.n(), w.n());
    return v.dot(xm * t);
}

// joint Gram G(a,b) = <v_b, v_a> of all node vectors, ordered node-major then p * n + q
inline CMatrix nc_closed_form_gram(const std::vector<NCPoint>& points, unsigned threads = 1)
{
    std::vector<Index> off{0};
    for (const auto& z : points) off.push_back(off.back() + z.n() * z.n());
    CMatrix g(off.back(), off.back());
    const std::size_t np = points.size();
    parallel_for(np * np, threads, [&](std::size_t k) {
        const std::size_t ia = k / np, ib = k % np;
        const NCPoint &a = points[ia], &b = points[ib];
        // <K_B(e_r,e_s), K_A(e_p,e_q)> = X(s,q), X = sum (B^w)^* e_r e_p^* A^w
        auto lu = nc_cross_operator(a, b).partialPivLu();
        CMatrix minv = lu.inverse();
        const Index na = a.n(), nb = b.n();
        for (Index p = 0; p < na; ++p)
            for (Index q = 0; q < na; ++q)
                for (Index r = 0; r < nb; ++r)
                    for (Index s = 0; s < nb; ++s)
                        g(off[ia] + p * na + q, off[ib] + r * nb + s) = minv(s + q * nb, r + p * nb);
    });
    return 0.5 * (g + CMatrix(g.adjoint()));
}

//
// families of NC node subspaces; the truncated route raises the length until
// every tail is below 1e-8 sqrt(smallest retained Gram eigenvalue) or the cap
//
struct NCFamilyOptions {
    NCTruncation truncation;
    bool         auto_increase = true;
    int          max_len_cap   = 64;
    unsigned     threads       = 1;
    double       rank_tol      = default_rank_tol;
};

struct NCFamily {
    SubspaceFamily family;
    int            max_len  = 0;
    double         max_tail = 0.0;
    bool           tail_target_met = true;
};

inline NCFamily nc_family(const std::vector<NCPoint>& points, const NCFamilyOptions& opt = {})
{
    require(!points.empty(), errc::invalid_argument, "no NC points");
    NCTruncation tr = opt.truncation;
    double prev_tail = std::numeric_limits<double>::infinity();
    while (true) {
        std::vector<NCSeries> all;
        std::vector<Index> sizes;
        for (const auto& z : points) {
            require(z.d() == points[0].d(), errc::dimension_mismatch, "points have different d");
            auto vs = nc_node_vectors(z, tr);
            sizes.push_back(Index(vs.size()));
            for (auto& v : vs) all.push_back(std::move(v));
        }
        double tail = 0;
        for (const auto& v : all) tail = std::max(tail, v.tail_bound);
        auto [g, err] = assemble_gram(all, [](const NCSeries& a, const NCSeries& b) { return nc_inner_product(a, b); },
                                      opt.threads);
        auto o = orthonormalize(g, opt.rank_tol);
        const double lmin = o.rank > 0 ? o.eigenvalues(o.eigenvalues.size() - o.rank) : 0.0;
        const bool met = tail < 1e-8 * std::sqrt(std::max(0.0, lmin));
        // stop once pruning, not length, dominates the tail
        if (met || !opt.auto_increase || tr.max_len >= opt.max_len_cap || tail > 0.5 * prev_tail)
            return {SubspaceFamily::from_gram(std::move(g), sizes, err, opt.rank_tol), tr.max_len, tail, met};
        prev_tail = tail;
        tr.max_len = std::min(opt.max_len_cap, tr.max_len + 8);
    }
}

inline SubspaceFamily nc_family_exact(const std::vector<NCPoint>& points, unsigned threads = 1,
                                      double rank_tol = default_rank_tol)
{
    require(!points.empty(), errc::invalid_argument, "no NC points");
    std::vector<Index> sizes;
    for (const auto& z : points) sizes.push_back(z.n() * z.n());
    return SubspaceFamily::from_gram(nc_closed_form_gram(points, threads), sizes, 0.0, rank_tol);
}

struct NCGleason {
    double value     = 0.0;
    double error_bar = 0.0;
};

//
// sine of the angle between the first block and the span of the rest; the
// bar is first order in the Gram error through the orthonormalizing factors
//
inline NCGleason sin_angle_with_bar(const SubspaceFamily& f)
{
    std::vector<std::size_t> rest;
    for (std::size_t k = 1; k < f.size(); ++k) rest.push_back(k);
    NCGleason g;
    g.value = sin_angle(f, {0}, rest);
    if (f.gram_error > 0) {
        auto ca = orthonormalize(f.sub_gram({0}, {0}), f.rank_tol).basis;
        auto cb = orthonormalize(f.sub_gram(rest, rest), f.rank_tol).basis;
        const double kappa = std::max(ca.size() ? std::pow(spectral_norm(ca), 2) : 0.0, cb.size() ? std::pow(spectral_norm(cb), 2) : 0.0);
        const double delta = 3.0 * double(f.joint_gram.rows()) * f.gram_error * kappa;
        const double ds2   = 2.0 * delta + delta * delta;
        g.error_bar = g.value > 0 ? std::min(std::sqrt(ds2), ds2 / g.value) : std::sqrt(ds2);
    }
    return g;
}

inline NCGleason nc_gleason(const NCPoint& z, const std::vector<NCPoint>& others, const NCFamilyOptions& opt = {})
{
    require(!others.empty(), errc::invalid_argument, "need at least one other point");
    std::vector<NCPoint> all{z};
    all.insert(all.end(), others.begin(), others.end());
    return sin_angle_with_bar(nc_family(all, opt).family);
}

inline double nc_gleason_exact(const NCPoint& z, const std::vector<NCPoint>& others)
{
    require(!others.empty(), errc::invalid_argument, "need at least one other point");
    std::vector<NCPoint> all{z};
    all.insert(all.end(), others.begin(), others.end());
    return sin_angle_with_bar(nc_family_exact(all)).value;
}

//
// nilpotent pairs Z_n^1 = [[0,a_n],[0,0]], Z_n^2 = [[0,0],[b_n,0]], p_n = a_n b_n.
// K(e1,e1) = sum conj(p)^k [(12)^k], K(e2,e2) = sum conj(p)^k [(21)^k],
// K(e1,e2) = sum conj(a p^k) [1(21)^k], K(e2,e1) = sum conj(b p^k) [2(12)^k]
//
inline NCPoint nilpotent_pair(cplx a, cplx b)
{
    CMatrix z1 = CMatrix::Zero(2, 2), z2 = CMatrix::Zero(2, 2);
    z1(0, 1) = a;
    z2(1, 0) = b;
    return NCPoint({z1, z2});
}

struct NilpotentOracle {
    std::vector<cplx> p;
    CMatrix           gram;         // 4N x 4N, node-major, K(e_p, e_q) at p * 2 + q
    SubspaceFamily    family;
    RieszReport       riesz;
    CMatrix           szego_gram;   // Szego kernels at p_n
    RieszReport       szego_riesz;  // of the normalized Szego kernels
};

inline void validate_nilpotent_parameters(const std::vector<cplx>& alphas, const std::vector<cplx>& betas)
{
    require(alphas.size() == betas.size() && !alphas.empty(), errc::dimension_mismatch, "need equally many alphas and betas");
    for (std::size_t n = 0; n < alphas.size(); ++n) {
        require(alphas[n] != cplx(0.0) && betas[n] != cplx(0.0), errc::zero_parameter, "parameters must be nonzero");
        require(std::abs(alphas[n]) < 1.0 && std::abs(betas[n]) < 1.0, errc::outside_ball, "parameters must lie in the bidisc");
    }
}

inline NilpotentOracle nilpotent_pair_oracle(const std::vector<cplx>& alphas, const std::vector<cplx>& betas)
{
    validate_nilpotent_parameters(alphas, betas);
    const Index N = Index(alphas.size());
    NilpotentOracle o;
    for (Index n = 0; n < N; ++n) o.p.push_back(alphas[std::size_t(n)] * betas[std::size_t(n)]);

    o.gram       = CMatrix::Zero(4 * N, 4 * N);
    o.szego_gram = CMatrix(N, N);
    for (Index n = 0; n < N; ++n)
        for (Index j = 0; j < N; ++j) {
            const cplx an = alphas[std::size_t(n)], aj = alphas[std::size_t(j)];
            const cplx bn = betas[std::size_t(n)], bj = betas[std::size_t(j)];
            const cplx s  = 1.0 / (1.0 - o.p[std::size_t(n)] * std::conj(o.p[std::size_t(j)]));
            o.szego_gram(n, j) = s;
            auto G = [&](int x, int y) -> cplx& { return o.gram(4 * n + x, 4 * j + y); };
            G(0, 0) = s;
            G(3, 3) = s;
            G(0, 3) = 1.0;  // only the empty word is shared
            G(3, 0) = 1.0;
            G(1, 1) = an * std::conj(aj) * s;
            G(2, 2) = bn * std::conj(bj) * s;
        }
    o.family = SubspaceFamily::from_gram(o.gram, std::vector<Index>(std::size_t(N), 4));
    o.riesz  = riesz_bounds(o.family);
    o.szego_riesz = riesz_bounds(SubspaceFamily::from_gram(o.szego_gram, std::vector<Index>(std::size_t(N), 1)));
    return o;
}

// word families of the nilpotent example
enum class NilpotentPiece { empty, p12, p21, p1_21, p2_12, other };

inline NilpotentPiece classify_word(const NCWord& w)
{
    if (w.letters.empty()) return NilpotentPiece::empty;
    for (std::size_t i = 1; i < w.letters.size(); ++i)
        if (w.letters[i] == w.letters[i - 1]) return NilpotentPiece::other;
    const bool even = w.letters.size() % 2 == 0;
    if (w.letters[0] == 1) return even ? NilpotentPiece::p12 : NilpotentPiece::p1_21;
    if (w.letters[0] == 2) return even ? NilpotentPiece::p21 : NilpotentPiece::p2_12;
    return NilpotentPiece::other;
}

inline NCSeries restrict_to_piece(const NCSeries& s, NilpotentPiece piece)
{
    NCSeries r;
    r.d       = s.d;
    r.max_len = s.max_len;
    for (const auto& [k, c] : s.coeffs)
        if (classify_word(NCWord::from_key(k, s.d)) == piece) r.coeffs.emplace(k, c);
    return r;
}

//
// x_n = sum_i x_n^i for pairwise orthogonal sequences (columns of each
// matrix); Riesz bounds of the normalized sums must lie within the extreme
// bounds of the normalized families
//
struct OrthogonalUnionReport {
    bool                     holds = false;
    RieszReport              combined;
    std::vector<RieszReport> families;
    double                   max_cross = 0.0;
};

inline RieszReport normalized_riesz(const CMatrix& columns)
{
    std::vector<Index> keep;
    for (Index n = 0; n < columns.cols(); ++n)
        if (columns.col(n).norm() > 0) keep.push_back(n);
    require(!keep.empty(), errc::rank_zero, "family has no nonzero vectors");
    CMatrix x(columns.rows(), Index(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) x.col(Index(k)) = columns.col(keep[k]);
    return riesz_bounds(SubspaceFamily::from_gram(x.adjoint() * x, std::vector<Index>(keep.size(), 1)));
}

inline OrthogonalUnionReport orthogonal_union_riesz_check(const std::vector<CMatrix>& families, double tol = 1e-10)
{
    require(!families.empty(), errc::invalid_argument, "no families");
    const Index rows = families[0].rows(), cols = families[0].cols();
    for (const auto& f : families)
        require(f.rows() == rows && f.cols() == cols, errc::dimension_mismatch, "families must share shape");
    OrthogonalUnionReport r;
    for (std::size_t i = 0; i < families.size(); ++i)
        for (std::size_t k = i + 1; k < families.size(); ++k)
            r.max_cross = std::max(r.max_cross, (families[i].adjoint() * families[k]).cwiseAbs().maxCoeff());
    require(r.max_cross <= tol, errc::not_orthogonal, "families are not pairwise orthogonal", r.max_cross);

    CMatrix sum = CMatrix::Zero(rows, cols);
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (const auto& f : families) {
        sum += f;
        r.families.push_back(normalized_riesz(f));
        lo = std::min(lo, r.families.back().lower);
        hi = std::max(hi, r.families.back().upper);
    }
    r.combined = normalized_riesz(sum);
    r.holds    = r.combined.lower >= lo - 1e-10 && r.combined.upper <= hi + 1e-10;
    return r;
}

} // namespace rkhs_lab
