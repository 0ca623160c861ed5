#pragma once
//
// Types and helpers shared by every rkhs_lab module.
//

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace rkhs_lab {

using cplx    = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using Index   = Eigen::Index;

enum class errc {
    invalid_argument,
    not_commuting,
    degenerate_deflation,
    dimension_mismatch,
    singular_resolvent,
    outside_domain,
    spectrum_on_boundary,
    spec_mismatch,
    rank_zero,
    singular_gram,
    degenerate_split,
    ill_conditioned,
    kernel_in_span,
    family_empty,
    outside_ball,
    zero_parameter,
    not_orthogonal,
    truncation_too_large,
};

inline const char* to_string(errc code)
{
    switch (code) {
        case errc::invalid_argument:     return "InvalidArgument";
        case errc::not_commuting:        return "NotCommuting";
        case errc::degenerate_deflation: return "DegenerateDeflation";
        case errc::dimension_mismatch:   return "DimensionMismatch";
        case errc::singular_resolvent:   return "SingularResolvent";
        case errc::outside_domain:       return "OutsideDomain";
        case errc::spectrum_on_boundary: return "SpectrumOnBoundary";
        case errc::spec_mismatch:        return "SpecMismatch";
        case errc::rank_zero:            return "RankZero";
        case errc::singular_gram:        return "SingularGram";
        case errc::degenerate_split:     return "DegenerateSplit";
        case errc::ill_conditioned:      return "IllConditioned";
        case errc::kernel_in_span:       return "KernelInSpan";
        case errc::family_empty:         return "FamilyEmpty";
        case errc::outside_ball:         return "OutsideBall";
        case errc::zero_parameter:       return "ZeroParameter";
        case errc::not_orthogonal:       return "NotOrthogonal";
        case errc::truncation_too_large: return "TruncationTooLarge";
    }
    return "Unknown";
}

//
// every failure raised by the library; `residual` carries the offending
// numeric quantity where one exists (commutator defect, deflation residual, ...)
//
class error : public std::runtime_error
{
public:
    error(errc code, const std::string& what, double residual = 0.0)
        : std::runtime_error(std::string(to_string(code)) + ": " + what)
        , code_(code)
        , residual_(residual)
    {}

    errc   code() const noexcept { return code_; }
    double residual() const noexcept { return residual_; }

private:
    errc   code_;
    double residual_;
};

inline void require(bool cond, errc code, const std::string& what, double residual = 0.0)
{
    if (!cond)
        throw error(code, what, residual);
}

// relative eigenvalue threshold for numeric rank and trivial-intersection tests
inline constexpr double default_rank_tol = 1e-9;

// slack on the smallest eigenvalue when testing positive semi-definiteness
inline constexpr double default_psd_slack = 1e-10;

//
// multi-indices l in N^d, enumerated graded by total degree and then
// lexicographically; every prefix of the list is closed under |l| <= D'
//
using MultiIndex = std::vector<int>;

inline int total_degree(const MultiIndex& l)
{
    int s = 0;
    for (int x : l) s += x;
    return s;
}

namespace detail {

inline void compositions(int d, int n, MultiIndex& cur, int pos, std::vector<MultiIndex>& out)
{
    if (pos == d - 1) {
        cur[pos] = n;
        out.push_back(cur);
        return;
    }
    for (int k = 0; k <= n; ++k) {
        cur[pos] = k;
        compositions(d, n - k, cur, pos + 1, out);
    }
}

} // namespace detail

// all l in N^d with |l| = n, lexicographic
inline std::vector<MultiIndex> multi_indices_of_degree(int d, int n)
{
    std::vector<MultiIndex> out;
    MultiIndex cur(d, 0);
    detail::compositions(d, n, cur, 0, out);
    return out;
}

struct GradedIndexSet {
    int                     d      = 0;
    int                     degree = 0;
    std::vector<MultiIndex> list;
    std::map<MultiIndex, std::size_t> position;
};

// cached, shared graded index sets; safe to call from several threads
inline std::shared_ptr<const GradedIndexSet> graded_indices(int d, int degree)
{
    static std::mutex mtx;
    static std::map<std::pair<int, int>, std::shared_ptr<const GradedIndexSet>> cache;

    require(d >= 1 && degree >= 0, errc::invalid_argument, "graded_indices needs d >= 1 and degree >= 0");

    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find({d, degree});
    if (it != cache.end())
        return it->second;

    auto set    = std::make_shared<GradedIndexSet>();
    set->d      = d;
    set->degree = degree;
    for (int n = 0; n <= degree; ++n)
        for (auto& l : multi_indices_of_degree(d, n))
            set->list.push_back(std::move(l));
    for (std::size_t i = 0; i < set->list.size(); ++i)
        set->position.emplace(set->list[i], i);

    cache.emplace(std::make_pair(d, degree), set);
    return set;
}

//
// worker count: explicit request, else RKHS_LAB_THREADS, else 1
//
inline unsigned resolve_threads(int requested = 0)
{
    if (requested > 0)
        return unsigned(requested);
    if (const char* env = std::getenv("RKHS_LAB_THREADS")) {
        int n = std::atoi(env);
        if (n > 0)
            return unsigned(n);
    }
    return 1;
}

//
// static-chunked parallel loop over [0, n); f(i) must only write to slots
// owned by i so results do not depend on the worker count
//
template <typename F>
void parallel_for(std::size_t n, unsigned threads, F&& f)
{
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    threads = unsigned(std::min<std::size_t>(threads, n));
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += threads) f(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// largest singular value
inline double spectral_norm(const CMatrix& a)
{
    if (a.size() == 0)
        return 0.0;
    Eigen::JacobiSVD<CMatrix> svd(a);
    return svd.singularValues()(0);
}

// smallest eigenvalue of the Hermitian part
inline double min_hermitian_eigenvalue(const CMatrix& a)
{
    if (a.size() == 0)
        return 0.0;
    CMatrix h = 0.5 * (a + a.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

inline bool is_hermitian(const CMatrix& a, double tol)
{
    if (a.rows() != a.cols())
        return false;
    double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

} // namespace rkhs_lab
