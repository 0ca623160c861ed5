#pragma once
//
// JSON and CSV serialization. Complex numbers are [re, im] pairs and
// matrices are arrays of rows. Object readers reject unknown keys.
//

#include "rkhs_lab/geometry.hpp"
#include "rkhs_lab/matrix_calculus.hpp"
#include "rkhs_lab/nc_space.hpp"
#include "rkhs_lab/random_sequences.hpp"
#include "rkhs_lab/rkhs_kernels.hpp"

#include <json.hpp>

#include <cmath>
#include <initializer_list>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <string>

namespace rkhs_lab::io {

using json = nlohmann::ordered_json;

inline void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& what)
{
    require(j.is_object(), errc::invalid_argument, what + " must be a JSON object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        require(ok.count(k) > 0, errc::invalid_argument, what + ": unknown field \"" + k + "\"");
}

template <typename T>
T get_field(const json& j, const char* key, const std::string& what)
{
    require(j.contains(key), errc::invalid_argument, what + ": missing field \"" + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw error(errc::invalid_argument, what + ": field \"" + key + "\" has the wrong type");
    }
}

template <typename T>
T get_field_or(const json& j, const char* key, T fallback, const std::string& what)
{
    return j.contains(key) ? get_field<T>(j, key, what) : fallback;
}

// ---- scalars and matrices ----------------------------------------------

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

// accepts [re, im] or a bare real number
inline cplx complex_from_json(const json& j)
{
    if (j.is_number()) return {j.get<double>(), 0.0};
    require(j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number(), errc::invalid_argument,
            "complex numbers are written [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline json to_json(const std::vector<cplx>& v)
{
    json a = json::array();
    for (auto z : v) a.push_back(to_json(z));
    return a;
}

inline std::vector<cplx> complex_list_from_json(const json& j)
{
    require(j.is_array(), errc::invalid_argument, "expected an array of complex numbers");
    std::vector<cplx> v;
    for (const auto& x : j) v.push_back(complex_from_json(x));
    return v;
}

inline json to_json(const CMatrix& a)
{
    json rows = json::array();
    for (Index r = 0; r < a.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < a.cols(); ++c) row.push_back(to_json(a(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json to_json(const CVector& v)
{
    json a = json::array();
    for (Index k = 0; k < v.size(); ++k) a.push_back(to_json(v(k)));
    return a;
}

inline CVector vector_from_json(const json& j)
{
    auto v = complex_list_from_json(j);
    CVector x(Index(v.size()));
    for (std::size_t k = 0; k < v.size(); ++k) x(Index(k)) = v[k];
    return x;
}

inline CMatrix matrix_from_json(const json& j)
{
    require(j.is_array() && !j.empty(), errc::invalid_argument, "matrices are nonempty arrays of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    CMatrix a(Index(j.size()), Index(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        require(j[r].is_array() && j[r].size() == cols, errc::dimension_mismatch, "matrix rows differ in length");
        for (std::size_t c = 0; c < cols; ++c) a(Index(r), Index(c)) = complex_from_json(j[r][c]);
    }
    return a;
}

inline json to_json(const Eigen::MatrixXd& a)
{
    json rows = json::array();
    for (Index r = 0; r < a.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < a.cols(); ++c) row.push_back(a(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---- tuples and NC points ----------------------------------------------

namespace detail {

inline std::vector<CMatrix> tuple_matrices(const json& j, bool nc)
{
    const std::string what = nc ? "NC point" : "matrix tuple";
    if (nc) {
        require_keys(j, {"nc", "d", "m", "matrices"}, what);
        require(get_field<bool>(j, "nc", what), errc::invalid_argument, "NC points carry \"nc\": true");
    } else {
        require_keys(j, {"d", "m", "matrices"}, what);
    }
    const int d = get_field<int>(j, "d", what);
    const int m = get_field<int>(j, "m", what);
    require(d >= 1 && m >= 1, errc::invalid_argument, what + " needs d >= 1 and m >= 1");
    const json& mats = j.at("matrices");
    require(mats.is_array() && int(mats.size()) == d, errc::dimension_mismatch, what + ": expected d matrices");
    std::vector<CMatrix> out;
    for (const auto& x : mats) {
        CMatrix a = matrix_from_json(x);
        require(a.rows() == m && a.cols() == m, errc::dimension_mismatch, what + ": matrices must be m x m");
        out.push_back(std::move(a));
    }
    return out;
}

} // namespace detail

inline json to_json(const MatrixTuple& t)
{
    json mats = json::array();
    for (const auto& a : t.matrices()) mats.push_back(to_json(a));
    return json{{"d", t.d()}, {"m", t.m()}, {"matrices", std::move(mats)}};
}

inline MatrixTuple tuple_from_json(const json& j) { return MatrixTuple(detail::tuple_matrices(j, false)); }

inline json to_json(const NCPoint& z)
{
    json mats = json::array();
    for (const auto& a : z.matrices) mats.push_back(to_json(a));
    return json{{"nc", true}, {"d", z.d()}, {"m", z.n()}, {"matrices", std::move(mats)}};
}

inline NCPoint nc_point_from_json(const json& j) { return NCPoint(detail::tuple_matrices(j, true)); }

// ---- kernels and series -------------------------------------------------

inline json to_json(const KernelSpec& s) { return json{{"d", s.d}, {"alpha", s.alpha}}; }

inline KernelSpec kernel_spec_from_json(const json& j)
{
    require_keys(j, {"d", "alpha"}, "kernel");
    const int d = get_field<int>(j, "d", "kernel");
    auto alpha  = get_field_or<std::vector<int>>(j, "alpha", std::vector<int>(std::size_t(std::max(d, 0)), 1), "kernel");
    return KernelSpec(d, std::move(alpha));
}

inline std::string multi_index_key(const MultiIndex& l)
{
    std::string s;
    for (std::size_t i = 0; i < l.size(); ++i) s += (i ? "," : "") + std::to_string(l[i]);
    return s;
}

inline MultiIndex parse_multi_index(const std::string& s)
{
    MultiIndex l;
    std::stringstream in(s);
    std::string part;
    while (std::getline(in, part, ',')) {
        std::size_t used = 0;
        int x = -1;
        try {
            x = std::stoi(part, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        require(used == part.size() && x >= 0, errc::invalid_argument, "bad multi-index \"" + s + "\"");
        l.push_back(x);
    }
    return l;
}

inline json to_json(const KernelVector& k)
{
    json c = json::object();
    for (const auto& [l, a] : k.to_map()) c[multi_index_key(l)] = to_json(a);
    return json{{"spec", to_json(k.spec)}, {"degree", k.degree}, {"tail_bound", k.tail_bound}, {"coeffs", std::move(c)}};
}

inline KernelVector kernel_vector_from_json(const json& j)
{
    require_keys(j, {"spec", "degree", "tail_bound", "coeffs"}, "kernel vector");
    KernelVector k = zero_vector(kernel_spec_from_json(j.at("spec")), get_field<int>(j, "degree", "kernel vector"));
    k.tail_bound = get_field_or<double>(j, "tail_bound", 0.0, "kernel vector");
    const auto& pos = graded_indices(k.spec.d, k.degree)->position;
    const json coeffs = get_field<json>(j, "coeffs", "kernel vector");
    for (const auto& [key, v] : coeffs.items()) {
        auto l = parse_multi_index(key);
        require(int(l.size()) == k.spec.d, errc::dimension_mismatch, "multi-index length differs from d");
        auto it = pos.find(l);
        require(it != pos.end(), errc::invalid_argument, "multi-index exceeds the degree");
        k.coeffs(Index(it->second)) = complex_from_json(v);
    }
    return k;
}

inline json to_json(const NCSeries& s)
{
    json c = json::object();
    for (const auto& [w, a] : s.by_word()) c[w] = to_json(a);
    return json{{"d", s.d}, {"max_len", s.max_len}, {"tail_bound", s.tail_bound}, {"coeffs", std::move(c)}};
}

inline NCSeries nc_series_from_json(const json& j)
{
    require_keys(j, {"d", "max_len", "tail_bound", "coeffs"}, "NC series");
    NCSeries s;
    s.d          = get_field<int>(j, "d", "NC series");
    s.max_len    = get_field<int>(j, "max_len", "NC series");
    s.tail_bound = get_field_or<double>(j, "tail_bound", 0.0, "NC series");
    require(s.d >= 1 && s.d <= 9 && s.max_len >= 0, errc::invalid_argument, "NC series needs 1 <= d <= 9, max_len >= 0");
    const json coeffs = get_field<json>(j, "coeffs", "NC series");
    for (const auto& [w, v] : coeffs.items()) s.add(NCWord::parse(w), complex_from_json(v));
    return s;
}

// terms: [{"index": [..], "coeff": [re, im]}, ...]
inline PolySeries poly_from_json(const json& j)
{
    require_keys(j, {"d", "degree", "terms"}, "polynomial");
    const int d = get_field<int>(j, "d", "polynomial");
    const json& terms = get_field<json>(j, "terms", "polynomial");
    require(terms.is_array(), errc::invalid_argument, "polynomial terms must be an array");
    int deg = 0;
    for (const auto& t : terms) {
        require_keys(t, {"index", "coeff"}, "polynomial term");
        deg = std::max(deg, total_degree(get_field<MultiIndex>(t, "index", "polynomial term")));
    }
    PolySeries p(d, get_field_or<int>(j, "degree", deg, "polynomial"));
    for (const auto& t : terms) p.add(t.at("index").get<MultiIndex>(), complex_from_json(t.at("coeff")));
    return p;
}

inline json to_json(const PolySeries& p)
{
    json terms = json::array();
    for (const auto& [l, a] : p.coeffs) terms.push_back(json{{"index", l}, {"coeff", to_json(a)}});
    return json{{"d", p.d}, {"degree", p.degree_bound}, {"terms", std::move(terms)}};
}

// ---- reports ------------------------------------------------------------

inline json to_json(const RieszReport& r)
{
    json j{{"lower", r.lower},
           {"upper", r.upper},
           {"error_bar", r.error_bar},
           {"block_refined", r.block_refined}};
    j["riesz_constant_estimate"] = std::isfinite(r.riesz_constant_estimate) ? json(r.riesz_constant_estimate) : json(nullptr);
    return j;
}

inline json to_json(const SeparationReport& s)
{
    return json{{"pairwise", to_json(s.pairwise)},
                {"weak_constant", s.weak_constant},
                {"strong_products", s.strong_products},
                {"strong_constant", s.strong_constant}};
}

inline RadiiSpec radii_from_json(const json& j)
{
    require_keys(j, {"d", "exponents"}, "radii");
    RadiiSpec r;
    r.d         = get_field<int>(j, "d", "radii");
    r.exponents = get_field<std::vector<MultiIndex>>(j, "exponents", "radii");
    r.validate();
    return r;
}

// ---- CSV ----------------------------------------------------------------

inline std::string format_double(double x)
{
    std::ostringstream o;
    o << std::setprecision(17) << (x == 0.0 ? 0.0 : x);
    return o.str();
}

// one line per entry: row,col,re,im
inline std::string gram_csv(const CMatrix& g)
{
    std::ostringstream o;
    o << "row,col,re,im\n";
    for (Index r = 0; r < g.rows(); ++r)
        for (Index c = 0; c < g.cols(); ++c)
            o << r << ',' << c << ',' << format_double(g(r, c).real()) << ',' << format_double(g(r, c).imag()) << '\n';
    return o.str();
}

namespace detail {

inline void flatten(const json& j, const std::string& path, std::ostringstream& o)
{
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) flatten(v, path.empty() ? k : path + "." + k, o);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], path + "." + std::to_string(i), o);
    } else if (j.is_number_float()) {
        o << path << ',' << format_double(j.get<double>()) << '\n';
    } else if (j.is_string()) {
        o << path << ',' << j.get<std::string>() << '\n';
    } else {
        o << path << ',' << j.dump() << '\n';
    }
}

} // namespace detail

// key,value lines with dotted paths
inline std::string flat_csv(const json& j)
{
    std::ostringstream o;
    o << "key,value\n";
    detail::flatten(j, "", o);
    return o.str();
}

} // namespace rkhs_lab::io
