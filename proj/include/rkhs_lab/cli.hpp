#pragma once
//
// Command-line front end: parses a JSON manifest, runs one library
// operation and writes a report. run() is usable in-process.
//

#include "rkhs_lab/interpolation.hpp"
#include "rkhs_lab/io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace rkhs_lab::cli {

using io::json;

inline constexpr const char* manifest_version = "rkhs_lab/1";

enum exit_code : int { ok = 0, bad_input = 2, infeasible = 3, undecided = 4 };

struct Options {
    std::string                  command;
    std::string                  manifest;
    std::string                  out_dir;
    std::string                  format = "json";
    std::optional<int>           degree;
    std::optional<int>           max_word_len;
    std::optional<std::uint64_t> seed;
    int                          threads = 0;
    std::optional<double>        tol;
};

struct Outcome {
    json        result;
    json        provenance = json::object();
    int         code = ok;
    std::string summary;
    std::optional<std::string> csv;  // table replacing the flat CSV form
};

namespace detail {

struct Context {
    const Options& opt;
    const json&    manifest;
    unsigned       threads;

    std::uint64_t seed() const
    {
        if (opt.seed) return *opt.seed;
        return io::get_field_or<std::uint64_t>(manifest, "seed", 0, "manifest");
    }

    int degree() const
    {
        int d = opt.degree ? *opt.degree : io::get_field_or<int>(manifest, "degree", 40, "manifest");
        require(d >= 0, errc::invalid_argument, "--degree must be >= 0");
        return d;
    }

    int max_word_len() const
    {
        int l = opt.max_word_len ? *opt.max_word_len : io::get_field_or<int>(manifest, "max_word_len", 40, "manifest");
        require(l >= 0, errc::invalid_argument, "--max-word-len must be >= 0");
        return l;
    }

    double tol() const
    {
        double t = opt.tol ? *opt.tol : io::get_field_or<double>(manifest, "tol", default_rank_tol, "manifest");
        require(t > 0 && t < 1, errc::invalid_argument, "--tol must lie in (0, 1)");
        return t;
    }

    bool flag(const char* key, bool fallback) const { return io::get_field_or<bool>(manifest, key, fallback, "manifest"); }

    const json& field(const char* key) const
    {
        require(manifest.contains(key), errc::invalid_argument, std::string("manifest: missing field \"") + key + "\"");
        return manifest.at(key);
    }
};

// a tuple object or, for scalar points, a plain list of coordinates
inline MatrixTuple node_from_json(const json& j)
{
    if (j.is_array()) return MatrixTuple::scalar(io::complex_list_from_json(j));
    return io::tuple_from_json(j);
}

inline std::vector<MatrixTuple> nodes_from_json(const json& j)
{
    require(j.is_array() && !j.empty(), errc::invalid_argument, "\"nodes\" must be a nonempty array");
    std::vector<MatrixTuple> out;
    for (const auto& x : j) out.push_back(node_from_json(x));
    return out;
}

inline CMatrix target_from_json(const json& j)
{
    const bool scalar = j.is_number() || (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number());
    if (scalar) return CMatrix::Constant(1, 1, io::complex_from_json(j));
    return io::matrix_from_json(j);
}

inline KernelSpec kernel_or_szego(const Context& c, int d)
{
    return c.manifest.contains("kernel") ? io::kernel_spec_from_json(c.manifest.at("kernel")) : KernelSpec::szego(d);
}

inline std::string format_complex(cplx z)
{
    auto num = [](double x) {
        std::ostringstream o;
        o << std::setprecision(10) << (std::abs(x) < 5e-16 ? 0.0 : x);
        return o.str();
    };
    if (std::abs(z.imag()) < 5e-16) return num(z.real());
    if (std::abs(z.real()) < 5e-16) return num(z.imag()) + "i";
    return num(z.real()) + (z.imag() < 0 ? "-" : "+") + num(std::abs(z.imag())) + "i";
}

inline std::string format_matrix(const CMatrix& a)
{
    std::string s = "[";
    for (Index r = 0; r < a.rows(); ++r) {
        s += r ? ", [" : "[";
        for (Index k = 0; k < a.cols(); ++k) s += (k ? ", " : "") + format_complex(a(r, k));
        s += "]";
    }
    return s + "]";
}

inline std::string fmt(double x)
{
    std::ostringstream o;
    o << std::setprecision(10) << x;
    return o.str();
}

inline int verdict(double norm, double error_bar)
{
    const double margin = std::max(error_bar, 1e-10);
    if (norm <= 1.0 - margin) return ok;
    if (norm > 1.0 + margin) return infeasible;
    return undecided;
}

inline const char* verdict_name(int code)
{
    return code == ok ? "feasible" : code == infeasible ? "infeasible" : "undecided";
}

inline InterpolationProblem problem_from(const Context& c)
{
    InterpolationProblem p;
    p.nodes = nodes_from_json(c.field("nodes"));
    const json& t = c.field("targets");
    require(t.is_array(), errc::invalid_argument, "\"targets\" must be an array");
    for (const auto& x : t) p.targets.push_back(target_from_json(x));
    p.spec        = kernel_or_szego(c, p.nodes.front().d());
    p.closed_form = c.flag("closed_form", true);
    p.degree      = c.degree();
    p.rank_tol    = c.tol();
    p.threads     = c.threads;
    p.validate();
    return p;
}

inline json family_summary(const SubspaceFamily& f)
{
    std::vector<Index> sizes;
    for (std::size_t n = 0; n < f.size(); ++n) sizes.push_back(f.block_size(n));
    return json{{"block_sizes", sizes}, {"ranks", f.ranks}, {"gram_error", f.gram_error}};
}

// ---- commands -----------------------------------------------------------

inline Outcome cmd_eval(const Context& c)
{
    io::require_keys(c.manifest, {"version", "command", "seed", "node", "polynomial", "method", "quad_points"}, "eval manifest");
    const MatrixTuple t  = node_from_json(c.field("node"));
    const PolySeries  f  = io::poly_from_json(c.field("polynomial"));
    const std::string method = io::get_field_or<std::string>(c.manifest, "method", "poly", "eval manifest");
    require(method == "poly" || method == "cauchy" || method == "both", errc::invalid_argument,
            "\"method\" must be poly, cauchy or both");
    const int q = io::get_field_or<int>(c.manifest, "quad_points", 64, "eval manifest");
    Outcome o;
    CMatrix value;
    if (method != "cauchy") {
        value = eval_poly(t, f);
        o.result["matrix"] = io::to_json(value);
    }
    if (method != "poly") {
        CMatrix cv = eval_cauchy(t, f, q);
        o.result["cauchy_matrix"] = io::to_json(cv);
        o.provenance["quad_points"] = q;
        if (method == "both") o.result["max_difference"] = (cv - value).cwiseAbs().maxCoeff();
        else value = cv;
    }
    o.result["commutator_defect"] = commutator_defect(t);
    o.summary = "f(A) = " + format_matrix(value);
    return o;
}

inline Outcome cmd_spectrum(const Context& c)
{
    io::require_keys(c.manifest, {"version", "command", "seed", "node"}, "spectrum manifest");
    const MatrixTuple t = node_from_json(c.field("node"));
    auto tri = joint_triangularize(t);
    auto js  = spectrum_of_triangular(tri.upper);
    Outcome o;
    json pts = json::array();
    for (const auto& p : js.points) pts.push_back(io::to_json(p));
    o.result = json{{"points", pts}, {"triangularization_residual", tri.residual}, {"commutator_defect", commutator_defect(t)}};
    std::string s;
    for (const auto& p : js.points) {
        s += s.empty() ? "(" : ", (";
        for (std::size_t i = 0; i < p.size(); ++i) s += (i ? ", " : "") + format_complex(p[i]);
        s += ")";
    }
    o.summary = "joint spectrum " + s;
    return o;
}

inline SubspaceFamily kernel_family_from(const Context& c, Outcome& o)
{
    auto nodes = nodes_from_json(c.field("nodes"));
    const KernelSpec spec = kernel_or_szego(c, nodes.front().d());
    const bool exact = c.flag("closed_form", false);
    o.provenance["kernel"] = io::to_json(spec);
    o.provenance["closed_form"] = exact;
    if (!exact) o.provenance["degree"] = c.degree();
    o.provenance["tol"] = c.tol();
    return exact ? kernel_family_exact(spec, nodes, c.threads, c.tol()) : kernel_family(spec, nodes, c.degree(), c.threads, c.tol());
}

inline Outcome cmd_gram(const Context& c)
{
    io::require_keys(c.manifest, {"version", "command", "seed", "kernel", "nodes", "closed_form", "degree", "tol"}, "gram manifest");
    Outcome o;
    auto f = kernel_family_from(c, o);
    o.result = family_summary(f);
    o.result["gram"] = io::to_json(f.joint_gram);
    o.csv = io::gram_csv(f.joint_gram);
    o.summary = "gram " + std::to_string(f.joint_gram.rows()) + "x" + std::to_string(f.joint_gram.cols())
              + ", entry error <= " + fmt(f.gram_error);
    return o;
}

inline Outcome cmd_riesz(const Context& c)
{
    io::require_keys(c.manifest, {"version", "command", "seed", "subspaces", "kernel", "nodes", "closed_form", "degree", "tol"},
                     "riesz manifest");
    Outcome o;
    SubspaceFamily f;
    if (c.manifest.contains("subspaces")) {
        require(!c.manifest.contains("nodes"), errc::invalid_argument, "give either \"subspaces\" or \"nodes\", not both");
        const json& subs = c.field("subspaces");
        require(subs.is_array() && !subs.empty(), errc::invalid_argument, "\"subspaces\" must be a nonempty array");
        std::vector<CVector> cols;
        std::vector<Index>   sizes;
        for (const auto& s : subs) {
            require(s.is_array() && !s.empty(), errc::invalid_argument, "each subspace is a nonempty list of vectors");
            for (const auto& v : s) {
                cols.push_back(io::vector_from_json(v));
                require(cols.back().size() == cols.front().size(), errc::dimension_mismatch, "vectors differ in length");
            }
            sizes.push_back(Index(s.size()));
        }
        CMatrix v(cols.front().size(), Index(cols.size()));
        for (std::size_t k = 0; k < cols.size(); ++k) v.col(Index(k)) = cols[k];
        CMatrix g = v.adjoint() * v;
        const double err = 4 * std::numeric_limits<double>::epsilon() * double(v.rows()) * g.cwiseAbs().maxCoeff();
        f = SubspaceFamily::from_gram(std::move(g), sizes, err, c.tol());
        o.provenance["tol"] = c.tol();
    } else {
        f = kernel_family_from(c, o);
    }
    auto r = riesz_bounds(f);
    o.result = family_summary(f);
    o.result["riesz"] = io::to_json(r);
    o.result["bessel_bound"] = bessel_bound(f);
    o.summary = "riesz lower " + fmt(r.lower) + " upper " + fmt(r.upper) + " (+/- " + fmt(r.error_bar) + ")";
    return o;
}

inline Outcome cmd_separation(const Context& c)
{
    io::require_keys(c.manifest, {"version", "command", "seed", "points"}, "separation manifest");
    const json& p = c.field("points");
    require(p.is_array(), errc::invalid_argument, "\"points\" must be an array of coordinate lists");
    std::vector<std::vector<cplx>> pts;
    for (const auto& x : p) pts.push_back(io::complex_list_from_json(x));
    auto s = separation_report(pts);
    Outcome o;
    o.result  = io::to_json(s);
    o.summary = "weak separation " + fmt(s.weak_constant) + ", strong separation " + fmt(s.strong_constant);
    return o;
}

inline Outcome cmd_pick(const Context& c)
{
    io::require_keys(c.manifest, {"version", "command", "seed", "kernel", "nodes", "targets", "closed_form", "degree", "tol"},
                     "pick manifest");
    auto p = problem_from(c);
    auto r = compression_operator(p);
    Outcome o;
    o.provenance = json{{"kernel", io::to_json(p.spec)}, {"closed_form", p.closed_form}, {"tol", p.rank_tol}};
    if (!p.closed_form) o.provenance["degree"] = p.degree;
    o.result = json{{"norm", r.norm},
                    {"error_bar", r.error_bar},
                    {"rank", r.rank},
                    {"min_eigenvalue", r.min_eigenvalue},
                    {"dropped_mass", r.dropped_mass},
                    {"reproduction_residual", r.reproduction_residual}};
    bool scalar = p.spec.d == 1 && p.spec.alpha == std::vector<int>{1};
    for (const auto& t : p.nodes) scalar = scalar && t.m() == 1;
    if (scalar) {
        std::vector<cplx> z, w;
        for (std::size_t j = 0; j < p.nodes.size(); ++j) z.push_back(p.nodes[j][0](0, 0)), w.push_back(p.targets[j](0, 0));
        CMatrix pm = pick_matrix_scalar(z, w);
        o.result["pick_matrix"] = io::to_json(pm);
        o.result["pick_min_eigenvalue"] = min_hermitian_eigenvalue(pm);
        o.result["pick_psd"] = is_psd(pm);
    }
    o.code = verdict(r.norm, r.error_bar);
    o.result["verdict"] = verdict_name(o.code);
    o.summary = std::string(verdict_name(o.code)) + ": minimal norm " + fmt(r.norm) + " (+/- " + fmt(r.error_bar) + ")";
    return o;
}

inline Outcome cmd_parrott(const Context& c)
{
    io::require_keys(c.manifest, {"version", "command", "seed", "A", "B", "C"}, "parrott manifest");
    const CMatrix a = io::matrix_from_json(c.field("A"));
    const CMatrix b = io::matrix_from_json(c.field("B"));
    const CMatrix m = io::matrix_from_json(c.field("C"));
    auto r = parrott_complete(a, b, m);
    Outcome o;
    o.result  = json{{"D", io::to_json(r.d)}, {"gamma", r.gamma}, {"block_norm", r.block_norm}, {"closed_form", r.closed_form}};
    o.summary = "gamma " + fmt(r.gamma) + ", D = " + format_matrix(r.d);
    return o;
}

inline Outcome cmd_extend(const Context& c)
{
    io::require_keys(c.manifest,
                     {"version", "command", "seed", "kernel", "nodes", "targets", "point", "closed_form", "degree", "tol"},
                     "extend manifest");
    auto p = problem_from(c);
    auto z = io::complex_list_from_json(c.field("point"));
    auto r = one_step_extension(p, z);
    Outcome o;
    o.provenance = json{{"kernel", io::to_json(p.spec)}, {"closed_form", p.closed_form}, {"tol", p.rank_tol}};
    if (!p.closed_form) o.provenance["degree"] = p.degree;
    o.result = json{{"w", io::to_json(r.w)},
                    {"extended_norm", r.extended_norm},
                    {"parrott_prediction", r.parrott_prediction},
                    {"base_norm", r.base_norm},
                    {"compressed_norm", r.compressed_norm},
                    {"consistent", r.consistent},
                    {"residual_ratio", r.residual_ratio}};
    o.summary = "w = " + format_complex(r.w) + ", extended norm " + fmt(r.extended_norm) + " (base " + fmt(r.base_norm) + ")";
    return o;
}

inline Outcome cmd_random(const Context& c)
{
    io::require_keys(c.manifest, {"version", "command", "seed", "radii", "dims", "trials", "degree", "closed_form"},
                     "random manifest");
    MonteCarloConfig cfg;
    cfg.radii       = io::radii_from_json(c.field("radii"));
    cfg.dims        = io::get_field_or<std::vector<Index>>(c.manifest, "dims", std::vector<Index>(cfg.radii.size(), 1), "random manifest");
    cfg.trials      = io::get_field_or<int>(c.manifest, "trials", 1, "random manifest");
    cfg.degree      = c.degree();
    cfg.closed_form = c.flag("closed_form", true);
    cfg.seed        = c.seed();
    cfg.threads     = c.threads;
    require(cfg.trials >= 1, errc::invalid_argument, "\"trials\" must be >= 1");
    auto s = monte_carlo_riesz(cfg);
    auto h = dyadic_histogram(generate_random_sequence(cfg.radii, cfg.seed), cfg.radii.d);
    auto stats = interpolation_statistics(h, cfg.radii.d);
    Outcome o;
    o.provenance = json{{"closed_form", cfg.closed_form}};
    if (!cfg.closed_form) o.provenance["degree"] = cfg.degree;
    json trials = json::array();
    for (const auto& t : s.trials)
        trials.push_back(json{{"trial", t.trial}, {"lower", t.lower}, {"upper", t.upper}, {"error_bar", t.error_bar},
                              {"sufficient_sum", t.sufficient}, {"necessary_sum", t.necessary}});
    o.result = json{{"min_lower", s.min_lower},
                    {"median_lower", s.median_lower},
                    {"max_upper", s.max_upper},
                    {"sufficient_sum", stats.sufficient},
                    {"necessary_sum", stats.necessary},
                    {"trials", std::move(trials)}};
    o.csv = to_csv(s);
    o.summary = std::to_string(cfg.trials) + " trials, lower min " + fmt(s.min_lower) + " median " + fmt(s.median_lower)
              + ", upper max " + fmt(s.max_upper);
    return o;
}

inline std::vector<NCPoint> nc_points_from(const Context& c)
{
    const json& p = c.field("points");
    require(p.is_array() && !p.empty(), errc::invalid_argument, "\"points\" must be a nonempty array of NC points");
    std::vector<NCPoint> out;
    for (const auto& x : p) out.push_back(io::nc_point_from_json(x));
    return out;
}

inline Outcome cmd_nc_gram(const Context& c)
{
    io::require_keys(c.manifest, {"version", "command", "seed", "points", "exact", "max_word_len", "prune_tol", "tol"},
                     "nc-gram manifest");
    auto pts = nc_points_from(c);
    Outcome o;
    SubspaceFamily f;
    if (c.flag("exact", false)) {
        f = nc_family_exact(pts, c.threads, c.tol());
        o.provenance = json{{"exact", true}, {"tol", c.tol()}};
        o.result = json::object();
    } else {
        NCFamilyOptions fo;
        fo.truncation.max_len   = c.max_word_len();
        fo.truncation.prune_tol = io::get_field_or<double>(c.manifest, "prune_tol", fo.truncation.prune_tol, "nc-gram manifest");
        fo.auto_increase        = false;
        fo.threads              = c.threads;
        fo.rank_tol             = c.tol();
        auto nf = nc_family(pts, fo);
        f = nf.family;
        o.provenance = json{{"exact", false}, {"max_word_len", nf.max_len}, {"prune_tol", fo.truncation.prune_tol}, {"tol", fo.rank_tol}};
        o.result = json{{"max_tail", nf.max_tail}};
    }
    auto r = riesz_bounds(f);
    o.result.update(family_summary(f));
    o.result["riesz"] = io::to_json(r);
    o.result["gram"]  = io::to_json(f.joint_gram);
    o.csv = io::gram_csv(f.joint_gram);
    o.summary = "NC gram " + std::to_string(f.joint_gram.rows()) + "x" + std::to_string(f.joint_gram.cols()) + ", riesz lower "
              + fmt(r.lower) + " upper " + fmt(r.upper);
    return o;
}

inline Outcome cmd_nc_oracle(const Context& c)
{
    io::require_keys(c.manifest, {"version", "command", "seed", "alphas", "betas", "compare", "max_word_len", "prune_tol"},
                     "nc-oracle manifest");
    auto alphas = io::complex_list_from_json(c.field("alphas"));
    auto betas  = io::complex_list_from_json(c.field("betas"));
    require(alphas.size() == betas.size() && !alphas.empty(), errc::dimension_mismatch, "alphas and betas need equal nonzero length");
    auto orc = nilpotent_pair_oracle(alphas, betas);
    Outcome o;
    o.result = json{{"p", io::to_json(orc.p)},
                    {"riesz", io::to_json(orc.riesz)},
                    {"szego_riesz", io::to_json(orc.szego_riesz)},
                    {"gram", io::to_json(orc.gram)}};
    o.summary = "oracle riesz lower " + fmt(orc.riesz.lower) + ", Szego pair lower " + fmt(orc.szego_riesz.lower);
    if (c.flag("compare", true)) {
        std::vector<NCPoint> pts;
        for (std::size_t n = 0; n < alphas.size(); ++n) pts.push_back(nilpotent_pair(alphas[n], betas[n]));
        NCFamilyOptions fo;
        fo.truncation.max_len   = c.max_word_len();
        fo.truncation.prune_tol = io::get_field_or<double>(c.manifest, "prune_tol", 0.0, "nc-oracle manifest");
        fo.auto_increase        = false;
        fo.threads              = c.threads;
        auto nf = nc_family(pts, fo);
        auto tr = riesz_bounds(nf.family);
        const double dev = (nf.family.joint_gram - orc.gram).cwiseAbs().maxCoeff();
        o.provenance = json{{"max_word_len", nf.max_len}, {"prune_tol", fo.truncation.prune_tol}};
        o.result["truncated"] = json{{"max_gram_deviation", dev},
                                     {"gram_error", nf.family.gram_error},
                                     {"within_tail_bounds", dev <= nf.family.gram_error},
                                     {"riesz", io::to_json(tr)}};
        o.summary += ", truncated lower " + fmt(tr.lower) + " (gram deviation " + fmt(dev) + ")";
    }
    return o;
}

inline std::string timestamp_utc()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline json read_manifest(const std::string& path)
{
    std::ifstream in(path);
    require(bool(in), errc::invalid_argument, "cannot open manifest \"" + path + "\"");
    json m;
    try {
        m = json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw error(errc::invalid_argument, "manifest \"" + path + "\" is not valid JSON (" + e.what() + ")");
    }
    require(m.is_object(), errc::invalid_argument, "manifest must be a JSON object");
    require(m.contains("version"), errc::invalid_argument,
            std::string("manifest needs \"version\": \"") + manifest_version + "\"");
    require(m.at("version") == manifest_version, errc::invalid_argument,
            std::string("unsupported manifest version, expected \"") + manifest_version + "\"");
    return m;
}

inline void write_file(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    require(bool(out), errc::invalid_argument, "cannot write \"" + p.string() + "\"");
    out << text;
}

} // namespace detail

inline const std::vector<std::string>& commands()
{
    static const std::vector<std::string> c{"eval", "spectrum", "gram", "riesz", "separation", "pick",
                                            "parrott", "extend", "random", "nc-gram", "nc-oracle"};
    return c;
}

//
// run one command; the returned report is deterministic apart from its
// "timestamp" field. Library errors propagate as rkhs_lab::error.
//
inline std::pair<json, Outcome> execute(const Options& opt, const json& manifest)
{
    if (manifest.contains("command"))
        require(manifest.at("command") == opt.command, errc::invalid_argument,
                "manifest is for \"" + manifest.at("command").dump() + "\", not \"" + opt.command + "\"");
    detail::Context c{opt, manifest, resolve_threads(opt.threads)};
    Outcome o;
    const std::string& k = opt.command;
    if (k == "eval") o = detail::cmd_eval(c);
    else if (k == "spectrum") o = detail::cmd_spectrum(c);
    else if (k == "gram") o = detail::cmd_gram(c);
    else if (k == "riesz") o = detail::cmd_riesz(c);
    else if (k == "separation") o = detail::cmd_separation(c);
    else if (k == "pick") o = detail::cmd_pick(c);
    else if (k == "parrott") o = detail::cmd_parrott(c);
    else if (k == "extend") o = detail::cmd_extend(c);
    else if (k == "random") o = detail::cmd_random(c);
    else if (k == "nc-gram") o = detail::cmd_nc_gram(c);
    else if (k == "nc-oracle") o = detail::cmd_nc_oracle(c);
    else throw error(errc::invalid_argument, "unknown command \"" + k + "\"");

    json report{{"version", manifest_version},
                {"command", k},
                {"timestamp", detail::timestamp_utc()},
                {"seed", c.seed()},
                {"exit_code", o.code},
                {"provenance", o.provenance},
                {"result", o.result}};
    return {std::move(report), std::move(o)};
}

inline void write_reports(const Options& opt, const json& report, const Outcome& o)
{
    namespace fs = std::filesystem;
    fs::create_directories(opt.out_dir);
    const fs::path base = fs::path(opt.out_dir) / opt.command;
    if (opt.format == "json") {
        detail::write_file(base.string() + ".json", report.dump(2) + "\n");
    } else if (o.csv) {
        json meta = report;
        meta["result"].erase("gram");
        meta["result"].erase("trials");
        detail::write_file(base.string() + ".csv", *o.csv);
        detail::write_file(base.string() + ".meta.json", meta.dump(2) + "\n");
    } else {
        detail::write_file(base.string() + ".csv", io::flat_csv(report));
    }
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Matrix-node kernel subspaces, Pick problems and NC kernels"};
    app.name("rkhs_lab");
    Options opt;
    app.add_option("--out", opt.out_dir, "Directory for report files");
    app.add_option("--format", opt.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--degree", opt.degree, "Truncation degree of commuting kernel vectors");
    app.add_option("--max-word-len", opt.max_word_len, "Truncation length of NC word expansions");
    app.add_option("--seed", opt.seed, "Seed for random experiments");
    app.add_option("--threads", opt.threads, "Worker threads (fallback: RKHS_LAB_THREADS)");
    app.add_option("--tol", opt.tol, "Relative rank tolerance for Gram orthonormalization");
    app.require_subcommand(1);
    for (const auto& name : commands()) {
        auto* sub = app.add_subcommand(name, "run " + name + " on a manifest");
        sub->add_option("manifest", opt.manifest, "JSON manifest")->required();
        sub->fallthrough();
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return ok;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        err << "usage: rkhs_lab <command> MANIFEST [--out DIR] [--format json|csv] [options]; commands:";
        for (const auto& n : commands()) err << ' ' << n;
        err << "\n";
        return bad_input;
    }
    opt.command = app.get_subcommands().front()->get_name();

    try {
        const json manifest   = detail::read_manifest(opt.manifest);
        auto [report, outcome] = execute(opt, manifest);
        if (!opt.out_dir.empty()) write_reports(opt, report, outcome);
        out << opt.command << ": " << outcome.summary << "\n";
        return outcome.code;
    } catch (const error& e) {
        err << "rkhs_lab " << opt.command << ": " << e.what() << "\n";
        return bad_input;
    } catch (const std::exception& e) {
        err << "rkhs_lab " << opt.command << ": " << e.what() << "\n";
        return bad_input;
    }
}

} // namespace rkhs_lab::cli
