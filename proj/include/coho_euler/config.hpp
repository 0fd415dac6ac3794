#pragma once

// Strict JSON run configuration. Unknown keys are rejected; every field-level
// problem is collected with its path before anything is built.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "homogeneous.hpp"
#include "initial_data.hpp"
#include "lie_algebra.hpp"
#include "profile.hpp"
#include "reduced_euler.hpp"

namespace coho_euler {

using Json = nlohmann::json;

/// The config file is missing or is not JSON.
class ConfigParseError : public Error {
public:
    using Error::Error;
};

/// Field-level problems, each message starting with the offending path.
class ConfigError : public ValidationError {
public:
    explicit ConfigError(std::vector<std::string> issues)
        : ValidationError(join(issues)), issues_(std::move(issues)) {}

    const std::vector<std::string>& issues() const noexcept { return issues_; }

private:
    static std::string join(const std::vector<std::string>& xs) {
        std::string s = "invalid configuration:";
        for (const auto& x : xs) s += "\n  " + x;
        return s;
    }
    std::vector<std::string> issues_;
};

struct OutputConfig {
    std::string directory = "coho_euler_out";
    int snapshot_every = 0;
    int diagnostics_every = 1;
};

struct RunConfig {
    std::string name;
    std::string description;
    ProblemKind kind = ProblemKind::Homogeneous;
    LieAlgebraSpec algebra;
    std::vector<Vec> isotropy;
    Mat gram;                                  // homogeneous
    std::string family;                        // profile runs
    double length = 0.0;
    std::array<EndpointKind, 2> endpoints{EndpointKind::Singular, EndpointKind::Singular};
    std::vector<FourierSeries> log_diagonal;
    std::string csv_path;                      // resolved against the config directory
    InitialData initial;
    int N = 0;
    SolverConfig solver;
    OutputConfig output;
    std::uint64_t seed = 0;
    double dcdt_offset = 0.0;
    Json source;                               // as read, for hashing

    std::string config_hash() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(source.dump())));
        return buf;
    }
};

namespace detail {

class ConfigReader {
public:
    std::vector<std::string> issues;

    void issue(const std::string& path, const std::string& msg) { issues.push_back(path + ": " + msg); }

    bool object(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
        if (!j.is_object()) {
            issue(path, "expected an object");
            return false;
        }
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& [k, _] : j.items())
            if (!ok.count(k)) issue(path.empty() ? k : path + "." + k, "unknown key '" + k + "'");
        return true;
    }

    static std::string join(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }

    const Json* field(const Json& j, const std::string& path, const char* key, bool required) {
        if (j.is_object() && j.contains(key)) return &j.at(key);
        if (required) issue(join(path, key), "missing required field");
        return nullptr;
    }

    std::optional<double> number(const Json* j, const std::string& path) {
        if (j == nullptr) return std::nullopt;
        if (!j->is_number()) {
            issue(path, "expected a number");
            return std::nullopt;
        }
        const double x = j->get<double>();
        if (!std::isfinite(x)) {
            issue(path, "must be finite");
            return std::nullopt;
        }
        return x;
    }

    std::optional<long long> integer(const Json* j, const std::string& path) {
        if (j == nullptr) return std::nullopt;
        if (!j->is_number_integer()) {
            issue(path, "expected an integer");
            return std::nullopt;
        }
        return j->get<long long>();
    }

    std::optional<std::string> string(const Json* j, const std::string& path) {
        if (j == nullptr) return std::nullopt;
        if (!j->is_string()) {
            issue(path, "expected a string");
            return std::nullopt;
        }
        return j->get<std::string>();
    }

    std::vector<double> numbers(const Json* j, const std::string& path) {
        std::vector<double> out;
        if (j == nullptr) return out;
        if (!j->is_array()) {
            issue(path, "expected an array of numbers");
            return out;
        }
        for (std::size_t i = 0; i < j->size(); ++i)
            if (auto x = number(&(*j)[i], path + "[" + std::to_string(i) + "]")) out.push_back(*x);
        return out;
    }

    std::optional<Mat> matrix(const Json* j, const std::string& path, int n) {
        if (j == nullptr) return std::nullopt;
        if (!j->is_array() || static_cast<int>(j->size()) != n) {
            issue(path, "expected a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
            return std::nullopt;
        }
        Mat m(n, n);
        for (int i = 0; i < n; ++i) {
            const auto row = numbers(&(*j)[i], path + "[" + std::to_string(i) + "]");
            if (static_cast<int>(row.size()) != n) {
                issue(path + "[" + std::to_string(i) + "]", "expected " + std::to_string(n) + " entries");
                return std::nullopt;
            }
            for (int k = 0; k < n; ++k) m(i, k) = row[k];
        }
        return m;
    }

    FourierSeries fourier(const Json& j, const std::string& path) {
        FourierSeries s;
        if (!object(j, path, {"a0", "a", "b"})) return s;
        s.a0 = number(field(j, path, "a0", false), join(path, "a0")).value_or(0.0);
        s.a = numbers(field(j, path, "a", false), join(path, "a"));
        s.b = numbers(field(j, path, "b", false), join(path, "b"));
        return s;
    }

    std::optional<CoefficientFunction> coefficient(const Json& j, const std::string& path, std::uint64_t seed,
                                                   int index) {
        if (j.is_number()) return CoefficientFunction::constant(*number(&j, path));
        if (!j.is_object() || j.size() != 1) {
            issue(path, "expected a number or an object with one of constant, polynomial, fourier, random_fourier");
            return std::nullopt;
        }
        const auto& [key, val] = *j.items().begin();
        const std::string sub = path + "." + key;
        if (key == "constant") {
            if (auto x = number(&val, sub)) return CoefficientFunction::constant(*x);
            return std::nullopt;
        }
        if (key == "polynomial") return CoefficientFunction::polynomial(numbers(&val, sub));
        if (key == "fourier") return CoefficientFunction::fourier_series(fourier(val, sub));
        if (key == "random_fourier") {
            if (!object(val, sub, {"mean", "modes", "amplitude"})) return std::nullopt;
            const double mean = number(field(val, sub, "mean", false), sub + ".mean").value_or(0.0);
            const auto modes = integer(field(val, sub, "modes", true), sub + ".modes");
            const auto amp = number(field(val, sub, "amplitude", true), sub + ".amplitude");
            if (modes && (*modes < 1 || *modes > 64)) issue(sub + ".modes", "must be in [1, 64]");
            if (amp && *amp < 0.0) issue(sub + ".amplitude", "must be non-negative");
            if (!modes || !amp) return std::nullopt;
            return random_fourier(seed, index, mean, static_cast<int>(*modes), *amp);
        }
        issue(sub, "unknown key '" + key + "'");
        return std::nullopt;
    }
};

inline std::optional<LieAlgebraSpec> read_algebra(ConfigReader& rd, const Json& j) {
    const std::string path = "algebra";
    if (!rd.object(j, path, {"preset", "dim", "brackets", "Q"})) return std::nullopt;
    if (auto preset = rd.string(rd.field(j, path, "preset", false), "algebra.preset")) {
        if (j.contains("brackets") || j.contains("Q")) rd.issue(path, "preset excludes brackets and Q");
        if (*preset == "su2") return su2_algebra();
        if (*preset == "su2_plus_r") return su2_plus_r_algebra();
        if (*preset == "abelian") {
            const auto dim = rd.integer(rd.field(j, path, "dim", true), "algebra.dim");
            if (!dim) return std::nullopt;
            if (*dim < 1 || *dim > 16) {
                rd.issue("algebra.dim", "must be in [1, 16]");
                return std::nullopt;
            }
            return abelian_algebra(static_cast<int>(*dim));
        }
        rd.issue("algebra.preset", "unknown preset '" + *preset + "' (su2, su2_plus_r, abelian)");
        return std::nullopt;
    }
    const auto dim = rd.integer(rd.field(j, path, "dim", true), "algebra.dim");
    if (!dim) return std::nullopt;
    if (*dim < 1 || *dim > 16) {
        rd.issue("algebra.dim", "must be in [1, 16]");
        return std::nullopt;
    }
    const int n = static_cast<int>(*dim);
    LieAlgebraSpec alg = LieAlgebraSpec::zero(n);
    if (const Json* br = rd.field(j, path, "brackets", false)) {
        if (!br->is_array()) {
            rd.issue("algebra.brackets", "expected an array of [i, j, k, value] triplets");
        } else {
            for (std::size_t t = 0; t < br->size(); ++t) {
                const std::string p = "algebra.brackets[" + std::to_string(t) + "]";
                const auto e = rd.numbers(&(*br)[t], p);
                if (e.size() != 4) {
                    rd.issue(p, "expected [i, j, k, value]");
                    continue;
                }
                bool ok = true;
                for (int q = 0; q < 3; ++q)
                    if (e[q] != std::floor(e[q]) || e[q] < 1 || e[q] > n) ok = false;
                if (!ok) {
                    rd.issue(p, "indices must be integers in [1, " + std::to_string(n) + "]");
                    continue;
                }
                const int a = static_cast<int>(e[0]) - 1, b = static_cast<int>(e[1]) - 1, c = static_cast<int>(e[2]) - 1;
                if (a == b) {
                    rd.issue(p, "i and j must differ");
                    continue;
                }
                alg.set_bracket(a, b, c, e[3]);
            }
        }
    }
    if (auto Q = rd.matrix(rd.field(j, path, "Q", false), "algebra.Q", n)) alg.Q = *Q;
    return alg;
}

inline std::optional<EndpointKind> endpoint_kind(ConfigReader& rd, const Json& j, const std::string& path) {
    auto s = rd.string(&j, path);
    if (!s) return std::nullopt;
    if (*s == "singular") return EndpointKind::Singular;
    if (*s == "boundary") return EndpointKind::Boundary;
    rd.issue(path, "expected 'singular' or 'boundary'");
    return std::nullopt;
}

} // namespace detail

/// Validates a parsed document. `base_dir` resolves relative CSV paths.
inline RunConfig config_from_json(const Json& j, const std::filesystem::path& base_dir = {}) {
    detail::ConfigReader rd;
    RunConfig cfg;
    cfg.source = j;
    rd.object(j, "", {"name", "description", "problem", "algebra", "isotropy", "metric", "profile", "initial",
                      "solver", "output", "seed", "test_hooks"});
    if (!j.is_object()) throw ConfigError(rd.issues);

    cfg.name = rd.string(rd.field(j, "", "name", false), "name").value_or("");
    cfg.description = rd.string(rd.field(j, "", "description", false), "description").value_or("");

    bool kind_ok = false;
    if (const Json* p = rd.field(j, "", "problem", true)) {
        if (rd.object(*p, "problem", {"kind"})) {
            if (auto k = rd.string(rd.field(*p, "problem", "kind", true), "problem.kind")) {
                kind_ok = true;
                if (*k == "homogeneous")
                    cfg.kind = ProblemKind::Homogeneous;
                else if (*k == "interval")
                    cfg.kind = ProblemKind::Interval;
                else if (*k == "circle")
                    cfg.kind = ProblemKind::Circle;
                else {
                    rd.issue("problem.kind", "expected homogeneous, interval or circle");
                    kind_ok = false;
                }
            }
        }
    }

    if (auto s = rd.integer(rd.field(j, "", "seed", false), "seed")) {
        if (*s < 0)
            rd.issue("seed", "must be non-negative");
        else
            cfg.seed = static_cast<std::uint64_t>(*s);
    }

    std::optional<LieAlgebraSpec> alg;
    if (const Json* a = rd.field(j, "", "algebra", true)) alg = detail::read_algebra(rd, *a);
    if (alg) cfg.algebra = *alg;

    if (const Json* iso = rd.field(j, "", "isotropy", false)) {
        if (!iso->is_array()) {
            rd.issue("isotropy", "expected an array of algebra vectors");
        } else {
            for (std::size_t i = 0; i < iso->size(); ++i) {
                const std::string p = "isotropy[" + std::to_string(i) + "]";
                const auto v = rd.numbers(&(*iso)[i], p);
                if (alg && static_cast<int>(v.size()) != alg->dim) {
                    rd.issue(p, "expected " + std::to_string(alg->dim) + " entries");
                    continue;
                }
                cfg.isotropy.push_back(Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())));
            }
        }
    }

    const bool homogeneous = kind_ok && cfg.kind == ProblemKind::Homogeneous;
    const int dim_m = alg ? alg->dim - static_cast<int>(cfg.isotropy.size()) : 0;

    if (const Json* m = rd.field(j, "", "metric", homogeneous)) {
        if (kind_ok && !homogeneous) rd.issue("metric", "only valid for homogeneous problems; use profile");
        if (rd.object(*m, "metric", {"gram"}) && alg)
            if (auto g = rd.matrix(rd.field(*m, "metric", "gram", true), "metric.gram", dim_m)) cfg.gram = *g;
    }

    if (const Json* p = rd.field(j, "", "profile", kind_ok && !homogeneous)) {
        if (homogeneous) rd.issue("profile", "not valid for homogeneous problems; use metric");
        if (rd.object(*p, "profile", {"family", "length", "endpoints", "log_diagonal", "csv"})) {
            cfg.family = rd.string(rd.field(*p, "profile", "family", true), "profile.family").value_or("");
            const bool round = cfg.family == "round_s3_t2";
            const bool fourier = cfg.family == "warped_torus" || cfg.family == "berger_circle";
            const bool tab = cfg.family == "tabulated";
            if (!cfg.family.empty() && !round && !fourier && !tab)
                rd.issue("profile.family", "expected round_s3_t2, warped_torus, berger_circle or tabulated");
            if (round) {
                for (const char* k : {"length", "endpoints", "log_diagonal", "csv"})
                    if (p->contains(k)) rd.issue(std::string("profile.") + k, "not used by round_s3_t2");
                if (kind_ok && cfg.kind != ProblemKind::Interval)
                    rd.issue("problem.kind", "round_s3_t2 is an interval profile");
                cfg.length = std::numbers::pi / 2.0;
            }
            if (fourier || tab) {
                if (auto L = rd.number(rd.field(*p, "profile", "length", true), "profile.length")) {
                    if (*L <= 0.0)
                        rd.issue("profile.length", "must be positive");
                    else
                        cfg.length = *L;
                }
                const Json* ep = rd.field(*p, "profile", "endpoints", kind_ok && cfg.kind == ProblemKind::Interval);
                if (ep != nullptr) {
                    if (kind_ok && cfg.kind == ProblemKind::Circle)
                        rd.issue("profile.endpoints", "a circle has no endpoints");
                    else if (!ep->is_array() || ep->size() != 2)
                        rd.issue("profile.endpoints", "expected two endpoint kinds");
                    else
                        for (int s = 0; s < 2; ++s)
                            if (auto e = detail::endpoint_kind(rd, (*ep)[s], "profile.endpoints[" + std::to_string(s) + "]"))
                                cfg.endpoints[s] = *e;
                }
            }
            if (fourier) {
                if (p->contains("csv")) rd.issue("profile.csv", "only used by tabulated profiles");
                if (const Json* ld = rd.field(*p, "profile", "log_diagonal", true)) {
                    if (!ld->is_array())
                        rd.issue("profile.log_diagonal", "expected an array of Fourier series");
                    else {
                        for (std::size_t i = 0; i < ld->size(); ++i)
                            cfg.log_diagonal.push_back(rd.fourier((*ld)[i], "profile.log_diagonal[" + std::to_string(i) + "]"));
                        if (alg && static_cast<int>(cfg.log_diagonal.size()) != dim_m)
                            rd.issue("profile.log_diagonal", "expected " + std::to_string(dim_m) + " series");
                    }
                }
            }
            if (tab) {
                if (p->contains("log_diagonal")) rd.issue("profile.log_diagonal", "only used by Fourier profiles");
                if (auto csv = rd.string(rd.field(*p, "profile", "csv", true), "profile.csv")) {
                    std::filesystem::path path(*csv);
                    cfg.csv_path = path.is_absolute() ? path.string() : (base_dir / path).string();
                }
            }
        }
    }

    if (const Json* in = rd.field(j, "", "initial", true)) {
        if (rd.object(*in, "initial", {"c", "v"})) {
            if (const Json* c = rd.field(*in, "initial", "c", false)) {
                if (kind_ok && cfg.kind != ProblemKind::Circle)
                    rd.issue("initial.c", "only circle problems carry a horizontal amplitude");
                cfg.initial.c = rd.number(c, "initial.c").value_or(0.0);
            }
            if (const Json* v = rd.field(*in, "initial", "v", true)) {
                if (!v->is_array())
                    rd.issue("initial.v", "expected an array of coefficient functions");
                else
                    for (std::size_t i = 0; i < v->size(); ++i)
                        if (auto f = rd.coefficient((*v)[i], "initial.v[" + std::to_string(i) + "]", cfg.seed,
                                                    static_cast<int>(i)))
                            cfg.initial.v.push_back(std::move(*f));
            }
        }
    }

    if (const Json* s = rd.field(j, "", "solver", true)) {
        if (rd.object(*s, "solver", {"N", "dt", "t_end", "cfl_guard"})) {
            const Json* n = rd.field(*s, "solver", "N", kind_ok && !homogeneous);
            if (n != nullptr && homogeneous) rd.issue("solver.N", "homogeneous problems have no grid");
            if (auto N = rd.integer(n, "solver.N")) {
                cfg.N = static_cast<int>(*N);
                if (kind_ok && cfg.kind == ProblemKind::Circle && (*N < 16 || *N % 2 != 0))
                    rd.issue("solver.N", "circle grids need N even and >= 16, got " + std::to_string(*N));
                if (kind_ok && cfg.kind == ProblemKind::Interval && *N < 6)
                    rd.issue("solver.N", "interval grids need N >= 6, got " + std::to_string(*N));
                if (*N > 1000000) rd.issue("solver.N", "too large");
            }
            if (auto dt = rd.number(rd.field(*s, "solver", "dt", true), "solver.dt")) {
                if (*dt <= 0.0) rd.issue("solver.dt", "must be positive");
                cfg.solver.dt = *dt;
            }
            if (auto te = rd.number(rd.field(*s, "solver", "t_end", true), "solver.t_end")) {
                if (*te <= 0.0) rd.issue("solver.t_end", "must be positive");
                cfg.solver.t_end = *te;
            }
            if (auto cg = rd.number(rd.field(*s, "solver", "cfl_guard", false), "solver.cfl_guard")) {
                if (*cg <= 0.0) rd.issue("solver.cfl_guard", "must be positive");
                cfg.solver.cfl_guard = *cg;
            }
            if (cfg.solver.dt > 0.0 && cfg.solver.t_end > 0.0 && cfg.solver.t_end / cfg.solver.dt > 1e9)
                rd.issue("solver.dt", "more than 1e9 steps requested");
        }
    }

    if (const Json* o = rd.field(j, "", "output", false)) {
        if (rd.object(*o, "output", {"directory", "snapshot_every", "diagnostics_every"})) {
            if (auto d = rd.string(rd.field(*o, "output", "directory", false), "output.directory")) cfg.output.directory = *d;
            if (auto k = rd.integer(rd.field(*o, "output", "snapshot_every", false), "output.snapshot_every")) {
                if (*k < 0) rd.issue("output.snapshot_every", "must be non-negative");
                cfg.output.snapshot_every = static_cast<int>(*k);
            }
            if (auto k = rd.integer(rd.field(*o, "output", "diagnostics_every", false), "output.diagnostics_every")) {
                if (*k < 1) rd.issue("output.diagnostics_every", "must be at least 1");
                cfg.output.diagnostics_every = static_cast<int>(*k);
            }
        }
    }

    if (const Json* h = rd.field(j, "", "test_hooks", false)) {
        if (rd.object(*h, "test_hooks", {"dcdt_offset"}))
            cfg.dcdt_offset = rd.number(rd.field(*h, "test_hooks", "dcdt_offset", false), "test_hooks.dcdt_offset").value_or(0.0);
    }

    if (!rd.issues.empty()) throw ConfigError(rd.issues);
    return cfg;
}

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigParseError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return Json::parse(ss.str());
    } catch (const Json::parse_error& e) {
        throw ConfigParseError(path + ": " + e.what());
    }
}

inline RunConfig parse_config(const std::string& path) {
    const Json j = read_json_file(path);
    return config_from_json(j, std::filesystem::path(path).parent_path());
}

// ---------------------------------------------------------------------------
// Building the problem

struct BuiltRun {
    Problem problem;
    Grid grid;
};

inline BuiltRun build_run(const RunConfig& cfg) {
    const ReductiveSplit split = reductive_split(cfg.algebra, cfg.isotropy);
    BuiltRun out;
    if (cfg.kind == ProblemKind::Homogeneous) {
        out.problem = homogeneous_problem({split, cfg.gram});
        out.grid = homogeneous_grid();
    } else {
        const OrbitSpace os = cfg.kind == ProblemKind::Circle
                                  ? OrbitSpace::circle(cfg.length)
                                  : OrbitSpace::interval(cfg.length, cfg.endpoints[0], cfg.endpoints[1]);
        MetricProfile profile;
        if (cfg.family == "round_s3_t2") {
            profile = round_s3_t2_profile();
            if (split.dim_m() != 2 || !split.is_abelian() || split.dim_h() != 0)
                throw ValidationError("round_s3_t2 needs the abelian algebra of dimension 2 with trivial isotropy");
            profile.split = split;
        } else if (cfg.family == "tabulated") {
            profile = tabulated_profile(split, os, load_tabulated_csv(cfg.csv_path, split.dim_m()));
        } else {
            profile = fourier_profile(split, os,
                                      cfg.family == "warped_torus" ? ProfileFamily::WarpedTorus
                                                                   : ProfileFamily::BergerCircle,
                                      cfg.log_diagonal);
        }
        out.problem = profile_problem(std::move(profile));
        out.grid = make_grid(os, cfg.N);
    }
    out.problem.dcdt_offset = cfg.dcdt_offset;
    return out;
}

} // namespace coho_euler
