#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mixpot/experiments.hpp"

namespace mixpot::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

/// Write through a sibling temp file and rename over the target.
inline void atomic_write(const fs::path& file, const std::string& content) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    const fs::path tmp = file.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw Error("cannot write " + tmp.string());
        os.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!os) throw Error("write failed for " + tmp.string());
    }
    fs::rename(tmp, file);
}

inline std::string read_file(const fs::path& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw Error("cannot open " + file.string());
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

/// JSON cannot hold NaN or infinity; those become null.
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json numbers(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(number(x));
    return a;
}

// ---------------------------------------------------------------------------
// Artifact directory with a manifest binding every file to one config hash.

class ArtifactDir {
public:
    ArtifactDir(fs::path dir, std::string config_hash) : dir_(std::move(dir)), hash_(std::move(config_hash)) {
        const fs::path m = dir_ / "manifest.json";
        if (fs::exists(m)) {
            json j;
            try {
                j = json::parse(read_file(m));
            } catch (const json::exception&) {
                throw Error("manifest " + m.string() + " is unreadable");
            }
            const std::string other = j.value("config_hash", "");
            if (other != hash_)
                throw Error("refusing to mix artifacts: " + dir_.string() + " holds config hash " + other +
                            ", this run has " + hash_);
            files_ = j.value("files", json::object());
        }
    }

    const fs::path& dir() const { return dir_; }

    void write(const std::string& name, const std::string& content) {
        atomic_write(dir_ / name, content);
        files_[name] = hex64(fnv1a(content));
        json m{{"config_hash", hash_}, {"files", files_}};
        atomic_write(dir_ / "manifest.json", m.dump(2) + "\n");
    }

    /// Read back a listed file, checking its checksum.
    std::string read(const std::string& name) const {
        if (!files_.contains(name)) throw Error("artifact " + name + " is not in the manifest");
        std::string body = read_file(dir_ / name);
        if (hex64(fnv1a(body)) != files_[name].get<std::string>()) throw Error("artifact " + name + " fails its checksum");
        return body;
    }

private:
    fs::path dir_;
    std::string hash_;
    json files_ = json::object();
};

// ---------------------------------------------------------------------------
// Grid functions: a JSON header plus a CSV body (x[,y],value).

inline json grid_header(const GridFunction& f, const std::string& config_hash) {
    const GridDomain& g = *f.grid;
    return json{{"dim", g.dim()},
                {"lo", {g.lo()[0], g.lo()[1]}},
                {"hi", {g.hi()[0], g.hi()[1]}},
                {"h", g.h()},
                {"nx", g.nx()},
                {"ny", g.ny()},
                {"far_field", f.far_field ? json(*f.far_field) : json(nullptr)},
                {"config_hash", config_hash}};
}

inline std::string grid_csv(const GridFunction& f) {
    const GridDomain& g = *f.grid;
    std::ostringstream os;
    os.precision(17);
    os << (g.dim() == 2 ? "x,y,value\n" : "x,value\n");
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Point x = g.coord(i);
        os << x[0] << ',';
        if (g.dim() == 2) os << x[1] << ',';
        os << f.values[i] << '\n';
    }
    return os.str();
}

/// Writes <stem>.json (header) and <stem>.csv (values).
inline void write_grid_function(ArtifactDir& out, const std::string& stem, const GridFunction& f,
                                const std::string& config_hash) {
    const std::string body = grid_csv(f);
    json head = grid_header(f, config_hash);
    head["values"] = stem + ".csv";
    head["checksum"] = hex64(fnv1a(body));
    out.write(stem + ".csv", body);
    out.write(stem + ".json", head.dump(2) + "\n");
}

/// Reads a grid function written by write_grid_function. The grid is rebuilt
/// with Omega empty; only geometry and values are stored.
inline GridFunction read_grid_function(const fs::path& header_file, const std::string& expect_hash = "") {
    const json head = json::parse(read_file(header_file));
    if (!expect_hash.empty() && head.value("config_hash", "") != expect_hash)
        throw Error("grid function " + header_file.string() + " belongs to another config hash");
    const std::string body = read_file(header_file.parent_path() / head.at("values").get<std::string>());
    if (hex64(fnv1a(body)) != head.at("checksum").get<std::string>())
        throw Error("grid function " + header_file.string() + " fails its checksum");
    const int dim = head.at("dim");
    const Point lo{head["lo"][0], head["lo"][1]}, hi{head["hi"][0], head["hi"][1]};
    GridPtr g = share(GridDomain::make(dim, lo, hi, head.at("h").get<double>()));
    std::istringstream is(body);
    std::string line;
    std::getline(is, line);
    std::vector<double> v;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        v.push_back(std::stod(line.substr(line.rfind(',') + 1)));
    }
    std::optional<double> far;
    if (!head["far_field"].is_null()) far = head["far_field"].get<double>();
    return GridFunction(g, std::move(v), far);
}

// ---------------------------------------------------------------------------
// Measures: {"dim": 2, "atoms": [{"x": [0, 0], "w": 1}]}

inline json measure_to_json(const Measure& mu) {
    if (mu.density()) throw DomainError("only atomic measures are serialized");
    json atoms = json::array();
    for (const Atom& a : mu.atoms()) {
        json x = mu.dim() == 2 ? json{a.x[0], a.x[1]} : json{a.x[0]};
        atoms.push_back({{"x", x}, {"w", a.w}});
    }
    return json{{"dim", mu.dim()}, {"atoms", atoms}};
}

inline std::vector<Atom> atoms_from_json(const json& arr, int dim) {
    if (!arr.is_array()) throw DomainError("atoms must be an array");
    std::vector<Atom> out;
    for (const auto& a : arr) {
        const auto& x = a.at("x");
        if (!x.is_array() || static_cast<int>(x.size()) != dim)
            throw DomainError("atom position must have " + std::to_string(dim) + " coordinates");
        Atom at;
        at.x = {x[0].get<double>(), dim == 2 ? x[1].get<double>() : 0.0};
        at.w = a.at("w").get<double>();
        out.push_back(at);
    }
    return out;
}

inline Measure measure_from_json(const json& j) {
    const int dim = j.at("dim");
    return Measure(dim, atoms_from_json(j.at("atoms"), dim));
}

// ---------------------------------------------------------------------------
// Reports.

inline json report_to_json(const ExperimentReport& R) {
    json metrics = json::object();
    for (const auto& [k, v] : R.metrics) metrics[k] = number(v);
    json series = json::object();
    for (const auto& [k, v] : R.series) series[k] = numbers(v);
    json params{{"n", R.params.n}, {"s", R.params.s}, {"p", R.params.p}};
    return json{{"name", R.name},
                {"config_hash", R.config_hash},
                {"params", params},
                {"scale_label", R.scale_label},
                {"scales", numbers(R.scales)},
                {"lhs", numbers(R.lhs)},
                {"rhs", numbers(R.rhs)},
                {"ratios", numbers(R.ratios)},
                {"fitted_exponent", number(R.fitted_exponent)},
                {"fit_residual", number(R.fit_residual)},
                {"verdict", R.verdict},
                {"metrics", metrics},
                {"series", series},
                {"notes", R.notes},
                {"audit_discrepancy", R.audit_discrepancy ? number(*R.audit_discrepancy) : json(nullptr)}};
}

// ---------------------------------------------------------------------------
// Run configuration. A JSON document; sections override the desk-scale
// defaults of each experiment (or of a plain 2D scene for potential, solve
// and sola). Unknown keys are rejected.

inline const std::set<std::string>& commands() {
    static const std::set<std::string> c{"potential", "solve", "sola", "experiment", "audit"};
    return c;
}

class RunConfig {
public:
    std::string command = "experiment";
    std::vector<std::string> experiments;
    json doc = json::object();
    fs::path base_dir;  // relative measure paths resolve against this

    static RunConfig parse(const std::string& text, const fs::path& base = {}) {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::exception& e) {
            throw DomainError(std::string("config is not valid JSON: ") + e.what());
        }
        return from_json(j, base);
    }

    static RunConfig load(const fs::path& file) { return parse(read_file(file), file.parent_path()); }

    static RunConfig from_json(const json& j, const fs::path& base = {}) {
        if (!j.is_object()) throw DomainError("config must be a JSON object");
        std::vector<std::string> bad;
        static const std::map<std::string, std::set<std::string>> allowed{
            {"params", {"n", "s", "p", "nu_A", "L_A", "nu_K", "L_K", "m", "sigma", "eps1"}},
            {"grid", {"dim", "lo", "hi", "h", "omega_radius", "center"}},
            {"scene", {"exterior", "far_field", "atoms", "measure", "source_width"}},
            {"experiment", {"scales", "radius", "levels", "M", "q", "j_max", "delta0", "configs", "probes", "kappa",
                            "refine"}},
            {"kernel", {"variant", "kappa", "nu", "L", "omega"}},
            {"thresholds", {"ratio_spread", "energy_spread", "stability", "fit_residual", "min_exponent",
                            "exponent_tol", "dirac_tol", "rate_factor", "min_alpha"}},
            {"solve", {"tol_rel", "max_newton", "eps_start", "eps_end", "picard_fallback", "gmres_restart",
                       "gmres_max_iters"}},
            {"potential", {"center", "radii", "beta"}}};
        static const std::set<std::string> top{"command", "experiments", "seed", "dense_ok"};
        for (const auto& [k, v] : j.items()) {
            if (top.count(k)) continue;
            auto it = allowed.find(k);
            if (it == allowed.end()) {
                bad.push_back("unknown config key '" + k + "'");
                continue;
            }
            if (!v.is_object()) {
                bad.push_back("config section '" + k + "' must be an object");
                continue;
            }
            for (const auto& [kk, vv] : v.items())
                if (!it->second.count(kk)) bad.push_back("unknown key '" + kk + "' in section '" + k + "'");
        }
        RunConfig c;
        c.doc = j;
        c.base_dir = base;
        if (j.contains("command")) {
            if (!j["command"].is_string() || !commands().count(j["command"].get<std::string>()))
                bad.push_back("command must be one of potential, solve, sola, experiment, audit");
            else
                c.command = j["command"];
        }
        if (j.contains("experiments")) {
            if (!j["experiments"].is_array()) {
                bad.push_back("experiments must be an array of names");
            } else {
                const auto& names = experiment_names();
                for (const auto& e : j["experiments"]) {
                    if (!e.is_string() || std::find(names.begin(), names.end(), e.get<std::string>()) == names.end())
                        bad.push_back("unknown experiment " + e.dump());
                    else
                        c.experiments.push_back(e);
                }
            }
        }
        if (!bad.empty()) throw ParamError(bad);
        // range checks for every scene this config will build
        c.setup_for("");
        if (c.command == "experiment" || c.command == "audit")
            for (const auto& e : c.experiments) c.setup_for(e);
        return c;
    }

    /// Canonical text: sorted keys, round-trip precision.
    std::string to_string() const { return doc.dump(2) + "\n"; }

    std::string hash() const { return hex64(fnv1a(doc.dump())); }

    /// Defaults for the experiment (or a plain scene for name == "") with the
    /// config's overrides applied. Throws ParamError listing every violation.
    ExperimentSetup setup_for(const std::string& name) const {
        ExperimentSetup S = name.empty() ? ExperimentSetup{} : defaults_for(name);
        std::vector<std::string> bad;
        auto get = [&](const char* sec, const char* key, auto& target) {
            if (!doc.contains(sec) || !doc[sec].contains(key)) return;
            try {
                doc[sec][key].get_to(target);
            } catch (const json::exception&) {
                bad.push_back(std::string(sec) + "." + key + " has the wrong type");
            }
        };
        auto get_opt = [&](const char* sec, const char* key, std::optional<double>& target) {
            if (!doc.contains(sec) || !doc[sec].contains(key)) return;
            const json& v = doc[sec][key];
            if (v.is_null()) target.reset();
            else if (v.is_number()) target = v.get<double>();
            else bad.push_back(std::string(sec) + "." + key + " must be a number or null");
        };
        auto get_point = [&](const char* sec, const char* key, Point& target) {
            if (!doc.contains(sec) || !doc[sec].contains(key)) return;
            const json& v = doc[sec][key];
            if (!v.is_array() || v.empty() || v.size() > 2) {
                bad.push_back(std::string(sec) + "." + key + " must be an array of 1 or 2 numbers");
                return;
            }
            target = {v[0].get<double>(), v.size() > 1 ? v[1].get<double>() : 0.0};
        };

        ParamSet& P = S.params;
        get("params", "n", P.n);
        get("params", "s", P.s);
        get("params", "p", P.p);
        get("params", "nu_A", P.nu_A);
        get("params", "L_A", P.L_A);
        get("params", "nu_K", P.nu_K);
        get("params", "L_K", P.L_K);
        get_opt("params", "m", P.m);
        get_opt("params", "sigma", S.sigma);
        get_opt("params", "eps1", S.eps1);

        get("grid", "dim", S.dim);
        if (doc.contains("params") && doc["params"].contains("n") &&
            !(doc.contains("grid") && doc["grid"].contains("dim")))
            S.dim = P.n;
        if (doc.contains("grid") && doc["grid"].contains("dim") &&
            !(doc.contains("params") && doc["params"].contains("n")))
            P.n = S.dim;
        get_point("grid", "lo", S.lo);
        get_point("grid", "hi", S.hi);
        get("grid", "h", S.h);
        get("grid", "omega_radius", S.omega_radius);
        get_point("grid", "center", S.center);

        get("scene", "exterior", S.exterior);
        get_opt("scene", "far_field", S.far_field);
        get("scene", "source_width", S.source_width);
        if (doc.contains("scene") && doc["scene"].contains("atoms")) {
            try {
                S.atoms = atoms_from_json(doc["scene"]["atoms"], S.dim);
            } catch (const std::exception& e) {
                bad.push_back(std::string("scene.atoms: ") + e.what());
            }
        }
        if (doc.contains("scene") && doc["scene"].contains("measure")) {
            fs::path path = doc["scene"].value("measure", "");
            if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
            if (!fs::exists(path)) {
                bad.push_back("scene.measure file '" + path.string() + "' does not exist");
            } else {
                try {
                    const Measure mu = measure_from_json(json::parse(read_file(path)));
                    if (mu.dim() != S.dim) bad.push_back("scene.measure dimension does not match the grid");
                    S.atoms.insert(S.atoms.end(), mu.atoms().begin(), mu.atoms().end());
                } catch (const std::exception& e) {
                    bad.push_back("scene.measure: " + std::string(e.what()));
                }
            }
        }

        get("experiment", "scales", S.scales);
        get("experiment", "radius", S.radius);
        get("experiment", "levels", S.levels);
        get("experiment", "M", S.M);
        get("experiment", "q", S.q);
        get("experiment", "j_max", S.j_max);
        get_opt("experiment", "delta0", S.delta0);
        get("experiment", "configs", S.configs);
        get("experiment", "probes", S.probes);
        get_opt("experiment", "kappa", S.kappa);
        get("experiment", "refine", S.refine);

        if (doc.contains("kernel")) {
            const json& k = doc["kernel"];
            const std::string v = k.value("variant", "model");
            if (v == "model") S.kernel = KernelSpec::model();
            else if (v == "scaled") S.kernel = KernelSpec::scaled(k.value("kappa", 1.0));
            else if (v == "modulated")
                S.kernel = KernelSpec::modulated(k.value("nu", 1.0), k.value("L", 1.0), k.value("omega", 1.0));
            else if (v == "none") S.kernel = KernelSpec::none();
            else bad.push_back("kernel.variant must be model, scaled, modulated or none");
        }

        Thresholds& T = S.thr;
        get("thresholds", "ratio_spread", T.ratio_spread);
        get("thresholds", "energy_spread", T.energy_spread);
        get("thresholds", "stability", T.stability);
        get("thresholds", "fit_residual", T.fit_residual);
        get("thresholds", "min_exponent", T.min_exponent);
        get("thresholds", "exponent_tol", T.exponent_tol);
        get("thresholds", "dirac_tol", T.dirac_tol);
        get("thresholds", "rate_factor", T.rate_factor);
        get("thresholds", "min_alpha", T.min_alpha);

        SolveConfig& C = S.solve;
        get("solve", "tol_rel", C.tol_rel);
        get("solve", "max_newton", C.max_newton);
        get("solve", "eps_start", C.eps_start);
        get("solve", "eps_end", C.eps_end);
        get("solve", "picard_fallback", C.picard_fallback);
        get("solve", "gmres_restart", C.gmres_restart);
        get("solve", "gmres_max_iters", C.gmres_max_iters);

        if (doc.contains("seed")) {
            if (doc["seed"].is_number_integer() && doc["seed"].get<std::int64_t>() >= 0) S.seed = doc["seed"].get<std::uint64_t>();
            else bad.push_back("seed must be a non-negative integer");
        }
        if (doc.contains("dense_ok")) get_bool(doc["dense_ok"], S.dense_ok, "dense_ok", bad);

        for (auto& v : P.violations()) bad.push_back(v);
        if (P.n != S.dim) bad.push_back("params.n must equal grid.dim");
        if (!(S.h > 0.0)) bad.push_back("requires grid spacing h > 0");
        if (S.levels < 2) bad.push_back("requires at least 2 levels");
        if (!(S.radius > 0.0)) bad.push_back("requires radius > 0");
        if (S.j_max < 0) bad.push_back("requires j_max >= 0");
        if (S.sigma && !(*S.sigma > 0.0 && *S.sigma < 1.0)) bad.push_back("requires sigma in (0,1)");
        try {
            Expression::parse(S.exterior, S.dim == 1 ? 1 : 2);
        } catch (const std::exception& e) {
            bad.push_back(std::string("scene.exterior: ") + e.what());
        }
        try {
            C.validate();
        } catch (const std::exception& e) {
            bad.push_back(std::string("solve: ") + e.what());
        }
        if (!bad.empty()) throw ParamError(bad);
        S.config_hash = hash();
        return S;
    }

private:
    static void get_bool(const json& v, bool& target, const char* key, std::vector<std::string>& bad) {
        if (v.is_boolean()) target = v.get<bool>();
        else bad.push_back(std::string(key) + " must be true or false");
    }
};

}  // namespace mixpot::io
