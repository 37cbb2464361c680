// mixpot: potentials, Dirichlet solves, SOLA and the experiment suite.
// Exit status: 0 pass, 2 fail, 1 error.

#include <CLI11.hpp>

#include <iostream>

#include "mixpot/io.hpp"

using namespace mixpot;
using io::json;

namespace {

struct Options {
    std::string config;
    std::string out;
    std::string cache;
    int threads = 1;
    bool dense_ok = false;
    std::vector<std::string> names;
};

io::RunConfig load_config(const Options& o, const std::string& command) {
    io::RunConfig c = o.config.empty() ? io::RunConfig::from_json(json{{"command", command}})
                                       : io::RunConfig::load(o.config);
    if (c.doc.contains("command") && c.command != command)
        throw DomainError("config is for '" + c.command + "', not '" + command + "'");
    c.command = command;
    return c;
}

ExperimentSetup setup(const io::RunConfig& c, const Options& o, const std::string& name) {
    ExperimentSetup S = c.setup_for(name);
    if (!o.cache.empty()) S.cache_dir = o.cache;
    if (o.dense_ok) S.dense_ok = true;
    return S;
}

std::optional<io::ArtifactDir> artifacts(const Options& o, const io::RunConfig& c) {
    if (o.out.empty()) return std::nullopt;
    io::ArtifactDir d(o.out, c.hash());
    d.write("config.json", c.to_string());
    return d;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

int cmd_potential(const Options& o) {
    const io::RunConfig c = load_config(o, "potential");
    const ExperimentSetup S = setup(c, o, "");
    const Measure mu(S.dim, S.atoms);
    if (mu.empty()) throw DomainError("potential needs scene.atoms or scene.measure");
    Point x0 = S.center;
    std::vector<double> radii{S.radius};
    double beta = 1.0;
    if (c.doc.contains("potential")) {
        const json& pj = c.doc["potential"];
        if (pj.contains("center")) x0 = {pj["center"][0], pj["center"].size() > 1 ? pj["center"][1].get<double>() : 0.0};
        if (pj.contains("radii")) radii = pj["radii"].get<std::vector<double>>();
        beta = pj.value("beta", 1.0);
    }
    const auto I = riesz_profile(mu, x0, radii);
    const auto Wf = wolff_profile(mu, x0, radii, beta, S.params.p);
    std::ostringstream csv;
    csv.precision(17);
    csv << "rho,riesz,wolff\n";
    for (std::size_t k = 0; k < radii.size(); ++k) csv << radii[k] << ',' << I.values[k] << ',' << Wf.values[k] << '\n';
    if (auto d = artifacts(o, c)) {
        d->write("potential.csv", csv.str());
        json j{{"config_hash", c.hash()}, {"center", {x0[0], x0[1]}}, {"beta", beta}, {"p", S.params.p},
               {"radii", radii}, {"riesz", io::numbers(I.values)}, {"wolff", io::numbers(Wf.values)}};
        d->write("potential.json", j.dump(2) + "\n");
    }
    std::cout << "potential R=" << fmt(radii.back()) << " riesz=" << fmt(I.values.back())
              << " wolff=" << fmt(Wf.values.back()) << "\n";
    return 0;
}

int cmd_solve(const Options& o) {
    const io::RunConfig c = load_config(o, "solve");
    const ExperimentSetup S = setup(c, o, "");
    const auto sc = detail::make_scene(S, S.h);
    const Measure mu = detail::source_measure(S, sc.grid);
    const SolveResult res = detail::solve_data(sc, mu, S.solve);
    if (auto d = artifacts(o, c)) {
        io::write_grid_function(*d, "u", res.u, c.hash());
        json log = json::array();
        for (const auto& l : res.report.log)
            log.push_back({{"iter", l.iter}, {"residual", l.residual}, {"step", l.step}, {"eps", l.eps}, {"kind", l.kind}});
        json j{{"config_hash", c.hash()}, {"converged", res.report.converged}, {"iterations", res.report.iterations},
               {"residual_rel", res.report.residual_rel}, {"log", log}};
        d->write("solve.json", j.dump(2) + "\n");
    }
    std::cout << "solve residual=" << fmt(res.report.residual_rel) << " iterations=" << res.report.iterations
              << " verdict=" << (res.report.converged ? "pass" : "fail") << "\n";
    return res.report.converged ? 0 : 2;
}

int cmd_sola(const Options& o) {
    const io::RunConfig c = load_config(o, "sola");
    const ExperimentSetup S = setup(c, o, "");
    const auto sc = detail::make_scene(S, S.h);
    const Measure mu(S.dim, S.atoms);
    if (mu.empty()) throw DomainError("sola needs scene.atoms or scene.measure");
    const SolaResult r = sola_solve(mu, sc.g, S.params, sc.field, sc.W, S.solve, S.j_max, S.delta0);
    if (auto d = artifacts(o, c)) {
        io::write_grid_function(*d, "u", r.limit, c.hash());
        json j{{"config_hash", c.hash()}, {"deltas", r.deltas}, {"distances", io::numbers(r.distances)},
               {"q", r.q_used}, {"converged", r.converged}, {"h_floor_reached", r.h_floor_reached}};
        d->write("sola.json", j.dump(2) + "\n");
    }
    std::cout << "sola levels=" << r.deltas.size()
              << " last_distance=" << (r.distances.empty() ? std::string("-") : fmt(r.distances.back()))
              << " verdict=" << (r.converged ? "pass" : "fail") << "\n";
    return r.converged ? 0 : 2;
}

std::vector<std::string> selected(const Options& o, const io::RunConfig& c) {
    if (o.names.empty()) return c.experiments;
    std::vector<std::string> v;
    for (const auto& n : o.names) {
        if (n == "all") {
            const auto& all = experiment_names();
            v.insert(v.end(), all.begin(), all.end());
            continue;
        }
        const auto& all = experiment_names();
        if (std::find(all.begin(), all.end(), n) == all.end()) throw DomainError("unknown experiment '" + n + "'");
        v.push_back(n);
    }
    return v;
}

int cmd_experiment(const Options& o, bool audit) {
    const io::RunConfig c = load_config(o, audit ? "audit" : "experiment");
    const auto names = selected(o, c);
    if (names.empty()) {
        std::cout << (audit ? "audit: no experiments configured, max discrepancy 0\n" : "no experiments configured\n");
        return 0;
    }
    std::optional<io::ArtifactDir> d = artifacts(o, c);
    bool all_pass = true;
    double worst = 0.0;
    json audit_json = json::object();
    for (const auto& name : names) {
        ExperimentSetup S = setup(c, o, name);
        S.audit = audit;
        const ExperimentReport R = run_experiment(name, S);
        if (d) {
            d->write(name + ".json", io::report_to_json(R).dump(2) + "\n");
            d->write(name + ".csv", R.to_csv());
        }
        if (audit) {
            const double a = R.audit_discrepancy.value_or(0.0);
            worst = std::max(worst, std::isfinite(a) ? a : kInf);
            audit_json[name] = io::number(a);
            std::cout << name << " discrepancy=" << fmt(a) << "\n";
        } else {
            all_pass = all_pass && R.verdict;
            std::cout << name << " exponent=" << fmt(R.fitted_exponent) << " verdict=" << (R.verdict ? "pass" : "fail")
                      << "\n";
        }
    }
    if (audit) {
        const bool ok = worst < 1e-10;
        if (d) d->write("audit.json", json{{"config_hash", c.hash()}, {"max_discrepancy", worst}, {"experiments", audit_json}}.dump(2) + "\n");
        std::cout << "audit max discrepancy=" << fmt(worst) << " verdict=" << (ok ? "pass" : "fail") << "\n";
        return ok ? 0 : 2;
    }
    return all_pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixed local-nonlocal potential laboratory"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* sc) {
        sc->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
        sc->add_option("--out", o.out, "artifact directory");
        sc->add_option("--cache", o.cache, "kernel weight cache directory");
        sc->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
        sc->add_flag("--dense-ok", o.dense_ok, "allow kernel assembly above 20000 nodes");
    };
    auto* pot = app.add_subcommand("potential", "Riesz and Wolff potentials of the scene measure");
    auto* sol = app.add_subcommand("solve", "Dirichlet solve of the configured scene");
    auto* sola = app.add_subcommand("sola", "SOLA sequence for the scene measure");
    auto* exp = app.add_subcommand("experiment", "run experiments (names, 'all', or the config list)");
    auto* aud = app.add_subcommand("audit", "independent recomputation of every bracket");
    for (auto* sc : {pot, sol, sola, exp, aud}) common(sc);
    exp->add_option("name", o.names, "experiment names");
    aud->add_option("name", o.names, "experiment names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }
    try {
        if (*pot) return cmd_potential(o);
        if (*sol) return cmd_solve(o);
        if (*sola) return cmd_sola(o);
        if (*exp) return cmd_experiment(o, false);
        if (*aud) return cmd_experiment(o, true);
    } catch (const ParamError& e) {
        std::cerr << "error: invalid configuration\n";
        for (const auto& p : e.problems()) std::cerr << "  " << p << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
