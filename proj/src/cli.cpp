#include "decaylab/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <future>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "decaylab/diagnostics.hpp"
#include "decaylab/duhamel.hpp"
#include "decaylab/emit.hpp"
#include "decaylab/fast_constructor.hpp"

namespace decaylab {

namespace fs = std::filesystem;

namespace {

struct Overrides {
    std::optional<double> t_end;
    std::optional<double> tol;
    std::optional<long> seed;
    bool override_smallness = false;
};

double growth_exponent(const Nonlinearity& f) {
    if (f.growth) return f.growth->p;
    if (f.lipschitz) return f.lipschitz->p;
    return 1.0;
}

class Writer {
public:
    Writer(fs::path dir, RunOutcome& outcome) : dir_(std::move(dir)), outcome_(outcome) {}

    void operator()(const std::string& name, const std::string& content) {
        const fs::path path = dir_ / name;
        write_atomic(path, content);
        outcome_.files.push_back(path);
    }

private:
    fs::path dir_;
    RunOutcome& outcome_;
};

void write_trajectory_files(Writer& write, const Scenario& s, const Trajectory& traj, const std::string& prefix) {
    if (traj.empty()) return;
    const OperatorSpec& spec = *s.spec;
    write(prefix + "trajectory.csv", trajectory_csv(traj));
    write(prefix + "trace.csv", trace_csv(spec, s.rates, traj, growth_exponent(s.f)));

    const EnergyTrace trace = energy_trace(spec, traj, {growth_exponent(s.f)});
    std::vector<double> norm_u, energy, energy_hat;
    for (const auto& e : trace.points) {
        norm_u.push_back(e.norm_u);
        energy.push_back(e.E);
        energy_hat.push_back(e.E_hat);
    }
    write(prefix + "norm_u.dat", plot_series(trace.times, norm_u));
    write(prefix + "energy.dat", plot_series(trace.times, energy));
    write(prefix + "energy_hat.dat", plot_series(trace.times, energy_hat));
    write(prefix + "quotient.dat", plot_series(trace.times, trace.G[0]));
}

void log_trajectory(std::ostream& log, const Scenario& s, const Trajectory& traj) {
    log << "  integrated to t = " << traj.t_end() << " in " << traj.meta().steps << " steps ("
        << traj.meta().rejected << " rejected)\n";
    if (traj.meta().certificate_breaches > 0)
        log << "  warning: growth certificate exceeded at " << traj.meta().certificate_breaches
            << " evaluations (max ratio " << traj.meta().max_certificate_ratio << ")\n";
    if (s.exact) {
        double worst = 0.0;
        for (std::size_t j = 0; j < traj.size(); ++j) {
            const PhasePair exact = s.exact(traj.times()[j]);
            const PhasePair& x = traj.states()[j];
            for (Index k = 0; k < x.size(); ++k)
                worst = std::max(worst, std::abs(x.u[k] - exact.u[k]) / std::max(std::abs(exact.u[k]), 1e-300));
        }
        log << "  max relative error against the closed form: " << worst << '\n';
    }
    if (s.kirchhoff)
        log << "  Hamiltonian dissipation defect: "
            << kirchhoff_dissipation_defect(s.kirchhoff->B, s.kirchhoff->alpha, traj) << '\n';
}

void classify_and_write(Writer& write, std::ostream& log, const Scenario& s, const Trajectory& traj,
                        const std::string& prefix, bool check_profiles) {
    const DecayReport report = classify(*s.spec, s.rates, s.f, traj);
    write(prefix + "report.csv", report_csv(s.name, report));
    log << "  verdict: " << to_string(report.verdict);
    if (report.fitted_power) log << ", power " << *report.fitted_power;
    if (report.fitted_rate) log << ", rate " << *report.fitted_rate;
    if (!report.note.empty()) log << " (" << report.note << ")";
    log << '\n';
    if (check_profiles && report.verdict == Verdict::Fast && !s.verify_gammas.empty()) {
        std::vector<FastProfileCheck> checks;
        for (double gamma : s.verify_gammas) {
            checks.push_back(verify_fast_profile(*s.spec, traj, report, gamma));
            log << "  profile check at gamma " << gamma << ": " << (checks.back().verified ? "verified" : "fails")
                << '\n';
        }
        write(prefix + "profile_check.csv", profile_check_csv(checks));
    }
}

void construct_and_write(Writer& write, std::ostream& log, const Scenario& s) {
    const ConstructRequest& req = *s.construct;
    if (!s.f.lipschitz)
        throw Error(ErrorCode::ConfigError, "construct: the nonlinearity has no Lipschitz certificate");
    const ProfileSpec profile =
        make_profile(*s.spec, s.rates, req.r0, s.f.lipschitz->p, req.v_pair, req.z_pair, req.epsilon0);
    const auto intervals = static_cast<std::size_t>(std::ceil(req.t_end / req.grid_step));
    const std::vector<double> grid = uniform_grid(req.t_end, intervals);
    const FastSolution result = construct(*s.spec, s.rates, s.f, profile, grid, req.options);
    write("construction.csv", construction_csv(result, profile));
    write("iterations.csv", iterations_csv(result));
    log << "  construction: " << result.iterations << " iterations, contraction factor "
        << result.contraction_factor << ", profile residual " << result.profile_residual << '\n';
    for (const auto& w : result.warnings) log << "  warning: " << w << '\n';
    const ConstructionReport check = verify_construction(*s.spec, result, profile);
    for (const auto& f : check.failures) log << "  check failed: " << f << '\n';
    if (result.trajectory) {
        write_trajectory_files(write, s, *result.trajectory, "constructed_");
        classify_and_write(write, log, s, *result.trajectory, "constructed_", false);
    }
}

fs::path output_root(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("DECAYLAB_OUT"); env != nullptr && *env != '\0') return env;
    return "decaylab_out";
}

Scenario resolve(Config config, const Overrides& o) {
    if (o.t_end) config.set("t_end", format_double(*o.t_end));
    if (o.tol) config.set("tol", format_double(*o.tol));
    if (o.seed) config.set("seed", std::to_string(*o.seed));
    Scenario s = build_scenario(config);
    if (o.override_smallness && s.construct) s.construct->options.override_smallness = true;
    return s;
}

int report_error(std::ostream& err, const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
}

}  // namespace

int exit_code_for(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::ConfigError: return kExitConfig;
        case ErrorCode::IoError: return kExitIo;
        default: return kExitNumerical;
    }
}

RunOutcome run_scenario(const Scenario& s, const fs::path& out_dir, std::ostream& log) {
    RunOutcome outcome;
    Writer write(out_dir, outcome);
    log << s.name << " -> " << out_dir.string() << '\n';
    try {
        write("spectrum.csv", spectrum_csv(*s.spec, s.rates));
        if (s.pipeline.simulate) {
            IntegratorOptions options;
            options.tol = s.tol;
            Trajectory traj;
            try {
                traj = integrate(*s.spec, s.f, s.initial, s.t_end, options);
            } catch (const IntegrationError& e) {
                // Keep what was computed; the report records the early stop.
                const Trajectory& partial = e.partial();
                if (!partial.empty()) {
                    write_trajectory_files(write, s, partial, "");
                    write("report.csv", report_csv(s.name, classify(*s.spec, s.rates, s.f, partial)));
                }
                throw;
            }
            write_trajectory_files(write, s, traj, "");
            log_trajectory(log, s, traj);
            if (s.pipeline.classify) classify_and_write(write, log, s, traj, "", true);
        }
        if (s.pipeline.construct) {
            if (!s.construct) throw Error(ErrorCode::ConfigError, "construct: no construction parameters given");
            construct_and_write(write, log, s);
        }
    } catch (const Error& e) {
        outcome.exit_code = exit_code_for(e.code());
        outcome.message = e.what();
        log << "  error: " << e.what() << '\n';
    }
    return outcome;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Decay analysis of damped second-order evolution equations"};
    app.require_subcommand(1);

    Overrides overrides;
    std::string out_flag;
    double t_end = 0.0, tol = 0.0;
    long seed = 0;
    auto* t_end_opt = app.add_option("--t-end", t_end, "Final time")->check(CLI::PositiveNumber);
    auto* tol_opt = app.add_option("--tol", tol, "Integrator tolerance")->check(CLI::PositiveNumber);
    auto* seed_opt = app.add_option("--seed", seed, "Seed for random scenarios");
    app.add_option("--out", out_flag, "Output directory (default $DECAYLAB_OUT, then ./decaylab_out)");
    app.add_flag("--override-smallness", overrides.override_smallness,
                 "Attempt a construction even when a smallness condition fails");
    app.fallthrough();

    std::string config_path, builtin, batch_dir;
    auto* spectrum = app.add_subcommand("spectrum", "Eigenvalues, roots and decay-rate set");
    auto* simulate = app.add_subcommand("simulate", "Integrate and write trajectory and energies");
    auto* classify_cmd = app.add_subcommand("classify", "Integrate and classify the decay");
    auto* construct_cmd = app.add_subcommand("construct-fast", "Build a fast solution by contraction");
    for (auto* sub : {spectrum, simulate, classify_cmd, construct_cmd})
        sub->add_option("config", config_path, "Scenario config file")->required();
    auto* scenario_cmd = app.add_subcommand("scenario", "Run a builtin scenario");
    scenario_cmd->add_option("name", builtin, "Builtin name")->required();
    auto* batch = app.add_subcommand("batch", "Run every .cfg file in a directory");
    batch->add_option("dir", batch_dir, "Directory of configs")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }
    if (*t_end_opt) overrides.t_end = t_end;
    if (*tol_opt) overrides.tol = tol;
    if (*seed_opt) overrides.seed = seed;
    const fs::path root = output_root(out_flag);

    try {
        if (*batch) {
            std::vector<fs::path> files;
            std::error_code ec;
            for (const auto& entry : fs::directory_iterator(batch_dir, ec))
                if (entry.is_regular_file() && entry.path().extension() == ".cfg") files.push_back(entry.path());
            if (ec) throw Error(ErrorCode::IoError, "cannot list " + batch_dir + ": " + ec.message());
            std::sort(files.begin(), files.end());
            if (files.empty()) throw Error(ErrorCode::ConfigError, batch_dir + ": no .cfg files");

            struct Job {
                int code;
                std::string log;
            };
            std::vector<std::future<Job>> jobs;
            for (const auto& file : files)
                jobs.push_back(std::async(std::launch::async, [file, &overrides, &root] {
                    std::ostringstream log;
                    try {
                        const Scenario s = resolve(Config::load(file), overrides);
                        const RunOutcome r = run_scenario(s, root / file.stem(), log);
                        return Job{r.exit_code, log.str()};
                    } catch (const Error& e) {
                        log << file.string() << ": error: " << e.what() << '\n';
                        return Job{exit_code_for(e.code()), log.str()};
                    }
                }));
            int worst = kExitOk;
            for (auto& job : jobs) {
                const Job j = job.get();
                out << j.log;
                worst = std::max(worst, j.code);
            }
            return worst;
        }

        Config config;
        if (*scenario_cmd) {
            config = Config::parse("scenario = " + builtin, "scenario " + builtin);
        } else {
            config = Config::load(config_path);
        }
        Scenario s = resolve(config, overrides);
        if (*spectrum) s.pipeline = {false, false, false};
        if (*simulate) s.pipeline = {true, false, false};
        if (*classify_cmd) s.pipeline = {true, true, false};
        if (*construct_cmd) s.pipeline = {false, false, true};
        const RunOutcome r = run_scenario(s, root / s.name, out);
        if (r.exit_code != kExitOk) err << "error: " << r.message << '\n';
        return r.exit_code;
    } catch (const Error& e) {
        return report_error(err, e);
    }
}

}  // namespace decaylab
