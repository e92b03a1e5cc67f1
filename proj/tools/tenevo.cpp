// Command-line front end: fit-init, evolve, run, sweep, verify.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "checks.hpp"
#include "tenevo/errors.hpp"
#include "tenevo/experiment.hpp"

using namespace tenevo;

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

void print_tail(const RunReport& r, const std::filesystem::path& dir) {
    if (!r.errors.empty()) {
        const auto& e = r.errors.back();
        std::printf("t=%.6g abs_err=%.3e rel_err=%.3e\n", e.t, e.abs_err, e.rel_err);
    }
    if (r.status == RunStatus::failed) std::printf("FAILED at t=%.6g: %s\n", r.failed_at_t, r.message.c_str());
    std::printf("outputs: %s\n", dir.string().c_str());
}

int cmd_fit(const std::string& path) {
    const auto cfg = load_config(path);
    const auto dir = output_directory(cfg);
    const auto r = run_fit(cfg);
    write_outputs(r, cfg, dir);
    std::printf("fit loss %.3e after %d iterations (%s)\n", r.fit.loss, r.fit.iterations,
                r.fit.converged ? "reached target" : "target not reached");
    std::printf("outputs: %s\n", dir.string().c_str());
    return kOk;
}

int cmd_run(const std::string& path, const std::string& from) {
    const auto cfg = load_config(path);
    RunOptions opt;
    opt.output = output_directory(cfg);
    if (!from.empty()) opt.start = load_checkpoint(from);
    const auto r = run_experiment(cfg, opt);
    print_tail(r, *opt.output);
    return r.status == RunStatus::completed ? kOk : kNumerical;
}

int cmd_sweep(const std::vector<std::string>& paths, int reps, bool identical) {
    std::vector<ExperimentConfig> cfgs;
    for (const auto& p : paths) cfgs.push_back(load_config(p));
    const auto dir = output_directory(cfgs.front()) / "sweep";
    const auto s = run_sweep(cfgs, reps, identical, dir);
    bool ok = true;
    for (const auto& sum : s.summaries) {
        const auto& name = cfgs[sum.config_index].name;
        std::printf("%s: %d/%d runs completed%s\n", name.c_str(), sum.completed, sum.repetitions,
                    sum.incomplete ? " (mean over completed runs only)" : "");
        if (!sum.mean.empty()) {
            const auto& m = sum.mean.back();
            std::printf("  t=%.6g mean_abs_err=%.3e band=[%.3e, %.3e]\n", m.t, m.mean_abs, m.min_abs, m.max_abs);
        }
        ok = ok && !sum.incomplete;
    }
    std::printf("outputs: %s\n", dir.string().c_str());
    return ok ? kOk : kNumerical;
}

int cmd_verify(const std::string& path) {
    const auto cfg = load_config(path);
    std::vector<checks::Outcome> out;
    out.push_back(checks::quadrature_exactness({cfg.quadrature.points}));
    out.push_back(checks::jacobian_vs_fd(cfg.arch));
    out.push_back(checks::fit_gradient_vs_fd(cfg.arch, cfg.problem, cfg.rules()));
    // grid oracle on a two-dimensional copy of the preset
    auto small = cfg.arch;
    auto problem = cfg.problem;
    if (small.dims > 2) {
        small.dims = 2;
        small.domain.resize(2);
        problem.dims = 2;
        problem.domain.resize(2);
    }
    out.push_back(checks::assembly_vs_brute(small, problem));
    out.push_back(checks::boundary_property(cfg.arch));
    if (cfg.problem.kind == ProblemKind::kdv) out.push_back(checks::kdv_source_identity(cfg.problem.dims));
    bool ok = true;
    for (const auto& o : out) {
        std::printf("%s %s: %.3e (tolerance %.1e)\n", o.pass ? "PASS" : "FAIL", o.name.c_str(), o.value, o.tolerance);
        ok = ok && o.pass;
    }
    return ok ? kOk : kNumerical;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tensor neural network Galerkin time evolution"};
    app.require_subcommand(1);
    std::string config;
    std::string from;
    std::vector<std::string> configs;
    int reps = 3;
    bool identical = false;

    auto* fit = app.add_subcommand("fit-init", "fit the initial condition and write params_init");
    fit->add_option("config", config, "experiment config (JSON)")->required();
    auto* evolve = app.add_subcommand("evolve", "evolve from a checkpoint without refitting");
    evolve->add_option("config", config, "experiment config (JSON)")->required();
    evolve->add_option("--from", from, "checkpoint to start from")->required();
    auto* run = app.add_subcommand("run", "fit, evolve and write all outputs");
    run->add_option("config", config, "experiment config (JSON)")->required();
    auto* sweep = app.add_subcommand("sweep", "repeat runs with distinct seeds and average the error series");
    sweep->add_option("configs", configs, "experiment configs (JSON)")->required();
    sweep->add_option("--reps", reps, "repetitions per config")->check(CLI::PositiveNumber);
    sweep->add_flag("--identical-seeds", identical, "reuse the config seeds for every repetition");
    auto* verify = app.add_subcommand("verify", "oracle and property checks for a preset");
    verify->add_option("config", config, "experiment config (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*fit) return cmd_fit(config);
        if (*evolve) return cmd_run(config, from);
        if (*run) return cmd_run(config, "");
        if (*sweep) return cmd_sweep(configs, reps, identical);
        if (*verify) return cmd_verify(config);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kConfig;
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIo;
    }
    return kOk;
}
