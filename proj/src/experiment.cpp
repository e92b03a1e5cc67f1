#include "tenevo/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include "json_io.hpp"
#include "tenevo/errors.hpp"
#include "tenevo/parallel.hpp"

#ifndef TENEVO_VERSION
#define TENEVO_VERSION "0.0.0"
#endif

namespace tenevo {

namespace {

using detail::Json;
using detail::get_or;
using detail::require_keys;
using Clock = std::chrono::steady_clock;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string boundary_name(Boundary b) { return b == Boundary::dirichlet ? "dirichlet" : "periodic"; }

Boundary boundary_from_string(const std::string& s) {
    if (s == "periodic") return Boundary::periodic;
    if (s == "dirichlet") return Boundary::dirichlet;
    throw ConfigError("problem.boundary: unknown value '" + s + "'");
}

template <class Fn>
auto enum_or_config_error(const std::string& where, Fn&& fn) {
    try {
        return fn();
    } catch (const InvalidArgument& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

PdeProblem parse_problem(const Json& j) {
    const std::string w = "problem";
    require_keys(j, w, {"kind", "dims", "speed", "viscosity", "amplitude", "domain", "boundary"});
    if (!j.contains("kind")) throw ConfigError("problem.kind is required");
    const auto kind = enum_or_config_error(w + ".kind", [&] { return problem_kind_from_string(j.at("kind").get<std::string>()); });
    const int dims = get_or<int>(j, "dims", w, kind == ProblemKind::navier_stokes ? 2 : 0);
    if (dims < 1) throw ConfigError("problem.dims must be >= 1");
    PdeProblem p;
    switch (kind) {
    case ProblemKind::transport: p = PdeProblem::transport(dims); break;
    case ProblemKind::heat: p = PdeProblem::heat(dims, default_heat_viscosity()); break;
    case ProblemKind::kdv: p = PdeProblem::kdv(dims, default_kdv_speed()); break;
    case ProblemKind::navier_stokes:
        if (dims != 2) throw ConfigError("problem.dims must be 2 for navier_stokes");
        p = PdeProblem::navier_stokes();
        break;
    }
    p.speed = get_or<double>(j, "speed", w, p.speed);
    p.viscosity = get_or<double>(j, "viscosity", w, p.viscosity);
    p.amplitude = get_or<double>(j, "amplitude", w, p.amplitude);
    if (j.contains("boundary")) p.boundary = boundary_from_string(j.at("boundary").get<std::string>());
    if (j.contains("domain")) {
        const auto& d = j.at("domain");
        p.domain.clear();
        if (d.is_array() && d.size() == 2 && d[0].is_number()) {
            p.domain.assign(static_cast<std::size_t>(dims), detail::interval_from_json(d, w + ".domain"));
        } else if (d.is_array()) {
            for (const auto& iv : d) p.domain.push_back(detail::interval_from_json(iv, w + ".domain"));
        } else {
            throw ConfigError("problem.domain: expected [lo, hi] or a list of them");
        }
    }
    enum_or_config_error(w, [&] {
        p.validate();
        return 0;
    });
    return p;
}

TnnArchitecture parse_arch(const Json& j, const PdeProblem& p) {
    const std::string w = "arch";
    require_keys(j, w, {"hidden", "rank", "activation", "input_map", "a", "b"});
    TnnArchitecture a;
    a.dims = p.dims;
    a.domain = p.domain;
    a.rank = get_or<int>(j, "rank", w, 3);
    a.hidden = get_or<std::vector<int>>(j, "hidden", w, {20, 20});
    a.activation = enum_or_config_error(w + ".activation", [&] {
        return activation_from_string(get_or<std::string>(j, "activation", w, "tanh"));
    });
    const std::string fallback = p.boundary == Boundary::periodic ? "periodic" : "dirichlet";
    a.input_map.kind = enum_or_config_error(w + ".input_map", [&] {
        return input_map_from_string(get_or<std::string>(j, "input_map", w, fallback));
    });
    const double len = p.domain.front().hi - p.domain.front().lo;
    a.input_map.a = get_or<double>(j, "a", w, 1.0);
    a.input_map.b = get_or<double>(j, "b", w, a.input_map.kind == InputMapKind::periodic ? 2.0 * M_PI / len : 1.0);
    enum_or_config_error(w, [&] {
        a.validate();
        return 0;
    });
    return a;
}

FitConfig parse_fit(const Json& j) {
    const std::string w = "fit";
    require_keys(j, w,
                 {"max_iterations", "learning_rate", "final_learning_rate", "target", "prefit", "prefit_iterations",
                  "polish_iterations", "polish_rcond", "polish_block", "trace_every"});
    FitConfig f;
    f.max_iterations = get_or(j, "max_iterations", w, f.max_iterations);
    f.learning_rate = get_or(j, "learning_rate", w, f.learning_rate);
    f.final_learning_rate = get_or(j, "final_learning_rate", w, f.final_learning_rate);
    f.target = get_or(j, "target", w, f.target);
    f.prefit = get_or(j, "prefit", w, f.prefit);
    f.prefit_iterations = get_or(j, "prefit_iterations", w, f.prefit_iterations);
    f.polish_iterations = get_or(j, "polish_iterations", w, f.polish_iterations);
    f.polish_rcond = get_or(j, "polish_rcond", w, f.polish_rcond);
    f.polish_block = get_or(j, "polish_block", w, f.polish_block);
    f.trace_every = get_or(j, "trace_every", w, f.trace_every);
    return f;
}

Json fit_to_json(const FitConfig& f) {
    return Json{{"max_iterations", f.max_iterations}, {"learning_rate", f.learning_rate},
                {"final_learning_rate", f.final_learning_rate}, {"target", f.target},
                {"prefit", f.prefit}, {"prefit_iterations", f.prefit_iterations},
                {"polish_iterations", f.polish_iterations}, {"polish_rcond", f.polish_rcond},
                {"polish_block", f.polish_block}, {"trace_every", f.trace_every}};
}

Json config_json(const ExperimentConfig& c) {
    Json domain = Json::array();
    for (const auto& iv : c.problem.domain) domain.push_back(detail::interval_to_json(iv));
    Json strategy{{"kind", to_string(c.strategy.kind)},
                  {"ratio", c.strategy.ratio},
                  {"count", c.strategy.count ? Json(*c.strategy.count) : Json(nullptr)},
                  {"reseed_each_step", c.strategy.reseed_each_step}};
    return Json{
        {"schema_version", kConfigSchemaVersion},
        {"name", c.name},
        {"problem",
         {{"kind", to_string(c.problem.kind)},
          {"dims", c.problem.dims},
          {"speed", c.problem.speed},
          {"viscosity", c.problem.viscosity},
          {"amplitude", c.problem.amplitude},
          {"domain", domain},
          {"boundary", boundary_name(c.problem.boundary)}}},
        {"arch",
         {{"hidden", c.arch.hidden},
          {"rank", c.arch.rank},
          {"activation", to_string(c.arch.activation)},
          {"input_map", to_string(c.arch.input_map.kind)},
          {"a", c.arch.input_map.a},
          {"b", c.arch.input_map.b}}},
        {"quadrature", {{"points", c.quadrature.points}, {"panels", c.quadrature.panels}}},
        {"evolution",
         {{"dt", c.evolution.dt},
          {"T", c.evolution.T},
          {"integrator", to_string(c.evolution.integrator)},
          {"rcond", c.evolution.rcond},
          {"blowup_factor", c.evolution.blowup_factor}}},
        {"strategy", strategy},
        {"fit", fit_to_json(c.fit)},
        {"output",
         {{"directory", c.output.directory},
          {"cadence", c.output.cadence},
          {"deterministic", c.output.deterministic},
          {"checkpoint_every", c.output.checkpoint_every},
          {"checkpoint_format", to_string(c.output.checkpoint_format)}}},
        {"seeds", {{"init", c.seeds.init}, {"mask", c.seeds.mask}, {"fit", c.seeds.fit}}},
    };
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

void make_dirs(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string checkpoint_name(const std::string& stem, CheckpointFormat f) {
    return stem + (f == CheckpointFormat::text ? ".json" : ".ckpt");
}

/// Restores the worker count when a deterministic run ends.
class ThreadGuard {
public:
    explicit ThreadGuard(bool single) : previous_(thread_count()) {
        if (single) set_thread_count(1);
    }
    ~ThreadGuard() { set_thread_count(previous_); }
    ThreadGuard(const ThreadGuard&) = delete;
    ThreadGuard& operator=(const ThreadGuard&) = delete;

private:
    int previous_;
};

} // namespace

std::string library_version() { return TENEVO_VERSION; }

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    try {
        problem.validate();
        arch.validate();
        if (arch.dims != problem.dims || arch.domain != problem.domain) fail("arch does not match the problem domain");
        fit.validate();
        strategy.validate(arch);
    } catch (const InvalidArgument& e) {
        fail(e.what());
    }
    if (quadrature.points < 1 || quadrature.panels < 1) fail("quadrature: points and panels must be >= 1");
    if (!(evolution.T > 0.0)) fail("evolution.T must be positive");
    if (!(evolution.dt > 0.0) || evolution.dt > evolution.T) fail("evolution.dt must lie in (0, T]");
    if (!(evolution.rcond > 0.0 && evolution.rcond < 1.0)) fail("evolution.rcond must lie in (0, 1)");
    if (!(evolution.blowup_factor > 1.0)) fail("evolution.blowup_factor must exceed 1");
    if (output.cadence < 1) fail("output.cadence must be >= 1 step");
    if (output.checkpoint_every < 0) fail("output.checkpoint_every must be >= 0");
    if (output.directory.empty()) fail("output.directory must not be empty");
}

std::int64_t ExperimentConfig::total_steps() const {
    return static_cast<std::int64_t>(std::ceil(evolution.T / evolution.dt - 1e-9));
}

Rules ExperimentConfig::rules() const {
    const auto base = gauss_legendre(quadrature.points);
    Rules r;
    for (const auto& iv : problem.domain) r.push_back(composite_rule(base, quadrature.panels, iv));
    return r;
}

PartitionStrategy ExperimentConfig::resolved_strategy() const {
    PartitionStrategy s = strategy;
    s.seed = seeds.mask;
    return s;
}

FitConfig ExperimentConfig::resolved_fit() const {
    FitConfig f = fit;
    f.seed = seeds.fit;
    return f;
}

ExperimentConfig parse_config(const std::string& json_text) {
    Json j;
    try {
        j = Json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    require_keys(j, "config",
                 {"schema_version", "name", "problem", "arch", "quadrature", "evolution", "strategy", "fit", "output",
                  "seeds"});
    if (!j.contains("schema_version")) throw ConfigError("config: schema_version is required");
    if (get_or<int>(j, "schema_version", "config", -1) != kConfigSchemaVersion) {
        throw ConfigError("config: unsupported schema_version (expected " + std::to_string(kConfigSchemaVersion) + ")");
    }
    if (!j.contains("problem")) throw ConfigError("config: problem section is required");
    if (!j.contains("evolution")) throw ConfigError("config: evolution section is required");

    ExperimentConfig c;
    c.name = get_or<std::string>(j, "name", "config", c.name);
    c.problem = parse_problem(j.at("problem"));
    c.arch = parse_arch(j.value("arch", Json::object()), c.problem);

    const Json q = j.value("quadrature", Json::object());
    require_keys(q, "quadrature", {"points", "panels"});
    c.quadrature.points = get_or(q, "points", "quadrature", c.quadrature.points);
    c.quadrature.panels = get_or(q, "panels", "quadrature", c.quadrature.panels);

    const Json& e = j.at("evolution");
    require_keys(e, "evolution", {"dt", "T", "integrator", "rcond", "blowup_factor"});
    if (!e.contains("dt") || !e.contains("T")) throw ConfigError("evolution: dt and T are required");
    c.evolution.dt = get_or(e, "dt", "evolution", c.evolution.dt);
    c.evolution.T = get_or(e, "T", "evolution", c.evolution.T);
    c.evolution.integrator = enum_or_config_error("evolution.integrator", [&] {
        return integrator_from_string(get_or<std::string>(e, "integrator", "evolution", "rk4"));
    });
    c.evolution.rcond = get_or(e, "rcond", "evolution", c.evolution.rcond);
    c.evolution.blowup_factor = get_or(e, "blowup_factor", "evolution", c.evolution.blowup_factor);

    const Json s = j.value("strategy", Json::object());
    require_keys(s, "strategy", {"kind", "ratio", "count", "reseed_each_step"});
    c.strategy.kind = enum_or_config_error("strategy.kind", [&] {
        return partition_kind_from_string(get_or<std::string>(s, "kind", "strategy", "full"));
    });
    c.strategy.ratio = get_or(s, "ratio", "strategy", c.strategy.ratio);
    if (s.contains("count") && !s.at("count").is_null()) c.strategy.count = get_or<int>(s, "count", "strategy", 0);
    c.strategy.reseed_each_step = get_or(s, "reseed_each_step", "strategy", c.strategy.reseed_each_step);

    c.fit = parse_fit(j.value("fit", Json::object()));

    const Json o = j.value("output", Json::object());
    require_keys(o, "output", {"directory", "cadence", "deterministic", "checkpoint_every", "checkpoint_format"});
    c.output.directory = get_or<std::string>(o, "directory", "output", "runs/" + c.name);
    c.output.cadence = get_or(o, "cadence", "output", c.output.cadence);
    c.output.deterministic = get_or(o, "deterministic", "output", c.output.deterministic);
    c.output.checkpoint_every = get_or(o, "checkpoint_every", "output", c.output.checkpoint_every);
    c.output.checkpoint_format = enum_or_config_error("output.checkpoint_format", [&] {
        return checkpoint_format_from_string(get_or<std::string>(o, "checkpoint_format", "output", "binary"));
    });

    const Json sd = j.value("seeds", Json::object());
    require_keys(sd, "seeds", {"init", "mask", "fit"});
    c.seeds.init = get_or(sd, "init", "seeds", c.seeds.init);
    c.seeds.mask = get_or(sd, "mask", "seeds", c.seeds.mask);
    c.seeds.fit = get_or(sd, "fit", "seeds", c.seeds.fit);

    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string config_to_json(const ExperimentConfig& cfg) { return config_json(cfg).dump(2) + "\n"; }

std::filesystem::path output_directory(const ExperimentConfig& cfg) {
    std::filesystem::path dir(cfg.output.directory);
    if (dir.is_relative()) {
        if (const char* root = std::getenv("TENEVO_OUTPUT_ROOT"); root && *root) return std::filesystem::path(root) / dir;
    }
    return dir;
}

RunReport run_fit(const ExperimentConfig& cfg) {
    cfg.validate();
    ThreadGuard threads(cfg.output.deterministic);
    RunReport r;
    r.started_utc = utc_now();
    r.threads = thread_count();
    const auto rules = cfg.rules();
    const auto u0 = analytic_solution(cfg.problem, rules, 0.0);
    const auto t0 = Clock::now();
    r.fit = fit_initial(init_network(cfg.arch, cfg.seeds.init), u0, rules, cfg.resolved_fit());
    r.fit_ms = ms_since(t0);
    r.fitted = true;
    r.params_init = r.fit.params;
    r.params_final = r.fit.params;
    r.finished_utc = utc_now();
    return r;
}

RunReport run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
    cfg.validate();
    ThreadGuard threads(cfg.output.deterministic);
    const bool det = cfg.output.deterministic;
    const auto rules = cfg.rules();
    const double dt = cfg.evolution.dt;
    const std::int64_t n_steps = cfg.total_steps();

    RunReport r;
    if (options.start) {
        if (options.start->params.arch != cfg.arch) {
            throw ConfigError("start checkpoint architecture does not match the config");
        }
        r = RunReport{};
        r.started_utc = utc_now();
        r.threads = thread_count();
        r.params_init = options.start->params;
    } else {
        r = run_fit(cfg);
    }
    if (options.output) make_dirs(*options.output / "checkpoints");

    const VelocityFn velocity =
        options.velocity ? options.velocity : problem_velocity(cfg.problem, rules, cfg.evolution.rcond);
    MaskSchedule schedule(cfg.resolved_strategy(), cfg.arch);

    const std::int64_t s0 = options.start ? options.start->step : 0;
    const double t0 = options.start ? options.start->t : 0.0;
    EvolutionState state{r.params_init, t0, s0, {}};
    const double norm0 = l2_norm(state.params, rules);
    const double blowup = cfg.evolution.blowup_factor * std::max(norm0, 1e-300);
    const auto start = Clock::now();

    auto record = [&](const EvolutionState& s, const Velocity* v) {
        const auto reference = analytic_solution(cfg.problem, rules, s.t);
        const auto err = l2_error(s.params, reference, rules);
        ErrorRecord e;
        e.step = s.step;
        e.t = s.t;
        e.abs_err = err.absolute;
        e.rel_err = err.relative.value_or(kNaN);
        e.residual = v ? v->residual : kNaN;
        e.eff_rank = v ? v->diagnostics.effective_rank : 0;
        e.cond_est = v ? v->diagnostics.condition : kNaN;
        e.wall_ms = det ? 0.0 : ms_since(start);
        DiagnosticRecord d;
        d.step = s.step;
        d.t = s.t;
        d.norm = l2_norm(s.params, rules);
        d.reference_norm = l2_norm(reference, rules);
        d.gamma_norm = v ? v->gamma.norm() : kNaN;
        d.selected = static_cast<int>(s.mask.count());
        d.truncated = v ? v->diagnostics.truncated : 0;
        d.sigma_max = v ? v->diagnostics.sigma_max : kNaN;
        r.errors.push_back(e);
        r.diagnostics.push_back(d);
        if (options.on_tick) options.on_tick(e, d, s.params);
        if (!std::isfinite(d.norm) || d.norm > blowup) {
            throw NumericalFailure("blow-up: |u| = " + fmt(d.norm) + " at t = " + fmt(s.t));
        }
    };

    auto save = [&](const EvolutionState& s, const std::filesystem::path& path) {
        save_checkpoint(Checkpoint{s.params, s.t, s.step}, path, cfg.output.checkpoint_format);
    };

    try {
        for (std::int64_t n = s0; n < n_steps; ++n) {
            state.mask = schedule.mask_for_step(n);
            StepRecord rec;
            // wrap the velocity to capture the full first-stage evaluation
            std::optional<Velocity> first;
            const VelocityFn tap = [&](const TnnParams& p, const ParamMask& m, double t) {
                Velocity v = velocity(p, m, t);
                if (!first) first = v;
                return v;
            };
            const bool tick = (n - s0) % cfg.output.cadence == 0;
            EvolutionState next;
            try {
                next = step(cfg.evolution.integrator, state, dt, tap, &rec);
            } catch (const NumericalFailure&) {
                if (tick) {
                    try {
                        record(state, first ? &*first : nullptr);
                    } catch (const NumericalFailure&) {
                    }
                }
                throw;
            }
            if (tick) record(state, &*first);
            next.step = n + 1;
            next.t = t0 + static_cast<double>(n + 1 - s0) * dt;
            state = std::move(next);
            if (options.output && cfg.output.checkpoint_every > 0 && state.step % cfg.output.checkpoint_every == 0) {
                char stem[32];
                std::snprintf(stem, sizeof stem, "step_%08lld", static_cast<long long>(state.step));
                save(state, *options.output / "checkpoints" / checkpoint_name(stem, cfg.output.checkpoint_format));
            }
        }
        state.mask = schedule.mask_for_step(state.step);
        const Velocity v = velocity(state.params, state.mask, state.t);
        record(state, &v);
        r.status = RunStatus::completed;
    } catch (const NumericalFailure& e) {
        r.status = RunStatus::failed;
        r.failed_at_t = state.t;
        r.message = e.what();
    }
    r.evolve_ms = ms_since(start);
    r.params_final = state.params;
    r.t_final = state.t;
    r.step_final = state.step;
    r.finished_utc = utc_now();
    if (options.output) write_outputs(r, cfg, *options.output);
    return r;
}

std::string errors_csv(const std::vector<ErrorRecord>& rows) {
    std::string out = "step,t,abs_err,rel_err,residual,eff_rank,cond_est,wall_ms\n";
    for (const auto& e : rows) {
        out += std::to_string(e.step) + "," + fmt(e.t) + "," + fmt(e.abs_err) + "," + fmt(e.rel_err) + "," +
               fmt(e.residual) + "," + std::to_string(e.eff_rank) + "," + fmt(e.cond_est) + "," + fmt(e.wall_ms) +
               "\n";
    }
    return out;
}

std::string diagnostics_csv(const std::vector<DiagnosticRecord>& rows) {
    std::string out = "step,t,norm,reference_norm,gamma_norm,selected,truncated,sigma_max\n";
    for (const auto& d : rows) {
        out += std::to_string(d.step) + "," + fmt(d.t) + "," + fmt(d.norm) + "," + fmt(d.reference_norm) + "," +
               fmt(d.gamma_norm) + "," + std::to_string(d.selected) + "," + std::to_string(d.truncated) + "," +
               fmt(d.sigma_max) + "\n";
    }
    return out;
}

std::string manifest_json(const RunReport& r, const ExperimentConfig& cfg) {
    Json fit = nullptr;
    if (r.fitted) {
        fit = Json{{"optimizer", "adam with cosine-decayed learning rate, then Gauss-Newton with backtracking"},
                   {"loss", r.fit.loss},
                   {"converged", r.fit.converged},
                   {"iterations", r.fit.iterations}};
    }
    Json m{{"schema_version", kConfigSchemaVersion},
           {"library_version", library_version()},
           {"config", config_json(cfg)},
           {"seeds", {{"init", cfg.seeds.init}, {"mask", cfg.seeds.mask}, {"fit", cfg.seeds.fit}}},
           {"started_utc", r.started_utc},
           {"finished_utc", r.finished_utc},
           {"status", r.status == RunStatus::completed ? "completed" : "failed"},
           {"failed_at_t", r.status == RunStatus::failed ? Json(r.failed_at_t) : Json(nullptr)},
           {"message", r.message},
           {"records", r.errors.size()},
           {"t_final", r.t_final},
           {"step_final", r.step_final},
           {"fit", fit},
           {"wall_ms", {{"fit", r.fit_ms}, {"evolve", r.evolve_ms}}},
           {"threads", r.threads},
           {"checkpoint_order_version", ParamLayout::kOrderVersion}};
    return m.dump(2) + "\n";
}

void write_outputs(const RunReport& report, const ExperimentConfig& cfg, const std::filesystem::path& directory) {
    make_dirs(directory);
    write_text(directory / "errors.csv", errors_csv(report.errors));
    write_text(directory / "diagnostics.csv", diagnostics_csv(report.diagnostics));
    std::string trace = "iteration,loss,wall_ms\n";
    for (const auto& p : report.fit.trace) {
        trace += std::to_string(p.iteration) + "," + fmt(p.loss) + "," +
                 fmt(cfg.output.deterministic ? 0.0 : p.wall_ms) + "\n";
    }
    write_text(directory / "fit_trace.csv", trace);
    write_text(directory / "manifest.json", manifest_json(report, cfg));
    const auto f = cfg.output.checkpoint_format;
    if (!report.params_init.theta.empty()) {
        save_checkpoint(Checkpoint{report.params_init, 0.0, 0}, directory / checkpoint_name("params_init", f), f);
    }
    if (!report.params_final.theta.empty()) {
        save_checkpoint(Checkpoint{report.params_final, report.t_final, report.step_final},
                        directory / checkpoint_name("params_final", f), f);
    }
}

SweepSummary summarize(const std::vector<const RunReport*>& reports, int repetitions) {
    SweepSummary summary;
    summary.repetitions = repetitions;
    std::vector<const RunReport*> done;
    for (const auto* r : reports) {
        if (r->status == RunStatus::completed) done.push_back(r);
    }
    summary.completed = static_cast<int>(done.size());
    summary.incomplete = summary.completed < repetitions;
    if (done.empty()) return summary;
    std::size_t rows = done.front()->errors.size();
    for (const auto* d : done) rows = std::min(rows, d->errors.size());
    for (std::size_t i = 0; i < rows; ++i) {
        MeanRecord m;
        m.step = done.front()->errors[i].step;
        m.t = done.front()->errors[i].t;
        m.min_abs = std::numeric_limits<double>::infinity();
        m.max_abs = -m.min_abs;
        for (const auto* d : done) {
            const auto& e = d->errors[i];
            if (e.step != m.step) throw InvalidArgument("sweep: runs of one config disagree on tick steps");
            m.mean_abs += e.abs_err;
            m.mean_rel += e.rel_err;
            m.min_abs = std::min(m.min_abs, e.abs_err);
            m.max_abs = std::max(m.max_abs, e.abs_err);
        }
        m.mean_abs /= static_cast<double>(done.size());
        m.mean_rel /= static_cast<double>(done.size());
        summary.mean.push_back(m);
    }
    return summary;
}

SweepReport run_sweep(const std::vector<ExperimentConfig>& configs, int repetitions, bool identical_seeds,
                      const std::optional<std::filesystem::path>& output) {
    if (repetitions < 1) throw ConfigError("sweep: repetitions must be >= 1");
    SweepReport out;
    for (std::size_t c = 0; c < configs.size(); ++c) {
        std::vector<const RunReport*> all;
        const std::string tag = std::to_string(c) + "_" + configs[c].name;
        for (int rep = 0; rep < repetitions; ++rep) {
            ExperimentConfig cfg = configs[c];
            if (!identical_seeds) {
                const auto off = static_cast<std::uint64_t>(rep);
                cfg.seeds = {cfg.seeds.init + off, cfg.seeds.mask + off, cfg.seeds.fit + off};
            }
            RunOptions opt;
            if (output) opt.output = *output / tag / ("rep_" + std::to_string(rep));
            out.runs.push_back(SweepRun{c, rep, cfg.seeds, run_experiment(cfg, opt)});
        }
        for (const auto& run : out.runs) {
            if (run.config_index == c) all.push_back(&run.report);
        }
        SweepSummary summary = summarize(all, repetitions);
        summary.config_index = c;
        if (output) {
            make_dirs(*output / tag);
            write_text(*output / tag / "mean.csv", mean_csv(summary.mean));
        }
        out.summaries.push_back(std::move(summary));
    }
    return out;
}

std::string mean_csv(const std::vector<MeanRecord>& rows) {
    std::string out = "step,t,mean_abs_err,mean_rel_err,min_abs_err,max_abs_err\n";
    for (const auto& m : rows) {
        out += std::to_string(m.step) + "," + fmt(m.t) + "," + fmt(m.mean_abs) + "," + fmt(m.mean_rel) + "," +
               fmt(m.min_abs) + "," + fmt(m.max_abs) + "\n";
    }
    return out;
}

} // namespace tenevo
