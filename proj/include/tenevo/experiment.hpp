#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tenevo/checkpoint.hpp"
#include "tenevo/evolution.hpp"
#include "tenevo/init_fit.hpp"
#include "tenevo/pde_operators.hpp"

namespace tenevo {

inline constexpr int kConfigSchemaVersion = 1;

std::string library_version();

struct QuadratureConfig {
    int points{8};
    int panels{10};
};

struct EvolutionConfig {
    double dt{0.01};
    double T{1.0};
    Integrator integrator{Integrator::rk4};
    double rcond{kDefaultRcond};
    /// the run fails once |u| exceeds this multiple of |u(0)|
    double blowup_factor{1e3};
};

struct OutputConfig {
    std::string directory{"runs/default"};
    /// steps between error records
    int cadence{1};
    /// one worker thread and wall_ms written as 0, so errors.csv is
    /// byte-identical across runs
    bool deterministic{false};
    /// steps between intermediate checkpoints (0 disables)
    int checkpoint_every{0};
    CheckpointFormat checkpoint_format{CheckpointFormat::binary};
};

struct Seeds {
    std::uint64_t init{1};
    std::uint64_t mask{1};
    std::uint64_t fit{1};
};

/// Everything a run depends on. Parsing fills in every default, so config_to_json()
/// of a parsed config lists all knobs explicitly.
struct ExperimentConfig {
    std::string name{"experiment"};
    PdeProblem problem;
    TnnArchitecture arch;
    QuadratureConfig quadrature;
    EvolutionConfig evolution;
    /// the seed inside is ignored; seeds.mask is used
    PartitionStrategy strategy;
    /// the seed inside is ignored; seeds.fit is used
    FitConfig fit;
    OutputConfig output;
    Seeds seeds;

    void validate() const;
    std::int64_t total_steps() const;
    Rules rules() const;
    PartitionStrategy resolved_strategy() const;
    FitConfig resolved_fit() const;
};

/// Throws ConfigError on unknown keys, wrong types or invalid values.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Pretty-printed JSON holding every field.
std::string config_to_json(const ExperimentConfig& cfg);

/// Output directory after applying the TENEVO_OUTPUT_ROOT override to a
/// relative path.
std::filesystem::path output_directory(const ExperimentConfig& cfg);

struct ErrorRecord {
    std::int64_t step{0};
    double t{0.0};
    double abs_err{0.0};
    /// NaN when the reference has zero norm
    double rel_err{0.0};
    double residual{0.0};
    int eff_rank{0};
    double cond_est{0.0};
    double wall_ms{0.0};
};

struct DiagnosticRecord {
    std::int64_t step{0};
    double t{0.0};
    double norm{0.0};
    double reference_norm{0.0};
    double gamma_norm{0.0};
    int selected{0};
    int truncated{0};
    double sigma_max{0.0};
};

enum class RunStatus { completed, failed };

struct RunReport {
    std::vector<ErrorRecord> errors;
    std::vector<DiagnosticRecord> diagnostics;
    RunStatus status{RunStatus::completed};
    double failed_at_t{0.0};
    std::string message;
    FitResult fit;
    bool fitted{false};
    TnnParams params_init;
    TnnParams params_final;
    double t_final{0.0};
    std::int64_t step_final{0};
    std::string started_utc;
    std::string finished_utc;
    double fit_ms{0.0};
    double evolve_ms{0.0};
    int threads{1};
};

struct RunOptions {
    /// skip the fit and start from this state
    std::optional<Checkpoint> start;
    /// replaces the Galerkin velocity of the problem
    VelocityFn velocity;
    std::function<void(const ErrorRecord&, const DiagnosticRecord&, const TnnParams&)> on_tick;
    /// when set, intermediate checkpoints go to <dir>/checkpoints and
    /// write_outputs() runs at the end, also for failed runs
    std::optional<std::filesystem::path> output;
};

/// Fits the initial condition only. The report has no error records.
RunReport run_fit(const ExperimentConfig& cfg);

/// Fit (unless a start state is given), then evolve to T recording errors at
/// step 0, every `cadence` steps and at the final step. The diagnostics of a
/// record come from the Galerkin evaluation at that state. A numerical failure
/// or blow-up ends the run with status failed and keeps the partial series.
RunReport run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// errors.csv, diagnostics.csv, fit_trace.csv, manifest.json, params_init and
/// params_final. Throws IoError with the path on failure.
void write_outputs(const RunReport& report, const ExperimentConfig& cfg, const std::filesystem::path& directory);

std::string errors_csv(const std::vector<ErrorRecord>& rows);
std::string diagnostics_csv(const std::vector<DiagnosticRecord>& rows);
std::string manifest_json(const RunReport& report, const ExperimentConfig& cfg);

struct SweepRun {
    std::size_t config_index{0};
    int repetition{0};
    Seeds seeds;
    RunReport report;
};

struct MeanRecord {
    std::int64_t step{0};
    double t{0.0};
    double mean_abs{0.0};
    double mean_rel{0.0};
    double min_abs{0.0};
    double max_abs{0.0};
};

struct SweepSummary {
    std::size_t config_index{0};
    int completed{0};
    int repetitions{0};
    bool incomplete{false};
    std::vector<MeanRecord> mean;
};

struct SweepReport {
    std::vector<SweepRun> runs;
    std::vector<SweepSummary> summaries;
};

/// Pointwise mean over the completed reports on their shared ticks.
SweepSummary summarize(const std::vector<const RunReport*>& reports, int repetitions);

/// Runs every config `repetitions` times. Repetition r offsets every seed by
/// r unless `identical_seeds` is set. Means are taken over completed runs on
/// the ticks they share.
SweepReport run_sweep(const std::vector<ExperimentConfig>& configs, int repetitions, bool identical_seeds = false,
                      const std::optional<std::filesystem::path>& output = std::nullopt);

std::string mean_csv(const std::vector<MeanRecord>& rows);

} // namespace tenevo
