#pragma once

#include "regnoise/ensemble.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace regnoise {

enum class Analysis { blowup, extinction, supermartingale, tail_bound, continuity, conditions };

std::string_view to_string(Analysis a) noexcept;
Analysis analysis_from_string(std::string_view name);

struct ModelBlock {
    ModelKind kind = ModelKind::superlinear_sde;
    ModelParameters params;
    GridSpec grid;
    bool operator==(const ModelBlock&) const = default;
};

/// Field models only; the scalar model derives gamma = c0^2 and m from its own block.
struct NoiseBlock {
    double gamma = 1.0;
    double m = 1.0;
    std::size_t channels = 1;
    bool operator==(const NoiseBlock&) const = default;
};

struct EnsembleBlock {
    std::size_t n_paths = 100;
    std::uint64_t master_seed = 1;
    std::size_t threads = 0;
    bool operator==(const EnsembleBlock&) const = default;
};

struct InitialBlock {
    double value = 1.0;        // scalar
    std::size_t sine_mode = 1; // fields
    double h_norm = 1.0;       // fields
    bool operator==(const InitialBlock&) const = default;
};

struct ConditionsBlock {
    double eta = 1.5;
    std::size_t sample_count = 200;
    bool operator==(const ConditionsBlock&) const = default;
};

struct ContinuityBlock {
    std::vector<double> deltas{0.1, 0.01, 0.001};
    double eps_tol = 0.1;
    std::size_t n_pairs = 200;
    bool operator==(const ContinuityBlock&) const = default;
};

struct BlowupBlock {
    std::optional<double> max_fraction;
    bool operator==(const BlowupBlock&) const = default;
};

struct ExtinctionBlock {
    double min_fraction = 0.95;
    bool operator==(const ExtinctionBlock&) const = default;
};

struct ExperimentPlan {
    std::string name = "experiment";
    ModelBlock model;
    NoiseBlock noise;
    SimConfig sim;
    EnsembleBlock ensemble;
    InitialBlock initial;
    std::vector<Analysis> analyses;
    ConditionsBlock conditions;
    ContinuityBlock continuity;
    BlowupBlock blowup;
    ExtinctionBlock extinction;
    std::string output_dir = "out";
    bool dump_paths = false;

    bool operator==(const ExperimentPlan&) const = default;
};

/// Strict JSON parser: unknown keys, type mismatches and invariant violations
/// raise ParseError naming the key path. All defaults are filled in.
ExperimentPlan parse_config(std::string_view text);
/// Fully resolved JSON document accepted by parse_config.
std::string serialize_config(const ExperimentPlan& plan);

Model build_model(const ExperimentPlan& plan);
NoiseSpec build_noise(const ExperimentPlan& plan);
std::vector<double> build_initial(const ExperimentPlan& plan, const Model& model);

enum class Verdict { pass, fail, refused };

std::string_view to_string(Verdict v) noexcept;

struct AnalysisOutcome {
    Analysis analysis = Analysis::blowup;
    Verdict verdict = Verdict::pass;
    std::string summary;
};

struct ExperimentResult {
    int exit_code = 0;
    std::vector<AnalysisOutcome> outcomes;
};

/// Runs the plan's analyses (conditions first) and writes resolved_config.json,
/// the ensemble outputs, report.txt and report.json into plan.output_dir.
ExperimentResult run_experiment(const ExperimentPlan& plan);

/// Condition reports for the plan's model and noise, as printed by `check`.
std::string conditions_json(const ExperimentPlan& plan);

/// One path from the plan's initial condition; writes trajectory.csv.
TrajectoryRecord simulate_path(const ExperimentPlan& plan);

void write_trajectory_csv(const std::filesystem::path& file, const TrajectoryRecord& rec);

enum class FigureId { fig1, fig2, fig3, fig4, fig5 };

FigureId figure_from_string(std::string_view name);
std::string_view to_string(FigureId id) noexcept;

struct FigureSetup {
    Model model;
    NoiseSpec noise;
    SimConfig sim;
    std::vector<double> x0;
};

FigureSetup figure_setup(FigureId id);

/// Writes figN_path.csv (columns t,x) for path 0 under `seed`.
TrajectoryRecord emit_figure_data(FigureId id, std::uint64_t seed, const std::filesystem::path& out_dir);

} // namespace regnoise
