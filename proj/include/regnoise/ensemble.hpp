#pragma once

#include "regnoise/conditions.hpp"
#include "regnoise/integrate.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace regnoise {

struct EnsembleOptions {
    /// Worker threads; 0 means hardware concurrency.
    std::size_t threads = 0;
    std::vector<double> moment_exponents{1.0, 2.0};
    std::vector<double> quantile_levels{0.5, 0.9, 0.99};
    /// Keep every TrajectoryRecord (memory grows with n_paths x grid).
    bool keep_paths = false;
};

struct MomentPoint {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t count = 0;
    bool operator==(const MomentPoint&) const = default;
};

struct EnsembleStats {
    std::size_t n_paths = 0;
    std::size_t blowup_count = 0;
    /// Per blown-up path, in path order.
    std::vector<double> blowup_times;
    /// Per extinct path, in path order.
    std::vector<double> extinction_times;
    double horizon = 0.0;
    std::vector<double> time_grid;
    /// Paths not yet blown up at each grid time.
    std::vector<std::size_t> survivors;
    /// exponent -> per-time mean and stderr of h_norm^exponent over survivors (extinct paths count as 0).
    std::map<double, std::vector<MomentPoint>> moments;
    /// level -> quantile of sup_t h_norm (inf for blown-up paths).
    std::map<double, double> sup_norm_quantiles;
    std::vector<TrajectoryRecord> paths;

    bool operator==(const EnsembleStats& o) const {
        return n_paths == o.n_paths && blowup_count == o.blowup_count && blowup_times == o.blowup_times &&
               extinction_times == o.extinction_times && horizon == o.horizon && time_grid == o.time_grid &&
               survivors == o.survivors && moments == o.moments && sup_norm_quantiles == o.sup_norm_quantiles;
    }
};

/// Runs paths 0..n_paths-1 from x0. Results do not depend on the thread count.
EnsembleStats run_ensemble(const Model& model, const NoiseSpec& noise, const SimConfig& cfg,
                           std::span<const double> x0, std::size_t n_paths, std::uint64_t master_seed,
                           const EnsembleOptions& options = {});

struct Proportion {
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

/// Wilson score interval at 95%.
Proportion wilson_interval(std::size_t successes, std::size_t trials);
Proportion blowup_probability(const EnsembleStats& stats);

/// Right-continuous ECDF of extinction times over all paths (others censored).
class Ecdf {
public:
    Ecdf(std::vector<double> event_times, std::size_t n_total);
    double operator()(double t) const;
    const std::vector<double>& jumps() const noexcept { return times_; }
    std::size_t total() const noexcept { return n_; }

private:
    std::vector<double> times_;
    std::size_t n_;
};

Ecdf extinction_ecdf(const EnsembleStats& stats);

struct MonotonicityReport {
    double exponent = 0.0;
    bool holds = true;
    std::size_t pairs_checked = 0;
    std::size_t violation_count = 0;
    /// First few violating (i, j) grid index pairs.
    std::vector<std::pair<std::size_t, std::size_t>> violations;
};

/// Flags every i < j with mean_j > mean_i + 2 (stderr_i + stderr_j).
/// The exponent must be one of the ensemble's moment exponents and lie in (0, 1).
MonotonicityReport supermartingale_diagnostic(const EnsembleStats& stats, double exponent);

struct TailBoundReport {
    double alpha = 0.0;
    double delta = 0.0;
    double cstar = 0.0;
    double x_norm = 0.0;
    /// |x|^(2-alpha) / (delta c*^alpha (1 - alpha/2)); bound(t) = constant / t.
    double constant = 0.0;
    std::vector<double> times;
    std::vector<double> empirical_survival;
    std::vector<double> mc_stderr;
    /// NaN where the bound is >= 1 (vacuous).
    std::vector<double> theoretical_bound;
    std::vector<double> violations;
    std::vector<ConditionReport> preconditions;
};

/// A required condition failed; carries the offending report.
class PreconditionError : public std::runtime_error {
public:
    explicit PreconditionError(ConditionReport report);
    const ConditionReport& report() const noexcept { return report_; }

private:
    ConditionReport report_;
};

/// The three extinction conditions (A3*), (A5*) and (A5) with eta = alpha.
std::vector<ConditionReport> extinction_preconditions(const Model& model, const NoiseSpec& noise);

/// Survival time at which the bound reaches `level`.
double tail_bound_horizon(const Model& model, std::span<const double> x0, double level,
                          std::optional<double> cstar = std::nullopt);

/// Throws PreconditionError if any extinction condition fails. c* is
/// computed with embedding_constant unless given.
TailBoundReport tail_bound_check(const EnsembleStats& stats, const Model& model, const NoiseSpec& noise,
                                 std::span<const double> x0, std::optional<double> cstar = std::nullopt);

struct ContinuityReport {
    double eps_tol = 0.1;
    std::size_t n_pairs = 0;
    std::vector<double> deltas;
    std::vector<std::size_t> exceed_counts;
    std::vector<double> probabilities;
};

/// Unit direction of the perturbation: x0 normalized (scalar) or the first sine mode (fields).
std::vector<double> perturbation_direction(const Model& model, std::span<const double> x0);

/// Paired paths from x0 and x0 + delta d on one shared Wiener path; estimates
/// P(sup_t |X(x0 + delta d) - X(x0)|_H > eps_tol) per delta.
ContinuityReport continuity_probe(const Model& model, const NoiseSpec& noise, std::span<const double> x0,
                                  const std::vector<double>& deltas, const SimConfig& cfg, std::size_t n_pairs,
                                  std::uint64_t master_seed, double eps_tol = 0.1, std::size_t threads = 0);

/// ensemble_summary.json, ecdf.csv, moments.csv and (when given) tail_bound.csv.
void write_ensemble_outputs(const std::filesystem::path& dir, const EnsembleStats& stats,
                            const TailBoundReport* tail = nullptr);

/// Shortest decimal string that round-trips.
std::string format_number(double x);

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

} // namespace regnoise
