#include "regnoise/ensemble.hpp"

#include "regnoise/errors.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <json.hpp>
#include <thread>

namespace regnoise {

namespace {

std::size_t resolve_threads(std::size_t requested, std::size_t work) {
    std::size_t t = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
    return std::max<std::size_t>(1, std::min(t, work));
}

std::vector<double> build_grid(const SimConfig& cfg) {
    const std::size_t n = cfg.steps();
    std::vector<double> g{0.0};
    for (std::size_t k = 1; k <= n; ++k)
        if (k % cfg.record_stride == 0 || k == n) g.push_back(static_cast<double>(k) * cfg.dt);
    return g;
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto k = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(k);
    if (frac == 0.0 || k + 1 >= v.size()) return v[k];
    if (std::isinf(v[k + 1])) return v[k + 1];
    return v[k] + frac * (v[k + 1] - v[k]);
}

struct Welford {
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t n = 0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
};

class Reducer {
public:
    Reducer(const SimConfig& cfg, std::size_t n_paths, const EnsembleOptions& opt) : opt_(opt) {
        stats_.n_paths = n_paths;
        stats_.horizon = static_cast<double>(cfg.steps()) * cfg.dt;
        stats_.time_grid = build_grid(cfg);
        stats_.survivors.assign(stats_.time_grid.size(), 0);
        for (double e : opt.moment_exponents) acc_[e].assign(stats_.time_grid.size(), Welford{});
        sups_.reserve(n_paths);
    }

    void add(TrajectoryRecord&& rec) {
        const bool blown = rec.status == PathStatus::blown_up;
        if (blown) {
            ++stats_.blowup_count;
            stats_.blowup_times.push_back(rec.event_time);
        } else if (rec.status == PathStatus::extinct) {
            stats_.extinction_times.push_back(rec.event_time);
        }
        const std::size_t valid = std::min(blown ? rec.h_norms.size() - 1 : rec.h_norms.size(),
                                           stats_.time_grid.size());
        for (std::size_t j = 0; j < valid; ++j) ++stats_.survivors[j];
        for (auto& [e, row] : acc_) {
            for (std::size_t j = 0; j < valid; ++j) {
                const double h = rec.h_norms[j];
                row[j].add(h == 0.0 ? 0.0 : std::pow(h, e));
            }
        }
        sups_.push_back(rec.sup_h_norm);
        if (opt_.keep_paths) stats_.paths.push_back(std::move(rec));
    }

    EnsembleStats finish() {
        for (auto& [e, row] : acc_) {
            auto& out = stats_.moments[e];
            out.reserve(row.size());
            for (const Welford& w : row) {
                MomentPoint p;
                p.count = w.n;
                p.mean = w.n ? w.mean : std::numeric_limits<double>::quiet_NaN();
                p.stderr_ = w.n >= 2 ? std::sqrt(w.m2 / static_cast<double>(w.n - 1)) / std::sqrt(static_cast<double>(w.n))
                                     : 0.0;
                out.push_back(p);
            }
        }
        for (double q : opt_.quantile_levels) stats_.sup_norm_quantiles[q] = quantile(sups_, q);
        return std::move(stats_);
    }

private:
    const EnsembleOptions& opt_;
    EnsembleStats stats_;
    std::map<double, std::vector<Welford>> acc_;
    std::vector<double> sups_;
};

} // namespace

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    const std::size_t t = resolve_threads(threads, n);
    if (t <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < t; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n && !failed; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    failed = true;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

EnsembleStats run_ensemble(const Model& model, const NoiseSpec& noise, const SimConfig& cfg,
                           std::span<const double> x0, std::size_t n_paths, std::uint64_t master_seed,
                           const EnsembleOptions& options) {
    if (n_paths < 1) throw ValidationError("ensemble needs n_paths >= 1");
    cfg.validate();
    if (x0.size() != model.dim()) throw StructuralError("run_ensemble: initial state dimension mismatch");

    Reducer reducer(cfg, n_paths, options);
    const std::size_t threads = resolve_threads(options.threads, n_paths);
    auto run = [&](std::size_t i) { return run_path(model, noise, cfg, x0, RngStream(master_seed, i)); };

    if (threads == 1) {
        for (std::size_t i = 0; i < n_paths; ++i) reducer.add(run(i));
        return reducer.finish();
    }

    // Workers run ahead by at most `window` paths; the reducer consumes in index order.
    const std::size_t window = 4 * threads + 16;
    std::mutex mu;
    std::condition_variable cv;
    std::map<std::size_t, TrajectoryRecord> ready;
    std::size_t reduced = 0, next = 0;
    bool failed = false;
    std::exception_ptr error;

    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i;
                {
                    std::unique_lock lock(mu);
                    cv.wait(lock, [&] { return failed || next >= n_paths || next < reduced + window; });
                    if (failed || next >= n_paths) return;
                    i = next++;
                }
                try {
                    TrajectoryRecord rec = run(i);
                    std::lock_guard lock(mu);
                    ready.emplace(i, std::move(rec));
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!error) error = std::current_exception();
                    failed = true;
                }
                cv.notify_all();
            }
        });
    }
    while (reduced < n_paths) {
        TrajectoryRecord rec;
        {
            std::unique_lock lock(mu);
            cv.wait(lock, [&] { return failed || ready.count(reduced) > 0; });
            if (failed) break;
            auto it = ready.find(reduced);
            rec = std::move(it->second);
            ready.erase(it);
        }
        reducer.add(std::move(rec));
        {
            std::lock_guard lock(mu);
            ++reduced;
        }
        cv.notify_all();
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
    return reducer.finish();
}

Proportion wilson_interval(std::size_t successes, std::size_t trials) {
    if (trials == 0) throw ValidationError("wilson_interval needs at least one trial");
    const double z = 1.959963984540054;
    const double n = static_cast<double>(trials), p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
    const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
    return {p, std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

Proportion blowup_probability(const EnsembleStats& stats) { return wilson_interval(stats.blowup_count, stats.n_paths); }

Ecdf::Ecdf(std::vector<double> event_times, std::size_t n_total) : times_(std::move(event_times)), n_(n_total) {
    if (times_.size() > n_) throw ValidationError("more events than paths");
    std::sort(times_.begin(), times_.end());
}

double Ecdf::operator()(double t) const {
    if (n_ == 0) return 0.0;
    const auto k = std::upper_bound(times_.begin(), times_.end(), t) - times_.begin();
    return static_cast<double>(k) / static_cast<double>(n_);
}

Ecdf extinction_ecdf(const EnsembleStats& stats) { return Ecdf(stats.extinction_times, stats.n_paths); }

MonotonicityReport supermartingale_diagnostic(const EnsembleStats& stats, double exponent) {
    if (!(exponent > 0.0 && exponent < 1.0)) throw ValidationError("supermartingale exponent must lie in (0, 1)");
    const auto it = stats.moments.find(exponent);
    if (it == stats.moments.end()) throw ValidationError("ensemble has no moment curve for this exponent");
    const auto& c = it->second;
    MonotonicityReport rep;
    rep.exponent = exponent;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c[i].count == 0) continue;
        for (std::size_t j = i + 1; j < c.size(); ++j) {
            if (c[j].count == 0) continue;
            ++rep.pairs_checked;
            if (c[j].mean > c[i].mean + 2.0 * (c[i].stderr_ + c[j].stderr_)) {
                ++rep.violation_count;
                if (rep.violations.size() < 20) rep.violations.emplace_back(i, j);
            }
        }
    }
    rep.holds = rep.violation_count == 0;
    return rep;
}

PreconditionError::PreconditionError(ConditionReport report)
    : std::runtime_error("condition " + std::string(to_string(report.id)) + " fails" +
                         (report.symbolic ? ": " + *report.symbolic : std::string())),
      report_(std::move(report)) {}

std::vector<ConditionReport> extinction_preconditions(const Model& model, const NoiseSpec& noise) {
    std::vector<ConditionReport> out;
    CoercivityProfile prof = model.profile();
    out.push_back(check_a3_star(prof));
    if (!out.back().holds) return out;
    if (!prof.g_coeff) {
        out.push_back(check_generalized_coercivity(model));
        prof.g_coeff = out.back().estimated_g_coeff;
    }
    const NoiseFamily fam = noise_family(noise, model);
    out.push_back(check_a5_star(prof, fam, prof.alpha));
    prof.additive.reset();
    out.push_back(check_a5(prof, fam, prof.alpha));
    return out;
}

namespace {

double bound_constant(const Model& model, double x_norm, double cstar) {
    const auto& p = model.profile();
    return std::pow(x_norm, 2.0 - p.alpha) / (p.delta * std::pow(cstar, p.alpha) * (1.0 - p.alpha / 2.0));
}

} // namespace

double tail_bound_horizon(const Model& model, std::span<const double> x0, double level, std::optional<double> cstar) {
    if (!(level > 0.0 && level < 1.0)) throw ValidationError("survival level must lie in (0, 1)");
    const auto& p = model.profile();
    if (!(p.alpha > 1.0 && p.alpha < 2.0)) throw ValidationError("tail bound requires alpha in (1, 2)");
    const double c = cstar ? *cstar : embedding_constant(model);
    return bound_constant(model, h_norm(model, x0), c) / level;
}

TailBoundReport tail_bound_check(const EnsembleStats& stats, const Model& model, const NoiseSpec& noise,
                                 std::span<const double> x0, std::optional<double> cstar) {
    TailBoundReport rep;
    rep.preconditions = extinction_preconditions(model, noise);
    for (const auto& c : rep.preconditions)
        if (!c.holds) throw PreconditionError(c);

    const auto& p = model.profile();
    rep.alpha = p.alpha;
    rep.delta = p.delta;
    rep.cstar = cstar ? *cstar : embedding_constant(model);
    rep.x_norm = h_norm(model, x0);
    rep.constant = bound_constant(model, rep.x_norm, rep.cstar);

    const Ecdf ecdf = extinction_ecdf(stats);
    const double n = static_cast<double>(stats.n_paths);
    for (double t : stats.time_grid) {
        if (t <= 0.0) continue;
        const double surv = 1.0 - ecdf(t);
        const double se = std::sqrt(surv * (1.0 - surv) / n);
        const double b = rep.constant / t;
        rep.times.push_back(t);
        rep.empirical_survival.push_back(surv);
        rep.mc_stderr.push_back(se);
        rep.theoretical_bound.push_back(b < 1.0 ? b : std::numeric_limits<double>::quiet_NaN());
        if (b < 1.0 && surv - 2.0 * se > b) rep.violations.push_back(t);
    }
    return rep;
}

std::vector<double> perturbation_direction(const Model& model, std::span<const double> x0) {
    if (model.is_scalar()) {
        if (x0.size() != 1) throw StructuralError("scalar model expects one value");
        return {x0[0] < 0.0 ? -1.0 : 1.0};
    }
    auto d = sine_mode(model.grid(), 1);
    const double hn = h_norm(model, d);
    for (double& x : d) x /= hn;
    return d;
}

namespace {

// One paired run; true if the H-distance ever exceeds eps.
bool pair_exceeds(const Model& model, const NoiseSpec& noise, const SimConfig& cfg, std::span<const double> xa,
                  std::span<const double> xb, RngStream rng, double eps) {
    State a{{xa.begin(), xa.end()}, 0.0}, b{{xb.begin(), xb.end()}, 0.0};
    bool absorbed[2] = {false, false};
    auto settle = [&](State& s, bool& dead) {
        const double hn = h_norm(model, s.values);
        if (hn <= cfg.extinction_threshold) {
            std::fill(s.values.begin(), s.values.end(), 0.0);
            dead = true;
        }
    };
    settle(a, absorbed[0]);
    settle(b, absorbed[1]);
    std::vector<double> diff(a.values.size());
    auto distance = [&] {
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = a.values[i] - b.values[i];
        return h_norm(model, diff);
    };
    if (distance() > eps) return true;

    auto blown = [&](const State& s) {
        for (double x : s.values)
            if (!std::isfinite(x)) return true;
        return !(h_norm(model, s.values) < cfg.blowup_threshold);
    };
    const std::size_t n = cfg.steps();
    for (std::size_t k = 1; k <= n; ++k) {
        const auto w = wiener_increments(rng, noise.channels(), cfg.dt);
        if (!absorbed[0]) a = step(cfg.scheme, model, noise, a, cfg.dt, w);
        if (!absorbed[1]) b = step(cfg.scheme, model, noise, b, cfg.dt, w);
        const bool ba = blown(a), bb = blown(b);
        if (ba != bb) return true;
        if (ba) return false;
        if (!absorbed[0]) settle(a, absorbed[0]);
        if (!absorbed[1]) settle(b, absorbed[1]);
        if (distance() > eps) return true;
    }
    return false;
}

} // namespace

ContinuityReport continuity_probe(const Model& model, const NoiseSpec& noise, std::span<const double> x0,
                                  const std::vector<double>& deltas, const SimConfig& cfg, std::size_t n_pairs,
                                  std::uint64_t master_seed, double eps_tol, std::size_t threads) {
    cfg.validate();
    if (n_pairs < 1) throw ValidationError("continuity probe needs n_pairs >= 1");
    if (!(eps_tol > 0.0)) throw ValidationError("eps_tol must be positive");
    if (x0.size() != model.dim()) throw StructuralError("continuity_probe: initial state dimension mismatch");
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        if (!(deltas[i] >= 0.0)) throw ValidationError("deltas must be >= 0");
        if (i > 0 && !(deltas[i] < deltas[i - 1])) throw ValidationError("deltas must be decreasing");
    }

    const auto dir = perturbation_direction(model, x0);
    std::vector<std::vector<char>> hit(deltas.size(), std::vector<char>(n_pairs, 0));
    parallel_for(n_pairs, threads, [&](std::size_t i) {
        for (std::size_t d = 0; d < deltas.size(); ++d) {
            if (deltas[d] == 0.0) continue;
            std::vector<double> xb(x0.begin(), x0.end());
            for (std::size_t k = 0; k < xb.size(); ++k) xb[k] += deltas[d] * dir[k];
            hit[d][i] = pair_exceeds(model, noise, cfg, x0, xb, RngStream(master_seed, i), eps_tol);
        }
    });

    ContinuityReport rep;
    rep.eps_tol = eps_tol;
    rep.n_pairs = n_pairs;
    rep.deltas = deltas;
    for (const auto& row : hit) {
        const auto c = static_cast<std::size_t>(std::count(row.begin(), row.end(), 1));
        rep.exceed_counts.push_back(c);
        rep.probabilities.push_back(static_cast<double>(c) / static_cast<double>(n_pairs));
    }
    return rep;
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace {

nlohmann::json num(double x) {
    if (std::isfinite(x)) return x;
    return format_number(x);
}

nlohmann::json nums(const std::vector<double>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
}

} // namespace

void write_ensemble_outputs(const std::filesystem::path& dir, const EnsembleStats& stats, const TailBoundReport* tail) {
    std::filesystem::create_directories(dir);
    const auto bp = blowup_probability(stats);
    const Ecdf ecdf = extinction_ecdf(stats);

    nlohmann::json j;
    j["n_paths"] = stats.n_paths;
    j["blowup_count"] = stats.blowup_count;
    j["blowup_probability"] = {{"estimate", bp.estimate}, {"wilson_lower", bp.lower}, {"wilson_upper", bp.upper}};
    j["blowup_times"] = nums(stats.blowup_times);
    j["extinction_times"] = nums(stats.extinction_times);
    j["extinct_fraction"] = static_cast<double>(stats.extinction_times.size()) / static_cast<double>(stats.n_paths);
    j["horizon"] = stats.horizon;
    j["time_grid"] = nums(stats.time_grid);
    j["survivors"] = stats.survivors;
    nlohmann::json moments = nlohmann::json::object();
    for (const auto& [e, row] : stats.moments) {
        std::vector<double> mean, se;
        std::vector<std::size_t> count;
        for (const auto& p : row) {
            mean.push_back(p.mean);
            se.push_back(p.stderr_);
            count.push_back(p.count);
        }
        moments[format_number(e)] = {{"mean", nums(mean)}, {"stderr", nums(se)}, {"count", count}};
    }
    j["norm_moment_curves"] = moments;
    nlohmann::json quant = nlohmann::json::object();
    for (const auto& [q, v] : stats.sup_norm_quantiles) quant[format_number(q)] = num(v);
    j["sup_norm_quantiles"] = quant;
    open_out(dir / "ensemble_summary.json") << j.dump(2) << '\n';

    {
        auto f = open_out(dir / "ecdf.csv");
        f << "t,ecdf\n";
        for (double t : stats.time_grid) f << format_number(t) << ',' << format_number(ecdf(t)) << '\n';
    }
    {
        auto f = open_out(dir / "moments.csv");
        f << "t,survivors";
        for (const auto& [e, row] : stats.moments) f << ",mean_" << format_number(e) << ",stderr_" << format_number(e);
        f << '\n';
        for (std::size_t i = 0; i < stats.time_grid.size(); ++i) {
            f << format_number(stats.time_grid[i]) << ',' << stats.survivors[i];
            for (const auto& [e, row] : stats.moments)
                f << ',' << format_number(row[i].mean) << ',' << format_number(row[i].stderr_);
            f << '\n';
        }
    }
    if (tail) {
        auto f = open_out(dir / "tail_bound.csv");
        f << "t,empirical,stderr,bound\n";
        for (std::size_t i = 0; i < tail->times.size(); ++i) {
            f << format_number(tail->times[i]) << ',' << format_number(tail->empirical_survival[i]) << ','
              << format_number(tail->mc_stderr[i]) << ',';
            if (!std::isnan(tail->theoretical_bound[i])) f << format_number(tail->theoretical_bound[i]);
            f << '\n';
        }
    }
}

} // namespace regnoise
