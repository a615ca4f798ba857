#include "regnoise/experiment.hpp"

#include "regnoise/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace regnoise {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ParseError(path, "expected an object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) throw ParseError(join(path, key), "unknown key");
}

double get_num(const json& obj, const std::string& path, const std::string& key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) throw ParseError(join(path, key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ParseError(join(path, key), "must be finite");
    return x;
}

std::optional<double> get_opt_num(const json& obj, const std::string& path, const std::string& key,
                                  std::optional<double> fallback) {
    if (!obj.contains(key)) return fallback;
    return get_num(obj, path, key, 0.0);
}

std::uint64_t get_count(const json& obj, const std::string& path, const std::string& key, std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) throw ParseError(join(path, key), "must be >= 0");
    throw ParseError(join(path, key), "expected a non-negative integer");
}

std::string get_str(const json& obj, const std::string& path, const std::string& key, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_string()) throw ParseError(join(path, key), "expected a string");
    return v.get<std::string>();
}

bool get_bool(const json& obj, const std::string& path, const std::string& key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) throw ParseError(join(path, key), "expected a boolean");
    return v.get<bool>();
}

std::vector<double> get_nums(const json& obj, const std::string& path, const std::string& key,
                             const std::vector<double>& fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_array()) throw ParseError(join(path, key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ParseError(join(path, key) + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

const json& block(const json& root, const std::string& key) {
    static const json empty = json::object();
    return root.contains(key) ? root.at(key) : empty;
}

std::set<std::string> model_keys(ModelKind kind) {
    switch (kind) {
    case ModelKind::superlinear_sde:
        return {"kind", "c0", "m", "source", "sink", "sink_exponent", "c1", "g_coeff", "additive"};
    case ModelKind::p_laplace_hot: return {"kind", "length", "n_interior", "p", "eps_reg", "g_coeff", "additive"};
    case ModelKind::fast_diffusion: return {"kind", "length", "n_interior", "r"};
    case ModelKind::surface_growth: return {"kind", "length", "n_interior", "g_coeff", "additive"};
    case ModelKind::heat_validation: return {"kind", "length", "n_interior"};
    }
    return {};
}

bool needs_extinction_profile(Analysis a) { return a == Analysis::tail_bound || a == Analysis::supermartingale; }

} // namespace

std::string_view to_string(Analysis a) noexcept {
    switch (a) {
    case Analysis::blowup: return "blowup";
    case Analysis::extinction: return "extinction";
    case Analysis::supermartingale: return "supermartingale";
    case Analysis::tail_bound: return "tail_bound";
    case Analysis::continuity: return "continuity";
    case Analysis::conditions: return "conditions";
    }
    return "?";
}

Analysis analysis_from_string(std::string_view name) {
    for (auto a : {Analysis::blowup, Analysis::extinction, Analysis::supermartingale, Analysis::tail_bound,
                   Analysis::continuity, Analysis::conditions})
        if (to_string(a) == name) return a;
    throw ValidationError("unknown analysis '" + std::string(name) + "'");
}

std::string_view to_string(Verdict v) noexcept {
    switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::refused: return "refused";
    }
    return "?";
}

ExperimentPlan parse_config(std::string_view text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("", std::string("invalid JSON: ") + e.what());
    }
    check_keys(root, "", {"name", "model", "noise", "sim", "ensemble", "initial", "analyses", "conditions",
                          "continuity", "blowup", "extinction", "output_dir", "dump_paths"});

    ExperimentPlan plan;
    plan.name = get_str(root, "", "name", plan.name);
    plan.output_dir = get_str(root, "", "output_dir", plan.output_dir);
    plan.dump_paths = get_bool(root, "", "dump_paths", plan.dump_paths);

    // model
    if (!root.contains("model")) throw ParseError("model", "required block is missing");
    const json& jm = root.at("model");
    if (!jm.is_object()) throw ParseError("model", "expected an object");
    if (!jm.contains("kind")) throw ParseError("model.kind", "required key is missing");
    const std::string kind_name = get_str(jm, "model", "kind", "");
    try {
        plan.model.kind = model_kind_from_string(kind_name);
    } catch (const ValidationError& e) {
        throw ParseError("model.kind", e.what());
    }
    check_keys(jm, "model", model_keys(plan.model.kind));
    ModelParameters& mp = plan.model.params;
    mp.c0 = get_num(jm, "model", "c0", mp.c0);
    mp.m = get_num(jm, "model", "m", mp.m);
    mp.source = get_num(jm, "model", "source", mp.source);
    mp.sink = get_num(jm, "model", "sink", mp.sink);
    mp.sink_exponent = get_num(jm, "model", "sink_exponent", mp.sink_exponent);
    mp.c1 = get_opt_num(jm, "model", "c1", mp.c1);
    mp.p = get_num(jm, "model", "p", mp.p);
    mp.eps_reg = get_num(jm, "model", "eps_reg", mp.eps_reg);
    mp.r = get_num(jm, "model", "r", mp.r);
    mp.g_coeff = get_opt_num(jm, "model", "g_coeff", mp.g_coeff);
    mp.additive = get_opt_num(jm, "model", "additive", mp.additive);
    plan.model.grid.length = get_num(jm, "model", "length", plan.model.grid.length);
    plan.model.grid.n_interior = get_count(jm, "model", "n_interior", plan.model.grid.n_interior);
    const bool scalar = plan.model.kind == ModelKind::superlinear_sde;
    if (!scalar && !(plan.model.grid.length > 0.0)) throw ParseError("model.length", "must be positive");
    if (!scalar && plan.model.grid.n_interior < 1) throw ParseError("model.n_interior", "must be >= 1");
    Model model = [&] {
        try {
            return make_model(plan.model.kind, mp, plan.model.grid);
        } catch (const ValidationError& e) {
            throw ParseError("model", e.what());
        }
    }();
    if (scalar) mp.c1 = model.params().c1;

    // noise
    if (root.contains("noise")) {
        if (scalar) throw ParseError("noise", "superlinear_sde derives its noise from model.c0 and model.m");
        const json& jn = root.at("noise");
        check_keys(jn, "noise", {"gamma", "m", "channels"});
        plan.noise.gamma = get_num(jn, "noise", "gamma", plan.noise.gamma);
        plan.noise.m = get_num(jn, "noise", "m", plan.noise.m);
        plan.noise.channels = get_count(jn, "noise", "channels", plan.noise.channels);
        if (!(plan.noise.gamma >= 0.0)) throw ParseError("noise.gamma", "must be >= 0");
        if (!(plan.noise.m >= 0.0)) throw ParseError("noise.m", "must be >= 0");
        if (plan.noise.channels < 1) throw ParseError("noise.channels", "must be >= 1");
    }

    // sim
    const json& js = block(root, "sim");
    check_keys(js, "sim", {"dt", "T", "scheme", "blowup_threshold", "extinction_threshold", "record_stride"});
    SimConfig& sim = plan.sim;
    sim.dt = get_num(js, "sim", "dt", scalar ? 1e-4 : 1e-3);
    sim.horizon = get_num(js, "sim", "T", 1.0);
    try {
        sim.scheme = scheme_from_string(get_str(js, "sim", "scheme", scalar ? "tamed" : "semi_implicit"));
    } catch (const ValidationError& e) {
        throw ParseError("sim.scheme", e.what());
    }
    sim.blowup_threshold = get_num(js, "sim", "blowup_threshold", sim.blowup_threshold);
    sim.extinction_threshold = get_num(js, "sim", "extinction_threshold", sim.extinction_threshold);
    sim.record_stride = get_count(js, "sim", "record_stride", sim.record_stride);
    try {
        sim.validate();
    } catch (const ValidationError& e) {
        throw ParseError("sim", e.what());
    }

    // ensemble
    const json& je = block(root, "ensemble");
    check_keys(je, "ensemble", {"n_paths", "master_seed", "threads"});
    plan.ensemble.n_paths = get_count(je, "ensemble", "n_paths", plan.ensemble.n_paths);
    plan.ensemble.master_seed = get_count(je, "ensemble", "master_seed", plan.ensemble.master_seed);
    plan.ensemble.threads = get_count(je, "ensemble", "threads", plan.ensemble.threads);
    if (plan.ensemble.n_paths < 1) throw ParseError("ensemble.n_paths", "must be >= 1");

    // initial
    const json& ji = block(root, "initial");
    check_keys(ji, "initial", scalar ? std::set<std::string>{"value"} : std::set<std::string>{"sine_mode", "h_norm"});
    plan.initial.value = get_num(ji, "initial", "value", plan.initial.value);
    plan.initial.sine_mode = get_count(ji, "initial", "sine_mode", plan.initial.sine_mode);
    plan.initial.h_norm = get_num(ji, "initial", "h_norm", plan.initial.h_norm);
    if (!scalar) {
        if (plan.initial.sine_mode < 1 || plan.initial.sine_mode > plan.model.grid.n_interior)
            throw ParseError("initial.sine_mode", "must lie in 1..n_interior");
        if (!(plan.initial.h_norm >= 0.0)) throw ParseError("initial.h_norm", "must be >= 0");
    }

    // analyses
    if (root.contains("analyses")) {
        const json& ja = root.at("analyses");
        if (!ja.is_array()) throw ParseError("analyses", "expected an array of strings");
        for (std::size_t i = 0; i < ja.size(); ++i) {
            const std::string path = "analyses[" + std::to_string(i) + "]";
            if (!ja[i].is_string()) throw ParseError(path, "expected a string");
            Analysis a;
            try {
                a = analysis_from_string(ja[i].get<std::string>());
            } catch (const ValidationError& e) {
                throw ParseError(path, e.what());
            }
            if (std::find(plan.analyses.begin(), plan.analyses.end(), a) != plan.analyses.end())
                throw ParseError(path, "duplicate analysis");
            const auto& prof = model.profile();
            if (needs_extinction_profile(a) && !(a == Analysis::tail_bound ? prof.extinction_mode()
                                                                           : prof.alpha > 1.0 && prof.alpha < 2.0)) {
                std::ostringstream os;
                os << to_string(a) << " requires an extinction-mode profile with alpha in (1, 2); "
                   << to_string(plan.model.kind) << " has alpha = " << prof.alpha;
                if (a == Analysis::tail_bound && prof.alpha > 1.0 && prof.alpha < 2.0) os << " but C or g(0) is nonzero";
                throw ParseError(path, os.str());
            }
            plan.analyses.push_back(a);
        }
    }

    const json& jc = block(root, "conditions");
    check_keys(jc, "conditions", {"eta", "sample_count"});
    plan.conditions.eta = get_num(jc, "conditions", "eta", plan.conditions.eta);
    plan.conditions.sample_count = get_count(jc, "conditions", "sample_count", plan.conditions.sample_count);
    if (!(plan.conditions.eta > 1.0 && plan.conditions.eta < 2.0)) throw ParseError("conditions.eta", "must lie in (1, 2)");
    if (plan.conditions.sample_count < 100) throw ParseError("conditions.sample_count", "must be >= 100");

    const json& jk = block(root, "continuity");
    check_keys(jk, "continuity", {"deltas", "eps_tol", "n_pairs"});
    plan.continuity.deltas = get_nums(jk, "continuity", "deltas", plan.continuity.deltas);
    plan.continuity.eps_tol = get_num(jk, "continuity", "eps_tol", plan.continuity.eps_tol);
    plan.continuity.n_pairs = get_count(jk, "continuity", "n_pairs", plan.continuity.n_pairs);
    for (std::size_t i = 0; i < plan.continuity.deltas.size(); ++i) {
        if (!(plan.continuity.deltas[i] >= 0.0)) throw ParseError("continuity.deltas", "entries must be >= 0");
        if (i > 0 && !(plan.continuity.deltas[i] < plan.continuity.deltas[i - 1]))
            throw ParseError("continuity.deltas", "must be decreasing");
    }
    if (!(plan.continuity.eps_tol > 0.0)) throw ParseError("continuity.eps_tol", "must be positive");
    if (plan.continuity.n_pairs < 1) throw ParseError("continuity.n_pairs", "must be >= 1");

    const json& jb = block(root, "blowup");
    check_keys(jb, "blowup", {"max_fraction"});
    plan.blowup.max_fraction = get_opt_num(jb, "blowup", "max_fraction", std::nullopt);
    if (plan.blowup.max_fraction && !(*plan.blowup.max_fraction >= 0.0 && *plan.blowup.max_fraction <= 1.0))
        throw ParseError("blowup.max_fraction", "must lie in [0, 1]");

    const json& jx = block(root, "extinction");
    check_keys(jx, "extinction", {"min_fraction"});
    plan.extinction.min_fraction = get_num(jx, "extinction", "min_fraction", plan.extinction.min_fraction);
    if (!(plan.extinction.min_fraction >= 0.0 && plan.extinction.min_fraction <= 1.0))
        throw ParseError("extinction.min_fraction", "must lie in [0, 1]");

    return plan;
}

std::string serialize_config(const ExperimentPlan& plan) {
    const bool scalar = plan.model.kind == ModelKind::superlinear_sde;
    const ModelParameters& mp = plan.model.params;
    json m;
    m["kind"] = std::string(to_string(plan.model.kind));
    const auto keys = model_keys(plan.model.kind);
    auto put = [&](const char* key, double v) {
        if (keys.count(key)) m[key] = v;
    };
    put("c0", mp.c0);
    put("m", mp.m);
    put("source", mp.source);
    put("sink", mp.sink);
    put("sink_exponent", mp.sink_exponent);
    if (mp.c1) put("c1", *mp.c1);
    put("p", mp.p);
    put("eps_reg", mp.eps_reg);
    put("r", mp.r);
    if (mp.g_coeff) put("g_coeff", *mp.g_coeff);
    if (mp.additive) put("additive", *mp.additive);
    if (!scalar) {
        m["length"] = plan.model.grid.length;
        m["n_interior"] = plan.model.grid.n_interior;
    }

    json root;
    root["name"] = plan.name;
    root["model"] = m;
    if (!scalar) root["noise"] = {{"gamma", plan.noise.gamma}, {"m", plan.noise.m}, {"channels", plan.noise.channels}};
    root["sim"] = {{"dt", plan.sim.dt},
                   {"T", plan.sim.horizon},
                   {"scheme", std::string(to_string(plan.sim.scheme))},
                   {"blowup_threshold", plan.sim.blowup_threshold},
                   {"extinction_threshold", plan.sim.extinction_threshold},
                   {"record_stride", plan.sim.record_stride}};
    root["ensemble"] = {{"n_paths", plan.ensemble.n_paths},
                        {"master_seed", plan.ensemble.master_seed},
                        {"threads", plan.ensemble.threads}};
    if (scalar) root["initial"] = {{"value", plan.initial.value}};
    else root["initial"] = {{"sine_mode", plan.initial.sine_mode}, {"h_norm", plan.initial.h_norm}};
    json an = json::array();
    for (auto a : plan.analyses) an.push_back(std::string(to_string(a)));
    root["analyses"] = an;
    root["conditions"] = {{"eta", plan.conditions.eta}, {"sample_count", plan.conditions.sample_count}};
    root["continuity"] = {{"deltas", plan.continuity.deltas},
                          {"eps_tol", plan.continuity.eps_tol},
                          {"n_pairs", plan.continuity.n_pairs}};
    root["blowup"] = json::object();
    if (plan.blowup.max_fraction) root["blowup"]["max_fraction"] = *plan.blowup.max_fraction;
    root["extinction"] = {{"min_fraction", plan.extinction.min_fraction}};
    root["output_dir"] = plan.output_dir;
    root["dump_paths"] = plan.dump_paths;
    return root.dump(2);
}

Model build_model(const ExperimentPlan& plan) { return make_model(plan.model.kind, plan.model.params, plan.model.grid); }

NoiseSpec build_noise(const ExperimentPlan& plan) {
    if (plan.model.kind == ModelKind::superlinear_sde) return NoiseSpec({plan.model.params.c0}, plan.model.params.m);
    return NoiseSpec::uniform(plan.noise.gamma, plan.noise.m, plan.noise.channels);
}

std::vector<double> build_initial(const ExperimentPlan& plan, const Model& model) {
    if (model.is_scalar()) return {plan.initial.value};
    auto u = sine_mode(model.grid(), plan.initial.sine_mode);
    const double hn = h_norm(model, u);
    for (double& x : u) x *= plan.initial.h_norm / hn;
    return u;
}

namespace {

json report_json(const ConditionReport& r) {
    json j;
    j["condition"] = std::string(to_string(r.id));
    j["holds"] = r.holds;
    j["margin"] = r.margin;
    j["probe_count"] = r.probe_count;
    if (r.witness) {
        auto num = [](double x) { return std::isfinite(x) ? json(x) : json(format_number(x)); };
        j["witness"] = {{"s", num(r.witness->s)}, {"lhs", num(r.witness->lhs)}, {"rhs", num(r.witness->rhs)}};
    } else {
        j["witness"] = nullptr;
    }
    if (r.symbolic) j["symbolic"] = *r.symbolic;
    if (r.additive) j["additive"] = *r.additive;
    if (r.estimated_delta) j["estimated_delta"] = *r.estimated_delta;
    if (r.estimated_g_coeff) j["estimated_g_coeff"] = *r.estimated_g_coeff;
    return j;
}

struct ConditionsOutcome {
    json doc;
    bool all_hold = true;
    std::string summary;
};

ConditionsOutcome evaluate_conditions(const ExperimentPlan& plan, const Model& model, const NoiseSpec& noise) {
    ConditionsOutcome out;
    json reports = json::array();
    std::ostringstream sum;
    auto add = [&](const ConditionReport& r) {
        reports.push_back(report_json(r));
        out.all_hold = out.all_hold && r.holds;
        sum << to_string(r.id) << (r.holds ? " holds" : " fails") << "; ";
    };

    CoercivityProfile prof = model.profile();
    if (!model.is_scalar()) {
        try {
            const auto a3 = check_generalized_coercivity(model, plan.conditions.sample_count);
            add(a3);
            if (!prof.g_coeff) prof.g_coeff = a3.estimated_g_coeff;
        } catch (const DiagnosticError& e) {
            out.all_hold = false;
            reports.push_back({{"condition", "A3"}, {"holds", false}, {"error", e.what()}});
            sum << "A3 unstable; ";
        }
    }
    const NoiseFamily fam = noise_family(noise, model);
    if (prof.g_coeff) {
        CoercivityProfile free = prof;
        free.additive.reset();
        add(check_a5(free, fam, plan.conditions.eta));
        if (prof.alpha > 1.0 && prof.alpha < 2.0) {
            add(check_a3_star(prof));
            add(check_a5_star(prof, fam, prof.alpha));
            add(check_a5(free, fam, prof.alpha));
        }
    }
    out.doc["conditions"] = reports;
    if (model.is_scalar()) {
        const auto regime = classify_regime(plan.model.params.c0, plan.model.params.m);
        out.doc["regime"] = std::string(to_string(regime.verdict));
        sum << "regime " << to_string(regime.verdict);
    }
    out.summary = sum.str();
    if (out.summary.size() >= 2 && out.summary.substr(out.summary.size() - 2) == "; ")
        out.summary.resize(out.summary.size() - 2);
    return out;
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
}

std::string fixed(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

} // namespace

std::string conditions_json(const ExperimentPlan& plan) {
    const Model model = build_model(plan);
    const NoiseSpec noise = build_noise(plan);
    return evaluate_conditions(plan, model, noise).doc.dump(2);
}

void write_trajectory_csv(const std::filesystem::path& file, const TrajectoryRecord& rec) {
    auto f = open_out(file);
    f << "t,h_norm,v_norm,status\n";
    const std::size_t n = rec.times.size();
    for (std::size_t i = 0; i < n; ++i) {
        std::string_view status = "alive";
        if (rec.status == PathStatus::extinct && rec.times[i] >= rec.event_time) status = "extinct";
        else if (rec.status == PathStatus::blown_up && i + 1 == n) status = "blown_up";
        else if (rec.status == PathStatus::completed && i + 1 == n) status = "completed";
        f << format_number(rec.times[i]) << ',' << format_number(rec.h_norms[i]) << ','
          << format_number(rec.v_norms[i]) << ',' << status << '\n';
    }
}

TrajectoryRecord simulate_path(const ExperimentPlan& plan) {
    const Model model = build_model(plan);
    const NoiseSpec noise = build_noise(plan);
    const auto x0 = build_initial(plan, model);
    const std::filesystem::path dir(plan.output_dir);
    std::filesystem::create_directories(dir);
    open_out(dir / "resolved_config.json") << serialize_config(plan) << '\n';
    auto rec = run_path(model, noise, plan.sim, x0, RngStream(plan.ensemble.master_seed, 0));
    write_trajectory_csv(dir / "trajectory.csv", rec);
    return rec;
}

ExperimentResult run_experiment(const ExperimentPlan& plan) {
    const Model model = build_model(plan);
    const NoiseSpec noise = build_noise(plan);
    const auto x0 = build_initial(plan, model);
    const std::filesystem::path dir(plan.output_dir);
    std::filesystem::create_directories(dir);
    open_out(dir / "resolved_config.json") << serialize_config(plan) << '\n';

    std::vector<Analysis> order = plan.analyses;
    std::stable_partition(order.begin(), order.end(), [](Analysis a) { return a == Analysis::conditions; });

    const bool want_ensemble =
        plan.dump_paths || std::any_of(order.begin(), order.end(), [](Analysis a) {
            return a == Analysis::blowup || a == Analysis::extinction || a == Analysis::supermartingale ||
                   a == Analysis::tail_bound;
        });
    const double alpha = model.profile().alpha;
    const bool extinction_exponent = alpha > 1.0 && alpha < 2.0;

    std::optional<EnsembleStats> stats;
    if (want_ensemble) {
        EnsembleOptions opt;
        opt.threads = plan.ensemble.threads;
        opt.keep_paths = plan.dump_paths;
        if (extinction_exponent) opt.moment_exponents.push_back(2.0 - alpha);
        stats = run_ensemble(model, noise, plan.sim, x0, plan.ensemble.n_paths, plan.ensemble.master_seed, opt);
        if (plan.dump_paths) {
            std::filesystem::create_directories(dir / "paths");
            for (const auto& rec : stats->paths) {
                char name[32];
                std::snprintf(name, sizeof name, "path_%06llu.csv", static_cast<unsigned long long>(rec.path_index));
                write_trajectory_csv(dir / "paths" / name, rec);
            }
        }
    }

    ExperimentResult result;
    std::optional<TailBoundReport> tail;
    for (Analysis a : order) {
        AnalysisOutcome o;
        o.analysis = a;
        std::ostringstream s;
        switch (a) {
        case Analysis::conditions: {
            const auto c = evaluate_conditions(plan, model, noise);
            open_out(dir / "conditions.json") << c.doc.dump(2) << '\n';
            o.verdict = c.all_hold ? Verdict::pass : Verdict::fail;
            s << c.summary;
            break;
        }
        case Analysis::blowup: {
            const auto p = blowup_probability(*stats);
            s << "blow-up fraction " << fixed(p.estimate) << " (" << stats->blowup_count << " of " << stats->n_paths
              << "), 95% Wilson [" << fixed(p.lower) << ", " << fixed(p.upper) << "]";
            if (plan.blowup.max_fraction) {
                o.verdict = p.estimate <= *plan.blowup.max_fraction ? Verdict::pass : Verdict::fail;
                s << ", limit " << fixed(*plan.blowup.max_fraction);
            }
            break;
        }
        case Analysis::extinction: {
            const double frac =
                static_cast<double>(stats->extinction_times.size()) / static_cast<double>(stats->n_paths);
            o.verdict = frac >= plan.extinction.min_fraction ? Verdict::pass : Verdict::fail;
            s << "extinct fraction " << fixed(frac) << " by T = " << fixed(stats->horizon) << ", required "
              << fixed(plan.extinction.min_fraction);
            break;
        }
        case Analysis::supermartingale: {
            const auto r = supermartingale_diagnostic(*stats, 2.0 - alpha);
            o.verdict = r.holds ? Verdict::pass : Verdict::fail;
            s << "E|X|^" << fixed(2.0 - alpha) << " nonincreasing within 2 stderr: " << r.violation_count
              << " violations in " << r.pairs_checked << " pairs";
            break;
        }
        case Analysis::tail_bound: {
            try {
                tail = tail_bound_check(*stats, model, noise, x0);
                o.verdict = tail->violations.empty() ? Verdict::pass : Verdict::fail;
                s << tail->violations.size() << " violations; bound " << fixed(tail->constant) << " / t, c* = "
                  << fixed(tail->cstar);
            } catch (const PreconditionError& e) {
                o.verdict = Verdict::refused;
                s << "refused: " << to_string(e.report().id) << " fails";
                if (e.report().symbolic) s << " (" << *e.report().symbolic << ")";
                open_out(dir / "refusal.json") << report_json(e.report()).dump(2) << '\n';
            }
            break;
        }
        case Analysis::continuity: {
            const auto r = continuity_probe(model, noise, x0, plan.continuity.deltas, plan.sim, plan.continuity.n_pairs,
                                            plan.ensemble.master_seed, plan.continuity.eps_tol, plan.ensemble.threads);
            bool mono = true;
            for (std::size_t i = 1; i < r.probabilities.size(); ++i) mono = mono && r.probabilities[i] <= r.probabilities[i - 1];
            o.verdict = mono ? Verdict::pass : Verdict::fail;
            auto f = open_out(dir / "continuity.csv");
            f << "delta,exceed_count,probability\n";
            s << "P(sup distance > " << fixed(r.eps_tol) << "):";
            for (std::size_t i = 0; i < r.deltas.size(); ++i) {
                f << format_number(r.deltas[i]) << ',' << r.exceed_counts[i] << ',' << format_number(r.probabilities[i])
                  << '\n';
                s << " delta " << fixed(r.deltas[i]) << " -> " << fixed(r.probabilities[i]) << ";";
            }
            break;
        }
        }
        o.summary = s.str();
        result.outcomes.push_back(o);
    }

    if (stats && std::any_of(order.begin(), order.end(), [](Analysis a) { return a != Analysis::conditions && a != Analysis::continuity; }))
        write_ensemble_outputs(dir, *stats, tail ? &*tail : nullptr);

    result.exit_code = 0;
    if (result.outcomes.empty()) return result;
    json jr;
    jr["name"] = plan.name;
    json list = json::array();
    std::ostringstream txt;
    txt << "experiment: " << plan.name << '\n';
    for (const auto& o : result.outcomes) {
        if (o.verdict != Verdict::pass) result.exit_code = 2;
        list.push_back({{"analysis", std::string(to_string(o.analysis))},
                        {"verdict", std::string(to_string(o.verdict))},
                        {"summary", o.summary}});
        txt << to_string(o.analysis) << ": " << to_string(o.verdict) << " - " << o.summary << '\n';
    }
    jr["analyses"] = list;
    jr["exit_code"] = result.exit_code;
    txt << "exit code: " << result.exit_code << '\n';
    open_out(dir / "report.json") << jr.dump(2) << '\n';
    open_out(dir / "report.txt") << txt.str();
    return result;
}

FigureId figure_from_string(std::string_view name) {
    for (auto f : {FigureId::fig1, FigureId::fig2, FigureId::fig3, FigureId::fig4, FigureId::fig5})
        if (to_string(f) == name) return f;
    throw ValidationError("unknown figure '" + std::string(name) + "' (expected fig1..fig5)");
}

std::string_view to_string(FigureId id) noexcept {
    switch (id) {
    case FigureId::fig1: return "fig1";
    case FigureId::fig2: return "fig2";
    case FigureId::fig3: return "fig3";
    case FigureId::fig4: return "fig4";
    case FigureId::fig5: return "fig5";
    }
    return "?";
}

FigureSetup figure_setup(FigureId id) {
    ModelParameters p;
    double c0 = 1.0, m = 2.0, x = 1.0, horizon = 2.0;
    Scheme scheme = Scheme::semi_implicit;
    switch (id) {
    case FigureId::fig1: c0 = 0.0; break;
    case FigureId::fig2: m = 1.0; horizon = 5.0; break;
    case FigureId::fig3: scheme = Scheme::tamed; horizon = 5.0; break;
    case FigureId::fig4: c0 = 0.0; p.sink = 1.0; x = 2.0; break;
    case FigureId::fig5: p.sink = 1.0; x = 2.0; scheme = Scheme::tamed; horizon = 20.0; break;
    }
    p.c0 = c0 == 0.0 ? 1.0 : c0;
    p.m = m;
    p.sink_exponent = 0.5;
    SimConfig sim;
    sim.dt = 1e-4;
    sim.horizon = horizon;
    sim.scheme = scheme;
    sim.record_stride = 10;
    return {make_model(ModelKind::superlinear_sde, p), NoiseSpec({c0}, m), sim, {x}};
}

TrajectoryRecord emit_figure_data(FigureId id, std::uint64_t seed, const std::filesystem::path& out_dir) {
    const auto fs = figure_setup(id);
    auto rec = run_path(fs.model, fs.noise, fs.sim, fs.x0, RngStream(seed, 0));
    std::filesystem::create_directories(out_dir);
    auto f = open_out(out_dir / (std::string(to_string(id)) + "_path.csv"));
    f << "t,x\n";
    for (std::size_t i = 0; i < rec.times.size(); ++i)
        f << format_number(rec.times[i]) << ',' << format_number(rec.values[i]) << '\n';
    return rec;
}

} // namespace regnoise
