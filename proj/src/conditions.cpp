#include "regnoise/conditions.hpp"

#include "regnoise/errors.hpp"
#include "regnoise/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace regnoise {

namespace {

struct Term {
    double exponent;
    double coeff;
};

using Poly = std::vector<Term>;

void add(Poly& p, double exponent, double coeff) {
    if (coeff != 0.0) p.push_back({exponent, coeff});
}

// Merges equal exponents; sums that cancel to rounding level become zero.
Poly merged(Poly p) {
    std::sort(p.begin(), p.end(), [](const Term& a, const Term& b) { return a.exponent < b.exponent; });
    Poly out;
    std::size_t i = 0;
    while (i < p.size()) {
        double sum = 0.0, scale = 0.0;
        const double e = p[i].exponent;
        for (; i < p.size() && std::abs(p[i].exponent - e) <= 1e-12 * std::max(1.0, std::abs(e)); ++i) {
            sum += p[i].coeff;
            scale += std::abs(p[i].coeff);
        }
        if (std::abs(sum) > 1e-12 * scale) out.push_back({e, sum});
    }
    return out;
}

Poly difference(const Poly& rhs, const Poly& lhs) {
    Poly d = rhs;
    for (const Term& t : lhs) d.push_back({t.exponent, -t.coeff});
    return merged(d);
}

// s^(e - ref) evaluation keeps very large and very small s finite.
double scaled(const Poly& p, double s, double ref) {
    double v = 0.0;
    for (const Term& t : p) v += t.coeff * (s == 0.0 ? (t.exponent == 0.0 ? 1.0 : 0.0) : std::pow(s, t.exponent - ref));
    return v;
}

double reference_exponent(const Poly& all, double s) {
    if (all.empty() || s == 0.0) return 0.0;
    double lo = all.front().exponent, hi = lo;
    for (const Term& t : all) {
        lo = std::min(lo, t.exponent);
        hi = std::max(hi, t.exponent);
    }
    return s >= 1.0 ? hi : lo;
}

struct Inequality {
    Poly lhs;
    Poly rhs;
};

struct Probe {
    double margin;
    Witness witness;
};

Probe probe(const Inequality& q, double s) {
    Poly all = q.lhs;
    all.insert(all.end(), q.rhs.begin(), q.rhs.end());
    const double ref = reference_exponent(all, s);
    const double l = scaled(q.lhs, s, ref), r = scaled(q.rhs, s, ref);
    const double d = scaled(difference(q.rhs, q.lhs), s, ref);
    double margin = (std::abs(l) + std::abs(r)) > 0.0 ? d / (std::abs(l) + std::abs(r)) : 0.0;
    if (std::abs(margin) <= 1e-12) margin = 0.0;
    const double unscale = s == 0.0 ? 1.0 : std::pow(s, ref);
    return {margin, Witness{s, l * unscale, r * unscale}};
}

// Sign of the asymptotically dominant term of rhs - lhs (0 if it vanishes identically).
int tail_sign(const Poly& d) { return d.empty() ? 0 : (d.back().coeff > 0 ? 1 : -1); }
int origin_sign(const Poly& d) { return d.empty() ? 0 : (d.front().coeff > 0 ? 1 : -1); }

ConditionReport evaluate(ConditionId id, const Inequality& q, const std::vector<double>& grid) {
    ConditionReport rep;
    rep.id = id;
    rep.margin = std::numeric_limits<double>::infinity();
    auto take = [&](double s) {
        const Probe p = probe(q, s);
        ++rep.probe_count;
        if (p.margin < rep.margin) {
            rep.margin = p.margin;
            if (p.margin < 0.0) rep.witness = p.witness;
        }
        return p.margin;
    };
    for (double s : grid) take(s);

    const Poly d = difference(q.rhs, q.lhs);
    const double s_max = *std::max_element(grid.begin(), grid.end());
    const double s_min = *std::min_element(grid.begin(), grid.end());
    if (rep.margin >= 0.0 && tail_sign(d) < 0 && d.back().exponent > 0.0) {
        for (double s = std::max(s_max, 1.0) * 10.0; std::isfinite(s); s *= 10.0)
            if (take(s) < 0.0) break;
    }
    if (rep.margin >= 0.0 && origin_sign(d) < 0 && s_min > 0.0) {
        for (double s = std::min(s_min, 1.0) / 10.0; s > 0.0; s /= 10.0)
            if (take(s) < 0.0) break;
    }
    if (rep.margin > 0.0 && std::isinf(rep.margin)) rep.margin = 0.0;
    rep.holds = rep.margin >= 0.0;
    if (rep.holds) rep.witness.reset();
    return rep;
}

void validate_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw ValidationError("norm grid must be nonempty");
    for (double s : grid)
        if (!(s >= 0.0) || !std::isfinite(s)) throw ValidationError("norm grid entries must be finite and >= 0");
}

void validate_family(const NoiseFamily& noise) {
    if (!(noise.gamma >= 0.0) || !std::isfinite(noise.gamma)) throw ValidationError("gamma must be >= 0");
    if (!(noise.m >= -0.5) || !std::isfinite(noise.m)) throw ValidationError("noise exponent out of range");
}

// g(s^2) = C0 s^(2q) contributes C0 s^(2q + shift).
void add_g(Poly& p, const CoercivityProfile& profile, double shift) {
    if (!profile.g_coeff) throw ValidationError("coercivity constant C0 is unset; estimate it first");
    add(p, 2.0 * profile.g_exponent + shift, *profile.g_coeff);
}

// sup over s of (lhs(s) - noise_rhs(s)) / (1 + s^2)^2, refined around the best grid point.
double smallest_additive(const Inequality& base, const std::vector<double>& grid) {
    auto need = [&](double s) {
        const Probe p = probe(base, s);
        const double q = (1.0 + s * s);
        return (p.witness.lhs - p.witness.rhs) / (q * q);
    };
    std::vector<double> pts(grid);
    std::sort(pts.begin(), pts.end());
    std::size_t best = 0;
    double value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double v = need(pts[i]);
        if (v > value) {
            value = v;
            best = i;
        }
    }
    if (pts.size() >= 3 && best > 0 && best + 1 < pts.size() && pts[best - 1] > 0.0) {
        const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = std::log(pts[best - 1]), b = std::log(pts[best + 1]);
        for (int it = 0; it < 80; ++it) {
            const double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
            if (need(std::exp(x1)) > need(std::exp(x2))) b = x2;
            else a = x1;
        }
        value = std::max(value, need(std::exp(0.5 * (a + b))));
    }
    return std::max(0.0, value) * (1.0 + 1e-9);
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

} // namespace

std::string_view to_string(ConditionId id) noexcept {
    switch (id) {
    case ConditionId::A3: return "A3";
    case ConditionId::A5: return "A5";
    case ConditionId::A3_star: return "A3_star";
    case ConditionId::A5_star: return "A5_star";
    }
    return "?";
}

std::string_view to_string(RegimeVerdict verdict) noexcept {
    return verdict == RegimeVerdict::regularized_by_theorem ? "regularized_by_theorem" : "outside_theorem_scope";
}

NoiseFamily noise_family(const NoiseSpec& noise, const Model& model) noexcept {
    return {noise.gamma(), family_exponent(noise, model)};
}

std::vector<double> default_norm_grid() {
    std::vector<double> g(64);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::pow(10.0, -3.0 + 9.0 * static_cast<double>(i) / 63.0);
    return g;
}

ConditionReport check_a5(const CoercivityProfile& profile, const NoiseFamily& noise, double eta,
                         const std::vector<double>& norm_grid) {
    if (!(eta > 1.0 && eta < 2.0)) throw ValidationError("eta must lie in (1, 2)");
    validate_grid(norm_grid);
    validate_family(noise);
    const double m = noise.m, gamma = noise.gamma;

    Inequality q;
    add_g(q.lhs, profile, 0.0);
    add_g(q.lhs, profile, 2.0);
    add(q.lhs, 2 * m + 2, gamma);
    add(q.lhs, 2 * m + 4, gamma);
    add(q.rhs, 2 * m + 4, eta * gamma);

    double c = 0.0;
    std::optional<double> chosen;
    if (profile.additive) {
        c = *profile.additive;
    } else {
        // Without C the tail is dominated iff nothing above s^4 survives with a negative sign.
        const Poly d = difference(q.rhs, q.lhs);
        const bool tail_ok = d.empty() || d.back().exponent <= 4.0 || d.back().coeff > 0.0;
        if (tail_ok) {
            c = smallest_additive(q, norm_grid);
        } else {
            std::vector<double> unit{0.0, 1.0};
            for (double s : norm_grid)
                if (s <= 1.0) unit.push_back(s);
            c = smallest_additive(q, unit);
        }
        chosen = c;
    }
    add(q.rhs, 0.0, c);
    add(q.rhs, 2.0, 2.0 * c);
    add(q.rhs, 4.0, c);

    ConditionReport rep = evaluate(ConditionId::A5, q, norm_grid);
    rep.additive = chosen;
    return rep;
}

ConditionReport check_a5_star(const CoercivityProfile& profile, const NoiseFamily& noise, double alpha,
                              const std::vector<double>& norm_grid) {
    if (!(alpha > 1.0 && alpha < 2.0)) throw ValidationError("alpha must lie in (1, 2)");
    validate_grid(norm_grid);
    validate_family(noise);
    const double m = noise.m, gamma = noise.gamma;

    Inequality q;
    add_g(q.lhs, profile, 2.0);
    add(q.lhs, 2 * m + 4, gamma);
    add(q.rhs, 2 * m + 4, alpha * gamma);

    ConditionReport rep = evaluate(ConditionId::A5_star, q, norm_grid);
    const double c0 = *profile.g_coeff;
    if (c0 == 0.0) {
        rep.symbolic = "g = 0: gamma <= alpha gamma, holds for every gamma >= 0";
    } else if (std::abs(profile.g_exponent - (m + 1.0)) <= 1e-12) {
        const bool closed = c0 + gamma <= alpha * gamma * (1 + 1e-12);
        rep.symbolic = "C0 + gamma <= alpha gamma  <=>  gamma >= C0 / (alpha - 1) = " + fmt(c0 / (alpha - 1.0)) +
                       (closed ? "  (holds)" : "  (fails)");
    }
    return rep;
}

ConditionReport check_a3_star(const CoercivityProfile& profile) {
    ConditionReport rep;
    rep.id = ConditionId::A3_star;
    rep.probe_count = 1;
    rep.holds = profile.extinction_mode();
    const double c = profile.additive.value_or(std::numeric_limits<double>::quiet_NaN());
    if (rep.holds) {
        rep.margin = 0.0;
        rep.symbolic = "C = 0, g(0) = 0, alpha = " + fmt(profile.alpha) + " in (1, 2)";
        return rep;
    }
    rep.margin = -1.0;
    if (!(profile.alpha > 1.0 && profile.alpha < 2.0)) {
        rep.symbolic = "alpha = " + fmt(profile.alpha) + " is not in (1, 2)";
        rep.witness = Witness{0.0, profile.alpha, profile.alpha < 2.0 ? 1.0 : 2.0};
    } else {
        rep.symbolic = "extinction requires C = 0 and g(0) = 0, got C = " + fmt(c);
        rep.witness = Witness{0.0, std::isnan(c) ? 1.0 : c, 0.0};
    }
    return rep;
}

CoercivityTerms coercivity_terms(const Model& model, std::span<const double> u) {
    const auto f = drift(model, 0.0, u);
    const auto& prof = model.profile();
    return {2.0 * h_inner(model, f, u), prof.delta * std::pow(v_norm(model, u), prof.alpha)};
}

namespace {

// Smallest C0 certified by the first `count` sampled shapes, and the worst probe.
struct Sweep {
    double c0 = 0.0;
    double margin = std::numeric_limits<double>::infinity();
    std::optional<Witness> witness;
    std::size_t probes = 0;
};

Sweep sweep_coercivity(const Model& model, std::size_t count, std::uint64_t seed) {
    const auto& prof = model.profile();
    const double c = prof.additive.value_or(0.0);
    const double q = prof.g_exponent;
    const std::size_t n = model.dim();
    const std::size_t modes = std::min<std::size_t>(8, n);
    std::vector<std::vector<double>> basis;
    for (std::size_t k = 1; k <= modes; ++k) basis.push_back(sine_mode(model.grid(), k));

    Sweep out;
    std::vector<std::pair<double, double>> lhs_at; // (|u|_H^2, lhs) for the margin pass
    auto lhs_of = [&](const std::vector<double>& shape, double a, double& hsq) {
        std::vector<double> u(shape);
        for (double& x : u) x *= a;
        const auto t = coercivity_terms(model, u);
        double lhs = t.pairing + t.dissipation;
        if (std::abs(lhs) <= 1e-10 * (std::abs(t.pairing) + std::abs(t.dissipation))) lhs = 0.0;
        const double hn = h_norm(model, u);
        hsq = hn * hn;
        ++out.probes;
        lhs_at.emplace_back(hsq, lhs);
        return lhs;
    };
    auto ratio = [&](const std::vector<double>& shape, double log_a) {
        double hsq = 0.0;
        const double lhs = lhs_of(shape, std::exp(log_a), hsq);
        if (hsq == 0.0) return 0.0;
        return std::max(0.0, lhs - c) / std::pow(hsq, q);
    };

    for (std::size_t i = 0; i < count; ++i) {
        RngStream rng(seed, i);
        const double smooth = static_cast<double>(i % 3); // weights decay like k^-smooth
        std::vector<double> shape(n, 0.0);
        for (std::size_t k = 0; k < modes; k += 2) {
            const auto z = rng.next_normal_pair();
            for (std::size_t j = 0; j < 2 && k + j < modes; ++j) {
                const double w = z[j] * std::pow(static_cast<double>(k + j + 1), -smooth);
                for (std::size_t x = 0; x < n; ++x) shape[x] += w * basis[k + j][x];
            }
        }
        const double hn = h_norm(model, shape);
        if (hn == 0.0) continue;
        for (double& x : shape) x /= hn;

        double best_la = std::log(0.1), best = -1.0;
        for (double a : {0.1, 1.0, 10.0}) {
            const double r = ratio(shape, std::log(a));
            if (r > best) {
                best = r;
                best_la = std::log(a);
            }
        }
        double lo = best_la - std::log(10.0), hi = best_la + std::log(10.0);
        const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
        for (int it = 0; it < 40; ++it) {
            const double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
            if (ratio(shape, x1) > ratio(shape, x2)) hi = x2;
            else lo = x1;
        }
        best = std::max(best, ratio(shape, 0.5 * (lo + hi)));
        out.c0 = std::max(out.c0, best);
    }

    const double c0 = prof.g_coeff ? *prof.g_coeff : out.c0;
    for (const auto& [hsq, lhs] : lhs_at) {
        const double rhs = c0 * std::pow(hsq, q) + c;
        const double denom = std::abs(lhs) + std::abs(rhs);
        double m = denom > 0.0 ? (rhs - lhs) / denom : 0.0;
        if (std::abs(m) <= 1e-10) m = 0.0;
        if (m < out.margin) {
            out.margin = m;
            if (m < 0.0) out.witness = Witness{std::sqrt(hsq), lhs, rhs};
        }
    }
    return out;
}

} // namespace

ConditionReport check_generalized_coercivity(const Model& model, std::size_t sample_count, std::uint64_t seed) {
    if (model.is_scalar()) throw ValidationError("coercivity sampling requires a field model");
    if (sample_count < 100) throw ValidationError("sample_count must be >= 100");

    const Sweep once = sweep_coercivity(model, sample_count, seed);
    const Sweep twice = sweep_coercivity(model, 2 * sample_count, seed);
    const double denom = std::max(once.c0, twice.c0);
    if (denom > 0.0 && (twice.c0 - once.c0) / denom >= 0.1) {
        throw DiagnosticError("C0 estimate unstable: " + fmt(once.c0) + " with " + std::to_string(sample_count) +
                                  " samples, " + fmt(twice.c0) + " with " + std::to_string(2 * sample_count),
                              twice.c0, once.c0);
    }

    ConditionReport rep;
    rep.id = ConditionId::A3;
    rep.probe_count = twice.probes;
    rep.margin = std::isinf(twice.margin) ? 0.0 : twice.margin;
    rep.estimated_g_coeff = twice.c0;
    rep.estimated_delta = model.profile().delta;
    rep.holds = std::isfinite(twice.c0) && rep.margin >= 0.0;
    if (!rep.holds) rep.witness = twice.witness;
    return rep;
}

RegimeClass classify_regime(double c0, double m) noexcept {
    const bool yes = m > 1.5 || (m == 1.5 && c0 > std::sqrt(2.0));
    return {yes ? RegimeVerdict::regularized_by_theorem : RegimeVerdict::outside_theorem_scope};
}

} // namespace regnoise
