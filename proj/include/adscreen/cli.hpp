#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "adscreen/adscreen.hpp"

namespace adscreen::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int { kPass = 0, kVerifyFail = 1, kConfig = 2, kNumeric = 3, kNoRoot = 4 };

// ---------------------------------------------------------------------------
// Config

struct MechanismSpec {
    MechanismFamily family = MechanismFamily::good_only;
    std::optional<double> p_g;
    std::optional<double> p_sb;
};

struct SweepSpec {
    std::vector<double> ks;
    std::optional<std::pair<int, int>> lp_grid;  // continuous configs
    bool lp = false;                              // discrete configs
    // Fixed menus per family; families without prices are re-optimized.
    std::optional<double> good_only_p_g, single_bundle_p_sb, ad_tiered_p_g, ad_tiered_p_sb;
};

struct Config {
    std::optional<TypeSpace> space;
    std::optional<DensityModel> density;
    std::optional<AdPaymentSchedule> payment;
    std::optional<MechanismSpec> mechanism;
    QuadratureSpec quadrature;
    std::optional<SweepSpec> sweep;
    std::vector<std::pair<int, int>> grids{{4, 4}, {8, 8}};
    std::optional<DiscreteInstance> instance;
};

namespace detail {

inline std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

inline const json& require(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(join(path, key), "required field is missing");
    return *it;
}

inline void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : keys) ok = ok || it.key() == k;
        if (!ok) throw ConfigError(join(path, it.key()), "unknown field");
    }
}

inline double number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
    return v;
}

inline int integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
    return j.get<int>();
}

inline std::optional<double> opt_number(const json& j, const std::string& key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return number(*it, join(path, key));
}

inline std::vector<double> numbers(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
    std::vector<double> v;
    for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
    return v;
}

inline std::pair<double, double> range(const json& j, const std::string& path) {
    const std::vector<double> v = numbers(j, path);
    if (v.size() != 2) throw ConfigError(path, "expected [lo, hi]");
    return {v[0], v[1]};
}

inline std::pair<int, int> grid(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2) throw ConfigError(path, "expected [n1, n2]");
    const int a = integer(j[0], path + "[0]"), b = integer(j[1], path + "[1]");
    if (a < 2 || b < 2) throw ConfigError(path, "grid sizes must be >= 2");
    return {a, b};
}

inline MechanismFamily parse_family(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path, "expected a string");
    const std::string s = j.get<std::string>();
    if (s == "good_only") return MechanismFamily::good_only;
    if (s == "single_bundle") return MechanismFamily::single_bundle;
    if (s == "ad_tiered") return MechanismFamily::ad_tiered;
    throw ConfigError(path, "unknown mechanism kind '" + s + "' (good_only | single_bundle | ad_tiered)");
}

inline DensityModel parse_density(const json& j, const TypeSpace& s) {
    const std::string path = "density";
    const json& kind = require(j, "kind", path);
    if (!kind.is_string()) throw ConfigError("density.kind", "expected a string");
    const std::string k = kind.get<std::string>();
    try {
        if (k == "uniform") {
            allow_keys(j, path, {"kind"});
            return DensityModel::uniform(s);
        }
        if (k == "log_linear") {
            allow_keys(j, path, {"kind", "a", "b"});
            return DensityModel::log_linear(s, number(require(j, "a", path), "density.a"),
                                            number(require(j, "b", path), "density.b"));
        }
        if (k == "product_polynomial") {
            allow_keys(j, path, {"kind", "coeffs1", "coeffs2"});
            return DensityModel::product_polynomial(s, numbers(require(j, "coeffs1", path), "density.coeffs1"),
                                                    numbers(require(j, "coeffs2", path), "density.coeffs2"));
        }
    } catch (const DomainError& e) {
        throw ConfigError(path, e.what());
    }
    throw ConfigError("density.kind", "unknown density kind '" + k + "' (uniform | log_linear | product_polynomial)");
}

inline AdPaymentSchedule parse_payment(const json& j, const TypeSpace& s) {
    const std::string path = "payment";
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    const std::string kind = j.contains("kind") ? (j["kind"].is_string() ? j["kind"].get<std::string>() : "") : "constant";
    try {
        if (kind == "constant") {
            allow_keys(j, path, {"kind", "k"});
            return AdPaymentSchedule::constant(number(require(j, "k", path), "payment.k"));
        }
        if (kind == "affine") {
            // kappa(x) = c0 + c1 x1 + c2 x2
            allow_keys(j, path, {"kind", "c0", "c1", "c2"});
            const double c0 = number(require(j, "c0", path), "payment.c0");
            const double c1 = opt_number(j, "c1", path).value_or(0.0);
            const double c2 = opt_number(j, "c2", path).value_or(0.0);
            auto sched = AdPaymentSchedule::general([=](Point x) { return c0 + c1 * x.x1 + c2 * x.x2; },
                                                    [=](Point) { return c2; });
            sched.check_bounded(s);
            return sched;
        }
    } catch (const DomainError& e) {
        throw ConfigError(path, e.what());
    }
    throw ConfigError("payment.kind", "unknown payment kind (constant | affine)");
}

inline QuadratureSpec parse_quadrature(const json& j) {
    const std::string path = "quadrature";
    allow_keys(j, path, {"gauss_order", "max_subdivisions", "abs_tol", "rel_tol"});
    QuadratureSpec q;
    if (j.contains("gauss_order")) q.gauss_order = integer(j["gauss_order"], "quadrature.gauss_order");
    if (j.contains("max_subdivisions")) q.max_subdivisions = integer(j["max_subdivisions"], "quadrature.max_subdivisions");
    if (j.contains("abs_tol")) q.abs_tol = number(j["abs_tol"], "quadrature.abs_tol");
    if (j.contains("rel_tol")) q.rel_tol = number(j["rel_tol"], "quadrature.rel_tol");
    try {
        q.validate();
    } catch (const DomainError& e) {
        throw ConfigError(path, e.what());
    }
    return q;
}

inline double round12(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::strtod(buf, nullptr);
}

inline SweepSpec parse_sweep(const json& j) {
    const std::string path = "sweep";
    allow_keys(j, path, {"k_min", "k_max", "steps", "step", "lp_grid", "lp", "prices"});
    SweepSpec s;
    const double lo = number(require(j, "k_min", path), "sweep.k_min");
    const double hi = number(require(j, "k_max", path), "sweep.k_max");
    if (j.contains("steps") == j.contains("step")) throw ConfigError(path, "give exactly one of steps, step");
    if (j.contains("steps")) {
        const int n = integer(j["steps"], "sweep.steps");
        if (n < 0) throw ConfigError("sweep.steps", "must be >= 0");
        if (hi >= lo)
            for (int i = 0; i < n; ++i) s.ks.push_back(round12(n == 1 ? lo : lo + (hi - lo) * i / (n - 1)));
    } else {
        const double h = number(j["step"], "sweep.step");
        if (!(h > 0.0)) throw ConfigError("sweep.step", "must be > 0");
        if (hi >= lo) {
            const long n = static_cast<long>(std::floor((hi - lo) / h + 1e-9)) + 1;
            for (long i = 0; i < n; ++i) s.ks.push_back(round12(lo + h * static_cast<double>(i)));
        }
    }
    for (double k : s.ks)
        if (k < 0.0) throw ConfigError("sweep.k_min", "third-party payments must be >= 0");
    if (j.contains("lp_grid")) s.lp_grid = grid(j["lp_grid"], "sweep.lp_grid");
    if (j.contains("lp")) {
        if (!j["lp"].is_boolean()) throw ConfigError("sweep.lp", "expected a boolean");
        s.lp = j["lp"].get<bool>();
    }
    if (j.contains("prices")) {
        const json& p = j["prices"];
        allow_keys(p, "sweep.prices", {"good_only", "single_bundle", "ad_tiered"});
        if (p.contains("good_only")) {
            allow_keys(p["good_only"], "sweep.prices.good_only", {"p_g"});
            s.good_only_p_g = number(require(p["good_only"], "p_g", "sweep.prices.good_only"), "sweep.prices.good_only.p_g");
        }
        if (p.contains("single_bundle")) {
            allow_keys(p["single_bundle"], "sweep.prices.single_bundle", {"p_sb"});
            s.single_bundle_p_sb = number(require(p["single_bundle"], "p_sb", "sweep.prices.single_bundle"),
                                          "sweep.prices.single_bundle.p_sb");
        }
        if (p.contains("ad_tiered")) {
            allow_keys(p["ad_tiered"], "sweep.prices.ad_tiered", {"p_g", "p_sb"});
            s.ad_tiered_p_g = number(require(p["ad_tiered"], "p_g", "sweep.prices.ad_tiered"), "sweep.prices.ad_tiered.p_g");
            s.ad_tiered_p_sb = number(require(p["ad_tiered"], "p_sb", "sweep.prices.ad_tiered"), "sweep.prices.ad_tiered.p_sb");
        }
    }
    return s;
}

inline DiscreteInstance parse_instance(const json& j, const TypeSpace& s) {
    const std::string path = "instance";
    allow_keys(j, path, {"points"});
    const json& pts = require(j, "points", path);
    if (!pts.is_array() || pts.empty()) throw ConfigError("instance.points", "expected a nonempty array");
    std::vector<WeightedPoint> v;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const std::string pp = "instance.points[" + std::to_string(i) + "]";
        allow_keys(pts[i], pp, {"x", "p"});
        const auto [x1, x2] = range(require(pts[i], "x", pp), pp + ".x");
        v.push_back({{x1, x2}, number(require(pts[i], "p", pp), pp + ".p")});
    }
    try {
        return DiscreteInstance(s, std::move(v));
    } catch (const DomainError& e) {
        throw ConfigError("instance.points", e.what());
    }
}

}  // namespace detail

inline Config parse_config(const json& j) {
    using namespace detail;
    allow_keys(j, "", {"type_space", "density", "payment", "mechanism", "quadrature", "sweep", "oracle", "instance"});
    Config c;
    const json& ts = require(j, "type_space", "");
    allow_keys(ts, "type_space", {"x1", "x2"});
    const auto [a1, b1] = range(require(ts, "x1", "type_space"), "type_space.x1");
    const auto [a2, b2] = range(require(ts, "x2", "type_space"), "type_space.x2");
    try {
        c.space = TypeSpace(a1, b1, a2, b2);
    } catch (const DomainError& e) {
        throw ConfigError("type_space", e.what());
    }
    if (j.contains("quadrature")) c.quadrature = parse_quadrature(j["quadrature"]);
    if (j.contains("density")) c.density = parse_density(j["density"], *c.space);
    if (j.contains("instance")) c.instance = parse_instance(j["instance"], *c.space);
    if (c.density && c.instance) throw ConfigError("instance", "give either density or instance, not both");
    if (j.contains("payment")) c.payment = parse_payment(j["payment"], *c.space);
    if (j.contains("mechanism")) {
        const json& m = j["mechanism"];
        allow_keys(m, "mechanism", {"kind", "p_g", "p_sb"});
        MechanismSpec ms;
        ms.family = parse_family(require(m, "kind", "mechanism"), "mechanism.kind");
        ms.p_g = opt_number(m, "p_g", "mechanism");
        ms.p_sb = opt_number(m, "p_sb", "mechanism");
        c.mechanism = ms;
    }
    if (j.contains("sweep")) c.sweep = parse_sweep(j["sweep"]);
    if (j.contains("oracle")) {
        const json& o = j["oracle"];
        allow_keys(o, "oracle", {"grids"});
        if (o.contains("grids")) {
            const json& g = o["grids"];
            if (!g.is_array()) throw ConfigError("oracle.grids", "expected an array of [n1, n2]");
            c.grids.clear();
            for (std::size_t i = 0; i < g.size(); ++i) c.grids.push_back(grid(g[i], "oracle.grids[" + std::to_string(i) + "]"));
        }
    }
    return c;
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(j);
}

// ---------------------------------------------------------------------------
// Output helpers

/// Numbers go out with 12 significant digits; non-finite values as null.
inline json num(double v) {
    if (!std::isfinite(v)) return nullptr;
    const double r = detail::round12(v);
    return r == 0.0 ? 0.0 : r;
}

inline json num(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }

inline json point_json(Point x) { return json::array({num(x.x1), num(x.x2)}); }

inline std::string csv_num(double v) {
    if (!std::isfinite(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", detail::round12(v) == 0.0 ? 0.0 : v);
    return buf;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("--csv", "cannot write '" + path + "'");
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) f << (i ? "," : "") << csv_field(cells[i]);
        f << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
}

inline json mechanism_json(MechanismFamily f, std::optional<double> p_g, std::optional<double> p_sb) {
    return json{{"family", family_name(f)}, {"p_g", num(p_g)}, {"p_sb", num(p_sb)}};
}

inline json mechanism_json(const CanonicalMechanism& m) { return mechanism_json(m.family(), m.p_g(), m.p_sb()); }

inline json report_json(const ConditionReport& r) {
    json items = json::array();
    for (const ConditionItem& it : r.items) {
        items.push_back({{"id", it.id},
                         {"name", it.name},
                         {"role", role_name(it.role)},
                         {"status", status_name(it.status)},
                         {"witness", num(it.witness)},
                         {"witness_point", it.witness_point ? point_json(*it.witness_point) : json(nullptr)},
                         {"detail", it.detail}});
    }
    json masses = json::object();
    for (const auto& [k, v] : r.masses) masses[k] = num(v);
    return json{{"mechanism", mechanism_json(r.mechanism)},
                {"verdict", verdict_name(r.verdict)},
                {"items", items},
                {"masses", masses}};
}

inline json probe_json(const std::optional<ProbeWitness>& w) {
    if (!w) return nullptr;
    json params = json::object();
    for (const auto& [k, v] : w->parameters) params[k] = num(v);
    return json{{"region", w->region}, {"family", w->family}, {"parameters", params}, {"value", num(w->value)},
                {"detail", w->detail}};
}

inline json quadrature_json(const QuadratureSpec& q) {
    return json{{"gauss_order", q.gauss_order}, {"max_subdivisions", q.max_subdivisions}, {"abs_tol", num(q.abs_tol)},
                {"rel_tol", num(q.rel_tol)}};
}

inline json payment_json(const AdPaymentSchedule& k) {
    if (k.is_constant()) return json{{"kind", "constant"}, {"k", num(k.k())}};
    return json{{"kind", "general"}};
}

// ---------------------------------------------------------------------------
// Commands

namespace detail {

inline const DensityModel& need_density(const Config& c, const char* cmd) {
    if (!c.density) throw ConfigError("density", std::string("required for ") + cmd);
    return *c.density;
}

inline const AdPaymentSchedule& need_payment(const Config& c, const char* cmd) {
    if (!c.payment) throw ConfigError("payment", std::string("required for ") + cmd);
    return *c.payment;
}

inline const MechanismSpec& need_mechanism(const Config& c, const char* cmd) {
    if (!c.mechanism) throw ConfigError("mechanism", std::string("required for ") + cmd);
    return *c.mechanism;
}

inline CanonicalMechanism canonical_from(const Config& c, const MechanismSpec& ms, const char* cmd) {
    auto price = [&](const std::optional<double>& v, const char* key) {
        if (!v) throw ConfigError(std::string("mechanism.") + key, std::string("required for ") + cmd);
        return *v;
    };
    try {
        switch (ms.family) {
            case MechanismFamily::good_only: return CanonicalMechanism::good_only(*c.space, price(ms.p_g, "p_g"));
            case MechanismFamily::single_bundle:
                return CanonicalMechanism::single_bundle(*c.space, price(ms.p_sb, "p_sb"));
            case MechanismFamily::ad_tiered:
                return CanonicalMechanism::ad_tiered(*c.space, price(ms.p_g, "p_g"), price(ms.p_sb, "p_sb"));
        }
    } catch (const DomainError& e) {
        throw ConfigError("mechanism", e.what());
    }
    throw ConfigError("mechanism.kind", "unknown mechanism kind");
}

inline CheckOptions check_options(const Config& c) {
    CheckOptions o;
    o.quadrature = c.quadrature;
    return o;
}

inline CalibrationOptions calibration_options(const Config& c) {
    CalibrationOptions o;
    o.quadrature = c.quadrature;
    return o;
}

inline json calibration_json(const CalibrationResult& r) {
    json res = json::object();
    for (const auto& [k, v] : r.residuals) res[k] = num(v);
    json bracket = json::array();
    for (const BracketStep& b : r.bracket) bracket.push_back(json::array({num(b.lo), num(b.hi)}));
    json roots = json::array();
    for (const PriceRoot& p : r.roots)
        roots.push_back({{"p_g", num(p.p_g)}, {"p_sb", num(p.p_sb)}, {"residual", num(p.residual)},
                         {"iterations", p.iterations}});
    return json{{"family", family_name(r.family)}, {"p_g", num(r.p_g)},         {"p_sb", num(r.p_sb)},
                {"residuals", res},                {"iterations", r.iterations}, {"bracket", bracket},
                {"roots", roots},                  {"notes", r.notes}};
}

inline Mechanism discrete_menu(const MechanismSpec& ms) {
    const double pg = ms.p_g.value_or(0.0), psb = ms.p_sb.value_or(0.0);
    if (ms.family != MechanismFamily::single_bundle && !ms.p_g) throw ConfigError("mechanism.p_g", "required");
    if (ms.family != MechanismFamily::good_only && !ms.p_sb) throw ConfigError("mechanism.p_sb", "required");
    return family_menu(ms.family, pg, psb);
}

}  // namespace detail

inline int cmd_verify(const Config& c, std::ostream& out) {
    const DensityModel& d = detail::need_density(c, "verify");
    const AdPaymentSchedule& k = detail::need_payment(c, "verify");
    const CanonicalMechanism mech = detail::canonical_from(c, detail::need_mechanism(c, "verify"), "verify");
    const ConditionReport rep = check_mechanism(d, k, mech, detail::check_options(c));
    ProbeOptions po;
    po.quadrature = c.quadrature;
    const auto probe = adversarial_probe(MeasureDecomposition(d, k), mech, po);
    json j{{"command", "verify"}};
    const json body = report_json(rep);
    for (auto& [key, v] : body.items()) j[key] = v;
    j["probe"] = probe_json(probe);
    j["quadrature"] = quadrature_json(c.quadrature);
    out << j.dump(2) << '\n';
    return rep.verdict == Verdict::sufficient_passed ? kPass : kVerifyFail;
}

inline int cmd_calibrate(const Config& c, std::ostream& out) {
    const DensityModel& d = detail::need_density(c, "calibrate");
    const AdPaymentSchedule& k = detail::need_payment(c, "calibrate");
    const MechanismSpec& ms = detail::need_mechanism(c, "calibrate");
    const MeasureDecomposition m(d, k);
    const CalibrationResult r = calibrate(m, ms.family, detail::calibration_options(c));
    json j{{"command", "calibrate"}};
    const json body = detail::calibration_json(r);
    for (auto& [key, v] : body.items()) j[key] = v;
    if (k.is_constant()) {
        j["verify"] = report_json(check_mechanism(d, k, r.mechanism(d.space()), detail::check_options(c)));
    } else {
        j["verify"] = {{"skipped", "condition batteries need a constant third-party payment k"}};
    }
    out << j.dump(2) << '\n';
    return kPass;
}

inline const std::vector<std::string>& sweep_columns() {
    static const std::vector<std::string> cols{"k",
                                               "regime",
                                               "error",
                                               "p_g_good_only",
                                               "p_sb_single_bundle",
                                               "p_g_ad_tiered",
                                               "p_sb_ad_tiered",
                                               "rev_good_only",
                                               "rev_single_bundle",
                                               "rev_ad_tiered",
                                               "lp_value"};
    return cols;
}

struct SweepRow {
    double k = 0.0;
    std::string regime;
    std::string primary;  // single family label used for transitions
    std::string error;
    std::optional<double> p_g_go, p_sb_sb, p_g_at, p_sb_at, rev_go, rev_sb, rev_at, lp;
};

namespace detail {

inline SweepRow sweep_continuous_row(const Config& c, const SweepSpec& sw, double k) {
    const DensityModel& d = *c.density;
    SweepRow row;
    row.k = k;
    const AdPaymentSchedule kappa = AdPaymentSchedule::constant(k);
    std::vector<std::string> errors;
    if (d.uniform_in_x2()) {
        const RegimeLabel label = classify_regime_uniform(d, k);
        row.regime = label.label();
        row.primary = family_name(label.primary());
    }
    const MeasureDecomposition m(d, kappa);
    const CalibrationOptions opt = calibration_options(c);
    for (MechanismFamily f : {MechanismFamily::good_only, MechanismFamily::single_bundle, MechanismFamily::ad_tiered}) {
        try {
            const CalibrationResult r = calibrate(m, f, opt);
            const double rev = revenue_continuous(r.mechanism(d.space()), d, kappa, c.quadrature);
            switch (f) {
                case MechanismFamily::good_only: row.p_g_go = r.p_g, row.rev_go = rev; break;
                case MechanismFamily::single_bundle: row.p_sb_sb = r.p_sb, row.rev_sb = rev; break;
                case MechanismFamily::ad_tiered: row.p_g_at = r.p_g, row.p_sb_at = r.p_sb, row.rev_at = rev; break;
            }
        } catch (const std::exception& e) {
            errors.push_back(std::string(family_name(f)) + ": " + e.what());
        }
    }
    if (sw.lp_grid) {
        try {
            const LPSolution sol = lp_oracle(discretize(d, sw.lp_grid->first, sw.lp_grid->second, c.quadrature), kappa);
            if (sol.status == LPStatus::optimal) row.lp = sol.value;
            else errors.push_back(std::string("lp: ") + lp_status_name(sol.status));
        } catch (const std::exception& e) {
            errors.push_back(std::string("lp: ") + e.what());
        }
    }
    for (std::size_t i = 0; i < errors.size(); ++i) row.error += (i ? "; " : "") + errors[i];
    return row;
}

inline SweepRow sweep_discrete_row(const Config& c, const SweepSpec& sw, double k) {
    const DiscreteInstance& inst = *c.instance;
    SweepRow row;
    row.k = k;
    const AdPaymentSchedule kappa = AdPaymentSchedule::constant(k);
    auto best = [&](MechanismFamily f) { return menu_grid_search(inst, kappa, f, candidate_prices(inst, kappa, f)); };
    if (sw.good_only_p_g) {
        row.p_g_go = sw.good_only_p_g;
        row.rev_go = revenue_discrete(family_menu(MechanismFamily::good_only, *row.p_g_go, 0.0), inst, kappa);
    } else {
        const auto r = best(MechanismFamily::good_only);
        row.p_g_go = r.p_g, row.rev_go = r.revenue;
    }
    if (sw.single_bundle_p_sb) {
        row.p_sb_sb = sw.single_bundle_p_sb;
        row.rev_sb = revenue_discrete(family_menu(MechanismFamily::single_bundle, 0.0, *row.p_sb_sb), inst, kappa);
    } else {
        const auto r = best(MechanismFamily::single_bundle);
        row.p_sb_sb = r.p_sb, row.rev_sb = r.revenue;
    }
    if (sw.ad_tiered_p_g) {
        row.p_g_at = sw.ad_tiered_p_g, row.p_sb_at = sw.ad_tiered_p_sb;
        row.rev_at = revenue_discrete(family_menu(MechanismFamily::ad_tiered, *row.p_g_at, *row.p_sb_at), inst, kappa);
    } else {
        const auto r = best(MechanismFamily::ad_tiered);
        row.p_g_at = r.p_g, row.p_sb_at = r.p_sb, row.rev_at = r.revenue;
    }
    if (sw.lp) {
        try {
            const LPSolution sol = lp_oracle(inst, kappa);
            if (sol.status == LPStatus::optimal) row.lp = sol.value;
            else row.error = std::string("lp: ") + lp_status_name(sol.status);
        } catch (const std::exception& e) {
            row.error = std::string("lp: ") + e.what();
        }
    }
    return row;
}

}  // namespace detail

inline std::vector<SweepRow> run_sweep(const Config& c) {
    if (!c.sweep) throw ConfigError("sweep", "required for sweep");
    if (!c.density && !c.instance) throw ConfigError("density", "sweep needs a density or an instance");
    const SweepSpec& sw = *c.sweep;
    std::vector<SweepRow> rows(sw.ks.size());
    parallel_for(rows.size(), [&](std::size_t i) {
        rows[i] = c.density ? detail::sweep_continuous_row(c, sw, sw.ks[i]) : detail::sweep_discrete_row(c, sw, sw.ks[i]);
    });
    return rows;
}

inline int cmd_sweep(const Config& c, std::ostream& out, const std::optional<std::string>& csv) {
    const std::vector<SweepRow> rows = run_sweep(c);
    json jrows = json::array();
    std::vector<std::vector<std::string>> table;
    auto cell = [](const std::optional<double>& v) { return v ? csv_num(*v) : std::string(); };
    json transitions = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const SweepRow& r = rows[i];
        jrows.push_back({{"k", num(r.k)},
                         {"regime", r.regime.empty() ? json(nullptr) : json(r.regime)},
                         {"error", r.error.empty() ? json(nullptr) : json(r.error)},
                         {"p_g_good_only", num(r.p_g_go)},
                         {"p_sb_single_bundle", num(r.p_sb_sb)},
                         {"p_g_ad_tiered", num(r.p_g_at)},
                         {"p_sb_ad_tiered", num(r.p_sb_at)},
                         {"rev_good_only", num(r.rev_go)},
                         {"rev_single_bundle", num(r.rev_sb)},
                         {"rev_ad_tiered", num(r.rev_at)},
                         {"lp_value", num(r.lp)}});
        table.push_back({csv_num(r.k), r.regime, r.error, cell(r.p_g_go), cell(r.p_sb_sb), cell(r.p_g_at),
                         cell(r.p_sb_at), cell(r.rev_go), cell(r.rev_sb), cell(r.rev_at), cell(r.lp)});
        if (i > 0 && !r.primary.empty() && r.primary != rows[i - 1].primary)
            transitions.push_back({{"from", rows[i - 1].primary},
                                   {"to", r.primary},
                                   {"between", json::array({num(rows[i - 1].k), num(r.k)})}});
    }
    if (csv) write_csv(*csv, sweep_columns(), table);
    out << json{{"command", "sweep"}, {"columns", sweep_columns()}, {"rows", jrows}, {"transitions", transitions}}.dump(2)
        << '\n';
    return kPass;
}

inline int cmd_oracle(const Config& c, std::ostream& out, const std::optional<std::string>& csv) {
    const AdPaymentSchedule& k = detail::need_payment(c, "oracle");
    const MechanismSpec& ms = detail::need_mechanism(c, "oracle");
    static const std::vector<std::string> cols{"grid",  "lp_value",    "mechanism_revenue", "gap",
                                               "relative_gap", "family_best", "certificate",       "pivots"};
    json jrows = json::array();
    std::vector<std::vector<std::string>> table;
    auto add = [&](const std::string& grid, double lp, double rev, double fam, double cert, long piv) {
        const double gap = lp - rev, rel = lp > 0.0 ? gap / lp : 0.0;
        jrows.push_back({{"grid", grid}, {"lp_value", num(lp)}, {"mechanism_revenue", num(rev)}, {"gap", num(gap)},
                         {"relative_gap", num(rel)}, {"family_best", num(fam)}, {"certificate", num(cert)},
                         {"pivots", piv}});
        table.push_back({grid, csv_num(lp), csv_num(rev), csv_num(gap), csv_num(rel), csv_num(fam), csv_num(cert),
                         std::to_string(piv)});
    };
    json j{{"command", "oracle"}};
    if (c.instance) {
        const Mechanism menu = detail::discrete_menu(ms);
        const LPSolution sol = lp_oracle(*c.instance, k);
        if (sol.status != LPStatus::optimal) throw NumericError(std::string("LP is ") + lp_status_name(sol.status));
        const double fam =
            menu_grid_search(*c.instance, k, ms.family, candidate_prices(*c.instance, k, ms.family)).revenue;
        j["mechanism"] = mechanism_json(ms.family, ms.p_g, ms.p_sb);
        add("instance", sol.value, revenue_discrete(menu, *c.instance, k), fam, sol.certificate, sol.pivots);
        json assignment = json::array();
        for (std::size_t i = 0; i < sol.assignment.size(); ++i) {
            const TypeAssignment& a = sol.assignment[i];
            assignment.push_back({{"x", point_json(c.instance->points()[i].x)},
                                  {"q1", num(a.q1)}, {"q2", num(a.q2)}, {"t", num(a.t)}});
        }
        j["rows"] = jrows;
        j["weakly_decreasing"] = true;
        j["assignment"] = assignment;
    } else {
        const DensityModel& d = detail::need_density(c, "oracle");
        MechanismSpec spec = ms;
        if ((spec.family != MechanismFamily::single_bundle && !spec.p_g) ||
            (spec.family != MechanismFamily::good_only && !spec.p_sb)) {
            const CalibrationResult r = calibrate(MeasureDecomposition(d, k), spec.family, detail::calibration_options(c));
            spec.p_g = r.p_g;
            spec.p_sb = r.p_sb;
        }
        const CanonicalMechanism mech = detail::canonical_from(c, spec, "oracle");
        const GapTable t = optimality_gap(mech, d, k, c.grids, c.quadrature);
        j["mechanism"] = mechanism_json(mech);
        for (const GapRow& r : t.rows)
            add(std::to_string(r.n1) + "x" + std::to_string(r.n2), r.lp_value, r.mechanism_revenue, r.family_best,
                r.certificate, r.pivots);
        j["rows"] = jrows;
        j["weakly_decreasing"] = t.weakly_decreasing;
    }
    if (csv) write_csv(*csv, cols, table);
    out << j.dump(2) << '\n';
    return kPass;
}

inline int cmd_analyze(const Config& c, std::ostream& out) {
    const DensityModel& d = detail::need_density(c, "analyze");
    const AdPaymentSchedule& k = detail::need_payment(c, "analyze");
    const MeasureDecomposition m(d, k);
    const MassBreakdown mass = mu_of_region(m, whole(d.space()), c.quadrature);
    json j{{"command", "analyze"}};
    const TypeSpace& s = d.space();
    j["type_space"] = {{"x1", json::array({num(s.x1_lo()), num(s.x1_hi())})},
                       {"x2", json::array({num(s.x2_lo()), num(s.x2_hi())})}};
    j["density"] = {{"uniform", d.is_uniform()}, {"uniform_in_x2", d.uniform_in_x2()}, {"norm_const", num(d.norm_const())}};
    j["payment"] = payment_json(k);
    j["atom"] = {{"point", point_json(m.atom())}, {"weight", num(m.atom_weight())}};
    if (const auto& cf = m.closed_form()) {
        j["closed_form_densities"] = {{"bottom", num(cf->edge(Edge::bottom))}, {"top", num(cf->edge(Edge::top))},
                                      {"left", num(cf->edge(Edge::left))},     {"right", num(cf->edge(Edge::right))},
                                      {"interior", num(cf->interior)}};
    } else {
        j["closed_form_densities"] = nullptr;
    }
    j["masses"] = {{"atom", num(mass.atom)},   {"bottom", num(mass.bottom)},     {"top", num(mass.top)},
                   {"left", num(mass.left)},   {"right", num(mass.right)},       {"interior", num(mass.interior)},
                   {"total", num(mass.total())}};
    const MMResult mm = check_mm(d, k);
    j["mm"] = {{"min_value", num(mm.min_value)}, {"argmin", point_json(mm.argmin)}, {"pass", mm.pass},
               {"closed_form", mm.closed_form}};
    j["regime"] = (d.uniform_in_x2() && k.is_constant()) ? json(classify_regime_uniform(d, k.k()).label()) : json(nullptr);
    json signs = json::object();
    for (MechanismFamily f : {MechanismFamily::good_only, MechanismFamily::single_bundle, MechanismFamily::ad_tiered}) {
        const EdgeSignReport r = check_general_kappa_edges(d, k, f);
        json checks = json::array();
        for (const EdgeSignCheck& e : r.checks)
            checks.push_back({{"edge", edge_name(e.edge)}, {"required_sign", e.required_sign},
                              {"min_margin", num(e.min_margin)}, {"argmin_x1", num(e.argmin_x1)}, {"pass", e.pass}});
        signs[family_name(f)] = {{"pass", r.pass}, {"checks", checks}};
    }
    j["edge_signs"] = signs;
    if (c.mechanism) {
        const CanonicalMechanism mech = detail::canonical_from(c, *c.mechanism, "analyze");
        const RegionPartition p = mech.regions();
        j["mechanism"] = mechanism_json(mech);
        j["region_masses"] = {{"Z", num(mu_of_region(m, p.z, c.quadrature).total())},
                              {"W", num(mu_of_region(m, p.w, c.quadrature).total())},
                              {"Y", num(mu_of_region(m, p.y, c.quadrature).total())}};
        j["revenue"] = num(revenue_continuous(mech, d, k, c.quadrature));
    }
    out << j.dump(2) << '\n';
    return kPass;
}

// ---------------------------------------------------------------------------
// Entry point

inline json error_json(const char* kind, const std::string& message) {
    return json{{"error", {{"kind", kind}, {"message", message}}}};
}

/// Runs one command line (without the program name). Exit codes:
/// 0 pass, 1 verify fail, 2 config or usage error, 3 numeric failure, 4 no root.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Screening toolkit for a good, ads and third-party payments", "adscreen"};
    app.require_subcommand(1);
    std::string config_path;
    std::optional<std::string> csv_path;
    const std::vector<std::pair<const char*, const char*>> commands{
        {"verify", "Run the optimality condition battery for the configured mechanism"},
        {"calibrate", "Solve for the configured family's prices and verify them"},
        {"sweep", "Regime labels, calibrated prices and revenues across k"},
        {"oracle", "LP optimum against the mechanism's revenue on discretized instances"},
        {"analyze", "Decompose the transformed measure and summarize its components"}};
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON config file")->required();
        if (std::string(name) == "sweep" || std::string(name) == "oracle")
            sub->add_option_function<std::string>("--csv", [&](const std::string& p) { csv_path = p; }, "CSV output path");
    }
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kPass;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kPass;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kConfig;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        const Config c = load_config(config_path);
        if (cmd == "verify") return cmd_verify(c, out);
        if (cmd == "calibrate") return cmd_calibrate(c, out);
        if (cmd == "sweep") return cmd_sweep(c, out, csv_path);
        if (cmd == "oracle") return cmd_oracle(c, out, csv_path);
        return cmd_analyze(c, out);
    } catch (const ConfigError& e) {
        json j = error_json("config", e.what());
        j["error"]["path"] = e.path();
        out << j.dump(2) << '\n';
        err << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const NoRootError& e) {
        json j = error_json("no_root", e.what());
        j["error"]["bracket"] = {{"lo", num(e.lo())}, {"hi", num(e.hi())}, {"f_lo", num(e.f_lo())}, {"f_hi", num(e.f_hi())}};
        out << j.dump(2) << '\n';
        err << "no root: " << e.what() << '\n';
        return kNoRoot;
    } catch (const DomainError& e) {
        out << error_json("config", e.what()).dump(2) << '\n';
        err << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        out << error_json("numeric", e.what()).dump(2) << '\n';
        err << "numeric error: " << e.what() << '\n';
        return kNumeric;
    }
}

}  // namespace adscreen::cli
