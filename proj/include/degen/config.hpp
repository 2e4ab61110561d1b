#pragma once

// Declarative experiment configuration: JSON parsing with field-path errors,
// canonical serialization and validation.

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "degen/dirichlet.hpp"
#include "degen/error.hpp"
#include "degen/fields.hpp"
#include "degen/geometry.hpp"
#include "degen/halfcyl.hpp"
#include "degen/models.hpp"
#include "degen/parabolic.hpp"
#include "degen/periodic_fn.hpp"
#include "degen/sde.hpp"

namespace degen {

using json = nlohmann::ordered_json;

inline constexpr int config_schema_version = 1;

/// A ConfigError naming the offending field path.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& msg)
        : Error(ErrorCode::ConfigError, field + ": " + msg), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct McBlock {
    double dt = 1e-3;
    int n_paths = 1000;
    double max_time = 100.0;
    bool bridge_correction = true;
    std::optional<double> outer_wall;

    bool operator==(const McBlock&) const = default;
};

enum class ExperimentKind { Classify, Halfcyl, DirichletConvergence, Attraction, Martingale, Timescale };

inline const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Classify: return "classify";
        case ExperimentKind::Halfcyl: return "halfcyl";
        case ExperimentKind::DirichletConvergence: return "dirichlet-convergence";
        case ExperimentKind::Attraction: return "attraction";
        case ExperimentKind::Martingale: return "martingale";
        case ExperimentKind::Timescale: return "timescale";
    }
    return "?";
}

struct ExperimentConfig {
    int schema_version = config_schema_version;
    std::string name = "experiment";
    std::optional<std::string> builtin;  // model given by catalog name
    ChartModel model;
    DomainModel domain = DomainModel::disk();
    ExperimentKind kind = ExperimentKind::Classify;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string output_dir = "out";

    // classify
    int n_y = 256;
    double tolerance = 1e-8;
    // halfcyl (f) / dirichlet-convergence (psi, ...) / timescale (psi, g)
    PeriodicFn f = PeriodicFn::cosine(0.0, 1.0);
    HalfCylinderGrid grid = HalfCylinderGrid::standard();
    bool truncation = true;
    std::vector<double> eps;
    std::vector<double> probe_radii{0.0, 0.2, 0.4};
    InteriorCompletion completion = InteriorCompletion::laplacian();
    int n_theta = 128;
    int layer_cells = 20;
    std::optional<McBlock> mc;
    // attraction
    std::vector<double> starts{0.3};
    double horizon = 200.0;
    double near = 0.01;
    // martingale
    double start_zz = 5.0;
    double band_lo = 1.0;
    double band_hi = 25.0;
    std::vector<double> checkpoints;
    // timescale
    PeriodicFn g = PeriodicFn::constant(0.0);
    std::vector<TimeRule> rules;
    AmbientPoint start{0.0, 0.0};

    bool operator==(const ExperimentConfig& o) const { return to_json_text() == o.to_json_text(); }
    std::string to_json_text() const;
};

namespace config_detail {

[[noreturn]] inline void bad(const std::string& field, const std::string& msg) { throw ConfigError(field, msg); }

inline const json& need(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) bad(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) bad(path.empty() ? key : path + "." + key, "missing required field");
    return *it;
}

inline std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

inline double number(const json& v, const std::string& path) {
    if (!v.is_number()) bad(path, "expected a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) bad(path, "must be finite");
    return d;
}

inline int integer(const json& v, const std::string& path) {
    if (!v.is_number_integer()) bad(path, "expected an integer");
    return v.get<int>();
}

inline std::vector<double> numbers(const json& v, const std::string& path) {
    if (!v.is_array()) bad(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k) out.push_back(number(v[k], path + "[" + std::to_string(k) + "]"));
    return out;
}

template <class T, class F>
void opt(const json& j, const std::string& key, const std::string& path, T& target, F&& conv) {
    auto it = j.find(key);
    if (it != j.end()) target = conv(*it, join(path, key));
}

/// "const c" | "cosine mean m amp s phase p" | number | {"fourier": [[k, c, s], ...]}
inline PeriodicFn parse_fn(const json& v, const std::string& path) {
    if (v.is_number()) return PeriodicFn::constant(number(v, path));
    if (v.is_string()) {
        std::istringstream in(v.get<std::string>());
        std::string head;
        in >> head;
        if (head == "const") {
            double c;
            if (!(in >> c)) bad(path, "expected 'const <value>'");
            return PeriodicFn::constant(c);
        }
        if (head == "cosine") {
            double m = 0, s = 0, p = 0;
            std::string key;
            bool have_m = false, have_s = false;
            while (in >> key) {
                double val;
                if (!(in >> val)) bad(path, "missing value after '" + key + "'");
                if (key == "mean") { m = val; have_m = true; }
                else if (key == "amp") { s = val; have_s = true; }
                else if (key == "phase") p = val;
                else bad(path, "unknown cosine parameter '" + key + "'");
            }
            if (!have_m || !have_s) bad(path, "cosine needs 'mean' and 'amp'");
            return PeriodicFn::cosine(m, s, p);
        }
        bad(path, "unknown function form '" + head + "'");
    }
    if (v.is_object() && v.contains("fourier")) {
        const json& t = v["fourier"];
        if (!t.is_array()) bad(path + ".fourier", "expected an array of [k, cos, sin]");
        std::vector<FourierTerm> terms;
        for (std::size_t k = 0; k < t.size(); ++k) {
            std::string p = path + ".fourier[" + std::to_string(k) + "]";
            if (!t[k].is_array() || t[k].size() != 3) bad(p, "expected [k, cos, sin]");
            int wave = integer(t[k][0], p + "[0]");
            if (wave < 0) bad(p + "[0]", "wavenumber must be >= 0");
            terms.push_back({wave, number(t[k][1], p + "[1]"), number(t[k][2], p + "[2]")});
        }
        return PeriodicFn::fourier(std::move(terms));
    }
    bad(path, "expected a coefficient function");
}

inline json dump_fn(const PeriodicFn& f) {
    return std::visit(
        [](const auto& r) -> json {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, PeriodicFn::Const>) {
                return "const " + fmt_double(r.c);
            } else if constexpr (std::is_same_v<T, PeriodicFn::Cosine>) {
                return "cosine mean " + fmt_double(r.mean) + " amp " + fmt_double(r.amp) + " phase " +
                       fmt_double(r.phase);
            } else {
                json terms = json::array();
                for (const auto& t : r.terms) terms.push_back(json::array({t.k, t.cos_coeff, t.sin_coeff}));
                return json{{"fourier", terms}};
            }
        },
        f.representation());
}

inline ChartModel parse_chart(const json& j, const std::string& path) {
    if (!j.is_object()) bad(path, "expected an object");
    ChartModel m;
    opt(j, "name", path, m.name, [](const json& v, const std::string& p) {
        if (!v.is_string()) bad(p, "expected a string");
        return v.get<std::string>();
    });
    opt(j, "a", path, m.a, parse_fn);
    opt(j, "b", path, m.b, parse_fn);
    opt(j, "alpha", path, m.alpha, parse_fn);
    opt(j, "beta", path, m.beta, parse_fn);
    opt(j, "d", path, m.d, parse_fn);
    opt(j, "rho", path, m.rho, parse_fn);
    if (j.contains("perturbation")) {
        const json& p = j["perturbation"];
        std::string pp = join(path, "perturbation");
        if (!p.is_object()) bad(pp, "expected an object");
        opt(p, "a_yy", pp, m.perturbation.a_yy, parse_fn);
        opt(p, "a_yz", pp, m.perturbation.a_yz, parse_fn);
        opt(p, "zz_growth", pp, m.perturbation.zz_growth, number);
        opt(p, "b_y", pp, m.perturbation.b_y, parse_fn);
        opt(p, "b_z", pp, m.perturbation.b_z, parse_fn);
    }
    if (j.contains("remainder")) {
        const json& r = j["remainder"];
        std::string rp = join(path, "remainder");
        if (!r.is_object()) bad(rp, "expected an object");
        Remainder rem;
        opt(r, "k2", rp, rem.k2, parse_fn);
        opt(r, "k1", rp, rem.k1, parse_fn);
        opt(r, "n1", rp, rem.n1, parse_fn);
        opt(r, "n0", rp, rem.n0, parse_fn);
        opt(r, "sigma", rp, rem.sigma, parse_fn);
        m.remainder = rem;
    }
    return m;
}

inline json dump_chart(const ChartModel& m) {
    json j;
    j["name"] = m.name;
    j["a"] = dump_fn(m.a);
    j["b"] = dump_fn(m.b);
    j["alpha"] = dump_fn(m.alpha);
    j["beta"] = dump_fn(m.beta);
    j["d"] = dump_fn(m.d);
    j["rho"] = dump_fn(m.rho);
    j["perturbation"] = {{"a_yy", dump_fn(m.perturbation.a_yy)},
                         {"a_yz", dump_fn(m.perturbation.a_yz)},
                         {"zz_growth", m.perturbation.zz_growth},
                         {"b_y", dump_fn(m.perturbation.b_y)},
                         {"b_z", dump_fn(m.perturbation.b_z)}};
    if (m.remainder) {
        const Remainder& r = *m.remainder;
        j["remainder"] = {{"k2", dump_fn(r.k2)}, {"k1", dump_fn(r.k1)}, {"n1", dump_fn(r.n1)},
                          {"n0", dump_fn(r.n0)}, {"sigma", dump_fn(r.sigma)}};
    }
    return j;
}

inline McBlock parse_mc(const json& j, const std::string& path) {
    if (!j.is_object()) bad(path, "expected an object");
    McBlock mc;
    mc.dt = number(need(j, "dt", path), join(path, "dt"));
    mc.n_paths = integer(need(j, "n_paths", path), join(path, "n_paths"));
    opt(j, "max_time", path, mc.max_time, number);
    opt(j, "bridge_correction", path, mc.bridge_correction, [](const json& v, const std::string& p) {
        if (!v.is_boolean()) bad(p, "expected a boolean");
        return v.get<bool>();
    });
    if (j.contains("outer_wall")) mc.outer_wall = number(j["outer_wall"], join(path, "outer_wall"));
    if (!(mc.dt > 0.0 && mc.dt <= 0.1)) bad(join(path, "dt"), "must lie in (0, 0.1]");
    if (mc.n_paths < 1 || mc.n_paths > 100000000) bad(join(path, "n_paths"), "must lie in [1, 1e8]");
    if (!(mc.max_time > 0.0)) bad(join(path, "max_time"), "must be positive");
    if (mc.outer_wall && !(*mc.outer_wall > 0.0)) bad(join(path, "outer_wall"), "must be positive");
    return mc;
}

inline json dump_mc(const McBlock& mc) {
    json j{{"dt", mc.dt}, {"n_paths", mc.n_paths}, {"max_time", mc.max_time},
           {"bridge_correction", mc.bridge_correction}};
    if (mc.outer_wall) j["outer_wall"] = *mc.outer_wall;
    return j;
}

inline HalfCylinderGrid parse_grid(const json& j, const std::string& path) {
    if (!j.is_object()) bad(path, "expected an object");
    HalfCylinderGrid g = HalfCylinderGrid::standard();
    opt(j, "n_y", path, g.n_y, integer);
    opt(j, "n_z", path, g.n_z, integer);
    opt(j, "Z", path, g.Z, number);
    if (j.contains("stretching")) {
        const json& s = j["stretching"];
        if (s == "uniform") {
            g.stretching = Stretching::Uniform;
            g.ratio = 1.0;
        } else if (s == "geometric") {
            g.stretching = Stretching::Geometric;
        } else {
            bad(join(path, "stretching"), "expected 'uniform' or 'geometric'");
        }
    }
    opt(j, "ratio", path, g.ratio, number);
    if (g.n_y < 32 || (g.n_y & (g.n_y - 1)) != 0) bad(join(path, "n_y"), "must be a power of two >= 32");
    if (g.n_z < 100) bad(join(path, "n_z"), "must be >= 100");
    if (!(g.Z >= 5.0)) bad(join(path, "Z"), "must be >= 5");
    if (g.stretching == Stretching::Geometric && !(g.ratio > 1.0)) bad(join(path, "ratio"), "must exceed 1");
    return g;
}

inline json dump_grid(const HalfCylinderGrid& g) {
    return {{"n_y", g.n_y}, {"n_z", g.n_z}, {"Z", g.Z},
            {"stretching", g.stretching == Stretching::Uniform ? "uniform" : "geometric"}, {"ratio", g.ratio}};
}

inline InteriorCompletion parse_completion(const json& v, const std::string& path) {
    if (v.is_string()) {
        if (v == "laplacian") return InteriorCompletion::laplacian();
        if (v == "rotating") return InteriorCompletion::rotating();
        bad(path, "unknown completion '" + v.get<std::string>() + "'");
    }
    if (!v.is_object()) bad(path, "expected a completion name or object");
    InteriorCompletion c;
    opt(v, "name", path, c.name, [](const json& x, const std::string& p) {
        if (!x.is_string()) bad(p, "expected a string");
        return x.get<std::string>();
    });
    opt(v, "scale", path, c.scale, number);
    opt(v, "omega", path, c.omega, number);
    opt(v, "blend_lo", path, c.blend_lo, number);
    opt(v, "blend_hi", path, c.blend_hi, number);
    if (!(c.scale > 0.0)) bad(join(path, "scale"), "must be positive");
    if (!(c.blend_lo > 0.0 && c.blend_lo < c.blend_hi)) bad(join(path, "blend_lo"), "need 0 < blend_lo < blend_hi");
    return c;
}

inline json dump_completion(const InteriorCompletion& c) {
    return {{"name", c.name}, {"scale", c.scale}, {"omega", c.omega}, {"blend_lo", c.blend_lo},
            {"blend_hi", c.blend_hi}};
}

inline ExperimentKind parse_kind(const json& v, const std::string& path) {
    if (!v.is_string()) bad(path, "expected a string");
    for (auto k : {ExperimentKind::Classify, ExperimentKind::Halfcyl, ExperimentKind::DirichletConvergence,
                   ExperimentKind::Attraction, ExperimentKind::Martingale, ExperimentKind::Timescale})
        if (v == to_string(k)) return k;
    bad(path, "unknown experiment kind '" + v.get<std::string>() + "'");
}

inline void check_eps_list(const std::vector<double>& eps, const std::string& path, double upper) {
    if (eps.empty()) bad(path, "must not be empty");
    for (std::size_t k = 0; k < eps.size(); ++k) {
        std::string p = path + "[" + std::to_string(k) + "]";
        if (!(eps[k] > 0.0 && eps[k] < upper)) bad(p, "eps must lie in (0, " + fmt_double(upper) + ")");
        if (k > 0 && !(eps[k] < eps[k - 1])) bad(p, "eps list must be strictly decreasing");
    }
}

inline McBlock require_mc(const json& e, const std::string& path) {
    return parse_mc(need(e, "mc", path), join(path, "mc"));
}

}  // namespace config_detail

inline ExperimentConfig parse_config(const json& j) {
    using namespace config_detail;
    if (!j.is_object()) bad("", "config must be a JSON object");
    ExperimentConfig c;
    c.schema_version = integer(need(j, "schema_version", ""), "schema_version");
    if (c.schema_version != config_schema_version)
        bad("schema_version", "unsupported schema version " + std::to_string(c.schema_version));
    opt(j, "name", "", c.name, [](const json& v, const std::string& p) {
        if (!v.is_string() || v.get<std::string>().empty()) bad(p, "expected a non-empty string");
        return v.get<std::string>();
    });
    const json& seed = need(j, "seed", "");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
        bad("seed", "expected a non-negative integer");
    c.seed = seed.get<std::uint64_t>();
    opt(j, "threads", "", c.threads, integer);
    if (c.threads < 1 || c.threads > 256) bad("threads", "must lie in [1, 256]");
    opt(j, "output_dir", "", c.output_dir, [](const json& v, const std::string& p) {
        if (!v.is_string() || v.get<std::string>().empty()) bad(p, "expected a non-empty string");
        return v.get<std::string>();
    });

    const json& model = need(j, "model", "");
    if (!model.is_object()) bad("model", "expected an object");
    if (model.contains("builtin")) {
        if (!model["builtin"].is_string()) bad("model.builtin", "expected a string");
        c.builtin = model["builtin"].get<std::string>();
        try {
            c.model = models::by_name(*c.builtin);
        } catch (const Error&) {
            bad("model.builtin", "unknown built-in model '" + *c.builtin + "'");
        }
    } else {
        c.model = parse_chart(need(model, "chart", "model"), "model.chart");
    }
    ValidationReport rep = validate(c.model);
    if (!rep.ok()) {
        const Violation& v = rep.violations[0];
        std::string field = "model.chart";
        if (v.assumption == "a") field += ".a";
        else if (v.assumption == "generic") field += ".alpha";
        else if (v.assumption == "c") field += v.z == 0.0 ? ".rho" : ".perturbation";
        bad(c.builtin ? "model.builtin" : field, "assumption (" + v.assumption + ") violated: " + v.message);
    }

    if (j.contains("domain")) {
        const json& d = j["domain"];
        if (!d.is_object()) bad("domain", "expected an object");
        std::string kind = "disk";
        opt(d, "kind", "domain", kind, [](const json& v, const std::string& p) {
            if (v != "disk" && v != "annulus") bad(p, "expected 'disk' or 'annulus'");
            return v.get<std::string>();
        });
        double cr = 0.5, ri = 0.0;
        opt(d, "chart_radius", "domain", cr, number);
        opt(d, "inner_radius", "domain", ri, number);
        if (!(cr > 0.0 && cr < 1.0)) bad("domain.chart_radius", "must lie in (0, 1)");
        if (kind == "annulus") {
            if (!(ri > 0.0 && ri < 1.0)) bad("domain.inner_radius", "must lie in (0, 1)");
            if (!(cr < 0.5 * (1.0 - ri))) bad("domain.chart_radius", "must be below half the annulus width");
            c.domain = DomainModel::annulus(ri, cr);
        } else {
            c.domain = DomainModel::disk(cr);
        }
    }

    const json& e = need(j, "experiment", "");
    if (!e.is_object()) bad("experiment", "expected an object");
    const std::string ep = "experiment";
    c.kind = parse_kind(need(e, "kind", ep), "experiment.kind");
    switch (c.kind) {
        case ExperimentKind::Classify:
            opt(e, "n_y", ep, c.n_y, integer);
            opt(e, "tolerance", ep, c.tolerance, number);
            if (c.n_y < 16 || (c.n_y & (c.n_y - 1)) != 0) bad("experiment.n_y", "must be a power of two >= 16");
            if (!(c.tolerance > 0.0)) bad("experiment.tolerance", "must be positive");
            break;
        case ExperimentKind::Halfcyl:
            opt(e, "f", ep, c.f, parse_fn);
            if (e.contains("grid")) c.grid = parse_grid(e["grid"], "experiment.grid");
            opt(e, "truncation", ep, c.truncation, [](const json& v, const std::string& p) {
                if (!v.is_boolean()) bad(p, "expected a boolean");
                return v.get<bool>();
            });
            break;
        case ExperimentKind::DirichletConvergence:
            c.eps = numbers(need(e, "eps", ep), "experiment.eps");
            check_eps_list(c.eps, "experiment.eps", 1.0);
            opt(e, "psi", ep, c.f, parse_fn);
            opt(e, "probes", ep, c.probe_radii, numbers);
            for (std::size_t k = 0; k < c.probe_radii.size(); ++k)
                if (!(c.probe_radii[k] >= 0.0 && c.probe_radii[k] <= 1.0 - c.domain.chart_radius))
                    bad("experiment.probes[" + std::to_string(k) + "]",
                        "probe radius must lie in [0, 1 - chart_radius]");
            if (e.contains("completion")) c.completion = parse_completion(e["completion"], "experiment.completion");
            if (c.completion.blend_hi > c.domain.chart_radius)
                bad("experiment.completion.blend_hi", "must not exceed the chart radius");
            opt(e, "n_theta", ep, c.n_theta, integer);
            if (c.n_theta < 16 || (c.n_theta & (c.n_theta - 1)) != 0)
                bad("experiment.n_theta", "must be a power of two >= 16");
            opt(e, "layer_cells", ep, c.layer_cells, integer);
            if (c.layer_cells < 1) bad("experiment.layer_cells", "must be >= 1");
            if (e.contains("grid")) c.grid = parse_grid(e["grid"], "experiment.grid");
            if (e.contains("mc")) c.mc = parse_mc(e["mc"], "experiment.mc");
            break;
        case ExperimentKind::Attraction:
            c.starts = numbers(need(e, "starts", ep), "experiment.starts");
            for (std::size_t k = 0; k < c.starts.size(); ++k)
                if (!(c.starts[k] >= 0.0)) bad("experiment.starts[" + std::to_string(k) + "]", "must be >= 0");
            c.horizon = number(need(e, "horizon", ep), "experiment.horizon");
            if (!(c.horizon > 0.0)) bad("experiment.horizon", "must be positive");
            opt(e, "near", ep, c.near, number);
            if (!(c.near > 0.0)) bad("experiment.near", "must be positive");
            c.mc = require_mc(e, ep);
            break;
        case ExperimentKind::Martingale: {
            c.start_zz = number(need(e, "start_zz", ep), "experiment.start_zz");
            std::vector<double> band = numbers(need(e, "band", ep), "experiment.band");
            if (band.size() != 2) bad("experiment.band", "expected [lo, hi]");
            c.band_lo = band[0];
            c.band_hi = band[1];
            if (!(c.band_lo > 0.0 && c.band_lo < c.start_zz && c.start_zz < c.band_hi))
                bad("experiment.band", "need 0 < lo < start_zz < hi");
            c.checkpoints = numbers(need(e, "checkpoints", ep), "experiment.checkpoints");
            for (std::size_t k = 0; k < c.checkpoints.size(); ++k) {
                std::string p = "experiment.checkpoints[" + std::to_string(k) + "]";
                if (!(c.checkpoints[k] > 0.0)) bad(p, "must be positive");
                if (k > 0 && !(c.checkpoints[k] > c.checkpoints[k - 1])) bad(p, "must be increasing");
            }
            c.mc = require_mc(e, ep);
            break;
        }
        case ExperimentKind::Timescale: {
            c.eps = numbers(need(e, "eps", ep), "experiment.eps");
            check_eps_list(c.eps, "experiment.eps", 1.0);
            opt(e, "psi", ep, c.f, parse_fn);
            opt(e, "g", ep, c.g, parse_fn);
            const json& rules = need(e, "rules", ep);
            if (!rules.is_array() || rules.empty()) bad("experiment.rules", "expected a non-empty array");
            for (std::size_t k = 0; k < rules.size(); ++k) {
                std::string p = "experiment.rules[" + std::to_string(k) + "]";
                const json& r = rules[k];
                std::string kind;
                if (!r.is_object() || !r.contains("kind") || !r["kind"].is_string()) bad(p + ".kind", "missing rule kind");
                kind = r["kind"].get<std::string>();
                double cc = number(need(r, "c", p), p + ".c");
                if (!(cc > 0.0)) bad(p + ".c", "must be positive");
                if (kind == "const") c.rules.push_back(TimeRule::constant(cc));
                else if (kind == "log") c.rules.push_back(TimeRule::log_eps(cc));
                else if (kind == "power") {
                    double pw = number(need(r, "p", p), p + ".p");
                    if (!(pw > 0.0)) bad(p + ".p", "must be positive");
                    c.rules.push_back(TimeRule::power(cc, pw));
                } else
                    bad(p + ".kind", "expected 'const', 'log' or 'power'");
            }
            if (e.contains("start")) {
                std::vector<double> s = numbers(e["start"], "experiment.start");
                if (s.size() != 2) bad("experiment.start", "expected [x1, x2]");
                c.start = {s[0], s[1]};
                if (!(c.start.norm() < 1.0)) bad("experiment.start", "must lie inside the disk");
            }
            if (e.contains("completion")) c.completion = parse_completion(e["completion"], "experiment.completion");
            c.mc = require_mc(e, ep);
            break;
        }
    }
    return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<document>", std::string("malformed JSON at byte ") + std::to_string(e.byte));
    }
    return parse_config(j);
}

inline json to_json(const ExperimentConfig& c) {
    using namespace config_detail;
    json j;
    j["schema_version"] = c.schema_version;
    j["name"] = c.name;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["output_dir"] = c.output_dir;
    if (c.builtin) j["model"] = {{"builtin", *c.builtin}};
    else j["model"] = {{"chart", dump_chart(c.model)}};
    json d{{"kind", c.domain.kind == DomainKind::Disk ? "disk" : "annulus"}, {"chart_radius", c.domain.chart_radius}};
    if (c.domain.kind == DomainKind::Annulus) d["inner_radius"] = c.domain.inner_radius;
    j["domain"] = d;
    json e;
    e["kind"] = to_string(c.kind);
    switch (c.kind) {
        case ExperimentKind::Classify:
            e["n_y"] = c.n_y;
            e["tolerance"] = c.tolerance;
            break;
        case ExperimentKind::Halfcyl:
            e["f"] = dump_fn(c.f);
            e["grid"] = dump_grid(c.grid);
            e["truncation"] = c.truncation;
            break;
        case ExperimentKind::DirichletConvergence:
            e["eps"] = c.eps;
            e["psi"] = dump_fn(c.f);
            e["probes"] = c.probe_radii;
            e["completion"] = dump_completion(c.completion);
            e["n_theta"] = c.n_theta;
            e["layer_cells"] = c.layer_cells;
            e["grid"] = dump_grid(c.grid);
            if (c.mc) e["mc"] = dump_mc(*c.mc);
            break;
        case ExperimentKind::Attraction:
            e["starts"] = c.starts;
            e["horizon"] = c.horizon;
            e["near"] = c.near;
            e["mc"] = dump_mc(*c.mc);
            break;
        case ExperimentKind::Martingale:
            e["start_zz"] = c.start_zz;
            e["band"] = {c.band_lo, c.band_hi};
            e["checkpoints"] = c.checkpoints;
            e["mc"] = dump_mc(*c.mc);
            break;
        case ExperimentKind::Timescale: {
            e["eps"] = c.eps;
            e["psi"] = dump_fn(c.f);
            e["g"] = dump_fn(c.g);
            json rules = json::array();
            for (const auto& r : c.rules) {
                json rr{{"kind", r.name()}, {"c", r.c}};
                if (r.kind == TimeRule::Kind::Power) rr["p"] = r.p;
                rules.push_back(rr);
            }
            e["rules"] = rules;
            e["start"] = {c.start.x1, c.start.x2};
            e["completion"] = dump_completion(c.completion);
            e["mc"] = dump_mc(*c.mc);
            break;
        }
    }
    j["experiment"] = e;
    return j;
}

inline std::string ExperimentConfig::to_json_text() const { return to_json(*this).dump(2) + "\n"; }

}  // namespace degen
