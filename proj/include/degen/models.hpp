#pragma once

// Built-in chart models.

#include <string>
#include <vector>

#include "degen/error.hpp"
#include "degen/fields.hpp"

namespace degen::models {

inline ChartModel with_name(ChartModel m, std::string name) {
    m.name = std::move(name);
    return m;
}

/// alpha = 1, beta = 0: attracting.
inline ChartModel model_a() { return with_name({}, "A"); }

/// alpha = 1, beta = 3: repelling, h(zz) = 1 - zz / sqrt(1 + zz^2).
inline ChartModel model_b() {
    ChartModel m;
    m.beta = PeriodicFn::constant(3.0);
    return with_name(m, "B");
}

/// alpha = beta = 1: neutral.
inline ChartModel model_c() {
    ChartModel m;
    m.beta = PeriodicFn::constant(1.0);
    return with_name(m, "C");
}

/// alpha = 1 + 0.5 cos y, beta = 0: attracting, not rotation invariant.
inline ChartModel model_d() {
    ChartModel m;
    m.alpha = PeriodicFn::cosine(1.0, 0.5);
    return with_name(m, "D");
}

/// alpha = 1 + 0.5 cos y, beta = 3: repelling, not rotation invariant.
inline ChartModel model_b_asym() {
    ChartModel m;
    m.alpha = PeriodicFn::cosine(1.0, 0.5);
    m.beta = PeriodicFn::constant(3.0);
    return with_name(m, "B_asym");
}

/// Boundary drift b = sin y (stationary density ~ exp(-2 cos y)) with
/// y-dependent alpha, beta.
inline ChartModel model_tilted() {
    ChartModel m;
    m.b = PeriodicFn::sine(0.0, 1.0);
    m.alpha = PeriodicFn::cosine(1.0, 0.5);
    m.beta = PeriodicFn::cosine(0.5, 0.25, 1.0);
    return with_name(m, "tilted");
}

struct CatalogEntry {
    std::string name;
    std::string description;
    ChartModel model;
};

inline std::vector<CatalogEntry> catalog() {
    return {
        {"A", "alpha=1, beta=0, a=1, rho=1", model_a()},
        {"B", "alpha=1, beta=3, a=1, rho=1", model_b()},
        {"C", "alpha=1, beta=1, a=1, rho=1", model_c()},
        {"D", "alpha=1+0.5cos y, beta=0, a=1, rho=1", model_d()},
        {"B_asym", "alpha=1+0.5cos y, beta=3, a=1, rho=1", model_b_asym()},
        {"tilted", "b=sin y, alpha=1+0.5cos y, beta=0.5+0.25cos(y-1)", model_tilted()},
    };
}

inline ChartModel by_name(const std::string& name) {
    for (auto& e : catalog())
        if (e.name == name) return e.model;
    fail(ErrorCode::ConfigError, "unknown built-in model '" + name + "'");
}

}  // namespace degen::models
