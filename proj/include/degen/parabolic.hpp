#pragma once

// First initial-boundary value problem through the stopped process:
//   u^eps(t, x) = E[ g(X_t) 1{t < tau} + psi(X_tau) 1{tau <= t} ]
// and sweeps of t(eps) across the |ln eps| time scale.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "degen/csv.hpp"
#include "degen/disk.hpp"
#include "degen/error.hpp"
#include "degen/halfcyl.hpp"
#include "degen/parallel.hpp"
#include "degen/stats.hpp"

namespace degen {

struct StoppedProcessSpec {
    ChartModel model;
    PeriodicFn g = PeriodicFn::constant(0.0);    // initial data, as a function of the angle
    PeriodicFn psi = PeriodicFn::constant(1.0);  // boundary data on the outer circle
    InteriorCompletion completion = InteriorCompletion::laplacian();
    DomainModel domain = DomainModel::disk();
};

inline double initial_value(const StoppedProcessSpec& s, const AmbientPoint& x) {
    return s.g(x.norm() > 0.0 ? wrap_angle(std::atan2(x.x2, x.x1)) : 0.0);
}

/// eps = 0 runs the unperturbed process, which does not reach the boundary.
inline Estimate evolve_mc(const StoppedProcessSpec& spec, double eps, double t, AmbientPoint start,
                          const SimulationParams& params) {
    params.check();
    if (!(t >= 0.0)) fail(ErrorCode::InvalidArgument, "t must be >= 0");
    if (t == 0.0) {
        Estimate e;
        e.mean = initial_value(spec, start);
        e.n = static_cast<std::size_t>(params.n_paths);
        return e;
    }
    if (spec.domain.kind != DomainKind::Disk)
        fail(ErrorCode::InvalidArgument, "the stopped-process experiment is defined on the disk");
    DiskOperator op(spec.model, eps, spec.completion, spec.domain);
    const auto n = static_cast<std::size_t>(params.n_paths);
    std::vector<double> v(n, 0.0);
    std::vector<char> bad(n, 0);
    parallel_for(n, params.threads, [&](std::size_t i) {
        PathRng rng(params.seed, i, 64);
        DiskPathResult r = simulate_disk_path(op, start, t, params.dt, params.bridge_correction, rng);
        if (r.unstable) bad[i] = 1;
        else v[i] = r.exited ? spec.psi(r.exit_theta) : initial_value(spec, r.final_point);
    });
    std::vector<double> kept;
    for (std::size_t i = 0; i < n; ++i)
        if (!bad[i]) kept.push_back(v[i]);
    return mean_estimate(kept);
}

struct TimeRule {
    enum class Kind { Constant, LogEps, Power };
    Kind kind = Kind::Constant;
    double c = 1.0;  // t = c, c |ln eps| or c eps^-p
    double p = 0.0;

    static TimeRule constant(double c) { return {Kind::Constant, c, 0.0}; }
    static TimeRule log_eps(double c) { return {Kind::LogEps, c, 0.0}; }
    static TimeRule power(double c, double p) { return {Kind::Power, c, p}; }

    double time(double eps) const {
        switch (kind) {
            case Kind::Constant: return c;
            case Kind::LogEps: return c * std::abs(std::log(eps));
            case Kind::Power: return c * std::pow(eps, -p);
        }
        return c;
    }
    std::string name() const {
        switch (kind) {
            case Kind::Constant: return "const";
            case Kind::LogEps: return "log";
            case Kind::Power: return "power";
        }
        return "?";
    }
    bool operator==(const TimeRule&) const = default;
};

struct TimescaleRow {
    double eps = 0.0;
    std::string rule;
    double constant = 0.0;
    double t = 0.0;
    Estimate estimate;
    double interior_plateau = std::numeric_limits<double>::quiet_NaN();
    std::string plateau;  // "interior", "boundary" or "crossover"
};

struct TimescaleSweep {
    std::vector<TimescaleRow> rows;
    double boundary_plateau = 0.0;  // the Dirichlet limit ubar
    double plateau_slack = 0.05;

    std::string to_csv() const {
        std::string out = "eps,rule,constant,t,estimate,stderr,interior_plateau,plateau\n";
        for (const auto& r : rows)
            out += fmt_double(r.eps) + "," + r.rule + "," + fmt_double(r.constant) + "," + fmt_double(r.t) + "," +
                   fmt_double(r.estimate.mean) + "," + fmt_double(r.estimate.stderr_) + "," +
                   fmt_double(r.interior_plateau) + "," + r.plateau + "\n";
        return out;
    }
};

/// Sweeps t(eps) rules. The interior plateau of a constant-time rule is the
/// eps = 0 value at the same t; the boundary plateau is ubar for psi.
inline TimescaleSweep timescale_sweep(const StoppedProcessSpec& spec, const std::vector<double>& eps_list,
                                      const std::vector<TimeRule>& rules, AmbientPoint start,
                                      const SimulationParams& params, double plateau_slack = 0.05,
                                      const HalfCylinderGrid& grid = HalfCylinderGrid::standard()) {
    if (classify(spec.model).verdict != Verdict::Attracting)
        fail(ErrorCode::WrongRegime, "the time-scale dichotomy is asserted for attracting boundaries");
    TimescaleSweep sw;
    sw.plateau_slack = plateau_slack;
    sw.boundary_plateau = spec.psi.is_constant() ? spec.psi(0.0) : solve_u(spec.model, spec.psi, grid, false).ubar;
    for (double eps : eps_list) {
        if (!(eps > 0.0 && eps < 1.0)) fail(ErrorCode::InvalidEpsilon, "eps must lie in (0, 1)");
        for (const auto& rule : rules) {
            TimescaleRow row;
            row.eps = eps;
            row.rule = rule.name();
            row.constant = rule.c;
            row.t = rule.time(eps);
            row.estimate = evolve_mc(spec, eps, row.t, start, params);
            if (rule.kind == TimeRule::Kind::Constant)
                row.interior_plateau = evolve_mc(spec, 0.0, row.t, start, params).mean;
            double tol = 3.0 * row.estimate.stderr_ + plateau_slack;
            if (!std::isnan(row.interior_plateau) && std::abs(row.estimate.mean - row.interior_plateau) <= tol)
                row.plateau = "interior";
            else if (std::abs(row.estimate.mean - sw.boundary_plateau) <= tol)
                row.plateau = "boundary";
            else
                row.plateau = "crossover";
            sw.rows.push_back(row);
        }
    }
    return sw;
}

}  // namespace degen
