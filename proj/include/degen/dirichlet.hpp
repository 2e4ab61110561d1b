#pragma once

// The perturbed Dirichlet problem on the disk/annulus: finite differences on
// a polar grid clustered at the outer circle, Monte Carlo exit sampling, and
// the eps -> 0 convergence experiment against the half-cylinder constant.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "degen/csv.hpp"
#include "degen/disk.hpp"
#include "degen/error.hpp"
#include "degen/halfcyl.hpp"
#include "degen/parallel.hpp"
#include "degen/sparse.hpp"
#include "degen/stats.hpp"
#include "degen/stencil.hpp"

namespace degen {

/// Polar grid: n_theta angles; distance-to-boundary nodes starting with
/// first_spacing, growing by ratio up to max_spacing, then uniform.
struct DiskGrid {
    int n_theta = 128;
    double first_spacing = 5e-4;
    double ratio = 1.05;
    double max_spacing = 0.01;

    /// At least `layer_cells` cells inside z < eps.
    static DiskGrid for_eps(double eps, int n_theta = 128, int layer_cells = 20) {
        DiskGrid g;
        g.n_theta = n_theta;
        g.first_spacing = std::min(eps / 100.0, 0.01);
        // ensure the count even if the spacing cap is hit early
        if (g.cells_below(eps) < layer_cells) g.first_spacing = eps / (2.0 * layer_cells);
        return g;
    }

    void check() const {
        if (n_theta < 16 || (n_theta & (n_theta - 1)) != 0)
            fail(ErrorCode::InvalidArgument, "n_theta must be a power of two >= 16");
        if (!(first_spacing > 0.0 && ratio >= 1.0 && max_spacing >= first_spacing))
            fail(ErrorCode::InvalidArgument, "invalid radial spacing");
    }

    std::vector<double> nodes(double depth) const {
        std::vector<double> z{0.0};
        double s = first_spacing;
        while (z.back() + s < depth - 0.5 * s) {
            z.push_back(z.back() + s);
            s = std::min(s * ratio, max_spacing);
        }
        z.push_back(depth);
        return z;
    }

    int cells_below(double height) const {
        std::vector<double> z = nodes(1.0);
        return static_cast<int>(std::count_if(z.begin() + 1, z.end(), [&](double v) { return v <= height; }));
    }
};

struct ProbePoint {
    std::string name;
    AmbientPoint point;
};

inline std::vector<ProbePoint> radial_probes(const std::vector<double>& radii) {
    std::vector<ProbePoint> p;
    for (double r : radii) {
        std::ostringstream s;
        s << "r=" << r;
        p.push_back({s.str(), {r, 0.0}});
    }
    return p;
}

struct DirichletSolution {
    double eps = 0.0;
    int n_theta = 0;
    std::vector<double> z;       // nodes, z[0] = 0 (outer circle)
    std::vector<double> values;  // row-major (j, i); last row is the pole (disk) or inner circle
    bool disk = true;
    bool upwinded = false;
    std::map<std::string, double> probe_values;
    double min_value = 0.0;
    double max_value = 0.0;

    double at(int i, int j) const {
        return values[static_cast<std::size_t>(j) * static_cast<std::size_t>(n_theta) +
                      static_cast<std::size_t>(((i % n_theta) + n_theta) % n_theta)];
    }

    /// Bilinear interpolation in (theta, z).
    double value_at(const AmbientPoint& p) const {
        double r = p.norm();
        double zq = std::clamp(1.0 - r, 0.0, z.back());
        auto it = std::upper_bound(z.begin(), z.end(), zq);
        int j1 = std::clamp(static_cast<int>(it - z.begin()), 1, static_cast<int>(z.size()) - 1);
        int j0 = j1 - 1;
        double sz = (zq - z[static_cast<std::size_t>(j0)]) /
                    (z[static_cast<std::size_t>(j1)] - z[static_cast<std::size_t>(j0)]);
        double t = (r > 0.0 ? wrap_angle(std::atan2(p.x2, p.x1)) : 0.0) / (two_pi / n_theta);
        int i0 = static_cast<int>(std::floor(t));
        double st = t - i0;
        auto row = [&](int j) { return (1.0 - st) * at(i0, j) + st * at(i0 + 1, j); };
        return (1.0 - sz) * row(j0) + sz * row(j1);
    }
};

/// Second-order finite differences for L^eps u = 0 with u = psi on the outer
/// circle; the pole is one unknown equal to the mean of the first ring (the
/// interior operator is rotation invariant there); on the annulus the inner
/// circle carries Dirichlet data psi_inner.
inline DirichletSolution solve_fd(const DiskOperator& op, const PeriodicFn& psi, const DiskGrid& grid,
                                  const std::vector<ProbePoint>& probes = {},
                                  const PeriodicFn& psi_inner = PeriodicFn::constant(0.0)) {
    grid.check();
    if (!(op.eps() > 0.0)) fail(ErrorCode::InvalidEpsilon, "the Dirichlet problem needs eps > 0");
    const int nt = grid.n_theta;
    const double ht = two_pi / nt;
    const bool disk = op.domain().kind == DomainKind::Disk;
    DirichletSolution sol;
    sol.eps = op.eps();
    sol.n_theta = nt;
    sol.disk = disk;
    sol.z = grid.nodes(op.depth());
    const int N = static_cast<int>(sol.z.size()) - 1;
    if (N < 3) fail(ErrorCode::InvalidArgument, "radial grid too coarse");
    const int rings = N - 1;
    const int n_unknowns = rings * nt + (disk ? 1 : 0);
    const int pole = rings * nt;
    auto idx = [&](int i, int j) { return (j - 1) * nt + ((i % nt) + nt) % nt; };
    TripletBuilder a(n_unknowns);
    std::vector<double> rhs(static_cast<std::size_t>(n_unknowns), 0.0);
    std::vector<double> outer(static_cast<std::size_t>(nt)), inner(static_cast<std::size_t>(nt));
    for (int i = 0; i < nt; ++i) {
        outer[static_cast<std::size_t>(i)] = psi(ht * i);
        inner[static_cast<std::size_t>(i)] = psi_inner(ht * i);
    }
    for (int j = 1; j <= rings; ++j) {
        const double zj = sol.z[static_cast<std::size_t>(j)];
        const double hm = zj - sol.z[static_cast<std::size_t>(j - 1)];
        const double hp = sol.z[static_cast<std::size_t>(j + 1)] - zj;
        for (int i = 0; i < nt; ++i) {
            OperatorCoeffs c = op(ht * i, zj);
            double w[3][3] = {};
            if (detail::stencil_weights(c, ht, hm, hp, w)) sol.upwinded = true;
            const int row = idx(i, j);
            for (int di = -1; di <= 1; ++di) {
                for (int dj = -1; dj <= 1; ++dj) {
                    double wt = w[di + 1][dj + 1];
                    if (wt == 0.0) continue;
                    int jn = j + dj, in = ((i + di) % nt + nt) % nt;
                    if (jn == 0) rhs[static_cast<std::size_t>(row)] -= wt * outer[static_cast<std::size_t>(in)];
                    else if (jn == N && disk) a.add(row, pole, wt);
                    else if (jn == N) rhs[static_cast<std::size_t>(row)] -= wt * inner[static_cast<std::size_t>(in)];
                    else a.add(row, idx(in, jn), wt);
                }
            }
        }
    }
    if (disk) {
        a.add(pole, pole, 1.0);
        for (int i = 0; i < nt; ++i) a.add(pole, idx(i, rings), -1.0 / nt);
    }
    std::vector<double> x = LinearSolver(a.build()).solve(rhs, 1e-10);
    sol.values = outer;
    sol.values.insert(sol.values.end(), x.begin(), x.begin() + rings * nt);
    if (disk) sol.values.insert(sol.values.end(), static_cast<std::size_t>(nt), x[static_cast<std::size_t>(pole)]);
    else sol.values.insert(sol.values.end(), inner.begin(), inner.end());
    auto [lo, hi] = std::minmax_element(sol.values.begin(), sol.values.end());
    sol.min_value = *lo;
    sol.max_value = *hi;
    for (const auto& p : probes) sol.probe_values[p.name] = sol.value_at(p.point);
    return sol;
}

struct MonteCarloProbe {
    std::string name;
    Estimate estimate;
    std::size_t censored = 0;
    std::size_t unstable = 0;
};

/// u^eps(x) = E psi(X_tau) by path sampling; censored paths (no exit by
/// max_time) are excluded from the mean and counted.
inline std::vector<MonteCarloProbe> solve_mc(const DiskOperator& op, const PeriodicFn& psi,
                                             const std::vector<ProbePoint>& starts,
                                             const SimulationParams& params,
                                             const PeriodicFn& psi_inner = PeriodicFn::constant(0.0)) {
    params.check();
    if (!(op.eps() > 0.0)) fail(ErrorCode::InvalidEpsilon, "the Dirichlet problem needs eps > 0");
    std::vector<MonteCarloProbe> out;
    const auto n = static_cast<std::size_t>(params.n_paths);
    for (std::size_t s = 0; s < starts.size(); ++s) {
        std::vector<double> value(n, 0.0);
        std::vector<char> state(n, 0);  // 0 exited, 1 censored, 2 unstable
        parallel_for(n, params.threads, [&](std::size_t i) {
            PathRng rng(params.seed, i, 16 + s);
            DiskPathResult r =
                simulate_disk_path(op, starts[s].point, params.max_time, params.dt, params.bridge_correction, rng);
            if (r.unstable) state[i] = 2;
            else if (!r.exited) state[i] = 1;
            else value[i] = r.component == BoundaryComponent::Outer ? psi(r.exit_theta) : psi_inner(r.exit_theta);
        });
        std::vector<double> kept;
        MonteCarloProbe p;
        p.name = starts[s].name;
        for (std::size_t i = 0; i < n; ++i) {
            if (state[i] == 0) kept.push_back(value[i]);
            else if (state[i] == 1) ++p.censored;
            else ++p.unstable;
        }
        p.estimate = mean_estimate(kept);
        out.push_back(p);
    }
    return out;
}

struct ConvergenceRow {
    double eps = 0.0;
    std::string probe;
    double u_eps = 0.0;
    double ubar = 0.0;
    double error = 0.0;
    std::string method = "FD";
    double mc_stderr = 0.0;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    double ubar = 0.0;
    std::string completion;
    std::vector<std::string> non_monotone_probes;  // flagged for inspection

    /// Errors of one probe and method in eps order.
    std::vector<double> errors(const std::string& probe, const std::string& method = "FD") const {
        std::vector<double> e;
        for (const auto& r : rows)
            if (r.probe == probe && r.method == method) e.push_back(r.error);
        return e;
    }
    std::vector<double> values(const std::string& probe, const std::string& method = "FD") const {
        std::vector<double> e;
        for (const auto& r : rows)
            if (r.probe == probe && r.method == method) e.push_back(r.u_eps);
        return e;
    }
    bool monotone() const { return non_monotone_probes.empty(); }

    std::string to_csv() const;
};

/// Errors below this are roundoff and exempt from the monotonicity check.
inline constexpr double error_floor = 1e-10;

/// Aitken delta-squared limit of the last three terms (for eps halving
/// sequences with power-law approach); falls back to the last term when the
/// second difference vanishes.
inline double aitken_limit(const std::vector<double>& v) {
    if (v.size() < 3) return v.empty() ? 0.0 : v.back();
    double a = v[v.size() - 3], b = v[v.size() - 2], c = v[v.size() - 1];
    double den = a - 2.0 * b + c;
    if (std::abs(den) < 1e-14) return c;
    return c - (c - b) * (c - b) / den;
}

struct ConvergenceOptions {
    InteriorCompletion completion = InteriorCompletion::laplacian();
    DomainModel domain = DomainModel::disk();
    int n_theta = 128;
    int layer_cells = 20;
    HalfCylinderGrid halfcyl = HalfCylinderGrid::standard();
    std::optional<SimulationParams> mc;  // adds MC rows when set
    bool with_remainder = false;
};

inline ConvergenceTable convergence_experiment(const ChartModel& m, const PeriodicFn& psi,
                                               const std::vector<double>& eps_list,
                                               const std::vector<ProbePoint>& probes,
                                               const ConvergenceOptions& opt = {},
                                               std::optional<double> ubar_override = std::nullopt) {
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        if (!(eps_list[k] > 0.0)) fail(ErrorCode::InvalidEpsilon, "eps values must be positive");
        if (k > 0 && !(eps_list[k] < eps_list[k - 1]))
            fail(ErrorCode::InvalidArgument, "eps list must be strictly decreasing");
    }
    ConvergenceTable t;
    t.completion = opt.completion.name;
    t.ubar = ubar_override ? *ubar_override : solve_limit(m, psi, opt.halfcyl).ubar;
    for (double eps : eps_list) {
        DiskOperator op(m, eps, opt.completion, opt.domain, opt.with_remainder);
        DirichletSolution s = solve_fd(op, psi, DiskGrid::for_eps(eps, opt.n_theta, opt.layer_cells), probes);
        for (const auto& p : probes) {
            double v = s.probe_values.at(p.name);
            t.rows.push_back({eps, p.name, v, t.ubar, std::abs(v - t.ubar), "FD", 0.0});
        }
        if (opt.mc) {
            for (const auto& r : solve_mc(op, psi, probes, *opt.mc))
                t.rows.push_back({eps, r.name, r.estimate.mean, t.ubar, std::abs(r.estimate.mean - t.ubar), "MC",
                                  r.estimate.stderr_});
        }
    }
    for (const auto& p : probes) {
        std::vector<double> e = t.errors(p.name);
        for (std::size_t k = 1; k < e.size(); ++k)
            if (!(e[k] < e[k - 1]) && e[k] > error_floor) {
                t.non_monotone_probes.push_back(p.name);
                break;
            }
    }
    return t;
}

inline std::string ConvergenceTable::to_csv() const {
    std::string out = "eps,probe,method,u_eps,ubar,error,mc_stderr\n";
    for (const auto& r : rows)
        out += fmt_double(r.eps) + "," + r.probe + "," + r.method + "," + fmt_double(r.u_eps) + "," +
               fmt_double(r.ubar) + "," + fmt_double(r.error) + "," + fmt_double(r.mc_stderr) + "\n";
    return out;
}

}  // namespace degen
