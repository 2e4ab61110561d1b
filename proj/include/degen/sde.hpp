#pragma once

// Euler-Maruyama path engine for the chart-coordinate processes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "degen/classifier.hpp"
#include "degen/error.hpp"
#include "degen/fields.hpp"
#include "degen/geometry.hpp"
#include "degen/parallel.hpp"
#include "degen/rng.hpp"
#include "degen/stats.hpp"

namespace degen {

enum class WallPolicy { AbsorbAtZero, StopAtOuterWall, Both };

struct SimulationParams {
    double dt = 1e-3;
    std::uint64_t seed = 1;
    int n_paths = 1000;
    double max_time = 100.0;
    WallPolicy wall_policy = WallPolicy::AbsorbAtZero;
    double outer_wall = std::numeric_limits<double>::infinity();
    int threads = 1;
    /// Brownian-bridge test for crossings of the absorbing level inside a step.
    bool bridge_correction = true;

    bool absorbs() const { return wall_policy != WallPolicy::StopAtOuterWall; }
    bool has_wall() const { return wall_policy != WallPolicy::AbsorbAtZero; }

    void check() const {
        if (!(dt > 0.0)) fail(ErrorCode::InvalidArgument, "dt must be positive");
        if (n_paths < 1) fail(ErrorCode::InvalidArgument, "n_paths must be >= 1");
        if (!(max_time >= 0.0)) fail(ErrorCode::InvalidArgument, "max_time must be >= 0");
        if (has_wall()) {
            if (!(outer_wall > 0.0 && std::isfinite(outer_wall)))
                fail(ErrorCode::InvalidArgument, "outer wall must be a positive finite level");
            if (dt > 1e-2 * std::min(1.0, outer_wall * outer_wall))
                fail(ErrorCode::InvalidArgument, "dt too large for the outer wall resolution");
        }
    }
};

enum class PathOutcome : std::uint8_t { Exited, CensoredTime, CensoredWall, Unstable };

struct ExitSampleBatch {
    std::vector<double> exit_y;     // NaN unless exited
    std::vector<double> exit_time;  // stopping or censoring time
    std::vector<PathOutcome> outcome;
    int n_paths = 0;
    std::uint64_t seed = 0;

    bool exited(std::size_t i) const { return outcome[i] == PathOutcome::Exited; }
    std::size_t count(PathOutcome o) const {
        return static_cast<std::size_t>(std::count(outcome.begin(), outcome.end(), o));
    }
    Estimate exit_fraction() const {
        return fraction_estimate(count(PathOutcome::Exited), static_cast<std::size_t>(n_paths));
    }
    /// Mean of f(exit_y) over exited paths (the conditional exit law).
    template <class F>
    Estimate conditional_mean(F&& f) const {
        std::vector<double> v;
        for (std::size_t i = 0; i < outcome.size(); ++i)
            if (exited(i)) v.push_back(f(exit_y[i]));
        return mean_estimate(v);
    }
    /// Normalized histogram (density in y) of exited locations, with per-bin
    /// binomial standard errors.
    void histogram(int n_bins, std::vector<double>& density, std::vector<double>& stderr_) const {
        std::vector<std::size_t> counts(static_cast<std::size_t>(n_bins), 0);
        std::size_t total = 0;
        for (std::size_t i = 0; i < outcome.size(); ++i) {
            if (!exited(i)) continue;
            int b = static_cast<int>(wrap_angle(exit_y[i]) / two_pi * n_bins);
            counts[static_cast<std::size_t>(std::min(b, n_bins - 1))]++;
            ++total;
        }
        double width = two_pi / n_bins;
        density.assign(static_cast<std::size_t>(n_bins), 0.0);
        stderr_.assign(static_cast<std::size_t>(n_bins), 0.0);
        if (total == 0) return;
        for (int b = 0; b < n_bins; ++b) {
            Estimate e = fraction_estimate(counts[static_cast<std::size_t>(b)], total);
            density[static_cast<std::size_t>(b)] = e.mean / width;
            stderr_[static_cast<std::size_t>(b)] = e.stderr_ / width;
        }
    }
};

namespace detail {

struct Increment {
    double d1 = 0.0;
    double d2 = 0.0;
    bool unstable = false;
};

/// One Euler-Maruyama increment for generator coefficients c (covariance 2A).
inline Increment em_increment(const OperatorCoeffs& c, double dt, double sqdt, PathRng& rng) {
    double s11 = 2.0 * c.a11, s12 = 2.0 * c.a12, s22 = 2.0 * c.a22;
    double l11 = s11 > 0.0 ? std::sqrt(s11) : 0.0;
    double l21 = l11 > 0.0 ? s12 / l11 : 0.0;
    double l22 = std::sqrt(std::max(0.0, s22 - l21 * l21));
    double g1 = rng.normal(), g2 = rng.normal();
    Increment inc;
    inc.d1 = c.b1 * dt + sqdt * l11 * g1;
    inc.d2 = c.b2 * dt + sqdt * (l21 * g1 + l22 * g2);
    double max_diff = s11 + s22;
    double max_drift = std::max(std::abs(c.b1), std::abs(c.b2));
    double guard = 10.0 * std::sqrt(dt * max_diff) + 10.0 * dt * max_drift;
    inc.unstable = !(std::isfinite(inc.d1) && std::isfinite(inc.d2)) ||
                   std::abs(inc.d1) > guard || std::abs(inc.d2) > guard;
    return inc;
}

/// Probability that a Brownian bridge from s0 > 0 to s1 > 0 over dt with
/// variance rate var touched zero.
inline double bridge_hit_probability(double s0, double s1, double var, double dt) {
    if (!(var > 0.0)) return 0.0;
    return std::exp(-2.0 * s0 * s1 / (var * dt));
}

}  // namespace detail

/// Exit sampling for any chart flavor with state (y, s). Absorption when s
/// reaches 0 (linear interpolation of time and angle within the crossing
/// step; a bridge-detected crossing is placed at the step midpoint).
inline ExitSampleBatch simulate(const GeneratorCoefficients& gc, double start_y, double start_s,
                                const SimulationParams& params) {
    params.check();
    const bool absorbs = params.absorbs() && gc.absorbs_at_zero();
    if (gc.absorbs_at_zero() && !(start_s >= 0.0))
        fail(ErrorCode::InvalidArgument, "start must lie in the state space (s >= 0)");
    ExitSampleBatch out;
    const auto n = static_cast<std::size_t>(params.n_paths);
    out.exit_y.assign(n, std::numeric_limits<double>::quiet_NaN());
    out.exit_time.assign(n, 0.0);
    out.outcome.assign(n, PathOutcome::CensoredTime);
    out.n_paths = params.n_paths;
    out.seed = params.seed;
    const double dt = params.dt, sqdt = std::sqrt(dt);
    const auto n_steps = static_cast<std::int64_t>(std::ceil(params.max_time / dt - 1e-9));

    parallel_for(n, params.threads, [&](std::size_t i) {
        PathRng rng(params.seed, i);
        double y = wrap_angle(start_y), s = start_s, t = 0.0;
        if (absorbs && s <= 0.0) {
            out.exit_y[i] = y;
            out.outcome[i] = PathOutcome::Exited;
            return;
        }
        for (std::int64_t k = 0; k < n_steps; ++k) {
            OperatorCoeffs c = gc(y, s);
            detail::Increment inc = detail::em_increment(c, dt, sqdt, rng);
            if (inc.unstable) {
                out.outcome[i] = PathOutcome::Unstable;
                out.exit_time[i] = t;
                return;
            }
            double s_new = s + inc.d2;
            if (absorbs) {
                if (s_new <= 0.0) {
                    double lam = s / (s - s_new);
                    out.exit_y[i] = wrap_angle(y + lam * inc.d1);
                    out.exit_time[i] = t + lam * dt;
                    out.outcome[i] = PathOutcome::Exited;
                    return;
                }
                if (params.bridge_correction) {
                    double p = detail::bridge_hit_probability(s, s_new, 2.0 * c.a22, dt);
                    if (p > 1e-12 && rng.uniform() < p) {
                        out.exit_y[i] = wrap_angle(y + 0.5 * inc.d1);
                        out.exit_time[i] = t + 0.5 * dt;
                        out.outcome[i] = PathOutcome::Exited;
                        return;
                    }
                }
            }
            y = wrap_angle(y + inc.d1);
            s = s_new;
            t = (k + 1) * dt;
            if (params.has_wall() && s >= params.outer_wall) {
                out.outcome[i] = PathOutcome::CensoredWall;
                out.exit_time[i] = t;
                return;
            }
        }
        out.exit_time[i] = t;
    });
    return out;
}

struct BoundaryOccupation {
    std::vector<double> density;         // mean occupation density per bin
    std::vector<double> density_stderr;  // across independent chains
    Estimate alpha_average;
    Estimate beta_average;
    double total_time = 0.0;
};

/// The process on S with generator L_y; n_paths independent chains, each run
/// for burn_in + max_time, accumulate occupation and time-averages of alpha, beta.
inline BoundaryOccupation simulate_boundary(const ChartModel& m, double start_y,
                                            const SimulationParams& params, int n_bins = 32,
                                            double burn_in = 10.0) {
    params.check();
    const auto n = static_cast<std::size_t>(params.n_paths);
    const double dt = params.dt, sqdt = std::sqrt(dt);
    const auto burn_steps = static_cast<std::int64_t>(std::ceil(burn_in / dt - 1e-9));
    const auto n_steps = static_cast<std::int64_t>(std::ceil(params.max_time / dt - 1e-9));
    std::vector<std::vector<double>> hist(n, std::vector<double>(static_cast<std::size_t>(n_bins), 0.0));
    std::vector<double> a_avg(n), b_avg(n);
    parallel_for(n, params.threads, [&](std::size_t i) {
        PathRng rng(params.seed, i, 1);
        double y = wrap_angle(start_y);
        double sa = 0.0, sb = 0.0;
        for (std::int64_t k = 0; k < burn_steps + n_steps; ++k) {
            if (k >= burn_steps) {
                int bin = std::min(n_bins - 1, static_cast<int>(y / two_pi * n_bins));
                hist[i][static_cast<std::size_t>(bin)] += 1.0;
                sa += m.alpha(y);
                sb += m.beta(y);
            }
            double diff = std::sqrt(std::max(0.0, m.a(y)));
            y = wrap_angle(y + m.b(y) * dt + sqdt * diff * rng.normal());
        }
        double width = two_pi / n_bins;
        for (double& h : hist[i]) h /= static_cast<double>(n_steps) * width;
        a_avg[i] = sa / static_cast<double>(n_steps);
        b_avg[i] = sb / static_cast<double>(n_steps);
    });
    BoundaryOccupation out;
    out.total_time = params.max_time * params.n_paths;
    out.density.resize(static_cast<std::size_t>(n_bins));
    out.density_stderr.resize(static_cast<std::size_t>(n_bins));
    std::vector<double> col(n);
    for (int b = 0; b < n_bins; ++b) {
        for (std::size_t i = 0; i < n; ++i) col[i] = hist[i][static_cast<std::size_t>(b)];
        Estimate e = mean_estimate(col);
        out.density[static_cast<std::size_t>(b)] = e.mean;
        out.density_stderr[static_cast<std::size_t>(b)] = e.stderr_;
    }
    out.alpha_average = mean_estimate(a_avg);
    out.beta_average = mean_estimate(b_avg);
    return out;
}

struct AttractionStats {
    double start_z = 0.0;
    double horizon = 0.0;
    double near_threshold = 0.01;
    Estimate fraction_near;
    std::vector<double> final_z;  // +inf for paths that escaped past the cap
    double min_z = 0.0;           // over all paths and times
    double max_z = 0.0;
    std::size_t unstable = 0;
};

/// Unperturbed chart process (eps = 0) from interior starts; the fraction of
/// paths with z(T) below near_threshold. Paths with z above escape_cap are
/// frozen as escaped.
inline std::vector<AttractionStats> attraction_stats(const ChartModel& m,
                                                     const std::vector<ChartPoint>& starts,
                                                     double horizon, const SimulationParams& params,
                                                     double near_threshold = 0.01,
                                                     bool with_remainder = false,
                                                     double escape_cap = 1e12) {
    params.check();
    GeneratorCoefficients gc = assemble(m, 0.0, Flavor::UnscaledLeps, with_remainder);
    const auto n = static_cast<std::size_t>(params.n_paths);
    const double dt = params.dt, sqdt = std::sqrt(dt);
    const auto n_steps = static_cast<std::int64_t>(std::ceil(horizon / dt - 1e-9));
    std::vector<AttractionStats> result;
    for (std::size_t s_idx = 0; s_idx < starts.size(); ++s_idx) {
        const ChartPoint start = starts[s_idx];
        if (!(start.z >= 0.0)) fail(ErrorCode::InvalidArgument, "start must have z >= 0");
        std::vector<double> final_z(n), zmin(n), zmax(n);
        std::vector<char> bad(n, 0);
        parallel_for(n, params.threads, [&](std::size_t i) {
            PathRng rng(params.seed, i, 2 + s_idx);
            double y = wrap_angle(start.y), z = start.z, lo = z, hi = z;
            for (std::int64_t k = 0; k < n_steps; ++k) {
                detail::Increment inc = detail::em_increment(gc(y, z), dt, sqdt, rng);
                if (inc.unstable) {
                    bad[i] = 1;
                    break;
                }
                y = wrap_angle(y + inc.d1);
                // The unperturbed normal dynamics vanish at z = 0; a negative
                // Euler step would be a discretization artifact, so reflect it.
                z = std::abs(z + inc.d2);
                lo = std::min(lo, z);
                hi = std::max(hi, z);
                if (z > escape_cap) {
                    z = std::numeric_limits<double>::infinity();
                    hi = z;
                    break;
                }
            }
            final_z[i] = z;
            zmin[i] = lo;
            zmax[i] = hi;
        });
        AttractionStats st;
        st.start_z = start.z;
        st.horizon = horizon;
        st.near_threshold = near_threshold;
        std::size_t near = 0, unstable = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (bad[i]) ++unstable;
            else if (final_z[i] < near_threshold) ++near;
        }
        st.fraction_near = fraction_estimate(near, n - unstable);
        st.unstable = unstable;
        st.min_z = *std::min_element(zmin.begin(), zmin.end());
        st.max_z = *std::max_element(zmax.begin(), zmax.end());
        st.final_z = std::move(final_z);
        result.push_back(std::move(st));
    }
    return result;
}

struct MartingaleTrace {
    std::vector<double> times;
    std::vector<Estimate> values;  // E[h_{t ^ sigma}]
    std::vector<Estimate> raw;     // E[psi(Y) + ln Z] at the same (stopped) times
    double initial_value = 0.0;
    double stopped_fraction = 0.0;
};

/// h_t = psi(Y_t) + ln Z_t + int_0^t rho(Y) Z^-2 ds + (alpha_bar - beta_bar) t
/// for the limit process, simulated in log coordinates (y, w = ln zz) and
/// stopped at the first time step at which zz has left [band_lo, band_hi].
inline MartingaleTrace martingale_trace(const ChartModel& m, const ClassificationReport& cls,
                                        RescaledPoint start, const SimulationParams& params,
                                        double band_lo, double band_hi,
                                        const std::vector<double>& checkpoints) {
    params.check();
    if (!(start.zz > 0.0)) fail(ErrorCode::DegenerateInput, "martingale start needs zz > 0");
    if (!(band_lo > 0.0 && band_lo < start.zz && start.zz < band_hi))
        fail(ErrorCode::InvalidArgument, "start must lie strictly inside the band");
    if (!std::is_sorted(checkpoints.begin(), checkpoints.end()))
        fail(ErrorCode::InvalidArgument, "checkpoint times must be increasing");
    GeneratorCoefficients gc = assemble(m, 0.0, Flavor::LogChartA);
    const PeriodicGridFn& psi = cls.corrector;
    const double gap = cls.alpha_bar - cls.beta_bar;
    const double w_lo = std::log(band_lo), w_hi = std::log(band_hi);
    const auto n = static_cast<std::size_t>(params.n_paths);
    const std::size_t nc = checkpoints.size();
    const double dt = params.dt, sqdt = std::sqrt(dt);
    std::vector<double> hv(n * nc), rv(n * nc);
    std::vector<char> stopped(n, 0);
    parallel_for(n, params.threads, [&](std::size_t i) {
        PathRng rng(params.seed, i, 3);
        double y = wrap_angle(start.y), w = std::log(start.zz), integral = 0.0, t = 0.0;
        bool frozen = false;
        double h_frozen = 0.0, raw_frozen = 0.0;
        std::int64_t k = 0;
        for (std::size_t c = 0; c < nc; ++c) {
            const auto target = static_cast<std::int64_t>(std::llround(checkpoints[c] / dt));
            while (!frozen && k < target) {
                OperatorCoeffs co = gc(y, w);
                detail::Increment inc = detail::em_increment(co, dt, sqdt, rng);
                integral += m.rho(y) * std::exp(-2.0 * w) * dt;
                y = wrap_angle(y + inc.d1);
                w += inc.d2;
                ++k;
                t = k * dt;
                if (w <= w_lo || w >= w_hi || inc.unstable) {
                    frozen = true;
                    raw_frozen = psi(y) + w;
                    h_frozen = raw_frozen + integral + gap * t;
                    stopped[i] = 1;
                }
            }
            double raw = frozen ? raw_frozen : psi(y) + w;
            double h = frozen ? h_frozen : raw + integral + gap * t;
            hv[c * n + i] = h;
            rv[c * n + i] = raw;
        }
    });
    MartingaleTrace tr;
    tr.times = checkpoints;
    tr.initial_value = psi(start.y) + std::log(start.zz);
    for (std::size_t c = 0; c < nc; ++c) {
        tr.values.push_back(mean_estimate(std::span<const double>(hv).subspan(c * n, n)));
        tr.raw.push_back(mean_estimate(std::span<const double>(rv).subspan(c * n, n)));
    }
    tr.stopped_fraction = static_cast<double>(std::count(stopped.begin(), stopped.end(), 1)) /
                          static_cast<double>(n);
    return tr;
}

}  // namespace degen
