#pragma once

// Invariant measure of the boundary operator L_y, the averages of alpha and
// beta against it, the attracting/neutral/repelling verdict and the corrector.

#include <cmath>
#include <string>
#include <vector>

#include "degen/error.hpp"
#include "degen/fields.hpp"
#include "degen/geometry.hpp"
#include "degen/sparse.hpp"

namespace degen {

/// Values of a function on the uniform periodic grid y_i = 2 pi i / n,
/// evaluated off-grid by periodic Catmull-Rom (C^1) interpolation.
class PeriodicGridFn {
public:
    PeriodicGridFn() = default;
    explicit PeriodicGridFn(std::vector<double> values) : v_(std::move(values)) {}

    int size() const { return static_cast<int>(v_.size()); }
    double spacing() const { return two_pi / static_cast<double>(v_.size()); }
    double node(int i) const { return spacing() * i; }
    const std::vector<double>& values() const { return v_; }
    double operator[](int i) const { return v_[static_cast<std::size_t>(i)]; }

    double operator()(double y) const {
        const int n = size();
        double t = wrap_angle(y) / spacing();
        int i = static_cast<int>(std::floor(t));
        double s = t - i;
        auto at = [&](int k) { return v_[static_cast<std::size_t>(((k % n) + n) % n)]; };
        double p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
        return p1 + 0.5 * s * (p2 - p0 +
                               s * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
                                    s * (3.0 * (p1 - p2) + p3 - p0)));
    }

private:
    std::vector<double> v_;
};

struct InvariantMeasure {
    std::vector<double> density;
    int grid_size = 0;

    double spacing() const { return two_pi / grid_size; }

    /// Periodic trapezoid (= rectangle) rule against the density.
    template <class F>
    double integrate(F&& f) const {
        double s = 0.0;
        for (int i = 0; i < grid_size; ++i) s += f(spacing() * i) * density[static_cast<std::size_t>(i)];
        return s * spacing();
    }
    double mass() const {
        return integrate([](double) { return 1.0; });
    }
};

enum class Verdict { Attracting, Neutral, Repelling };

inline constexpr const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Attracting: return "Attracting";
        case Verdict::Neutral: return "Neutral";
        case Verdict::Repelling: return "Repelling";
    }
    return "?";
}

struct ClassificationReport {
    double alpha_bar = 0.0;
    double beta_bar = 0.0;
    Verdict verdict = Verdict::Neutral;
    InvariantMeasure measure;
    PeriodicGridFn corrector;
    double neutral_tolerance = 1e-8;
    double corrector_residual = 0.0;
};

namespace detail {

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// Central-difference generator of L_y = (a/2) d_yy + b d_y on the periodic grid.
inline SparseMatrix boundary_generator(const ChartModel& m, int n) {
    double h = two_pi / n;
    TripletBuilder t(n);
    for (int i = 0; i < n; ++i) {
        double y = h * i;
        double diff = 0.5 * m.a(y) / (h * h);
        double adv = m.b(y) / (2.0 * h);
        t.add(i, (i + 1) % n, diff + adv);
        t.add(i, (i + n - 1) % n, diff - adv);
        t.add(i, i, -2.0 * diff);
    }
    return t.build();
}

}  // namespace detail

/// Stationary density of L_y: the kernel of the transposed discrete generator,
/// which is the central discretization of (1/2)(a pi)'' - (b pi)' = 0.
inline InvariantMeasure invariant_measure(const ChartModel& m, int n_y) {
    if (n_y < 16 || !detail::is_power_of_two(n_y))
        fail(ErrorCode::InvalidArgument, "N_y must be a power of two >= 16");
    SparseMatrix g = detail::boundary_generator(m, n_y);
    SparseMatrix gt = g.transpose();
    // Replace the first equation by the normalization h * sum(pi) = 1.
    double h = two_pi / n_y;
    TripletBuilder t(n_y);
    for (int k = 0; k < gt.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(gt, k); it; ++it)
            if (it.row() != 0) t.add(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int j = 0; j < n_y; ++j) t.add(0, j, h);
    std::vector<double> rhs(static_cast<std::size_t>(n_y), 0.0);
    rhs[0] = 1.0;
    std::vector<double> pi;
    try {
        pi = LinearSolver(t.build()).solve(rhs, 1e-9);
    } catch (const Error& e) {
        fail(ErrorCode::SingularSystem, std::string("discrete adjoint kernel: ") + e.what());
    }
    for (double p : pi)
        if (!(p >= 0.0)) fail(ErrorCode::SingularSystem, "discrete stationary density not positive");
    return {std::move(pi), n_y};
}

/// Mean-zero solution of L_y psi = rhs (given on the grid), via the system
/// bordered with the constraint sum(pi psi) h = 0.
inline PeriodicGridFn solve_corrector(const ChartModel& m, const InvariantMeasure& pi,
                                      const std::vector<double>& rhs, double* residual = nullptr) {
    const int n = pi.grid_size;
    const double h = pi.spacing();
    double compat = 0.0;
    for (int i = 0; i < n; ++i) compat += rhs[static_cast<std::size_t>(i)] * pi.density[static_cast<std::size_t>(i)];
    compat *= h;
    if (std::abs(compat) > 1e-8)
        fail(ErrorCode::IncompatibleRHS,
             "right-hand side integrates to " + std::to_string(compat) + " against pi");
    SparseMatrix g = detail::boundary_generator(m, n);
    TripletBuilder t(n + 1);
    for (int k = 0; k < g.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(g, k); it; ++it)
            t.add(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int i = 0; i < n; ++i) {
        t.add(i, n, 1.0);
        t.add(n, i, h * pi.density[static_cast<std::size_t>(i)]);
    }
    std::vector<double> b(rhs.begin(), rhs.end());
    b.push_back(0.0);
    std::vector<double> x = LinearSolver(t.build()).solve(b, 1e-9);
    x.pop_back();
    if (residual) {
        Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
        Eigen::Map<const Eigen::VectorXd> bv(rhs.data(), n);
        *residual = (g * xv - bv).lpNorm<Eigen::Infinity>();
    }
    return PeriodicGridFn(std::move(x));
}

/// Corrector psi: L_y psi = alpha - beta - (alpha_bar - beta_bar), int psi dpi = 0.
inline PeriodicGridFn corrector(const ChartModel& m, const InvariantMeasure& pi,
                                double* residual = nullptr) {
    const int n = pi.grid_size;
    double abar = pi.integrate([&](double y) { return m.alpha(y); });
    double bbar = pi.integrate([&](double y) { return m.beta(y); });
    std::vector<double> rhs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double y = pi.spacing() * i;
        rhs[static_cast<std::size_t>(i)] = m.alpha(y) - m.beta(y) - (abar - bbar);
    }
    return solve_corrector(m, pi, rhs, residual);
}

inline ClassificationReport classify(const ChartModel& m, double tol = 1e-8, int n_y = 256) {
    if (!(tol > 0.0)) fail(ErrorCode::InvalidArgument, "neutral tolerance must be positive");
    ClassificationReport rep;
    rep.measure = invariant_measure(m, n_y);
    rep.alpha_bar = rep.measure.integrate([&](double y) { return m.alpha(y); });
    rep.beta_bar = rep.measure.integrate([&](double y) { return m.beta(y); });
    double gap = rep.alpha_bar - rep.beta_bar;
    rep.verdict = gap > tol ? Verdict::Attracting : (gap < -tol ? Verdict::Repelling : Verdict::Neutral);
    rep.neutral_tolerance = tol;
    rep.corrector = corrector(m, rep.measure, &rep.corrector_residual);
    return rep;
}

/// g(y, zz) = psi(y) + ln zz; the level sets g = n are the curves Gamma_n.
inline double level_value(const RescaledPoint& r, const PeriodicGridFn& psi) {
    if (!(r.zz > 0.0)) fail(ErrorCode::DegenerateInput, "level function undefined at zz <= 0");
    return psi(r.y) + std::log(r.zz);
}

inline bool on_level_set(const RescaledPoint& r, const PeriodicGridFn& psi, int n,
                         double tol = 1e-9) {
    return std::abs(level_value(r, psi) - n) < tol;
}

}  // namespace degen
