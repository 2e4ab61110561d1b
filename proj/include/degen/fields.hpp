#pragma once

// Boundary normal-form models and the generator coefficients of their
// operator flavors.
//
// All second-order coefficients are stored in generator form: the operator is
//   a11 * u_11 + 2 * a12 * u_12 + a22 * u_22 + b1 * u_1 + b2 * u_2,
// so the Ito covariance of the associated SDE is 2 * [[a11, a12], [a12, a22]].
// The first coordinate is always the boundary angle y.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "degen/error.hpp"
#include "degen/geometry.hpp"
#include "degen/periodic_fn.hpp"

namespace degen {

struct OperatorCoeffs {
    double a11 = 0.0;
    double a12 = 0.0;
    double a22 = 0.0;
    double b1 = 0.0;
    double b2 = 0.0;

    OperatorCoeffs& operator+=(const OperatorCoeffs& o) {
        a11 += o.a11; a12 += o.a12; a22 += o.a22; b1 += o.b1; b2 += o.b2;
        return *this;
    }
    friend OperatorCoeffs operator*(double s, OperatorCoeffs c) {
        c.a11 *= s; c.a12 *= s; c.a22 *= s; c.b1 *= s; c.b2 *= s;
        return c;
    }
    friend OperatorCoeffs operator+(OperatorCoeffs a, const OperatorCoeffs& b) { return a += b; }
    friend OperatorCoeffs operator-(OperatorCoeffs a, const OperatorCoeffs& b) {
        return a += (-1.0) * b;
    }

    double determinant() const { return a11 * a22 - a12 * a12; }
    bool positive_semidefinite(double tol = 0.0) const {
        return a11 >= -tol && a22 >= -tol && determinant() >= -tol;
    }
    double max_abs() const {
        return std::max({std::abs(a11), std::abs(a12), std::abs(a22), std::abs(b1), std::abs(b2)});
    }
};

/// The small non-degenerate perturbation in chart coordinates. Its zz-entry
/// is rho(y) * (1 + zz_growth * z), so it agrees with rho on the boundary.
struct Perturbation {
    PeriodicFn a_yy = PeriodicFn::constant(0.5);
    PeriodicFn a_yz = PeriodicFn::constant(0.0);
    double zz_growth = 0.0;
    PeriodicFn b_y = PeriodicFn::constant(0.0);
    PeriodicFn b_z = PeriodicFn::constant(0.0);

    bool operator==(const Perturbation&) const = default;
};

/// Higher-order terms R = z K_y u + z^2 N_y u_z + z^3 sigma u_zz with
/// K_y = k2 d_yy + k1 d_y and N_y = n1 d_y + n0.
struct Remainder {
    PeriodicFn k2 = PeriodicFn::constant(0.0);
    PeriodicFn k1 = PeriodicFn::constant(0.0);
    PeriodicFn n1 = PeriodicFn::constant(0.0);
    PeriodicFn n0 = PeriodicFn::constant(0.0);
    PeriodicFn sigma = PeriodicFn::constant(0.0);

    bool operator==(const Remainder&) const = default;
};

/// Operator in boundary normal form:
///   L = (1/2) a u_yy + b u_y + z^2 alpha u_zz + z beta u_z + z d u_yz  (+ R)
/// perturbed by eps^2 times the Perturbation operator.
struct ChartModel {
    std::string name = "custom";
    PeriodicFn a = PeriodicFn::constant(1.0);
    PeriodicFn b = PeriodicFn::constant(0.0);
    PeriodicFn alpha = PeriodicFn::constant(1.0);
    PeriodicFn beta = PeriodicFn::constant(0.0);
    PeriodicFn d = PeriodicFn::constant(0.0);
    PeriodicFn rho = PeriodicFn::constant(1.0);
    Perturbation perturbation{};
    std::optional<Remainder> remainder{};

    bool operator==(const ChartModel&) const = default;

    /// Generator coefficients of the process restricted to S (drift b, a/2).
    double boundary_diffusion(double y) const { return 0.5 * a(y); }
};

enum class Flavor { UnscaledLeps, RescaledMeps, LimitM, LogChartA };

inline constexpr const char* to_string(Flavor f) {
    switch (f) {
        case Flavor::UnscaledLeps: return "Unscaled_Leps";
        case Flavor::RescaledMeps: return "Rescaled_Meps";
        case Flavor::LimitM: return "Limit_M";
        case Flavor::LogChartA: return "LogChart_A";
    }
    return "?";
}

/// Ito-form coefficients of one operator flavor, as functions of (y, s) where
/// s is z (Unscaled), zz = z/eps (Rescaled, Limit) or w = ln zz (LogChart).
class GeneratorCoefficients {
public:
    GeneratorCoefficients(ChartModel model, Flavor flavor, double eps, bool with_remainder)
        : model_(std::move(model)), flavor_(flavor), eps_(eps), with_remainder_(with_remainder) {}

    Flavor flavor() const { return flavor_; }
    double eps() const { return eps_; }
    const ChartModel& model() const { return model_; }
    bool with_remainder() const { return with_remainder_; }

    /// Second coordinate has an absorbing boundary at 0 (false for LogChart).
    bool absorbs_at_zero() const { return flavor_ != Flavor::LogChartA; }

    OperatorCoeffs operator()(double y, double s) const {
        const ChartModel& m = model_;
        const Perturbation& p = m.perturbation;
        OperatorCoeffs c;
        switch (flavor_) {
            case Flavor::LimitM: {
                c.a11 = 0.5 * m.a(y);
                c.a12 = 0.5 * s * m.d(y);
                c.a22 = s * s * m.alpha(y) + m.rho(y);
                c.b1 = m.b(y);
                c.b2 = s * m.beta(y);
                return c;
            }
            case Flavor::LogChartA: {
                double leak = m.rho(y) * std::exp(-2.0 * s);
                double al = m.alpha(y);
                c.a11 = 0.5 * m.a(y);
                c.a12 = 0.5 * m.d(y);
                c.a22 = al + leak;
                c.b1 = m.b(y);
                c.b2 = m.beta(y) - (al + leak);
                return c;
            }
            case Flavor::UnscaledLeps: {
                double z = s;
                double e2 = eps_ * eps_;
                c.a11 = 0.5 * m.a(y) + e2 * p.a_yy(y);
                c.a12 = 0.5 * z * m.d(y) + e2 * p.a_yz(y);
                c.a22 = z * z * m.alpha(y) + e2 * m.rho(y) * (1.0 + p.zz_growth * z);
                c.b1 = m.b(y) + e2 * p.b_y(y);
                c.b2 = z * m.beta(y) + e2 * p.b_z(y);
                if (with_remainder_) {
                    const Remainder& r = *m.remainder;
                    c.a11 += z * r.k2(y);
                    c.a12 += 0.5 * z * z * r.n1(y);
                    c.a22 += z * z * z * r.sigma(y);
                    c.b1 += z * r.k1(y);
                    c.b2 += z * z * r.n0(y);
                }
                return c;
            }
            case Flavor::RescaledMeps: {
                double zz = s;
                double e = eps_;
                c.a11 = 0.5 * m.a(y) + e * e * p.a_yy(y);
                c.a12 = 0.5 * zz * m.d(y) + e * p.a_yz(y);
                c.a22 = zz * zz * m.alpha(y) + m.rho(y) * (1.0 + p.zz_growth * e * zz);
                c.b1 = m.b(y) + e * e * p.b_y(y);
                c.b2 = zz * m.beta(y) + e * p.b_z(y);
                if (with_remainder_) {
                    const Remainder& r = *m.remainder;
                    double z = e * zz;
                    c.a11 += z * r.k2(y);
                    c.a12 += 0.5 * e * zz * zz * r.n1(y);
                    c.a22 += e * zz * zz * zz * r.sigma(y);
                    c.b1 += z * r.k1(y);
                    c.b2 += e * zz * zz * r.n0(y);
                }
                return c;
            }
        }
        return c;
    }

private:
    ChartModel model_;
    Flavor flavor_;
    double eps_;
    bool with_remainder_;
};

/// Builds the Ito coefficients of the requested flavor.
///
/// Unscaled_Leps accepts eps = 0, which gives the unperturbed operator L.
/// Rescaled_Meps needs eps > 0. Limit_M and LogChart_A ignore eps.
inline GeneratorCoefficients assemble(const ChartModel& m, double eps, Flavor flavor,
                                      bool with_remainder = false) {
    if (with_remainder) {
        if (flavor == Flavor::LimitM || flavor == Flavor::LogChartA)
            fail(ErrorCode::FlavorRangeError,
                 std::string("remainder terms are not part of flavor ") + to_string(flavor));
        if (!m.remainder)
            fail(ErrorCode::FlavorRangeError, "remainder requested but the model has none");
    }
    if (flavor == Flavor::RescaledMeps && !(eps > 0.0))
        fail(ErrorCode::InvalidEpsilon, "Rescaled_Meps needs eps > 0");
    if (flavor == Flavor::UnscaledLeps && !(eps >= 0.0))
        fail(ErrorCode::InvalidEpsilon, "Unscaled_Leps needs eps >= 0");
    double e = (flavor == Flavor::LimitM || flavor == Flavor::LogChartA) ? 0.0 : eps;
    return GeneratorCoefficients(m, flavor, e, with_remainder);
}

struct Violation {
    std::string assumption;  // "a", "b", "c", "generic", "tangency", "smoothness"
    ErrorCode code = ErrorCode::InvalidArgument;
    double y = 0.0;
    double z = 0.0;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    int points_checked = 0;

    bool ok() const { return violations.empty(); }
    bool has(const std::string& assumption) const {
        return std::any_of(violations.begin(), violations.end(),
                           [&](const Violation& v) { return v.assumption == assumption; });
    }
};

/// Checks the model invariants on a deterministic n_y x n_z sample grid of
/// the chart S x (0, chart_radius). Only the first violation per assumption
/// and boundary point is kept.
inline ValidationReport validate(const ChartModel& m, double chart_radius = 0.5, int n_y = 64,
                                 int n_z = 16) {
    ValidationReport rep;
    auto note = [&](const char* which, ErrorCode code, double y, double z, std::string msg) {
        for (const auto& v : rep.violations)
            if (v.assumption == which && v.y == y) return;
        rep.violations.push_back({which, code, y, z, std::move(msg)});
    };
    const Perturbation& p = m.perturbation;
    for (int i = 0; i < n_y; ++i) {
        double y = two_pi * i / n_y;
        ++rep.points_checked;
        if (!(m.a(y) > 0.0)) note("a", ErrorCode::SpanViolation, y, 0.0, "a(y) <= 0 on S");
        if (!(m.rho(y) > 0.0)) note("c", ErrorCode::SpanViolation, y, 0.0, "rho(y) <= 0 on S");
        if (!(m.alpha(y) > 0.0))
            note("generic", ErrorCode::SpanViolation, y, 0.0, "alpha(y) <= 0 on S");
        for (int j = 0; j < n_z; ++j) {
            double z = chart_radius * (j + 1) / (n_z + 1);
            ++rep.points_checked;
            double tzz = m.rho(y) * (1.0 + p.zz_growth * z);
            double tyy = p.a_yy(y);
            double tyz = p.a_yz(y);
            if (!(tyy > 0.0 && tzz > 0.0 && tyy * tzz - tyz * tyz > 0.0))
                note("c", ErrorCode::SpanViolation, y, z, "perturbation not positive definite");
            OperatorCoeffs c = assemble(m, 0.0, Flavor::UnscaledLeps)(y, z);
            if (!(c.a11 > 0.0 && c.a22 > 0.0 && c.determinant() > 0.0))
                note("b", ErrorCode::SpanViolation, y, z, "unperturbed operator degenerate inside D");
        }
    }
    return rep;
}

}  // namespace degen
