#pragma once

// Planar vector-field models (Stratonovich form) and their conversion to
// Ito coefficients, in Cartesian and in boundary-chart coordinates.

#include <array>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "degen/error.hpp"
#include "degen/fields.hpp"
#include "degen/geometry.hpp"
#include "degen/periodic_fn.hpp"

namespace degen {

/// Value and Jacobian (jac[i][j] = d v_i / d x_j) of a planar field.
struct FieldValue {
    std::array<double, 2> v{0.0, 0.0};
    std::array<std::array<double, 2>, 2> jac{{{0.0, 0.0}, {0.0, 0.0}}};
};

/// Built-in field families with analytic Jacobians.
///   Zero
///   Tangential{s}:  s(theta) * (-x2, x1)
///   Normal{c, p}:   c(theta) * (1 - r)^p * (-x / r)       (points into D)
///   Radial{c}:      c * x / r                              (not tangent to S)
///   Constant{e}:    (e1, e2)
struct VectorField {
    struct Zero {
        bool operator==(const Zero&) const = default;
    };
    struct Tangential {
        PeriodicFn s = PeriodicFn::constant(1.0);
        bool operator==(const Tangential&) const = default;
    };
    struct Normal {
        PeriodicFn c = PeriodicFn::constant(1.0);
        double power = 1.0;
        bool operator==(const Normal&) const = default;
    };
    struct Radial {
        double c = 1.0;
        bool operator==(const Radial&) const = default;
    };
    struct Constant {
        double e1 = 0.0;
        double e2 = 0.0;
        bool operator==(const Constant&) const = default;
    };

    std::variant<Zero, Tangential, Normal, Radial, Constant> kind = Zero{};

    bool operator==(const VectorField&) const = default;

    FieldValue operator()(double x1, double x2) const {
        FieldValue out;
        std::visit(
            [&](const auto& f) {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, Zero>) {
                } else if constexpr (std::is_same_v<T, Constant>) {
                    out.v = {f.e1, f.e2};
                } else {
                    double r2 = x1 * x1 + x2 * x2;
                    double r = std::sqrt(r2);
                    double th = std::atan2(x2, x1);
                    std::array<double, 2> gth{-x2 / r2, x1 / r2};
                    std::array<double, 2> e{x1 / r, x2 / r};
                    if constexpr (std::is_same_v<T, Tangential>) {
                        double s = f.s(th), ds = f.s.derivative(th);
                        std::array<double, 2> t{-x2, x1};
                        out.v = {s * t[0], s * t[1]};
                        for (int i = 0; i < 2; ++i)
                            for (int j = 0; j < 2; ++j) out.jac[i][j] = t[i] * ds * gth[j];
                        out.jac[0][1] += -s;
                        out.jac[1][0] += s;
                    } else if constexpr (std::is_same_v<T, Radial>) {
                        out.v = {f.c * e[0], f.c * e[1]};
                        for (int i = 0; i < 2; ++i)
                            for (int j = 0; j < 2; ++j)
                                out.jac[i][j] = f.c * ((i == j ? 1.0 : 0.0) - e[i] * e[j]) / r;
                    } else if constexpr (std::is_same_v<T, Normal>) {
                        double c = f.c(th), dc = f.c.derivative(th);
                        double q = 1.0 - r;
                        double qp = std::pow(q, f.power);
                        double dqp = f.power == 0.0 ? 0.0 : f.power * std::pow(q, f.power - 1.0);
                        // v = -c * q^p * e
                        out.v = {-c * qp * e[0], -c * qp * e[1]};
                        for (int i = 0; i < 2; ++i)
                            for (int j = 0; j < 2; ++j) {
                                double grad_scalar = dc * gth[j] * qp - c * dqp * e[j];
                                double de = ((i == j ? 1.0 : 0.0) - e[i] * e[j]) / r;
                                out.jac[i][j] = -(e[i] * grad_scalar + c * qp * de);
                            }
                    }
                }
            },
            kind);
        return out;
    }
};

/// Cartesian Ito generator: sum A_ij u_ij (A symmetric, full double sum) + b.u
struct CartesianCoeffs {
    double a11 = 0.0, a12 = 0.0, a22 = 0.0;
    double b1 = 0.0, b2 = 0.0;

    CartesianCoeffs& operator+=(const CartesianCoeffs& o) {
        a11 += o.a11; a12 += o.a12; a22 += o.a22; b1 += o.b1; b2 += o.b2;
        return *this;
    }
    friend CartesianCoeffs operator*(double s, CartesianCoeffs c) {
        c.a11 *= s; c.a12 *= s; c.a22 *= s; c.b1 *= s; c.b2 *= s;
        return c;
    }
};

/// L = V0 + (1/2) sum_i V_i^2 in Stratonovich form, converted to Ito form:
/// A = (1/2) sum v_i v_i^T, b = v_0 + (1/2) sum (Dv_i) v_i.
inline CartesianCoeffs stratonovich_to_ito(const std::vector<VectorField>& fields, double x1,
                                           double x2) {
    CartesianCoeffs c;
    for (std::size_t k = 0; k < fields.size(); ++k) {
        FieldValue f = fields[k](x1, x2);
        if (k == 0) {
            c.b1 += f.v[0];
            c.b2 += f.v[1];
            continue;
        }
        c.a11 += 0.5 * f.v[0] * f.v[0];
        c.a12 += 0.5 * f.v[0] * f.v[1];
        c.a22 += 0.5 * f.v[1] * f.v[1];
        c.b1 += 0.5 * (f.jac[0][0] * f.v[0] + f.jac[0][1] * f.v[1]);
        c.b2 += 0.5 * (f.jac[1][0] * f.v[0] + f.jac[1][1] * f.v[1]);
    }
    return c;
}

/// Converts Cartesian generator coefficients at x to the (theta, z) chart of
/// the given boundary component (z = 1 - r outer, z = r - r_in inner).
inline OperatorCoeffs cartesian_to_chart(const CartesianCoeffs& c, double x1, double x2,
                                         BoundaryComponent comp = BoundaryComponent::Outer) {
    double r2 = x1 * x1 + x2 * x2;
    double r = std::sqrt(r2);
    double sgn = comp == BoundaryComponent::Outer ? -1.0 : 1.0;
    std::array<double, 2> gth{-x2 / r2, x1 / r2};
    std::array<double, 2> gz{sgn * x1 / r, sgn * x2 / r};
    const double A[2][2] = {{c.a11, c.a12}, {c.a12, c.a22}};
    auto quad = [&](const std::array<double, 2>& u, const std::array<double, 2>& v) {
        double s = 0.0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) s += u[i] * A[i][j] * v[j];
        return s;
    };
    double r4 = r2 * r2;
    double hth[2][2] = {{2.0 * x1 * x2 / r4, (x2 * x2 - x1 * x1) / r4},
                        {(x2 * x2 - x1 * x1) / r4, -2.0 * x1 * x2 / r4}};
    double e[2] = {x1 / r, x2 / r};
    double hz[2][2];
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) hz[i][j] = sgn * ((i == j ? 1.0 : 0.0) - e[i] * e[j]) / r;
    double tr_th = 0.0, tr_z = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            tr_th += A[i][j] * hth[i][j];
            tr_z += A[i][j] * hz[i][j];
        }
    OperatorCoeffs q;
    q.a11 = quad(gth, gth);
    q.a12 = quad(gth, gz);
    q.a22 = quad(gz, gz);
    q.b1 = c.b1 * gth[0] + c.b2 * gth[1] + tr_th;
    q.b2 = c.b1 * gz[0] + c.b2 * gz[1] + tr_z;
    return q;
}

/// Vector-field model in the plane; fields[0] and tilde[0] are drifts.
struct AmbientModel {
    std::string name = "ambient";
    std::vector<VectorField> v;
    std::vector<VectorField> tilde_v;
    DomainModel dom = DomainModel::disk();

    bool operator==(const AmbientModel&) const = default;

    CartesianCoeffs generator(double x1, double x2, double eps) const {
        CartesianCoeffs c = stratonovich_to_ito(v, x1, x2);
        if (eps > 0.0) c += (eps * eps) * stratonovich_to_ito(tilde_v, x1, x2);
        return c;
    }
};

inline ValidationReport validate(const AmbientModel& m, int n_y = 64, int n_z = 16) {
    ValidationReport rep;
    auto note = [&](const char* which, ErrorCode code, double y, double z, std::string msg) {
        for (const auto& x : rep.violations)
            if (x.assumption == which && x.y == y) return;
        rep.violations.push_back({which, code, y, z, std::move(msg)});
    };
    if (m.v.size() < 3 || m.tilde_v.size() < 3) {
        rep.violations.push_back({"b", ErrorCode::SpanViolation, 0.0, 0.0,
                                  "need a drift field plus two diffusion fields"});
        return rep;
    }
    const double delta = m.dom.chart_radius;
    for (int i = 0; i < n_y; ++i) {
        double y = two_pi * i / n_y;
        double cy = std::cos(y), sy = std::sin(y);
        ++rep.points_checked;
        for (std::size_t k = 0; k < m.v.size(); ++k) {
            FieldValue f = m.v[k](cy, sy);
            double normal = f.v[0] * cy + f.v[1] * sy;
            if (std::abs(normal) >= 1e-10)
                note("tangency", ErrorCode::TangencyViolation, y, 0.0,
                     "field v" + std::to_string(k) + " has a normal component on S");
        }
        for (int j = 0; j < n_z; ++j) {
            double z = delta * (j + 1) / (n_z + 1);
            double x1 = (1.0 - z) * cy, x2 = (1.0 - z) * sy;
            ++rep.points_checked;
            FieldValue f1 = m.v[1](x1, x2), f2 = m.v[2](x1, x2);
            double det = f1.v[0] * f2.v[1] - f1.v[1] * f2.v[0];
            if (!(std::abs(det) > 1e-12))
                note("b", ErrorCode::SpanViolation, y, z, "v1, v2 do not span the plane");
            FieldValue t1 = m.tilde_v[1](x1, x2), t2 = m.tilde_v[2](x1, x2);
            double tdet = t1.v[0] * t2.v[1] - t1.v[1] * t2.v[0];
            if (!(std::abs(tdet) > 1e-12))
                note("c", ErrorCode::SpanViolation, y, z, "perturbation fields do not span");
        }
        FieldValue t1 = m.tilde_v[1](cy, sy), t2 = m.tilde_v[2](cy, sy);
        if (!(std::abs(t1.v[0] * t2.v[1] - t1.v[1] * t2.v[0]) > 1e-12))
            note("c", ErrorCode::SpanViolation, y, 0.0, "perturbation fields do not span on S");
    }
    return rep;
}

struct AlphaBetaExtraction {
    std::vector<double> y;
    std::vector<double> alpha;
    std::vector<double> beta;
    /// lim (1/2) L z^2 / z^2, which equals alpha + beta in the normal form.
    std::vector<double> half_lz2_ratio;
    double residual = 0.0;
};

/// Identifies alpha and beta of the normal form from L z and L z^2 near S.
///
/// beta = lim Lz / z and alpha = lim ((1/2) L z^2 - z Lz) / z^2; the second
/// quotient is the normal diffusion grad(z)^T A grad(z) / z^2. Each quotient
/// is Richardson-extrapolated from heights probe_z and probe_z / 2; the
/// residual compares against the same extrapolation from probe_z/2, probe_z/4.
inline AlphaBetaExtraction extract_alpha_beta(const AmbientModel& m, double probe_z, int n_y = 64,
                                              double tolerance = 1e-6) {
    if (!(probe_z > 0.0 && probe_z < m.dom.chart_radius))
        fail(ErrorCode::InvalidArgument, "probe_z must lie in (0, chart_radius)");
    ValidationReport rep = validate(m, n_y);
    for (const auto& v : rep.violations)
        fail(v.code, v.message + " (y = " + std::to_string(v.y) + ")");

    struct Quotients {
        double beta, alpha, half_lz2;
    };
    auto quotients = [&](double y, double z) {
        double r = 1.0 - z;
        double x1 = r * std::cos(y), x2 = r * std::sin(y);
        CartesianCoeffs c = m.generator(x1, x2, 0.0);
        OperatorCoeffs q = cartesian_to_chart(c, x1, x2);
        double lz = q.b2;        // L applied to the coordinate z
        double normal = q.a22;   // grad z^T A grad z
        double half_lz2 = z * lz + normal;
        return Quotients{lz / z, normal / (z * z), half_lz2 / (z * z)};
    };
    auto richardson = [](double f_h, double f_half) { return 2.0 * f_half - f_h; };

    AlphaBetaExtraction out;
    for (int i = 0; i < n_y; ++i) {
        double y = two_pi * i / n_y;
        Quotients q1 = quotients(y, probe_z), q2 = quotients(y, 0.5 * probe_z),
                  q4 = quotients(y, 0.25 * probe_z);
        double beta = richardson(q1.beta, q2.beta);
        double alpha = richardson(q1.alpha, q2.alpha);
        double ratio = richardson(q1.half_lz2, q2.half_lz2);
        out.residual = std::max({out.residual, std::abs(richardson(q2.beta, q4.beta) - beta),
                                 std::abs(richardson(q2.alpha, q4.alpha) - alpha)});
        out.y.push_back(y);
        out.alpha.push_back(alpha);
        out.beta.push_back(beta);
        out.half_lz2_ratio.push_back(ratio);
    }
    if (out.residual > tolerance)
        fail(ErrorCode::ExtrapolationUnstable,
             "extrapolation defect " + std::to_string(out.residual) + " exceeds tolerance");
    for (std::size_t i = 0; i < out.alpha.size(); ++i)
        if (!(out.alpha[i] > 1e-12))
            fail(ErrorCode::SpanViolation,
                 "alpha <= 0 at y = " + std::to_string(out.y[i]) + ": degeneration not generic");
    return out;
}

}  // namespace degen
