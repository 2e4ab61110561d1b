#pragma once

// The perturbed operator on the whole disk (or annulus): the chart normal
// form near the outer circle, blended into a fixed non-degenerate interior
// operator, and a path sampler for it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "degen/error.hpp"
#include "degen/fields.hpp"
#include "degen/geometry.hpp"
#include "degen/rng.hpp"
#include "degen/sde.hpp"

namespace degen {

/// Interior operator  kappa * Delta + omega * d/dtheta  with
/// kappa = scale * mean(a) / 2, blended with the chart operator by a C^1
/// partition of unity chi(z): chi = 1 for z <= blend_lo, 0 for z >= blend_hi.
struct InteriorCompletion {
    std::string name = "laplacian";
    double scale = 1.0;
    double omega = 0.0;
    double blend_lo = 0.3;
    double blend_hi = 0.5;

    static InteriorCompletion laplacian() { return {}; }
    static InteriorCompletion rotating() { return {"rotating", 2.0, 1.0, 0.3, 0.5}; }

    bool operator==(const InteriorCompletion&) const = default;

    double chi(double z) const {
        if (z <= blend_lo) return 1.0;
        if (z >= blend_hi) return 0.0;
        double t = (blend_hi - z) / (blend_hi - blend_lo);
        return t * t * (3.0 - 2.0 * t);
    }
};

class DiskOperator {
public:
    DiskOperator(ChartModel m, double eps, InteriorCompletion completion,
                 DomainModel dom = DomainModel::disk(), bool with_remainder = false)
        : chart_(assemble(m, eps, Flavor::UnscaledLeps, with_remainder)),
          completion_(std::move(completion)),
          dom_(dom) {
        if (!(eps >= 0.0)) fail(ErrorCode::InvalidEpsilon, "eps must be >= 0");
        dom_.check();
        if (!(completion_.blend_lo > 0.0 && completion_.blend_lo < completion_.blend_hi))
            fail(ErrorCode::InvalidArgument, "blend window must satisfy 0 < lo < hi");
        if (completion_.blend_hi > dom_.chart_radius)
            fail(ErrorCode::ExtensionUndefined,
                 "blend window reaches beyond the chart radius");
        if (dom_.kind == DomainKind::Annulus && completion_.blend_hi > 1.0 - dom_.inner_radius)
            fail(ErrorCode::ExtensionUndefined, "blend window reaches the inner circle");
        double mean_a = 0.0;
        const int n = 256;
        for (int i = 0; i < n; ++i) mean_a += m.a(two_pi * i / n);
        kappa_ = completion_.scale * 0.5 * mean_a / n;
        if (!(kappa_ > 0.0)) fail(ErrorCode::InvalidArgument, "interior operator must be elliptic");
    }

    double eps() const { return chart_.eps(); }
    const DomainModel& domain() const { return dom_; }
    const InteriorCompletion& completion() const { return completion_; }
    const ChartModel& model() const { return chart_.model(); }
    double kappa() const { return kappa_; }
    double omega() const { return completion_.omega; }

    /// Distance from the outer circle to the far edge of the grid (pole or inner circle).
    double depth() const { return dom_.kind == DomainKind::Disk ? 1.0 : 1.0 - dom_.inner_radius; }

    /// Generator coefficients in (theta, z), z = 1 - r, for 0 <= z < 1.
    OperatorCoeffs operator()(double theta, double z) const {
        double w = completion_.chi(z);
        OperatorCoeffs c;
        if (w > 0.0) c = w * chart_(theta, z);
        if (w < 1.0) {
            double r = 1.0 - z;
            OperatorCoeffs in;
            in.a11 = kappa_ / (r * r);
            in.a22 = kappa_;
            in.b1 = completion_.omega;
            in.b2 = -kappa_ / r;
            c += (1.0 - w) * in;
        }
        return c;
    }

private:
    GeneratorCoefficients chart_;
    InteriorCompletion completion_;
    DomainModel dom_;
    double kappa_ = 0.5;
};

struct DiskPathResult {
    bool exited = false;
    bool unstable = false;
    BoundaryComponent component = BoundaryComponent::Outer;
    double exit_theta = 0.0;
    double time = 0.0;
    AmbientPoint final_point{};
};

/// One path of the disk process from x0 up to min(exit, t_stop). Near the
/// pole (r < 0.3) the pure interior operator is stepped in Cartesian
/// coordinates; elsewhere in (theta, z) with exit when z reaches 0.
inline DiskPathResult simulate_disk_path(const DiskOperator& op, AmbientPoint x0, double t_stop,
                                         double dt, bool bridge_correction, PathRng& rng) {
    const double depth = op.depth();
    const bool disk = op.domain().kind == DomainKind::Disk;
    const double sqdt = std::sqrt(dt);
    const auto n_steps = static_cast<std::int64_t>(std::llround(t_stop / dt));
    DiskPathResult res;
    double r0 = x0.norm();
    bool cartesian = disk && r0 < 0.3;
    double x1 = x0.x1, x2 = x0.x2;
    double theta = wrap_angle(std::atan2(x2, x1)), z = 1.0 - r0;
    if (!(z >= 0.0 && z <= depth)) fail(ErrorCode::InvalidArgument, "start outside the domain");
    if (z == 0.0 || (!disk && z >= depth)) {
        res.exited = true;
        res.component = z == 0.0 ? BoundaryComponent::Outer : BoundaryComponent::Inner;
        res.exit_theta = theta;
        res.final_point = x0;
        return res;
    }
    const double s2k = std::sqrt(2.0 * op.kappa() * dt);
    for (std::int64_t k = 0; k < n_steps; ++k) {
        const double t = k * dt;
        if (cartesian) {
            double g1 = rng.normal(), g2 = rng.normal();
            double w = op.omega();
            double n1 = x1 + (-w * x2) * dt + s2k * g1;
            double n2 = x2 + (w * x1) * dt + s2k * g2;
            x1 = n1;
            x2 = n2;
            double r = std::hypot(x1, x2);
            if (r > 0.4) {
                cartesian = false;
                theta = wrap_angle(std::atan2(x2, x1));
                z = 1.0 - r;
            }
            continue;
        }
        OperatorCoeffs c = op(theta, z);
        detail::Increment inc = detail::em_increment(c, dt, sqdt, rng);
        if (inc.unstable) {
            res.unstable = true;
            res.time = t;
            return res;
        }
        double z_new = z + inc.d2;
        if (z_new <= 0.0) {
            double lam = z / (z - z_new);
            res.exited = true;
            res.component = BoundaryComponent::Outer;
            res.exit_theta = wrap_angle(theta + lam * inc.d1);
            res.time = t + lam * dt;
            res.final_point = {std::cos(res.exit_theta), std::sin(res.exit_theta)};
            return res;
        }
        if (bridge_correction) {
            double p = detail::bridge_hit_probability(z, z_new, 2.0 * c.a22, dt);
            if (p > 1e-12 && rng.uniform() < p) {
                res.exited = true;
                res.component = BoundaryComponent::Outer;
                res.exit_theta = wrap_angle(theta + 0.5 * inc.d1);
                res.time = t + 0.5 * dt;
                res.final_point = {std::cos(res.exit_theta), std::sin(res.exit_theta)};
                return res;
            }
        }
        if (!disk && z_new >= depth) {
            double lam = (depth - z) / (z_new - z);
            res.exited = true;
            res.component = BoundaryComponent::Inner;
            res.exit_theta = wrap_angle(theta + lam * inc.d1);
            res.time = t + lam * dt;
            double ri = op.domain().inner_radius;
            res.final_point = {ri * std::cos(res.exit_theta), ri * std::sin(res.exit_theta)};
            return res;
        }
        theta = wrap_angle(theta + inc.d1);
        z = z_new;
        if (disk && z > 0.7) {
            cartesian = true;
            x1 = (1.0 - z) * std::cos(theta);
            x2 = (1.0 - z) * std::sin(theta);
        }
    }
    res.time = n_steps * dt;
    if (cartesian) {
        res.final_point = {x1, x2};
    } else {
        res.final_point = {(1.0 - z) * std::cos(theta), (1.0 - z) * std::sin(theta)};
    }
    return res;
}

}  // namespace degen
