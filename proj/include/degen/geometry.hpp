#pragma once

// Boundary-chart coordinates for the disk and annulus.
//
// Conventions: y is the counterclockwise polar angle of the nearest
// boundary point, normalized to [0, 2*pi); z is the distance to the
// selected boundary circle measured along the interior normal.

#include <cmath>
#include <numbers>
#include <utility>

#include "degen/error.hpp"

namespace degen {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// The single canonical wrap of an angle into [0, 2*pi).
inline double wrap_angle(double y) {
    double w = std::fmod(y, two_pi);
    if (w < 0.0) w += two_pi;
    if (w >= two_pi) w = 0.0;
    return w;
}

/// Signed shortest angular difference a - b in (-pi, pi].
inline double angle_diff(double a, double b) {
    double d = wrap_angle(a - b);
    return d > std::numbers::pi ? d - two_pi : d;
}

struct AmbientPoint {
    double x1 = 0.0;
    double x2 = 0.0;

    double norm() const { return std::hypot(x1, x2); }
};

struct ChartPoint {
    double y = 0.0;
    double z = 0.0;
};

struct RescaledPoint {
    double y = 0.0;
    double zz = 0.0;
};

struct LogPoint {
    double y = 0.0;
    double w = 0.0;
};

enum class DomainKind { Disk, Annulus };
enum class BoundaryComponent { Outer, Inner };

struct DomainModel {
    DomainKind kind = DomainKind::Disk;
    double inner_radius = 0.0;
    double chart_radius = 0.5;

    static DomainModel disk(double chart_radius = 0.5) {
        DomainModel d{DomainKind::Disk, 0.0, chart_radius};
        d.check();
        return d;
    }

    static DomainModel annulus(double inner_radius, double chart_radius) {
        DomainModel d{DomainKind::Annulus, inner_radius, chart_radius};
        d.check();
        return d;
    }

    /// Charts of distinct components must be disjoint.
    void check() const {
        if (!(chart_radius > 0.0 && chart_radius < 1.0))
            fail(ErrorCode::InvalidArgument, "chart_radius must lie in (0, 1)");
        if (kind == DomainKind::Annulus) {
            if (!(inner_radius > 0.0 && inner_radius < 1.0))
                fail(ErrorCode::InvalidArgument, "inner_radius must lie in (0, 1)");
            if (!(chart_radius < 0.5 * (1.0 - inner_radius)))
                fail(ErrorCode::InvalidArgument,
                     "chart_radius must be below half the annulus width");
        }
    }

    double boundary_radius(BoundaryComponent c) const {
        return c == BoundaryComponent::Outer ? 1.0 : inner_radius;
    }

    /// Component whose chart contains p, preferring the nearer circle.
    BoundaryComponent nearest_component(const AmbientPoint& p) const {
        if (kind == DomainKind::Disk) return BoundaryComponent::Outer;
        double r = p.norm();
        return (1.0 - r) <= (r - inner_radius) ? BoundaryComponent::Outer
                                               : BoundaryComponent::Inner;
    }
};

inline ChartPoint ambient_to_chart(const AmbientPoint& p, const DomainModel& dom,
                                   BoundaryComponent comp = BoundaryComponent::Outer) {
    if (comp == BoundaryComponent::Inner && dom.kind != DomainKind::Annulus)
        fail(ErrorCode::InvalidArgument, "the disk has no inner boundary");
    double r = p.norm();
    double z = comp == BoundaryComponent::Outer ? 1.0 - r : r - dom.inner_radius;
    if (!(z >= 0.0 && z < dom.chart_radius))
        fail(ErrorCode::PointOutsideChart, "distance to boundary outside [0, chart_radius)");
    return {wrap_angle(std::atan2(p.x2, p.x1)), z};
}

inline AmbientPoint chart_to_ambient(const ChartPoint& c, const DomainModel& dom,
                                     BoundaryComponent comp = BoundaryComponent::Outer) {
    if (!(c.z >= 0.0 && c.z < dom.chart_radius))
        fail(ErrorCode::ChartRangeError, "z outside [0, chart_radius)");
    if (comp == BoundaryComponent::Inner && dom.kind != DomainKind::Annulus)
        fail(ErrorCode::InvalidArgument, "the disk has no inner boundary");
    double r = comp == BoundaryComponent::Outer ? 1.0 - c.z : dom.inner_radius + c.z;
    return {r * std::cos(c.y), r * std::sin(c.y)};
}

inline RescaledPoint rescale(const ChartPoint& c, double eps) {
    if (!(eps > 0.0)) fail(ErrorCode::InvalidEpsilon, "epsilon must be positive");
    return {c.y, c.z / eps};
}

inline ChartPoint unrescale(const RescaledPoint& r, double eps) {
    if (!(eps > 0.0)) fail(ErrorCode::InvalidEpsilon, "epsilon must be positive");
    return {r.y, r.zz * eps};
}

inline LogPoint log_map(const RescaledPoint& r) {
    if (!(r.zz > 0.0)) fail(ErrorCode::DegenerateInput, "log map undefined at zz <= 0");
    return {r.y, std::log(r.zz)};
}

}  // namespace degen
