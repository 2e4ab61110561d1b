#pragma once

#include <algorithm>
#include <cmath>

#include "degen/fields.hpp"

namespace degen::detail {

/// Nine-point weights w[di + 1][dj + 1] for
///   a11 u_yy + 2 a12 u_yz + a22 u_zz + b1 u_y + b2 u_z
/// with periodic spacing hy in the first coordinate and local spacings hm
/// (below) and hp (above) in the second. Central differences, switched to
/// first-order upwinding per node and direction when the cell Peclet number
/// exceeds 2. Returns true if any upwinding was used.
inline bool stencil_weights(const OperatorCoeffs& c, double hy, double hm, double hp, double w[3][3]) {
    auto W = [&](int di, int dj) -> double& { return w[di + 1][dj + 1]; };
    bool upwinded = false;
    double ay = c.a11 / (hy * hy);
    if (std::abs(c.b1) * hy > 2.0 * c.a11) {
        upwinded = true;
        W(1, 0) += ay + std::max(c.b1, 0.0) / hy;
        W(-1, 0) += ay + std::max(-c.b1, 0.0) / hy;
        W(0, 0) -= 2.0 * ay + std::abs(c.b1) / hy;
    } else {
        W(1, 0) += ay + c.b1 / (2.0 * hy);
        W(-1, 0) += ay - c.b1 / (2.0 * hy);
        W(0, 0) -= 2.0 * ay;
    }
    double s = hm + hp;
    double dp = 2.0 * c.a22 / (hp * s), dm = 2.0 * c.a22 / (hm * s);
    W(0, 1) += dp;
    W(0, -1) += dm;
    W(0, 0) -= dp + dm;
    if (std::abs(c.b2) * std::max(hm, hp) > 2.0 * c.a22) {
        upwinded = true;
        if (c.b2 > 0.0) {
            W(0, 1) += c.b2 / hp;
            W(0, 0) -= c.b2 / hp;
        } else {
            W(0, -1) -= c.b2 / hm;
            W(0, 0) += c.b2 / hm;
        }
    } else {
        W(0, 1) += c.b2 * hm / (hp * s);
        W(0, -1) -= c.b2 * hp / (hm * s);
        W(0, 0) += c.b2 * (hp - hm) / (hp * hm);
    }
    if (c.a12 != 0.0) {
        double m = 2.0 * c.a12 / (2.0 * hy * s);
        W(1, 1) += m;
        W(-1, -1) += m;
        W(1, -1) -= m;
        W(-1, 1) -= m;
    }
    return upwinded;
}

}  // namespace degen::detail
