#pragma once

// Finite-difference solvers on the truncated half-cylinder S x [0, Z] for the
// limit operator M: the boundary-value problem for u, the exit probability h,
// the h-conditioned problem, the limit constant ubar and exit measures.

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "degen/classifier.hpp"
#include "degen/error.hpp"
#include "degen/fields.hpp"
#include "degen/geometry.hpp"
#include "degen/sparse.hpp"
#include "degen/stencil.hpp"

namespace degen {

enum class Stretching { Uniform, Geometric };

struct HalfCylinderGrid {
    int n_y = 64;
    int n_z = 400;
    double Z = 40.0;
    Stretching stretching = Stretching::Uniform;
    double ratio = 1.0;  // Geometric only: z_{j+1} - z_j = ratio * (z_j - z_{j-1})

    static HalfCylinderGrid uniform(int n_y, int n_z, double Z) {
        return {n_y, n_z, Z, Stretching::Uniform, 1.0};
    }
    static HalfCylinderGrid geometric(int n_y, int n_z, double Z, double ratio) {
        return {n_y, n_z, Z, Stretching::Geometric, ratio};
    }
    /// Default grid for ubar: the y-oscillation of u decays only like a small
    /// power of zz, so the far field must be very distant.
    static HalfCylinderGrid standard() { return geometric(64, 800, 1e20, 1.06); }

    void check() const {
        if (n_y < 32 || (n_y & (n_y - 1)) != 0)
            fail(ErrorCode::InvalidArgument, "N_y must be a power of two >= 32");
        if (n_z < 100) fail(ErrorCode::InvalidArgument, "N_z must be >= 100");
        if (!(Z >= 5.0) || !std::isfinite(Z)) fail(ErrorCode::InvalidArgument, "Z must be >= 5");
        if (stretching == Stretching::Geometric && !(ratio > 1.0))
            fail(ErrorCode::InvalidArgument, "geometric ratio must exceed 1");
    }

    double dy() const { return two_pi / n_y; }

    /// Nodes z_0 = 0 < ... < z_{n_z} = Z.
    std::vector<double> nodes() const {
        std::vector<double> z(static_cast<std::size_t>(n_z + 1));
        for (int j = 0; j <= n_z; ++j) {
            if (stretching == Stretching::Uniform) {
                z[static_cast<std::size_t>(j)] = Z * j / n_z;
            } else {
                z[static_cast<std::size_t>(j)] = Z * std::expm1(j * std::log(ratio)) /
                                                 std::expm1(n_z * std::log(ratio));
            }
        }
        z.back() = Z;
        return z;
    }

    HalfCylinderGrid with_height(double z_top) const {
        HalfCylinderGrid g = *this;
        g.Z = z_top;
        return g;
    }
};

/// Radial exit probability for constant coefficients: solves
/// (zz^2 alpha + rho) h'' + zz beta h' = 0, h(0) = 1, h(inf) = 0.
class RadialOracle {
public:
    RadialOracle(double alpha, double beta, double rho) : alpha_(alpha), beta_(beta), rho_(rho) {
        if (!(alpha > 0.0 && rho > 0.0 && beta > 0.0))
            fail(ErrorCode::InvalidArgument, "radial oracle needs positive constants");
        if (!(beta / alpha > 1.0))
            fail(ErrorCode::NotIntegrable, "h is not integrable unless beta/alpha > 1");
        norm_ = tail(0.0);
    }

    double h(double zz) const {
        if (!(zz >= 0.0)) fail(ErrorCode::InvalidArgument, "zz must be >= 0");
        if (zz == 0.0) return 1.0;
        return tail(zz) / norm_;
    }

    /// Probability of reaching 0 before the wall zz = r.
    double exit_before(double zz, double r) const {
        double hr = h(r);
        return (h(zz) - hr) / (1.0 - hr);
    }

    /// Decay exponent: h ~ C zz^-(beta/alpha - 1).
    double exponent() const { return beta_ / alpha_ - 1.0; }

private:
    double tail(double from) const {
        boost::math::quadrature::exp_sinh<double> integrator;
        double p = -beta_ / (2.0 * alpha_);
        double k = alpha_ / rho_;
        auto f = [&](double u) { return std::pow(1.0 + k * u * u, p); };
        return integrator.integrate(f, from, std::numeric_limits<double>::infinity());
    }

    double alpha_, beta_, rho_;
    double norm_ = 1.0;
};

struct HalfCylinderSolution {
    HalfCylinderGrid grid;
    std::vector<double> zz;     // nodes, size n_z + 1
    std::vector<double> u;      // row-major (j, i), size (n_z + 1) * n_y
    std::vector<double> h;      // conditioned solves only, same layout
    double ubar = 0.0;
    double top_oscillation = 0.0;
    std::vector<double> variation;  // max_y u - min_y u per row j
    std::optional<double> truncation_estimate;

    int n_y() const { return grid.n_y; }
    double at(int i, int j) const {
        return u[static_cast<std::size_t>(j) * static_cast<std::size_t>(grid.n_y) +
                 static_cast<std::size_t>(i)];
    }
    /// Value in column i at height z (linear in ln zz above the first node).
    double column_value(int i, double z) const;
};

struct ExitMeasure {
    enum class Source { Adjoint, MonteCarlo };
    std::vector<double> density;  // per unit angle on the uniform y-grid / bins
    std::vector<double> density_stderr;
    Source source = Source::Adjoint;

    double spacing() const { return two_pi / static_cast<double>(density.size()); }
    double mass() const {
        double s = 0.0;
        for (double d : density) s += d;
        return s * spacing();
    }
    /// Rectangle-rule integral of f against the measure.
    template <class F>
    double integrate(F&& f) const {
        double s = 0.0;
        for (std::size_t k = 0; k < density.size(); ++k) s += f(spacing() * k) * density[k];
        return s * spacing();
    }
};

enum class TopCondition { Neumann, Dirichlet };

namespace detail {

/// Discrete problem A x + B f = 0 on rows j = 1..J (J = n_z for Neumann,
/// n_z - 1 for Dirichlet zero), unknowns indexed (j - 1) * n_y + i.
struct DiscreteProblem {
    SparseMatrix A;
    Eigen::SparseMatrix<double> B;  // couples to the boundary row j = 0
    int rows = 0;
    bool upwinded = false;
};

/// log_weight(j, i) gives ln of the conjugating factor at node (i, j),
/// including the ghost row j = n_z + 1; the stencil weight to neighbor n of
/// row node c is multiplied by exp(lw(n) - lw(c)). Null means no conjugation.
template <class LogWeight>
DiscreteProblem assemble_problem(const GeneratorCoefficients& gc, const HalfCylinderGrid& g,
                                 TopCondition top, const std::vector<double>& z,
                                 const LogWeight* log_weight) {
    const int ny = g.n_y, nz = g.n_z;
    const int J = top == TopCondition::Neumann ? nz : nz - 1;
    const double hy = g.dy();
    DiscreteProblem p;
    p.rows = J * ny;
    TripletBuilder a(p.rows);
    std::vector<Eigen::Triplet<double>> bt;
    auto index = [&](int i, int j) { return (j - 1) * ny + ((i % ny) + ny) % ny; };
    for (int j = 1; j <= J; ++j) {
        double hm = z[static_cast<std::size_t>(j)] - z[static_cast<std::size_t>(j - 1)];
        double hp = j < nz ? z[static_cast<std::size_t>(j + 1)] - z[static_cast<std::size_t>(j)] : hm;
        for (int i = 0; i < ny; ++i) {
            const double y = hy * i;
            OperatorCoeffs c = gc(y, z[static_cast<std::size_t>(j)]);
            double w[3][3] = {};
            if (stencil_weights(c, hy, hm, hp, w)) p.upwinded = true;
            auto W = [&](int di, int dj) -> double& { return w[di + 1][dj + 1]; };
            const int row = index(i, j);
            const double lc = log_weight ? (*log_weight)(j, i) : 0.0;
            for (int di = -1; di <= 1; ++di) {
                for (int dj = -1; dj <= 1; ++dj) {
                    double weight = W(di, dj);
                    if (weight == 0.0) continue;
                    int jn = j + dj, in = ((i + di) % ny + ny) % ny;
                    if (log_weight) weight *= std::exp((*log_weight)(jn, in) - lc);
                    if (jn == 0) {
                        bt.emplace_back(row, in, weight);
                    } else if (jn > nz) {
                        a.add(row, index(in, nz - 1), weight);  // ghost mirror
                    } else if (jn == nz && top == TopCondition::Dirichlet) {
                        // homogeneous Dirichlet top
                    } else {
                        a.add(row, index(in, jn), weight);
                    }
                }
            }
        }
    }
    p.A = a.build();
    p.B.resize(p.rows, ny);
    p.B.setFromTriplets(bt.begin(), bt.end());
    return p;
}

struct NoWeight {
    double operator()(int, int) const { return 0.0; }
};

inline std::vector<double> solve_problem(const DiscreteProblem& p, const std::vector<double>& f) {
    Eigen::Map<const Eigen::VectorXd> fv(f.data(), static_cast<Eigen::Index>(f.size()));
    Eigen::VectorXd rhs = -(p.B * fv);
    return LinearSolver(p.A).solve(std::span<const double>(rhs.data(), static_cast<std::size_t>(rhs.size())), 1e-10);
}

inline void fill_summary(HalfCylinderSolution& s) {
    const int ny = s.grid.n_y;
    const int rows = s.grid.n_z + 1;
    s.variation.assign(static_cast<std::size_t>(rows), 0.0);
    for (int j = 0; j < rows; ++j) {
        double lo = s.at(0, j), hi = lo;
        for (int i = 1; i < ny; ++i) {
            lo = std::min(lo, s.at(i, j));
            hi = std::max(hi, s.at(i, j));
        }
        s.variation[static_cast<std::size_t>(j)] = hi - lo;
    }
    double sum = 0.0;
    for (int i = 0; i < ny; ++i) sum += s.at(i, rows - 1);
    s.ubar = sum / ny;
    s.top_oscillation = s.variation.back();
}

inline std::vector<double> on_grid(const PeriodicFn& f, int ny) {
    std::vector<double> v(static_cast<std::size_t>(ny));
    for (int i = 0; i < ny; ++i) v[static_cast<std::size_t>(i)] = f(two_pi * i / ny);
    return v;
}

/// Largest real eigenvalue of the periodic operator
/// L_y + gamma (gamma + 1) alpha - gamma beta - gamma d d/dy.
inline double far_field_eigenvalue(const ChartModel& m, int ny, double gamma) {
    const double h = two_pi / ny;
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(ny, ny);
    for (int i = 0; i < ny; ++i) {
        double y = h * i;
        double diff = 0.5 * m.a(y) / (h * h);
        double adv = (m.b(y) - gamma * m.d(y)) / (2.0 * h);
        k(i, (i + 1) % ny) += diff + adv;
        k(i, (i + ny - 1) % ny) += diff - adv;
        k(i, i) += -2.0 * diff + gamma * (gamma + 1.0) * m.alpha(y) - gamma * m.beta(y);
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(k, false);
    return es.eigenvalues().real().maxCoeff();
}

}  // namespace detail

/// Exponent gamma > 0 with h ~ phi(y) zz^-gamma at large zz for a repelling
/// model: the positive root of the far-field principal eigenvalue.
inline double far_field_exponent(const ChartModel& m, int ny = 64) {
    auto lam = [&](double g) { return detail::far_field_eigenvalue(m, ny, g); };
    double lo = 1e-6;
    if (!(lam(lo) < 0.0)) fail(ErrorCode::WrongRegime, "far-field exponent needs a repelling model");
    double hi = 1.0;
    while (lam(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) fail(ErrorCode::NoConvergence, "far-field exponent not bracketed");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        (lam(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline double HalfCylinderSolution::column_value(int i, double z) const {
    const std::size_t nz = static_cast<std::size_t>(grid.n_z);
    if (z <= zz[1]) {
        double t = z / zz[1];
        return (1.0 - t) * at(i, 0) + t * at(i, 1);
    }
    if (z >= zz[nz]) return at(i, static_cast<int>(nz));
    auto it = std::upper_bound(zz.begin(), zz.end(), z);
    int j = static_cast<int>(it - zz.begin());
    double l0 = std::log(zz[static_cast<std::size_t>(j - 1)]);
    double l1 = std::log(zz[static_cast<std::size_t>(j)]);
    double t = (std::log(z) - l0) / (l1 - l0);
    return (1.0 - t) * at(i, j - 1) + t * at(i, j);
}

namespace detail {

inline HalfCylinderSolution solve_attracting(const GeneratorCoefficients& gc, const std::vector<double>& f,
                                             const HalfCylinderGrid& g) {
    g.check();
    if (static_cast<int>(f.size()) != g.n_y)
        fail(ErrorCode::InvalidArgument, "boundary data size must equal N_y");
    HalfCylinderSolution s;
    s.grid = g;
    s.zz = g.nodes();
    DiscreteProblem p = assemble_problem<NoWeight>(gc, g, TopCondition::Neumann, s.zz, nullptr);
    std::vector<double> x = solve_problem(p, f);
    s.u = f;
    s.u.insert(s.u.end(), x.begin(), x.end());
    fill_summary(s);
    return s;
}

inline void require_regime(const ChartModel& m, bool repelling) {
    ClassificationReport rep = classify(m, 1e-8, 256);
    if (repelling && rep.verdict != Verdict::Repelling)
        fail(ErrorCode::WrongRegime, "operation requires a repelling boundary");
    if (!repelling && rep.verdict == Verdict::Repelling)
        fail(ErrorCode::WrongRegime, "repelling boundary: use solve_conditioned");
}

}  // namespace detail

inline HalfCylinderSolution solve_u(const ChartModel& m, const std::vector<double>& f,
                                    const HalfCylinderGrid& g = HalfCylinderGrid::standard(),
                                    bool with_truncation = true) {
    detail::require_regime(m, false);
    GeneratorCoefficients gc = assemble(m, 0.0, Flavor::LimitM);
    HalfCylinderSolution s = detail::solve_attracting(gc, f, g);
    if (with_truncation)
        s.truncation_estimate =
            std::abs(s.ubar - detail::solve_attracting(gc, f, g.with_height(g.Z / 2)).ubar);
    return s;
}

inline HalfCylinderSolution solve_u(const ChartModel& m, const PeriodicFn& f,
                                    const HalfCylinderGrid& g = HalfCylinderGrid::standard(),
                                    bool with_truncation = true) {
    return solve_u(m, detail::on_grid(f, g.n_y), g, with_truncation);
}

/// Same problem for arbitrary generator coefficients (e.g. Rescaled_Meps at
/// small eps); no regime check.
inline HalfCylinderSolution solve_u(const GeneratorCoefficients& gc, const std::vector<double>& f,
                                    const HalfCylinderGrid& g) {
    return detail::solve_attracting(gc, f, g);
}

struct ExitProbability {
    std::vector<double> zz;
    std::vector<double> h;  // (j, i) layout, rows 0..n_z
    std::optional<double> truncation_estimate;
    int n_y = 0;
    double at(int i, int j) const {
        return h[static_cast<std::size_t>(j) * static_cast<std::size_t>(n_y) + static_cast<std::size_t>(i)];
    }
};

namespace detail {

inline ExitProbability solve_h_plain(const GeneratorCoefficients& gc, const HalfCylinderGrid& g) {
    g.check();
    ExitProbability r;
    r.n_y = g.n_y;
    r.zz = g.nodes();
    DiscreteProblem p = assemble_problem<NoWeight>(gc, g, TopCondition::Dirichlet, r.zz, nullptr);
    std::vector<double> ones(static_cast<std::size_t>(g.n_y), 1.0);
    std::vector<double> x = solve_problem(p, ones);
    r.h = ones;
    r.h.insert(r.h.end(), x.begin(), x.end());
    r.h.insert(r.h.end(), static_cast<std::size_t>(g.n_y), 0.0);
    return r;
}

/// h = G q with the radial gauge G = (1 + zz^2)^(-gamma/2); q solves the
/// G-conjugated problem with q = 1 at zz = 0 and a flat top. Returns ln h on
/// rows 0..n_z + 1 (the last is the ghost row mirrored in q).
struct GaugedH {
    std::vector<double> log_h;  // (n_z + 2) * n_y
    std::vector<double> q;      // (n_z + 1) * n_y
    double gamma = 0.0;
};

inline GaugedH solve_h_gauged(const GeneratorCoefficients& gc, const HalfCylinderGrid& g, double gamma,
                              const std::vector<double>& z) {
    const int ny = g.n_y, nz = g.n_z;
    const double ghost_z = 2.0 * z[static_cast<std::size_t>(nz)] - z[static_cast<std::size_t>(nz - 1)];
    auto log_gauge = [&](int j) {
        double zj = j > nz ? ghost_z : z[static_cast<std::size_t>(j)];
        return -0.5 * gamma * std::log1p(zj * zj);
    };
    struct Gauge {
        const decltype(log_gauge)* lg;
        double operator()(int j, int) const { return (*lg)(j); }
    } gauge{&log_gauge};
    DiscreteProblem p = assemble_problem<Gauge>(gc, g, TopCondition::Neumann, z, &gauge);
    std::vector<double> ones(static_cast<std::size_t>(ny), 1.0);
    std::vector<double> x = solve_problem(p, ones);
    GaugedH out;
    out.gamma = gamma;
    out.q = ones;
    out.q.insert(out.q.end(), x.begin(), x.end());
    out.log_h.resize(static_cast<std::size_t>((nz + 2) * ny));
    for (int j = 0; j <= nz + 1; ++j) {
        int jq = j > nz ? nz - 1 : j;
        for (int i = 0; i < ny; ++i) {
            double q = out.q[static_cast<std::size_t>(jq * ny + i)];
            if (!(q > 1e-12))
                fail(ErrorCode::HTransformSingular, "gauged exit probability below 1e-12");
            out.log_h[static_cast<std::size_t>(j * ny + i)] = log_gauge(j) + std::log(q);
        }
    }
    return out;
}

struct LogH {
    const std::vector<double>* lh;
    int ny;
    double operator()(int j, int i) const { return (*lh)[static_cast<std::size_t>(j * ny + i)]; }
};

}  // namespace detail

/// Exit probability h: h = 1 at zz = 0, h = 0 at zz = Z.
inline ExitProbability solve_h(const ChartModel& m,
                               const HalfCylinderGrid& g = HalfCylinderGrid::uniform(64, 400, 40.0),
                               bool with_truncation = true) {
    detail::require_regime(m, true);
    GeneratorCoefficients gc = assemble(m, 0.0, Flavor::LimitM);
    ExitProbability r = detail::solve_h_plain(gc, g);
    if (with_truncation) {
        // Z vs 2Z at the same spacing.
        HalfCylinderGrid g2 = g.with_height(2.0 * g.Z);
        if (g.stretching == Stretching::Uniform) g2.n_z = 2 * g.n_z;
        ExitProbability r2 = detail::solve_h_plain(gc, g2);
        double diff = 0.0;
        for (int j = 0; j <= g.n_z; ++j) {
            // compare at shared heights through linear interpolation of r2's columns
            double zj = r.zz[static_cast<std::size_t>(j)];
            auto it = std::lower_bound(r2.zz.begin(), r2.zz.end(), zj);
            int k = static_cast<int>(it - r2.zz.begin());
            for (int i = 0; i < g.n_y; ++i) {
                double v2;
                if (k == 0) v2 = r2.at(i, 0);
                else {
                    double z0 = r2.zz[static_cast<std::size_t>(k - 1)], z1 = r2.zz[static_cast<std::size_t>(k)];
                    double t = (zj - z0) / (z1 - z0);
                    v2 = (1.0 - t) * r2.at(i, k - 1) + t * r2.at(i, k);
                }
                diff = std::max(diff, std::abs(v2 - r.at(i, j)));
            }
        }
        r.truncation_estimate = diff;
    }
    return r;
}

/// Conditioned problem (h^-1 M h) u = 0, u = f at zz = 0, flat top, where h
/// is the exit probability (computed in gauged form).
inline HalfCylinderSolution solve_conditioned(const ChartModel& m, const std::vector<double>& f,
                                              const HalfCylinderGrid& g = HalfCylinderGrid::standard(),
                                              bool with_truncation = true);

namespace detail {

struct ConditionedSystem {
    DiscreteProblem problem;
    GaugedH h;
    std::vector<double> z;
};

inline ConditionedSystem conditioned_system(const ChartModel& m, const HalfCylinderGrid& g) {
    g.check();
    GeneratorCoefficients gc = assemble(m, 0.0, Flavor::LimitM);
    ConditionedSystem cs;
    cs.z = g.nodes();
    cs.h = solve_h_gauged(gc, g, far_field_exponent(m, g.n_y), cs.z);
    LogH lw{&cs.h.log_h, g.n_y};
    cs.problem = assemble_problem<LogH>(gc, g, TopCondition::Neumann, cs.z, &lw);
    return cs;
}

inline HalfCylinderSolution solve_conditioned_once(const ChartModel& m, const std::vector<double>& f,
                                                   const HalfCylinderGrid& g) {
    if (static_cast<int>(f.size()) != g.n_y)
        fail(ErrorCode::InvalidArgument, "boundary data size must equal N_y");
    ConditionedSystem cs = conditioned_system(m, g);
    HalfCylinderSolution s;
    s.grid = g;
    s.zz = cs.z;
    std::vector<double> x = solve_problem(cs.problem, f);
    s.u = f;
    s.u.insert(s.u.end(), x.begin(), x.end());
    s.h.resize(static_cast<std::size_t>((g.n_z + 1) * g.n_y));
    for (std::size_t k = 0; k < s.h.size(); ++k) s.h[k] = std::exp(cs.h.log_h[k]);
    fill_summary(s);
    return s;
}

}  // namespace detail

inline HalfCylinderSolution solve_conditioned(const ChartModel& m, const std::vector<double>& f,
                                              const HalfCylinderGrid& g, bool with_truncation) {
    detail::require_regime(m, true);
    HalfCylinderSolution s = detail::solve_conditioned_once(m, f, g);
    if (with_truncation)
        s.truncation_estimate =
            std::abs(s.ubar - detail::solve_conditioned_once(m, f, g.with_height(g.Z / 2)).ubar);
    return s;
}

inline HalfCylinderSolution solve_conditioned(const ChartModel& m, const PeriodicFn& f,
                                              const HalfCylinderGrid& g = HalfCylinderGrid::standard(),
                                              bool with_truncation = true) {
    return solve_conditioned(m, detail::on_grid(f, g.n_y), g, with_truncation);
}

/// ubar for either regime (conditioned when repelling).
inline HalfCylinderSolution solve_limit(const ChartModel& m, const PeriodicFn& f,
                                        const HalfCylinderGrid& g = HalfCylinderGrid::standard(),
                                        bool with_truncation = false) {
    if (classify(m).verdict == Verdict::Repelling) return solve_conditioned(m, f, g, with_truncation);
    return solve_u(m, f, g, with_truncation);
}

struct VariationDecay {
    std::vector<int> levels;
    std::vector<double> V;
    double rate = 0.0;       // fitted slope of ln V_n against n (negative = decay)
    double r_squared = 0.0;  // of the log-linear fit
};

/// Oscillation of u over the curves Gamma_n = {psi(y) + ln zz = n}.
inline VariationDecay variation_decay(const HalfCylinderSolution& s, const PeriodicGridFn& psi,
                                      const std::vector<int>& levels) {
    VariationDecay out;
    const int ny = s.grid.n_y;
    const double zlo = s.zz[1], zhi = s.zz.back();
    for (int n : levels) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        int resolved = 0;
        for (int i = 0; i < ny; ++i) {
            double y = s.grid.dy() * i;
            double z = std::exp(n - psi(y));
            if (z < zlo || z > zhi) continue;
            ++resolved;
            double v = s.column_value(i, z);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (resolved < 8)
            fail(ErrorCode::LevelSetUnresolved,
                 "level set " + std::to_string(n) + " crosses fewer than 8 grid columns");
        out.levels.push_back(n);
        out.V.push_back(hi - lo);
    }
    // least squares of ln V against n over positive entries
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < out.V.size(); ++k)
        if (out.V[k] > 0.0) {
            xs.push_back(out.levels[k]);
            ys.push_back(std::log(out.V[k]));
        }
    if (xs.size() >= 3) {
        double mx = 0, my = 0;
        for (std::size_t k = 0; k < xs.size(); ++k) { mx += xs[k]; my += ys[k]; }
        mx /= xs.size();
        my /= ys.size();
        double sxx = 0, sxy = 0, syy = 0;
        for (std::size_t k = 0; k < xs.size(); ++k) {
            sxx += (xs[k] - mx) * (xs[k] - mx);
            sxy += (xs[k] - mx) * (ys[k] - my);
            syy += (ys[k] - my) * (ys[k] - my);
        }
        out.rate = sxy / sxx;
        out.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    }
    return out;
}

namespace detail {

/// Exit weights from the interpolated start functional e: nu = -B^T A^-T e.
inline ExitMeasure adjoint_exit(const DiscreteProblem& p, const std::vector<double>& e, int ny) {
    std::vector<double> lam = LinearSolver(p.A).solve_transpose(e, 1e-10);
    Eigen::Map<const Eigen::VectorXd> lv(lam.data(), static_cast<Eigen::Index>(lam.size()));
    Eigen::VectorXd nu = -(p.B.transpose() * lv);
    ExitMeasure m;
    m.source = ExitMeasure::Source::Adjoint;
    m.density.resize(static_cast<std::size_t>(ny));
    for (int k = 0; k < ny; ++k) m.density[static_cast<std::size_t>(k)] = nu(k) / (two_pi / ny);
    return m;
}

/// Bilinear (y periodic, zz linear in ln zz) interpolation functional.
inline std::vector<double> point_functional(const HalfCylinderGrid& g, const std::vector<double>& z,
                                            RescaledPoint start, int rows) {
    const int ny = g.n_y;
    if (!(start.zz >= z[1] && start.zz <= z[static_cast<std::size_t>(rows)]))
        fail(ErrorCode::InvalidArgument, "start height outside the resolved grid");
    std::vector<double> e(static_cast<std::size_t>(rows * ny), 0.0);
    double t = wrap_angle(start.y) / g.dy();
    int i0 = static_cast<int>(std::floor(t));
    double sy = t - i0;
    auto it = std::lower_bound(z.begin() + 1, z.begin() + rows + 1, start.zz);
    int j1 = std::max(2, static_cast<int>(it - z.begin()));
    j1 = std::min(j1, rows);
    int j0 = j1 - 1;
    double l0 = std::log(z[static_cast<std::size_t>(j0)]), l1 = std::log(z[static_cast<std::size_t>(j1)]);
    double sz = std::clamp((std::log(start.zz) - l0) / (l1 - l0), 0.0, 1.0);
    auto put = [&](int i, int j, double w) {
        e[static_cast<std::size_t>((j - 1) * ny + ((i % ny) + ny) % ny)] += w;
    };
    put(i0, j0, (1 - sy) * (1 - sz));
    put(i0 + 1, j0, sy * (1 - sz));
    put(i0, j1, (1 - sy) * sz);
    put(i0 + 1, j1, sy * sz);
    return e;
}

inline std::vector<double> top_functional(const HalfCylinderGrid& g, int rows) {
    std::vector<double> e(static_cast<std::size_t>(rows * g.n_y), 0.0);
    for (int i = 0; i < g.n_y; ++i) e[static_cast<std::size_t>((rows - 1) * g.n_y + i)] = 1.0 / g.n_y;
    return e;
}

inline DiscreteProblem exit_problem(const ChartModel& m, const HalfCylinderGrid& g, std::vector<double>& z) {
    g.check();
    if (classify(m).verdict == Verdict::Repelling) {
        detail::ConditionedSystem cs = detail::conditioned_system(m, g);
        z = cs.z;
        return std::move(cs.problem);
    }
    z = g.nodes();
    return assemble_problem<NoWeight>(assemble(m, 0.0, Flavor::LimitM), g, TopCondition::Neumann, z, nullptr);
}

}  // namespace detail

/// Exit-location law nu^x from start (conditioned on exit when repelling),
/// by one transposed solve.
inline ExitMeasure exit_measure(const ChartModel& m, RescaledPoint start,
                                const HalfCylinderGrid& g = HalfCylinderGrid::standard()) {
    std::vector<double> z;
    detail::DiscreteProblem p = detail::exit_problem(m, g, z);
    return detail::adjoint_exit(p, detail::point_functional(g, z, start, g.n_z), g.n_y);
}

/// Limit law nu: the exit measure seen from the top row (y-averaged), so that
/// its integral against f is ubar.
inline ExitMeasure limit_exit_measure(const ChartModel& m,
                                      const HalfCylinderGrid& g = HalfCylinderGrid::standard()) {
    std::vector<double> z;
    detail::DiscreteProblem p = detail::exit_problem(m, g, z);
    return detail::adjoint_exit(p, detail::top_functional(g, g.n_z), g.n_y);
}

/// Total-variation distance between two measures on the same grid.
inline double total_variation(const ExitMeasure& a, const ExitMeasure& b) {
    if (a.density.size() != b.density.size())
        fail(ErrorCode::InvalidArgument, "exit measures on different grids");
    double s = 0.0;
    for (std::size_t k = 0; k < a.density.size(); ++k) s += std::abs(a.density[k] - b.density[k]);
    return 0.5 * s * a.spacing();
}

}  // namespace degen
