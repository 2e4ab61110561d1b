#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "degen/ambient.hpp"
#include "degen/fields.hpp"
#include "degen/models.hpp"
#include "test_util.hpp"

using namespace degen;
using degen::testing::code_of;

namespace {

using Fn = std::function<double(double, double)>;

/// Directional derivative v . grad f by central differences.
Fn along(const VectorField& v, Fn f, double h) {
    return [v, f, h](double x1, double x2) {
        FieldValue fv = v(x1, x2);
        double fx = (f(x1 + h, x2) - f(x1 - h, x2)) / (2 * h);
        double fy = (f(x1, x2 + h) - f(x1, x2 - h)) / (2 * h);
        return fv.v[0] * fx + fv.v[1] * fy;
    };
}

/// Stratonovich generator V0 f + (1/2) sum V_k V_k f evaluated by nested
/// finite differences, independent of the Ito conversion under test.
double strat_generator(const std::vector<VectorField>& fields, Fn f, double x1, double x2) {
    double out = along(fields[0], f, 1e-5)(x1, x2);
    for (std::size_t k = 1; k < fields.size(); ++k) {
        Fn once = along(fields[k], f, 1e-5);
        out += 0.5 * along(fields[k], once, 1e-4)(x1, x2);
    }
    return out;
}

AmbientModel rotation_radial(double scale) {
    AmbientModel m;
    m.name = "rotation-radial";
    m.v = {VectorField{}, VectorField{VectorField::Tangential{}},
           VectorField{VectorField::Normal{PeriodicFn::constant(-scale), 1.0}}};
    m.tilde_v = {VectorField{}, VectorField{VectorField::Constant{1.0, 0.0}},
                 VectorField{VectorField::Constant{0.0, 1.0}}};
    return m;
}

double zfun(double x1, double x2) { return 1.0 - std::hypot(x1, x2); }

}  // namespace

TEST(AmbientExtraction, RotationPlusScaledRadialMatchesFiniteDifferenceOracle) {
    for (double scale : {1.0, 2.0}) {
        AmbientModel m = rotation_radial(scale);
        // oracle: h1 = L z and h2 = (1/2) L z^2 at small z
        const double z = 1e-2, y = 0.7;
        double x1 = (1 - z) * std::cos(y), x2 = (1 - z) * std::sin(y);
        double h1 = strat_generator(m.v, zfun, x1, x2);
        double h2 = 0.5 * strat_generator(m.v, [](double a, double b) { return zfun(a, b) * zfun(a, b); }, x1, x2);
        double oracle_beta = h1 / z, oracle_ratio = h2 / (z * z);
        EXPECT_NEAR(oracle_beta, 0.5 * scale * scale, 1e-4);
        EXPECT_NEAR(oracle_ratio, scale * scale, 1e-3);

        AlphaBetaExtraction ex = extract_alpha_beta(m, 0.05);
        for (std::size_t i = 0; i < ex.y.size(); ++i) {
            EXPECT_NEAR(ex.beta[i], oracle_beta, 1e-3);
            EXPECT_NEAR(ex.half_lz2_ratio[i], oracle_ratio, 1e-3);
            // normal-form alpha is the normal diffusion: (1/2) Lz^2 / z^2 - Lz / z
            EXPECT_NEAR(ex.alpha[i], oracle_ratio - oracle_beta, 2e-3);
        }
        EXPECT_LT(ex.residual, 1e-6);
    }
}

TEST(AmbientExtraction, ReproducesChartModelCoefficients) {
    // v2 = -c(theta) z e_r gives alpha = beta = c^2 / 2; the drift v0 = -c0 z e_r adds c0 to beta.
    PeriodicFn c = PeriodicFn::cosine(1.0, 0.3);
    AmbientModel m = rotation_radial(1.0);
    m.v[0] = VectorField{VectorField::Normal{PeriodicFn::constant(0.4), 1.0}};
    m.v[2] = VectorField{VectorField::Normal{c, 1.0}};
    AlphaBetaExtraction ex = extract_alpha_beta(m, 0.05);
    for (std::size_t i = 0; i < ex.y.size(); ++i) {
        double cy = c(ex.y[i]);
        EXPECT_NEAR(ex.alpha[i], 0.5 * cy * cy, 1e-6);
        EXPECT_NEAR(ex.beta[i], 0.5 * cy * cy + 0.4, 1e-6);
    }
}

TEST(AmbientExtraction, PureTangentialModelRejected) {
    AmbientModel m = rotation_radial(1.0);
    m.v[2] = VectorField{VectorField::Tangential{PeriodicFn::constant(0.5)}};
    EXPECT_FALSE(validate(m).ok());
    EXPECT_EQ(code_of([&] { extract_alpha_beta(m, 0.05); }), ErrorCode::SpanViolation);
}

TEST(AmbientValidation, RotationRadialPasses) {
    ValidationReport r = validate(rotation_radial(1.0));
    EXPECT_TRUE(r.ok());
    EXPECT_GT(r.points_checked, 0);
}

TEST(AmbientValidation, NormalComponentOnBoundaryIsTangencyViolation) {
    AmbientModel m = rotation_radial(1.0);
    m.v[2] = VectorField{VectorField::Radial{1.0}};
    ValidationReport r = validate(m);
    ASSERT_TRUE(r.has("tangency"));
    EXPECT_EQ(r.violations[0].code, ErrorCode::TangencyViolation);
    EXPECT_EQ(code_of([&] { extract_alpha_beta(m, 0.05); }), ErrorCode::TangencyViolation);
}

TEST(AmbientFields, JacobiansMatchFiniteDifferences) {
    std::vector<VectorField> fields = {
        VectorField{VectorField::Tangential{PeriodicFn::cosine(1.0, 0.4, 0.3)}},
        VectorField{VectorField::Normal{PeriodicFn::cosine(0.5, 0.2), 2.0}},
        VectorField{VectorField::Radial{1.5}},
        VectorField{VectorField::Constant{0.3, -0.2}},
    };
    const double h = 1e-6;
    for (const auto& f : fields)
        for (auto [x1, x2] : {std::pair{0.6, 0.2}, std::pair{-0.3, 0.7}}) {
            FieldValue v = f(x1, x2);
            for (int i = 0; i < 2; ++i) {
                double dx = (f(x1 + h, x2).v[i] - f(x1 - h, x2).v[i]) / (2 * h);
                double dy = (f(x1, x2 + h).v[i] - f(x1, x2 - h).v[i]) / (2 * h);
                EXPECT_NEAR(v.jac[i][0], dx, 1e-7);
                EXPECT_NEAR(v.jac[i][1], dy, 1e-7);
            }
        }
}

TEST(ChartValidation, ZeroRhoFailsAssumptionC) {
    ChartModel m = models::model_a();
    m.rho = PeriodicFn::constant(0.0);
    ValidationReport r = validate(m);
    EXPECT_TRUE(r.has("c"));
    EXPECT_FALSE(r.has("a"));
}

TEST(ChartValidation, NonPositiveAlphaFailsGenericity) {
    ChartModel m = models::model_a();
    m.alpha = PeriodicFn::cosine(0.2, 0.5);
    EXPECT_TRUE(validate(m).has("generic"));
}

TEST(ChartValidation, BuiltinsPass) {
    for (const auto& e : models::catalog()) EXPECT_TRUE(validate(e.model).ok()) << e.name;
}

TEST(Assemble, ModelALimitFlavor) {
    GeneratorCoefficients g = assemble(models::model_a(), 0.0, Flavor::LimitM);
    for (double zz : {0.0, 0.5, 3.0}) {
        OperatorCoeffs c = g(1.3, zz);
        EXPECT_DOUBLE_EQ(c.a22, zz * zz + 1.0);
        EXPECT_DOUBLE_EQ(c.b1, 0.0);
        EXPECT_DOUBLE_EQ(c.b2, 0.0);
        EXPECT_DOUBLE_EQ(c.a11, 0.5);
    }
}

TEST(Assemble, LogChartFlavor) {
    GeneratorCoefficients ga = assemble(models::model_a(), 0.3, Flavor::LogChartA);
    GeneratorCoefficients gb = assemble(models::model_b(), 0.3, Flavor::LogChartA);
    EXPECT_FALSE(ga.absorbs_at_zero());
    for (double w : {-2.0, 0.0, 1.5}) {
        double leak = std::exp(-2 * w);
        EXPECT_NEAR(ga(0.2, w).b2, -(1 + leak), 1e-14);
        EXPECT_NEAR(ga(0.2, w).a22, 1 + leak, 1e-14);
        EXPECT_NEAR(gb(0.2, w).b2, 2 - leak, 1e-14);
    }
}

TEST(Assemble, FlavorPreconditions) {
    ChartModel m = models::model_a();
    EXPECT_EQ(code_of([&] { assemble(m, 0.0, Flavor::RescaledMeps); }), ErrorCode::InvalidEpsilon);
    EXPECT_EQ(code_of([&] { assemble(m, -0.1, Flavor::UnscaledLeps); }), ErrorCode::InvalidEpsilon);
    EXPECT_EQ(code_of([&] { assemble(m, 0.1, Flavor::UnscaledLeps, true); }), ErrorCode::FlavorRangeError);
    m.remainder = Remainder{};
    EXPECT_EQ(code_of([&] { assemble(m, 0.1, Flavor::LimitM, true); }), ErrorCode::FlavorRangeError);
    EXPECT_NO_THROW(assemble(m, 0.1, Flavor::RescaledMeps, true));
}

TEST(Assemble, UnscaledAtZeroEpsIsUnperturbed) {
    ChartModel m = models::model_tilted();
    OperatorCoeffs c = assemble(m, 0.0, Flavor::UnscaledLeps)(0.4, 0.2);
    EXPECT_DOUBLE_EQ(c.a22, 0.04 * m.alpha(0.4));
    EXPECT_DOUBLE_EQ(c.b2, 0.2 * m.beta(0.4));
    EXPECT_DOUBLE_EQ(c.b1, m.b(0.4));
}

namespace {

ChartModel perturbed_model() {
    ChartModel m = models::model_tilted();
    m.d = PeriodicFn::cosine(0.1, 0.1);
    m.perturbation.a_yy = PeriodicFn::cosine(0.6, 0.1);
    m.perturbation.a_yz = PeriodicFn::cosine(0.1, 0.05);
    m.perturbation.zz_growth = 0.5;
    m.perturbation.b_y = PeriodicFn::constant(0.2);
    m.perturbation.b_z = PeriodicFn::cosine(0.0, 0.3);
    Remainder r;
    r.k2 = PeriodicFn::constant(0.1);
    r.k1 = PeriodicFn::constant(0.05);
    r.n1 = PeriodicFn::constant(0.02);
    r.n0 = PeriodicFn::constant(0.03);
    r.sigma = PeriodicFn::constant(0.04);
    m.remainder = r;
    return m;
}

/// Largest coefficient gap between L^eps written in (y, zz = z/eps) and the
/// limit operator M over S x [0, r].
double rescaled_gap(const ChartModel& m, double eps, double r, bool remainder) {
    GeneratorCoefficients un = assemble(m, eps, Flavor::UnscaledLeps, remainder);
    GeneratorCoefficients lim = assemble(m, 0.0, Flavor::LimitM);
    double worst = 0.0;
    for (int i = 0; i < 32; ++i)
        for (int j = 0; j <= 16; ++j) {
            double y = two_pi * i / 32, zz = r * j / 16;
            OperatorCoeffs u = un(y, eps * zz);
            OperatorCoeffs v{u.a11, u.a12 / eps, u.a22 / (eps * eps), u.b1, u.b2 / eps};
            worst = std::max(worst, (v - lim(y, zz)).max_abs());
        }
    return worst;
}

}  // namespace

TEST(Assemble, RescaledPerturbationVanishesUniformly) {
    ChartModel m = perturbed_model();
    for (bool remainder : {false, true}) {
        double g1 = rescaled_gap(m, 0.1, 4.0, remainder);
        double g2 = rescaled_gap(m, 0.05, 4.0, remainder);
        double g3 = rescaled_gap(m, 0.025, 4.0, remainder);
        EXPECT_GT(g1, g2);
        EXPECT_GT(g2, g3);
        // first order in eps
        EXPECT_NEAR(g1 / g2, 2.0, 0.3);
        EXPECT_NEAR(g2 / g3, 2.0, 0.3);
    }
}

TEST(Assemble, RescaledFlavorEqualsChangeOfVariables) {
    ChartModel m = perturbed_model();
    const double eps = 0.07;
    GeneratorCoefficients un = assemble(m, eps, Flavor::UnscaledLeps, true);
    GeneratorCoefficients re = assemble(m, eps, Flavor::RescaledMeps, true);
    for (double y : {0.0, 1.0, 4.0})
        for (double zz : {0.0, 0.5, 2.0}) {
            OperatorCoeffs u = un(y, eps * zz), r = re(y, zz);
            EXPECT_NEAR(r.a11, u.a11, 1e-14);
            EXPECT_NEAR(r.a12, u.a12 / eps, 1e-13);
            EXPECT_NEAR(r.a22, u.a22 / (eps * eps), 1e-12);
            EXPECT_NEAR(r.b1, u.b1, 1e-14);
            EXPECT_NEAR(r.b2, u.b2 / eps, 1e-13);
        }
}

TEST(Assemble, DiffusionMatricesPositiveSemidefinite) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> uy(0.0, two_pi), uz(0.0, 0.5), uzz(0.0, 50.0), uw(-5.0, 5.0);
    std::vector<ChartModel> ms;
    for (const auto& e : models::catalog()) ms.push_back(e.model);
    ChartModel pm = perturbed_model();
    pm.remainder.reset();
    ms.push_back(pm);
    int checked = 0;
    for (int k = 0; k < 10000; ++k) {
        const ChartModel& m = ms[static_cast<std::size_t>(k) % ms.size()];
        double y = uy(gen);
        OperatorCoeffs cs[] = {assemble(m, 0.1, Flavor::UnscaledLeps)(y, uz(gen)),
                               assemble(m, 0.1, Flavor::RescaledMeps)(y, uzz(gen)),
                               assemble(m, 0.0, Flavor::LimitM)(y, uzz(gen)),
                               assemble(m, 0.0, Flavor::LogChartA)(y, uw(gen))};
        for (const auto& c : cs) {
            // rho_min > 0 for every model here, so the matrices are definite
            EXPECT_GT(c.a11, 0.0);
            EXPECT_GT(c.determinant(), 0.0);
            ++checked;
        }
    }
    EXPECT_EQ(checked, 40000);
}
