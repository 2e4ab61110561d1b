#include <gtest/gtest.h>

#include <cmath>

#include "degen/dirichlet.hpp"
#include "degen/models.hpp"
#include "degen/parabolic.hpp"
#include "test_util.hpp"

using namespace degen;
using degen::testing::code_of;

namespace {

StoppedProcessSpec spec_a(PeriodicFn g, PeriodicFn psi) {
    StoppedProcessSpec s;
    s.model = models::model_a();
    s.g = std::move(g);
    s.psi = std::move(psi);
    return s;
}

SimulationParams mc(int n, std::uint64_t seed) {
    SimulationParams p;
    p.n_paths = n;
    p.seed = seed;
    return p;
}

}  // namespace

TEST(EvolveMc, ZeroTimeReturnsInitialData) {
    StoppedProcessSpec s = spec_a(PeriodicFn::cosine(0.0, 1.0), PeriodicFn::constant(1.0));
    Estimate e = evolve_mc(s, 0.1, 0.0, {0.0, 0.5}, mc(10, 1));
    EXPECT_DOUBLE_EQ(e.mean, std::cos(std::atan2(0.5, 0.0)));
    EXPECT_EQ(e.stderr_, 0.0);
}

TEST(EvolveMc, EqualConstantDataIsExact) {
    StoppedProcessSpec s = spec_a(PeriodicFn::constant(0.4), PeriodicFn::constant(0.4));
    for (double t : {0.5, 3.0}) {
        Estimate e = evolve_mc(s, 0.2, t, {0.3, 0.1}, mc(100, 2));
        EXPECT_DOUBLE_EQ(e.mean, 0.4);
        EXPECT_EQ(e.stderr_, 0.0);
    }
}

TEST(EvolveMc, EstimatesStayWithinDataRange) {
    PeriodicFn f = PeriodicFn::cosine(0.2, 0.5);
    StoppedProcessSpec s = spec_a(f, PeriodicFn::constant(1.0));
    for (double t : {0.5, 4.0}) {
        Estimate e = evolve_mc(s, 0.2, t, {0.6, 0.0}, mc(500, 3));
        EXPECT_GE(e.mean, -0.3);
        EXPECT_LE(e.mean, 1.0);
    }
}

TEST(EvolveMc, ExitProbabilityNondecreasingInTime) {
    StoppedProcessSpec s = spec_a(PeriodicFn::constant(0.0), PeriodicFn::constant(1.0));
    double prev = 0.0;
    for (double t : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        Estimate e = evolve_mc(s, 0.1, t, {0.0, 0.0}, mc(500, 4));
        EXPECT_GE(e.mean, prev) << "t=" << t;
        EXPECT_GE(e.mean, 0.0);
        EXPECT_LE(e.mean, 1.0);
        prev = e.mean;
    }
}

TEST(EvolveMc, LongTimeRecoversDirichletValue) {
    PeriodicFn psi = PeriodicFn::cosine(0.0, 1.0);
    StoppedProcessSpec s;
    s.model = models::model_d();
    s.psi = psi;
    SimulationParams p = mc(2000, 5);
    Estimate e = evolve_mc(s, 0.2, 60.0, {0.2, 0.0}, p);
    DiskOperator op(s.model, 0.2, s.completion);
    std::vector<ProbePoint> probe{{"x", {0.2, 0.0}}};
    double fd = solve_fd(op, psi, DiskGrid::for_eps(0.2, 128), probe).probe_values.at("x");
    EXPECT_TRUE(e.agrees_with(fd, 3.0)) << e.mean << " +- " << e.stderr_ << " fd " << fd;
}

TEST(EvolveMc, AnnulusIsRejected) {
    StoppedProcessSpec s = spec_a(PeriodicFn::constant(0.0), PeriodicFn::constant(1.0));
    s.domain = DomainModel::annulus(0.5, 0.2);
    EXPECT_EQ(code_of([&] { evolve_mc(s, 0.1, 1.0, {0.7, 0.0}, mc(10, 1)); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { evolve_mc(s, 0.1, -1.0, {0.7, 0.0}, mc(10, 1)); }), ErrorCode::InvalidArgument);
}

TEST(TimeRule, Times) {
    EXPECT_DOUBLE_EQ(TimeRule::constant(2.0).time(0.01), 2.0);
    EXPECT_DOUBLE_EQ(TimeRule::log_eps(3.0).time(std::exp(-2.0)), 6.0);
    EXPECT_DOUBLE_EQ(TimeRule::power(1.0, 0.5).time(0.04), 5.0);
    EXPECT_EQ(TimeRule::log_eps(1.0).name(), "log");
}

TEST(TimescaleSweep, PlateausAtSmallEps) {
    StoppedProcessSpec s = spec_a(PeriodicFn::constant(0.0), PeriodicFn::constant(1.0));
    TimescaleSweep sw = timescale_sweep(s, {0.02}, {TimeRule::constant(1.0), TimeRule::log_eps(3.0)}, {0.0, 0.0},
                                        mc(1000, 17));
    ASSERT_EQ(sw.rows.size(), 2u);
    EXPECT_DOUBLE_EQ(sw.boundary_plateau, 1.0);
    const TimescaleRow& lo = sw.rows[0];
    const TimescaleRow& hi = sw.rows[1];
    EXPECT_LE(std::abs(lo.estimate.mean - lo.interior_plateau), 3.0 * lo.estimate.stderr_ + 0.05);
    EXPECT_LE(std::abs(hi.estimate.mean - sw.boundary_plateau), 3.0 * hi.estimate.stderr_ + 0.05);
    EXPECT_EQ(lo.plateau, "interior");
    EXPECT_EQ(hi.plateau, "boundary");
    for (const auto& r : sw.rows) {
        EXPECT_GE(r.estimate.mean, 0.0);
        EXPECT_LE(r.estimate.mean, 1.0);
    }
}

TEST(TimescaleSweep, RejectsNonAttractingAndBadEps) {
    StoppedProcessSpec s = spec_a(PeriodicFn::constant(0.0), PeriodicFn::constant(1.0));
    s.model = models::model_b();
    EXPECT_EQ(code_of([&] { timescale_sweep(s, {0.1}, {TimeRule::constant(1.0)}, {0.0, 0.0}, mc(10, 1)); }),
              ErrorCode::WrongRegime);
    s.model = models::model_a();
    EXPECT_EQ(code_of([&] { timescale_sweep(s, {1.5}, {TimeRule::constant(1.0)}, {0.0, 0.0}, mc(10, 1)); }),
              ErrorCode::InvalidEpsilon);
}
