#include <random>

#include <gtest/gtest.h>

#include "coho_euler/integrate.hpp"
#include "coho_euler/initial_data.hpp"

using namespace coho_euler;
using std::numbers::pi;

namespace {

MetricProfile flat_torus(int n = 2) {
    return fourier_profile(reductive_split(abelian_algebra(n), {}), OrbitSpace::circle(1.0), ProfileFamily::WarpedTorus,
                           std::vector<FourierSeries>(static_cast<std::size_t>(n)));
}

MetricProfile sine_torus() {
    FourierSeries s;
    s.b = {1.0};
    return fourier_profile(reductive_split(abelian_algebra(1), {}), OrbitSpace::circle(1.0), ProfileFamily::WarpedTorus,
                           {s});
}

MetricProfile berger() {
    std::vector<FourierSeries> d(3);
    d[0].b = {0.05};
    d[0].a = {0.02};
    d[1].a0 = std::log(1.5);
    d[1].b = {-0.03};
    d[1].a = {0.04};
    d[2].a0 = std::log(2.0);
    d[2].b = {0.04};
    d[2].a = {-0.05};
    return fourier_profile(reductive_split(su2_algebra(), {}), OrbitSpace::circle(2 * pi), ProfileFamily::BergerCircle,
                           d);
}

InitialData berger_data(double c = 0.5) {
    InitialData init;
    init.c = c;
    init.v = {random_fourier(20261017, 0, 0.0, 3, 0.05), random_fourier(20261017, 1, 0.0, 3, 0.05),
              random_fourier(20261017, 2, 0.8, 3, 0.05)};
    return init;
}

CoeffMatrix constant_rows(std::size_t n, std::initializer_list<double> xs) {
    CoeffMatrix v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v.col(i++).setConstant(x);
    return v;
}

} // namespace

TEST(Diagnostics, EnergyExamples) {
    const auto flat = flat_torus();
    ReducedDynamics torus(profile_problem(flat), make_grid(flat.orbit_space, 64));
    EXPECT_NEAR(energy(torus.make_state(1.0, CoeffMatrix::Zero(64, 2)), torus), 0.5, 1e-14);

    // 1/2 int_0^{pi/2} cos^2 r cos r sin r dr = 1/8.
    const auto round = round_s3_t2_profile();
    ReducedDynamics interval(profile_problem(round), make_grid(round.orbit_space, 128));
    EXPECT_NEAR(energy(interval.make_state(0.0, constant_rows(128, {1.0, 0.0})), interval), 0.125, 1e-8);
    EXPECT_NEAR(energy(interval.make_state(0.0, constant_rows(128, {1.0, 2.0})), interval), 0.125 * 5, 1e-8);

    const InvariantMetric m{reductive_split(su2_algebra(), {}), Vec(Eigen::Vector3d(1, 2, 3)).asDiagonal()};
    ReducedDynamics hom(homogeneous_problem(m), homogeneous_grid());
    CoeffMatrix x(1, 3);
    x.setConstant(1.0 / std::sqrt(6.0));
    // 1/2 gram(X, X) times the orbit volume sqrt(det gram).
    EXPECT_NEAR(energy(hom.make_state(0.0, x), hom), 0.5 * std::sqrt(6.0), 1e-14);
}

TEST(Diagnostics, PointwiseSpeed) {
    const auto round = round_s3_t2_profile();
    const auto grid = make_grid(round.orbit_space, 16);
    ReducedDynamics dyn(profile_problem(round), grid);
    const auto s = dyn.make_state(0.0, constant_rows(16, {1.0, 2.0}));
    for (std::size_t j = 0; j < 16; ++j) {
        const double r = grid.r[j];
        EXPECT_NEAR(pointwise_speed(s, dyn, j), std::sqrt(std::pow(std::cos(r), 2) + 4 * std::pow(std::sin(r), 2)),
                    1e-14);
    }
    EXPECT_THROW(pointwise_speed(s, dyn, 16), InputError);
    const auto flat = flat_torus();
    ReducedDynamics torus(profile_problem(flat), make_grid(flat.orbit_space, 16));
    EXPECT_DOUBLE_EQ(pointwise_speed(torus.make_state(-3.0, CoeffMatrix::Zero(16, 2)), torus, 4), 3.0);
}

TEST(Diagnostics, C1Monitor) {
    const auto flat = flat_torus();
    const auto grid = make_grid(flat.orbit_space, 256);
    ReducedDynamics dyn(profile_problem(flat), grid);
    EXPECT_EQ(c1_monitor(dyn.make_state(0.0, CoeffMatrix::Zero(256, 2)), dyn).total, 0.0);
    CoeffMatrix v = CoeffMatrix::Zero(256, 2);
    for (int j = 0; j < 256; ++j) v(j, 0) = std::sin(2 * pi * grid.r[static_cast<std::size_t>(j)]);
    const auto m = c1_monitor(dyn.make_state(0.0, v), dyn);
    EXPECT_NEAR(m.speed, 1.0, 1e-12);
    EXPECT_NEAR(m.gradient, 2 * pi, 1e-6);
    EXPECT_EQ(m.shape, 0.0);
    EXPECT_DOUBLE_EQ(m.total, m.speed + m.gradient + m.shape);

    const auto round = round_s3_t2_profile();
    ReducedDynamics interval(profile_problem(round), make_grid(round.orbit_space, 64));
    const auto r = c1_monitor(interval.make_state(0.0, constant_rows(64, {1.0, 1.0})), interval);
    EXPECT_LT(r.gradient, 1e-12);
    EXPECT_GT(r.shape, 1.0); // |S v| grows like cot r near the collapsing circle
}

TEST(Diagnostics, DivergenceResidual) {
    const auto p = sine_torus();
    ReducedDynamics dyn(profile_problem(p), make_grid(p.orbit_space, 128));
    const auto s = dyn.make_state(2.0, CoeffMatrix::Constant(128, 1, 0.3));
    EXPECT_LT(divergence_residual(s, dyn), kDivergenceTolerance);
    // A constant amplitude is not divergence free on this circle: h' - H h = -H.
    double constant_h = 0.0;
    for (std::size_t j = 0; j < dyn.nodes(); ++j) constant_h = std::max(constant_h, std::abs(dyn.node(j).mean_curvature));
    EXPECT_GT(constant_h, 0.1);

    const auto b = berger();
    ReducedDynamics bd(profile_problem(b), make_grid(b.orbit_space, 128));
    EXPECT_LT(divergence_residual(sample_initial(berger_data(), bd), bd), kDivergenceTolerance);
}

TEST(Diagnostics, TaylorMonitor) {
    const auto round = round_s3_t2_profile();
    ReducedDynamics dyn(profile_problem(round), make_grid(round.orbit_space, 128));
    InitialData even;
    even.v = {CoefficientFunction::polynomial({1.0, 0.0, 3.0}), CoefficientFunction::constant(-2.0)};
    const auto fe = endpoint_taylor_monitor(sample_initial(even, dyn), dyn);
    EXPECT_LT(fe.parity_misfit, 1e-12);
    EXPECT_NEAR(fe.alpha[0], 1.0, 1e-12);
    EXPECT_NEAR(fe.beta[0], 3.0, 1e-8);
    EXPECT_NEAR(fe.alpha[1], -2.0, 1e-12);

    InitialData odd;
    odd.v = {CoefficientFunction::polynomial({0.0, 1.0}), CoefficientFunction::constant(0.0)};
    EXPECT_GT(endpoint_taylor_monitor(sample_initial(odd, dyn), dyn).parity_misfit, kParityMisfitTolerance);

    const auto zero = endpoint_taylor_monitor(dyn.make_state(0.0, CoeffMatrix::Zero(128, 2)), dyn);
    EXPECT_EQ(zero.parity_misfit, 0.0);
    EXPECT_EQ(zero.alpha[0], 0.0);

    const auto flat = flat_torus();
    ReducedDynamics torus(profile_problem(flat), make_grid(flat.orbit_space, 16));
    EXPECT_FALSE(taylor_applicable(torus));
    EXPECT_THROW(endpoint_taylor_monitor(torus.make_state(0.0, CoeffMatrix::Zero(16, 2)), torus), ValidationError);
}

TEST(Diagnostics, RandomFourierMatchesDirectDraws) {
    const std::uint64_t seed = 42;
    const auto f = random_fourier(seed, 2, 0.8, 3, 0.05);
    std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * 3ULL));
    auto u = [&] { return static_cast<double>(rng() >> 11) / 9007199254740992.0; };
    EXPECT_EQ(f.fourier.a0, 0.8);
    for (int k = 1; k <= 3; ++k) {
        const double a = 0.05 / (k * k) * (2 * u() - 1), b = 0.05 / (k * k) * (2 * u() - 1);
        EXPECT_EQ(f.fourier.a[static_cast<std::size_t>(k - 1)], a);
        EXPECT_EQ(f.fourier.b[static_cast<std::size_t>(k - 1)], b);
    }
    const auto g = random_fourier(seed, 1, 0.8, 3, 0.05);
    EXPECT_NE(f.fourier.a[0], g.fourier.a[0]);
}

TEST(Diagnostics, InitialDataValidation) {
    const auto circle = OrbitSpace::circle(1.0);
    InitialData d;
    d.v = {CoefficientFunction::polynomial({0.0, 1.0}), CoefficientFunction::constant(1.0)};
    const auto r = validate_initial_data(d, ProblemKind::Circle, &circle, 2);
    EXPECT_FALSE(r.passed());
    EXPECT_FALSE(r.find("v1_periodicity")->passed);
    EXPECT_TRUE(r.find("v2_periodicity")->passed);
    EXPECT_FALSE(validate_initial_data(d, ProblemKind::Circle, &circle, 3).find("coefficient_count")->passed);

    const auto interval = OrbitSpace::interval(1.0, EndpointKind::Singular, EndpointKind::Singular);
    InitialData e;
    FourierSeries s;
    s.a0 = 1.0;
    s.a = {0.2};
    e.v = {CoefficientFunction::fourier_series(s), CoefficientFunction::polynomial({1.0, -2.0, 1.0})};
    // (r - 1)^2 is even at the right end but not at the left.
    const auto ri = validate_initial_data(e, ProblemKind::Interval, &interval, 2);
    EXPECT_TRUE(ri.find("v1_parity_left")->passed);
    EXPECT_TRUE(ri.find("v1_parity_right")->passed);
    EXPECT_FALSE(ri.find("v2_parity_left")->passed);
    EXPECT_TRUE(ri.find("v2_parity_right")->passed);
    s.b = {0.1};
    e.v[0] = CoefficientFunction::fourier_series(s);
    EXPECT_FALSE(validate_initial_data(e, ProblemKind::Interval, &interval, 2).find("v1_parity_left")->passed);

    InitialData h;
    h.v = {CoefficientFunction::polynomial({1.0})};
    EXPECT_FALSE(validate_initial_data(h, ProblemKind::Homogeneous, nullptr, 1).passed());
    h.v = {CoefficientFunction::constant(1.0)};
    EXPECT_TRUE(validate_initial_data(h, ProblemKind::Homogeneous, nullptr, 1).passed());
}

TEST(Diagnostics, StepCountAndFinalTime) {
    EXPECT_EQ(step_count({0.3, 1.0, 0.5}), 4);
    EXPECT_EQ(step_count({1e-3, 1.0, 0.5}), 1000);
    EXPECT_EQ(step_count({0.1, 1.0, 0.5}), 10);
    EXPECT_THROW(step_count({0.0, 1.0, 0.5}), InputError);
    EXPECT_THROW(step_count({0.1, -1.0, 0.5}), InputError);

    const InvariantMetric m{reductive_split(su2_algebra(), {}), Vec(Eigen::Vector3d(1, 2, 3)).asDiagonal()};
    ReducedDynamics dyn(homogeneous_problem(m), homogeneous_grid());
    RunOptions opt;
    opt.solver = {0.3, 1.0, 0.5};
    const auto traj = integrate(dyn, dyn.make_state(0.0, constant_rows(1, {0.1, 0.2, 0.3})), opt);
    EXPECT_EQ(traj.final_state.t, 1.0);
    EXPECT_EQ(traj.report.series.size(), 5u);
    EXPECT_EQ(traj.snapshots.size(), 2u);
    EXPECT_FALSE(traj.failed());
}

TEST(Diagnostics, SeriesCadence) {
    const auto flat = flat_torus();
    ReducedDynamics dyn(profile_problem(flat), make_grid(flat.orbit_space, 32));
    RunOptions opt;
    opt.solver = {1e-3, 0.1, 0.5};
    opt.diagnostics_every = 30;
    opt.snapshot_every = 50;
    const auto traj = integrate(dyn, dyn.make_state(1.0, CoeffMatrix::Zero(32, 2)), opt);
    // Steps 0, 30, 60, 90 and the last.
    ASSERT_EQ(traj.report.series.size(), 5u);
    EXPECT_NEAR(traj.report.series.back().t, 0.1, 1e-15);
    ASSERT_EQ(traj.snapshots.size(), 3u);
    EXPECT_NEAR(traj.snapshots[1].t, 0.05, 1e-15);
    EXPECT_EQ(traj.report.summary.steps, 101u);
}

TEST(Diagnostics, BergerShortRunHasNoFlags) {
    const auto p = berger();
    ReducedDynamics dyn(profile_problem(p), make_grid(p.orbit_space, 64));
    RunOptions opt;
    opt.solver = {1e-2, 1.0, 0.5};
    const auto traj = integrate(dyn, sample_initial(berger_data(), dyn), opt);
    const auto& s = traj.report.summary;
    EXPECT_FALSE(s.any_flag(ProblemKind::Circle));
    EXPECT_TRUE(s.has_c_bound);
    EXPECT_GT(s.c_bound_margin, 0.0);
    EXPECT_LE(s.envelope_ratio_max, kEnvelopeFactor);
    EXPECT_LT(s.p_periodicity_max, kPressurePeriodicityTolerance);
    EXPECT_GT(s.energy_initial, 0.0);
    // The summary rebuilt from the recorded rows agrees when every step is kept.
    const auto again = conservation_report(traj.report);
    EXPECT_EQ(again.energy_drift_max, s.energy_drift_max);
    EXPECT_EQ(again.c1_ratio_max, s.c1_ratio_max);
}

TEST(Diagnostics, FaultInjectedClosureIsFlagged) {
    auto problem = profile_problem(berger());
    problem.dcdt_offset = 1.0;
    ReducedDynamics dyn(problem, make_grid(problem.profile->orbit_space, 64));
    RunOptions opt;
    opt.solver = {1e-2, 1.0, 0.5};
    opt.stop_on_pressure_failure = false;
    const auto traj = integrate(dyn, sample_initial(berger_data(), dyn), opt);
    EXPECT_FALSE(traj.failed());
    const auto s = conservation_report(traj.report);
    EXPECT_TRUE(s.energy_drift_flag(ProblemKind::Circle));
    EXPECT_TRUE(s.pressure_flag());

    opt.stop_on_pressure_failure = true;
    const auto stopped = integrate(dyn, sample_initial(berger_data(), dyn), opt);
    ASSERT_TRUE(stopped.failed());
    EXPECT_EQ(stopped.report.summary.failure->kind, "pressure_periodicity");
    EXPECT_EQ(stopped.snapshots.back().t, stopped.final_state.t);
}

TEST(Diagnostics, CflFailureEndsRun) {
    const auto flat = flat_torus();
    ReducedDynamics dyn(profile_problem(flat), make_grid(flat.orbit_space, 16));
    RunOptions opt;
    opt.solver = {1e-2, 1.0, 0.5};
    const auto traj = integrate(dyn, dyn.make_state(10.0, CoeffMatrix::Zero(16, 2)), opt);
    ASSERT_TRUE(traj.failed());
    EXPECT_EQ(traj.report.summary.failure->kind, "cfl");
    EXPECT_EQ(traj.final_state.t, 0.0);
    EXPECT_TRUE(traj.report.summary.any_flag(ProblemKind::Circle));
}

TEST(Diagnostics, SpeedDriftOnSteadyInterval) {
    const auto round = round_s3_t2_profile();
    ReducedDynamics dyn(profile_problem(round), make_grid(round.orbit_space, 32));
    RunOptions opt;
    opt.solver = {1e-2, 1.0, 0.5};
    const auto traj = integrate(dyn, dyn.make_state(0.0, constant_rows(32, {1.0, 2.0})), opt);
    EXPECT_EQ(traj.report.summary.speed_drift_max, 0.0);
    EXPECT_FALSE(traj.report.summary.any_flag(ProblemKind::Interval));
    EXPECT_TRUE(traj.report.has_taylor);
    ASSERT_TRUE(traj.report.series.front().taylor.has_value());
}

TEST(Diagnostics, VerticalFunctionalsSplitEnergy) {
    const auto p = berger();
    ReducedDynamics dyn(profile_problem(p), make_grid(p.orbit_space, 64));
    const auto s = sample_initial(berger_data(0.0), dyn);
    const auto f = vertical_functionals(s, dyn);
    ASSERT_EQ(f.size(), 3u);
    // With c = 0 the components add up to twice the energy.
    EXPECT_NEAR(f[0] + f[1] + f[2], 2.0 * energy(s, dyn), 1e-13);
    const auto round = round_s3_t2_profile();
    ReducedDynamics interval(profile_problem(round), make_grid(round.orbit_space, 16));
    EXPECT_EQ(vertical_functionals(interval.make_state(0.0, constant_rows(16, {1.0, 1.0})), interval),
              std::vector<double>(2, 0.0));
}
