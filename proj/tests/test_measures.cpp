#include "support.hpp"

#include "exlab/criteria.hpp"
#include "exlab/measures.hpp"
#include "exlab/presets.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace exlab;
using namespace exlab::test;

namespace {

// Mean of the stationary density x^(2 r / s^2 - 2) exp(-2 a x / s^2) of the
// logistic SDE, by trapezoidal quadrature on a log-spaced grid.
double logistic_sde_mean_quadrature(double r, double a, double s) {
    const double k = 2.0 * r / (s * s) - 2.0, c = 2.0 * a / (s * s);
    const double mode = std::max(k / c, 1e-3);
    double z = 0.0, m = 0.0, prev_x = 0.0, prev_w = 0.0;
    const int N = 200000;
    for (int j = 0; j <= N; ++j) {
        const double x = mode * std::exp(-12.0 + 16.0 * j / N);
        const double w = std::exp(k * std::log(x / mode) - c * (x - mode));
        if (j > 0) {
            const double h = x - prev_x;
            z += 0.5 * h * (w + prev_w);
            m += 0.5 * h * (x * w + prev_x * prev_w);
        }
        prev_x = x;
        prev_w = w;
    }
    return m / z;
}

const StateFunction first = [](const Vec& x, int) { return x(0); };
const StateFunction second = [](const Vec& x, int) { return x(1); };

}  // namespace

TEST(Occupation, ConstantAverageIsExact) {
    Trajectory tr = simulate(make_lotka_volterra(lotka_params()), vec({1, 1, 1}), 0, 10.0, 0.01, 1);
    EXPECT_NEAR(occupation_average(tr, [](const Vec&, int) { return 2.5; }, 1.0), 2.5, 1e-12);
}

TEST(Occupation, RegimeIndicator) {
    Trajectory tr = simulate(frozen(two_state(2, 1)), vec({1, 1}), 0, 1e4, 0.01, 6);
    const double v = occupation_average(tr, [](const Vec&, int a) { return a == 1 ? 1.0 : 0.0; }, 0.0);
    EXPECT_NEAR(v, 2.0 / 3.0, 2.0 / 3.0 * 0.02);
}

TEST(Occupation, MeasureIntegratesLikeTrajectory) {
    Trajectory tr = simulate(make_kolmogorov_preset(), vec({1, 1, 0.5}), 0, 50.0, 0.01, 2);
    OccupationMeasure mu = occupation_from_trajectory(tr, 5.0);
    EXPECT_NEAR(mu.integrate(first), occupation_average(tr, first, 5.0), 1e-10);
    EXPECT_NEAR(mu.total_weight(), 45.0, 1e-8);
}

TEST(Occupation, PointMassAndStandardError) {
    OccupationMeasure d = OccupationMeasure::point_mass(vec({3, 0, 0}), 1);
    EXPECT_DOUBLE_EQ(d.integrate(first), 3.0);
    Estimate e = d.integrate_with_se(first);
    EXPECT_DOUBLE_EQ(e.value, 3.0);
    EXPECT_DOUBLE_EQ(e.se, 0.0);
}

TEST(Occupation, NonFiniteIntegrandThrows) {
    OccupationMeasure d = OccupationMeasure::point_mass(vec({0, 0, 0}), 0);
    EXPECT_THROW(d.integrate([](const Vec& x, int) { return std::log(x(0)); }), EvaluationError);
}

TEST(StationaryMoments, Examples) {
    EXPECT_NEAR(stationary_first_moments(Mat::Zero(1, 1), vec({1}), vec({1})).sum(), 1.0, 1e-14);
    EXPECT_NEAR(stationary_first_moments(Mat::Zero(1, 1), vec({3}), vec({2})).sum(), 1.5, 1e-14);
    EXPECT_NEAR(stationary_first_moments(two_state(1, 1), vec({1, 1}), vec({1, 1})).sum(), 1.0, 1e-14);
}

TEST(StationaryMoments, SwitchingOracleByHand) {
    // b_a nu_a - c1_a m_a + (m Q)_a = 0 for Q = [[-2,2],[1,-1]], nu = (1/3, 2/3), b = (1, 3), c1 = 1:
    //   1/3 - 3 m1 + m2 = 0 and 2 + 2 m1 - 2 m2 = 0
    Vec m = stationary_first_moments(two_state(2, 1), vec({1, 3}), vec({1, 1}));
    EXPECT_NEAR(m(0), 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(m(1), 5.0 / 3.0, 1e-12);
}

TEST(StationaryMoments, PropertyRegimeFreeCoefficients) {
    Rng rng(2);
    for (int k = 0; k < 20; ++k) {
        Mat Q = two_state(rng.uniform(0.1, 5), rng.uniform(0.1, 5));
        const double b = rng.uniform(0.1, 3), c = rng.uniform(0.1, 3);
        EXPECT_NEAR(stationary_first_moments(Q, vec({b, b}), vec({c, c})).sum(), b / c, 1e-10);
    }
}

TEST(Ergodic, BoundarySdeMeanFromSimulation) {
    const SirsParams sp = boundary_sde_params(1.0, 1.0, 0.5);
    OccupationMeasure mu = estimate_ergodic_measure(make_sirs(sp), ExtinctionSpec::make(3, {1, 2}), vec({1, 0, 0}),
                                                    0, 1e4, 0.01, 1e3, 3);
    EXPECT_NEAR(mu.integrate(first), 1.0, 0.05);
}

TEST(Ergodic, RejectsStartOffTheBoundary) {
    const HybridModel m = make_lotka_volterra(lotka_params());
    EXPECT_THROW(estimate_ergodic_measure(m, ExtinctionSpec::make(3, {2}), vec({1, 1, 0.1}), 0, 100, 0.01, 10, 1),
                 PreconditionError);
}

TEST(Mu1, ClosedFormMatchesQuadratureOracle) {
    const LvParams p = lotka_params();
    EXPECT_NEAR(mu1_mean(p), logistic_sde_mean_quadrature(p.r1, p.a11, p.sigma1), 1e-6);
    LvParams q = small_lv();
    q.sigma1 = 0.8;
    EXPECT_NEAR(mu1_mean(q), logistic_sde_mean_quadrature(q.r1, q.a11, q.sigma1), 1e-6);
}

TEST(Mu1, PreyOnlySimulationMatchesClosedForm) {
    const LvParams p = lotka_params();
    OccupationMeasure mu = estimate_ergodic_measure(make_lotka_volterra(p), ExtinctionSpec::make(3, {1, 2}),
                                                    vec({1, 0, 0}), 0, 1e4, 0.01, 1e3, 8);
    EXPECT_NEAR(mu.integrate(first), mu1_mean(p), 0.05 * mu1_mean(p));
}

TEST(Mu12, ClosedMomentsByHand) {
    // E x1 = (1 + 0.01/2) / 1; corrected E x2 = 3.5 - 0.005 - 2 * 1.005; printed uses r2 + a11 s2^2/2
    Mu12Moments m = mu12_closed_moments(lotka_params());
    EXPECT_NEAR(m.ex1, 1.005, 1e-12);
    EXPECT_NEAR(m.ex2_corrected, 1.485, 1e-12);
    EXPECT_NEAR(m.ex2_printed, 2.485, 1e-12);
}

TEST(Mu12, SimulationAgreesWithCorrectedFormula) {
    const LvParams p = lotka_params();
    const Mu12Moments cm = mu12_closed_moments(p);
    MeasureOptions mo;
    mo.thin = 10;
    OccupationMeasure mu = estimate_ergodic_measure(make_lotka_volterra(p), ExtinctionSpec::make(3, {2}),
                                                    vec({1, 1.5, 0}), 0, 1e4, 0.01, 1e3, 21, mo);
    EXPECT_NEAR(mu.integrate(first), cm.ex1, 0.05 * cm.ex1);
    const Estimate ex2 = mu.integrate_with_se(second);
    const Ex2Arbitration arb = arbitrate_ex2(cm, ex2);
    EXPECT_EQ(arb.winner, "corrected");
    EXPECT_LT(arb.corrected_rel_error, 0.05);
    EXPECT_GT(arb.printed_rel_error, 0.2);
}

TEST(Mu12, LongRunOracleAtFourTimesHorizon) {
    // unpinned simulation started on the invariant face, independent seed and horizon
    const LvParams p = lotka_params();
    Trajectory tr = simulate(make_lotka_volterra(p), vec({0.5, 0.5, 0}), 0, 4e4, 0.01, 1234);
    const double brute = occupation_average(tr, second, 1e3);
    MeasureOptions mo;
    mo.thin = 10;
    OccupationMeasure mu = estimate_ergodic_measure(make_lotka_volterra(p), ExtinctionSpec::make(3, {2}),
                                                    vec({1, 1.5, 0}), 0, 1e4, 0.01, 1e3, 21, mo);
    EXPECT_NEAR(mu.integrate(second), brute, 0.03 * brute);
}

TEST(Mu12, ConditionsAreChecked) {
    LvParams p = lotka_params();
    p.r2 = 10.0;
    EXPECT_THROW(mu12_closed_moments(p), InapplicableError);
}

TEST(Arbitration, PicksCloserFormula) {
    Mu12Moments m;
    m.ex2_printed = 2.0;
    m.ex2_corrected = 1.0;
    EXPECT_EQ(arbitrate_ex2(m, {1.9, 0.01}).winner, "printed");
    EXPECT_EQ(arbitrate_ex2(m, {1.1, 0.01}).winner, "corrected");
}

TEST(Band, ConstantFunctionHoldsFromFirstGridPoint) {
    BandOptions o;
    o.reps = 5;
    BandReport r = time_average_band_check(make_sirs(boundary_sde_params(1, 1, 0.5)),
                                           [](const Vec&, int) { return 0.7; }, {{vec({1, 0, 0}), 0}}, 0.01,
                                           {1, 2, 4}, 0.7, 0.7, 1, o);
    EXPECT_TRUE(r.found);
    EXPECT_DOUBLE_EQ(r.T0, 1.0);
}

TEST(Band, TruncatedBoundarySdeReportsFiniteT0) {
    BandOptions o;
    o.reps = 100;
    o.pinned = {1, 2};
    std::vector<BandStart> K = {{vec({0.1, 0, 0}), 0}, {vec({1, 0, 0}), 0}, {vec({10, 0, 0}), 0}};
    BandReport r = time_average_band_check(make_sirs(boundary_sde_params(1, 1, 0.5)),
                                           [](const Vec& x, int) { return std::min(x(0), 10.0); }, K, 0.1,
                                           {1, 2, 4, 8, 16, 32, 64, 128, 256, 512}, 1.0, 1.0, 4, o);
    EXPECT_TRUE(r.found);
    EXPECT_LE(r.T0, 512.0);
    EXPECT_GT(r.T0, 1.0);
}

TEST(Band, RegimeIndicatorSettlesAroundStationaryWeight) {
    BandOptions o;
    o.reps = 200;
    BandReport r = time_average_band_check(frozen(two_state(2, 1)),
                                           [](const Vec&, int a) { return a == 1 ? 1.0 : 0.0; },
                                           {{vec({1, 1}), 0}, {vec({1, 1}), 1}}, 0.05, {1, 2, 4, 8, 16, 32, 64},
                                           2.0 / 3.0, 2.0 / 3.0, 5, o);
    EXPECT_TRUE(r.found);
    for (int s = 0; s < 2; ++s) EXPECT_NEAR(r.averages(s, 6), 2.0 / 3.0, 0.05);
}

TEST(Csv, MeasureRoundTrip) {
    OccupationMeasure mu;
    mu.n = 2;
    mu.add(vec({1.0, 0.25}), 0, 0.5);
    mu.add(vec({1.0 / 3.0, 7.0}), 1, 1.5);
    std::ostringstream os;
    write_measure_csv(os, mu);
    std::istringstream is(os.str());
    OccupationMeasure back = read_measure_csv(is);
    EXPECT_EQ(back.states, mu.states);
    EXPECT_EQ(back.weights, mu.weights);
    EXPECT_EQ(back.regimes, mu.regimes);
}
