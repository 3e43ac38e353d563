#include "support.hpp"

#include "exlab/dynamics.hpp"
#include "exlab/measures.hpp"
#include "exlab/presets.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace exlab;
using namespace exlab::test;

namespace {

HybridModel logistic(double r) {
    auto fn = [r](const Vec& x, int, CoefficientValues& c) {
        c.f = Vec::Constant(1, r * (1.0 - x(0)));
        c.g = Vec::Zero(1);
        c.mu = x.cwiseProduct(c.f);
        c.s = Vec::Zero(1);
    };
    return HybridModel::make(std::make_shared<FunctionCoefficients>(fn, "logistic"), Mat::Identity(1, 1),
                             Mat::Zero(1, 1), {true}, {});
}

}  // namespace

TEST(RegimePath, SingleRegimeNeverJumps) {
    RegimePath p = sample_regime_path(Mat::Zero(1, 1), 0, 100.0, std::uint64_t{3});
    EXPECT_EQ(p.jumps(), 0u);
    EXPECT_EQ(p.at(57.0), 0);
}

TEST(RegimePath, OccupationMatchesStationaryLaw) {
    RegimePath p = sample_regime_path(two_state(2, 1), 0, 1e4, std::uint64_t{1});
    EXPECT_NEAR(p.occupation(2)(1), 2.0 / 3.0, 0.02);
}

TEST(RegimePath, JumpCountMatchesIntensity) {
    double total = 0.0;
    for (int k = 0; k < 100; ++k) total += sample_regime_path(two_state(1, 1), 0, 1000.0, mix(9, k)).jumps();
    EXPECT_NEAR(total / 100.0, 1000.0, 100.0);
}

TEST(RegimePath, PropertyPathIsConsistent) {
    Rng rng(4);
    for (int k = 0; k < 20; ++k) {
        RegimePath p = sample_regime_path(two_state(3, 0.5), k % 2, 50.0, rng);
        ASSERT_EQ(p.times.size(), p.states.size());
        EXPECT_EQ(p.times.front(), 0.0);
        for (std::size_t j = 1; j < p.times.size(); ++j) {
            EXPECT_GT(p.times[j], p.times[j - 1]);
            EXPECT_LT(p.times[j], 50.0);
            EXPECT_NE(p.states[j], p.states[j - 1]);
        }
        EXPECT_NEAR(p.occupation(2).sum(), 1.0, 1e-12);
    }
}

TEST(Step, ZeroCoefficientsLeaveStateUnchanged) {
    HybridModel m = geometric(Vec::Zero(2), Vec::Zero(2));
    Vec x = vec({1.5, 0.25});
    for (Scheme s : {Scheme::Euler, Scheme::LogEuler}) EXPECT_EQ(step(m, x, 0, 0.1, vec({0.3, -2}), s), x);
}

TEST(Step, DeterministicEuler) {
    HybridModel m = geometric(vec({0.1}), vec({0.0}));
    EXPECT_NEAR(step(m, vec({1.0}), 0, 1.0, vec({0.0}), Scheme::Euler)(0), 1.1, 1e-15);
}

TEST(Step, LogEulerIsExactGeometricStep) {
    const double sigma = 0.7, dt = 0.05;
    HybridModel m = geometric(vec({0.0}), vec({sigma}));
    for (double w : {-3.0, -0.5, 0.0, 1.2, 4.0}) {
        const double want = 2.0 * std::exp(-0.5 * sigma * sigma * dt + sigma * std::sqrt(dt) * w);
        const double got = step(m, vec({2.0}), 0, dt, vec({w}), Scheme::LogEuler)(0);
        EXPECT_NEAR(got, want, 1e-14);
        EXPECT_GT(got, 0.0);
    }
}

TEST(Step, SchemeNames) {
    EXPECT_EQ(parse_scheme("euler"), Scheme::Euler);
    EXPECT_EQ(parse_scheme(to_string(Scheme::LogEuler)), Scheme::LogEuler);
    EXPECT_THROW(parse_scheme("milstein"), ConfigError);
}

TEST(Simulate, DeterministicLogisticTracksOde) {
    const double r = 1.5, x0 = 0.1, T = 5.0;
    const double exact = 1.0 / (1.0 + (1.0 / x0 - 1.0) * std::exp(-r * T));
    double prev_err = 0.0;
    for (double dt : {0.02, 0.01, 0.005}) {
        Trajectory tr = simulate(logistic(r), vec({x0}), 0, T, dt, 1, Scheme::Euler);
        const double err = std::abs(tr.terminal()(0) - exact);
        EXPECT_LT(err, 2.0 * dt);
        if (prev_err > 0.0) EXPECT_LT(err, 0.7 * prev_err);
        prev_err = err;
    }
}

TEST(Simulate, SameSeedIsBitIdentical) {
    const HybridModel m = make_lotka_volterra(lotka_params());
    Trajectory a = simulate(m, vec({1, 1, 0.5}), 0, 20.0, 0.01, 42);
    Trajectory b = simulate(m, vec({1, 1, 0.5}), 0, 20.0, 0.01, 42);
    EXPECT_EQ(a.data, b.data);
    EXPECT_EQ(a.times, b.times);
    Trajectory c = simulate(m, vec({1, 1, 0.5}), 0, 20.0, 0.01, 43);
    EXPECT_NE(a.data, c.data);
}

TEST(Simulate, BoundarySdeTimeAverage) {
    const HybridModel m = make_sirs(boundary_sde_params(1.0, 1.0, 0.5));
    Trajectory tr = simulate(m, vec({1, 0, 0}), 0, 1e4, 0.01, 5);
    EXPECT_NEAR(occupation_average(tr, [](const Vec& x, int) { return x(0); }, 100.0), 1.0, 0.05);
}

TEST(Simulate, PropertyKolmogorovPositivityAndFaces) {
    const HybridModel m = make_kolmogorov_preset();
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Trajectory tr = simulate(m, vec({2, 0.5, 0}), 0, 30.0, 0.01, seed);
        for (std::size_t k = 0; k < tr.size(); ++k) {
            EXPECT_GT(tr.x(k, 0), 0.0);
            EXPECT_GT(tr.x(k, 1), 0.0);
            EXPECT_EQ(tr.x(k, 2), 0.0);
        }
    }
}

TEST(Simulate, RecordEveryKeepsLastPoint) {
    const HybridModel m = make_lotka_volterra(lotka_params());
    SimOptions o;
    o.record_every = 7;
    Trajectory full = simulate(m, vec({1, 1, 1}), 0, 1.0, 0.01, 2);
    Trajectory thin = simulate(m, vec({1, 1, 1}), 0, 1.0, 0.01, 2, Scheme::LogEuler, o);
    EXPECT_DOUBLE_EQ(thin.times.back(), full.times.back());
    EXPECT_EQ(thin.terminal(), full.terminal());
    EXPECT_LT(thin.size(), full.size());
}

TEST(Simulate, PinnedCoordinatesStayZero) {
    const HybridModel m = make_lotka_volterra(lotka_params());
    SimOptions o;
    o.pinned = {2};
    Trajectory tr = simulate(m, vec({1, 1, 0.3}), 0, 5.0, 0.01, 2, Scheme::LogEuler, o);
    EXPECT_EQ(tr.terminal()(2), 0.0);
}

TEST(Ensemble, SingleReplicateMatchesSimulate) {
    const HybridModel m = make_lotka_volterra(lotka_params());
    EnsembleStats st = ensemble(m, vec({1, 1, 1}), 0, 10.0, 0.01, 1, 77, {terminal_coordinate(0)});
    ASSERT_EQ(st.count(), 1);
    Trajectory tr = simulate(m, vec({1, 1, 1}), 0, 10.0, 0.01, st.replicates[0].seed);
    EXPECT_EQ(st.replicates[0].terminal, tr.terminal());
    EXPECT_EQ(st.values(0)[0], tr.terminal()(0));
}

TEST(Ensemble, TerminalMeanOfBoundarySde) {
    const HybridModel m = make_sirs(boundary_sde_params(1.0, 1.0, 0.5));
    EnsembleStats st = ensemble(m, vec({1, 0, 0}), 0, 20.0, 0.01, 500, 3, {terminal_coordinate(0)});
    EXPECT_NEAR(st.mean(0), 1.0, 0.05);
    EXPECT_EQ(st.failures(), 0);
}

TEST(Ensemble, WorkerCountDoesNotChangeResults) {
    const HybridModel m = make_kolmogorov_preset();
    EnsembleOptions one, many;
    many.threads = 4;
    std::vector<PathFunctional> fns = {terminal_coordinate(0), time_average(1, 1.0)};
    EnsembleStats a = ensemble(m, vec({1, 1, 1}), 0, 5.0, 0.01, 16, 9, fns, one);
    EnsembleStats b = ensemble(m, vec({1, 1, 1}), 0, 5.0, 0.01, 16, 9, fns, many);
    std::ostringstream sa, sb;
    write_ensemble_csv(sa, a);
    write_ensemble_csv(sb, b);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(a.mean(1), b.mean(1));
}

TEST(Ensemble, QuantileInterpolates) {
    EXPECT_DOUBLE_EQ(sample_quantile({3, 1, 2}, 0.5), 2.0);
    EXPECT_DOUBLE_EQ(sample_quantile({1, 2}, 0.5), 1.5);
    EXPECT_DOUBLE_EQ(sample_quantile({1, 2, 3, 4}, 1.0), 4.0);
}

TEST(Csv, TrajectoryHeader) {
    Trajectory tr = simulate(make_lotka_volterra(lotka_params()), vec({1, 1, 1}), 0, 0.1, 0.01, 1);
    std::ostringstream os;
    write_trajectory_csv(os, tr);
    const std::string s = os.str();
    EXPECT_EQ(s.substr(0, s.find('\n')), "t,regime,x1,x2,x3");
    // regimes are written 1-based
    const std::string row = s.substr(s.find('\n') + 1);
    EXPECT_EQ(row.substr(0, 4), "0,1,");
}
