#include "support.hpp"

#include "exlab/certify.hpp"
#include "exlab/presets.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace exlab;
using namespace exlab::test;

namespace {

const Pipeline& shared_pipeline() {
    static const Pipeline pl = lotka_pipeline(lotka_params(), PipelineOptions{});
    return pl;
}

std::vector<Sample> line_samples(double lo, double hi, int count) {
    std::vector<Sample> out;
    for (int k = 0; k < count; ++k) {
        Sample s;
        s.x = vec({lo + (hi - lo) * (k + 0.5) / count});
        out.push_back(s);
    }
    return out;
}

// Points t e_axis for t log-spaced on [1, 1e6], tagged as one ray.
std::vector<Sample> axis_ray(int n, int axis, int count) {
    std::vector<Sample> out;
    for (int k = 0; k < count; ++k) {
        Sample s;
        s.radius = std::pow(10.0, 6.0 * k / (count - 1));
        s.x = Vec::Zero(n);
        s.x(axis) = s.radius;
        s.ray = 0;
        out.push_back(s);
    }
    return out;
}

ScalarFunction coordinate_sum() {
    ScalarFunction F;
    F.value = [](const Vec& x, int) { return x.sum(); };
    F.derivatives = [](const Vec& x, int, Vec& g, Mat& h) {
        g = Vec::Ones(x.size());
        h = Mat::Zero(x.size(), x.size());
    };
    return F;
}

Domain small_domain(int n) {
    Domain d;
    d.n = n;
    return d;
}

}  // namespace

TEST(Inequality, EqualityPasses) {
    auto f = [](const Vec& x, int) { return 3.0 * x(0) - 1.0; };
    CertificateReport r = check_inequality("eq", f, f, line_samples(0, 10, 100));
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.count, 100);
}

TEST(Inequality, SquareBelowIdentityOnlyOnUnitInterval) {
    auto sq = [](const Vec& x, int) { return x(0) * x(0); };
    auto id = [](const Vec& x, int) { return x(0); };
    EXPECT_TRUE(check_inequality("sq", sq, id, line_samples(0, 1, 200)).pass);
    CertificateReport r = check_inequality("sq", sq, id, line_samples(0, 2, 200));
    EXPECT_FALSE(r.pass);
    EXPECT_EQ(r.violations.size(), 100u);
    for (const auto& v : r.violations) EXPECT_GT(v.x(0), 1.0);
}

TEST(Inequality, NonFiniteSideThrows) {
    auto bad = [](const Vec& x, int) { return std::log(x(0) - 1.0); };
    EXPECT_THROW(check_inequality("nan", bad, bad, line_samples(0, 0.5, 3)), EvaluationError);
}

TEST(Drift, LinearW0AgainstClosedFormConstant) {
    // every cross term of L W0 + r0 W0 is nonpositive, leaving r0 + x1 (r1 + r0 - a11 x1)
    const LvParams p = lotka_params();
    const double b0 = lv_b0(p), r0 = lv_r0(p);
    ASSERT_LE(b0, 1.0);
    const double K0 = r0 + (p.r1 + r0) * (p.r1 + r0) / (4.0 * p.a11);
    const HybridModel m = make_lotka_volterra(p);
    const ScalarFunction W0 = linear_W0(b0);
    Domain d = small_domain(3);
    auto samples = sample_box(d, 20000, 3);
    Sample peak;
    peak.x = vec({(p.r1 + r0) / (2.0 * p.a11), 0, 0});
    samples.push_back(peak);
    auto lhs = [&](const Vec& x, int a) { return apply_generator(m, W0, x, a); };
    EXPECT_TRUE(check_inequality("drift0", lhs, [&](const Vec& x, int a) { return K0 - r0 * W0.value(x, a); }, samples)
                    .pass);
    EXPECT_FALSE(
        check_inequality("drift0", lhs, [&](const Vec& x, int a) { return 0.9 * K0 - r0 * W0.value(x, a); }, samples)
            .pass);
}

TEST(Fit, DriftOnGeometricDecay) {
    // LW = -x for W = x and dx = -x dt: the fitted pair must hold and have positive rate
    HybridModel m = geometric(vec({-1.0}), vec({0.0}));
    ScalarFunction W = coordinate_sum();
    FitInput in{[&](const Vec& x, int a) { return apply_generator(m, W, x, a); },
                [&](const Vec& x, int a) { return W.value(x, a); }};
    auto s = line_samples(0.01, 100, 500);
    FittedConstants c = fit_constants(InequalityFamily::Drift, in, s);
    EXPECT_NEAR(c.gamma, 0.5, 1e-12);
    EXPECT_TRUE(check_family("d", InequalityFamily::Drift, in, c, s).pass);
}

TEST(Fit, ZeroNoiseGivesZeroGammaConstant) {
    HybridModel m = geometric(vec({0.3, -0.2}), vec({0.0, 0.0}));
    ScalarFunction W = coordinate_sum();
    FitInput in{[&](const Vec& x, int a) { return carre_du_champ(m, W, x, a); },
                [&](const Vec& x, int a) { return W.value(x, a) * W.value(x, a); }};
    auto s = sample_domain(small_domain(2), 2000, 5);
    FittedConstants c = fit_constants(InequalityFamily::GammaBound, in, s);
    EXPECT_EQ(c.K, 0.0);
    EXPECT_TRUE(check_family("g", InequalityFamily::GammaBound, in, c, s).pass);
}

TEST(Fit, GrowingRatioIsUnbounded) {
    FitInput in{[](const Vec& x, int) { return x.squaredNorm(); }, [](const Vec& x, int) { return 1.0 + x.norm(); }};
    auto s = sample_domain(small_domain(2), 2000, 6);
    EXPECT_THROW(fit_constants(InequalityFamily::RatioBound, in, s), UnboundedError);
}

TEST(Assumption4, PassesOnLotkaPreset) {
    const Pipeline& pl = shared_pipeline();
    Domain d = small_domain(3);
    Assumption4Bundle b = check_assumption4(pl.spec, sample_domain(d, 40000, 1), sample_domain(d, 40000, 2));
    ASSERT_EQ(b.reports.size(), 4u);
    for (const auto& r : b.reports) EXPECT_TRUE(r.pass) << r.id << " " << r.violations.size();
    EXPECT_TRUE(b.pass);
    EXPECT_GT(b.K_W, 0.0);
    EXPECT_GT(b.gamma_W, 0.0);
    EXPECT_EQ(b.reports[0].constant("K"), b.reports[1].constant("K"));
}

TEST(Assumption4, HalfBaseRateHoldsAlongEveryAxis) {
    // W0^(1 + 2 p0) decays at rate r0 / 2 everywhere, including the predator axes the random rays miss
    const Pipeline& pl = shared_pipeline();
    const LvParams p = lotka_params();
    const double rate = 0.5 * lv_r0(p);
    const LyapunovSpec& spec = pl.spec;
    FitInput in{[&](const Vec& x, int a) { return apply_generator(spec.model, spec.W, x, a); },
                [&](const Vec& x, int a) { return spec.W.value(x, a); }};
    Domain d = small_domain(3);
    auto fit = sample_domain(d, 20000, 21), check = sample_domain(d, 20000, 22);
    for (int axis = 0; axis < 3; ++axis) {
        auto ray = axis_ray(3, axis, 200);
        fit.insert(fit.end(), ray.begin(), ray.end());
        check.insert(check.end(), ray.begin(), ray.end());
    }
    FittedConstants c;
    c.gamma = rate;
    for (const auto& s : fit) c.K = std::max(c.K, in.a(s.x, s.alpha) + rate * in.b(s.x, s.alpha));
    c.K *= 1.05;
    EXPECT_TRUE(check_family("drift_r0", InequalityFamily::Drift, in, c, check).pass);
}

TEST(Assumption4, RatioFailsForLargeExponent) {
    LyapunovSpec spec = shared_pipeline().spec;
    spec.p0 = 2.0;
    Domain d = small_domain(3);
    Assumption4Bundle b = check_assumption4(spec, sample_domain(d, 4000, 1), sample_domain(d, 4000, 2));
    EXPECT_FALSE(b.reports[2].pass);
    EXPECT_NE(b.reports[2].note.find("unbounded"), std::string::npos);
    EXPECT_FALSE(b.pass);
}

TEST(LowerBound, PassesOnSampledDomain) {
    const Pipeline& pl = shared_pipeline();
    Domain d = small_domain(3);
    CertificateReport r = check_lower_bound(pl.spec, sample_domain(d, 40000, 3), sample_domain(d, 40000, 4));
    EXPECT_TRUE(r.pass) << r.violations.size();
    EXPECT_GT(r.constant("gamma"), 0.0);
}

TEST(LowerBound, FailsAlongPredatorAxes) {
    // with x1 = 0 the predators have no self-limitation and H decreases linearly
    const LyapunovSpec& spec = shared_pipeline().spec;
    for (int axis : {1, 2}) {
        Vec x = Vec::Zero(3);
        x(axis) = 1e6;
        EXPECT_LT(spec.H(x, 0) / 1e6, -0.4);
        auto ray = axis_ray(3, axis, 50);
        CertificateReport r = check_lower_bound(spec, ray, ray);
        EXPECT_FALSE(r.pass);
    }
}

TEST(LowerBound, RefitOnFreshSamplesStillHolds) {
    const Pipeline& pl = shared_pipeline();
    Domain d = small_domain(3);
    auto fit = sample_domain(d, 20000, 7);
    FitInput in{[&](const Vec& x, int a) { return pl.spec.H(x, a); }, [](const Vec& x, int) { return x.norm(); }};
    FittedConstants c = fit_constants(InequalityFamily::LowerBound, in, fit);
    EXPECT_TRUE(check_family("lb", InequalityFamily::LowerBound, in, c, sample_domain(d, 20000, 8)).pass);
    // a tighter rate than the fitted one must be caught at large radius
    FittedConstants greedy = c;
    greedy.gamma *= 3.0;
    EXPECT_FALSE(check_family("lb", InequalityFamily::LowerBound, in, greedy, fit).pass);
}

TEST(Tight, PassesOnBoxWithFittedConstants) {
    const Pipeline& pl = shared_pipeline();
    const PipelineOptions o;
    const ScalarFunction W = log_W(pl.b0, o.tight_C);
    Domain d = small_domain(3);
    d.rays = 0;
    ATightFit fit = fit_a_tight(pl.model, W, o.delta0, sample_box(d, 20000, 11));
    EXPECT_GT(fit.K, 0.0);
    EXPECT_GT(fit.ell, 0.0);
    CertificateReport r = check_a_tight(pl.model, W, o.delta0, fit.ell, fit.K, sample_box(d, 2000, 12), d);
    EXPECT_TRUE(r.pass) << r.violations.size();
}

TEST(Tight, FailsAlongUnlimitedAxis) {
    const Pipeline& pl = shared_pipeline();
    const PipelineOptions o;
    const ScalarFunction W = log_W(pl.b0, o.tight_C);
    Vec far = Vec::Zero(3);
    far(2) = 1e5;
    EXPECT_GT(a_tight_lhs(pl.model, W, o.delta0, far, 0), 0.0);
    Domain d = small_domain(3);
    CertificateReport r =
        check_a_tight(pl.model, W, o.delta0, pl.tight.ell, pl.tight.K, axis_ray(3, 2, 40), d);
    EXPECT_FALSE(r.pass);
}

TEST(Tight, NoisySirsWithLinearWFails) {
    // 2 delta0 Gamma W = 2 delta0 sigma1^2 s^2 outgrows the logistic term c1 s^2
    const HybridModel m = make_sirs(boundary_sde_params(1.0, 1.0, 3.0));
    Domain d = small_domain(3);
    d.rays = 0;
    auto box = sample_box(d, 2000, 13);
    ATightFit fit = fit_a_tight(m, coordinate_sum(), 0.1, sample_box(d, 200, 14));
    CertificateReport r = check_a_tight(m, coordinate_sum(), 0.1, fit.ell, fit.K, box, d);
    EXPECT_FALSE(r.pass);
    Vec x = vec({1e3, 0, 0});
    EXPECT_GT(a_tight_lhs(m, coordinate_sum(), 0.1, x, 0), 0.0);
}

TEST(MuH, ConstantAboveLambdaPasses) {
    OccupationMeasure a = OccupationMeasure::point_mass(vec({1, 0, 0}), 0);
    OccupationMeasure b = OccupationMeasure::point_mass(vec({2, 0, 0}), 0);
    MuHReport r = check_mu_H({{"a", &a}, {"b", &b}}, [](const Vec& x, int) { return x(0); }, 0.5);
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.argmin, "a");
    EXPECT_DOUBLE_EQ(r.min_value, 1.0);
    EXPECT_FALSE(check_mu_H({{"a", &a}, {"b", &b}}, [](const Vec& x, int) { return x(0); }, 1.5).pass);
}

TEST(MuH, PipelineMeasuresClearLambda) {
    const Pipeline& pl = shared_pipeline();
    std::vector<std::pair<std::string, const OccupationMeasure*>> ms;
    for (const auto& m : pl.measures) ms.push_back({m.name, &m.mu});
    const LyapunovSpec& spec = pl.spec;
    MuHReport r = check_mu_H(ms, [&](const Vec& x, int a) { return spec.H(x, a); }, spec.lambda);
    EXPECT_TRUE(r.pass);
    EXPECT_FALSE(check_mu_H(ms, [&](const Vec& x, int a) { return -spec.H(x, a); }, spec.lambda).pass);
}

TEST(MuH, ThirdSpeciesRateAloneFailsOnMu12) {
    const Pipeline& pl = shared_pipeline();
    const OccupationMeasure* mu12 = nullptr;
    for (const auto& m : pl.measures)
        if (m.name == "mu12") mu12 = &m.mu;
    ASSERT_NE(mu12, nullptr);
    const HybridModel& model = pl.model;
    auto H3 = [&](const Vec& x, int a) {
        CoefficientValues c;
        model.evaluate(x, a, c);
        return c.f(2) - 0.5 * c.g(2) * c.g(2);
    };
    MuHReport r = check_mu_H({{"mu12", mu12}}, H3, 0.0);
    EXPECT_FALSE(r.pass);
    EXPECT_NEAR(r.min_value, -0.239, 0.05);
}

TEST(MuH, EmptyListThrows) {
    EXPECT_THROW(check_mu_H({}, [](const Vec&, int) { return 1.0; }, 0.1), PreconditionError);
}

TEST(Writers, CertificateCsvAndSummary) {
    auto sq = [](const Vec& x, int) { return x(0) * x(0); };
    auto id = [](const Vec& x, int) { return x(0); };
    CertificateReport r = check_inequality("sq", sq, id, line_samples(1.5, 2.5, 2));
    std::ostringstream os;
    write_certificate_csv(os, {r}, 1);
    EXPECT_EQ(os.str(), "inequality,x1,regime,lhs,rhs,slack\nsq,1.75,1,3.0625,1.75,-1.3125\nsq,2.25,1,5.0625,2.25,-2.8125\n");
    const std::string s = certificate_summary({r});
    EXPECT_NE(s.find("sq: FAIL (2 points, 2 violations)"), std::string::npos);
}
