#include "exlab/presets.hpp"
#include "exlab/config.hpp"
#include "exlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace exlab {

LvParams lotka_params() {
    LvParams p;
    p.r1 = 3.5;
    p.r2 = 1.0;
    p.r3 = 0.5;
    p.a11 = 2.0;
    p.a12 = 1.0;
    p.a13 = 0.5;
    p.a21 = 1.0;
    p.a23 = 0.5;
    p.a31 = 0.6;
    p.a32 = 0.2;
    p.sigma1 = 0.1;
    p.sigma2 = 0.1;
    p.sigma3 = 0.3;
    return p;
}

void check_lotka(const LvParams& p) {
    check_mu12_conditions(p);
    const double l3 = lambda_3_lv(p);
    if (!(l3 < 0.0))
        throw InapplicableError("λ₃(μ₁₂) < 0", "the third species invades mu12: lambda_3 = " + format_double(l3));
}

SirsParams sirs_params() {
    SirsParams p;
    p.Q.resize(2, 2);
    p.Q << -2.0, 2.0, 1.0, -1.0;
    SirsRegime a, b;
    a.b = 1.0;
    a.c1 = 1.0;
    a.beta = 0.4;
    a.c2 = 0.9;
    a.sigma2 = 0.2;
    a.c3 = 0.2;
    a.sigma3 = 0.2;
    a.c4 = 0.3;
    a.gamma = 0.2;
    a.sigma1 = 0.3;
    b = a;
    b.b = 1.2;
    b.beta = 0.5;
    b.c2 = 1.0;
    b.sigma2 = 0.3;
    b.c3 = 0.3;
    p.regimes = {a, b};
    return p;
}

void check_sirs(const SirsParams& p) {
    const double li = lambda_I_sirs_closed(p);
    if (!(li > 0.0))
        throw InapplicableError("λ_I > 0", "the disease does not die out: lambda_I = " + format_double(li));
}

SirsParams boundary_sde_params(double b, double c1, double sigma1) {
    SirsParams p;
    p.Q = Mat::Zero(1, 1);
    SirsRegime r;
    r.b = b;
    r.c1 = c1;
    r.sigma1 = sigma1;
    p.regimes = {r};
    return p;
}

SwitchingParams kolmogorov_params() {
    LvParams base = lotka_params();
    SwitchingParams s = lv_switching(base);
    SwitchingParams second = s;
    second.r[0] << 4.0, -0.8, -0.7;
    second.g[0] << 0.15, 0.1, 0.25;
    s.r.push_back(second.r[0]);
    s.A.push_back(second.A[0]);
    s.g.push_back(second.g[0]);
    return s;
}

Mat kolmogorov_Q() {
    Mat Q(2, 2);
    Q << -1.0, 1.0, 0.5, -0.5;
    return Q;
}

HybridModel make_kolmogorov_preset() {
    return make_kolmogorov_switching(kolmogorov_params(), Mat::Identity(3, 3), kolmogorov_Q(), {2},
                                     "kolmogorov_switching");
}

HybridModel preset_model(const std::string& name) {
    if (name == "lotka") {
        LvParams p = lotka_params();
        check_lotka(p);
        return make_lotka_volterra(p);
    }
    if (name == "sirs") {
        SirsParams p = sirs_params();
        check_sirs(p);
        return make_sirs(p);
    }
    if (name == "kolmogorov") return make_kolmogorov_preset();
    if (name == "boundary_sde") return make_sirs(boundary_sde_params(1.0, 1.0, 0.5));
    throw ConfigError("preset", "unknown preset '" + name + "' (lotka, sirs, kolmogorov, boundary_sde)");
}

std::vector<std::string> preset_names() { return {"lotka", "sirs", "kolmogorov", "boundary_sde"}; }

// ---------------------------------------------------------------------------

namespace {

Vec w0_weights(double b0, int n) {
    Vec w = Vec::Constant(n, b0);
    w(0) = 1.0;
    return w;
}

double w0_value(const Vec& w, const Vec& x) { return 1.0 + w.dot(x); }

}  // namespace

ScalarFunction linear_W0(double b0) {
    ScalarFunction F;
    F.value = [b0](const Vec& x, int) { return w0_value(w0_weights(b0, static_cast<int>(x.size())), x); };
    F.derivatives = [b0](const Vec& x, int, Vec& g, Mat& h) {
        g = w0_weights(b0, static_cast<int>(x.size()));
        h = Mat::Zero(x.size(), x.size());
    };
    return F;
}

ScalarFunction log_W0(double b0) {
    ScalarFunction F;
    F.value = [b0](const Vec& x, int) { return std::log(w0_value(w0_weights(b0, static_cast<int>(x.size())), x)); };
    F.derivatives = [b0](const Vec& x, int, Vec& g, Mat& h) {
        const Vec w = w0_weights(b0, static_cast<int>(x.size()));
        const double W = w0_value(w, x);
        g = w / W;
        h = -(w * w.transpose()) / (W * W);
    };
    return F;
}

ScalarFunction power_W0(double b0, double p0) {
    const double q = 1.0 + 2.0 * p0;
    ScalarFunction F;
    F.value = [b0, q](const Vec& x, int) { return std::pow(w0_value(w0_weights(b0, static_cast<int>(x.size())), x), q); };
    F.derivatives = [b0, q](const Vec& x, int, Vec& g, Mat& h) {
        const Vec w = w0_weights(b0, static_cast<int>(x.size()));
        const double W = w0_value(w, x);
        g = q * std::pow(W, q - 1.0) * w;
        h = q * (q - 1.0) * std::pow(W, q - 2.0) * (w * w.transpose());
    };
    return F;
}

ScalarFunction log_W(double b0, double C) {
    ScalarFunction L = log_W0(b0);
    ScalarFunction F;
    F.value = [L, C](const Vec& x, int a) { return 1.0 + C * L.value(x, a); };
    F.derivatives = [L, C](const Vec& x, int a, Vec& g, Mat& h) {
        L.derivatives(x, a, g, h);
        g *= C;
        h *= C;
    };
    return F;
}

double switching_b0(const SwitchingParams& p) {
    double r = std::numeric_limits<double>::infinity();
    for (const Mat& A : p.A) r = std::min({r, A(0, 1) / -A(1, 0), A(0, 2) / -A(2, 0)});
    return 0.5 * r;
}

// ---------------------------------------------------------------------------

OccupationMeasure origin_measure(int n, const Mat& Q) {
    OccupationMeasure mu;
    mu.n = n;
    const Vec nu = Q.rows() == 1 ? Vec::Ones(1) : stationary_distribution(Q);
    for (int a = 0; a < nu.size(); ++a) mu.add(Vec::Zero(n), a, nu(a));
    mu.total_time = 1.0;
    mu.source = "origin";
    return mu;
}

std::vector<BoundaryMeasure> boundary_hierarchy(const HybridModel& model, const Vec& prey_start,
                                                const Vec& face_start, const PipelineOptions& opts) {
    MeasureOptions mo;
    mo.thin = opts.thin;
    std::vector<BoundaryMeasure> out;
    out.push_back({"delta0", origin_measure(model.n, model.Q), {}, false});
    out.push_back({"mu1",
                   estimate_ergodic_measure(model, ExtinctionSpec::make(model.n, {1, 2}), prey_start, 0, opts.T,
                                            opts.dt, opts.burn_in, mix(opts.seed, 1), mo),
                   {0},
                   false});
    out.push_back({"mu12",
                   estimate_ergodic_measure(model, ExtinctionSpec::make(model.n, {2}), face_start, 0, opts.T,
                                            opts.dt, opts.burn_in, mix(opts.seed, 2), mo),
                   {0, 1},
                   true});
    return out;
}

std::vector<RateRow> rate_table(const HybridModel& model, const std::vector<BoundaryMeasure>& measures) {
    std::vector<RateRow> rows;
    for (const auto& m : measures) {
        RateRow r;
        r.measure = m.name;
        r.interior = m.interior;
        r.lambda.resize(model.n);
        for (int i = 0; i < model.n; ++i) r.lambda(i) = invasion_rate(m.mu, model, i).value;
        rows.push_back(r);
    }
    return rows;
}

namespace {

std::vector<double> h_values(const LyapunovSpec& spec, const OccupationMeasure& mu) {
    std::vector<double> v(mu.size());
    for (std::size_t k = 0; k < mu.size(); ++k) v[k] = spec.H(Vec(mu.state(k)), mu.regimes[k]);
    return v;
}

double truncated_mean(const OccupationMeasure& mu, const std::vector<double>& h, double level) {
    double acc = 0.0, wsum = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
        acc += mu.weights[k] * std::min(h[k], level);
        wsum += mu.weights[k];
    }
    return acc / wsum;
}

}  // namespace

double choose_h_tilde(const LyapunovSpec& spec, const std::vector<BoundaryMeasure>& measures) {
    if (!(spec.lambda > 0.0)) throw PreconditionError("h_tilde needs a positive lambda");
    std::vector<std::vector<double>> values;
    for (const auto& m : measures) values.push_back(h_values(spec, m.mu));
    for (int k = 0; k <= 60; ++k) {
        const double level = spec.lambda * std::ldexp(1.0, k);
        bool ok = true;
        for (std::size_t q = 0; q < measures.size() && ok; ++q)
            ok = truncated_mean(measures[q].mu, values[q], level) >= 0.9 * spec.lambda;
        if (ok) return level;
    }
    throw InfeasibleError("no truncation level reaches 0.9 lambda on every boundary measure");
}

Pipeline build_pipeline(const HybridModel& model, double b0, const Vec& prey_start, const Vec& face_start,
                        const Vec& start, const PipelineOptions& opts) {
    Pipeline pl;
    pl.model = model;
    pl.b0 = b0;
    pl.start = start;
    pl.measures = boundary_hierarchy(model, prey_start, face_start, opts);
    pl.table = rate_table(model, pl.measures);
    pl.weights = choose_weights(pl.table, {0, 1}, {2});

    LyapunovSpec& s = pl.spec;
    s = build_U_family(model, log_W0(b0), pl.weights, opts.C0);
    s.W = power_W0(b0, opts.p0);
    s.delta0 = opts.delta0;
    // half the LP margin leaves room for the sampling error of mu H
    s.lambda = 0.5 * pl.weights.margin;
    s.h_tilde = choose_h_tilde(s, pl.measures);

    const double ht = s.h_tilde;
    StateFunction Ht = [&s, ht](const Vec& x, int a) { return std::min(s.H(x, a), ht); };
    double h_m = std::numeric_limits<double>::infinity(), h_M = -h_m;
    for (const auto& m : pl.measures) {
        const double v = m.mu.integrate(Ht);
        pl.mu_H_tilde.push_back(v);
        h_m = std::min(h_m, v);
        h_M = std::max(h_M, v);
    }

    std::vector<BandStart> K;
    for (const auto& m : pl.measures) {
        if (m.mu.size() == 1 || m.name == "delta0") {
            K.push_back({Vec(m.mu.state(0)), m.mu.regimes[0]});
            continue;
        }
        for (int q = 0; q < opts.band_starts; ++q) {
            const std::size_t k = (2 * q + 1) * m.mu.size() / (2 * opts.band_starts);
            K.push_back({Vec(m.mu.state(k)), m.mu.regimes[k]});
        }
    }
    BandOptions bo;
    bo.dt = opts.band_dt;
    bo.reps = opts.band_reps;
    bo.pinned = {2};
    bo.threads = opts.threads;
    pl.band = time_average_band_check(model, Ht, K, h_m - 0.8 * s.lambda, opts.T_grid, h_m, h_M, mix(opts.seed, 3), bo);

    Domain dom;
    dom.n = model.n;
    dom.m0 = model.m0;
    pl.tight = fit_a_tight(model, log_W(b0, opts.tight_C), opts.delta0, sample_box(dom, 4000, mix(opts.seed, 4)));
    s.ell = pl.tight.ell;

    std::vector<double> u;
    for (const auto& m : pl.measures)
        for (std::size_t k = 0; k < m.mu.size(); ++k) {
            Vec x = m.mu.state(k);
            for (int i = 0; i < x.size(); ++i) x(i) = std::max(x(i), 1e-4);
            u.push_back(s.U(x));
        }
    s.u_tilde = sample_quantile(u, 0.95);
    return pl;
}

Pipeline lotka_pipeline(const LvParams& p, const PipelineOptions& opts) {
    check_lotka(p);
    const Mu12Moments m = mu12_closed_moments(p);
    Vec prey(3), face(3), start(3);
    prey << mu1_mean(p), 0.0, 0.0;
    face << m.ex1, m.ex2_corrected, 0.0;
    start << m.ex1, m.ex2_corrected, 1e-4;
    return build_pipeline(make_lotka_volterra(p), lv_b0(p), prey, face, start, opts);
}

Pipeline kolmogorov_pipeline(const PipelineOptions& opts) {
    const SwitchingParams sp = kolmogorov_params();
    Vec prey(3), face(3), start(3);
    prey << 4.0, 0.0, 0.0;
    face << 1.0, 1.5, 0.0;
    start << 1.0, 1.5, 1e-4;
    return build_pipeline(make_kolmogorov_preset(), switching_b0(sp), prey, face, start, opts);
}

TraceConfig trace_config(const Pipeline& pl, std::uint64_t seed, unsigned threads) {
    TraceConfig c;
    c.lambda = pl.spec.lambda;
    c.h_tilde = pl.spec.h_tilde;
    c.T0 = pl.band.found ? pl.band.T0 : pl.band.T_grid.back();
    c.n0 = trace_n0(c.h_tilde);
    c.seed = seed;
    c.threads = threads;
    return c;
}

}  // namespace exlab
