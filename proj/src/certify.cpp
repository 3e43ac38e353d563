#include "exlab/certify.hpp"
#include "exlab/config.hpp"
#include "exlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace exlab {

std::string Domain::describe() const {
    std::ostringstream os;
    os << "box [0," << box << "]^" << n << " uniform + " << rays << " log rays to radius " << ray_max;
    return os.str();
}

std::vector<Vec> ray_directions(const Domain& d) {
    Rng rng(d.ray_seed);
    std::vector<Vec> dirs;
    for (int r = 0; r < d.rays; ++r) {
        Vec u(d.n);
        for (int i = 0; i < d.n; ++i) u(i) = std::abs(rng.normal());
        dirs.push_back(u / u.norm());
    }
    return dirs;
}

std::vector<Sample> sample_box(const Domain& d, int count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Sample> out;
    out.reserve(count);
    for (int k = 0; k < count; ++k) {
        Sample s;
        s.x.resize(d.n);
        for (int i = 0; i < d.n; ++i) s.x(i) = d.box * (1.0 - rng.uniform());
        s.alpha = d.m0 > 1 ? static_cast<int>(rng.uniform() * d.m0) % d.m0 : 0;
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Sample> sample_domain(const Domain& d, int count, std::uint64_t seed) {
    const int on_rays = d.rays > 0 ? static_cast<int>(std::lround(count * d.ray_fraction)) : 0;
    std::vector<Sample> out = sample_box(d, count - on_rays, mix(seed, 0));
    const auto dirs = ray_directions(d);
    Rng rng(mix(seed, 1));
    const double lr = std::log(d.ray_max / d.ray_min);
    for (int k = 0; k < on_rays; ++k) {
        Sample s;
        s.ray = k % d.rays;
        s.radius = d.ray_min * std::exp(lr * rng.uniform());
        s.x = s.radius * dirs[s.ray];
        s.alpha = d.m0 > 1 ? static_cast<int>(rng.uniform() * d.m0) % d.m0 : 0;
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------

double CertificateReport::constant(const std::string& name) const {
    for (const auto& [k, v] : constants)
        if (k == name) return v;
    throw PreconditionError("report " + id + " has no constant " + name);
}

namespace {

std::string point_string(const Vec& x, int alpha) {
    std::ostringstream os;
    os << "(";
    for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x(i);
    os << "; regime " << alpha + 1 << ")";
    return os.str();
}

double finite_at(const SampleFunction& f, const Sample& s, const char* what) {
    double v = f(s.x, s.alpha);
    if (!std::isfinite(v)) throw EvaluationError(std::string(what) + " is not finite at " + point_string(s.x, s.alpha));
    return v;
}

bool is_tail(const Sample& s, double max_radius) { return s.ray >= 0 && s.radius >= 1e-2 * max_radius; }

double max_ray_radius(const std::vector<Sample>& samples) {
    double m = 0.0;
    for (const auto& s : samples)
        if (s.ray >= 0) m = std::max(m, s.radius);
    return m;
}

// Largest log-log slope of a/b along the tail of any ray.
double worst_tail_exponent(const std::vector<Sample>& samples, const std::vector<double>& ratio) {
    const double rmax = max_ray_radius(samples);
    std::map<int, std::vector<std::pair<double, double>>> by_ray;
    for (std::size_t k = 0; k < samples.size(); ++k)
        if (is_tail(samples[k], rmax) && ratio[k] > 0.0)
            by_ray[samples[k].ray].push_back({std::log(samples[k].radius), std::log(ratio[k])});
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& [ray, pts] : by_ray) {
        if (pts.size() < 3) continue;
        double mx = 0.0, my = 0.0;
        for (const auto& [lx, ly] : pts) {
            mx += lx;
            my += ly;
        }
        mx /= pts.size();
        my /= pts.size();
        double sxx = 0.0, sxy = 0.0;
        for (const auto& [lx, ly] : pts) {
            sxx += (lx - mx) * (lx - mx);
            sxy += (lx - mx) * (ly - my);
        }
        if (sxx > 0.0) worst = std::max(worst, sxy / sxx);
    }
    return worst;
}

constexpr double kInflate = 1.05;
constexpr double kUnboundedExponent = 0.05;

}  // namespace

CertificateReport check_inequality(const std::string& id, const SampleFunction& lhs, const SampleFunction& rhs,
                                   const std::vector<Sample>& samples, const std::string& domain) {
    CertificateReport r;
    r.id = id;
    r.domain = domain;
    r.count = static_cast<int>(samples.size());
    for (const auto& s : samples) {
        const double a = finite_at(lhs, s, "lhs");
        const double b = finite_at(rhs, s, "rhs");
        if (a > b + 1e-9 * (1.0 + std::abs(b))) r.violations.push_back({s.x, s.alpha, a, b});
    }
    r.pass = r.violations.empty();
    return r;
}

FittedConstants fit_constants(InequalityFamily family, const FitInput& in, const std::vector<Sample>& samples) {
    if (samples.empty()) throw PreconditionError("no samples to fit constants on");
    const std::size_t N = samples.size();
    std::vector<double> a(N), b(N);
    for (std::size_t k = 0; k < N; ++k) {
        a[k] = finite_at(in.a, samples[k], "lhs term");
        b[k] = finite_at(in.b, samples[k], "rhs term");
    }
    const double rmax = max_ray_radius(samples);
    bool have_tail = false;
    for (const auto& s : samples) have_tail = have_tail || is_tail(s, rmax);

    FittedConstants c;
    c.family = family;
    switch (family) {
        case InequalityFamily::Drift: {
            // decay rate over the upper half of the samples by W, halved
            std::vector<double> sorted_b = b;
            std::nth_element(sorted_b.begin(), sorted_b.begin() + N / 2, sorted_b.end());
            const double median = sorted_b[N / 2];
            double g = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < N; ++k)
                if (b[k] >= median) g = std::min(g, -a[k] / b[k]);
            if (!(g > 0.0)) throw UnboundedError("no positive decay rate: -LW/W reaches " + format_double(g));
            c.gamma = 0.5 * g;
            double K = 0.0;
            for (std::size_t k = 0; k < N; ++k) K = std::max(K, a[k] + c.gamma * b[k]);
            c.K = K * kInflate;
            break;
        }
        case InequalityFamily::GammaBound:
        case InequalityFamily::RatioBound:
        case InequalityFamily::SquareDrift: {
            std::vector<double> ratio(N);
            double sup = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < N; ++k) {
                ratio[k] = a[k] / b[k];
                sup = std::max(sup, ratio[k]);
            }
            const double slope = worst_tail_exponent(samples, ratio);
            if (slope > kUnboundedExponent)
                throw UnboundedError("ratio grows along a sampled ray with log-log slope " + format_double(slope));
            if (family == InequalityFamily::SquareDrift) sup = std::max(sup, 1e-12);
            c.K = sup > 0.0 ? sup * kInflate : sup / kInflate;
            break;
        }
        case InequalityFamily::LowerBound: {
            double g = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < N; ++k)
                if (!have_tail || is_tail(samples[k], rmax)) g = std::min(g, a[k] / b[k]);
            if (!(g > 0.0))
                throw UnboundedError("H / ||x|| reaches " + format_double(g) + " along a sampled ray; no linear lower bound");
            c.gamma = 0.95 * g;
            double K = 0.0;
            for (std::size_t k = 0; k < N; ++k) K = std::max(K, c.gamma * b[k] - a[k]);
            c.K = K * kInflate;
            break;
        }
    }
    return c;
}

CertificateReport check_family(const std::string& id, InequalityFamily family, const FitInput& in,
                               const FittedConstants& c, const std::vector<Sample>& samples,
                               const std::string& domain) {
    CertificateReport r;
    switch (family) {
        case InequalityFamily::Drift:
            r = check_inequality(id, in.a, [&](const Vec& x, int al) { return c.K - c.gamma * in.b(x, al); }, samples,
                                 domain);
            r.constants = {{"K", c.K}, {"gamma", c.gamma}};
            break;
        case InequalityFamily::GammaBound:
        case InequalityFamily::RatioBound:
        case InequalityFamily::SquareDrift:
            r = check_inequality(id, in.a, [&](const Vec& x, int al) { return c.K * in.b(x, al); }, samples, domain);
            r.constants = {{"K", c.K}};
            break;
        case InequalityFamily::LowerBound:
            r = check_inequality(id, [&](const Vec& x, int al) { return c.gamma * in.b(x, al) - c.K; }, in.a, samples,
                                 domain);
            r.constants = {{"K", c.K}, {"gamma", c.gamma}};
            break;
    }
    return r;
}

// ---------------------------------------------------------------------------

ScalarFunction square_function(const ScalarFunction& F) {
    ScalarFunction G;
    G.value = [F](const Vec& x, int a) {
        double v = F.value(x, a);
        return v * v;
    };
    if (F.derivatives) {
        G.derivatives = [F](const Vec& x, int a, Vec& g, Mat& h) {
            const double v = F.value(x, a);
            F.derivatives(x, a, g, h);
            h = 2.0 * (g * g.transpose() + v * h);
            g *= 2.0 * v;
        };
    }
    return G;
}

Assumption4Bundle check_assumption4(const LyapunovSpec& spec, const std::vector<Sample>& fit_set,
                                    const std::vector<Sample>& check_set, const std::string& domain) {
    if (!spec.W.value) throw PreconditionError("Lyapunov spec has no W");
    const HybridModel& model = spec.model;
    const ScalarFunction W = spec.W;
    const ScalarFunction W2 = square_function(W);
    const ScalarFunction U = spec.U_function();
    const double p0 = spec.p0;

    FitInput drift{[&](const Vec& x, int a) { return apply_generator(model, W, x, a); },
                   [&](const Vec& x, int a) { return W.value(x, a); }};
    FitInput gamma{[&](const Vec& x, int a) { return carre_du_champ(model, W, x, a); },
                   [&](const Vec& x, int a) { return W2.value(x, a); }};
    FitInput ratio{[&](const Vec& x, int a) {
                       const double h = std::abs(spec.H(x, a));
                       const double gu = std::max(0.0, carre_du_champ(model, U, x, a));
                       return std::pow(h, p0) + std::pow(gu, 0.5 * p0);
                   },
                   [&](const Vec& x, int a) { return 1.0 + W.value(x, a); }};
    FitInput square{[&](const Vec& x, int a) { return apply_generator(model, W2, x, a); },
                    [&](const Vec& x, int a) { return W2.value(x, a); }};

    Assumption4Bundle b;
    auto run = [&](const std::string& id, InequalityFamily fam, const FitInput& in,
                   const std::function<void(FittedConstants&)>& adjust) {
        FittedConstants c;
        try {
            c = fit_constants(fam, in, fit_set);
        } catch (const UnboundedError& e) {
            CertificateReport r;
            r.id = id;
            r.domain = domain;
            r.count = static_cast<int>(check_set.size());
            r.pass = false;
            r.note = std::string("unbounded: ") + e.what();
            b.reports.push_back(r);
            return c;
        }
        adjust(c);
        b.reports.push_back(check_family(id, fam, in, c, check_set, domain));
        return c;
    };

    // K_W is shared by the drift and carre du champ bounds
    FittedConstants cd, cg;
    try {
        cd = fit_constants(InequalityFamily::Drift, drift, fit_set);
    } catch (const UnboundedError&) {
    }
    try {
        cg = fit_constants(InequalityFamily::GammaBound, gamma, fit_set);
    } catch (const UnboundedError&) {
    }
    const double K_W = std::max(cd.K, cg.K);
    FittedConstants fd = run("assumption4.drift", InequalityFamily::Drift, drift, [&](FittedConstants& c) { c.K = K_W; });
    FittedConstants fg =
        run("assumption4.gamma", InequalityFamily::GammaBound, gamma, [&](FittedConstants& c) { c.K = K_W; });
    FittedConstants fr = run("assumption4.ratio", InequalityFamily::RatioBound, ratio, [](FittedConstants&) {});
    FittedConstants fs = run("assumption4.square_drift", InequalityFamily::SquareDrift, square, [](FittedConstants&) {});
    (void)fg;
    b.K_W = K_W;
    b.gamma_W = fd.gamma;
    b.ratio_sup = fr.K;
    b.k_W = fs.K;
    for (auto& r : b.reports) b.pass = b.pass && r.pass;
    b.reports[2].constants.push_back({"p0", p0});
    return b;
}

CertificateReport check_lower_bound(const LyapunovSpec& spec, const std::vector<Sample>& fit_set,
                                    const std::vector<Sample>& check_set, const std::string& domain) {
    FitInput in{[&](const Vec& x, int a) { return spec.H(x, a); }, [](const Vec& x, int) { return x.norm(); }};
    try {
        FittedConstants c = fit_constants(InequalityFamily::LowerBound, in, fit_set);
        return check_family("lower_bound_H", InequalityFamily::LowerBound, in, c, check_set, domain);
    } catch (const UnboundedError& e) {
        CertificateReport r;
        r.id = "lower_bound_H";
        r.domain = domain;
        r.count = static_cast<int>(check_set.size());
        r.pass = false;
        r.note = std::string("unbounded: ") + e.what();
        return r;
    }
}

double a_tight_lhs(const HybridModel& model, const ScalarFunction& W, double delta0, const Vec& x, int alpha) {
    CoefficientValues cv;
    model.evaluate(x, alpha, cv);
    double v = apply_generator(model, W, x, alpha) + 2.0 * delta0 * carre_du_champ(model, W, x, alpha);
    for (int i = 0; i < model.n; ++i) {
        const double sii = model.sigma(i, i);
        v += std::abs(cv.f(i)) + sii * sii * cv.g(i) * cv.g(i);
    }
    return v;
}

ATightFit fit_a_tight(const HybridModel& model, const ScalarFunction& W, double delta0,
                      const std::vector<Sample>& samples) {
    ATightFit f;
    for (const auto& s : samples) {
        const double v = a_tight_lhs(model, W, delta0, s.x, s.alpha) + 2.0;
        if (!std::isfinite(v)) throw EvaluationError("a.tight left side is not finite at " + point_string(s.x, s.alpha));
        if (v > 0.0) {
            f.K = std::max(f.K, v);
            f.ell = std::max(f.ell, s.x.lpNorm<1>());
        }
    }
    f.K *= kInflate;
    f.ell *= kInflate;
    return f;
}

CertificateReport check_a_tight(const HybridModel& model, const ScalarFunction& W, double delta0, double ell, double K,
                                const std::vector<Sample>& samples, const Domain& domain) {
    CertificateReport r = check_inequality(
        "a_tight", [&](const Vec& x, int a) { return a_tight_lhs(model, W, delta0, x, a); },
        [&](const Vec& x, int) { return (x.lpNorm<1>() <= ell ? K : 0.0) - 2.0; }, samples, domain.describe());
    int growth_failures = 0;
    for (const Vec& u : ray_directions(domain)) {
        const Vec x = domain.ray_max * u;
        const double ratio = W.value(x, 0) / std::log(x.norm());
        if (!(ratio > model.n)) {
            r.violations.push_back({x, 0, static_cast<double>(model.n), ratio});
            ++growth_failures;
        }
    }
    r.pass = r.violations.empty();
    r.constants = {{"K", K}, {"ell", ell}, {"delta0", delta0}, {"qv_rate", K / (2.0 * delta0)}};
    if (growth_failures) r.note = std::to_string(growth_failures) + " rays with W/ln||x|| <= n";
    return r;
}

MuHReport check_mu_H(const std::vector<std::pair<std::string, const OccupationMeasure*>>& measures,
                     const StateFunction& H, double lambda) {
    if (measures.empty()) throw PreconditionError("check_mu_H needs at least one measure");
    MuHReport rep;
    rep.lambda = lambda;
    rep.min_value = std::numeric_limits<double>::infinity();
    for (const auto& [name, mu] : measures) {
        Estimate e = mu->integrate_with_se(H);
        rep.rows.push_back({name, e});
        if (e.value - 2.0 * e.se < rep.min_value - 2.0 * rep.min_se || rep.argmin.empty()) {
            rep.min_value = e.value;
            rep.min_se = e.se;
            rep.argmin = name;
        }
    }
    rep.pass = rep.min_value - 2.0 * rep.min_se >= lambda;
    return rep;
}

void write_certificate_csv(std::ostream& os, const std::vector<CertificateReport>& reports, int n) {
    os << "inequality";
    for (int i = 0; i < n; ++i) os << ",x" << i + 1;
    os << ",regime,lhs,rhs,slack\n";
    for (const auto& r : reports)
        for (const auto& v : r.violations) {
            os << r.id;
            for (int i = 0; i < n; ++i) os << "," << format_double(v.x(i));
            os << "," << v.alpha + 1 << "," << format_double(v.lhs) << "," << format_double(v.rhs) << ","
               << format_double(v.rhs - v.lhs) << "\n";
        }
}

std::string certificate_summary(const std::vector<CertificateReport>& reports) {
    std::ostringstream os;
    for (const auto& r : reports) {
        os << r.id << ": " << (r.pass ? "pass" : "FAIL") << " (" << r.count << " points, " << r.violations.size()
           << " violations)";
        for (const auto& [k, v] : r.constants) os << " " << k << "=" << format_double(v);
        if (!r.note.empty()) os << " [" << r.note << "]";
        os << "\n";
    }
    return os.str();
}

}  // namespace exlab
