#include "exlab/criteria.hpp"
#include "exlab/config.hpp"
#include "exlab/lp.hpp"
#include "exlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace exlab {

Estimate invasion_rate(const OccupationMeasure& mu, const HybridModel& model, int i) {
    if (i < 0 || i >= model.n) throw DimensionError("species index out of range");
    if (!model.kolmogorov[i])
        throw PreconditionError("coordinate " + std::to_string(i + 1) +
                                " is not in Kolmogorov form; use empirical_exponent instead");
    const double sii = model.sigma(i, i);
    CoefficientValues cv;
    cv.resize(model.n);
    return mu.integrate_with_se([&](const Vec& x, int alpha) {
        model.evaluate(x, alpha, cv);
        return cv.f(i) - 0.5 * sii * cv.g(i) * cv.g(i);
    });
}

Estimate lambda_I_sirs(const SirsParams& p, const OccupationMeasure& pi) {
    for (std::size_t k = 0; k < pi.size(); ++k)
        if (pi.states[k * pi.n + 1] != 0.0 || pi.states[k * pi.n + 2] != 0.0)
            throw PreconditionError("measure is not supported on the disease-free boundary I = R = 0");
    Estimate e = pi.integrate_with_se([&](const Vec& x, int alpha) {
        const SirsRegime& r = p.regimes[alpha];
        return p.incidence(x(0), 0.0, alpha) - r.c2 - 0.5 * r.sigma2 * r.sigma2;
    });
    e.value = -e.value;
    return e;
}

double lambda_I_sirs_closed(const SirsParams& p) {
    const int m0 = static_cast<int>(p.regimes.size());
    Vec b(m0), c1(m0);
    for (int a = 0; a < m0; ++a) {
        b(a) = p.regimes[a].b;
        c1(a) = p.regimes[a].c1;
    }
    Vec m = stationary_first_moments(p.Q, b, c1);
    Vec nu = stationary_distribution(p.Q);
    double acc = 0.0;
    for (int a = 0; a < m0; ++a) {
        const SirsRegime& r = p.regimes[a];
        acc += r.beta * m(a) - (r.c2 + 0.5 * r.sigma2 * r.sigma2) * nu(a);
    }
    return -acc;
}

double lambda_R_sirs(const SirsParams& p, const Vec& nu) {
    if (nu.size() != static_cast<int>(p.regimes.size())) throw DimensionError("nu needs one entry per regime");
    double acc = 0.0;
    for (std::size_t a = 0; a < p.regimes.size(); ++a) {
        const SirsRegime& r = p.regimes[a];
        acc += (r.c3 + 0.5 * r.sigma3 * r.sigma3) * nu(static_cast<int>(a));
    }
    return acc;
}

double lambda_3_lv(const LvParams& p) {
    Mu12Moments m = mu12_closed_moments(p);
    return -p.r3 - 0.5 * p.sigma3 * p.sigma3 + p.a31 * m.ex1 - p.a32 * m.ex2_corrected;
}

double lambda_3_lv_printed(const LvParams& p) {
    Mu12Moments m = mu12_closed_moments(p);
    return -p.r3 - 0.5 * p.sigma3 * p.sigma3 + p.a31 * m.ex1 - p.a32 * m.ex2_printed;
}

Estimate empirical_exponent(const Trajectory& traj, int i, double fit_window) {
    if (!(fit_window > 0.0 && fit_window <= 1.0)) throw PreconditionError("fit window must lie in (0, 1]");
    if (traj.size() < 3) throw PreconditionError("trajectory too short for a slope fit");
    const double T = traj.times.back();
    const double start = T * (1.0 - fit_window);
    double st = 0.0, sy = 0.0;
    std::size_t N = 0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (traj.times[k] < start) continue;
        const double x = traj.x(k, i);
        if (!(x > 0.0))
            throw EvaluationError("X" + std::to_string(i + 1) + " is not positive at t = " +
                                  format_double(traj.times[k]));
        st += traj.times[k];
        sy += std::log(x);
        ++N;
    }
    if (N < 3) throw PreconditionError("fit window holds fewer than three grid points");
    const double tm = st / N, ym = sy / N;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (traj.times[k] < start) continue;
        const double dt = traj.times[k] - tm;
        sxx += dt * dt;
        sxy += dt * (std::log(traj.x(k, i)) - ym);
    }
    Estimate e;
    e.value = sxy / sxx;
    double rss = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (traj.times[k] < start) continue;
        const double r = std::log(traj.x(k, i)) - ym - e.value * (traj.times[k] - tm);
        rss += r * r;
    }
    e.se = std::sqrt(rss / static_cast<double>(N - 2) / sxx);
    return e;
}

// ---------------------------------------------------------------------------

Weights choose_weights(const std::vector<RateRow>& table, const std::vector<int>& I, const std::vector<int>& Ic) {
    if (table.empty()) throw PreconditionError("rate table is empty");
    if (I.empty() || Ic.empty()) throw PreconditionError("I and Ic must both be nonempty");
    const int k = static_cast<int>(I.size());
    std::vector<double> M(table.size());
    for (std::size_t r = 0; r < table.size(); ++r) {
        const RateRow& row = table[r];
        M[r] = -std::numeric_limits<double>::infinity();
        for (int j : Ic) M[r] = std::max(M[r], row.lambda(j));
        if (!row.interior) {
            double best = -std::numeric_limits<double>::infinity();
            for (int i : I) best = std::max(best, row.lambda(i));
            if (!(best > 0.0))
                throw InfeasibleError("no positive margin: every surviving species has a nonpositive rate under " +
                                      row.measure);
        }
    }

    const double lb = 1e-3, ub = 1.0 - 1e-3;
    double scale = 1.0;
    for (const auto& row : table) scale = std::max(scale, row.lambda.cwiseAbs().maxCoeff());
    const double shift = 10.0 * scale;  // t = y_t - shift

    // variables: y_0..y_{k-1} (p_hat - lb), y_k (p_check - lb), y_{k+1} (t + shift)
    const int nv = k + 2;
    const int rows = static_cast<int>(table.size()) + k + 1 + k + 1 + 1;
    Mat A = Mat::Zero(rows, nv);
    Vec b = Vec::Zero(rows);
    int r = 0;
    for (std::size_t q = 0; q < table.size(); ++q, ++r) {
        double lsum = 0.0;
        for (int a = 0; a < k; ++a) {
            A(r, a) = -table[q].lambda(I[a]);
            lsum += table[q].lambda(I[a]);
        }
        A(r, k) = M[q];
        A(r, k + 1) = 1.0;
        b(r) = shift + lb * lsum - lb * M[q];
    }
    for (int a = 0; a < k; ++a, ++r) {
        A(r, k) = 1.0;
        A(r, a) = -0.1;
        b(r) = -0.9 * lb;
    }
    for (int a = 0; a <= k; ++a) A(r, a) = 1.0;
    b(r++) = 1.0 - (k + 1) * lb;
    for (int a = 0; a <= k; ++a, ++r) {
        A(r, a) = 1.0;
        b(r) = ub - lb;
    }
    A(r, k + 1) = 1.0;  // keeps the program bounded
    b(r++) = 2.0 * shift;

    Vec c = Vec::Zero(nv);
    c(k + 1) = 1.0;
    LpResult sol = solve_lp(A, b, c);

    Weights w;
    w.I = I;
    w.Ic = Ic;
    w.p_hat.resize(k);
    for (int a = 0; a < k; ++a) w.p_hat(a) = sol.x(a) + lb;
    w.p_check = sol.x(k) + lb;
    w.margin = std::numeric_limits<double>::infinity();
    std::size_t blocking = 0;
    for (std::size_t q = 0; q < table.size(); ++q) {
        double m = -w.p_check * M[q];
        for (int a = 0; a < k; ++a) m += w.p_hat(a) * table[q].lambda(I[a]);
        w.row_margins.push_back(m);
        if (m < w.margin) {
            w.margin = m;
            blocking = q;
        }
    }
    if (!(w.margin > 0.0))
        throw InfeasibleError("no weights give a positive margin; blocking measure " + table[blocking].measure);
    return w;
}

// ---------------------------------------------------------------------------

namespace {

void require_positive(const LyapunovSpec& s, const Vec& x) {
    for (int i : s.I)
        if (!(x(i) > 0.0)) throw PreconditionError("U is defined on M+ only: x" + std::to_string(i + 1) + " = 0");
    for (int j : s.Ic)
        if (!(x(j) > 0.0)) throw PreconditionError("U is defined on M+ only: x" + std::to_string(j + 1) + " = 0");
}

}  // namespace

double LyapunovSpec::U_j(std::size_t jj, const Vec& x) const {
    require_positive(*this, x);
    double u = -C0 * V.value(x, 0) - p_check * std::log(x(Ic[jj]));
    for (std::size_t a = 0; a < I.size(); ++a) u += p_hat(static_cast<int>(a)) * std::log(x(I[a]));
    return u;
}

double LyapunovSpec::U(const Vec& x) const {
    double u = std::numeric_limits<double>::infinity();
    for (std::size_t jj = 0; jj < Ic.size(); ++jj) u = std::min(u, U_j(jj, x));
    return u;
}

double LyapunovSpec::U_extended(const Vec& x) const {
    for (int i : I)
        if (!(x(i) > 0.0)) throw PreconditionError("U is undefined: surviving coordinate x" + std::to_string(i + 1) + " = 0");
    bool any_zero = false;
    for (int j : Ic) any_zero = any_zero || !(x(j) > 0.0);
    if (!any_zero) return U(x);
    // U = min_j U_j is +inf only when every Ic coordinate vanishes
    double u = std::numeric_limits<double>::infinity();
    for (std::size_t jj = 0; jj < Ic.size(); ++jj) {
        if (!(x(Ic[jj]) > 0.0)) continue;
        u = std::min(u, U_j(jj, x));
    }
    return u;
}

double LyapunovSpec::H_j(std::size_t jj, const Vec& x, int alpha) const {
    CoefficientValues cv;
    cv.resize(model.n);
    model.evaluate(x, alpha, cv);
    double h = -C0 * apply_generator(model, V, x, alpha);
    for (std::size_t a = 0; a < I.size(); ++a) {
        const int i = I[a];
        h += p_hat(static_cast<int>(a)) * (cv.f(i) - 0.5 * model.sigma(i, i) * cv.g(i) * cv.g(i));
    }
    const int j = Ic[jj];
    h -= p_check * (cv.f(j) - 0.5 * model.sigma(j, j) * cv.g(j) * cv.g(j));
    return h;
}

double LyapunovSpec::H(const Vec& x, int alpha) const {
    double h = std::numeric_limits<double>::infinity();
    for (std::size_t jj = 0; jj < Ic.size(); ++jj) h = std::min(h, H_j(jj, x, alpha));
    return h;
}

ScalarFunction LyapunovSpec::U_j_function(std::size_t jj) const {
    ScalarFunction F;
    const LyapunovSpec self = *this;
    F.value = [self, jj](const Vec& x, int) { return self.U_j(jj, x); };
    if (V.derivatives) {
        F.derivatives = [self, jj](const Vec& x, int alpha, Vec& g, Mat& h) {
            self.V.derivatives(x, alpha, g, h);
            g *= -self.C0;
            h *= -self.C0;
            for (std::size_t a = 0; a < self.I.size(); ++a) {
                const int i = self.I[a];
                const double p = self.p_hat(static_cast<int>(a));
                g(i) += p / x(i);
                h(i, i) -= p / (x(i) * x(i));
            }
            const int j = self.Ic[jj];
            g(j) -= self.p_check / x(j);
            h(j, j) += self.p_check / (x(j) * x(j));
        };
    }
    return F;
}

ScalarFunction LyapunovSpec::U_function() const {
    if (Ic.size() == 1) return U_j_function(0);
    ScalarFunction F;
    const LyapunovSpec self = *this;
    F.value = [self](const Vec& x, int) { return self.U(x); };
    if (V.derivatives) {
        F.derivatives = [self](const Vec& x, int alpha, Vec& g, Mat& h) {
            std::size_t best = 0;
            double u = std::numeric_limits<double>::infinity();
            for (std::size_t jj = 0; jj < self.Ic.size(); ++jj) {
                double v = self.U_j(jj, x);
                if (v < u) {
                    u = v;
                    best = jj;
                }
            }
            self.U_j_function(best).derivatives(x, alpha, g, h);
        };
    }
    return F;
}

LyapunovSpec build_U_family(const HybridModel& model, const ScalarFunction& V, const Weights& weights, double C0) {
    if (static_cast<int>(weights.I.size()) != weights.p_hat.size())
        throw DimensionError("weights do not match the index set I");
    for (int i : weights.I)
        if (!model.kolmogorov[i]) throw PreconditionError("U needs Kolmogorov coordinates on I");
    for (int j : weights.Ic)
        if (!model.kolmogorov[j]) throw PreconditionError("U needs Kolmogorov coordinates on Ic");
    LyapunovSpec s;
    s.model = model;
    s.I = weights.I;
    s.Ic = weights.Ic;
    s.p_hat = weights.p_hat;
    s.p_check = weights.p_check;
    s.C0 = C0;
    s.V = V;
    s.lambda = weights.margin;
    return s;
}

// ---------------------------------------------------------------------------

Interval wilson_interval(int successes, int trials) {
    if (trials <= 0) return {0.0, 1.0};
    const double z = 1.959963984540054;
    const double n = trials, p = static_cast<double>(successes) / n;
    const double denom = 1.0 + z * z / n;
    const double centre = (p + z * z / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

ExtinctionReport extinction_probability(const LyapunovSpec& spec, const std::vector<BandStart>& starts, double T,
                                        int reps, std::uint64_t seed, const ExtinctionOptions& opts) {
    if (starts.empty()) throw PreconditionError("extinction experiment needs at least one start");
    if (reps < 1) throw PreconditionError("extinction experiment needs reps >= 1");
    for (const auto& s : starts) {
        if ((s.x.array() < 0.0).any()) throw PreconditionError("start state lies outside the state space");
        for (int i : spec.I)
            if (!(s.x(i) > 0.0))
                throw PreconditionError("start state lies outside M+: x" + std::to_string(i + 1) + " = 0");
    }
    const ExtinctionSpec ext = ExtinctionSpec::make(spec.model.n, spec.Ic);
    ExtinctionReport rep;
    rep.reps = reps;
    rep.replicates.resize(reps);
    SimOptions sim;
    sim.record_every = std::max(1, static_cast<int>(std::lround(0.1 / opts.dt)));
    parallel_for(static_cast<std::size_t>(reps), opts.threads, [&](std::size_t r) {
        ExtinctionReplicate& out = rep.replicates[r];
        const BandStart& s = starts[r % starts.size()];
        try {
            Trajectory tr = simulate(spec.model, s.x, s.alpha, T, opts.dt, mix(seed, r), opts.scheme, sim);
            Vec xT = tr.terminal();
            out.U_rate = spec.U_extended(xT) / T;
            out.dist = ext.distance(xT);
            for (int j : spec.Ic) {
                bool positive_start = s.x(j) > 0.0;
                out.slopes.push_back(positive_start ? empirical_exponent(tr, j, opts.fit_window).value
                                                    : -std::numeric_limits<double>::infinity());
            }
        } catch (const Error& e) {
            out.ok = false;
            out.error = "replicate " + std::to_string(r) + ": " + e.what();
        }
    });
    for (const auto& r : rep.replicates) {
        if (!r.ok) continue;
        if (r.U_rate >= 0.5 * opts.lambda0) ++rep.u_hits;
        if (r.dist < opts.dist_tol) ++rep.dist_hits;
    }
    rep.freq_u = static_cast<double>(rep.u_hits) / reps;
    rep.freq_dist = static_cast<double>(rep.dist_hits) / reps;
    rep.ci_u = wilson_interval(rep.u_hits, reps);
    rep.ci_dist = wilson_interval(rep.dist_hits, reps);
    return rep;
}

void write_rate_csv(std::ostream& os, const std::vector<RateReportRow>& rows) {
    os << "measure,species,lambda,stderr,closed_form,verdict\n";
    for (const auto& r : rows)
        os << r.measure << "," << r.species << "," << format_double(r.lambda.value) << ","
           << format_double(r.lambda.se) << "," << format_double(r.closed_form) << "," << r.verdict << "\n";
}

}  // namespace exlab
