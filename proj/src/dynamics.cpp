#include "exlab/dynamics.hpp"
#include "exlab/config.hpp"
#include "exlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

namespace exlab {

std::string to_string(Scheme s) { return s == Scheme::Euler ? "euler" : "log_euler"; }

Scheme parse_scheme(const std::string& s) {
    if (s == "euler") return Scheme::Euler;
    if (s == "log_euler") return Scheme::LogEuler;
    throw ConfigError("scheme", "scheme must be euler or log_euler, got '" + s + "'");
}

// ---------------------------------------------------------------------------

int RegimePath::at(double t) const {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t k = (it == times.begin()) ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    return states[k];
}

Vec RegimePath::occupation(int m0) const {
    Vec occ = Vec::Zero(m0);
    for (std::size_t k = 0; k < states.size(); ++k) {
        double end = (k + 1 < times.size()) ? times[k + 1] : T;
        occ(states[k]) += end - times[k];
    }
    return occ / T;
}

RegimePath sample_regime_path(const Mat& Q, int alpha0, double T, Rng& rng) {
    if (!(T > 0.0)) throw PreconditionError("regime path horizon must be positive");
    const int m0 = static_cast<int>(Q.rows());
    if (alpha0 < 0 || alpha0 >= m0) throw PreconditionError("initial regime out of range");
    RegimePath p;
    p.T = T;
    p.times.push_back(0.0);
    p.states.push_back(alpha0);
    if (m0 == 1) return p;
    for (int i = 0; i < m0; ++i)
        if (!(-Q(i, i) > 0.0))
            throw PreconditionError("regime " + std::to_string(i + 1) + " is absorbing (q_ii = 0) with m0 > 1");
    double t = 0.0;
    int a = alpha0;
    for (;;) {
        const double rate = -Q(a, a);
        t += rng.exponential(rate);
        if (t >= T) break;
        double u = rng.uniform() * rate;
        int next = -1;
        double acc = 0.0;
        for (int j = 0; j < m0; ++j) {
            if (j == a) continue;
            acc += Q(a, j);
            next = j;
            if (u < acc) break;
        }
        a = next;
        p.times.push_back(t);
        p.states.push_back(a);
    }
    return p;
}

RegimePath sample_regime_path(const Mat& Q, int alpha0, double T, std::uint64_t seed) {
    Rng rng(seed);
    return sample_regime_path(Q, alpha0, T, rng);
}

// ---------------------------------------------------------------------------

void step_inplace(const HybridModel& model, Vec& x, int alpha, double dt, const Vec& w, Scheme scheme,
                  StepWork& work, double t) {
    model.evaluate(x, alpha, work.coef);
    const CoefficientValues& c = work.coef;
    if (!c.mu.allFinite() || !c.s.allFinite() || !c.f.allFinite() || !c.g.allFinite()) {
        std::ostringstream os;
        os << "trajectory diverged: non-finite coefficients at t = " << t;
        throw DivergenceError(os.str(), t);
    }
    const double sq = std::sqrt(dt);
    work.dE.noalias() = model.gamma.transpose() * w;
    work.dE *= sq;
    for (int i = 0; i < model.n; ++i) {
        if (scheme == Scheme::LogEuler && model.kolmogorov[i]) {
            if (x(i) == 0.0) continue;
            const double g = c.g(i);
            x(i) *= std::exp((c.f(i) - 0.5 * model.sigma(i, i) * g * g) * dt + g * work.dE(i));
        } else {
            x(i) = std::max(0.0, x(i) + c.mu(i) * dt + c.s(i) * work.dE(i));
        }
    }
    if (!x.allFinite() || x.norm() > 1e12) {
        std::ostringstream os;
        os << "trajectory diverged at t = " << t + dt;
        throw DivergenceError(os.str(), t + dt);
    }
}

Vec step(const HybridModel& model, const Vec& x, int alpha, double dt, const Vec& w, Scheme scheme) {
    if (!(dt > 0.0)) throw PreconditionError("dt must be positive");
    if ((x.array() < 0.0).any()) throw PreconditionError("state must lie in the nonnegative orthant");
    StepWork work;
    Vec y = x;
    step_inplace(model, y, alpha, dt, w, scheme, work);
    return y;
}

void simulate_visit(const HybridModel& model, const Vec& x0, int alpha0, double T, double dt, std::uint64_t seed,
                    Scheme scheme, const StepVisitor& visit, const std::vector<int>& pinned) {
    if (!(dt > 0.0)) throw PreconditionError("dt must be positive");
    if (!(T >= dt)) throw PreconditionError("horizon T must be at least dt");
    if (x0.size() != model.n) throw DimensionError("initial state has wrong dimension");
    if ((x0.array() < 0.0).any()) throw PreconditionError("initial state must lie in the nonnegative orthant");

    Rng regime_rng(mix(seed, 0));
    Rng noise_rng(mix(seed, 1));
    RegimePath path = sample_regime_path(model.Q, alpha0, T, regime_rng);

    Vec x = x0;
    for (int i : pinned) x(i) = 0.0;
    Vec w(model.n);
    StepWork work;
    work.coef.resize(model.n);
    work.dE.resize(model.n);

    const long long nsteps = static_cast<long long>(std::ceil(T / dt - 1e-9));
    long long k = 0;  // index of the last grid point passed
    std::size_t next_jump = 1;
    double t = 0.0;
    int alpha = alpha0;
    while (t < T) {
        double t_grid = (k + 1 >= nsteps) ? T : static_cast<double>(k + 1) * dt;
        double t_jump = next_jump < path.times.size() ? path.times[next_jump] : T;
        double t_next = std::min(t_grid, t_jump);
        double h = t_next - t;
        if (h > 0.0) {
            visit(t, h, x, alpha);
            for (int i = 0; i < model.n; ++i) w(i) = noise_rng.normal();
            step_inplace(model, x, alpha, h, w, scheme, work, t);
            for (int i : pinned) x(i) = 0.0;
        }
        t = t_next;
        if (next_jump < path.times.size() && t == path.times[next_jump]) {
            alpha = path.states[next_jump];
            ++next_jump;
        }
        if (t == t_grid) ++k;
    }
    visit(T, 0.0, x, alpha);
}

Trajectory simulate(const HybridModel& model, const Vec& x0, int alpha0, double T, double dt, std::uint64_t seed,
                    Scheme scheme, const SimOptions& opts) {
    Trajectory tr;
    tr.n = model.n;
    tr.seed = seed;
    tr.scheme = scheme;
    const int every = std::max(1, opts.record_every);
    const std::size_t expected = static_cast<std::size_t>(T / dt / every) + 8;
    tr.times.reserve(expected);
    tr.regimes.reserve(expected);
    tr.data.reserve(expected * model.n);
    long long counter = 0;
    simulate_visit(
        model, x0, alpha0, T, dt, seed, scheme,
        [&](double t, double h, const Vec& x, int alpha) {
            if (h == 0.0 || counter % every == 0) {
                tr.times.push_back(t);
                tr.regimes.push_back(alpha);
                tr.data.insert(tr.data.end(), x.data(), x.data() + x.size());
            }
            ++counter;
        },
        opts.pinned);
    // the regime path is re-derived from the same stream for provenance
    Rng regime_rng(mix(seed, 0));
    tr.path = sample_regime_path(model.Q, alpha0, T, regime_rng);
    return tr;
}

// ---------------------------------------------------------------------------

PathFunctional terminal_coordinate(int i, const std::string& name) {
    return {name.empty() ? "terminal_x" + std::to_string(i + 1) : name,
            [i](const Trajectory& tr) { return tr.x(tr.size() - 1, i); }};
}

PathFunctional time_average(int i, double burn_in, const std::string& name) {
    return {name.empty() ? "time_average_x" + std::to_string(i + 1) : name, [i, burn_in](const Trajectory& tr) {
                double acc = 0.0, total = 0.0;
                for (std::size_t k = 0; k + 1 < tr.size(); ++k) {
                    if (tr.times[k] < burn_in) continue;
                    double h = tr.times[k + 1] - tr.times[k];
                    acc += tr.x(k, i) * h;
                    total += h;
                }
                return total > 0.0 ? acc / total : 0.0;
            }};
}

int EnsembleStats::failures() const {
    return static_cast<int>(std::count_if(replicates.begin(), replicates.end(), [](const auto& r) { return !r.ok; }));
}

std::vector<double> EnsembleStats::values(std::size_t functional) const {
    std::vector<double> v;
    v.reserve(replicates.size());
    for (const auto& r : replicates)
        if (r.ok) v.push_back(r.values[functional]);
    return v;
}

double EnsembleStats::mean(std::size_t functional) const {
    auto v = values(functional);
    if (v.empty()) return std::nan("");
    double s = 0.0;
    for (double d : v) s += d;
    return s / static_cast<double>(v.size());
}

double EnsembleStats::variance(std::size_t functional) const {
    auto v = values(functional);
    if (v.size() < 2) return 0.0;
    double m = mean(functional);
    double s = 0.0;
    for (double d : v) s += (d - m) * (d - m);
    return s / static_cast<double>(v.size() - 1);
}

double EnsembleStats::stderr_of_mean(std::size_t functional) const {
    auto v = values(functional);
    if (v.empty()) return std::nan("");
    return std::sqrt(variance(functional) / static_cast<double>(v.size()));
}

double sample_quantile(std::vector<double> v, double q) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    double pos = q * static_cast<double>(v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

double EnsembleStats::quantile(std::size_t functional, double q) const { return sample_quantile(values(functional), q); }

Vec EnsembleStats::terminal_mean() const {
    Vec m;
    int count = 0;
    for (const auto& r : replicates) {
        if (!r.ok) continue;
        if (count == 0) m = Vec::Zero(r.terminal.size());
        m += r.terminal;
        ++count;
    }
    return count ? Vec(m / count) : m;
}

EnsembleStats ensemble(const HybridModel& model, const Vec& x0, int alpha0, double T, double dt, int reps,
                       std::uint64_t seed, const std::vector<PathFunctional>& functionals,
                       const EnsembleOptions& opts) {
    if (reps < 1) throw PreconditionError("ensemble needs at least one replicate");
    EnsembleStats stats;
    for (const auto& f : functionals) stats.names.push_back(f.name);
    stats.replicates.resize(reps);
    parallel_for(static_cast<std::size_t>(reps), opts.threads, [&](std::size_t k) {
        ReplicateResult& r = stats.replicates[k];
        r.replicate = static_cast<int>(k);
        r.seed = mix(seed, k);
        try {
            Trajectory tr = simulate(model, x0, alpha0, T, dt, r.seed, opts.scheme, opts.sim);
            r.terminal = tr.terminal();
            r.terminal_regime = tr.regimes.back();
            for (const auto& f : functionals) r.values.push_back(f.fn(tr));
        } catch (const DivergenceError& e) {
            r.ok = false;
            r.error = "replicate " + std::to_string(k) + ": " + e.what();
            r.error_time = e.time();
        } catch (const Error& e) {
            r.ok = false;
            r.error = "replicate " + std::to_string(k) + ": " + e.what();
        }
    });
    return stats;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "t,regime";
    for (int i = 0; i < traj.n; ++i) os << ",x" << i + 1;
    os << "\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        os << format_double(traj.times[k]) << "," << traj.regimes[k] + 1;
        for (int i = 0; i < traj.n; ++i) os << "," << format_double(traj.x(k, i));
        os << "\n";
    }
}

void write_ensemble_csv(std::ostream& os, const EnsembleStats& stats) {
    os << "replicate,functional,value\n";
    for (const auto& r : stats.replicates) {
        for (std::size_t f = 0; f < stats.names.size(); ++f) {
            os << r.replicate << "," << stats.names[f] << ","
               << (r.ok ? format_double(r.values[f]) : std::string("nan")) << "\n";
        }
    }
}

}  // namespace exlab
