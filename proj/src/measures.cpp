#include "exlab/measures.hpp"
#include "exlab/config.hpp"
#include "exlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace exlab {

namespace {

std::string describe(const Vec& x, int alpha) {
    std::ostringstream os;
    os << "(";
    for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x(i);
    os << "; regime " << alpha + 1 << ")";
    return os.str();
}

double checked(const StateFunction& h, const Vec& x, int alpha) {
    double v = h(x, alpha);
    if (!std::isfinite(v)) throw EvaluationError("function is not finite at state " + describe(x, alpha));
    return v;
}

}  // namespace

void OccupationMeasure::add(const Vec& x, int alpha, double w) {
    weights.push_back(w);
    regimes.push_back(alpha);
    states.insert(states.end(), x.data(), x.data() + x.size());
}

double OccupationMeasure::total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

double OccupationMeasure::integrate(const StateFunction& h) const {
    if (weights.empty()) throw PreconditionError("occupation measure is empty");
    double acc = 0.0, total = 0.0;
    Vec x(n);
    for (std::size_t k = 0; k < size(); ++k) {
        x = state(k);
        acc += weights[k] * checked(h, x, regimes[k]);
        total += weights[k];
    }
    return acc / total;
}

Estimate OccupationMeasure::integrate_with_se(const StateFunction& h, int batches) const {
    if (weights.empty()) throw PreconditionError("occupation measure is empty");
    const double total = total_weight();
    const std::size_t B = std::max<std::size_t>(1, std::min<std::size_t>(batches, size()));
    std::vector<double> acc(B, 0.0), wsum(B, 0.0);
    double running = 0.0, overall = 0.0;
    Vec x(n);
    for (std::size_t k = 0; k < size(); ++k) {
        x = state(k);
        double v = checked(h, x, regimes[k]);
        std::size_t b = std::min(B - 1, static_cast<std::size_t>(running / total * static_cast<double>(B)));
        acc[b] += weights[k] * v;
        wsum[b] += weights[k];
        running += weights[k];
        overall += weights[k] * v;
    }
    Estimate e;
    e.value = overall / total;
    std::vector<double> means;
    for (std::size_t b = 0; b < B; ++b)
        if (wsum[b] > 0.0) means.push_back(acc[b] / wsum[b]);
    if (means.size() < 2) return e;
    double m = 0.0;
    for (double v : means) m += v;
    m /= static_cast<double>(means.size());
    double ss = 0.0;
    for (double v : means) ss += (v - m) * (v - m);
    double var = ss / static_cast<double>(means.size() - 1);
    e.se = std::sqrt(var / static_cast<double>(means.size()));
    return e;
}

OccupationMeasure OccupationMeasure::normalized() const {
    OccupationMeasure out = *this;
    const double total = total_weight();
    for (double& w : out.weights) w /= total;
    return out;
}

OccupationMeasure OccupationMeasure::point_mass(const Vec& x, int alpha, const std::string& source) {
    OccupationMeasure mu;
    mu.n = static_cast<int>(x.size());
    mu.add(x, alpha, 1.0);
    mu.total_time = 1.0;
    mu.source = source;
    return mu;
}

OccupationMeasure occupation_from_trajectory(const Trajectory& traj, double burn_in) {
    if (traj.size() < 2) throw PreconditionError("trajectory too short");
    if (!(burn_in < traj.times.back())) throw PreconditionError("burn_in must be smaller than T");
    OccupationMeasure mu;
    mu.n = traj.n;
    mu.total_time = traj.times.back();
    mu.burn_in = burn_in;
    mu.source = "trajectory seed " + std::to_string(traj.seed);
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
        if (traj.times[k] < burn_in) continue;
        mu.add(traj.state(k), traj.regimes[k], traj.times[k + 1] - traj.times[k]);
    }
    return mu;
}

double occupation_average(const Trajectory& traj, const StateFunction& h, double burn_in) {
    return occupation_from_trajectory(traj, burn_in).integrate(h);
}

OccupationMeasure estimate_ergodic_measure(const HybridModel& model, const ExtinctionSpec& spec, const Vec& z0,
                                           int alpha0, double T, double dt, double burn_in, std::uint64_t seed,
                                           const MeasureOptions& opts) {
    if (z0.size() != model.n) throw DimensionError("initial state has wrong dimension");
    for (int i : spec.extinct)
        if (z0(i) != 0.0)
            throw PreconditionError("initial state is not on M0: coordinate " + std::to_string(i + 1) +
                                    " must be exactly 0");
    if (!(burn_in >= 0.0 && burn_in < T)) throw PreconditionError("burn_in must lie in [0, T)");
    const int thin = std::max(1, opts.thin);

    OccupationMeasure mu;
    mu.n = model.n;
    mu.total_time = T;
    mu.burn_in = burn_in;
    mu.source = model.name + " restricted to M0, seed " + std::to_string(seed);
    const std::size_t expected = static_cast<std::size_t>((T - burn_in) / dt / thin) + 8;
    mu.weights.reserve(expected);
    mu.regimes.reserve(expected);
    mu.states.reserve(expected * model.n);

    int pending = 0;
    double pending_w = 0.0;
    simulate_visit(
        model, z0, alpha0, T, dt, seed, opts.scheme,
        [&](double t, double h, const Vec& x, int alpha) {
            if (h <= 0.0 || t + h <= burn_in) return;
            double w = std::min(h, t + h - burn_in);
            if (pending == 0) {
                mu.add(x, alpha, w);
                pending_w = w;
            } else {
                pending_w += w;
                mu.weights.back() = pending_w;
            }
            pending = (pending + 1) % thin;
        },
        spec.extinct);
    return mu;
}

Vec stationary_first_moments(const Mat& Q, const Vec& b, const Vec& c1) {
    const int m0 = static_cast<int>(Q.rows());
    if (b.size() != m0 || c1.size() != m0) throw DimensionError("b and c1 need one entry per regime");
    if ((c1.array() <= 0.0).any()) throw PreconditionError("c1 must be positive in every regime");
    Vec nu = stationary_distribution(Q);
    Mat A = Q.transpose();
    A.diagonal() -= c1;
    Eigen::FullPivLU<Mat> lu(A);
    if (!lu.isInvertible()) throw PreconditionError("stationarity system for the first moments is singular");
    return lu.solve(Vec(-b.cwiseProduct(nu)));
}

// ---------------------------------------------------------------------------

void check_mu12_conditions(const LvParams& p) {
    const double r1_eff = p.r1 - 0.5 * p.sigma1 * p.sigma1;
    if (!(r1_eff > 0.0))
        throw InapplicableError("σ₁²/2 < r₁", "condition σ₁²/2 < r₁ is violated: r₁ - σ₁²/2 = " + format_double(r1_eff));
    const double c2 = r1_eff * p.a21 / p.a11 - p.r2 - 0.5 * p.sigma2 * p.sigma2;
    if (!(c2 > 0.0))
        throw InapplicableError("(r₁ - σ₁²/2)a₂₁/a₁₁ - r₂ - σ₂²/2 > 0",
                                "condition (r₁ - σ₁²/2)a₂₁/a₁₁ - r₂ - σ₂²/2 > 0 is violated: value " +
                                    format_double(c2));
}

Mu12Moments mu12_closed_moments(const LvParams& p) {
    check_mu12_conditions(p);
    Mu12Moments m;
    const double s1 = 0.5 * p.sigma1 * p.sigma1;
    const double s2 = 0.5 * p.sigma2 * p.sigma2;
    m.ex1 = (p.r2 + s2) / p.a21;
    m.ex2_printed = (p.r1 - s1 - (p.r2 + p.a11 * s2) / p.a21) / p.a12;
    m.ex2_corrected = (p.r1 - s1 - p.a11 * (p.r2 + s2) / p.a21) / p.a12;
    return m;
}

double mu1_mean(const LvParams& p) {
    const double r1_eff = p.r1 - 0.5 * p.sigma1 * p.sigma1;
    if (!(r1_eff > 0.0))
        throw InapplicableError("σ₁²/2 < r₁", "condition σ₁²/2 < r₁ is violated: r₁ - σ₁²/2 = " + format_double(r1_eff));
    return r1_eff / p.a11;
}

Ex2Arbitration arbitrate_ex2(const Mu12Moments& closed, const Estimate& empirical) {
    Ex2Arbitration a;
    a.empirical = empirical.value;
    a.se = empirical.se;
    a.printed_rel_error = std::abs(empirical.value - closed.ex2_printed) / std::abs(closed.ex2_printed);
    a.corrected_rel_error = std::abs(empirical.value - closed.ex2_corrected) / std::abs(closed.ex2_corrected);
    a.winner = a.corrected_rel_error <= a.printed_rel_error ? "corrected" : "printed";
    return a;
}

// ---------------------------------------------------------------------------

BandReport time_average_band_check(const HybridModel& model, const StateFunction& H, const std::vector<BandStart>& K,
                                   double eps, std::vector<double> T_grid, double h_min, double h_max,
                                   std::uint64_t seed, const BandOptions& opts) {
    if (K.empty()) throw PreconditionError("band check needs at least one start state");
    if (T_grid.empty()) throw PreconditionError("band check needs a nonempty T grid");
    if (opts.reps < 1) throw PreconditionError("band check needs at least one replicate");
    std::sort(T_grid.begin(), T_grid.end());
    const std::size_t G = T_grid.size();
    const double T_max = T_grid.back();

    BandReport rep;
    rep.h_min = h_min;
    rep.h_max = h_max;
    rep.eps = eps;
    rep.T_grid = T_grid;
    rep.averages = Mat::Zero(static_cast<int>(K.size()), static_cast<int>(G));

    for (std::size_t s = 0; s < K.size(); ++s) {
        std::vector<std::vector<double>> partial(opts.reps, std::vector<double>(G, 0.0));
        parallel_for(static_cast<std::size_t>(opts.reps), opts.threads, [&](std::size_t r) {
            double integral = 0.0;
            std::size_t next = 0;
            auto& out = partial[r];
            simulate_visit(
                model, K[s].x, K[s].alpha, T_max, opts.dt, mix(mix(seed, s), r), opts.scheme,
                [&](double t, double h, const Vec& x, int alpha) {
                    while (next < G && t >= T_grid[next] - 1e-9 * T_grid[next]) {
                        out[next] = integral / T_grid[next];
                        ++next;
                    }
                    if (h > 0.0) integral += checked(H, x, alpha) * h;
                },
                opts.pinned);
            for (; next < G; ++next) out[next] = integral / T_grid[next];
        });
        for (std::size_t g = 0; g < G; ++g) {
            double acc = 0.0;
            for (int r = 0; r < opts.reps; ++r) acc += partial[r][g];
            rep.averages(static_cast<int>(s), static_cast<int>(g)) = acc / opts.reps;
        }
    }

    // T0: smallest grid value from which every later grid value is in the band for all starts
    auto in_band = [&](double v) { return v > h_min - eps && v < h_max + eps; };
    std::ptrdiff_t first_ok = static_cast<std::ptrdiff_t>(G);
    for (std::ptrdiff_t g = static_cast<std::ptrdiff_t>(G) - 1; g >= 0; --g) {
        bool all = true;
        for (int s = 0; s < rep.averages.rows(); ++s) all = all && in_band(rep.averages(s, g));
        if (!all) break;
        first_ok = g;
    }
    if (first_ok < static_cast<std::ptrdiff_t>(G)) {
        rep.found = true;
        rep.T0 = T_grid[first_ok];
    }
    double worst = -1.0;
    for (int s = 0; s < rep.averages.rows(); ++s) {
        for (std::size_t g = 0; g < G; ++g) {
            double v = rep.averages(s, static_cast<int>(g));
            double dist = std::max({0.0, (h_min - eps) - v, v - (h_max + eps)});
            double centre = std::abs(v - 0.5 * (h_min + h_max));
            double score = dist > 0.0 ? 1e6 + dist : centre;
            if (score > worst) {
                worst = score;
                rep.worst_start = s;
                rep.worst_T = T_grid[g];
                rep.worst_value = v;
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------

void write_measure_csv(std::ostream& os, const OccupationMeasure& mu) {
    os << "weight,regime";
    for (int i = 0; i < mu.n; ++i) os << ",x" << i + 1;
    os << "\n";
    for (std::size_t k = 0; k < mu.size(); ++k) {
        os << format_double(mu.weights[k]) << "," << mu.regimes[k] + 1;
        for (int i = 0; i < mu.n; ++i) os << "," << format_double(mu.states[k * mu.n + i]);
        os << "\n";
    }
}

OccupationMeasure read_measure_csv(std::istream& is, const std::string& source) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("measure", "empty measure file");
    int cols = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
    if (cols < 3 || line.rfind("weight,regime", 0) != 0) throw ConfigError("measure", "bad measure CSV header");
    OccupationMeasure mu;
    mu.n = cols - 2;
    mu.source = source;
    Vec x(mu.n);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> v;
        while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
        if (static_cast<int>(v.size()) != cols) throw ConfigError("measure", "ragged measure CSV row");
        for (int i = 0; i < mu.n; ++i) x(i) = v[2 + i];
        mu.add(x, static_cast<int>(v[1]) - 1, v[0]);
    }
    mu.total_time = mu.total_weight();
    return mu;
}

void write_moment_csv(std::ostream& os, const std::vector<MomentRow>& rows) {
    os << "functional,estimate,stderr\n";
    for (const auto& r : rows)
        os << r.functional << "," << format_double(r.estimate.value) << "," << format_double(r.estimate.se) << "\n";
}

}  // namespace exlab
