#pragma once

#include "exlab/model.hpp"
#include "exlab/rng.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace exlab {

enum class Scheme { Euler, LogEuler };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& s);

// ---------------------------------------------------------------------------
// Regime path
// ---------------------------------------------------------------------------

struct RegimePath {
    double T = 0.0;
    std::vector<double> times;  // times[0] = 0, then jump epochs in (0, T)
    std::vector<int> states;    // states[k] holds on [times[k], times[k+1])

    int at(double t) const;
    std::size_t jumps() const { return states.empty() ? 0 : states.size() - 1; }
    Vec occupation(int m0) const;  // fraction of [0, T] spent in each regime
};

RegimePath sample_regime_path(const Mat& Q, int alpha0, double T, Rng& rng);
RegimePath sample_regime_path(const Mat& Q, int alpha0, double T, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Stepping
// ---------------------------------------------------------------------------

// Workspace reused across steps of one path.
struct StepWork {
    CoefficientValues coef;
    Vec dE;
};

// Advances x over [t, t + dt] in regime alpha. `w` holds raw standard normal
// draws; the noise increment is sqrt(dt) * gamma' w.
void step_inplace(const HybridModel& model, Vec& x, int alpha, double dt, const Vec& w, Scheme scheme,
                  StepWork& work, double t = 0.0);
Vec step(const HybridModel& model, const Vec& x, int alpha, double dt, const Vec& w, Scheme scheme);

struct Trajectory {
    int n = 0;
    std::vector<double> times;
    std::vector<double> data;  // row-major states, n per grid point
    std::vector<int> regimes;  // 0-based
    RegimePath path;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::LogEuler;

    std::size_t size() const { return times.size(); }
    Eigen::Map<const Vec> state(std::size_t k) const { return Eigen::Map<const Vec>(data.data() + k * n, n); }
    double x(std::size_t k, int i) const { return data[k * n + i]; }
    Vec terminal() const { return state(size() - 1); }
};

struct SimOptions {
    int record_every = 1;        // keep every k-th grid point (the last point is always kept)
    std::vector<int> pinned;     // coordinates forced to exactly 0
};

// Called once per step interval with its left end point and length, then
// once more with (T, 0, x_T, alpha_T).
using StepVisitor = std::function<void(double t, double h, const Vec& x, int alpha)>;

void simulate_visit(const HybridModel& model, const Vec& x0, int alpha0, double T, double dt, std::uint64_t seed,
                    Scheme scheme, const StepVisitor& visit, const std::vector<int>& pinned = {});

Trajectory simulate(const HybridModel& model, const Vec& x0, int alpha0, double T, double dt, std::uint64_t seed,
                    Scheme scheme = Scheme::LogEuler, const SimOptions& opts = {});

// ---------------------------------------------------------------------------
// Ensembles
// ---------------------------------------------------------------------------

struct PathFunctional {
    std::string name;
    std::function<double(const Trajectory&)> fn;
};

PathFunctional terminal_coordinate(int i, const std::string& name = "");
PathFunctional time_average(int i, double burn_in, const std::string& name = "");

struct ReplicateResult {
    int replicate = 0;
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
    double error_time = 0.0;
    Vec terminal;
    int terminal_regime = 0;
    std::vector<double> values;
};

struct EnsembleStats {
    std::vector<std::string> names;
    std::vector<ReplicateResult> replicates;

    int count() const { return static_cast<int>(replicates.size()); }
    int failures() const;
    std::vector<double> values(std::size_t functional) const;  // surviving replicates, replicate order
    double mean(std::size_t functional) const;
    double variance(std::size_t functional) const;
    double stderr_of_mean(std::size_t functional) const;
    double quantile(std::size_t functional, double q) const;
    Vec terminal_mean() const;
};

struct EnsembleOptions {
    Scheme scheme = Scheme::LogEuler;
    unsigned threads = 1;  // 0 = one per hardware thread
    SimOptions sim;
};

EnsembleStats ensemble(const HybridModel& model, const Vec& x0, int alpha0, double T, double dt, int reps,
                       std::uint64_t seed, const std::vector<PathFunctional>& functionals,
                       const EnsembleOptions& opts = {});

// Quantile of a sample by linear interpolation between order statistics.
double sample_quantile(std::vector<double> v, double q);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_ensemble_csv(std::ostream& os, const EnsembleStats& stats);

}  // namespace exlab
