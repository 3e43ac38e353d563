#pragma once

#include "exlab/dynamics.hpp"
#include "exlab/families.hpp"
#include "exlab/model.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace exlab {

using StateFunction = std::function<double(const Vec&, int)>;

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

// Weighted empirical samples, kept in time order.
struct OccupationMeasure {
    int n = 0;
    std::vector<double> weights;
    std::vector<double> states;  // row-major, n per sample
    std::vector<int> regimes;    // 0-based
    double total_time = 0.0;
    double burn_in = 0.0;
    std::string source;

    std::size_t size() const { return weights.size(); }
    Eigen::Map<const Vec> state(std::size_t k) const { return Eigen::Map<const Vec>(states.data() + k * n, n); }
    void add(const Vec& x, int alpha, double w);
    double total_weight() const;

    // Weighted average of h. Non-finite values raise EvaluationError.
    double integrate(const StateFunction& h) const;
    // Batch-means standard error over `batches` consecutive blocks of equal weight.
    Estimate integrate_with_se(const StateFunction& h, int batches = 50) const;
    OccupationMeasure normalized() const;

    static OccupationMeasure point_mass(const Vec& x, int alpha, const std::string& source = "point_mass");
};

OccupationMeasure occupation_from_trajectory(const Trajectory& traj, double burn_in);

// (1 / (T - burn_in)) * sum h(x_k, a_k) dt_k over grid intervals starting at or after burn_in.
double occupation_average(const Trajectory& traj, const StateFunction& h, double burn_in);

struct MeasureOptions {
    Scheme scheme = Scheme::LogEuler;
    int thin = 1;  // merge this many consecutive steps into one sample
};

// Simulates the dynamics restricted to M0 (extinct coordinates pinned at 0).
OccupationMeasure estimate_ergodic_measure(const HybridModel& model, const ExtinctionSpec& spec, const Vec& z0,
                                           int alpha0, double T, double dt, double burn_in, std::uint64_t seed,
                                           const MeasureOptions& opts = {});

// Per-regime stationary moments m of dS = (b(a) - c1(a) S)dt + ..., with E S = sum(m).
Vec stationary_first_moments(const Mat& Q, const Vec& b, const Vec& c1);

// ---------------------------------------------------------------------------
// Closed-form moments of the predator-prey boundary measures
// ---------------------------------------------------------------------------

struct Mu12Moments {
    double ex1 = 0.0;
    double ex2_printed = 0.0;    // formula as printed
    double ex2_corrected = 0.0;  // from the zero-average identity for species 1
};

// Throws InapplicableError naming the violated existence condition.
void check_mu12_conditions(const LvParams& p);
Mu12Moments mu12_closed_moments(const LvParams& p);
// Mean of the prey-only stationary law: (r1 - sigma1^2/2) / a11.
double mu1_mean(const LvParams& p);

struct Ex2Arbitration {
    double empirical = 0.0;
    double se = 0.0;
    double printed_rel_error = 0.0;
    double corrected_rel_error = 0.0;
    std::string winner;  // "printed" or "corrected"
};

Ex2Arbitration arbitrate_ex2(const Mu12Moments& closed, const Estimate& empirical);

// ---------------------------------------------------------------------------
// Time-average band
// ---------------------------------------------------------------------------

struct BandStart {
    Vec x;
    int alpha = 0;
};

struct BandOptions {
    double dt = 1e-2;
    int reps = 200;
    Scheme scheme = Scheme::LogEuler;
    std::vector<int> pinned;
    unsigned threads = 1;
};

struct BandReport {
    bool found = false;
    double T0 = 0.0;
    double h_min = 0.0;
    double h_max = 0.0;
    double eps = 0.0;
    std::vector<double> T_grid;
    Mat averages;  // rows: starts, cols: grid times
    int worst_start = -1;
    double worst_T = 0.0;
    double worst_value = 0.0;
};

BandReport time_average_band_check(const HybridModel& model, const StateFunction& H, const std::vector<BandStart>& K,
                                   double eps, std::vector<double> T_grid, double h_min, double h_max,
                                   std::uint64_t seed, const BandOptions& opts = {});

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

void write_measure_csv(std::ostream& os, const OccupationMeasure& mu);
OccupationMeasure read_measure_csv(std::istream& is, const std::string& source = "csv");

struct MomentRow {
    std::string functional;
    Estimate estimate;
};

void write_moment_csv(std::ostream& os, const std::vector<MomentRow>& rows);

}  // namespace exlab
