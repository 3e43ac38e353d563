#pragma once

#include "exlab/dynamics.hpp"
#include "exlab/families.hpp"
#include "exlab/measures.hpp"
#include "exlab/model.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace exlab {

// ---------------------------------------------------------------------------
// Invasion rates
// ---------------------------------------------------------------------------

// Integral of f_i - sigma_ii g_i^2 / 2 against mu, with batch-means error.
Estimate invasion_rate(const OccupationMeasure& mu, const HybridModel& model, int i);

// -integral of F(s, 0, a) - c2(a) - sigma2(a)^2 / 2 over a disease-free measure.
Estimate lambda_I_sirs(const SirsParams& p, const OccupationMeasure& pi);
// Same quantity from the exact first moments of the disease-free S equation.
double lambda_I_sirs_closed(const SirsParams& p);
double lambda_R_sirs(const SirsParams& p, const Vec& nu);

// -r3 - sigma3^2/2 + a31 E X1 - a32 E X2 under mu12, using the corrected E X2.
double lambda_3_lv(const LvParams& p);
double lambda_3_lv_printed(const LvParams& p);

// Least-squares slope of ln X_i(t) over the trailing `fit_window` fraction of [0, T].
Estimate empirical_exponent(const Trajectory& traj, int i, double fit_window);

// ---------------------------------------------------------------------------
// Weights
// ---------------------------------------------------------------------------

struct RateRow {
    std::string measure;
    Vec lambda;             // one entry per species
    bool interior = false;  // measure lives on the interior of the surviving face
};

struct Weights {
    std::vector<int> I, Ic;
    Vec p_hat;  // aligned with I
    double p_check = 0.0;
    double margin = 0.0;
    std::vector<double> row_margins;
};

// Maximizes the worst-case margin sum p_hat_i l_i - p_check max_{j in Ic} l_j over
// the table, with p_check <= min p_hat / 10, sum <= 1 and weights in [1e-3, 1 - 1e-3].
Weights choose_weights(const std::vector<RateRow>& table, const std::vector<int>& I, const std::vector<int>& Ic);

// ---------------------------------------------------------------------------
// Lyapunov family
// ---------------------------------------------------------------------------

// U_j = -C0 V + sum_{i in I} p_hat_i ln x_i - p_check ln x_j for j in Ic and
// U = min_j U_j, with H_j = L U_j in closed form.
struct LyapunovSpec {
    HybridModel model;
    std::vector<int> I, Ic;
    Vec p_hat;
    double p_check = 0.0;
    double C0 = 1.0;
    ScalarFunction V;  // the smooth term subtracted in U
    ScalarFunction W;  // proper function for the drift conditions

    double K_W = 0.0, gamma_W = 0.0, k_W = 0.0;
    double p0 = 1.1;
    double lambda = 0.0;
    double delta0 = 0.0;
    double ell = 0.0;      // C_U = {||x||_1 <= ell}
    double u_tilde = 0.0;
    double h_tilde = 0.0;

    double U_j(std::size_t jj, const Vec& x) const;  // jj indexes Ic
    double U(const Vec& x) const;
    // +inf when every Ic coordinate is 0 and the I coordinates are positive.
    double U_extended(const Vec& x) const;
    double H_j(std::size_t jj, const Vec& x, int alpha) const;
    double H(const Vec& x, int alpha) const;  // min_j H_j
    ScalarFunction U_j_function(std::size_t jj) const;
    ScalarFunction U_function() const;
    bool in_C_U(const Vec& x) const { return x.lpNorm<1>() <= ell; }
};

LyapunovSpec build_U_family(const HybridModel& model, const ScalarFunction& V, const Weights& weights, double C0);

// ---------------------------------------------------------------------------
// Extinction experiments
// ---------------------------------------------------------------------------

struct Interval {
    double lo = 0.0, hi = 1.0;
};

// Wilson score interval at the 95% level.
Interval wilson_interval(int successes, int trials);

struct ExtinctionOptions {
    double dt = 1e-2;
    Scheme scheme = Scheme::LogEuler;
    unsigned threads = 1;
    double lambda0 = 0.0;     // proxy threshold: U(X(T))/T >= lambda0 / 2
    double dist_tol = 1e-6;
    double fit_window = 0.5;  // for per-replicate slopes of ln X_j, j in Ic
};

struct ExtinctionReplicate {
    bool ok = true;
    std::string error;
    double U_rate = 0.0;  // U(X(T)) / T
    double dist = 0.0;
    std::vector<double> slopes;  // per j in Ic
};

struct ExtinctionReport {
    int reps = 0;
    int u_hits = 0;
    int dist_hits = 0;
    double freq_u = 0.0;
    double freq_dist = 0.0;
    Interval ci_u, ci_dist;
    std::vector<ExtinctionReplicate> replicates;
};

ExtinctionReport extinction_probability(const LyapunovSpec& spec, const std::vector<BandStart>& starts, double T,
                                        int reps, std::uint64_t seed, const ExtinctionOptions& opts);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct RateReportRow {
    std::string measure;
    int species = 0;  // 1-based
    Estimate lambda;
    double closed_form = 0.0;  // NaN when unavailable
    std::string verdict;
};

void write_rate_csv(std::ostream& os, const std::vector<RateReportRow>& rows);

}  // namespace exlab
