#pragma once

#include "exlab/certify.hpp"
#include "exlab/criteria.hpp"
#include "exlab/families.hpp"
#include "exlab/measures.hpp"
#include "exlab/trace.hpp"

#include <string>
#include <vector>

namespace exlab {

// ---------------------------------------------------------------------------
// Parameter presets
// ---------------------------------------------------------------------------

// Two predators, one prey, with lambda_3(mu12) < 0. Values:
//   r = (3.5, 1, 0.5), a11 = 2, a12 = 1, a13 = 0.5, a21 = 1, a23 = 0.5,
//   a31 = 0.6, a32 = 0.2, sigma = (0.1, 0.1, 0.3)
// giving E x1 = 1.005, E x2 = 1.485 and lambda_3 = -0.239 under mu12.
LvParams lotka_params();
// Throws InapplicableError naming the first violated existence or sign condition.
void check_lotka(const LvParams& p);

// Switching SIRS with mass-action incidence, two regimes, Q = [[-2, 2], [1, -1]].
SirsParams sirs_params();
// Requires lambda_I > 0 from the closed-form boundary moments.
void check_sirs(const SirsParams& p);

// Single-regime S equation: the SIRS model with I = R = 0.
SirsParams boundary_sde_params(double b, double c1, double sigma1);

// Regime-switching three-species Kolmogorov system: the predator-prey
// interaction matrix with regime-dependent growth rates and noise.
SwitchingParams kolmogorov_params();
Mat kolmogorov_Q();
HybridModel make_kolmogorov_preset();

HybridModel preset_model(const std::string& name);
std::vector<std::string> preset_names();

// ---------------------------------------------------------------------------
// Lyapunov ingredients built from W0 = 1 + x1 + b0 x2 + b0 x3
// ---------------------------------------------------------------------------

ScalarFunction linear_W0(double b0);
ScalarFunction log_W0(double b0);
ScalarFunction power_W0(double b0, double p0);  // W0^(1 + 2 p0)
ScalarFunction log_W(double b0, double C);      // 1 + C ln W0

// b0 of the switching preset: half the smallest predator/prey coupling ratio over regimes.
double switching_b0(const SwitchingParams& p);

// ---------------------------------------------------------------------------
// Boundary hierarchy and the full Lyapunov pipeline
// ---------------------------------------------------------------------------

struct BoundaryMeasure {
    std::string name;
    OccupationMeasure mu;
    std::vector<int> surviving;  // 0-based species alive under mu
    bool interior = false;       // lives on the interior of the face {x3 = 0}
};

struct PipelineOptions {
    double T = 1e4;
    double burn_in = 1e3;
    double dt = 1e-2;
    int thin = 10;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    double C0 = 4.0;
    double p0 = 0.05;          // exponent in W0^(1 + 2 p0)
    double tight_C = 4.0;      // W = 1 + C ln W0 for the tightness condition
    double delta0 = 0.1;
    int band_starts = 3;       // per boundary measure
    int band_reps = 200;
    double band_dt = 2e-2;
    std::vector<double> T_grid = {1, 2, 4, 8, 16, 32, 64};
};

// Dirac at the origin spread over the stationary regime law.
OccupationMeasure origin_measure(int n, const Mat& Q);

// delta0, mu1 (prey only) and mu12 (prey and predator 2), each pinned on its face.
std::vector<BoundaryMeasure> boundary_hierarchy(const HybridModel& model, const Vec& prey_start,
                                                const Vec& face_start, const PipelineOptions& opts);

std::vector<RateRow> rate_table(const HybridModel& model, const std::vector<BoundaryMeasure>& measures);

struct Pipeline {
    HybridModel model;
    double b0 = 0.0;
    std::vector<BoundaryMeasure> measures;
    std::vector<RateRow> table;
    Weights weights;
    LyapunovSpec spec;
    std::vector<double> mu_H_tilde;  // integral of min(H, h_tilde) per measure
    BandReport band;
    ATightFit tight;
    Vec start;  // interior start near mu12 with a small third species
};

// Runs weights, U family, h_tilde, T0 (band check), ell and u_tilde.
Pipeline build_pipeline(const HybridModel& model, double b0, const Vec& prey_start, const Vec& face_start,
                        const Vec& start, const PipelineOptions& opts);
Pipeline lotka_pipeline(const LvParams& p, const PipelineOptions& opts);
Pipeline kolmogorov_pipeline(const PipelineOptions& opts);

// Smallest level h on the grid lambda 2^k with mu(min(H, h)) >= 0.9 lambda for every measure.
double choose_h_tilde(const LyapunovSpec& spec, const std::vector<BoundaryMeasure>& measures);

TraceConfig trace_config(const Pipeline& pl, std::uint64_t seed, unsigned threads);

}  // namespace exlab
