#pragma once

#include "exlab/criteria.hpp"
#include "exlab/measures.hpp"
#include "exlab/model.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace exlab {

// ---------------------------------------------------------------------------
// Sampling domains
// ---------------------------------------------------------------------------

struct Sample {
    Vec x;
    int alpha = 0;
    int ray = -1;        // -1 for box points
    double radius = 0.0; // Euclidean norm for ray points
};

struct Domain {
    int n = 3;
    int m0 = 1;
    double box = 50.0;
    int rays = 20;
    double ray_min = 1.0;
    double ray_max = 1e6;
    double ray_fraction = 0.5;  // share of the points placed on rays
    std::uint64_t ray_seed = 0x5eed0f4a7b1dULL;  // ray directions are part of the domain

    std::string describe() const;
};

std::vector<Vec> ray_directions(const Domain& d);
std::vector<Sample> sample_domain(const Domain& d, int count, std::uint64_t seed);
std::vector<Sample> sample_box(const Domain& d, int count, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

using SampleFunction = std::function<double(const Vec&, int)>;

struct Violation {
    Vec x;
    int alpha = 0;
    double lhs = 0.0, rhs = 0.0;
};

struct CertificateReport {
    std::string id;
    std::string domain;
    int count = 0;
    std::vector<Violation> violations;
    std::vector<std::pair<std::string, double>> constants;
    std::string note;
    bool pass = true;

    double constant(const std::string& name) const;
};

// lhs <= rhs + 1e-9 (1 + |rhs|) at every sample.
CertificateReport check_inequality(const std::string& id, const SampleFunction& lhs, const SampleFunction& rhs,
                                   const std::vector<Sample>& samples, const std::string& domain = "");

// ---------------------------------------------------------------------------
// Constant fitting
// ---------------------------------------------------------------------------

enum class InequalityFamily { Drift, GammaBound, RatioBound, LowerBound, SquareDrift };

struct FitInput {
    SampleFunction a;  // Drift: LW; GammaBound: Gamma W; RatioBound: numerator; LowerBound: H; SquareDrift: L[W^2]
    SampleFunction b;  // Drift: W; GammaBound: W^2; RatioBound: denominator; LowerBound: ||x||; SquareDrift: W^2
};

struct FittedConstants {
    InequalityFamily family = InequalityFamily::Drift;
    double K = 0.0;      // additive constant or supremum
    double gamma = 0.0;  // decay or growth rate where applicable
};

// Smallest constants making the family hold on the samples, inflated by 5%.
// Drift: gamma is half the least -LW/W over the samples with W at or above its
// median, then K is the sup of LW + gamma W.
// Throws UnboundedError when the required constant grows along sampled rays.
FittedConstants fit_constants(InequalityFamily family, const FitInput& in, const std::vector<Sample>& samples);

// Report for a family at given constants.
CertificateReport check_family(const std::string& id, InequalityFamily family, const FitInput& in,
                               const FittedConstants& c, const std::vector<Sample>& samples,
                               const std::string& domain = "");

// ---------------------------------------------------------------------------
// Paper conditions
// ---------------------------------------------------------------------------

// Derivatives of F^2 from those of F.
ScalarFunction square_function(const ScalarFunction& F);

struct Assumption4Bundle {
    std::vector<CertificateReport> reports;  // drift, gamma, ratio, square drift
    double K_W = 0.0, gamma_W = 0.0, k_W = 0.0, ratio_sup = 0.0;
    bool pass = true;
};

// Fits on `fit_set` and verifies on `check_set`. The ratio uses spec.p0.
Assumption4Bundle check_assumption4(const LyapunovSpec& spec, const std::vector<Sample>& fit_set,
                                    const std::vector<Sample>& check_set, const std::string& domain = "");

// H >= gamma_U ||x|| - K_U, fitted on `fit_set` and verified on `check_set`.
CertificateReport check_lower_bound(const LyapunovSpec& spec, const std::vector<Sample>& fit_set,
                                    const std::vector<Sample>& check_set, const std::string& domain = "");

struct ATightFit {
    double K = 0.0;
    double ell = 0.0;
};

double a_tight_lhs(const HybridModel& model, const ScalarFunction& W, double delta0, const Vec& x, int alpha);
ATightFit fit_a_tight(const HybridModel& model, const ScalarFunction& W, double delta0,
                      const std::vector<Sample>& samples);
// Also checks liminf W / ln||x|| > n at the outer end of every domain ray.
CertificateReport check_a_tight(const HybridModel& model, const ScalarFunction& W, double delta0, double ell, double K,
                                const std::vector<Sample>& samples, const Domain& domain);

struct MuHRow {
    std::string measure;
    Estimate value;
};

struct MuHReport {
    std::vector<MuHRow> rows;
    double min_value = 0.0;
    double min_se = 0.0;
    std::string argmin;
    double lambda = 0.0;
    bool pass = true;
};

MuHReport check_mu_H(const std::vector<std::pair<std::string, const OccupationMeasure*>>& measures,
                     const StateFunction& H, double lambda);

void write_certificate_csv(std::ostream& os, const std::vector<CertificateReport>& reports, int n);
std::string certificate_summary(const std::vector<CertificateReport>& reports);

}  // namespace exlab
