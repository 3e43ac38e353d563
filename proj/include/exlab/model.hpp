#pragma once

#include "exlab/types.hpp"

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace exlab {

// ---------------------------------------------------------------------------
// Regime generator
// ---------------------------------------------------------------------------

struct GeneratorReport {
    bool pass = true;
    std::vector<std::pair<int, int>> negative_offdiag;        // 1-based (row, col)
    std::vector<std::pair<int, double>> row_sum_violations;   // 1-based row, its sum
    bool reducible = false;
    std::vector<std::string> messages;
};

GeneratorReport validate_generator(const Mat& Q);

// Unique probability vector with nu Q = 0.
Vec stationary_distribution(const Mat& Q);

// Returns Gamma with Gamma' Gamma = sigma. Positive definite input goes
// through LLT; semidefinite input uses the eigen factor diag(sqrt(l)) V'.
Mat cholesky(const Mat& sigma);

// ---------------------------------------------------------------------------
// Coefficients
// ---------------------------------------------------------------------------

// mu, s: per-coordinate drift and noise coefficient.
// f, g:  per-capita rates, meaningful on Kolmogorov coordinates where
//        mu_i = x_i f_i and s_i = x_i g_i.
struct CoefficientValues {
    Vec mu, s, f, g;
    void resize(int n) {
        mu.setZero(n);
        s.setZero(n);
        f.setZero(n);
        g.setZero(n);
    }
};

class Coefficients {
public:
    virtual ~Coefficients() = default;
    virtual void evaluate(const Vec& x, int alpha, CoefficientValues& out) const = 0;
    virtual std::string family() const = 0;
};

// Coefficients backed by a plain callable; used for test models and
// one-off constructions.
class FunctionCoefficients : public Coefficients {
public:
    using Fn = std::function<void(const Vec&, int, CoefficientValues&)>;
    FunctionCoefficients(Fn fn, std::string name) : fn_(std::move(fn)), name_(std::move(name)) {}
    void evaluate(const Vec& x, int alpha, CoefficientValues& out) const override { fn_(x, alpha, out); }
    std::string family() const override { return name_; }

private:
    Fn fn_;
    std::string name_;
};

struct ExtinctionSpec {
    int n = 0;
    std::vector<int> extinct;  // 0-based coordinates forming I^c

    // Throws PreconditionError unless I^c is nonempty and a strict subset.
    static ExtinctionSpec make(int n, std::vector<int> extinct);

    bool on_boundary(const Vec& x) const;
    bool contains(int i) const;
    std::vector<int> surviving() const;
    double distance(const Vec& x) const;
};

struct HybridModel {
    int n = 0;
    int m0 = 1;
    std::shared_ptr<const Coefficients> coef;
    Mat sigma;   // correlation matrix
    Mat gamma;   // factor with gamma' gamma = sigma
    Mat Q;
    std::vector<bool> kolmogorov;   // per coordinate
    std::vector<int> extinct_set;   // 0-based
    std::string name;

    static HybridModel make(std::shared_ptr<const Coefficients> coef, Mat sigma, Mat Q,
                            std::vector<bool> kolmogorov, std::vector<int> extinct_set,
                            std::string name = "");

    bool all_kolmogorov() const;
    ExtinctionSpec extinction() const { return ExtinctionSpec::make(n, extinct_set); }
    void evaluate(const Vec& x, int alpha, CoefficientValues& out) const;
};

// ---------------------------------------------------------------------------
// Generator and carre du champ
// ---------------------------------------------------------------------------

struct ScalarFunction {
    std::function<double(const Vec&, int)> value;
    // Optional analytic first and second derivatives in x at fixed regime.
    std::function<void(const Vec&, int, Vec&, Mat&)> derivatives;
};

// Finite-difference gradient and Hessian with step max(1e-5, 1e-5 x_i),
// one-sided where x_i is below its step.
void finite_difference(const ScalarFunction& F, const Vec& x, int alpha, Vec& grad, Mat& hess);

double apply_generator(const HybridModel& model, const ScalarFunction& F, const Vec& x, int alpha);
double carre_du_champ(const HybridModel& model, const ScalarFunction& F, const Vec& x, int alpha);

struct BoundaryInvarianceReport {
    bool pass = true;
    double max_drift = 0.0;
    double max_noise = 0.0;
    int worst_coordinate = -1;
    Vec worst_point;
    int samples = 0;
};

BoundaryInvarianceReport check_boundary_invariance(const HybridModel& model, const ExtinctionSpec& spec,
                                                   int samples, std::uint64_t seed = 1, double box = 50.0);

}  // namespace exlab
