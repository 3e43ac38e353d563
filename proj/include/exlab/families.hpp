#pragma once

#include "exlab/config.hpp"
#include "exlab/model.hpp"

#include <map>
#include <string>
#include <vector>

namespace exlab {

// Named numeric parameters with optional per-regime overrides:
// `r1.alpha2` takes precedence over `r1` in regime 2.
class ParamSet {
public:
    void set(const std::string& key, double value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) > 0; }
    double get(const std::string& key, int alpha) const;  // alpha 0-based
    double get_or(const std::string& key, int alpha, double fallback) const;
    const std::map<std::string, double>& values() const { return values_; }

private:
    std::map<std::string, double> values_;
};

// ---------------------------------------------------------------------------
// Regime-switching Kolmogorov system with f_i = r_i(a) - sum_j A_ij(a) x_j
// and g_i = g_i(a).
// ---------------------------------------------------------------------------

struct SwitchingParams {
    int n = 0;
    std::vector<Vec> r;   // per regime
    std::vector<Mat> A;   // per regime
    std::vector<Vec> g;   // per regime
};

class KolmogorovSwitching : public Coefficients {
public:
    explicit KolmogorovSwitching(SwitchingParams p) : p_(std::move(p)) {}
    void evaluate(const Vec& x, int alpha, CoefficientValues& out) const override;
    std::string family() const override { return "kolmogorov_switching"; }
    const SwitchingParams& params() const { return p_; }

private:
    SwitchingParams p_;
};

HybridModel make_kolmogorov_switching(const SwitchingParams& p, const Mat& sigma, const Mat& Q,
                                      std::vector<int> extinct, std::string name = "kolmogorov_switching");

// ---------------------------------------------------------------------------
// Two predators, one prey
//   dX1 = X1(r1 - a11 X1 - a12 X2 - a13 X3)dt + s1 X1 dE1
//   dX2 = X2(-r2 + a21 X1 - a23 X3)dt + s2 X2 dE2
//   dX3 = X3(-r3 + a31 X1 - a32 X2)dt + s3 X3 dE3
// ---------------------------------------------------------------------------

struct LvParams {
    double r1 = 0, r2 = 0, r3 = 0;
    double a11 = 0, a12 = 0, a13 = 0;
    double a21 = 0, a23 = 0;
    double a31 = 0, a32 = 0;
    double sigma1 = 0, sigma2 = 0, sigma3 = 0;
};

SwitchingParams lv_switching(const LvParams& p);
HybridModel make_lotka_volterra(const LvParams& p, std::vector<int> extinct = {2});

// b0 = min(a12/a21, a13/a31) / 2 and r0 = b0 min(r2, r3).
double lv_b0(const LvParams& p);
double lv_r0(const LvParams& p);

// ---------------------------------------------------------------------------
// SIRS with switching and mass-action incidence F(s, i, a) = beta(a) s
// ---------------------------------------------------------------------------

struct SirsRegime {
    double b = 0, beta = 0, c1 = 0, c2 = 0, c3 = 0, c4 = 0, gamma = 0;
    double sigma1 = 0, sigma2 = 0, sigma3 = 0;
};

struct SirsParams {
    std::vector<SirsRegime> regimes;
    Mat Q;
    double incidence(double s, double i, int alpha) const;
};

class SirsCoefficients : public Coefficients {
public:
    explicit SirsCoefficients(SirsParams p) : p_(std::move(p)) {}
    void evaluate(const Vec& x, int alpha, CoefficientValues& out) const override;
    std::string family() const override { return "sirs"; }
    const SirsParams& params() const { return p_; }

private:
    SirsParams p_;
};

HybridModel make_sirs(const SirsParams& p);

// ---------------------------------------------------------------------------
// Model definition files
// ---------------------------------------------------------------------------

struct LoadedModel {
    HybridModel model;
    std::string family;
    ParamSet params;
};

LoadedModel load_model(const KeyValueFile& file);
LvParams lv_params_from(const ParamSet& ps);
SirsParams sirs_params_from(const ParamSet& ps, const Mat& Q);

}  // namespace exlab
