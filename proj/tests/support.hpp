#pragma once

#include "exlab/families.hpp"
#include "exlab/model.hpp"

#include <memory>

namespace exlab::test {

// dx_i = x_i (f_i dt + g_i dE_i) with constant per-capita rates, one regime.
inline HybridModel geometric(const Vec& f, const Vec& g) {
    const int n = static_cast<int>(f.size());
    auto fn = [f, g](const Vec& x, int, CoefficientValues& c) {
        c.f = f;
        c.g = g;
        c.mu = x.cwiseProduct(f);
        c.s = x.cwiseProduct(g);
    };
    return HybridModel::make(std::make_shared<FunctionCoefficients>(fn, "geometric"), Mat::Identity(n, n),
                             Mat::Zero(1, 1), std::vector<bool>(n, true), {});
}

// Two coordinates, no dynamics, switching regimes with generator Q.
inline HybridModel frozen(const Mat& Q) {
    auto fn = [](const Vec& x, int, CoefficientValues& c) {
        c.resize(static_cast<int>(x.size()));
    };
    return HybridModel::make(std::make_shared<FunctionCoefficients>(fn, "frozen"), Mat::Identity(2, 2), Q,
                             {true, true}, {1});
}

inline Mat two_state(double a, double b) {
    Mat Q(2, 2);
    Q << -a, a, b, -b;
    return Q;
}

inline Vec vec(std::initializer_list<double> v) {
    Vec x(static_cast<int>(v.size()));
    int i = 0;
    for (double d : v) x(i++) = d;
    return x;
}

// Parameters of the example in the rate tests: r1 = 2, sigma = 0.2, ...
inline LvParams small_lv() {
    LvParams p;
    p.r1 = 2.0;
    p.sigma1 = 0.2;
    p.a11 = 1.0;
    p.a12 = 1.0;
    p.a13 = 0.5;
    p.a21 = 1.0;
    p.a23 = 0.5;
    p.r2 = 0.5;
    p.sigma2 = 0.2;
    p.r3 = 1.0;
    p.sigma3 = 0.2;
    p.a31 = 0.3;
    p.a32 = 0.1;
    return p;
}

}  // namespace exlab::test
