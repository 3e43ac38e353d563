#include "exlab/families.hpp"

#include <algorithm>
#include <cmath>

namespace exlab {

double ParamSet::get(const std::string& key, int alpha) const {
    auto it = values_.find(key + ".alpha" + std::to_string(alpha + 1));
    if (it != values_.end()) return it->second;
    it = values_.find(key);
    if (it != values_.end()) return it->second;
    throw ConfigError(key, "missing parameter " + key + " for regime " + std::to_string(alpha + 1));
}

double ParamSet::get_or(const std::string& key, int alpha, double fallback) const {
    if (values_.count(key + ".alpha" + std::to_string(alpha + 1)) || values_.count(key)) return get(key, alpha);
    return fallback;
}

// ---------------------------------------------------------------------------

void KolmogorovSwitching::evaluate(const Vec& x, int alpha, CoefficientValues& out) const {
    out.f.noalias() = p_.r[alpha] - p_.A[alpha] * x;
    out.g = p_.g[alpha];
    out.mu = x.cwiseProduct(out.f);
    out.s = x.cwiseProduct(out.g);
}

HybridModel make_kolmogorov_switching(const SwitchingParams& p, const Mat& sigma, const Mat& Q,
                                      std::vector<int> extinct, std::string name) {
    const int m0 = static_cast<int>(Q.rows());
    if (static_cast<int>(p.r.size()) != m0 || static_cast<int>(p.A.size()) != m0 || static_cast<int>(p.g.size()) != m0)
        throw DimensionError("switching parameters need one entry per regime");
    for (int a = 0; a < m0; ++a) {
        if (p.r[a].size() != p.n || p.A[a].rows() != p.n || p.A[a].cols() != p.n || p.g[a].size() != p.n)
            throw DimensionError("switching parameters have inconsistent sizes");
    }
    return HybridModel::make(std::make_shared<KolmogorovSwitching>(p), sigma, Q, std::vector<bool>(p.n, true),
                             std::move(extinct), std::move(name));
}

SwitchingParams lv_switching(const LvParams& p) {
    SwitchingParams s;
    s.n = 3;
    Vec r(3);
    r << p.r1, -p.r2, -p.r3;
    Mat A(3, 3);
    A << p.a11, p.a12, p.a13,
        -p.a21, 0.0, p.a23,
        -p.a31, p.a32, 0.0;
    Vec g(3);
    g << p.sigma1, p.sigma2, p.sigma3;
    s.r = {r};
    s.A = {A};
    s.g = {g};
    return s;
}

HybridModel make_lotka_volterra(const LvParams& p, std::vector<int> extinct) {
    return make_kolmogorov_switching(lv_switching(p), Mat::Identity(3, 3), Mat::Zero(1, 1), std::move(extinct),
                                     "lotka_volterra");
}

double lv_b0(const LvParams& p) { return 0.5 * std::min(p.a12 / p.a21, p.a13 / p.a31); }

double lv_r0(const LvParams& p) { return lv_b0(p) * std::min(p.r2, p.r3); }

// ---------------------------------------------------------------------------

double SirsParams::incidence(double s, double /*i*/, int alpha) const { return regimes[alpha].beta * s; }

void SirsCoefficients::evaluate(const Vec& x, int alpha, CoefficientValues& out) const {
    const SirsRegime& p = p_.regimes[alpha];
    const double s = x(0), i = x(1), r = x(2);
    const double F = p_.incidence(s, i, alpha);
    out.mu(0) = p.b - i * F - p.c1 * s + p.gamma * r;
    out.s(0) = p.sigma1 * s;
    out.f(1) = F - p.c2;
    out.g(1) = p.sigma2;
    out.mu(1) = i * out.f(1);
    out.s(1) = i * p.sigma2;
    out.mu(2) = p.c4 * i - p.c3 * r;
    out.s(2) = p.sigma3 * r;
    out.f(0) = out.g(0) = out.f(2) = out.g(2) = 0.0;
}

HybridModel make_sirs(const SirsParams& p) {
    if (static_cast<int>(p.regimes.size()) != p.Q.rows())
        throw DimensionError("SIRS parameters need one regime block per generator row");
    return HybridModel::make(std::make_shared<SirsCoefficients>(p), Mat::Identity(3, 3), p.Q, {false, true, false},
                             {1, 2}, "sirs");
}

// ---------------------------------------------------------------------------

LvParams lv_params_from(const ParamSet& ps) {
    LvParams p;
    p.r1 = ps.get("r1", 0);
    p.r2 = ps.get("r2", 0);
    p.r3 = ps.get("r3", 0);
    p.a11 = ps.get("a11", 0);
    p.a12 = ps.get("a12", 0);
    p.a13 = ps.get("a13", 0);
    p.a21 = ps.get("a21", 0);
    p.a23 = ps.get("a23", 0);
    p.a31 = ps.get("a31", 0);
    p.a32 = ps.get("a32", 0);
    p.sigma1 = ps.get("sigma1", 0);
    p.sigma2 = ps.get("sigma2", 0);
    p.sigma3 = ps.get("sigma3", 0);
    return p;
}

SirsParams sirs_params_from(const ParamSet& ps, const Mat& Q) {
    SirsParams p;
    p.Q = Q;
    for (int a = 0; a < Q.rows(); ++a) {
        SirsRegime r;
        r.b = ps.get("b", a);
        r.beta = ps.get("beta", a);
        r.c1 = ps.get("c1", a);
        r.c2 = ps.get("c2", a);
        r.c3 = ps.get("c3", a);
        r.c4 = ps.get("c4", a);
        r.gamma = ps.get_or("gamma", a, 0.0);
        r.sigma1 = ps.get("sigma1", a);
        r.sigma2 = ps.get("sigma2", a);
        r.sigma3 = ps.get("sigma3", a);
        p.regimes.push_back(r);
    }
    return p;
}

namespace {

void absorb(ParamSet& ps, const KeyValueFile::Entries& entries) {
    for (const auto& [k, v] : entries) {
        if (k == "family") continue;
        auto nums = parse_numbers(v);
        if (nums.size() != 1) throw ConfigError(k, "parameter " + k + " must be a single number");
        ps.set(k, nums[0]);
    }
}

}  // namespace

LoadedModel load_model(const KeyValueFile& file) {
    const int n = static_cast<int>(file.number("model", "n"));
    const int m0 = static_cast<int>(file.number("model", "m0", 1.0));
    if (n < 1) throw ConfigError("n", "n must be at least 1");
    if (m0 < 1) throw ConfigError("m0", "m0 must be at least 1");
    std::string form = file.get("model", "form").value_or("kolmogorov");
    if (form != "kolmogorov" && form != "general") throw ConfigError("form", "form must be kolmogorov or general");

    std::string family = file.get("drift", "family").value_or("");
    if (auto nf = file.get("noise", "family"); nf && *nf != family)
        throw ConfigError("family", "[drift] and [noise] name different families");

    ParamSet ps;
    absorb(ps, file.section("drift"));
    absorb(ps, file.section("noise"));

    Mat sigma = Mat::Identity(n, n);
    if (auto v = file.get("sigma", "values")) sigma = parse_matrix(*v, n, "sigma");
    Mat Q = Mat::Zero(m0, m0);
    if (auto v = file.get("Q", "values")) Q = parse_matrix(*v, m0, "Q");
    else if (m0 > 1) throw ConfigError("Q", "[Q] values required when m0 > 1");

    std::vector<int> extinct;
    if (auto v = file.get("extinction", "coordinates"))
        for (double d : parse_numbers(*v)) extinct.push_back(static_cast<int>(d) - 1);

    LoadedModel out;
    out.family = family;
    out.params = ps;
    if (family == "lotka_volterra") {
        if (n != 3) throw ConfigError("n", "lotka_volterra has n = 3");
        if (form != "kolmogorov") throw ConfigError("form", "lotka_volterra is in Kolmogorov form");
        SwitchingParams sp;
        sp.n = 3;
        for (int a = 0; a < m0; ++a) {
            LvParams p;
            p.r1 = ps.get("r1", a);
            p.r2 = ps.get("r2", a);
            p.r3 = ps.get("r3", a);
            p.a11 = ps.get("a11", a);
            p.a12 = ps.get("a12", a);
            p.a13 = ps.get("a13", a);
            p.a21 = ps.get("a21", a);
            p.a23 = ps.get("a23", a);
            p.a31 = ps.get("a31", a);
            p.a32 = ps.get("a32", a);
            p.sigma1 = ps.get("sigma1", a);
            p.sigma2 = ps.get("sigma2", a);
            p.sigma3 = ps.get("sigma3", a);
            SwitchingParams one = lv_switching(p);
            sp.r.push_back(one.r[0]);
            sp.A.push_back(one.A[0]);
            sp.g.push_back(one.g[0]);
        }
        if (extinct.empty()) extinct = {2};
        out.model = make_kolmogorov_switching(sp, sigma, Q, extinct, "lotka_volterra");
    } else if (family == "kolmogorov_switching") {
        if (form != "kolmogorov") throw ConfigError("form", "kolmogorov_switching is in Kolmogorov form");
        SwitchingParams sp;
        sp.n = n;
        for (int a = 0; a < m0; ++a) {
            Vec r(n), g(n);
            Mat A(n, n);
            for (int i = 0; i < n; ++i) {
                r(i) = ps.get("r" + std::to_string(i + 1), a);
                g(i) = ps.get("sigma" + std::to_string(i + 1), a);
                for (int j = 0; j < n; ++j)
                    A(i, j) = ps.get_or("a" + std::to_string(i + 1) + std::to_string(j + 1), a, 0.0);
            }
            sp.r.push_back(r);
            sp.A.push_back(A);
            sp.g.push_back(g);
        }
        out.model = make_kolmogorov_switching(sp, sigma, Q, extinct);
    } else if (family == "sirs") {
        if (n != 3) throw ConfigError("n", "sirs has n = 3");
        if (form != "general") throw ConfigError("form", "sirs is in general form");
        SirsParams sp = sirs_params_from(ps, Q);
        HybridModel m = make_sirs(sp);
        if (!extinct.empty()) {
            ExtinctionSpec::make(n, extinct);
            m.extinct_set = extinct;
        }
        if (file.get("sigma", "values")) m = HybridModel::make(m.coef, sigma, Q, m.kolmogorov, m.extinct_set, "sirs");
        out.model = m;
    } else {
        throw ConfigError("family", "unknown family '" + family + "' (lotka_volterra, sirs, kolmogorov_switching)");
    }
    return out;
}

}  // namespace exlab
