#include "exlab/model.hpp"
#include "exlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

namespace exlab {

namespace {

bool reaches_all(const Mat& Q, bool transpose) {
    const int m = static_cast<int>(Q.rows());
    std::vector<bool> seen(m, false);
    std::queue<int> todo;
    todo.push(0);
    seen[0] = true;
    while (!todo.empty()) {
        int i = todo.front();
        todo.pop();
        for (int j = 0; j < m; ++j) {
            double q = transpose ? Q(j, i) : Q(i, j);
            if (j != i && q > 0.0 && !seen[j]) {
                seen[j] = true;
                todo.push(j);
            }
        }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

}  // namespace

GeneratorReport validate_generator(const Mat& Q) {
    if (Q.rows() != Q.cols() || Q.rows() == 0)
        throw DimensionError("generator must be a nonempty square matrix, got " + std::to_string(Q.rows()) +
                             "x" + std::to_string(Q.cols()));
    GeneratorReport rep;
    const int m = static_cast<int>(Q.rows());
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            if (i != j && Q(i, j) < 0.0) {
                rep.negative_offdiag.emplace_back(i + 1, j + 1);
                std::ostringstream os;
                os << "negative off-diagonal q(" << i + 1 << "," << j + 1 << ") = " << Q(i, j);
                rep.messages.push_back(os.str());
            }
        }
        double sum = Q.row(i).sum();
        if (std::abs(sum) > 1e-12) {
            rep.row_sum_violations.emplace_back(i + 1, sum);
            std::ostringstream os;
            os << "row " << i + 1 << " sums to " << sum;
            rep.messages.push_back(os.str());
        }
    }
    if (m > 1 && !(reaches_all(Q, false) && reaches_all(Q, true))) {
        rep.reducible = true;
        rep.messages.push_back("reducible: positive off-diagonals are not strongly connected");
    }
    rep.pass = rep.messages.empty();
    return rep;
}

Vec stationary_distribution(const Mat& Q) {
    GeneratorReport rep = validate_generator(Q);
    if (rep.reducible) throw ReducibleError("stationary distribution is not unique: " + rep.messages.back());
    if (!rep.pass) throw PreconditionError("invalid generator: " + rep.messages.front());
    const int m = static_cast<int>(Q.rows());
    if (m == 1) return Vec::Ones(1);

    Mat A = Q.transpose();
    A.row(m - 1).setOnes();
    Vec b = Vec::Zero(m);
    b(m - 1) = 1.0;
    Eigen::FullPivLU<Mat> lu(A);
    Vec nu = lu.solve(b);
    // one step of iterative refinement
    nu += lu.solve(b - A * nu);
    double resid = (nu.transpose() * Q).cwiseAbs().maxCoeff();
    if (!(resid <= 1e-10) || (nu.array() <= 0.0).any())
        throw ReducibleError("stationary system is singular (residual " + std::to_string(resid) + ")");
    return nu;
}

Mat cholesky(const Mat& sigma) {
    if (sigma.rows() != sigma.cols()) throw DimensionError("correlation matrix must be square");
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw NotPsdError("correlation matrix is not symmetric");
    Mat sym = 0.5 * (sigma + sigma.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    double lmin = es.eigenvalues().minCoeff();
    if (lmin < -1e-10) {
        std::ostringstream os;
        os << "correlation matrix not positive semidefinite (eigenvalue " << lmin << ")";
        throw NotPsdError(os.str());
    }
    double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
    if (lmin > 1e-12 * std::max(1.0, lmax)) {
        Eigen::LLT<Mat> llt(sym);
        if (llt.info() == Eigen::Success) return llt.matrixU();
    }
    Vec root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return root.asDiagonal() * es.eigenvectors().transpose();
}

// ---------------------------------------------------------------------------

ExtinctionSpec ExtinctionSpec::make(int n, std::vector<int> extinct) {
    std::sort(extinct.begin(), extinct.end());
    extinct.erase(std::unique(extinct.begin(), extinct.end()), extinct.end());
    if (extinct.empty()) throw PreconditionError("extinction set must be nonempty");
    if (static_cast<int>(extinct.size()) >= n) throw PreconditionError("extinction set must be a strict subset");
    for (int i : extinct)
        if (i < 0 || i >= n) throw PreconditionError("extinction coordinate out of range: " + std::to_string(i + 1));
    ExtinctionSpec s;
    s.n = n;
    s.extinct = std::move(extinct);
    return s;
}

bool ExtinctionSpec::on_boundary(const Vec& x) const {
    for (int i : extinct)
        if (x(i) != 0.0) return false;
    return true;
}

bool ExtinctionSpec::contains(int i) const {
    return std::find(extinct.begin(), extinct.end(), i) != extinct.end();
}

std::vector<int> ExtinctionSpec::surviving() const {
    std::vector<int> out;
    for (int i = 0; i < n; ++i)
        if (!contains(i)) out.push_back(i);
    return out;
}

double ExtinctionSpec::distance(const Vec& x) const {
    double d = 0.0;
    for (int i : extinct) d += x(i) * x(i);
    return std::sqrt(d);
}

HybridModel HybridModel::make(std::shared_ptr<const Coefficients> coef, Mat sigma, Mat Q,
                              std::vector<bool> kolmogorov, std::vector<int> extinct_set, std::string name) {
    HybridModel m;
    m.n = static_cast<int>(sigma.rows());
    m.m0 = static_cast<int>(Q.rows());
    if (!coef) throw PreconditionError("model needs coefficient functions");
    if (static_cast<int>(kolmogorov.size()) != m.n) throw DimensionError("kolmogorov flags must have length n");
    GeneratorReport rep = validate_generator(Q);
    if (!rep.pass) throw PreconditionError("invalid generator: " + rep.messages.front());
    m.gamma = cholesky(sigma);
    m.coef = std::move(coef);
    m.sigma = std::move(sigma);
    m.Q = std::move(Q);
    m.kolmogorov = std::move(kolmogorov);
    if (!extinct_set.empty()) ExtinctionSpec::make(m.n, extinct_set);
    m.extinct_set = std::move(extinct_set);
    m.name = std::move(name);
    return m;
}

bool HybridModel::all_kolmogorov() const {
    return std::all_of(kolmogorov.begin(), kolmogorov.end(), [](bool b) { return b; });
}

void HybridModel::evaluate(const Vec& x, int alpha, CoefficientValues& out) const {
    if (out.mu.size() != n) out.resize(n);
    coef->evaluate(x, alpha, out);
}

// ---------------------------------------------------------------------------

namespace {

struct Stencil {
    double offsets[3];
    double weights[3];  // first-derivative weights, already divided by h
    int size;
};

Stencil first_stencil(double xi, double h) {
    if (xi >= h) return {{-h, h, 0.0}, {-0.5 / h, 0.5 / h, 0.0}, 2};
    return {{0.0, h, 2.0 * h}, {-1.5 / h, 2.0 / h, -0.5 / h}, 3};
}

double checked(const ScalarFunction& F, const Vec& x, int alpha) {
    double v = F.value(x, alpha);
    if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "function not finite at x = (" << x.transpose() << "), regime " << alpha + 1;
        throw EvaluationError(os.str());
    }
    return v;
}

}  // namespace

void finite_difference(const ScalarFunction& F, const Vec& x, int alpha, Vec& grad, Mat& hess) {
    const int n = static_cast<int>(x.size());
    grad.setZero(n);
    hess.setZero(n, n);
    Vec h(n);
    for (int i = 0; i < n; ++i) h(i) = std::max(1e-5, 1e-5 * std::abs(x(i)));
    const double f0 = checked(F, x, alpha);
    Vec y = x;
    for (int i = 0; i < n; ++i) {
        Stencil s = first_stencil(x(i), h(i));
        double g = 0.0;
        for (int a = 0; a < s.size; ++a) {
            y(i) = x(i) + s.offsets[a];
            g += s.weights[a] * (s.offsets[a] == 0.0 ? f0 : checked(F, y, alpha));
        }
        y(i) = x(i);
        grad(i) = g;

        double hi = h(i);
        if (x(i) >= hi) {
            y(i) = x(i) + hi;
            double fp = checked(F, y, alpha);
            y(i) = x(i) - hi;
            double fm = checked(F, y, alpha);
            hess(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
        } else {
            y(i) = x(i) + hi;
            double f1 = checked(F, y, alpha);
            y(i) = x(i) + 2.0 * hi;
            double f2 = checked(F, y, alpha);
            hess(i, i) = (f0 - 2.0 * f1 + f2) / (hi * hi);
        }
        y(i) = x(i);
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            Stencil si = first_stencil(x(i), h(i));
            Stencil sj = first_stencil(x(j), h(j));
            double acc = 0.0;
            for (int a = 0; a < si.size; ++a) {
                for (int b = 0; b < sj.size; ++b) {
                    y(i) = x(i) + si.offsets[a];
                    y(j) = x(j) + sj.offsets[b];
                    acc += si.weights[a] * sj.weights[b] * checked(F, y, alpha);
                }
            }
            y(i) = x(i);
            y(j) = x(j);
            hess(i, j) = hess(j, i) = acc;
        }
    }
}

namespace {

void derivatives(const ScalarFunction& F, const Vec& x, int alpha, Vec& grad, Mat& hess) {
    if (F.derivatives) {
        checked(F, x, alpha);
        F.derivatives(x, alpha, grad, hess);
        if (!grad.allFinite() || !hess.allFinite()) {
            std::ostringstream os;
            os << "derivatives not finite at x = (" << x.transpose() << ")";
            throw EvaluationError(os.str());
        }
    } else {
        finite_difference(F, x, alpha, grad, hess);
    }
}

}  // namespace

double apply_generator(const HybridModel& model, const ScalarFunction& F, const Vec& x, int alpha) {
    Vec grad;
    Mat hess;
    derivatives(F, x, alpha, grad, hess);
    CoefficientValues c;
    model.evaluate(x, alpha, c);
    double out = c.mu.dot(grad);
    const int n = model.n;
    double second = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) second += model.sigma(i, j) * c.s(i) * c.s(j) * hess(i, j);
    out += 0.5 * second;
    for (int j = 0; j < model.m0; ++j) {
        double q = model.Q(alpha, j);
        if (q != 0.0) out += q * checked(F, x, j);
    }
    return out;
}

double carre_du_champ(const HybridModel& model, const ScalarFunction& F, const Vec& x, int alpha) {
    Vec grad;
    Mat hess;
    derivatives(F, x, alpha, grad, hess);
    CoefficientValues c;
    model.evaluate(x, alpha, c);
    Vec v = grad.cwiseProduct(c.s);
    return v.dot(model.sigma * v);
}

BoundaryInvarianceReport check_boundary_invariance(const HybridModel& model, const ExtinctionSpec& spec,
                                                   int samples, std::uint64_t seed, double box) {
    BoundaryInvarianceReport rep;
    rep.samples = samples;
    Rng rng(seed);
    CoefficientValues c;
    Vec x(model.n);
    for (int k = 0; k < samples; ++k) {
        for (int i = 0; i < model.n; ++i) x(i) = spec.contains(i) ? 0.0 : rng.uniform(0.0, box);
        int alpha = static_cast<int>(rng.uniform() * model.m0);
        alpha = std::min(alpha, model.m0 - 1);
        model.evaluate(x, alpha, c);
        for (int i : spec.extinct) {
            double dm = std::abs(c.mu(i));
            double ds = std::abs(c.s(i));
            if (dm > rep.max_drift || ds > rep.max_noise) {
                if (std::max(dm, ds) > std::max(rep.max_drift, rep.max_noise)) {
                    rep.worst_coordinate = i;
                    rep.worst_point = x;
                }
            }
            rep.max_drift = std::max(rep.max_drift, dm);
            rep.max_noise = std::max(rep.max_noise, ds);
        }
    }
    rep.pass = rep.max_drift <= 1e-12 && rep.max_noise <= 1e-12;
    return rep;
}

}  // namespace exlab
