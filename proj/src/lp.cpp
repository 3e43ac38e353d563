#include "exlab/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace exlab {

namespace {

constexpr double kEps = 1e-11;

// Slack form: basic variables B, nonbasic N, tableau rows
//   x_B[i] = b[i] - sum_j A(i, j) x_N[j]
// objective z = v + sum_j c[j] x_N[j].
struct Tableau {
    Mat A;
    Vec b, c;
    double v = 0.0;
    std::vector<int> N, B;

    void pivot(int l, int e) {
        const int m = static_cast<int>(B.size()), n = static_cast<int>(N.size());
        const double piv = A(l, e);
        b(l) /= piv;
        for (int j = 0; j < n; ++j)
            if (j != e) A(l, j) /= piv;
        A(l, e) = 1.0 / piv;
        for (int i = 0; i < m; ++i) {
            if (i == l || A(i, e) == 0.0) continue;
            const double f = A(i, e);
            b(i) -= f * b(l);
            for (int j = 0; j < n; ++j)
                if (j != e) A(i, j) -= f * A(l, j);
            A(i, e) = -f * A(l, e);
        }
        const double f = c(e);
        v += f * b(l);
        for (int j = 0; j < n; ++j)
            if (j != e) c(j) -= f * A(l, j);
        c(e) = -f * A(l, e);
        std::swap(B[l], N[e]);
    }

    // Bland's rule: smallest variable index enters and leaves.
    void optimize() {
        for (;;) {
            int e = -1;
            for (int j = 0; j < static_cast<int>(N.size()); ++j)
                if (c(j) > kEps && (e < 0 || N[j] < N[e])) e = j;
            if (e < 0) return;
            int l = -1;
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < static_cast<int>(B.size()); ++i) {
                if (A(i, e) > kEps) {
                    double ratio = b(i) / A(i, e);
                    if (ratio < best - kEps || (std::abs(ratio - best) <= kEps && l >= 0 && B[i] < B[l])) {
                        best = ratio;
                        l = i;
                    }
                }
            }
            if (l < 0) throw UnboundedError("linear program is unbounded");
            pivot(l, e);
        }
    }
};

}  // namespace

LpResult solve_lp(const Mat& A, const Vec& b, const Vec& c) {
    const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
    if (b.size() != m || c.size() != n) throw DimensionError("linear program has inconsistent sizes");

    Tableau t;
    int k = 0;
    for (int i = 1; i < m; ++i)
        if (b(i) < b(k)) k = i;

    if (m == 0 || b(k) >= 0.0) {
        t.A = A;
        t.b = b;
        t.c = c;
        for (int j = 0; j < n; ++j) t.N.push_back(j);
        for (int i = 0; i < m; ++i) t.B.push_back(n + i);
    } else {
        // phase one: maximize -x0 over the auxiliary program with column x0 (index n + m)
        t.A.resize(m, n + 1);
        t.A.leftCols(n) = A;
        t.A.col(n).setConstant(-1.0);
        t.b = b;
        t.c = Vec::Zero(n + 1);
        t.c(n) = -1.0;
        for (int j = 0; j < n; ++j) t.N.push_back(j);
        t.N.push_back(n + m);
        for (int i = 0; i < m; ++i) t.B.push_back(n + i);
        t.pivot(k, n);
        t.optimize();
        if (t.v < -1e-9) throw InfeasibleError("linear program is infeasible");
        // drive x0 out of the basis if it is still there
        for (int i = 0; i < m; ++i) {
            if (t.B[i] != n + m) continue;
            int e = -1;
            for (int j = 0; j < static_cast<int>(t.N.size()); ++j)
                if (std::abs(t.A(i, j)) > kEps) {
                    e = j;
                    break;
                }
            if (e >= 0) t.pivot(i, e);
        }
        int x0col = -1;
        for (int j = 0; j < static_cast<int>(t.N.size()); ++j)
            if (t.N[j] == n + m) x0col = j;
        if (x0col < 0) throw InfeasibleError("linear program is degenerate beyond repair");
        // remove the auxiliary column and restore the original objective
        Mat A2(m, n);
        std::vector<int> N2;
        for (int j = 0, jj = 0; j < n + 1; ++j) {
            if (j == x0col) continue;
            A2.col(jj++) = t.A.col(j);
            N2.push_back(t.N[j]);
        }
        t.A = A2;
        t.N = N2;
        t.c = Vec::Zero(n);
        t.v = 0.0;
        for (int j = 0; j < n; ++j) {
            // original objective in terms of the current nonbasic variables
            int var = t.N[j];
            if (var < n) t.c(j) += c(var);
        }
        for (int i = 0; i < m; ++i) {
            int var = t.B[i];
            if (var >= n) continue;
            t.v += c(var) * t.b(i);
            for (int j = 0; j < n; ++j) t.c(j) -= c(var) * t.A(i, j);
        }
    }

    t.optimize();
    LpResult r;
    r.x = Vec::Zero(n);
    for (int i = 0; i < m; ++i)
        if (t.B[i] < n) r.x(t.B[i]) = t.b(i);
    r.objective = c.dot(r.x);
    return r;
}

}  // namespace exlab
