#pragma once

#include "exlab/types.hpp"

namespace exlab {

struct LpResult {
    Vec x;
    double objective = 0.0;
};

// maximize c'x subject to A x <= b, x >= 0. Dense two-phase simplex with
// Bland's rule. Throws InfeasibleError or UnboundedError.
LpResult solve_lp(const Mat& A, const Vec& b, const Vec& c);

}  // namespace exlab
