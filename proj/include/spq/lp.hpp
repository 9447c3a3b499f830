#pragma once

#include "spq/rational.hpp"

#include <vector>

namespace spq {

// maximize c.y  subject to  A y <= b, y >= 0, with b >= 0 so the origin is a
// feasible start. Dense tableau, exact arithmetic, Bland's rule.
struct PackingLP {
    std::vector<std::vector<Rational>> A;  // rows x cols
    std::vector<Rational> b;               // rows
    std::vector<Rational> c;               // cols
};

struct LPSolution {
    bool bounded = true;
    Rational value;
    std::vector<Rational> primal;  // y, one per column
    std::vector<Rational> dual;    // one per row; an optimal solution of the covering dual
    int pivots = 0;
};

LPSolution solve_packing(const PackingLP& lp);

} // namespace spq
