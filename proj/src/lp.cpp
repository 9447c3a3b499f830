#include "spq/lp.hpp"

#include <stdexcept>

namespace spq {

LPSolution solve_packing(const PackingLP& lp)
{
    const size_t m = lp.b.size(), n = lp.c.size();
    for (const auto& bi : lp.b)
        if (bi < 0) throw std::invalid_argument("packing LP needs b >= 0");

    // Columns 0..n-1 are y, n..n+m-1 are slacks; column n+m is the rhs.
    const size_t W = n + m + 1;
    std::vector<std::vector<Rational>> T(m, std::vector<Rational>(W));
    std::vector<size_t> basis(m);
    for (size_t i = 0; i < m; ++i) {
        if (lp.A[i].size() != n) throw std::invalid_argument("ragged LP matrix");
        for (size_t j = 0; j < n; ++j) T[i][j] = lp.A[i][j];
        T[i][n + i] = 1;
        T[i][W - 1] = lp.b[i];
        basis[i] = n + i;
    }
    // Reduced-cost row: z_j - c_j.
    std::vector<Rational> z(W);
    for (size_t j = 0; j < n; ++j) z[j] = -lp.c[j];

    LPSolution sol;
    while (true) {
        // Bland: smallest index with negative reduced cost enters.
        size_t enter = W;
        for (size_t j = 0; j + 1 < W; ++j)
            if (z[j] < 0) {
                enter = j;
                break;
            }
        if (enter == W) break;

        size_t leave = m;
        Rational best;
        for (size_t i = 0; i < m; ++i) {
            if (T[i][enter] <= 0) continue;
            Rational ratio = T[i][W - 1] / T[i][enter];
            if (leave == m || ratio < best || (ratio == best && basis[i] < basis[leave])) {
                best = ratio;
                leave = i;
            }
        }
        if (leave == m) {
            sol.bounded = false;
            return sol;
        }

        Rational piv = T[leave][enter];
        for (auto& x : T[leave]) x /= piv;
        for (size_t i = 0; i < m; ++i) {
            if (i == leave || T[i][enter] == 0) continue;
            Rational f = T[i][enter];
            for (size_t j = 0; j < W; ++j)
                if (T[leave][j] != 0) T[i][j] -= f * T[leave][j];
        }
        if (z[enter] != 0) {
            Rational f = z[enter];
            for (size_t j = 0; j < W; ++j)
                if (T[leave][j] != 0) z[j] -= f * T[leave][j];
        }
        basis[leave] = enter;
        ++sol.pivots;
    }

    sol.value = z[W - 1];
    sol.primal.assign(n, 0);
    for (size_t i = 0; i < m; ++i)
        if (basis[i] < n) sol.primal[basis[i]] = T[i][W - 1];
    sol.dual.assign(m, 0);
    for (size_t i = 0; i < m; ++i) sol.dual[i] = z[n + i];
    return sol;
}

} // namespace spq
