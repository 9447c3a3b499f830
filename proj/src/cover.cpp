#include "spq/cover.hpp"

#include "spq/lp.hpp"

namespace spq {

CardinalityProfile CardinalityProfile::uniform(const Query& q)
{
    CardinalityProfile p;
    p.cc.assign(q.atoms.size(), Rational(1));
    return p;
}

bool CardinalityProfile::is_uniform() const
{
    for (const auto& c : cc)
        if (c != 1) return false;
    return true;
}

FractionalEdgeCover rho_star(const Query& q, VarSet target, const CardinalityProfile& profile)
{
    FractionalEdgeCover out;
    out.weights.assign(q.atoms.size(), Rational(0));
    if (!target) return out;

    VarSet covered = q.vars();
    if (!subset(target, covered))
        throw QueryError("variable " + q.set_name(target & ~covered) + " is covered by no atom");

    // Solve the packing dual: max sum y_A, sum_{A in X_i} y_A <= cc_i. Its dual
    // prices are the cover weights.
    std::vector<int> cols = members(target);
    std::vector<size_t> rows;
    for (size_t i = 0; i < q.atoms.size(); ++i)
        if (q.atoms[i].mask & target) rows.push_back(i);

    PackingLP lp;
    lp.c.assign(cols.size(), Rational(1));
    for (size_t r : rows) {
        std::vector<Rational> row(cols.size());
        for (size_t j = 0; j < cols.size(); ++j)
            if (has(q.atoms[r].mask, cols[j])) row[j] = 1;
        lp.A.push_back(std::move(row));
        lp.b.push_back(profile.at(r));
    }
    LPSolution sol = solve_packing(lp);
    if (!sol.bounded) throw QueryError("fractional edge cover LP unbounded");
    for (size_t k = 0; k < rows.size(); ++k) out.weights[rows[k]] = sol.dual[k];
    out.objective = sol.value;
    return out;
}

bool verify_cover(const Query& q, VarSet target, const FractionalEdgeCover& cover,
                  const CardinalityProfile& profile)
{
    if (cover.weights.size() != q.atoms.size()) return false;
    Rational obj = 0;
    for (size_t i = 0; i < q.atoms.size(); ++i) {
        if (cover.weights[i] < 0) return false;
        obj += cover.weights[i] * profile.at(i);
    }
    if (obj != cover.objective) return false;
    bool ok = true;
    for_each_var(target, [&](int v) {
        Rational s = 0;
        for (size_t i = 0; i < q.atoms.size(); ++i)
            if (has(q.atoms[i].mask, v)) s += cover.weights[i];
        if (s < 1) ok = false;
    });
    return ok;
}

Rational RhoOracle::operator()(VarSet target) const
{
    {
        std::lock_guard<std::mutex> g(mu_);
        auto it = memo_.find(target);
        if (it != memo_.end()) return it->second;
    }
    Rational r = rho_star(q_, target, p_).objective;
    std::lock_guard<std::mutex> g(mu_);
    memo_.emplace(target, r);
    return r;
}

} // namespace spq
