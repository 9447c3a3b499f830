#pragma once

#include "spq/query.hpp"
#include "spq/rational.hpp"

#include <mutex>
#include <unordered_map>
#include <vector>

namespace spq {

// Log-scaled cardinality constraints, one per atom. Empty = all ones.
struct CardinalityProfile {
    std::vector<Rational> cc;

    static CardinalityProfile uniform(const Query& q);
    Rational at(size_t atom) const { return cc.empty() ? Rational(1) : cc.at(atom); }
    bool is_uniform() const;
};

struct FractionalEdgeCover {
    std::vector<Rational> weights;  // one per atom
    Rational objective;
};

// Minimum sum of w_i * cc_i over fractional covers of `target`.
// Throws QueryError when some target variable occurs in no atom.
FractionalEdgeCover rho_star(const Query& q, VarSet target,
                             const CardinalityProfile& profile = {});

bool verify_cover(const Query& q, VarSet target, const FractionalEdgeCover& cover,
                  const CardinalityProfile& profile = {});

// Memoised rho* values for one (query, profile) pair. Thread-safe.
class RhoOracle {
public:
    RhoOracle(const Query& q, CardinalityProfile p = {}) : q_(q), p_(std::move(p)) {}
    Rational operator()(VarSet target) const;
    const Query& query() const { return q_; }
    const CardinalityProfile& profile() const { return p_; }

private:
    const Query& q_;
    CardinalityProfile p_;
    mutable std::mutex mu_;
    mutable std::unordered_map<VarSet, Rational> memo_;
};

} // namespace spq
