#pragma once

#include "spq/plan.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace spq {

class SearchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class SearchClass { GJ, PT, PTC, PTCR, RPT, TD_GJ, TD_PT, TD_PTCR };

std::string class_name(SearchClass c);  // "td[pt]" style
SearchClass parse_class(const std::string& s);

// Largest query the searches accept; SPQ_VAR_CAP overrides the default of 12.
int search_var_cap();

struct SearchBudget {
    std::uint64_t max_plans = 0;  // candidate evaluations; 0 = unlimited
    double max_seconds = 0;       // 0 = unlimited
    std::optional<Rational> space_cap;
    std::optional<Rational> time_cap;  // drop plans with t above this
    int rpt_depth = 2;
    int jobs = 1;
};

struct FrontierPoint {
    Exponent e;
    Plan witness;
};

struct Frontier {
    std::vector<FrontierPoint> points;  // increasing s, decreasing t
    bool exhaustive = true;
    std::uint64_t examined = 0;

    // Keeps (e, p) unless an existing point weakly dominates e; evicts points
    // that e strictly dominates. The first plan found for a point stays.
    bool offer(const Exponent& e, const Plan& p);
    void merge(const Frontier& o);
    bool is_antichain() const;
    bool covers(const Exponent& e) const;  // some point weakly dominates e
    bool contains(const Exponent& e) const;
};

// Plan streams. The callback returns false to stop; the functions return
// false when stopped early. Each plan is produced once.
bool enumerate_pt(const Query& q, const std::function<bool(const PseudoTree&)>& f);
bool enumerate_ptc(const Query& q, const std::function<bool(const Plan&)>& f);
bool enumerate_ptcr(const Query& q, const std::function<bool(const Plan&)>& f);
// PTCR plans whose tree starts with a chain over `inputs` (any order).
bool enumerate_ptcr_inputs(const Query& q, VarSet inputs, const std::function<bool(const Plan&)>& f);
// Decompositions from elimination orders, one per distinct set of maximal
// bags. Every bag gets a gj inner plan.
bool enumerate_td(const Query& q, const std::function<bool(const Plan&)>& f);
bool enumerate_rpt(const Query& q, int depth, const std::function<bool(const Plan&)>& f);
bool enumerate_rpt_inputs(const Query& q, VarSet inputs, int depth, const std::function<bool(const Plan&)>& f);
// Every plan of a class, td classes with every combination of inner plans.
bool enumerate_class(const Query& q, SearchClass c, int rpt_depth, const std::function<bool(const Plan&)>& f);

// Frontier by brute force over enumerate_class.
Frontier frontier_unpruned(const Query& q, SearchClass c, const SearchBudget& b = {});

// Frontier by a memoised search over (subtree variables, relevant ancestors),
// with dominance pruning and the budget's caps.
Frontier pareto_frontier(const Query& q, SearchClass c, const SearchBudget& b = {});

struct BestTime {
    bool feasible = false;
    Exponent e;
    Plan witness;
    bool exhaustive = true;
    std::uint64_t examined = 0;
};

// Least t over plans with s <= s_budget.
BestTime best_time_given_space(const Query& q, SearchClass c, const Rational& s_budget, SearchBudget b = {});

} // namespace spq
