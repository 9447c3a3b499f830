#pragma once

#include "spq/cover.hpp"
#include "spq/query.hpp"
#include "spq/rational.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace spq {

// Malformed plan documents and plans that do not fit their query.
class PlanError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class PlanKind { GJ, PT, PTC, PTCR, RPT, TD };

std::string kind_name(PlanKind k);
PlanKind parse_kind(const std::string& s);

// Rooted tree over a set of variable ids. Children are kept sorted by name.
struct PseudoTree {
    int root = -1;
    VarSet nodes = 0;
    std::vector<int> parent;                 // by var id; -1 for the root and non-members
    std::vector<std::vector<int>> children;  // by var id

    // parent[v] for v in nodes; exactly one node must have parent -1.
    static PseudoTree from_parents(const Query& q, VarSet nodes, const std::vector<int>& parent);
    static PseudoTree chain(const Query& q, const std::vector<int>& order);
    bool operator==(const PseudoTree& o) const
    {
        return root == o.root && nodes == o.nodes && parent == o.parent;
    }
};

// Ancestor/descendant sets and contexts of a pseudo-tree against a query.
struct TreeInfo {
    std::vector<int> depth;
    std::vector<VarSet> anc, desc, con;
    std::vector<int> preorder;

    VarSet ancc(int v) const { return anc[v] | bit(v); }
    VarSet descc(int v) const { return desc[v] | bit(v); }
    // Deepest member of a set lying on one branch (min(S) in the usual notation).
    int lowest_of(VarSet s) const;
    // Members of s ordered from the root downwards.
    std::vector<int> top_down(VarSet s) const;
};

TreeInfo analyze_tree(const Query& q, const PseudoTree& t);

// con(A) for one node; the same value TreeInfo stores.
VarSet context(const Query& q, const PseudoTree& t, int a);

// Derived sets of a pseudo-tree with resettable caches.
struct PTCRSets {
    std::vector<VarSet> icon, scon, ria, ra;
    VarSet raexc(int v) const { return ria[v] | scon[v]; }
};

PTCRSets ptcr_sets(const PseudoTree& t, const TreeInfo& info, const std::vector<int>& cache_size);

// One of the six plan classes. Fields not used by a kind stay empty.
struct Plan {
    PlanKind kind = PlanKind::PT;

    std::vector<int> order;  // gj

    // pt, ptc, ptcr and the base of rpt. For ptcr/rpt the tree includes the
    // input chain: inputs[0] is the tree root, the real root hangs below inputs.back().
    PseudoTree tree;
    VarSet caches = 0;            // ptc
    std::vector<int> cache_size;  // ptcr/rpt, by var id (missing = 0)
    std::vector<int> inputs;      // ptcr/rpt, top first

    std::vector<int> anchors;  // rpt: replaced base nodes
    std::vector<Plan> subs;    // rpt: one sub-plan per anchor; td: inner plan per bag

    std::vector<std::string> bag_ids;  // td
    std::vector<VarSet> bags;
    std::vector<int> bag_parent;  // -1 for the root bag
    std::vector<int> covering;    // by atom index -> bag index

    int cache_at(int v) const { return v < static_cast<int>(cache_size.size()) ? cache_size[v] : 0; }
    int real_root() const;  // first node below the input chain
    int td_root() const;
    bool operator==(const Plan& o) const;
};

Plan make_gj(const std::vector<int>& order);
Plan make_pt(PseudoTree t);
Plan make_ptc(PseudoTree t, VarSet caches);
Plan make_ptcr(PseudoTree t, std::vector<int> cache_size, std::vector<int> inputs = {});

// Sub-query handed to a replacement in a recursive pseudo-tree: the enclosing
// query restricted to descc(A) + ria(A) + scon(A), head scon(A) + outt(A).
struct RptSubQuery {
    Query q;
    VarSet inputs = 0;        // ria(A)
    VarSet descendants = 0;   // descc(A): atoms touching it keep their annotation
    std::vector<int> source;  // atom index in the enclosing query
};

RptSubQuery rpt_subquery(const Query& q, const PseudoTree& t, const TreeInfo& info, const PTCRSets& sets,
                         int anchor);

// Sub-query Q^v of a tree-decomposition bag.
struct BagQuery {
    Query q;
    std::vector<int> source;        // per atom of q: original atom index, or -(w+1) for the message of bag w
    std::vector<bool> annotated;    // per atom of q: carries semiring values (else support only)
    std::vector<int> scalar_children;  // child bags with an empty separator
    VarSet separator = 0;           // Z^v
    CardinalityProfile profile;     // message atoms carry rho*(Z^w)
};

std::vector<BagQuery> td_subqueries(const Query& q, const Plan& td, const CardinalityProfile& profile = {});

// Returns the violated conditions; empty means the plan is valid for q.
std::vector<std::string> validate(const Query& q, const Plan& p);
void require_valid(const Query& q, const Plan& p);  // throws PlanError

struct Exponent {
    Rational s, t;
    bool operator==(const Exponent& o) const { return s == o.s && t == o.t; }
    bool operator!=(const Exponent& o) const { return !(*this == o); }
};

std::string to_string(const Exponent& e);  // "(s, t)"

// Equal; Strict: a strictly dominates b; Weak: b strictly dominates a.
enum class Dominance { Equal, Strict, Weak, Incomparable };
Dominance dominates(const Exponent& a, const Exponent& b);
inline bool weakly_dominates(const Exponent& a, const Exponent& b) { return a.s <= b.s && a.t <= b.t; }

// Exponents of a plan for rho.query() (which must be the plan's query).
// The plan is assumed valid.
Exponent exponents(const RhoOracle& rho, const Plan& p);
Exponent exponents(const Query& q, const Plan& p, const CardinalityProfile& profile = {});

// Class-level helpers used by search.
Exponent exponents_gj(const RhoOracle& rho, const std::vector<int>& order);
Exponent exponents_pt(const RhoOracle& rho, const PseudoTree& t);

} // namespace spq
