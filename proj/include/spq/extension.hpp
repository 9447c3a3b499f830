#pragma once

#include "spq/krelation.hpp"
#include "spq/meter.hpp"
#include "spq/query.hpp"
#include "spq/trie.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace spq {

// Evaluation failures that are not data or plan errors (missing index, wrong
// query shape, recursion guard).
class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One trie per atom, attributes ordered by a rank over variables (tree depth or
// position in a variable order). extend() enumerates the values of a variable
// that are consistent with every atom containing it, given values for all of
// that atom's lower-ranked attributes.
template <class S>
class IndexedQuery {
public:
    using V = typename S::V;

    struct Use {
        int atom;
        size_t pos;   // level of the variable in the atom's trie
        bool last;    // variable is the atom's highest-ranked attribute
    };

    IndexedQuery() = default;

    IndexedQuery(const Query& q, const std::vector<KRelation<S>>& rels, const std::vector<int>& rank,
                 const std::vector<bool>& annotated, ResourceMeter& m)
        : annotated_(annotated)
    {
        if (rels.size() != q.atoms.size()) throw EvalError("relation count does not match the query");
        uses_.assign(q.num_ids(), {});
        for (size_t i = 0; i < q.atoms.size(); ++i) {
            std::vector<int> perm = q.atoms[i].vars;
            for (int v : perm)
                if (v >= static_cast<int>(rank.size()) || rank[v] < 0)
                    throw EvalError("no rank for variable " + q.var_name(v));
            std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) { return rank[a] < rank[b]; });
            tries_.emplace_back(rels[i], perm);
            m.add_index(tries_.back().cells());
            for (size_t d = 0; d < perm.size(); ++d)
                uses_[perm[d]].push_back({static_cast<int>(i), d, d + 1 == perm.size()});
        }
        if (annotated_.empty()) annotated_.assign(q.atoms.size(), true);
    }

    const Trie<S>& trie(size_t atom) const { return tries_.at(atom); }
    const std::vector<Use>& uses(int v) const { return uses_.at(v); }
    size_t num_atoms() const { return tries_.size(); }

    // Calls yield(value, s) for every value of `a` in increasing order, where s
    // is the product of the atoms that end at `a`. Lower-ranked attributes of
    // every atom containing `a` are read from x.
    template <class F>
    void extend(int a, const std::vector<Value>& x, ResourceMeter& m, F&& yield) const
    {
        const auto& us = uses_[a];
        if (us.empty()) throw EvalError("variable occurs in no atom");
        std::vector<typename Trie<S>::Range> rs(us.size());
        size_t drv = 0;
        for (size_t k = 0; k < us.size(); ++k) {
            const auto& t = tries_[us[k].atom];
            typename Trie<S>::Range r = t.root();
            for (size_t d = 0; d < us[k].pos; ++d) {
                m.step();
                r = t.child(r, d, x[t.perm()[d]]);
                if (r.empty()) return;
            }
            rs[k] = r;
            if (r.size() < rs[drv].size()) drv = k;
        }
        const auto& dt = tries_[us[drv].atom];
        size_t dpos = us[drv].pos;
        auto r0 = rs[drv];
        for (size_t i = r0.lo; i < r0.hi;) {
            m.step();
            size_t next = dt.next_distinct(r0, dpos, i);
            Value v = dt.key(dpos, i);
            V s = S::one();
            bool ok = true;
            for (size_t k = 0; k < us.size() && ok; ++k) {
                const auto& t = tries_[us[k].atom];
                typename Trie<S>::Range c;
                if (k == drv) {
                    c = {i, next};
                } else {
                    m.step();
                    c = t.child(rs[k], us[k].pos, v);
                    if (c.empty()) ok = false;
                }
                if (ok && us[k].last && annotated_[us[k].atom]) {
                    m.step();
                    s = S::times(s, t.value(c.lo));
                }
            }
            if (ok && !S::is_zero(s)) yield(v, s);
            i = next;
        }
    }

    // Checks that `bound` supplies exactly the lower-ranked attributes of every
    // atom containing a, i.e. that the indexes support this extension.
    void require_index(const Query& q, int a, VarSet bound) const
    {
        if (has(bound, a)) throw EvalError("extension variable is already bound");
        for (const auto& u : uses_.at(a)) {
            const auto& perm = tries_[u.atom].perm();
            VarSet before = 0;
            for (size_t d = 0; d < u.pos; ++d) before |= bit(perm[d]);
            if (before != (q.atoms[u.atom].mask & bound))
                throw EvalError("missing index: atom " + q.atoms[u.atom].name + " has no permutation placing the bound attributes before " +
                                q.var_name(a));
        }
    }

private:
    std::vector<Trie<S>> tries_;
    std::vector<std::vector<Use>> uses_;
    std::vector<bool> annotated_;
};

// Materialised form of the extension of `a` given values for `bound`.
template <class S>
std::vector<std::pair<Value, typename S::V>> extension_values(const Query& q, const IndexedQuery<S>& iq, int a,
                                                              VarSet bound, const std::vector<Value>& x,
                                                              ResourceMeter& m)
{
    iq.require_index(q, a, bound);
    std::vector<std::pair<Value, typename S::V>> out;
    iq.extend(a, x, m, [&](Value v, typename S::V s) { out.emplace_back(v, s); });
    return out;
}

} // namespace spq
