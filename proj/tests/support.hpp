#pragma once
// Shared generators and independent oracles for the test binaries.

#include "spq/eval.hpp"
#include "spq/four_cycle.hpp"
#include "spq/plan_io.hpp"
#include "spq/search.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#ifndef SPQ_EXAMPLES
#define SPQ_EXAMPLES "examples/spq"
#endif

namespace spqtest {

using namespace spq;
using Rng = std::mt19937_64;

inline std::string fixture(const std::string& name) { return std::string(SPQ_EXAMPLES) + "/" + name; }
inline Query fixture_query(const std::string& name) { return load_query(fixture(name + ".spq")); }

inline int uniform(Rng& g, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g); }

// Random query text over variables A.., relations R1.., binary-heavy arities.
// Every variable occurs in some atom.
inline std::string random_query_text(Rng& g, int max_vars = 6, int max_atoms = 7)
{
    int n = uniform(g, 1, max_vars);
    int m = uniform(g, 1, max_atoms);
    std::vector<std::vector<int>> atoms;
    std::vector<int> seen(n, 0);
    for (int i = 0; i < m; ++i) {
        int k = std::min(n, uniform(g, 0, 9) < 6 ? 2 : uniform(g, 1, 3));
        std::vector<int> vs(n);
        std::iota(vs.begin(), vs.end(), 0);
        std::shuffle(vs.begin(), vs.end(), g);
        vs.resize(k);
        for (int v : vs) seen[v] = 1;
        atoms.push_back(vs);
    }
    for (int v = 0; v < n; ++v)
        if (!seen[v]) {
            if (static_cast<int>(atoms.size()) < max_atoms) {
                atoms.push_back({v});
            } else {
                auto& a = atoms[uniform(g, 0, static_cast<int>(atoms.size()) - 1)];
                a.push_back(v);
            }
            seen[v] = 1;
        }
    auto name = [](int v) { return std::string(1, static_cast<char>('A' + v)); };
    std::string head;
    for (int v = 0; v < n; ++v)
        if (uniform(g, 0, 3) == 0) head += (head.empty() ? "" : ", ") + name(v);
    std::string s = "Q(" + head + ") <- ";
    for (size_t i = 0; i < atoms.size(); ++i) {
        std::sort(atoms[i].begin(), atoms[i].end());
        atoms[i].erase(std::unique(atoms[i].begin(), atoms[i].end()), atoms[i].end());
        s += (i ? ", R" : "R") + std::to_string(i + 1) + "(";
        for (size_t j = 0; j < atoms[i].size(); ++j) s += (j ? ", " : "") + name(atoms[i][j]);
        s += ")";
    }
    return s + ".";
}

inline Query random_query(Rng& g, int max_vars = 6, int max_atoms = 7)
{
    return parse_query(random_query_text(g, max_vars, max_atoms));
}

template <class S>
typename S::V random_value(Rng& g)
{
    if constexpr (S::id == SemiringId::Bool) return S::one();
    else if constexpr (S::id == SemiringId::Nat) return static_cast<typename S::V>(uniform(g, 1, 3));
    else if constexpr (S::id == SemiringId::Real) return std::uniform_real_distribution<double>(0.1, 2.0)(g);
    else return static_cast<typename S::V>(uniform(g, 0, 9));
}

// Each tuple of dom^k is present with a per-relation density.
template <class S>
std::vector<KRelation<S>> random_relations(const Query& q, Rng& g, int dom)
{
    std::vector<KRelation<S>> out;
    for (const auto& a : q.atoms) {
        double density = std::uniform_real_distribution<double>(0.2, 0.9)(g);
        size_t k = a.vars.size(), total = 1;
        for (size_t i = 0; i < k; ++i) total *= dom;
        std::vector<std::pair<Tuple, typename S::V>> rows;
        for (size_t code = 0; code < total; ++code) {
            if (std::uniform_real_distribution<double>(0, 1)(g) > density) continue;
            Tuple t(k);
            size_t c = code;
            for (size_t i = 0; i < k; ++i) {
                t[k - 1 - i] = static_cast<Value>(c % dom);
                c /= dom;
            }
            rows.emplace_back(t, random_value<S>(g));
        }
        out.push_back(KRelation<S>::from_rows(a.vars, std::move(rows)));
    }
    return out;
}

inline std::vector<VarSet> components_of(const Query& q, VarSet s)
{
    std::vector<VarSet> out;
    while (s) {
        VarSet comp = bit(lowest(s)), grow = comp;
        while (grow) {
            VarSet next = 0;
            for (const auto& a : q.atoms)
                if (a.mask & grow) next |= a.mask & s;
            grow = next & ~comp;
            comp |= next;
        }
        out.push_back(comp);
        s &= ~comp;
    }
    return out;
}

// Random pseudo-tree built top-down: pick a root in the set, group the
// remaining components at random, recurse per group.
inline void random_subtree(const Query& q, Rng& g, VarSet s, int parent, std::vector<int>& par)
{
    auto ms = members(s);
    int r = ms[uniform(g, 0, static_cast<int>(ms.size()) - 1)];
    par[r] = parent;
    auto comps = components_of(q, s & ~bit(r));
    if (comps.empty()) return;
    int groups = uniform(g, 1, static_cast<int>(comps.size()));
    std::vector<VarSet> grouped(groups, 0);
    for (VarSet c : comps) grouped[uniform(g, 0, groups - 1)] |= c;
    for (VarSet c : grouped)
        if (c) random_subtree(q, g, c, r, par);
}

inline PseudoTree random_pt(const Query& q, Rng& g)
{
    std::vector<int> par(q.num_ids(), -1);
    random_subtree(q, g, q.vars(), -1, par);
    return PseudoTree::from_parents(q, q.vars(), par);
}

inline std::vector<int> random_order(const Query& q, Rng& g)
{
    auto vs = members(q.vars());
    std::shuffle(vs.begin(), vs.end(), g);
    return vs;
}

inline Plan random_ptc(const Query& q, Rng& g)
{
    PseudoTree t = random_pt(q, g);
    VarSet c = 0;
    for (int v : members(q.vars()))
        if (uniform(g, 0, 1)) c |= bit(v);
    return make_ptc(t, c | bit(t.root));
}

inline Plan random_ptcr(const Query& q, Rng& g)
{
    PseudoTree t = random_pt(q, g);
    TreeInfo info = analyze_tree(q, t);
    std::vector<int> cs(q.num_ids(), 0);
    for (int v : members(q.vars())) cs[v] = uniform(g, 0, count(info.con[v]));
    return make_ptcr(t, cs);
}

// Up to k plans picked uniformly from the first `limit` plans of a stream.
inline std::vector<Plan> sample_stream(Rng& g, size_t k, size_t limit,
                                       const std::function<bool(const std::function<bool(const Plan&)>&)>& stream)
{
    std::vector<Plan> res;
    size_t seen = 0;
    stream([&](const Plan& p) {
        ++seen;
        if (res.size() < k) {
            res.push_back(p);
        } else {
            size_t j = std::uniform_int_distribution<size_t>(0, seen - 1)(g);
            if (j < k) res[j] = p;
        }
        return seen < limit;
    });
    return res;
}

// k random valid plans of a class.
inline std::vector<Plan> random_plans(const Query& q, SearchClass c, Rng& g, size_t k)
{
    std::vector<Plan> res;
    switch (c) {
    case SearchClass::GJ:
        for (size_t i = 0; i < k; ++i) res.push_back(make_gj(random_order(q, g)));
        break;
    case SearchClass::PT:
        for (size_t i = 0; i < k; ++i) res.push_back(make_pt(random_pt(q, g)));
        break;
    case SearchClass::PTC:
        for (size_t i = 0; i < k; ++i) res.push_back(random_ptc(q, g));
        break;
    case SearchClass::PTCR:
        for (size_t i = 0; i < k; ++i) res.push_back(random_ptcr(q, g));
        break;
    case SearchClass::RPT:
        // Plans with at least one replacement; ptcr covers the rest.
        res = sample_stream(g, k, 3000, [&](const auto& f) {
            return enumerate_rpt(q, 2, [&](const Plan& p) { return p.anchors.empty() ? true : f(p); });
        });
        break;
    default:
        res = sample_stream(g, k, 3000, [&](const auto& f) { return enumerate_class(q, c, 2, f); });
        break;
    }
    return res;
}

// Exact rho* by enumerating the vertices of {w >= 0, sum_{i: v in X_i} w_i >= 1 (v in Y)}.
inline Rational rho_by_vertices(const Query& q, VarSet target)
{
    if (!target) return 0;
    size_t m = q.atoms.size();
    std::vector<std::vector<Rational>> rows;  // constraint rows over m weights, rhs last
    for (int v : members(target)) {
        std::vector<Rational> r(m + 1, 0);
        for (size_t i = 0; i < m; ++i)
            if (has(q.atoms[i].mask, v)) r[i] = 1;
        r[m] = 1;
        rows.push_back(r);
    }
    for (size_t i = 0; i < m; ++i) {
        std::vector<Rational> r(m + 1, 0);
        r[i] = 1;
        rows.push_back(r);
    }
    size_t nr = rows.size();
    std::optional<Rational> best;
    std::vector<int> pick(nr, 0);
    std::fill(pick.begin(), pick.begin() + m, 1);
    std::sort(pick.begin(), pick.end());
    do {
        std::vector<std::vector<Rational>> a;
        for (size_t i = 0; i < nr; ++i)
            if (pick[i]) a.push_back(rows[i]);
        // Gaussian elimination; skip singular systems.
        bool singular = false;
        for (size_t col = 0; col < m && !singular; ++col) {
            size_t p = col;
            while (p < m && a[p][col] == 0) ++p;
            if (p == m) {
                singular = true;
                break;
            }
            std::swap(a[p], a[col]);
            for (size_t r = 0; r < m; ++r) {
                if (r == col || a[r][col] == 0) continue;
                Rational f = a[r][col] / a[col][col];
                for (size_t k = col; k <= m; ++k) a[r][k] -= f * a[col][k];
            }
        }
        if (singular) continue;
        std::vector<Rational> w(m);
        for (size_t i = 0; i < m; ++i) w[i] = a[i][m] / a[i][i];
        bool feasible = true;
        for (size_t i = 0; i < nr && feasible; ++i) {
            Rational lhs = 0;
            for (size_t j = 0; j < m; ++j) lhs += rows[i][j] * w[j];
            if (lhs < rows[i][m]) feasible = false;
        }
        if (!feasible) continue;
        Rational obj = 0;
        for (const auto& x : w) obj += x;
        if (!best || obj < *best) best = obj;
    } while (std::next_permutation(pick.begin(), pick.end()));
    if (!best) throw std::logic_error("no vertex found");
    return *best;
}

// Number of rooted trees on var(Q) in which every atom lies on one branch,
// by trying every parent assignment.
inline size_t count_pseudo_trees(const Query& q)
{
    auto vs = members(q.vars());
    size_t n = vs.size();
    std::vector<int> choice(n, 0);  // 0 = root, i+1 = parent vs[i]
    size_t total = 0;
    while (true) {
        int roots = 0;
        bool ok = true;
        std::vector<VarSet> anc(n, 0);
        for (size_t i = 0; i < n && ok; ++i) {
            if (choice[i] == 0) ++roots;
            if (choice[i] == static_cast<int>(i) + 1) ok = false;
        }
        if (ok && roots == 1) {
            for (size_t i = 0; i < n && ok; ++i) {
                size_t cur = i, steps = 0;
                while (choice[cur] != 0 && ok) {
                    cur = choice[cur] - 1;
                    anc[i] |= bit(vs[cur]);
                    if (++steps > n) ok = false;
                }
            }
            for (const auto& a : q.atoms) {
                if (!ok) break;
                auto am = members(a.mask);
                for (int x : am)
                    for (int y : am) {
                        if (x == y) continue;
                        size_t ix = std::find(vs.begin(), vs.end(), x) - vs.begin();
                        size_t iy = std::find(vs.begin(), vs.end(), y) - vs.begin();
                        if (!has(anc[ix], y) && !has(anc[iy], x)) ok = false;
                    }
            }
            if (ok) ++total;
        }
        size_t i = 0;
        while (i < n && ++choice[i] > static_cast<int>(n)) choice[i++] = 0;
        if (i == n) break;
    }
    return total;
}

// A one-bag decomposition of var(Q) with the given inner plan.
inline Plan single_bag_td(const Query& q, const Plan& inner)
{
    Plan p;
    p.kind = PlanKind::TD;
    std::string id = q.set_name(q.vars());
    std::transform(id.begin(), id.end(), id.begin(), [](unsigned char ch) { return std::tolower(ch); });
    p.bag_ids = {id};
    p.bags = {q.vars()};
    p.bag_parent = {-1};
    p.covering.assign(q.atoms.size(), 0);
    p.subs = {inner};
    return p;
}

inline const std::vector<SearchClass>& all_classes()
{
    static const std::vector<SearchClass> cs = {SearchClass::GJ,    SearchClass::PT,    SearchClass::PTC,
                                                SearchClass::PTCR,  SearchClass::RPT,   SearchClass::TD_GJ,
                                                SearchClass::TD_PT, SearchClass::TD_PTCR};
    return cs;
}

} // namespace spqtest
