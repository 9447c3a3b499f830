#pragma once

#include "spq/database.hpp"
#include "spq/extension.hpp"
#include "spq/krelation.hpp"
#include "spq/meter.hpp"
#include "spq/plan.hpp"
#include "spq/query.hpp"
#include "spq/rows.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace spq {

struct EvalOptions {
    bool assert_lex = false;  // check that x[ria(A)] never decreases at a node
    int max_depth = 256;      // guard on tree size and replacement nesting
};

template <class S>
struct EvalResult {
    KRelation<S> output;  // schema: head variables sorted by name
    ResourceMeter meter;
};

inline std::vector<int> output_schema(const Query& q) { return sorted_by_name(q, q.head); }

template <class S>
void check_relations(const Query& q, const std::vector<KRelation<S>>& rels)
{
    if (rels.size() != q.atoms.size())
        throw DataError("expected " + std::to_string(q.atoms.size()) + " relations, got " + std::to_string(rels.size()));
    for (size_t i = 0; i < rels.size(); ++i)
        if (rels[i].schema() != q.atoms[i].vars)
            throw DataError("relation " + q.atoms[i].name + " does not match the schema of its atom");
}

// Relations of db in atom order.
template <class S>
std::vector<KRelation<S>> relations_for(const Query& q, const Database<S>& db)
{
    std::vector<KRelation<S>> out;
    for (const auto& a : q.atoms) out.push_back(db.at(a.name));
    check_relations(q, out);
    return out;
}

// Brute force: every assignment over the per-variable active domains.
template <class S>
KRelation<S> eval_oracle(const Query& q, const std::vector<KRelation<S>>& rels)
{
    using V = typename S::V;
    check_relations(q, rels);
    std::vector<int> schema = output_schema(q);
    std::vector<int> vars = members(q.vars());
    std::vector<std::vector<Value>> dom(q.num_ids());
    for (int v : vars) {
        bool first = true;
        std::set<Value> cur;
        for (size_t i = 0; i < q.atoms.size(); ++i) {
            const auto& a = q.atoms[i];
            auto it = std::find(a.vars.begin(), a.vars.end(), v);
            if (it == a.vars.end()) continue;
            size_t c = static_cast<size_t>(it - a.vars.begin());
            std::set<Value> col;
            for (size_t r = 0; r < rels[i].size(); ++r) col.insert(rels[i].row(r)[c]);
            if (first) {
                cur.swap(col);
                first = false;
            } else {
                std::set<Value> both;
                std::set_intersection(cur.begin(), cur.end(), col.begin(), col.end(), std::inserter(both, both.end()));
                cur.swap(both);
            }
        }
        dom[v].assign(cur.begin(), cur.end());
        if (dom[v].empty()) return KRelation<S>(schema);
    }
    std::vector<std::pair<Tuple, V>> out;
    std::vector<size_t> idx(vars.size(), 0);
    std::vector<Value> x(q.num_ids(), 0);
    Tuple t;
    for (;;) {
        for (size_t k = 0; k < vars.size(); ++k) x[vars[k]] = dom[vars[k]][idx[k]];
        V prod = S::one();
        for (size_t i = 0; i < q.atoms.size() && !S::is_zero(prod); ++i) {
            t.clear();
            for (int v : q.atoms[i].vars) t.push_back(x[v]);
            prod = S::times(prod, rels[i].lookup(t));
        }
        if (!S::is_zero(prod)) {
            Tuple h;
            for (int v : schema) h.push_back(x[v]);
            out.emplace_back(std::move(h), prod);
        }
        size_t k = 0;
        while (k < vars.size() && ++idx[k] == dom[vars[k]].size()) idx[k++] = 0;
        if (k == vars.size()) break;
    }
    return KRelation<S>::from_rows(schema, std::move(out));
}

template <class S>
KRelation<S> eval_oracle(const Query& q, const Database<S>& db)
{
    return eval_oracle(q, relations_for(q, db));
}

namespace detail {

template <class S>
KRelation<S> run_plan(const Query& q, const std::vector<KRelation<S>>& rels, const std::vector<bool>& annotated,
                      const Plan& p, ResourceMeter& m, const EvalOptions& o, int depth);

template <class S>
KRelation<S> run_gj(const Query& q, const std::vector<KRelation<S>>& rels, const std::vector<bool>& annotated,
                    const std::vector<int>& order, ResourceMeter& m)
{
    using V = typename S::V;
    std::vector<int> rank(q.num_ids(), -1);
    for (size_t k = 0; k < order.size(); ++k) rank[order[k]] = static_cast<int>(k);
    IndexedQuery<S> iq(q, rels, rank, annotated, m);
    std::vector<int> schema = output_schema(q);
    std::unordered_map<Tuple, V, TupleHash> acc;
    std::vector<Value> x(q.num_ids(), 0);
    Tuple key(schema.size());
    std::function<void(size_t, V)> go = [&](size_t k, V prod) {
        if (k == order.size()) {
            for (size_t c = 0; c < schema.size(); ++c) key[c] = x[schema[c]];
            m.step();
            auto it = acc.find(key);
            if (it == acc.end()) {
                m.alloc(static_cast<std::int64_t>(schema.size() + 1));
                acc.emplace(key, prod);
            } else {
                it->second = S::plus(it->second, prod);
            }
            return;
        }
        int v = order[k];
        iq.extend(v, x, m, [&](Value a, V s) {
            x[v] = a;
            m.step();
            go(k + 1, S::times(prod, s));
        });
    };
    go(0, S::one());
    std::vector<std::pair<Tuple, V>> rows(acc.begin(), acc.end());
    return KRelation<S>::from_rows(schema, std::move(rows));
}

// One level of a pseudo-tree plan: plain (pt), cached (ptc), resettable caches
// (ptcr) and replaced subtrees (rpt). Variable values live in a shared
// assignment indexed by variable id; nested levels reuse it.
template <class S>
class TreeRunner {
public:
    using V = typename S::V;

    TreeRunner(const Query& q, std::vector<KRelation<S>> rels, std::vector<bool> annotated, const Plan& p,
               ResourceMeter& m, const EvalOptions& o, std::vector<Value>& x, int depth)
        : q_(q), rels_(std::move(rels)), ann_(std::move(annotated)), p_(p), m_(m), o_(o), x_(x)
    {
        if (depth > o.max_depth || count(p.tree.nodes) > o.max_depth)
            throw EvalError("plan exceeds the recursion guard");
        info_ = analyze_tree(q, p.tree);
        sets_ = ptcr_sets(p.tree, info_, p.cache_size);
        iq_ = IndexedQuery<S>(q, rels_, info_.depth, ann_, m);
        root_ = p.real_root();

        VarSet skip = mask_of(p.inputs);
        for (int a : p.anchors) skip |= info_.desc[a];
        outt_.assign(q.num_ids(), {});
        for (auto it = info_.preorder.rbegin(); it != info_.preorder.rend(); ++it) {
            int v = *it;
            if (has(q.head, v)) outt_[v].push_back(v);
            for (int c : p.tree.children[v]) outt_[v].insert(outt_[v].end(), outt_[c].begin(), outt_[c].end());
        }

        nodes_.resize(q.num_ids());
        for_each_var(p.tree.nodes & ~skip, [&](int v) {
            auto n = std::make_unique<Node>();
            bool ptcr = p.kind == PlanKind::PTCR || p.kind == PlanKind::RPT;
            if (p.kind == PlanKind::PT) n->mode = Mode::Plain;
            else if (p.kind == PlanKind::PTC) n->mode = has(p.caches, v) ? Mode::Full : Mode::Plain;
            else n->mode = Mode::Reset;
            n->children = p.tree.children[v];
            n->con = info_.top_down(info_.con[v]);
            if (ptcr) {
                n->ria = info_.top_down(sets_.ria[v]);
                n->icon = info_.top_down(sets_.icon[v]);
                n->scon = info_.top_down(sets_.scon[v]);
                bool anchor = std::find(p.anchors.begin(), p.anchors.end(), v) != p.anchors.end();
                if (!n->scon.empty() && !anchor) build_projection(*n, v);
            }
            nodes_[v] = std::move(n);
        });
        for (size_t i = 0; i < p.anchors.size(); ++i) build_anchor(p.anchors[i], p.subs.at(i), depth);
    }

    // Output of the real root under the current input values.
    Rows<S> solve_root()
    {
        Rows<S> r = solve(root_);
        Node& n = *nodes_[root_];
        clear_cache(n);
        n.ria_set = false;
        return r;
    }

    const std::vector<int>& root_order() const { return outt_[root_]; }

    KRelation<S> run()
    {
        Rows<S> r = solve(root_);
        return r.to_relation(outt_[root_]).reordered(output_schema(q_));
    }

private:
    enum class Mode { Plain, Full, Reset, Anchor };

    struct Node {
        Mode mode = Mode::Plain;
        std::vector<int> children, con, ria, icon, scon;
        std::unordered_map<Tuple, Rows<S>, TupleHash> cache;
        std::int64_t cache_cells = 0;
        bool ria_set = false;
        Tuple ria_val;
        // supp(Q[scon | ria]) source: atoms touching scon, projected onto ria + scon
        Query proj_q;
        std::vector<KRelation<S>> proj_rels;
        IndexedQuery<S> proj;
        // replaced subtree
        std::unique_ptr<TreeRunner> sub;
        std::vector<size_t> sub_key, sub_out;
    };

    Tuple gather(const std::vector<int>& vs) const
    {
        Tuple t(vs.size());
        for (size_t i = 0; i < vs.size(); ++i) t[i] = x_[vs[i]];
        return t;
    }

    void build_projection(Node& n, int v)
    {
        VarSet scon = sets_.scon[v], keep = sets_.ria[v] | scon;
        n.proj_q.names = q_.names;
        for (size_t i = 0; i < q_.atoms.size(); ++i) {
            const Atom& a = q_.atoms[i];
            if (!(a.mask & scon)) continue;
            std::vector<int> vs;
            for (int u : a.vars)
                if (has(keep, u)) vs.push_back(u);
            n.proj_q.atoms.push_back({a.name, vs, mask_of(vs)});
            n.proj_rels.push_back(support_projection(rels_[i], keep));
        }
        n.proj = IndexedQuery<S>(n.proj_q, n.proj_rels, info_.depth, std::vector<bool>(n.proj_rels.size(), false), m_);
    }

    void build_anchor(int a, const Plan& sub_plan, int depth)
    {
        Node& n = *nodes_.at(a);
        n.mode = Mode::Anchor;
        n.children.clear();
        RptSubQuery sq = rpt_subquery(q_, p_.tree, info_, sets_, a);
        std::vector<KRelation<S>> rels;
        std::vector<bool> ann;
        for (size_t j = 0; j < sq.q.atoms.size(); ++j) {
            int src = sq.source[j];
            const Atom& sa = sq.q.atoms[j];
            if ((q_.atoms[src].mask & sq.descendants) && ann_[src]) {
                if (sa.vars != q_.atoms[src].vars) throw EvalError("replacement drops attributes of an annotated atom");
                rels.push_back(rels_[src]);
                ann.push_back(true);
            } else {
                rels.push_back(support_projection(rels_[src], sa.mask));
                m_.add_index(rels.back().size() * (rels.back().arity() + 1));
                ann.push_back(false);
            }
        }
        sub_queries_.push_back(std::make_unique<Query>(std::move(sq.q)));
        n.sub = std::make_unique<TreeRunner>(*sub_queries_.back(), std::move(rels), std::move(ann), sub_plan, m_, o_, x_,
                                             depth + 1);
        const auto& order = n.sub->root_order();
        auto col = [&](int v) {
            auto it = std::find(order.begin(), order.end(), v);
            if (it == order.end()) throw EvalError("replacement output lacks variable " + q_.var_name(v));
            return static_cast<size_t>(it - order.begin());
        };
        for (int v : n.scon) n.sub_key.push_back(col(v));
        for (int v : outt_[a]) n.sub_out.push_back(col(v));
    }

    void own(const Rows<S>& r) { m_.alloc(r.footprint()); }
    void drop(Rows<S>& r)
    {
        m_.release(r.footprint());
        r.cells.clear();
        r.vals.clear();
    }

    void clear_cache(Node& n)
    {
        m_.release(n.cache_cells);
        n.cache_cells = 0;
        n.cache.clear();
    }

    void store(Node& n, Tuple key, Rows<S> r)
    {
        std::int64_t c = static_cast<std::int64_t>(key.size());
        m_.alloc(c);
        n.cache_cells += c + r.footprint();
        n.cache[std::move(key)] = std::move(r);
    }

    Rows<S> lookup(Node& n, int v)
    {
        m_.step();
        auto it = n.cache.find(gather(n.con));
        Rows<S> r = it == n.cache.end() ? Rows<S>(outt_[v].size()) : it->second;
        own(r);
        return r;
    }

    Rows<S> solve(int v)
    {
        Node& n = *nodes_[v];
        switch (n.mode) {
        case Mode::Plain: return compute(v);
        case Mode::Full: {
            m_.step();
            Tuple key = gather(n.con);
            auto it = n.cache.find(key);
            if (it != n.cache.end()) {
                Rows<S> r = it->second;
                own(r);
                return r;
            }
            Rows<S> r = compute(v);
            Rows<S> copy = r;
            own(copy);
            store(n, std::move(key), std::move(r));
            return copy;
        }
        case Mode::Reset:
        case Mode::Anchor: {
            m_.step();
            Tuple cur = gather(n.ria);
            if (!n.ria_set || cur != n.ria_val) {
                if (o_.assert_lex && n.ria_set && cur < n.ria_val)
                    throw EvalError("lexicographic arrival violated at " + q_.var_name(v));
                clear_cache(n);
                n.ria_set = true;
                n.ria_val = std::move(cur);
                if (n.mode == Mode::Reset) fill_cache(n, v);
                else fill_replaced(n, v);
            }
            return lookup(n, v);
        }
        }
        throw std::logic_error("unknown node mode");
    }

    void fill_cache(Node& n, int v)
    {
        Tuple saved = gather(n.scon);
        std::function<void(size_t)> rec = [&](size_t k) {
            if (k == n.scon.size()) {
                Rows<S> r = compute(v);
                store(n, gather(n.con), std::move(r));
                return;
            }
            int u = n.scon[k];
            n.proj.extend(u, x_, m_, [&](Value a, V) {
                x_[u] = a;
                rec(k + 1);
            });
        };
        rec(0);
        for (size_t i = 0; i < n.scon.size(); ++i) x_[n.scon[i]] = saved[i];
    }

    void fill_replaced(Node& n, int v)
    {
        // the sub-plan loops over scon and its own variables in the shared assignment
        std::vector<Value> saved = x_;
        Rows<S> r = n.sub->solve_root();
        x_ = std::move(saved);
        Tuple inst = gather(n.icon);
        std::unordered_map<Tuple, Rows<S>, TupleHash> groups;
        Tuple key = inst, out(n.sub_out.size());
        key.resize(inst.size() + n.sub_key.size());
        for (size_t i = 0; i < r.size(); ++i) {
            m_.step();
            const Value* row = r.row(i);
            for (size_t k = 0; k < n.sub_key.size(); ++k) key[inst.size() + k] = row[n.sub_key[k]];
            for (size_t k = 0; k < n.sub_out.size(); ++k) out[k] = row[n.sub_out[k]];
            auto it = groups.find(key);
            if (it == groups.end()) it = groups.emplace(key, Rows<S>(outt_[v].size())).first;
            it->second.push(out.data(), r.vals[i]);
        }
        drop(r);
        for (auto& [k, g] : groups) {
            g.normalize();
            own(g);
            store(n, k, std::move(g));
        }
    }

    // Body of the plain algorithm: OUT over outt(v) given the current values
    // of v's ancestors.
    Rows<S> compute(int v)
    {
        Node& n = *nodes_[v];
        bool head = has(q_.head, v);
        Rows<S> out(outt_[v].size());
        iq_.extend(v, x_, m_, [&](Value a, V s) {
            x_[v] = a;
            Rows<S> tmp(head ? 1 : 0);
            tmp.push(&a, s);
            own(tmp);
            for (int c : n.children) {
                Rows<S> r = solve(c);
                if (r.empty()) {
                    drop(r);
                    drop(tmp);
                    break;
                }
                Rows<S> t2(tmp.width + r.width);
                for (size_t i = 0; i < tmp.size(); ++i)
                    for (size_t j = 0; j < r.size(); ++j) {
                        m_.step();
                        V w = S::times(tmp.vals[i], r.vals[j]);
                        if (S::is_zero(w)) continue;
                        t2.cells.insert(t2.cells.end(), tmp.row(i), tmp.row(i) + tmp.width);
                        t2.cells.insert(t2.cells.end(), r.row(j), r.row(j) + r.width);
                        t2.vals.push_back(w);
                    }
                own(t2);
                drop(r);
                drop(tmp);
                tmp = std::move(t2);
                if (tmp.empty()) break;
            }
            std::int64_t before = out.footprint();
            for (size_t i = 0; i < tmp.size(); ++i) {
                m_.step();
                out.push(tmp.row(i), tmp.vals[i]);
            }
            m_.alloc(out.footprint() - before);
            drop(tmp);
        });
        std::int64_t before = out.footprint();
        out.normalize();
        m_.release(before - out.footprint());
        return out;
    }

    const Query& q_;
    std::vector<KRelation<S>> rels_;
    std::vector<bool> ann_;
    const Plan& p_;
    ResourceMeter& m_;
    const EvalOptions& o_;
    std::vector<Value>& x_;
    TreeInfo info_;
    PTCRSets sets_;
    IndexedQuery<S> iq_;
    int root_ = -1;
    std::vector<std::vector<int>> outt_;
    std::vector<std::unique_ptr<Node>> nodes_;
    std::vector<std::unique_ptr<Query>> sub_queries_;
};

template <class S>
KRelation<S> run_td(const Query& q, const std::vector<KRelation<S>>& rels, const std::vector<bool>& annotated,
                    const Plan& p, ResourceMeter& m, const EvalOptions& o, int depth)
{
    using V = typename S::V;
    size_t nb = p.bags.size();
    auto subs = td_subqueries(q, p);
    std::vector<std::vector<int>> kids(nb);
    for (size_t w = 0; w < nb; ++w)
        if (p.bag_parent[w] >= 0) kids[p.bag_parent[w]].push_back(static_cast<int>(w));
    std::vector<int> post;
    std::function<void(int)> visit = [&](int v) {
        for (int w : kids[v]) visit(w);
        post.push_back(v);
    };
    visit(p.td_root());
    std::vector<KRelation<S>> msg(nb);
    auto cells = [](const KRelation<S>& r) { return static_cast<std::int64_t>(r.size() * (r.arity() + 1)); };
    for (int v : post) {
        const BagQuery& bq = subs[v];
        std::vector<KRelation<S>> rv;
        std::vector<bool> av;
        for (size_t j = 0; j < bq.q.atoms.size(); ++j) {
            int src = bq.source[j];
            if (src < 0) {
                rv.push_back(msg[-src - 1]);
                av.push_back(true);
            } else if (bq.annotated[j] && annotated[src]) {
                if (bq.q.atoms[j].vars != q.atoms[src].vars) throw EvalError("covering bag drops attributes of an atom");
                rv.push_back(rels[src]);
                av.push_back(true);
            } else {
                rv.push_back(support_projection(rels[src], bq.q.atoms[j].mask));
                m.add_index(rv.back().size() * (rv.back().arity() + 1));
                av.push_back(false);
            }
        }
        KRelation<S> out = run_plan(bq.q, rv, av, p.subs.at(v), m, o, depth + 1);
        if (!bq.scalar_children.empty()) {
            V f = S::one();
            for (int w : bq.scalar_children) {
                m.step();
                f = S::times(f, msg[w].empty() ? S::zero() : msg[w].value(0));
            }
            auto rows = out.rows();
            for (auto& r : rows) {
                m.step();
                r.second = S::times(r.second, f);
            }
            out = KRelation<S>::from_rows(out.schema(), std::move(rows));
        }
        for (int w : kids[v]) {
            m.release(cells(msg[w]));
            msg[w] = KRelation<S>();
        }
        m.alloc(cells(out));
        msg[v] = std::move(out);
    }
    return msg[p.td_root()];
}

template <class S>
KRelation<S> run_plan(const Query& q, const std::vector<KRelation<S>>& rels, const std::vector<bool>& annotated,
                      const Plan& p, ResourceMeter& m, const EvalOptions& o, int depth)
{
    if (depth > o.max_depth) throw EvalError("plan nesting exceeds the recursion guard");
    switch (p.kind) {
    case PlanKind::GJ: return run_gj(q, rels, annotated, p.order, m);
    case PlanKind::TD: return run_td(q, rels, annotated, p, m, o, depth);
    default: {
        if (!p.inputs.empty()) throw EvalError("top-level plan cannot take input variables");
        std::vector<Value> x(q.num_ids(), 0);
        TreeRunner<S> runner(q, rels, annotated, p, m, o, x, depth);
        return runner.run();
    }
    }
}

} // namespace detail

// Evaluates any plan class; throws PlanError when the plan does not fit q.
template <class S>
EvalResult<S> evaluate(const Query& q, const std::vector<KRelation<S>>& rels, const Plan& p,
                       const EvalOptions& o = {})
{
    check_relations(q, rels);
    require_valid(q, p);
    EvalResult<S> res;
    res.output = detail::run_plan(q, rels, std::vector<bool>(rels.size(), true), p, res.meter, o, 0);
    return res;
}

template <class S>
EvalResult<S> evaluate(const Query& q, const Database<S>& db, const Plan& p, const EvalOptions& o = {})
{
    return evaluate(q, relations_for(q, db), p, o);
}

} // namespace spq
