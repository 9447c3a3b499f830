#pragma once

#include "spq/eval.hpp"

#include <array>
#include <queue>

namespace spq {

// Variables A1..A4 and the atoms E1(A1,A2), E2(A2,A3), E3(A3,A4), E4(A1,A4)
// of a scalar query whose hypergraph is a 4-cycle.
struct CycleShape {
    std::array<int, 4> var{};
    std::array<int, 4> atom{};
};

inline CycleShape four_cycle_shape(const Query& q)
{
    auto fail = [](const std::string& why) { throw EvalError("not a scalar 4-cycle query: " + why); };
    if (q.head) fail("head is not empty");
    if (q.atoms.size() != 4) fail("needs exactly 4 atoms");
    for (const auto& a : q.atoms)
        if (a.vars.size() != 2) fail("atom " + a.name + " is not binary");
    if (count(q.vars()) != 4) fail("needs exactly 4 variables");
    CycleShape c;
    c.atom[0] = 0;
    c.var[0] = q.atoms[0].vars[0];
    c.var[1] = q.atoms[0].vars[1];
    VarSet used_atoms = 1;
    for (int k = 1; k < 3; ++k) {
        int cur = c.var[k], found = -1;
        for (size_t i = 0; i < 4; ++i)
            if (!(used_atoms >> i & 1) && has(q.atoms[i].mask, cur)) {
                if (found >= 0) fail("variable " + q.var_name(cur) + " occurs in more than two atoms");
                found = static_cast<int>(i);
            }
        if (found < 0) fail("atoms do not close a cycle");
        c.atom[k] = found;
        used_atoms |= VarSet{1} << found;
        int other = q.atoms[found].vars[0] == cur ? q.atoms[found].vars[1] : q.atoms[found].vars[0];
        c.var[k + 1] = other;
    }
    int last = -1;
    for (int i = 0; i < 4; ++i)
        if (!(used_atoms >> i & 1)) last = i;
    c.atom[3] = last;
    if (q.atoms[last].mask != (bit(c.var[0]) | bit(c.var[3]))) fail("atoms do not close a cycle");
    if (mask_of({c.var[0], c.var[1], c.var[2], c.var[3]}) != q.vars()) fail("atoms do not close a cycle");
    return c;
}

namespace detail {

// 0 = both attributes light, 1 = left heavy, 2 = left light and right heavy.
template <class S>
std::array<KRelation<S>, 3> heavy_light_split(const KRelation<S>& e)
{
    using V = typename S::V;
    size_t n = e.size();
    size_t thr = 0;
    while (thr * thr < n) ++thr;
    std::unordered_map<Value, size_t> dl, dr;
    for (size_t i = 0; i < n; ++i) {
        ++dl[e.row(i)[0]];
        ++dr[e.row(i)[1]];
    }
    std::array<std::vector<std::pair<Tuple, V>>, 3> parts;
    for (size_t i = 0; i < n; ++i) {
        int k = dl[e.row(i)[0]] >= thr ? 1 : dr[e.row(i)[1]] >= thr ? 2 : 0;
        parts[k].emplace_back(e.tuple(i), e.value(i));
    }
    std::array<KRelation<S>, 3> out;
    for (int k = 0; k < 3; ++k) out[k] = KRelation<S>::from_rows(e.schema(), std::move(parts[k]));
    return out;
}

// Stream of (a3, sum over a2 of w(a2) * E(a2, a3)) in increasing a3, merged
// from one cursor per a2.
template <class S>
class MergeStream {
public:
    using V = typename S::V;
    struct Cursor {
        size_t pos, end;
        V w;
    };

    MergeStream(const Trie<S>& t, ResourceMeter& m) : t_(t), m_(m) {}

    void add(Value a2, V w)
    {
        m_.step();
        auto r = t_.child(t_.root(), 0, a2);
        if (r.empty()) return;
        cur_.push_back({r.lo, r.hi, w});
        heap_.push({t_.key(1, r.lo), cur_.size() - 1});
        m_.alloc(3);
    }
    bool empty() const { return heap_.empty(); }
    size_t cursors() const { return cur_.size(); }

    std::pair<Value, V> next()
    {
        Value a3 = heap_.top().first;
        V s = S::zero();
        while (!heap_.empty() && heap_.top().first == a3) {
            m_.step();
            size_t k = heap_.top().second;
            heap_.pop();
            Cursor& c = cur_[k];
            s = S::plus(s, S::times(c.w, t_.value(c.pos)));
            if (++c.pos < c.end) heap_.push({t_.key(1, c.pos), k});
        }
        return {a3, s};
    }

    ~MergeStream() { m_.release(static_cast<std::int64_t>(3 * cur_.size())); }

private:
    using Item = std::pair<Value, size_t>;
    const Trie<S>& t_;
    ResourceMeter& m_;
    std::vector<Cursor> cur_;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap_;
};

} // namespace detail

// Scalar 4-cycle by heavy/light partitioning: eight cases with a heavy
// attribute run a pseudo-tree rooted at that attribute; the all-light case
// merges two ordered (A1, A3) streams.
template <class S>
EvalResult<S> eval_four_cycle(const Query& q, const std::vector<KRelation<S>>& rels)
{
    using V = typename S::V;
    check_relations(q, rels);
    CycleShape c = four_cycle_shape(q);
    EvalResult<S> res;
    ResourceMeter& m = res.meter;
    static const int ends[4][2] = {{0, 1}, {1, 2}, {2, 3}, {0, 3}};
    std::array<KRelation<S>, 4> e;
    std::array<std::array<KRelation<S>, 3>, 4> part;
    for (int i = 0; i < 4; ++i) {
        e[i] = rels[c.atom[i]].reordered({c.var[ends[i][0]], c.var[ends[i][1]]});
        part[i] = detail::heavy_light_split(e[i]);
        for (const auto& p : part[i]) m.add_index(p.size() * 3);
    }
    V total = S::zero();
    for (int i = 0; i < 4; ++i)
        if (e[i].empty()) {
            res.output = KRelation<S>::from_rows({}, {});
            return res;
        }

    EvalOptions opts;
    for (int j = 0; j < 4; ++j)
        for (int side = 0; side < 2; ++side) {
            std::vector<KRelation<S>> rs(4);
            for (int i = 0; i < 4; ++i) {
                const KRelation<S>& src = i < j ? part[i][0] : i == j ? part[i][side == 0 ? 1 : 2] : e[i];
                rs[c.atom[i]] = src.reordered(q.atoms[c.atom[i]].vars);
            }
            int h = ends[j][side];
            int o = (h + 2) % 4;
            std::vector<int> parent(q.num_ids(), -1);
            parent[c.var[o]] = c.var[h];
            parent[c.var[(h + 1) % 4]] = c.var[o];
            parent[c.var[(h + 3) % 4]] = c.var[o];
            Plan pt = make_pt(PseudoTree::from_parents(q, q.vars(), parent));
            KRelation<S> r = detail::run_plan(q, rs, std::vector<bool>(4, true), pt, m, opts, 0);
            if (!r.empty()) total = S::plus(total, r.value(0));
        }

    // All attributes light.
    Trie<S> t1(part[0][0], {c.var[0], c.var[1]});
    Trie<S> t2(part[1][0], {c.var[1], c.var[2]});
    Trie<S> t3(part[2][0], {c.var[3], c.var[2]});
    Trie<S> t4(part[3][0], {c.var[0], c.var[3]});
    for (const Trie<S>* t : {&t1, &t2, &t3, &t4}) m.add_index(t->cells());
    auto r1 = t1.root(), r4 = t4.root();
    size_t i1 = r1.lo, i4 = r4.lo;
    while (i1 < r1.hi && i4 < r4.hi) {
        m.step();
        Value a = t1.key(0, i1), b = t4.key(0, i4);
        if (a < b) {
            i1 = t1.seek(r1, 0, i1, b);
            continue;
        }
        if (b < a) {
            i4 = t4.seek(r4, 0, i4, a);
            continue;
        }
        size_t n1 = t1.next_distinct(r1, 0, i1), n4 = t4.next_distinct(r4, 0, i4);
        {
            detail::MergeStream<S> left(t2, m), right(t3, m);
            for (size_t i = i1; i < n1; ++i) left.add(t1.key(1, i), t1.value(i));
            for (size_t i = i4; i < n4; ++i) right.add(t4.key(1, i), t4.value(i));
            if (!left.empty() && !right.empty()) {
                auto l = left.next(), r = right.next();
                for (;;) {
                    m.step();
                    if (l.first < r.first) {
                        if (left.empty()) break;
                        l = left.next();
                    } else if (r.first < l.first) {
                        if (right.empty()) break;
                        r = right.next();
                    } else {
                        total = S::plus(total, S::times(l.second, r.second));
                        if (left.empty() || right.empty()) break;
                        l = left.next();
                        r = right.next();
                    }
                }
            }
        }
        i1 = n1;
        i4 = n4;
    }
    std::vector<std::pair<Tuple, V>> out;
    out.emplace_back(Tuple{}, total);
    res.output = KRelation<S>::from_rows({}, std::move(out));
    return res;
}

template <class S>
EvalResult<S> eval_four_cycle(const Query& q, const Database<S>& db)
{
    return eval_four_cycle(q, relations_for(q, db));
}

} // namespace spq
