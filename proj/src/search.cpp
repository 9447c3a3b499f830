#include "spq/search.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>

namespace spq {

std::string class_name(SearchClass c)
{
    switch (c) {
    case SearchClass::GJ: return "gj";
    case SearchClass::PT: return "pt";
    case SearchClass::PTC: return "ptc";
    case SearchClass::PTCR: return "ptcr";
    case SearchClass::RPT: return "rpt";
    case SearchClass::TD_GJ: return "td[gj]";
    case SearchClass::TD_PT: return "td[pt]";
    case SearchClass::TD_PTCR: return "td[ptcr]";
    }
    return "?";
}

SearchClass parse_class(const std::string& s)
{
    for (auto c : {SearchClass::GJ, SearchClass::PT, SearchClass::PTC, SearchClass::PTCR, SearchClass::RPT,
                   SearchClass::TD_GJ, SearchClass::TD_PT, SearchClass::TD_PTCR})
        if (class_name(c) == s) return c;
    throw SearchError("unknown plan class '" + s + "' (expected gj, pt, ptc, ptcr, rpt, td[gj], td[pt] or td[ptcr])");
}

int search_var_cap()
{
    const char* env = std::getenv("SPQ_VAR_CAP");
    if (!env || !*env) return 12;
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (*end || v < 1 || v > kMaxVars) throw SearchError(std::string("bad SPQ_VAR_CAP value '") + env + "'");
    return static_cast<int>(v);
}

bool Frontier::offer(const Exponent& e, const Plan& p)
{
    for (const auto& x : points)
        if (weakly_dominates(x.e, e)) return false;
    points.erase(std::remove_if(points.begin(), points.end(),
                                [&](const FrontierPoint& x) { return weakly_dominates(e, x.e); }),
                 points.end());
    auto at = std::lower_bound(points.begin(), points.end(), e.s,
                               [](const FrontierPoint& x, const Rational& s) { return x.e.s < s; });
    points.insert(at, {e, p});
    return true;
}

void Frontier::merge(const Frontier& o)
{
    for (const auto& p : o.points) offer(p.e, p.witness);
    exhaustive = exhaustive && o.exhaustive;
    examined += o.examined;
}

bool Frontier::is_antichain() const
{
    for (size_t i = 0; i < points.size(); ++i)
        for (size_t j = 0; j < points.size(); ++j)
            if (i != j && weakly_dominates(points[i].e, points[j].e)) return false;
    return true;
}

bool Frontier::covers(const Exponent& e) const
{
    for (const auto& p : points)
        if (weakly_dominates(p.e, e)) return true;
    return false;
}

bool Frontier::contains(const Exponent& e) const
{
    for (const auto& p : points)
        if (p.e == e) return true;
    return false;
}

namespace {

using Clock = std::chrono::steady_clock;

Rational max_of(const Rational& a, const Rational& b) { return a < b ? b : a; }
Exponent max_of(const Exponent& a, const Exponent& b) { return {max_of(a.s, b.s), max_of(a.t, b.t)}; }

void check_cap(const Query& q)
{
    int n = count(q.vars());
    int cap = search_var_cap();
    if (n > cap)
        throw SearchError("query has " + std::to_string(n) + " variables, search cap is " + std::to_string(cap) +
                          " (set SPQ_VAR_CAP to raise it)");
}

void check_budget(const SearchBudget& b)
{
    if (b.max_seconds < 0) throw SearchError("time budget must be positive");
    if (b.jobs < 1) throw SearchError("worker count must be positive");
    if (b.rpt_depth < 0 || b.rpt_depth > 3) throw SearchError("rpt depth must be between 0 and 3");
}

// ---------------------------------------------------------------------------
// Structure helpers

std::vector<VarSet> adjacency(const Query& q)
{
    std::vector<VarSet> adj(q.num_ids(), 0);
    for (const auto& a : q.atoms)
        for_each_var(a.mask, [&](int v) { adj[v] |= a.mask; });
    return adj;
}

VarSet closed_nbr(const std::vector<VarSet>& adj, VarSet s)
{
    VarSet n = s;
    for_each_var(s, [&](int v) { n |= adj[v]; });
    return n;
}

std::vector<VarSet> components(const std::vector<VarSet>& adj, VarSet s)
{
    std::vector<VarSet> out;
    while (s) {
        VarSet comp = bit(lowest(s)), frontier = comp;
        while (frontier) {
            VarSet next = 0;
            for_each_var(frontier, [&](int v) { next |= adj[v]; });
            next &= s & ~comp;
            comp |= next;
            frontier = next;
        }
        out.push_back(comp);
        s &= ~comp;
    }
    return out;
}

// Each component of G[t] becomes a child of `par`, rooted at its lowest id.
void canonical_subtree(const std::vector<VarSet>& adj, VarSet t, int par, std::vector<int>& parent)
{
    for (VarSet c : components(adj, t)) {
        int r = lowest(c);
        parent[r] = par;
        canonical_subtree(adj, c & ~bit(r), r, parent);
    }
}

// Calls f(groups) for every set partition of `parts` (restricted growth order).
template <class F>
bool for_each_partition(const std::vector<VarSet>& parts, F&& f)
{
    std::vector<VarSet> blocks;
    std::function<bool(size_t)> rec = [&](size_t i) -> bool {
        if (i == parts.size()) return f(blocks);
        for (size_t b = 0; b < blocks.size(); ++b) {
            blocks[b] |= parts[i];
            bool go = rec(i + 1);
            blocks[b] &= ~parts[i];
            if (!go) return false;
        }
        blocks.push_back(parts[i]);
        bool go = rec(i + 1);
        blocks.pop_back();
        return go;
    };
    return rec(0);
}

// ---------------------------------------------------------------------------
// Budget plumbing

struct BudgetExceeded {};

struct Shared {
    const SearchBudget& b;
    std::atomic<std::uint64_t> examined{0};
    std::atomic<bool> stopped{false};
    Clock::time_point deadline;

    explicit Shared(const SearchBudget& budget) : b(budget)
    {
        if (b.max_seconds > 0)
            deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                          std::chrono::duration<double>(b.max_seconds));
    }
    void tick()
    {
        std::uint64_t n = ++examined;
        if (stopped.load(std::memory_order_relaxed)) throw BudgetExceeded{};
        if (b.max_plans && n > b.max_plans) throw BudgetExceeded{};
        if (b.max_seconds > 0 && (n & 1023) == 0 && Clock::now() > deadline) throw BudgetExceeded{};
    }
};

struct Caps {
    std::optional<Rational> s, t;
    bool s_strict = false;
    std::optional<Rational> cut;  // least t seen above the t cap

    bool s_ok(const Rational& v) const { return !s || (s_strict ? v < *s : v <= *s); }
    bool ok(const Exponent& e) const { return s_ok(e.s) && (!t || e.t <= *t); }
    // ok(), remembering t values that only fail the time cap
    bool admit(const Exponent& e)
    {
        if (ok(e)) return true;
        if (s_ok(e.s) && (!cut || e.t < *cut)) cut = e.t;
        return false;
    }
};

template <class P>
bool pareto_add(std::vector<P>& v, P&& p)
{
    for (const auto& x : v)
        if (weakly_dominates(x.e, p.e)) return false;
    v.erase(std::remove_if(v.begin(), v.end(), [&](const P& x) { return weakly_dominates(p.e, x.e); }), v.end());
    v.push_back(std::move(p));
    return true;
}

struct PlanPt {
    Exponent e;
    std::shared_ptr<const Plan> plan;
};

// ---------------------------------------------------------------------------
// Memoised search over tree-shaped plans.
//
// A subproblem is a set T of variables forming one subtree, plus a key that
// summarises whatever about the ancestors still influences T's exponents:
//   pt:   the full ancestor set
//   ptc:  con(B) + path(B..parent) for the deepest cached ancestor B
//   ptcr: ancestors in N(T) or in ra(parent), top-down with ra flags,
//         truncated after the last member of N(T)
// con of T's root is always N(T) \ T, since every neighbour of a subtree
// outside it is an ancestor.

enum class Mode { PT, PTC, PTCR };

class TreeSearch;

// Replacement sub-problems, shared by every search of one worker.
struct SubInstance {
    Query q;
    std::vector<PlanPt> pts;
};
using SubCache = std::map<std::tuple<VarSet, VarSet, VarSet, int>, std::unique_ptr<SubInstance>>;

using Key = std::vector<std::uint64_t>;

struct FNode;

struct WNode {
    int var = -1;
    int k = 0;
    bool cached = false;
    bool anchor = false;
    VarSet t = 0;  // subtree variables (anchors only)
    std::shared_ptr<const Plan> sub;
    std::shared_ptr<const FNode> kids;
};

struct FNode {
    std::shared_ptr<const WNode> head;
    std::shared_ptr<const FNode> tail;
};

struct TPt {
    Exponent e;
    std::shared_ptr<const WNode> w;
};

struct FPt {
    Exponent e;
    std::shared_ptr<const FNode> list;
};

class TreeSearch {
public:
    TreeSearch(const Query& q, const RhoOracle& rho, Mode mode, int depth, Shared& sh, Caps& caps, SubCache& subs)
        : q_(q), rho_(rho), mode_(mode), depth_(depth), sh_(sh), caps_(caps), subs_(subs), adj_(adjacency(q)),
          vars_(q.vars()), head_(q.head)
    {
    }

    // Points of plans whose (real) root is `a`, over the whole query.
    std::vector<PlanPt> top_root(int a)
    {
        Key key = mode_ == Mode::PTC ? Key{0, 1} : mode_ == Mode::PT ? Key{0} : Key{};
        std::vector<PlanPt> out;
        for (auto& p : node_points(vars_, key, a, std::nullopt))
            out.push_back({p.e, std::make_shared<const Plan>(make_plan(*p.w, {}))});
        return out;
    }

    // Full frontier of plans with the given input variables (ptcr/rpt only).
    std::vector<PlanPt> solve_inputs(VarSet inputs)
    {
        std::vector<PlanPt> out;
        VarSet t = vars_ & ~inputs;
        if (!inputs) {
            for (int a : members(vars_))
                for (auto& p : top_root(a)) pareto_add(out, std::move(p));
            return out;
        }
        std::vector<int> perm = members(inputs);
        do {
            VarSet anc = 0, ra_prev = 0;
            for (size_t j = 0; j < perm.size(); ++j) {
                int v = perm[j];
                VarSet below = vars_ & ~anc;
                VarSet con = closed_nbr(adj_, below) & anc;
                VarSet ria = 0;
                if (con) {
                    size_t m = 0;
                    for (size_t i = 0; i < j; ++i)
                        if (has(con, perm[i])) m = i;
                    VarSet upto = 0;
                    for (size_t i = 0; i <= m; ++i) upto |= bit(perm[i]);
                    ria = ra_prev & upto;
                }
                ra_prev = ria | bit(v);
                anc |= bit(v);
            }
            VarSet nt = closed_nbr(adj_, t) & ~t;
            Key key;
            for (int v : perm)
                if (has(nt | ra_prev, v)) key.push_back(entry(v, has(ra_prev, v)));
            truncate(key, nt);
            for (int a : members(t))
                for (auto& p : node_points(t, key, a, inputs))
                    pareto_add(out, PlanPt{p.e, std::make_shared<const Plan>(make_plan(*p.w, perm))});
        } while (std::next_permutation(perm.begin(), perm.end()));
        return out;
    }

private:
    static std::uint64_t entry(int v, bool flag) { return (static_cast<std::uint64_t>(v) << 1) | (flag ? 1u : 0u); }
    static int entry_var(std::uint64_t e) { return static_cast<int>(e >> 1); }
    static bool entry_flag(std::uint64_t e) { return e & 1u; }

    static void truncate(Key& key, VarSet nt)
    {
        size_t keep = 0;
        for (size_t i = 0; i < key.size(); ++i)
            if (has(nt, entry_var(key[i]))) keep = i + 1;
        key.resize(keep);
        // between two members of N(T) only the set of ra members matters
        size_t i = 0;
        while (i < key.size()) {
            size_t j = i;
            while (j < key.size() && !has(nt, entry_var(key[j]))) ++j;
            std::sort(key.begin() + i, key.begin() + j);
            i = j + 1;
        }
    }

    const std::vector<TPt>& tree(VarSet t, const Key& key)
    {
        auto mk = std::make_pair(t, key);
        auto it = memo_.find(mk);
        if (it != memo_.end()) return it->second;
        std::vector<TPt> out;
        for (int a : members(t))
            for (auto& p : node_points(t, key, a, std::nullopt)) pareto_add(out, std::move(p));
        return memo_.emplace(std::move(mk), std::move(out)).first->second;
    }

    // Forests over groups of `comps`, each group a subtree under the same parent.
    template <class KeyFn>
    std::vector<FPt> forest(const std::vector<VarSet>& comps, KeyFn&& key_of)
    {
        size_t c = comps.size();
        std::vector<std::optional<std::vector<FPt>>> memo(size_t{1} << c);
        memo[0] = std::vector<FPt>{FPt{{0, 0}, nullptr}};
        std::function<const std::vector<FPt>&(std::uint32_t)> rec = [&](std::uint32_t mask) -> const std::vector<FPt>& {
            if (memo[mask]) return *memo[mask];
            std::vector<FPt> out;
            std::uint32_t low = mask & (~mask + 1);
            std::uint32_t rest = mask & ~low;
            // every group containing the lowest component
            for (std::uint32_t sub = rest;; sub = (sub - 1) & rest) {
                std::uint32_t g = sub | low;
                VarSet gv = 0;
                for (size_t i = 0; i < c; ++i)
                    if (g >> i & 1u) gv |= comps[i];
                const auto& tp = tree(gv, key_of(gv));
                if (!tp.empty()) {
                    const auto& fp = rec(mask & ~g);
                    for (const auto& x : tp)
                        for (const auto& y : fp) {
                            Exponent e = max_of(x.e, y.e);
                            if (!caps_.ok(e)) continue;
                            pareto_add(out, FPt{e, std::make_shared<const FNode>(FNode{x.w, y.list})});
                        }
                }
                if (sub == 0) break;
            }
            memo[mask] = std::move(out);
            return *memo[mask];
        };
        return rec(static_cast<std::uint32_t>((size_t{1} << c) - 1));
    }

    void attach(std::vector<TPt>& out, const Exponent& node, WNode w, const std::vector<FPt>& kids)
    {
        for (const auto& f : kids) {
            Exponent e = max_of(node, f.e);
            if (!caps_.ok(e)) continue;
            WNode n = w;
            n.kids = f.list;
            pareto_add(out, TPt{e, std::make_shared<const WNode>(std::move(n))});
        }
    }

    std::vector<TPt> node_points(VarSet t, const Key& key, int a, std::optional<VarSet> required_ria)
    {
        std::vector<TPt> out;
        VarSet nt = closed_nbr(adj_, t) & ~t;
        VarSet rest = t & ~bit(a);
        VarSet outt = t & head_, out_rest = rest & head_;
        auto comps = components(adj_, rest);
        if (comps.size() > 20) throw SearchError("too many independent subtrees below one node");

        switch (mode_) {
        case Mode::PT: {
            sh_.tick();
            VarSet p = key[0];
            Exponent e{rho_(outt), rho_(p | bit(a) | out_rest)};
            if (!caps_.admit(e)) return out;
            VarSet pc = p | bit(a);
            auto kids = forest(comps, [&](VarSet) { return Key{pc}; });
            attach(out, e, WNode{a, 0, false, false, 0, nullptr, nullptr}, kids);
            return out;
        }
        case Mode::PTC: {
            bool must = key[1] != 0;
            for (int cached = 1; cached >= 0; --cached) {
                if (!cached && must) continue;
                sh_.tick();
                VarSet self = cached ? (nt | bit(a)) : (key[0] | bit(a));
                Exponent e{cached ? rho_(nt | outt) : Rational(0), rho_(self | out_rest)};
                if (!caps_.admit(e)) continue;
                auto kids = forest(comps, [&](VarSet) { return Key{self, 0}; });
                attach(out, e, WNode{a, 0, cached != 0, false, 0, nullptr, nullptr}, kids);
            }
            return out;
        }
        case Mode::PTCR: break;
        }

        // con(a) top-down, as positions in the key
        std::vector<size_t> con_pos;
        for (size_t i = 0; i < key.size(); ++i)
            if (has(nt, entry_var(key[i]))) con_pos.push_back(i);
        for (size_t k = 0; k <= con_pos.size(); ++k) {
            VarSet scon = 0, icon = 0;
            for (size_t i = 0; i < con_pos.size(); ++i) {
                int v = entry_var(key[con_pos[i]]);
                if (i + k >= con_pos.size()) scon |= bit(v);
                else icon |= bit(v);
            }
            VarSet ria = 0;
            if (icon) {
                size_t m = con_pos[con_pos.size() - k - 1];
                for (size_t i = 0; i <= m; ++i)
                    if (entry_flag(key[i])) ria |= bit(entry_var(key[i]));
            }
            if (required_ria && ria != *required_ria) continue;
            VarSet ra = ria | scon | bit(a);
            sh_.tick();
            Exponent e{rho_(scon | outt), rho_(ra | out_rest)};
            if (caps_.admit(e)) {
                auto kids = forest(comps, [&](VarSet g) {
                    VarSet ng = closed_nbr(adj_, g) & ~g;
                    Key ck;
                    for (auto x : key) {
                        int v = entry_var(x);
                        if (has(ng | ra, v)) ck.push_back(entry(v, has(ra, v)));
                    }
                    if (has(ng | ra, a)) ck.push_back(entry(a, true));
                    truncate(ck, ng);
                    return ck;
                });
                attach(out, e, WNode{a, static_cast<int>(k), false, false, 0, nullptr, nullptr}, kids);
            }
            if (depth_ > 0 && scon) {
                for (const auto& sp : sub_instance(t | ria | scon, scon | outt, ria)) {
                    if (!caps_.ok(sp.e)) continue;
                    WNode w{a, static_cast<int>(k), false, true, t, sp.plan, nullptr};
                    pareto_add(out, TPt{sp.e, std::make_shared<const WNode>(std::move(w))});
                }
            }
        }
        return out;
    }

    const std::vector<PlanPt>& sub_instance(VarSet u, VarSet h, VarSet inputs)
    {
        auto key = std::make_tuple(u, h, inputs, depth_ - 1);
        auto it = subs_.find(key);
        if (it != subs_.end()) return it->second->pts;
        auto si = std::make_unique<SubInstance>();
        si->q = restrict_query(q_, u, h);
        // restriction keeps rho* of every subset of u, so the oracle is shared
        TreeSearch ts(si->q, rho_, Mode::PTCR, depth_ - 1, sh_, caps_, subs_);
        si->pts = ts.solve_inputs(inputs);
        return subs_.emplace(key, std::move(si)).first->second->pts;
    }

    void place(const WNode& w, int par, std::vector<int>& parent, Plan& p) const
    {
        parent[w.var] = par;
        if (mode_ == Mode::PTC && w.cached) p.caches |= bit(w.var);
        if (mode_ == Mode::PTCR) p.cache_size[w.var] = w.k;
        if (w.anchor) {
            p.anchors.push_back(w.var);
            p.subs.push_back(*w.sub);
            canonical_subtree(adj_, w.t & ~bit(w.var), w.var, parent);
            return;
        }
        for (const FNode* f = w.kids.get(); f; f = f->tail.get()) place(*f->head, w.var, parent, p);
    }

    Plan make_plan(const WNode& root, const std::vector<int>& inputs) const
    {
        Plan p;
        p.kind = mode_ == Mode::PT ? PlanKind::PT : mode_ == Mode::PTC ? PlanKind::PTC : PlanKind::PTCR;
        std::vector<int> parent(q_.num_ids(), -1);
        if (mode_ == Mode::PTCR) p.cache_size.assign(q_.num_ids(), 0);
        for (size_t j = 1; j < inputs.size(); ++j) parent[inputs[j]] = inputs[j - 1];
        place(root, inputs.empty() ? -1 : inputs.back(), parent, p);
        p.inputs = inputs;
        if (!p.anchors.empty()) p.kind = PlanKind::RPT;
        p.tree = PseudoTree::from_parents(q_, vars_, parent);
        return p;
    }

    const Query& q_;
    const RhoOracle& rho_;
    Mode mode_;
    int depth_;
    Shared& sh_;
    Caps& caps_;
    SubCache& subs_;
    std::vector<VarSet> adj_;
    VarSet vars_, head_;
    std::map<std::pair<VarSet, Key>, std::vector<TPt>> memo_;
};

void verify_witness(const RhoOracle& rho, const Exponent& e, const Plan& p)
{
    auto bad = validate(rho.query(), p);
    if (!bad.empty()) throw std::logic_error("search produced an invalid plan: " + bad.front());
    Exponent got = exponents(rho, p);
    if (got != e)
        throw std::logic_error("search value " + to_string(e) + " differs from the plan's exponents " +
                               to_string(got));
}

struct Decision {
    std::vector<PlanPt> pts;
    bool done = true;
    std::optional<Rational> cut;
};

// All Pareto points within fixed caps, split over workers by root variable.
Decision decide(const Query& q, const RhoOracle& rho, Mode mode, int depth, Shared& sh, const Caps& caps_in, int jobs)
{
    auto roots = members(q.vars());
    struct RootResult {
        std::vector<PlanPt> pts;
        bool done = false;
    };
    std::vector<RootResult> res(roots.size());
    jobs = std::max(1, std::min<int>(jobs, static_cast<int>(roots.size())));
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::optional<Rational>> cuts(jobs);

    auto work = [&](int w) {
        try {
            Caps caps = caps_in;
            SubCache subs;
            TreeSearch ts(q, rho, mode, depth, sh, caps, subs);
            for (size_t i = w; i < roots.size(); i += jobs) {
                if (sh.stopped) break;
                try {
                    res[i].pts = ts.top_root(roots[i]);
                    res[i].done = true;
                } catch (const BudgetExceeded&) {
                    sh.stopped = true;
                    break;
                }
            }
            cuts[w] = caps.cut;
        } catch (...) {
            errors[w] = std::current_exception();
            sh.stopped = true;
        }
    };
    if (jobs == 1) {
        work(0);
    } else {
        std::vector<std::thread> threads;
        for (int w = 0; w < jobs; ++w) threads.emplace_back(work, w);
        for (auto& t : threads) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    Decision d;
    for (auto& r : res) {
        if (!r.done) d.done = false;
        for (auto& p : r.pts) pareto_add(d.pts, std::move(p));
    }
    for (const auto& c : cuts)
        if (c && (!d.cut || *c < *d.cut)) d.cut = c;
    return d;
}

// Sweeps the time cap upwards through the values the search reports as cut.
// Every plan over the current cap has some node the search evaluated and cut,
// so the least cut value is the next time worth trying. At each cap the
// least space found is a frontier point; later sweeps then only look for
// strictly smaller space.
Frontier run_tree(const Query& q, Mode mode, int depth, const SearchBudget& b, bool best_time)
{
    RhoOracle rho(q);
    Shared sh(b);
    Frontier f;
    Caps caps;
    caps.s = b.space_cap;
    Rational c = 0;
    while (true) {
        caps.t = c;
        caps.cut.reset();
        Decision d = decide(q, rho, mode, depth, sh, caps, b.jobs);
        if (!d.done) {
            f.exhaustive = false;
            break;
        }
        if (!d.pts.empty()) {
            const PlanPt* best = &d.pts.front();
            for (const auto& p : d.pts)
                if (p.e.s < best->e.s) best = &p;
            verify_witness(rho, best->e, *best->plan);
            f.offer(best->e, *best->plan);
            if (best_time || best->e.s == 0) break;
            caps.s = best->e.s;
            caps.s_strict = true;
        }
        if (!d.cut || (b.time_cap && *d.cut > *b.time_cap)) break;
        c = *d.cut;
    }
    f.examined = sh.examined;
    return f;
}

Frontier run_gj(const Query& q, const SearchBudget& b)
{
    RhoOracle rho(q);
    Frontier f;
    Plan p = make_gj(sorted_by_name(q, q.vars()));
    Exponent e = exponents(rho, p);
    Caps caps;
    caps.s = b.space_cap;
    caps.t = b.time_cap;
    f.examined = 1;
    if (caps.ok(e)) f.offer(e, p);
    return f;
}

// ---------------------------------------------------------------------------
// Tree decompositions from elimination orders

class TdEnumerator {
public:
    explicit TdEnumerator(const Query& q) : q_(q), vars_(q.vars()), adj_(adjacency(q))
    {
        for_each_var(q.head, [&](int v) { adj_[v] |= q.head; });
    }

    // The single bag var(Q) is always included; elimination alone misses it
    // whenever no order fills the whole graph.
    std::set<std::vector<VarSet>> collections()
    {
        auto out = rec(0);
        out.insert(std::vector<VarSet>{vars_});
        return out;
    }

    Plan build(const std::vector<VarSet>& bags) const
    {
        Plan p;
        p.kind = PlanKind::TD;
        size_t nb = bags.size();
        int root = 0;
        for (size_t i = 0; i < nb; ++i)
            if (subset(q_.head, bags[i])) {
                root = static_cast<int>(i);
                break;
            }
        // maximum-weight spanning tree on intersection sizes, grown from the root
        p.bags = bags;
        p.bag_parent.assign(nb, -1);
        std::vector<bool> in(nb, false);
        in[root] = true;
        for (size_t step = 1; step < nb; ++step) {
            int bu = -1, bv = -1, bw = -1;
            for (size_t v = 0; v < nb; ++v) {
                if (in[v]) continue;
                for (size_t u = 0; u < nb; ++u) {
                    if (!in[u]) continue;
                    int w = count(bags[u] & bags[v]);
                    if (w > bw) bw = w, bu = static_cast<int>(u), bv = static_cast<int>(v);
                }
            }
            p.bag_parent[bv] = bu;
            in[bv] = true;
        }
        std::set<std::string> used;
        for (size_t i = 0; i < nb; ++i) {
            std::string id;
            for (char ch : q_.set_name(bags[i])) id += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            if (id.empty() || used.count(id)) id += "_" + std::to_string(i);
            used.insert(id);
            p.bag_ids.push_back(id);
        }
        for (const auto& a : q_.atoms) {
            int c = -1;
            for (size_t i = 0; i < nb && c < 0; ++i)
                if (subset(a.mask, bags[i])) c = static_cast<int>(i);
            p.covering.push_back(c);
        }
        auto sub = td_subqueries(q_, p);
        for (size_t i = 0; i < nb; ++i) p.subs.push_back(make_gj(sorted_by_name(sub[i].q, sub[i].q.vars())));
        return p;
    }

private:
    static std::vector<VarSet> reduce(std::vector<VarSet> bags)
    {
        std::sort(bags.begin(), bags.end());
        bags.erase(std::unique(bags.begin(), bags.end()), bags.end());
        std::vector<VarSet> out;
        for (VarSet b : bags) {
            bool inside = false;
            for (VarSet c : bags)
                if (c != b && subset(b, c)) inside = true;
            if (!inside) out.push_back(b);
        }
        return out;
    }

    // neighbours of v in the graph left after eliminating `gone`
    VarSet reach(int v, VarSet gone) const
    {
        VarSet seen = bit(v), frontier = bit(v), out = 0;
        while (frontier) {
            VarSet next = 0;
            for_each_var(frontier, [&](int u) { next |= adj_[u]; });
            next &= ~seen;
            seen |= next;
            out |= next & ~gone;
            frontier = next & gone;
        }
        return out;
    }

    const std::set<std::vector<VarSet>>& rec(VarSet gone)
    {
        auto it = memo_.find(gone);
        if (it != memo_.end()) return it->second;
        std::set<std::vector<VarSet>> out;
        if (gone == vars_) {
            out.insert(std::vector<VarSet>{});
        } else {
            for (int v : members(vars_ & ~gone)) {
                VarSet bag = bit(v) | reach(v, gone);
                for (const auto& c : rec(gone | bit(v))) {
                    auto bags = c;
                    bags.push_back(bag);
                    out.insert(reduce(std::move(bags)));
                }
            }
        }
        return memo_.emplace(gone, std::move(out)).first->second;
    }

    const Query& q_;
    VarSet vars_;
    std::vector<VarSet> adj_;
    std::map<VarSet, std::set<std::vector<VarSet>>> memo_;
};

Frontier run_td(const Query& q, SearchClass inner, const SearchBudget& b, bool best_time)
{
    RhoOracle rho(q);
    Shared sh(b);
    Caps caps;
    caps.s = b.space_cap;
    caps.t = b.time_cap;
    Frontier f;

    struct Inner {
        Query q;
        std::unique_ptr<RhoOracle> rho;
        std::vector<PlanPt> pts;  // scaled exponents
    };
    std::map<std::tuple<VarSet, VarSet, std::vector<VarSet>>, std::unique_ptr<Inner>> memo;

    auto inner_points = [&](const Plan& td, const BagQuery& bq, size_t v) -> const std::vector<PlanPt>& {
        std::vector<VarSet> seps;
        for (size_t w = 0; w < td.bags.size(); ++w)
            if (td.bag_parent[w] == static_cast<int>(v)) seps.push_back(td.bags[w] & td.bags[v]);
        std::sort(seps.begin(), seps.end());
        auto key = std::make_tuple(td.bags[v], bq.separator, seps);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second->pts;
        auto in = std::make_unique<Inner>();
        in->q = bq.q;
        Rational m = 0;
        for (const auto& c : bq.profile.cc) m = max_of(m, c);
        CardinalityProfile norm;
        for (const auto& c : bq.profile.cc) norm.cc.push_back(c / m);
        in->rho = std::make_unique<RhoOracle>(in->q, norm);
        std::vector<PlanPt> raw;
        if (inner == SearchClass::TD_GJ) {
            Plan p = make_gj(sorted_by_name(in->q, in->q.vars()));
            raw.push_back({exponents(*in->rho, p), std::make_shared<const Plan>(p)});
        } else {
            Caps none;
            SubCache subs;
            TreeSearch ts(in->q, *in->rho, inner == SearchClass::TD_PT ? Mode::PT : Mode::PTCR, 0, sh, none, subs);
            raw = ts.solve_inputs(0);
        }
        for (auto& p : raw) {
            p.e.s *= m;
            p.e.t *= m;
            in->pts.push_back(std::move(p));
        }
        return memo.emplace(key, std::move(in)).first->second->pts;
    };

    TdEnumerator gen(q);
    try {
        for (const auto& bags : gen.collections()) {
            sh.tick();
            Plan td = gen.build(bags);
            auto sub = td_subqueries(q, td, rho.profile());
            struct Combo {
                Exponent e;
                std::vector<std::shared_ptr<const Plan>> subs;
            };
            std::vector<Combo> acc{Combo{{0, 0}, {}}};
            for (size_t v = 0; v < sub.size() && !acc.empty(); ++v) {
                const auto& pts = inner_points(td, sub[v], v);
                std::vector<Combo> next;
                for (const auto& a : acc)
                    for (const auto& p : pts) {
                        Combo c{max_of(a.e, p.e), a.subs};
                        if (!caps.ok(c.e)) continue;
                        c.subs.push_back(p.plan);
                        pareto_add(next, std::move(c));
                    }
                acc = std::move(next);
            }
            for (const auto& c : acc) {
                Plan p = td;
                for (size_t v = 0; v < c.subs.size(); ++v) p.subs[v] = *c.subs[v];
                f.offer(c.e, p);
                if (best_time && (!caps.t || c.e.t < *caps.t)) caps.t = c.e.t;
            }
        }
    } catch (const BudgetExceeded&) {
        f.exhaustive = false;
    }
    f.examined = sh.examined;
    for (const auto& p : f.points) verify_witness(rho, p.e, p.witness);
    return f;
}

Frontier search(const Query& q, SearchClass c, const SearchBudget& b, bool best_time)
{
    check_cap(q);
    check_budget(b);
    switch (c) {
    case SearchClass::GJ: return run_gj(q, b);
    case SearchClass::PT: return run_tree(q, Mode::PT, 0, b, best_time);
    case SearchClass::PTC: return run_tree(q, Mode::PTC, 0, b, best_time);
    case SearchClass::PTCR: return run_tree(q, Mode::PTCR, 0, b, best_time);
    case SearchClass::RPT: return run_tree(q, Mode::PTCR, b.rpt_depth, b, best_time);
    case SearchClass::TD_GJ:
    case SearchClass::TD_PT:
    case SearchClass::TD_PTCR: return run_td(q, c, b, best_time);
    }
    throw std::logic_error("unknown search class");
}

// ---------------------------------------------------------------------------
// Plain enumeration

class TreeGen {
public:
    explicit TreeGen(const Query& q) : q_(q), adj_(adjacency(q)), parent_(q.num_ids(), -1) {}

    std::vector<int>& parent() { return parent_; }

    bool tree(VarSet t, int par, const std::function<bool()>& k)
    {
        for (int a : members(t)) {
            parent_[a] = par;
            auto comps = components(adj_, t & ~bit(a));
            bool go = for_each_partition(comps, [&](const std::vector<VarSet>& groups) {
                return forest(groups, 0, a, k);
            });
            if (!go) return false;
        }
        return true;
    }

private:
    bool forest(const std::vector<VarSet>& groups, size_t i, int par, const std::function<bool()>& k)
    {
        if (i == groups.size()) return k();
        return tree(groups[i], par, [&] { return forest(groups, i + 1, par, k); });
    }

    const Query& q_;
    std::vector<VarSet> adj_;
    std::vector<int> parent_;
};

// Calls f(cs) for every cache assignment cs[v] in 0..limit[v] over `nodes`.
bool for_each_cache(std::vector<int> nodes, const std::vector<int>& limit, size_t n,
                    const std::function<bool(const std::vector<int>&)>& f)
{
    std::vector<int> cs(n, 0);
    while (true) {
        if (!f(cs)) return false;
        size_t i = 0;
        for (; i < nodes.size(); ++i) {
            int v = nodes[i];
            if (cs[v] < limit[v]) {
                ++cs[v];
                break;
            }
            cs[v] = 0;
        }
        if (i == nodes.size()) return true;
    }
}

bool ptcr_over_trees(const Query& q, VarSet inputs, const std::function<bool(const Plan&)>& f)
{
    TreeGen gen(q);
    VarSet vars = q.vars();
    auto emit_tree = [&](const std::vector<int>& perm) {
        PseudoTree t = PseudoTree::from_parents(q, vars, gen.parent());
        TreeInfo info = analyze_tree(q, t);
        std::vector<int> limit(q.num_ids(), 0);
        std::vector<int> nodes;
        for_each_var(vars & ~inputs, [&](int v) {
            limit[v] = count(info.con[v]);
            if (limit[v]) nodes.push_back(v);
        });
        return for_each_cache(nodes, limit, q.num_ids(), [&](const std::vector<int>& cs) {
            Plan p = make_ptcr(t, cs, perm);
            if (inputs && !validate(q, p).empty()) return true;
            return f(p);
        });
    };
    if (!inputs) return gen.tree(vars, -1, [&] { return emit_tree({}); });
    std::vector<int> perm = members(inputs);
    do {
        for (size_t j = 0; j < perm.size(); ++j) gen.parent()[perm[j]] = j ? perm[j - 1] : -1;
        if (!gen.tree(vars & ~inputs, perm.back(), [&] { return emit_tree(perm); })) return false;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return true;
}

bool rpt_stream(const Query& q, VarSet inputs, int depth, const std::function<bool(const Plan&)>& f)
{
    auto adj = adjacency(q);
    return ptcr_over_trees(q, inputs, [&](const Plan& base) {
        if (!f(base)) return false;
        if (depth <= 0) return true;
        TreeInfo info = analyze_tree(q, base.tree);
        PTCRSets sets = ptcr_sets(base.tree, info, base.cache_size);
        std::vector<int> cand;
        for (int v : info.preorder)
            if (!has(inputs, v) && sets.scon[v]) cand.push_back(v);
        // anchors must lie below a canonical, cache-free subtree
        auto canonical_below = [&](int a) {
            std::vector<int> parent(q.num_ids(), -1);
            canonical_subtree(adj, info.desc[a], a, parent);
            bool same = true;
            for_each_var(info.desc[a], [&](int v) {
                if (parent[v] != base.tree.parent[v] || base.cache_at(v) != 0) same = false;
            });
            return same;
        };
        for (std::uint32_t mask = 1; mask < (1u << cand.size()); ++mask) {
            std::vector<int> anchors;
            bool ok = true;
            for (size_t i = 0; i < cand.size() && ok; ++i) {
                if (!(mask >> i & 1u)) continue;
                int a = cand[i];
                for (int o : anchors)
                    if (has(info.ancc(o), a) || has(info.ancc(a), o)) ok = false;
                if (ok && !canonical_below(a)) ok = false;
                anchors.push_back(a);
            }
            if (!ok) continue;
            std::vector<RptSubQuery> sqs;
            for (int a : anchors) sqs.push_back(rpt_subquery(q, base.tree, info, sets, a));
            // sub-plan streams are nested rather than stored; they can be large
            Plan p = base;
            p.kind = PlanKind::RPT;
            p.anchors = anchors;
            std::function<bool(size_t)> combine = [&](size_t i) {
                if (i == anchors.size()) return f(p);
                return rpt_stream(sqs[i].q, sqs[i].inputs, depth - 1, [&](const Plan& sub) {
                    p.subs.push_back(sub);
                    bool go = combine(i + 1);
                    p.subs.pop_back();
                    return go;
                });
            };
            if (!combine(0)) return false;
        }
        return true;
    });
}

bool td_stream(const Query& q, const std::function<bool(const Plan&)>& f)
{
    TdEnumerator gen(q);
    for (const auto& bags : gen.collections())
        if (!f(gen.build(bags))) return false;
    return true;
}

} // namespace

bool enumerate_pt(const Query& q, const std::function<bool(const PseudoTree&)>& f)
{
    check_cap(q);
    TreeGen gen(q);
    VarSet vars = q.vars();
    return gen.tree(vars, -1, [&] { return f(PseudoTree::from_parents(q, vars, gen.parent())); });
}

bool enumerate_ptc(const Query& q, const std::function<bool(const Plan&)>& f)
{
    return enumerate_pt(q, [&](const PseudoTree& t) {
        VarSet others = t.nodes & ~bit(t.root);
        for (VarSet sub = 0;; sub = (sub - others) & others) {  // all subsets, increasing
            if (!f(make_ptc(t, sub | bit(t.root)))) return false;
            if (sub == others) break;
        }
        return true;
    });
}

bool enumerate_ptcr(const Query& q, const std::function<bool(const Plan&)>& f)
{
    check_cap(q);
    return ptcr_over_trees(q, 0, f);
}

bool enumerate_ptcr_inputs(const Query& q, VarSet inputs, const std::function<bool(const Plan&)>& f)
{
    check_cap(q);
    return ptcr_over_trees(q, inputs, f);
}

bool enumerate_td(const Query& q, const std::function<bool(const Plan&)>& f)
{
    check_cap(q);
    return td_stream(q, f);
}

bool enumerate_rpt(const Query& q, int depth, const std::function<bool(const Plan&)>& f)
{
    return enumerate_rpt_inputs(q, 0, depth, f);
}

bool enumerate_rpt_inputs(const Query& q, VarSet inputs, int depth, const std::function<bool(const Plan&)>& f)
{
    check_cap(q);
    if (depth < 0 || depth > 3) throw SearchError("rpt depth must be between 0 and 3");
    return rpt_stream(q, inputs, depth, f);
}

bool enumerate_class(const Query& q, SearchClass c, int rpt_depth, const std::function<bool(const Plan&)>& f)
{
    check_cap(q);
    switch (c) {
    case SearchClass::GJ: {
        auto order = members(q.vars());
        do {
            if (!f(make_gj(order))) return false;
        } while (std::next_permutation(order.begin(), order.end()));
        return true;
    }
    case SearchClass::PT: return enumerate_pt(q, [&](const PseudoTree& t) { return f(make_pt(t)); });
    case SearchClass::PTC: return enumerate_ptc(q, f);
    case SearchClass::PTCR: return enumerate_ptcr(q, f);
    case SearchClass::RPT: return enumerate_rpt(q, rpt_depth, f);
    case SearchClass::TD_GJ:
    case SearchClass::TD_PT:
    case SearchClass::TD_PTCR: {
        SearchClass inner = c == SearchClass::TD_GJ ? SearchClass::GJ
                            : c == SearchClass::TD_PT ? SearchClass::PT
                                                      : SearchClass::PTCR;
        return enumerate_td(q, [&](const Plan& td) {
            auto sub = td_subqueries(q, td);
            std::vector<std::vector<Plan>> options(sub.size());
            for (size_t v = 0; v < sub.size(); ++v)
                enumerate_class(sub[v].q, inner, 0, [&](const Plan& p) {
                    options[v].push_back(p);
                    return true;
                });
            std::vector<size_t> pick(sub.size(), 0);
            while (true) {
                Plan p = td;
                for (size_t v = 0; v < sub.size(); ++v) p.subs[v] = options[v][pick[v]];
                if (!f(p)) return false;
                size_t i = 0;
                for (; i < sub.size(); ++i) {
                    if (++pick[i] < options[i].size()) break;
                    pick[i] = 0;
                }
                if (i == sub.size()) return true;
            }
        });
    }
    }
    throw std::logic_error("unknown search class");
}

Frontier frontier_unpruned(const Query& q, SearchClass c, const SearchBudget& b)
{
    check_cap(q);
    check_budget(b);
    RhoOracle rho(q);
    Shared sh(b);
    Caps caps;
    caps.s = b.space_cap;
    caps.t = b.time_cap;
    Frontier f;
    try {
        enumerate_class(q, c, b.rpt_depth, [&](const Plan& p) {
            sh.tick();
            Exponent e = exponents(rho, p);
            if (caps.ok(e)) f.offer(e, p);
            return true;
        });
    } catch (const BudgetExceeded&) {
        f.exhaustive = false;
    }
    f.examined = sh.examined;
    return f;
}

Frontier pareto_frontier(const Query& q, SearchClass c, const SearchBudget& b)
{
    return search(q, c, b, false);
}

BestTime best_time_given_space(const Query& q, SearchClass c, const Rational& s_budget, SearchBudget b)
{
    if (!b.space_cap || s_budget < *b.space_cap) b.space_cap = s_budget;
    Frontier f = search(q, c, b, true);
    BestTime r;
    r.exhaustive = f.exhaustive;
    r.examined = f.examined;
    for (const auto& p : f.points) {
        if (!r.feasible || p.e.t < r.e.t) {
            r.feasible = true;
            r.e = p.e;
            r.witness = p.witness;
        }
    }
    return r;
}

} // namespace spq
