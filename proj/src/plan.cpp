#include "spq/plan.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace spq {

std::string kind_name(PlanKind k)
{
    switch (k) {
    case PlanKind::GJ: return "gj";
    case PlanKind::PT: return "pt";
    case PlanKind::PTC: return "ptc";
    case PlanKind::PTCR: return "ptcr";
    case PlanKind::RPT: return "rpt";
    case PlanKind::TD: return "td";
    }
    return "?";
}

PlanKind parse_kind(const std::string& s)
{
    if (s == "gj") return PlanKind::GJ;
    if (s == "pt") return PlanKind::PT;
    if (s == "ptc") return PlanKind::PTC;
    if (s == "ptcr") return PlanKind::PTCR;
    if (s == "rpt") return PlanKind::RPT;
    if (s == "td") return PlanKind::TD;
    throw PlanError("unknown plan kind '" + s + "'");
}

PseudoTree PseudoTree::from_parents(const Query& q, VarSet nodes, const std::vector<int>& parent)
{
    PseudoTree t;
    t.nodes = nodes;
    t.parent.assign(q.num_ids(), -1);
    t.children.assign(q.num_ids(), {});
    for_each_var(nodes, [&](int v) {
        int p = v < static_cast<int>(parent.size()) ? parent[v] : -1;
        t.parent[v] = p;
        if (p < 0) {
            if (t.root < 0 || q.names[v] < q.names[t.root]) t.root = v;
        } else {
            t.children[p].push_back(v);
        }
    });
    for (auto& c : t.children)
        std::sort(c.begin(), c.end(), [&](int a, int b) { return q.names[a] < q.names[b]; });
    return t;
}

PseudoTree PseudoTree::chain(const Query& q, const std::vector<int>& order)
{
    std::vector<int> parent(q.num_ids(), -1);
    for (size_t i = 1; i < order.size(); ++i) parent[order[i]] = order[i - 1];
    return from_parents(q, mask_of(order), parent);
}

int TreeInfo::lowest_of(VarSet s) const
{
    int best = -1;
    for_each_var(s, [&](int v) {
        if (best < 0 || depth[v] > depth[best]) best = v;
    });
    return best;
}

std::vector<int> TreeInfo::top_down(VarSet s) const
{
    auto v = members(s);
    std::sort(v.begin(), v.end(), [&](int a, int b) { return depth[a] < depth[b]; });
    return v;
}

TreeInfo analyze_tree(const Query& q, const PseudoTree& t)
{
    TreeInfo info;
    int n = q.num_ids();
    info.depth.assign(n, -1);
    info.anc.assign(n, 0);
    info.desc.assign(n, 0);
    info.con.assign(n, 0);
    if (t.root < 0) return info;
    std::vector<int> stack{t.root};
    info.depth[t.root] = 0;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        info.preorder.push_back(v);
        const auto& ch = t.children[v];
        for (auto it = ch.rbegin(); it != ch.rend(); ++it) {
            int c = *it;
            if (info.depth[c] >= 0) continue;  // cycle guard; validation reports it
            info.depth[c] = info.depth[v] + 1;
            info.anc[c] = info.anc[v] | bit(v);
            stack.push_back(c);
        }
    }
    for (auto it = info.preorder.rbegin(); it != info.preorder.rend(); ++it) {
        int v = *it;
        int p = t.parent[v];
        if (p >= 0) info.desc[p] |= info.desc[v] | bit(v);
    }
    for (int v : info.preorder) {
        VarSet below = info.descc(v);
        for (const auto& a : q.atoms)
            if (a.mask & below) info.con[v] |= a.mask & info.anc[v];
    }
    return info;
}

VarSet context(const Query& q, const PseudoTree& t, int a)
{
    return analyze_tree(q, t).con.at(a);
}

PTCRSets ptcr_sets(const PseudoTree& t, const TreeInfo& info, const std::vector<int>& cache_size)
{
    size_t n = info.depth.size();
    PTCRSets s;
    s.icon.assign(n, 0);
    s.scon.assign(n, 0);
    s.ria.assign(n, 0);
    s.ra.assign(n, 0);
    for (int v : info.preorder) {
        VarSet con = info.con[v];
        int c = v < static_cast<int>(cache_size.size()) ? cache_size[v] : 0;
        int k = std::min(std::max(c, 0), count(con));
        auto order = info.top_down(con);
        for (int i = 0; i < k; ++i) s.scon[v] |= bit(order[order.size() - 1 - i]);
        s.icon[v] = con & ~s.scon[v];
        if (s.icon[v]) {
            int m = info.lowest_of(s.icon[v]);
            int p = t.parent[v];
            s.ria[v] = (p >= 0 ? s.ra[p] : 0) & info.ancc(m);
        }
        s.ra[v] = s.ria[v] | s.scon[v] | bit(v);
    }
    return s;
}

int Plan::real_root() const
{
    if (inputs.empty()) return tree.root;
    const auto& ch = tree.children.at(inputs.back());
    return ch.empty() ? -1 : ch.front();
}

int Plan::td_root() const
{
    for (size_t i = 0; i < bag_parent.size(); ++i)
        if (bag_parent[i] < 0) return static_cast<int>(i);
    return -1;
}

bool Plan::operator==(const Plan& o) const
{
    if (kind != o.kind || order != o.order || !(tree == o.tree) || caches != o.caches || inputs != o.inputs ||
        anchors != o.anchors || subs != o.subs || bag_ids != o.bag_ids || bags != o.bags ||
        bag_parent != o.bag_parent || covering != o.covering)
        return false;
    size_t n = std::max(cache_size.size(), o.cache_size.size());
    for (size_t v = 0; v < n; ++v)
        if (cache_at(static_cast<int>(v)) != o.cache_at(static_cast<int>(v))) return false;
    return true;
}

Plan make_gj(const std::vector<int>& order)
{
    Plan p;
    p.kind = PlanKind::GJ;
    p.order = order;
    return p;
}

Plan make_pt(PseudoTree t)
{
    Plan p;
    p.kind = PlanKind::PT;
    p.tree = std::move(t);
    return p;
}

Plan make_ptc(PseudoTree t, VarSet caches)
{
    Plan p;
    p.kind = PlanKind::PTC;
    p.tree = std::move(t);
    p.caches = caches;
    return p;
}

Plan make_ptcr(PseudoTree t, std::vector<int> cache_size, std::vector<int> inputs)
{
    Plan p;
    p.kind = PlanKind::PTCR;
    p.tree = std::move(t);
    p.cache_size = std::move(cache_size);
    p.inputs = std::move(inputs);
    return p;
}

RptSubQuery rpt_subquery(const Query& q, const PseudoTree&, const TreeInfo& info, const PTCRSets& sets,
                         int anchor)
{
    RptSubQuery sq;
    sq.descendants = info.descc(anchor);
    sq.inputs = sets.ria[anchor];
    VarSet keep = sq.descendants | sets.ria[anchor] | sets.scon[anchor];
    VarSet head = sets.scon[anchor] | (sq.descendants & q.head);
    sq.q = restrict_query(q, keep, head, &sq.source);
    return sq;
}

std::vector<BagQuery> td_subqueries(const Query& q, const Plan& td, const CardinalityProfile& profile)
{
    size_t nb = td.bags.size();
    std::vector<BagQuery> out(nb);
    for (size_t v = 0; v < nb; ++v) {
        BagQuery& bq = out[v];
        int p = td.bag_parent[v];
        bq.separator = p < 0 ? q.head : (td.bags[v] & td.bags[p]);
        bq.q.head_name = q.head_name;
        bq.q.names = q.names;
        bq.q.head = bq.separator;
        for (size_t i = 0; i < q.atoms.size(); ++i) {
            std::vector<int> vs;
            for (int x : q.atoms[i].vars)
                if (has(td.bags[v], x)) vs.push_back(x);
            if (vs.empty()) continue;
            bq.q.atoms.push_back({q.atoms[i].name, vs, mask_of(vs)});
            bq.source.push_back(static_cast<int>(i));
            bq.annotated.push_back(td.covering[i] == static_cast<int>(v));
            bq.profile.cc.push_back(profile.at(i));
        }
        for (size_t w = 0; w < nb; ++w) {
            if (td.bag_parent[w] != static_cast<int>(v)) continue;
            VarSet z = td.bags[w] & td.bags[v];
            if (!z) {
                bq.scalar_children.push_back(static_cast<int>(w));
                continue;
            }
            std::string name = "msg_" + td.bag_ids[w];
            while (bq.q.find_atom(name) >= 0 || q.find_atom(name) >= 0) name += "_";
            bq.q.atoms.push_back({name, sorted_by_name(q, z), z});
            bq.source.push_back(-static_cast<int>(w) - 1);
            bq.annotated.push_back(true);
            bq.profile.cc.push_back(rho_star(q, z, profile).objective);
        }
    }
    return out;
}

namespace {

std::string atom_text(const Query& q, const Atom& a)
{
    std::string s = a.name + "(";
    for (size_t i = 0; i < a.vars.size(); ++i) s += (i ? ", " : "") + q.names[a.vars[i]];
    return s + ")";
}

// Structural checks shared by the tree-based kinds.
void check_tree(const Query& q, const PseudoTree& t, const TreeInfo& info, std::vector<std::string>& bad)
{
    if (t.root < 0) {
        bad.push_back("tree has no root");
        return;
    }
    if (t.nodes != q.vars()) {
        if (t.nodes & ~q.vars()) bad.push_back("tree contains variables outside the query: " + q.set_name(t.nodes & ~q.vars()));
        if (q.vars() & ~t.nodes) bad.push_back("tree is missing variables: " + q.set_name(q.vars() & ~t.nodes));
    }
    if (static_cast<int>(info.preorder.size()) != count(t.nodes)) {
        bad.push_back("tree is not a single rooted tree");
        return;
    }
    for (const auto& a : q.atoms) {
        bool ok = false;
        for_each_var(a.mask, [&](int v) {
            if (has(t.nodes, v) && subset(a.mask, info.ancc(v))) ok = true;
        });
        if (!ok) bad.push_back("atom " + atom_text(q, a) + " is not contained in a branch");
    }
}

void validate_in(const Query& q, const Plan& p, VarSet required_inputs, std::vector<std::string>& bad,
                 const std::string& where);

void validate_ptcr_base(const Query& q, const Plan& p, VarSet required_inputs, const TreeInfo& info,
                        const PTCRSets& sets, std::vector<std::string>& bad, const std::string& where)
{
    for (size_t v = 0; v < p.cache_size.size(); ++v)
        if (p.cache_size[v] < 0) bad.push_back(where + "negative cache size at " + q.names[v]);
    VarSet in = mask_of(p.inputs);
    if (in != required_inputs)
        bad.push_back(where + "input variables are {" + q.set_name(in) + "}, expected {" +
                      q.set_name(required_inputs) + "}");
    if (in & q.head) bad.push_back(where + "input variables may not be head variables");
    for (size_t j = 0; j < p.inputs.size(); ++j) {
        int v = p.inputs[j];
        if (!has(p.tree.nodes, v)) {
            bad.push_back(where + "input " + q.names[v] + " is not in the tree");
            return;
        }
        int want = j == 0 ? -1 : p.inputs[j - 1];
        if (p.tree.parent[v] != want || p.tree.children[v].size() != 1)
            bad.push_back(where + "inputs do not form a chain above the real root");
        if (p.cache_at(v) != 0) bad.push_back(where + "input " + q.names[v] + " has a cache");
    }
    int r = p.real_root();
    if (r >= 0 && !p.inputs.empty() && sets.ria[r] != in)
        bad.push_back(where + "ria(" + q.names[r] + ") = {" + q.set_name(sets.ria[r]) +
                      "} differs from the inputs");
    for (int v : info.preorder) {
        if (sets.icon[v] && !subset(sets.icon[v], sets.ria[v]))
            bad.push_back(where + "icon(" + q.names[v] + ") is not inside ria");
    }
}

void validate_tree_plan(const Query& q, const Plan& p, VarSet required_inputs, std::vector<std::string>& bad,
                        const std::string& where)
{
    TreeInfo info = analyze_tree(q, p.tree);
    size_t before = bad.size();
    check_tree(q, p.tree, info, bad);
    for (size_t i = before; i < bad.size(); ++i) bad[i] = where + bad[i];
    if (bad.size() != before) return;

    if (p.kind == PlanKind::PTC) {
        if (!has(p.caches, p.tree.root)) bad.push_back(where + "the root must be cached");
        if (p.caches & ~p.tree.nodes) bad.push_back(where + "caches name variables outside the tree");
    }
    if ((p.kind == PlanKind::PT || p.kind == PlanKind::PTC) && required_inputs)
        bad.push_back(where + "plan kind " + kind_name(p.kind) + " cannot take input variables");
    if (p.kind != PlanKind::PTCR && p.kind != PlanKind::RPT) return;

    PTCRSets sets = ptcr_sets(p.tree, info, p.cache_size);
    validate_ptcr_base(q, p, required_inputs, info, sets, bad, where);
    if (p.kind != PlanKind::RPT) return;

    if (p.subs.size() != p.anchors.size()) {
        bad.push_back(where + "each replacement needs exactly one sub-plan");
        return;
    }
    VarSet in = mask_of(p.inputs);
    for (size_t i = 0; i < p.anchors.size(); ++i) {
        int a = p.anchors[i];
        if (a < 0 || !has(p.tree.nodes, a) || has(in, a)) {
            bad.push_back(where + "replacement anchor is not a non-input tree node");
            return;
        }
        for (size_t j = 0; j < p.anchors.size(); ++j)
            if (i != j && has(info.ancc(p.anchors[j]), a))
                bad.push_back(where + "replacement anchors " + q.names[a] + " and " + q.names[p.anchors[j]] +
                              " lie on one branch");
    }
    if (bad.size() != before) return;
    for (size_t i = 0; i < p.anchors.size(); ++i) {
        const Plan& sub = p.subs[i];
        std::string w = where + "replacement at " + q.names[p.anchors[i]] + ": ";
        if (sub.kind != PlanKind::PTCR && sub.kind != PlanKind::RPT) {
            bad.push_back(w + "sub-plan must be ptcr or rpt");
            continue;
        }
        RptSubQuery sq = rpt_subquery(q, p.tree, info, sets, p.anchors[i]);
        validate_in(sq.q, sub, sq.inputs, bad, w);
    }
}

void validate_td(const Query& q, const Plan& p, std::vector<std::string>& bad, const std::string& where)
{
    size_t nb = p.bags.size();
    if (nb == 0) {
        bad.push_back(where + "decomposition has no bags");
        return;
    }
    if (p.bag_parent.size() != nb || p.bag_ids.size() != nb || p.subs.size() != nb) {
        bad.push_back(where + "bag tables have inconsistent sizes");
        return;
    }
    std::set<std::string> ids(p.bag_ids.begin(), p.bag_ids.end());
    if (ids.size() != nb) bad.push_back(where + "duplicate bag id");
    int roots = 0;
    for (size_t v = 0; v < nb; ++v) {
        if (p.bag_parent[v] < 0) ++roots;
        else if (p.bag_parent[v] >= static_cast<int>(nb)) bad.push_back(where + "edge names an unknown bag");
    }
    if (roots != 1) {
        bad.push_back(where + "bags do not form a single rooted tree");
        return;
    }
    for (size_t v = 0; v < nb; ++v) {  // acyclicity
        size_t steps = 0;
        for (int u = static_cast<int>(v); u >= 0 && steps <= nb; u = p.bag_parent[u]) ++steps;
        if (steps > nb) {
            bad.push_back(where + "bag edges contain a cycle");
            return;
        }
    }
    size_t before = bad.size();
    int root = p.td_root();
    for (size_t v = 0; v < nb; ++v)
        if (p.bags[v] & ~q.vars()) bad.push_back(where + "bag " + p.bag_ids[v] + " has variables outside the query");
    if (!subset(q.head, p.bags[root])) bad.push_back(where + "head variables are not all in the root bag");
    if (p.covering.size() != q.atoms.size()) {
        bad.push_back(where + "covering must name one bag per atom");
        return;
    }
    for (size_t i = 0; i < q.atoms.size(); ++i) {
        int c = p.covering[i];
        if (c < 0 || c >= static_cast<int>(nb) || !subset(q.atoms[i].mask, p.bags[c]))
            bad.push_back(where + "atom " + atom_text(q, q.atoms[i]) + " is not covered by its bag");
    }
    for_each_var(q.vars(), [&](int x) {
        int tops = 0;
        for (size_t v = 0; v < nb; ++v) {
            if (!has(p.bags[v], x)) continue;
            int par = p.bag_parent[v];
            if (par < 0 || !has(p.bags[par], x)) ++tops;
        }
        if (tops != 1) bad.push_back(where + "bags containing variable " + q.names[x] + " are not connected");
    });
    if (bad.size() != before) return;
    auto sub = td_subqueries(q, p);
    for (size_t v = 0; v < nb; ++v) {
        if (p.subs[v].kind == PlanKind::TD) {
            bad.push_back(where + "bag " + p.bag_ids[v] + ": nested decompositions are not supported");
            continue;
        }
        validate_in(sub[v].q, p.subs[v], 0, bad, where + "bag " + p.bag_ids[v] + ": ");
    }
}

void validate_in(const Query& q, const Plan& p, VarSet required_inputs, std::vector<std::string>& bad,
                 const std::string& where)
{
    switch (p.kind) {
    case PlanKind::GJ: {
        if (required_inputs) bad.push_back(where + "gj plans cannot take input variables");
        VarSet seen = 0;
        bool dup = false;
        for (int v : p.order) {
            if (v < 0 || v >= q.num_ids()) {
                bad.push_back(where + "order names an unknown variable");
                return;
            }
            if (has(seen, v)) dup = true;
            seen |= bit(v);
        }
        if (dup || seen != q.vars()) bad.push_back(where + "order is not a permutation of the query variables");
        break;
    }
    case PlanKind::PT:
    case PlanKind::PTC:
    case PlanKind::PTCR:
    case PlanKind::RPT: validate_tree_plan(q, p, required_inputs, bad, where); break;
    case PlanKind::TD:
        if (required_inputs) bad.push_back(where + "td plans cannot take input variables");
        validate_td(q, p, bad, where);
        break;
    }
}

Rational max_of(const Rational& a, const Rational& b) { return a < b ? b : a; }

Exponent exponents_rpt(const RhoOracle& rho, const Query& q, const Plan& p)
{
    TreeInfo info = analyze_tree(q, p.tree);
    PTCRSets sets = ptcr_sets(p.tree, info, p.cache_size);
    VarSet skip = mask_of(p.inputs);
    for (int a : p.anchors) skip |= info.descc(a);
    Exponent e{0, 0};
    for_each_var(p.tree.nodes & ~skip, [&](int v) {
        VarSet outt = info.descc(v) & q.head;
        VarSet out = info.desc[v] & q.head;
        e.s = max_of(e.s, rho(sets.scon[v] | outt));
        e.t = max_of(e.t, rho(sets.ra[v] | out));
    });
    for (size_t i = 0; i < p.anchors.size(); ++i) {
        RptSubQuery sq = rpt_subquery(q, p.tree, info, sets, p.anchors[i]);
        Exponent se = exponents_rpt(rho, sq.q, p.subs[i]);
        e.s = max_of(e.s, se.s);
        e.t = max_of(e.t, se.t);
    }
    return e;
}

} // namespace

std::vector<std::string> validate(const Query& q, const Plan& p)
{
    std::vector<std::string> bad;
    validate_in(q, p, 0, bad, "");
    return bad;
}

void require_valid(const Query& q, const Plan& p)
{
    auto bad = validate(q, p);
    if (bad.empty()) return;
    std::string msg = "invalid plan: " + bad.front();
    for (size_t i = 1; i < bad.size(); ++i) msg += "; " + bad[i];
    throw PlanError(msg);
}

std::string to_string(const Exponent& e)
{
    return "(" + to_string(e.s) + ", " + to_string(e.t) + ")";
}

Dominance dominates(const Exponent& a, const Exponent& b)
{
    if (a == b) return Dominance::Equal;
    if (weakly_dominates(a, b)) return Dominance::Strict;
    if (weakly_dominates(b, a)) return Dominance::Weak;
    return Dominance::Incomparable;
}

Exponent exponents_gj(const RhoOracle& rho, const std::vector<int>& order)
{
    return {rho(rho.query().head), rho(mask_of(order))};
}

Exponent exponents_pt(const RhoOracle& rho, const PseudoTree& t)
{
    const Query& q = rho.query();
    TreeInfo info = analyze_tree(q, t);
    Exponent e{0, 0};
    for_each_var(t.nodes, [&](int v) {
        e.s = max_of(e.s, rho(info.descc(v) & q.head));
        e.t = max_of(e.t, rho(info.ancc(v) | (info.desc[v] & q.head)));
    });
    return e;
}

Exponent exponents(const RhoOracle& rho, const Plan& p)
{
    const Query& q = rho.query();
    switch (p.kind) {
    case PlanKind::GJ: return exponents_gj(rho, p.order);
    case PlanKind::PT: return exponents_pt(rho, p.tree);
    case PlanKind::PTC: {
        TreeInfo info = analyze_tree(q, p.tree);
        Exponent e{0, 0};
        for_each_var(p.tree.nodes, [&](int v) {
            VarSet outt = info.descc(v) & q.head;
            if (has(p.caches, v)) e.s = max_of(e.s, rho(info.con[v] | outt));
            int b = info.lowest_of(p.caches & info.ancc(v));
            VarSet path = info.ancc(v) & info.descc(b);
            e.t = max_of(e.t, rho(info.con[b] | path | (info.desc[v] & q.head)));
        });
        return e;
    }
    case PlanKind::PTCR:
    case PlanKind::RPT: return exponents_rpt(rho, q, p);
    case PlanKind::TD: {
        auto sub = td_subqueries(q, p, rho.profile());
        Exponent e{0, 0};
        for (size_t v = 0; v < sub.size(); ++v) {
            Rational m = 0;
            for (const auto& c : sub[v].profile.cc) m = max_of(m, c);
            CardinalityProfile norm;
            for (const auto& c : sub[v].profile.cc) norm.cc.push_back(c / m);
            RhoOracle inner(sub[v].q, norm);
            Exponent be = exponents(inner, p.subs[v]);
            e.s = max_of(e.s, be.s * m);
            e.t = max_of(e.t, be.t * m);
        }
        return e;
    }
    }
    throw std::logic_error("unknown plan kind");
}

Exponent exponents(const Query& q, const Plan& p, const CardinalityProfile& profile)
{
    RhoOracle rho(q, profile);
    return exponents(rho, p);
}

} // namespace spq
