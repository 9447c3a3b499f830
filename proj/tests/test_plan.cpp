// Plan structure, validation, derived sets and exponents.

#include "support.hpp"

#include <doctest.h>

using namespace spqtest;

namespace {

Plan fixture_plan(const Query& q, const std::string& name) { return load_plan(q, fixture(name + ".json")); }

Exponent ex(Rational s, Rational t) { return {s, t}; }

VarSet vars_of(const Query& q, const std::string& names)
{
    VarSet s = 0;
    for (char c : names) s |= bit(q.find_var(std::string(1, c)));
    return s;
}

PseudoTree chain(const Query& q, const std::string& names)
{
    std::vector<int> order;
    for (char c : names) order.push_back(q.find_var(std::string(1, c)));
    return PseudoTree::chain(q, order);
}

} // namespace

TEST_CASE("fixture exponents")
{
    Query fig2 = fixture_query("fig2");
    CHECK(exponents(fig2, fixture_plan(fig2, "fig2_pt")) == ex(0, Rational(3, 2)));
    Query fig2_df = fixture_query("fig2_df");
    CHECK(exponents(fig2_df, fixture_plan(fig2_df, "fig2_pt")) == ex(2, 2));
    CHECK(exponents(fig2, fixture_plan(fig2, "fig2_gj")) == ex(0, 4));

    Query fig4 = fixture_query("fig4");
    CHECK(exponents(fig4, fixture_plan(fig4, "fig4_td_gj")) == ex(1, Rational(5, 2)));
    CHECK(exponents(fig4, fixture_plan(fig4, "fig4_td_pt")) == ex(1, 2));
    CHECK(exponents(fig4, fixture_plan(fig4, "fig4_pt")) == ex(0, 2));

    Query fig6 = fixture_query("fig6");
    CHECK(exponents(fig6, fixture_plan(fig6, "fig6_ptc")) == ex(Rational(3, 2), 2));
    CHECK(exponents(fig6, fixture_plan(fig6, "fig6_ptcr")) == ex(1, 2));

    Query cycle4 = fixture_query("cycle4");
    CHECK(exponents(cycle4, fixture_plan(cycle4, "cycle4_td_gj")) == ex(2, 2));

    Query fig11 = fixture_query("fig11");
    CHECK(exponents(fig11, fixture_plan(fig11, "fig11_rpt")) == ex(1, Rational(5, 2)));

    Query fig9 = fixture_query("fig9");
    CHECK(exponents(fig9, fixture_plan(fig9, "fig9_td_pt")) == ex(1, 2));

    Query path3 = fixture_query("path3");
    CHECK(exponents(path3, fixture_plan(path3, "path3_pt_star")) == ex(0, 1));
    Query path4 = fixture_query("path4");
    CHECK(exponents(path4, fixture_plan(path4, "path4_td_gj")) == ex(1, 1));
    CHECK(exponents(path4, fixture_plan(path4, "path4_pt_chain")) == ex(0, 2));
    CHECK(exponents(path4, fixture_plan(path4, "path4_ptc_cd")) == ex(1, 1));
}

TEST_CASE("every fixture plan validates and round-trips")
{
    std::vector<std::pair<std::string, std::string>> pairs = {
        {"fig2", "fig2_pt"},       {"fig2", "fig2_gj"},        {"fig4", "fig4_pt"},
        {"fig4", "fig4_td_gj"},    {"fig4", "fig4_td_pt"},     {"fig6", "fig6_ptc"},
        {"fig6", "fig6_ptcr"},     {"fig7", "fig7_ptcr"},      {"fig9", "fig9_td_pt"},
        {"fig11", "fig11_rpt"},    {"cycle4", "cycle4_td_gj"}, {"path3", "path3_chain"},
        {"path3", "path3_pt_star"}, {"path4", "path4_pt_chain"}, {"path4", "path4_ptc_cd"},
        {"path4", "path4_td_gj"}};
    for (const auto& [qn, pn] : pairs) {
        CAPTURE(pn);
        Query q = fixture_query(qn);
        Plan p = fixture_plan(q, pn);
        CHECK(validate(q, p).empty());
        Plan back = parse_plan(q, format_plan(q, p));
        CHECK(back == p);
        CHECK(format_plan(q, back) == format_plan(q, p));
    }
}

TEST_CASE("validate pseudo-trees on the 3-path")
{
    Query q = fixture_query("path3");
    int a = q.find_var("A"), b = q.find_var("B"), c = q.find_var("C");
    std::vector<int> par(q.num_ids(), -1);
    par[a] = b;
    par[c] = b;
    CHECK(validate(q, make_pt(PseudoTree::from_parents(q, q.vars(), par))).empty());
    std::vector<int> par2(q.num_ids(), -1);
    par2[b] = a;
    par2[c] = a;
    auto bad = validate(q, make_pt(PseudoTree::from_parents(q, q.vars(), par2)));
    REQUIRE_FALSE(bad.empty());
    CHECK(bad.front().find("R2") != std::string::npos);
    CHECK_THROWS_AS(require_valid(q, make_pt(PseudoTree::from_parents(q, q.vars(), par2))), PlanError);
}

TEST_CASE("plan documents that do not fit the query")
{
    Query q = fixture_query("path3");
    CHECK_THROWS_AS(parse_plan(q, R"({"kind":"pt","tree":{"var":"Z","children":[]}})"), PlanError);
    CHECK_THROWS_AS(parse_plan(q, "{not json"), PlanError);
    CHECK_THROWS_AS(parse_plan(q, R"({"kind":"banana"})"), PlanError);
    CHECK_THROWS_AS(load_plan(q, "/nonexistent.json"), PlanError);
}

TEST_CASE("contexts")
{
    Query fig6 = fixture_query("fig6");
    PseudoTree t = chain(fig6, "ABCDEF");
    CHECK(context(fig6, t, fig6.find_var("E")) == vars_of(fig6, "ABD"));
    CHECK(context(fig6, t, fig6.find_var("A")) == 0);
    Query fig7 = fixture_query("fig7");
    CHECK(context(fig7, chain(fig7, "ABCDE"), fig7.find_var("D")) == vars_of(fig7, "BC"));
}

TEST_CASE("icon/scon and relevant ancestors on the pentagon plan")
{
    Query q = fixture_query("fig7");
    Plan p = fixture_plan(q, "fig7_ptcr");
    TreeInfo info = analyze_tree(q, p.tree);
    PTCRSets s = ptcr_sets(p.tree, info, p.cache_size);
    int d = q.find_var("D"), e = q.find_var("E"), a = q.find_var("A");
    CHECK(s.icon[d] == 0);
    CHECK(s.scon[d] == vars_of(q, "BC"));
    CHECK(s.icon[e] == vars_of(q, "B"));
    CHECK(s.scon[e] == vars_of(q, "D"));
    CHECK(s.ria[e] == vars_of(q, "B"));
    CHECK(s.ria[d] == 0);
    CHECK(s.ria[a] == 0);
    // no cache: everything is instantiated
    std::vector<int> none(q.num_ids(), 0);
    PTCRSets z = ptcr_sets(p.tree, info, none);
    for (int v : members(q.vars())) {
        CHECK(z.icon[v] == info.con[v]);
        CHECK(z.scon[v] == 0);
    }
}

TEST_CASE("domination")
{
    CHECK(dominates(ex(0, 1), ex(1, 1)) == Dominance::Strict);
    CHECK(dominates(ex(1, 1), ex(0, 1)) == Dominance::Weak);
    CHECK(dominates(ex(Rational(3, 2), 2), ex(1, Rational(5, 2))) == Dominance::Incomparable);
    CHECK(dominates(ex(1, 2), ex(1, 2)) == Dominance::Equal);
}

TEST_CASE("tree decomposition sub-queries")
{
    Query c4 = fixture_query("cycle4");
    Plan td = fixture_plan(c4, "cycle4_td_gj");
    auto subs = td_subqueries(c4, td);
    REQUIRE(subs.size() == 2);
    int leaf = td.bag_parent[0] == -1 ? 1 : 0;
    const BagQuery& w = subs[leaf];
    CHECK(w.q.head == (bit(c4.find_var("A1")) | bit(c4.find_var("A3"))));
    CHECK(w.separator == w.q.head);
    // each source atom is annotated in exactly one bag
    std::vector<int> owners(c4.atoms.size(), 0);
    for (const auto& b : subs)
        for (size_t i = 0; i < b.q.atoms.size(); ++i)
            if (b.source[i] >= 0 && b.annotated[i]) ++owners[b.source[i]];
    for (int o : owners) CHECK(o == 1);
    const BagQuery& r = subs[1 - leaf];
    for (size_t i = 0; i < r.q.atoms.size(); ++i)
        if (r.source[i] >= 0 && r.q.atoms[i].mask != c4.atoms[r.source[i]].mask) CHECK_FALSE(r.annotated[i]);

    Query fig2 = fixture_query("fig2");
    Plan single = single_bag_td(fig2, fixture_plan(fig2, "fig2_pt"));
    REQUIRE(validate(fig2, single).empty());
    auto one = td_subqueries(fig2, single);
    REQUIRE(one.size() == 1);
    CHECK(format_query(one[0].q) == format_query(fig2));

    Query fig9 = fixture_query("fig9");
    Plan td9 = fixture_plan(fig9, "fig9_td_pt");
    std::set<VarSet> seps;
    for (const auto& b : td_subqueries(fig9, td9))
        if (b.separator) seps.insert(b.separator);
    CHECK(seps == std::set<VarSet>{vars_of(fig9, "DE"), vars_of(fig9, "GH")});
}

TEST_CASE("single-bag decomposition costs the same as its inner plan")
{
    Rng g(13);
    for (int it = 0; it < 100; ++it) {
        Query q = random_query(g);
        Plan inner = make_pt(random_pt(q, g));
        Plan td = single_bag_td(q, inner);
        REQUIRE(validate(q, td).empty());
        CHECK(exponents(q, td) == exponents(q, inner));
    }
}

TEST_CASE("exponent laws on random plans")
{
    Rng g(31);
    for (int it = 0; it < 150; ++it) {
        Query q = random_query(g);
        RhoOracle rho(q);
        Rational full = rho(q.vars());
        PseudoTree t = random_pt(q, g);
        Exponent pt = exponents(q, make_pt(t));
        // PT time never exceeds generic join, space is the output bound
        CHECK(pt.t <= full);
        CHECK(pt.s <= rho(q.head));
        // root-only caching is plain PT
        CHECK(exponents(q, make_ptc(t, bit(t.root))) == pt);
        // full resettable caches equal caching at every node
        TreeInfo info = analyze_tree(q, t);
        std::vector<int> cs(q.num_ids(), 0);
        for (int v : members(q.vars())) cs[v] = count(info.con[v]);
        CHECK(exponents(q, make_ptcr(t, cs)) == exponents(q, make_ptc(t, q.vars())));
        // a chain is a generic-join order
        auto order = random_order(q, g);
        CHECK(exponents(q, make_gj(order)) == exponents(q, make_pt(PseudoTree::chain(q, order))));
        // zero-replacement rpt is ptcr
        Plan base = random_ptcr(q, g);
        Plan r = base;
        r.kind = PlanKind::RPT;
        if (validate(q, r).empty()) CHECK(exponents(q, r) == exponents(q, base));
    }
}
