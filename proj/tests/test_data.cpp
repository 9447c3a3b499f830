// Queries, rho*, semirings, K-relations, tries, TSV I/O and the generator.

#include "support.hpp"

#include "spq/generate.hpp"
#include "spq/trie.hpp"

#include <doctest.h>

#include <filesystem>
#include <sstream>

using namespace spqtest;

TEST_CASE("parse scalar 3-path")
{
    Query q = parse_query("Q() <- R1(A,B), R2(B,C).");
    CHECK(q.atoms.size() == 2);
    CHECK(q.head == 0);
    CHECK(count(q.vars()) == 3);
    CHECK(q.atoms[1].name == "R2");
    CHECK(q.var_name(q.atoms[1].vars[1]) == "C");
}

TEST_CASE("parse full single atom")
{
    Query q = parse_query("Q(A,B) <- R(A,B).");
    CHECK(q.head == q.vars());
    CHECK(format_query(parse_query(format_query(q))) == format_query(q));
}

TEST_CASE("parse errors")
{
    CHECK_THROWS_AS(parse_query("Q(X) <- R(X,X)."), ParseError);
    CHECK_THROWS_AS(parse_query("Q(A) <- R(B)."), ParseError);
    CHECK_THROWS_AS(parse_query("Q() <- R(A), R(B)."), ParseError);
    try {
        parse_query("Q() <- R1(A,B)\n  R2(B).");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("parser round trip on random queries")
{
    Rng g(5);
    for (int i = 0; i < 200; ++i) {
        Query q = random_query(g);
        Query r = parse_query(format_query(q));
        CHECK(format_query(r) == format_query(q));
        CHECK(r.head == q.head);
    }
}

TEST_CASE("rho* examples")
{
    Query fig2 = fixture_query("fig2");
    CHECK(rho_star(fig2, fig2.vars()).objective == 4);
    Query fig6 = fixture_query("fig6");
    VarSet abd = bit(fig6.find_var("A")) | bit(fig6.find_var("B")) | bit(fig6.find_var("D"));
    auto c = rho_star(fig6, abd);
    CHECK(c.objective == Rational(3, 2));
    CHECK(verify_cover(fig6, abd, c));
    auto empty = rho_star(fig6, 0);
    CHECK(empty.objective == 0);
    for (const auto& w : empty.weights) CHECK(w == 0);
}

TEST_CASE("verify_cover by hand")
{
    Query fig6 = fixture_query("fig6");
    int a = fig6.find_var("A"), b = fig6.find_var("B"), d = fig6.find_var("D");
    VarSet abd = bit(a) | bit(b) | bit(d);
    FractionalEdgeCover c;
    c.weights.assign(fig6.atoms.size(), 0);
    int used = 0;
    for (size_t i = 0; i < fig6.atoms.size(); ++i)
        if (count(fig6.atoms[i].mask & abd) == 2 && subset(fig6.atoms[i].mask, abd)) {
            c.weights[i] = Rational(1, 2);
            ++used;
        }
    c.objective = Rational(used, 2);
    CHECK(used == 3);
    CHECK(verify_cover(fig6, abd, c));

    Query p3 = parse_query("Q() <- R1(A,B), R2(B,C).");
    FractionalEdgeCover bad{{1, 0}, 1};
    CHECK_FALSE(verify_cover(p3, p3.vars(), bad));
    CHECK(verify_cover(p3, 0, FractionalEdgeCover{{0, 0}, 0}));
}

TEST_CASE("rho* agrees with vertex enumeration")
{
    Rng g(17);
    for (int i = 0; i < 100; ++i) {
        Query q = random_query(g, 6, 6);
        VarSet y = 0;
        for (int v : members(q.vars()))
            if (uniform(g, 0, 2)) y |= bit(v);
        auto c = rho_star(q, y);
        CHECK(c.objective == rho_by_vertices(q, y));
        CHECK(verify_cover(q, y, c));
    }
}

TEST_CASE("rho* monotone and subadditive on random sets")
{
    Rng g(23);
    for (int i = 0; i < 100; ++i) {
        Query q = random_query(g);
        VarSet x = 0, y = 0;
        for (int v : members(q.vars())) {
            if (uniform(g, 0, 1)) x |= bit(v);
            if (uniform(g, 0, 1)) y |= bit(v);
        }
        Rational rx = rho_star(q, x).objective, ry = rho_star(q, y).objective;
        Rational rxy = rho_star(q, x | y).objective;
        CHECK(rx <= rxy);
        CHECK(rxy <= rx + ry);
    }
}

TEST_CASE("rho* rejects uncovered variables")
{
    Query q = parse_query("Q() <- R1(A,B).");
    CHECK_THROWS_AS(rho_star(q, bit(5)), QueryError);
}

TEST_CASE("semiring parsing and laws")
{
    CHECK(parse_semiring("minplus") == SemiringId::MinPlus);
    CHECK(semiring_name(SemiringId::Nat) == "nat");
    CHECK_THROWS(parse_semiring("tropical?"));
    CHECK(MinPlusSR::plus(2, 3) == 2);
    CHECK(MinPlusSR::times(MinPlusSR::zero(), 3) == MinPlusSR::zero());
    CHECK_THROWS_AS(NatSR::times(~0ull, 2), SemiringError);
    CHECK(RealSR::eq(1.0, 1.0 + 1e-12));
    CHECK_FALSE(RealSR::eq(1.0, 1.0 + 1e-6));
}

TEST_CASE("trie reorders and restricts")
{
    auto r = KRelation<NatSR>::from_rows({0, 1}, {{{1, 2}, 5}, {{1, 3}, 7}});
    Trie<NatSR> t(r, {1, 0});
    KRelation<NatSR> back = t.to_relation();
    CHECK(back.schema() == std::vector<int>{1, 0});
    CHECK(back.tuple(0) == Tuple{2, 1});
    CHECK(back.value(0) == 5);
    CHECK(back.tuple(1) == Tuple{3, 1});

    auto s = KRelation<NatSR>::from_rows({0, 1}, {{{1, 2}, 1}, {{1, 3}, 1}, {{2, 9}, 1}});
    Trie<NatSR> ts(s, {0, 1});
    CHECK(ts.restricted_support({1}, 1) == std::vector<Value>{2, 3});
    CHECK(ts.restricted_support({7}, 1).empty());
    Trie<NatSR> te(KRelation<NatSR>({0, 1}), {1, 0});
    CHECK(te.size() == 0);
}

TEST_CASE("trie restricted support matches filter oracle")
{
    Rng g(3);
    for (int it = 0; it < 50; ++it) {
        Query q = parse_query("Q() <- R(A,B,C).");
        auto rels = random_relations<NatSR>(q, g, 4);
        Trie<NatSR> t(rels[0], {0, 1, 2});
        Value a = static_cast<Value>(uniform(g, 0, 4)), b = static_cast<Value>(uniform(g, 0, 4));
        std::vector<Value> expect;
        for (auto& [tu, v] : rels[0].rows())
            if (tu[0] == a && tu[1] == b) expect.push_back(tu[2]);
        CHECK(t.restricted_support({a, b}, 2) == expect);
        // to_relation is a sorted copy
        CHECK(t.to_relation().equals(rels[0]));
    }
}

TEST_CASE("kjoin and marginalize")
{
    auto scalar = KRelation<NatSR>::from_rows({}, {{{}, 2}});
    auto c = KRelation<NatSR>::from_rows({2}, {{{0}, 3}});
    auto j = kjoin(scalar, c);
    CHECK(j.size() == 1);
    CHECK(j.value(0) == 6);
    CHECK(kjoin(c, KRelation<NatSR>({2})).empty());

    auto ab = KRelation<NatSR>::from_rows({0, 1}, {{{0, 1}, 2}, {{0, 2}, 3}});
    auto m = marginalize(ab, bit(0));
    CHECK(m.size() == 1);
    CHECK(m.value(0) == 5);
    auto abm = KRelation<MinPlusSR>::from_rows({0, 1}, {{{0, 1}, 2}, {{0, 2}, 3}});
    CHECK(marginalize(abm, bit(0)).value(0) == 2);
}

TEST_CASE("kjoin matches nested loops")
{
    Rng g(8);
    Query q = parse_query("Q() <- R(A,B,C), S(C,D,E).");
    for (int it = 0; it < 30; ++it) {
        auto rels = random_relations<NatSR>(q, g, 3);
        auto j = kjoin(rels[0], rels[1]);
        std::vector<std::pair<Tuple, std::uint64_t>> rows;
        for (auto& [x, xv] : rels[0].rows())
            for (auto& [y, yv] : rels[1].rows())
                if (x[2] == y[0]) rows.push_back({{x[0], x[1], x[2], y[1], y[2]}, xv * yv});
        CHECK(j.equals(KRelation<NatSR>::from_rows({0, 1, 2, 3, 4}, rows)));
        // marginalize against full enumeration
        VarSet keep = static_cast<VarSet>(uniform(g, 0, 31));
        auto m = marginalize(j, keep);
        std::map<Tuple, std::uint64_t> sums;
        for (auto& [t, v] : rows) {
            Tuple k;
            for (int c = 0; c < 5; ++c)
                if (has(keep, c)) k.push_back(t[c]);
            sums[k] += v;
        }
        CHECK(m.size() == sums.size());
        for (size_t i = 0; i < m.size(); ++i) CHECK(sums[m.tuple(i)] == m.value(i));
    }
}

TEST_CASE("load the tiny nat database")
{
    Query q = fixture_query("path3");
    Dictionary dict;
    auto db = load_database<NatSR>(q, fixture("path3_nat"), dict);
    CHECK(db.size() == 4);
    CHECK(eval_oracle(q, db).value(0) == 60);
}

TEST_CASE("database errors")
{
    Query q = fixture_query("path3");
    Dictionary dict;
    CHECK_THROWS_AS(load_database<NatSR>(q, "/nonexistent-dir", dict), DataError);
    std::istringstream in("A\tB\t#value\na\tb\n");
    TsvTable t = read_tsv(in, "inline");
    CHECK_THROWS_AS(relation_from_tsv<NatSR>(t, {0, 1}, dict, "inline"), DataError);
    std::istringstream in2("A\tB\tC\t#value\na\tb\tc\t1\n");
    CHECK_THROWS_AS(relation_from_tsv<NatSR>(read_tsv(in2, "x"), {0, 1}, dict, "x"), DataError);
}

TEST_CASE("TSV round trip of generated databases")
{
    auto dir = std::filesystem::temp_directory_path() / "spq_tsv_round_trip";
    for (const char* f : {"path3", "fig6", "cycle4"}) {
        Query q = fixture_query(f);
        with_semiring(SemiringId::MinPlus, [&](auto sr) {
            using S = decltype(sr);
            Dictionary d1, d2;
            auto db = generate_instance<S>(q, 40, 9, Shape::Random, d1);
            std::filesystem::remove_all(dir);
            std::filesystem::create_directories(dir);
            write_database(dir.string(), q, db, d1);
            auto back = load_database<S>(q, dir.string(), d2);
            auto lines = [](const std::string& text) {
                std::vector<std::string> out;
                std::istringstream in(text);
                for (std::string l; std::getline(in, l);) out.push_back(l);
                std::sort(out.begin() + 1, out.end());
                return out;
            };
            for (const auto& a : q.atoms)
                CHECK(lines(relation_text(back.at(a.name), q, d2)) == lines(relation_text(db.at(a.name), q, d1)));
            return 0;
        });
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("result TSV reloads to the same relation")
{
    Rng g(4);
    auto dir = std::filesystem::temp_directory_path() / "spq_result_round_trip";
    std::filesystem::create_directories(dir);
    for (int it = 0; it < 20; ++it) {
        Query q = random_query(g, 5, 5);
        if (!q.head) continue;
        auto rels = random_relations<NatSR>(q, g, 4);
        auto out = eval_oracle(q, rels);
        Dictionary d;
        for (int i = 0; i < 8; ++i) d.encode(std::to_string(i));
        std::string path = (dir / "out.tsv").string();
        write_text_file(path, relation_text(out, q, d));
        Dictionary d2;
        for (int i = 0; i < 8; ++i) d2.encode(std::to_string(i));
        auto back = relation_from_tsv<NatSR>(read_tsv_file(path), output_schema(q), d2, path);
        CHECK(back.equals(out));
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("generator is deterministic and sized")
{
    Query q = fixture_query("path3");
    Dictionary d1, d2;
    auto a = generate_instance<NatSR>(q, 100, 7, Shape::Random, d1);
    auto b = generate_instance<NatSR>(q, 100, 7, Shape::Random, d2);
    CHECK(a.at("R1").size() == 100);
    CHECK(a.at("R2").size() == 100);
    CHECK(a.at("R1").equals(b.at("R1")));
    CHECK(a.at("R2").equals(b.at("R2")));
    Dictionary d3;
    auto c = generate_instance<NatSR>(fixture_query("cycle4"), 64, 1, Shape::Random, d3);
    for (const auto& [name, r] : c.relations) CHECK(r.size() > 0);
    CHECK(parse_shape("worst_case_hint") == Shape::WorstCaseHint);
    CHECK_THROWS(parse_shape("zipf"));
}
