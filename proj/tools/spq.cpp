// Command-line front end: eval, validate, frontier, best-time, slope, gen.

#include "spq/eval.hpp"
#include "spq/four_cycle.hpp"
#include "spq/generate.hpp"
#include "spq/plan_io.hpp"
#include "spq/search.hpp"
#include "spq/slope.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace spq;

namespace {

enum Exit { kOk = 0, kFail = 1, kParse = 2, kPlan = 3, kData = 4, kBudget = 5 };

struct ExitError {
    int code;
    std::string msg;
};

struct Config {
    std::string query, data, semiring = "nat", plan, cls, space_budget, out, shape = "random";
    bool meter = false, assert_lex = false, four_cycle = false;
    std::uint64_t seed = 1;
    int jobs = 1, rpt_depth = 2;
    std::vector<size_t> sizes;
    std::uint64_t budget_plans = 0;
    double budget_seconds = 0, tolerance = 0.25;
};

Query get_query(const Config& c)
{
    try {
        return load_query(c.query);
    } catch (const ParseError& e) {
        throw ExitError{kParse, c.query + ":" + e.what()};
    } catch (const std::exception& e) {
        throw ExitError{kParse, e.what()};
    }
}

Plan get_plan(const Query& q, const Config& c)
{
    try {
        Plan p = load_plan(q, c.plan);
        require_valid(q, p);
        return p;
    } catch (const std::exception& e) {
        throw ExitError{kPlan, c.plan + ": " + e.what()};
    }
}

SemiringId get_semiring(const Config& c)
{
    try {
        return parse_semiring(c.semiring);
    } catch (const std::exception& e) {
        throw ExitError{kParse, e.what()};
    }
}

Rational get_rational(const std::string& s, const std::string& what)
{
    try {
        return parse_rational(s);
    } catch (const std::exception& e) {
        throw ExitError{kParse, "bad " + what + " '" + s + "': " + e.what()};
    }
}

SearchClass get_class(const Config& c)
{
    try {
        return parse_class(c.cls);
    } catch (const std::exception& e) {
        throw ExitError{kParse, e.what()};
    }
}

SearchBudget get_budget(const Config& c)
{
    if (c.budget_seconds < 0) throw ExitError{kParse, "--budget-seconds must be positive"};
    if (c.jobs < 1) throw ExitError{kParse, "--jobs must be positive"};
    SearchBudget b;
    b.max_plans = c.budget_plans;
    b.max_seconds = c.budget_seconds;
    b.jobs = c.jobs;
    b.rpt_depth = c.rpt_depth;
    if (!c.space_budget.empty()) b.space_cap = get_rational(c.space_budget, "--space-budget");
    return b;
}

Shape get_shape(const Config& c)
{
    try {
        return parse_shape(c.shape);
    } catch (const std::exception& e) {
        throw ExitError{kParse, e.what()};
    }
}

std::string file_tag(const std::string& s)
{
    std::string out;
    for (char ch : s) out += (ch == '/' || ch == '[' || ch == ']') ? (ch == '/' ? '_' : '-') : ch;
    while (!out.empty() && out.back() == '-') out.pop_back();
    return out;
}

std::string write_witness(const Query& q, const std::string& dir, SearchClass cls, const Exponent& e, const Plan& p)
{
    std::filesystem::create_directories(dir);
    std::string path = dir + "/" + file_tag(class_name(cls)) + "_s" + file_tag(to_string(e.s)) + "_t" +
                       file_tag(to_string(e.t)) + ".json";
    std::ofstream out(path);
    if (!out) throw ExitError{kFail, "cannot write " + path};
    out << format_plan(q, p) << "\n";
    return path;
}

template <class F>
auto searching(F&& f)
{
    try {
        return f();
    } catch (const SearchError& e) {
        throw ExitError{kParse, e.what()};
    }
}

// Plan chosen for `eval --class`: least t within the space budget, else the
// least t overall.
Plan search_plan(const Query& q, const Config& c)
{
    SearchClass cls = get_class(c);
    SearchBudget b = get_budget(c);
    if (b.space_cap) {
        BestTime r = searching([&] { return best_time_given_space(q, cls, *b.space_cap, b); });
        if (!r.exhaustive) std::cerr << "warning: search budget exhausted, plan may not be optimal\n";
        if (!r.feasible) throw ExitError{r.exhaustive ? kFail : kBudget, "no plan fits the space budget"};
        return r.witness;
    }
    Frontier f = searching([&] { return pareto_frontier(q, cls, b); });
    if (!f.exhaustive) std::cerr << "warning: search budget exhausted, plan may not be optimal\n";
    if (f.points.empty()) throw ExitError{kBudget, "search found no plan within budget"};
    return f.points.back().witness;  // least t
}

template <class S>
int eval_with(const Query& q, const Config& c)
{
    std::optional<Plan> given;
    if (!c.plan.empty()) given = get_plan(q, c);
    Dictionary dict;
    Database<S> db;
    try {
        db = load_database<S>(q, c.data, dict);
    } catch (const std::exception& e) {
        throw ExitError{kData, e.what()};
    }
    EvalResult<S> res;
    try {
        if (c.four_cycle) {
            res = eval_four_cycle(q, db);
        } else {
            Plan p = given ? *given : search_plan(q, c);
            EvalOptions o;
            o.assert_lex = c.assert_lex;
            res = evaluate(q, db, p, o);
        }
    } catch (const DataError& e) {
        throw ExitError{kData, e.what()};
    } catch (const PlanError& e) {
        throw ExitError{kPlan, e.what()};
    } catch (const EvalError& e) {
        throw ExitError{kPlan, e.what()};
    }
    std::string text = relation_text(res.output, q, dict);
    if (c.out.empty()) {
        std::cout << text;
    } else {
        try {
            write_text_file(c.out, text);
        } catch (const std::exception& e) {
            throw ExitError{kFail, e.what()};
        }
    }
    if (c.meter) std::cerr << res.meter.report();
    return kOk;
}

int cmd_eval(const Config& c)
{
    int given = !c.plan.empty() + !c.cls.empty() + c.four_cycle;
    if (given != 1) throw ExitError{kParse, "eval needs exactly one of --plan, --class or --four-cycle"};
    Query q = get_query(c);
    return with_semiring(get_semiring(c), [&](auto sr) { return eval_with<decltype(sr)>(q, c); });
}

int cmd_validate(const Config& c)
{
    Query q = get_query(c);
    Plan p;
    try {
        p = load_plan(q, c.plan);
    } catch (const std::exception& e) {
        throw ExitError{kPlan, c.plan + ": " + e.what()};
    }
    auto bad = validate(q, p);
    if (!bad.empty()) {
        for (const auto& b : bad) std::cerr << "invalid: " << b << "\n";
        return kPlan;
    }
    Exponent e = exponents(q, p);
    std::cout << "valid " << describe_plan(q, p) << "\n";
    std::cout << "s=" << to_string(e.s) << " t=" << to_string(e.t) << "\n";
    return kOk;
}

int cmd_frontier(const Config& c)
{
    Query q = get_query(c);
    SearchClass cls = get_class(c);
    SearchBudget b = get_budget(c);
    Frontier f = searching([&] { return pareto_frontier(q, cls, b); });
    std::string dir = c.out.empty() ? "spq_frontier" : c.out;
    if (cls == SearchClass::TD_GJ || cls == SearchClass::TD_PT || cls == SearchClass::TD_PTCR)
        std::cout << "# elimination-order TDs\n";
    for (const auto& p : f.points)
        std::cout << "s=" << to_string(p.e.s) << " t=" << to_string(p.e.t)
                  << " plan=" << write_witness(q, dir, cls, p.e, p.witness) << "\n";
    std::cout << "# examined=" << f.examined << "\n";
    if (!f.exhaustive) {
        std::cout << "NONEXHAUSTIVE\n";
        return kBudget;
    }
    return kOk;
}

int cmd_best_time(const Config& c)
{
    if (c.space_budget.empty()) throw ExitError{kParse, "best-time needs --space-budget"};
    Query q = get_query(c);
    SearchClass cls = get_class(c);
    SearchBudget b = get_budget(c);
    BestTime r = searching([&] { return best_time_given_space(q, cls, *b.space_cap, b); });
    if (r.feasible) {
        std::string dir = c.out.empty() ? "spq_frontier" : c.out;
        std::cout << "s=" << to_string(r.e.s) << " t=" << to_string(r.e.t)
                  << " plan=" << write_witness(q, dir, cls, r.e, r.witness) << "\n";
    } else {
        std::cout << "infeasible\n";
    }
    if (!r.exhaustive) {
        std::cout << "NONEXHAUSTIVE\n";
        return kBudget;
    }
    return kOk;
}

template <class S>
SlopeReport slope_with(const Query& q, const Config& c, double& ps, double& pt)
{
    std::function<EvalResult<S>(const Database<S>&)> run;
    if (c.four_cycle) {
        ps = 0.5;
        pt = 1.5;
        run = [&](const Database<S>& db) { return eval_four_cycle(q, db); };
    } else {
        Plan p = get_plan(q, c);
        Exponent e = exponents(q, p);
        ps = to_double(e.s);
        pt = to_double(e.t);
        EvalOptions o;
        o.assert_lex = c.assert_lex;
        run = [p, o, &q](const Database<S>& db) { return evaluate(q, db, p, o); };
    }
    try {
        return measure_slopes<S>(q, run, c.sizes, c.seed, get_shape(c), ps, pt, c.tolerance);
    } catch (const std::invalid_argument& e) {
        throw ExitError{kParse, e.what()};
    } catch (const EvalError& e) {
        throw ExitError{kPlan, e.what()};
    }
}

int cmd_slope(const Config& c)
{
    if (c.plan.empty() == !c.four_cycle) throw ExitError{kParse, "slope needs exactly one of --plan or --four-cycle"};
    Query q = get_query(c);
    double ps = 0, pt = 0;
    SlopeReport r = with_semiring(get_semiring(c), [&](auto sr) { return slope_with<decltype(sr)>(q, c, ps, pt); });
    std::cout << "predicted s=" << ps << " t=" << pt << " tolerance=" << c.tolerance << "\n" << r.text();
    std::cout << (r.pass() ? "PASS" : "FAIL") << "\n";
    return r.pass() ? kOk : kFail;
}

int cmd_gen(const Config& c)
{
    if (c.data.empty()) throw ExitError{kParse, "gen needs --data"};
    if (c.sizes.size() != 1) throw ExitError{kParse, "gen needs exactly one size in --sizes"};
    Query q = get_query(c);
    Shape shape = get_shape(c);
    with_semiring(get_semiring(c), [&](auto sr) {
        using S = decltype(sr);
        Dictionary dict;
        Database<S> db = generate_instance<S>(q, c.sizes.front(), c.seed, shape, dict);
        std::filesystem::create_directories(c.data);
        try {
            write_database(c.data, q, db, dict);
        } catch (const std::exception& e) {
            throw ExitError{kFail, e.what()};
        }
        return 0;
    });
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sum-product query plans: evaluation, exponents and plan search"};
    app.require_subcommand(1);
    Config c;

    auto query = [&](CLI::App* s) { s->add_option("--query", c.query, "query file")->required(); };
    auto search_flags = [&](CLI::App* s) {
        s->add_option("--class", c.cls, "gj, pt, ptc, ptcr, rpt, td[gj], td[pt] or td[ptcr]");
        s->add_option("--space-budget", c.space_budget, "space exponent cap as p/q");
        s->add_option("--jobs", c.jobs, "search workers");
        s->add_option("--budget-plans", c.budget_plans, "stop after this many candidate evaluations");
        s->add_option("--budget-seconds", c.budget_seconds, "stop after this many seconds");
        s->add_option("--rpt-depth", c.rpt_depth, "replacement nesting for rpt");
    };

    auto* eval = app.add_subcommand("eval", "evaluate a query on a database");
    query(eval);
    eval->add_option("--data", c.data, "directory with one <Relation>.tsv per atom")->required();
    eval->add_option("--semiring", c.semiring, "bool, nat, real or minplus");
    eval->add_option("--plan", c.plan, "plan file");
    eval->add_flag("--four-cycle", c.four_cycle, "use the heavy/light four-cycle algorithm");
    eval->add_flag("--meter", c.meter, "print steps/aux_cells_peak/index_cells on stderr");
    eval->add_flag("--assert-lex", c.assert_lex, "check lexicographic arrival at resettable caches");
    eval->add_option("--out", c.out, "write the result here instead of stdout");
    search_flags(eval);

    auto* val = app.add_subcommand("validate", "check a plan and print its exponents");
    query(val);
    val->add_option("--plan", c.plan, "plan file")->required();

    auto* fr = app.add_subcommand("frontier", "Pareto frontier of a plan class");
    query(fr);
    search_flags(fr);
    fr->get_option("--class")->required();
    fr->add_option("--out", c.out, "directory for witness plans (default spq_frontier)");

    auto* bt = app.add_subcommand("best-time", "least time exponent within a space budget");
    query(bt);
    search_flags(bt);
    bt->get_option("--class")->required();
    bt->add_option("--out", c.out, "directory for the witness plan (default spq_frontier)");

    auto* sl = app.add_subcommand("slope", "fit measured growth against predicted exponents");
    query(sl);
    sl->add_option("--plan", c.plan, "plan file");
    sl->add_flag("--four-cycle", c.four_cycle, "measure the four-cycle algorithm");
    sl->add_option("--semiring", c.semiring, "bool, nat, real or minplus");
    sl->add_option("--sizes", c.sizes, "tuples per relation, at least 4, increasing")
        ->delimiter(',')
        ->default_val(std::vector<size_t>{1024, 2048, 4096, 8192, 16384, 32768, 65536});
    sl->add_option("--seed", c.seed, "generator seed");
    sl->add_option("--shape", c.shape, "random or worst_case_hint");
    sl->add_option("--tolerance", c.tolerance, "allowed excess over the predicted exponents");
    sl->add_flag("--assert-lex", c.assert_lex, "check lexicographic arrival at resettable caches");

    auto* gen = app.add_subcommand("gen", "write a generated database");
    query(gen);
    gen->add_option("--data", c.data, "output directory")->required();
    gen->add_option("--sizes", c.sizes, "tuples per relation")->delimiter(',')->required();
    gen->add_option("--seed", c.seed, "generator seed");
    gen->add_option("--semiring", c.semiring, "bool, nat, real or minplus");
    gen->add_option("--shape", c.shape, "random or worst_case_hint");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kParse;
    }

    try {
        if (*eval) return cmd_eval(c);
        if (*val) return cmd_validate(c);
        if (*fr) return cmd_frontier(c);
        if (*bt) return cmd_best_time(c);
        if (*sl) return cmd_slope(c);
        if (*gen) return cmd_gen(c);
    } catch (const ExitError& e) {
        std::cerr << "error: " << e.msg << "\n";
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFail;
    }
    return kFail;
}
