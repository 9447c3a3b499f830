#include "spq/query.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace spq {

VarSet Query::vars() const
{
    VarSet m = 0;
    for (const auto& a : atoms) m |= a.mask;
    return m;
}

int Query::find_var(const std::string& name) const
{
    for (int i = 0; i < num_ids(); ++i)
        if (names[i] == name) return i;
    return -1;
}

int Query::find_atom(const std::string& name) const
{
    for (size_t i = 0; i < atoms.size(); ++i)
        if (atoms[i].name == name) return static_cast<int>(i);
    return -1;
}

VarSet Query::neighbours(VarSet s) const
{
    VarSet n = s;
    for (const auto& a : atoms)
        if (a.mask & s) n |= a.mask;
    return n;
}

std::string Query::set_name(VarSet s) const
{
    std::string out;
    VarSet known = 0;
    for (int v : members(s))
        if (v < static_cast<int>(names.size())) known |= bit(v);
    for (int v : sorted_by_name(*this, known)) out += names[v];
    for (int v : members(s & ~known)) out += "#" + std::to_string(v);
    return out;
}

int Query::intern(const std::string& var)
{
    int id = find_var(var);
    if (id >= 0) return id;
    if (num_ids() >= kMaxVars) throw QueryError("more than 64 variables");
    names.push_back(var);
    return num_ids() - 1;
}

void Query::add_atom(const std::string& name, const std::vector<int>& vs)
{
    if (vs.empty()) throw QueryError("atom " + name + " has arity 0");
    VarSet m = 0;
    for (int v : vs) {
        if (has(m, v)) throw QueryError("variable " + names.at(v) + " repeats in atom " + name);
        m |= bit(v);
    }
    atoms.push_back({name, vs, m});
}

void Query::check() const
{
    for (size_t i = 0; i < atoms.size(); ++i)
        for (size_t j = i + 1; j < atoms.size(); ++j)
            if (atoms[i].name == atoms[j].name)
                throw QueryError("duplicate relation name " + atoms[i].name);
    if (!subset(head, vars()))
        throw QueryError("head variable " + set_name(head & ~vars()) + " not in body");
}

std::vector<int> sorted_by_name(const Query& q, VarSet s)
{
    auto v = members(s);
    std::sort(v.begin(), v.end(), [&](int a, int b) { return q.names[a] < q.names[b]; });
    return v;
}

namespace {

class Parser {
public:
    explicit Parser(const std::string& t) : text_(t) {}

    Query parse()
    {
        Query q;
        skip();
        auto [hname, hl, hc] = ident();
        q.head_name = hname;
        auto head = var_list(q);
        for (int v : head.first) {
            if (has(q.head, v)) fail("head variable " + q.names[v] + " repeats", hl, hc);
            q.head |= bit(v);
        }
        skip();
        expect("<-");
        while (true) {
            skip();
            auto [name, l, c] = ident();
            if (q.find_atom(name) >= 0) fail("duplicate relation name " + name, l, c);
            auto [vs, pos] = var_list(q);
            if (vs.empty()) fail("atom " + name + " has arity 0", l, c);
            VarSet seen = 0;
            for (size_t i = 0; i < vs.size(); ++i) {
                if (has(seen, vs[i]))
                    fail("variable " + q.names[vs[i]] + " repeats in atom " + name,
                         pos[i].first, pos[i].second);
                seen |= bit(vs[i]);
            }
            q.add_atom(name, vs);
            skip();
            if (peek() == ',') {
                advance();
                continue;
            }
            expect(".");
            break;
        }
        skip();
        if (i_ < text_.size()) fail("unexpected text after query", line_, col_);
        VarSet body = q.vars();
        for (int v : members(q.head))
            if (!has(body, v)) fail("head variable " + q.names[v] + " not in body", hl, hc);
        return q;
    }

private:
    const std::string& text_;
    size_t i_ = 0;
    int line_ = 1, col_ = 1;

    [[noreturn]] void fail(const std::string& m, int l, int c) { throw ParseError(m, l, c); }

    char peek() const { return i_ < text_.size() ? text_[i_] : '\0'; }

    void advance()
    {
        if (text_[i_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++i_;
    }

    void skip()
    {
        while (i_ < text_.size()) {
            char c = text_[i_];
            if (c == '#') {
                while (i_ < text_.size() && text_[i_] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    void expect(const std::string& tok)
    {
        if (text_.compare(i_, tok.size(), tok) != 0) {
            std::string got = i_ < text_.size() ? std::string(1, text_[i_]) : "end of input";
            fail("expected '" + tok + "' but found " + got, line_, col_);
        }
        for (size_t k = 0; k < tok.size(); ++k) advance();
    }

    std::tuple<std::string, int, int> ident()
    {
        int l = line_, c = col_;
        size_t start = i_;
        auto ok = [](char ch, bool first) {
            return std::isalpha(static_cast<unsigned char>(ch)) || ch == '_' ||
                   (!first && std::isdigit(static_cast<unsigned char>(ch)));
        };
        if (!ok(peek(), true)) fail("expected identifier", l, c);
        while (i_ < text_.size() && ok(text_[i_], false)) advance();
        return {text_.substr(start, i_ - start), l, c};
    }

    std::pair<std::vector<int>, std::vector<std::pair<int, int>>> var_list(Query& q)
    {
        skip();
        expect("(");
        std::vector<int> vs;
        std::vector<std::pair<int, int>> pos;
        skip();
        if (peek() == ')') {
            advance();
            return {vs, pos};
        }
        while (true) {
            skip();
            auto [name, l, c] = ident();
            if (q.find_var(name) < 0 && q.num_ids() >= kMaxVars) fail("more than 64 variables", l, c);
            vs.push_back(q.intern(name));
            pos.emplace_back(l, c);
            skip();
            if (peek() == ',') {
                advance();
                continue;
            }
            expect(")");
            return {vs, pos};
        }
    }
};

} // namespace

Query parse_query(const std::string& text)
{
    return Parser(text).parse();
}

Query load_query(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open query file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_query(ss.str());
}

std::string format_query(const Query& q)
{
    std::string out = q.head_name + "(";
    bool first = true;
    for (int v : sorted_by_name(q, q.head)) {
        out += (first ? "" : ", ") + q.names[v];
        first = false;
    }
    out += ") <- ";
    for (size_t i = 0; i < q.atoms.size(); ++i) {
        if (i) out += ", ";
        out += q.atoms[i].name + "(";
        for (size_t j = 0; j < q.atoms[i].vars.size(); ++j)
            out += (j ? ", " : "") + q.names[q.atoms[i].vars[j]];
        out += ")";
    }
    return out + ".";
}

Query restrict_query(const Query& q, VarSet keep, VarSet head, std::vector<int>* kept)
{
    Query r;
    r.head_name = q.head_name;
    r.names = q.names;
    r.head = head;
    if (kept) kept->clear();
    for (size_t i = 0; i < q.atoms.size(); ++i) {
        std::vector<int> vs;
        for (int v : q.atoms[i].vars)
            if (has(keep, v)) vs.push_back(v);
        if (vs.empty()) continue;
        r.atoms.push_back({q.atoms[i].name, vs, mask_of(vs)});
        if (kept) kept->push_back(static_cast<int>(i));
    }
    return r;
}

} // namespace spq
