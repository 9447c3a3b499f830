#pragma once

#include "spq/varset.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace spq {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, int line, int col)
        : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
          line_(line), col_(col) {}
    int line() const { return line_; }
    int column() const { return col_; }

private:
    int line_, col_;
};

// Raised when a query violates a structural invariant (duplicate names, head
// variable missing from the body, too many variables, ...).
class QueryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Atom {
    std::string name;
    std::vector<int> vars;  // schema order
    VarSet mask = 0;
};

// Q(X) <- R_1(X_1), ..., R_m(X_m).  Variables are ids into `names`; derived
// queries (restrictions, bag sub-queries) keep the id space of their parent so
// that plans can be compared across them.
class Query {
public:
    std::string head_name = "Q";
    std::vector<std::string> names;  // id -> variable name
    std::vector<Atom> atoms;
    VarSet head = 0;

    int num_ids() const { return static_cast<int>(names.size()); }
    VarSet vars() const;                 // var(Q)
    int find_var(const std::string& name) const;  // -1 if unknown
    int find_atom(const std::string& name) const;
    VarSet neighbours(VarSet s) const;   // variables sharing an atom with s (incl. s)
    std::string var_name(int v) const { return names.at(v); }
    std::string set_name(VarSet s) const;  // "ABD" style, sorted by name

    // Adds an atom; checks arity >= 1 and no repeated variable.
    void add_atom(const std::string& name, const std::vector<int>& vars);
    int intern(const std::string& var);
    void check() const;
};

Query parse_query(const std::string& text);
Query load_query(const std::string& path);
std::string format_query(const Query& q);

// Variables sorted by name.
std::vector<int> sorted_by_name(const Query& q, VarSet s);

// Atoms restricted to `keep`; atoms whose restriction is empty are dropped.
// `kept` receives the index of the source atom for every surviving atom.
Query restrict_query(const Query& q, VarSet keep, VarSet head, std::vector<int>* kept = nullptr);

} // namespace spq
