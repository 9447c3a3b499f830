#pragma once

#include "spq/krelation.hpp"
#include "spq/query.hpp"

#include <ostream>
#include <sstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace spq {

// Missing relation files, arity mismatches, unparsable values.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One K-relation per atom of a query, keyed by relation name. Each relation's
// schema is the atom's variable list.
template <class S>
struct Database {
    std::map<std::string, KRelation<S>> relations;

    const KRelation<S>& at(const std::string& name) const
    {
        auto it = relations.find(name);
        if (it == relations.end()) throw DataError("no relation named " + name);
        return it->second;
    }
    size_t size() const
    {
        size_t n = 0;
        for (const auto& [_, r] : relations) n += r.size();
        return n;
    }
};

// Raw TSV content: header cells and data rows as strings.
struct TsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

TsvTable read_tsv(std::istream& in, const std::string& what);
TsvTable read_tsv_file(const std::string& path);

template <class S>
KRelation<S> relation_from_tsv(const TsvTable& t, const std::vector<int>& schema, Dictionary& dict,
                               const std::string& what)
{
    bool valued = !t.header.empty() && t.header.back() == "#value";
    size_t k = t.header.size() - (valued ? 1 : 0);
    if (k != schema.size())
        throw DataError(what + ": header has " + std::to_string(k) + " attribute columns, expected " +
                        std::to_string(schema.size()));
    std::vector<std::pair<Tuple, typename S::V>> rows;
    rows.reserve(t.rows.size());
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        if (r.size() != t.header.size())
            throw DataError(what + ": row " + std::to_string(i + 2) + " has " + std::to_string(r.size()) +
                            " fields, expected " + std::to_string(t.header.size()));
        Tuple tup(k);
        for (size_t c = 0; c < k; ++c) tup[c] = dict.encode(r[c]);
        typename S::V v = S::one();
        if (valued) {
            try {
                v = S::parse(r.back());
            } catch (const SemiringError& e) {
                throw DataError(what + ": row " + std::to_string(i + 2) + ": " + e.what());
            }
        }
        rows.emplace_back(std::move(tup), v);
    }
    return KRelation<S>::from_rows(schema, std::move(rows));
}

// Loads <dir>/<Name>.tsv for every atom of q.
template <class S>
Database<S> load_database(const Query& q, const std::string& dir, Dictionary& dict)
{
    Database<S> db;
    for (const auto& a : q.atoms) {
        std::string path = dir + "/" + a.name + ".tsv";
        db.relations.emplace(a.name, relation_from_tsv<S>(read_tsv_file(path), a.vars, dict, path));
    }
    return db;
}

// Header is the schema's variable names then "#value".
template <class S>
void write_relation(std::ostream& out, const KRelation<S>& r, const Query& q, const Dictionary& dict)
{
    for (size_t c = 0; c < r.arity(); ++c) out << q.var_name(r.schema()[c]) << '\t';
    out << "#value\n";
    for (size_t i = 0; i < r.size(); ++i) {
        for (size_t c = 0; c < r.arity(); ++c) out << dict.decode(r.row(i)[c]) << '\t';
        out << S::format(r.value(i)) << '\n';
    }
}

template <class S>
std::string relation_text(const KRelation<S>& r, const Query& q, const Dictionary& dict)
{
    std::ostringstream out;
    write_relation(out, r, q, dict);
    return out.str();
}

void write_text_file(const std::string& path, const std::string& text);

// Writes <dir>/<Name>.tsv for every relation; the directory must exist.
template <class S>
void write_database(const std::string& dir, const Query& q, const Database<S>& db, const Dictionary& dict)
{
    for (const auto& a : q.atoms) write_text_file(dir + "/" + a.name + ".tsv", relation_text(db.at(a.name), q, dict));
}

} // namespace spq
