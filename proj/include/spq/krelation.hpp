#pragma once

#include "spq/semiring.hpp"
#include "spq/varset.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace spq {

using Value = std::uint32_t;  // dictionary-encoded domain value
using Tuple = std::vector<Value>;

// Dense ids for domain values, assigned in order of first appearance.
class Dictionary {
public:
    Value encode(const std::string& s)
    {
        auto it = ids_.find(s);
        if (it != ids_.end()) return it->second;
        Value id = static_cast<Value>(strings_.size());
        strings_.push_back(s);
        ids_.emplace(s, id);
        return id;
    }
    const std::string& decode(Value v) const { return strings_.at(v); }
    size_t size() const { return strings_.size(); }

private:
    std::unordered_map<std::string, Value> ids_;
    std::vector<std::string> strings_;
};

// Finite-support map from tuples over `schema` to semiring values. Rows are kept
// sorted and unique; zero values are never stored.
template <class S>
class KRelation {
public:
    using V = typename S::V;

    KRelation() = default;
    explicit KRelation(std::vector<int> schema) : schema_(std::move(schema)) {}

    const std::vector<int>& schema() const { return schema_; }
    size_t arity() const { return schema_.size(); }
    size_t size() const { return vals_.size(); }
    bool empty() const { return vals_.empty(); }
    const Value* row(size_t i) const { return cells_.data() + i * arity(); }
    Tuple tuple(size_t i) const { return Tuple(row(i), row(i) + arity()); }
    V value(size_t i) const { return vals_[i]; }

    V lookup(const Tuple& t) const
    {
        size_t lo = 0, hi = size(), k = arity();
        while (lo < hi) {
            size_t mid = (lo + hi) / 2;
            if (std::lexicographical_compare(row(mid), row(mid) + k, t.begin(), t.end()))
                lo = mid + 1;
            else
                hi = mid;
        }
        if (lo < size() && std::equal(t.begin(), t.end(), row(lo))) return vals_[lo];
        return S::zero();
    }

    // Builds from arbitrary rows: sorts, merges duplicates with plus, drops zeros.
    static KRelation from_rows(std::vector<int> schema, std::vector<std::pair<Tuple, V>> rows)
    {
        KRelation r(std::move(schema));
        std::sort(rows.begin(), rows.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (size_t i = 0; i < rows.size();) {
            if (rows[i].first.size() != r.arity()) throw std::invalid_argument("row arity mismatch");
            V acc = rows[i].second;
            size_t j = i + 1;
            for (; j < rows.size() && rows[j].first == rows[i].first; ++j) acc = S::plus(acc, rows[j].second);
            if (!S::is_zero(acc)) {
                r.cells_.insert(r.cells_.end(), rows[i].first.begin(), rows[i].first.end());
                r.vals_.push_back(acc);
            }
            i = j;
        }
        return r;
    }

    // Rows must already be sorted, unique and nonzero.
    static KRelation from_sorted(std::vector<int> schema, std::vector<Value> cells, std::vector<V> vals)
    {
        KRelation r(std::move(schema));
        r.cells_ = std::move(cells);
        r.vals_ = std::move(vals);
        return r;
    }

    std::vector<std::pair<Tuple, V>> rows() const
    {
        std::vector<std::pair<Tuple, V>> out;
        out.reserve(size());
        for (size_t i = 0; i < size(); ++i) out.emplace_back(tuple(i), vals_[i]);
        return out;
    }

    // Same rows with a renamed schema (positions unchanged).
    KRelation renamed(std::vector<int> schema) const
    {
        if (schema.size() != arity()) throw std::invalid_argument("rename arity mismatch");
        KRelation r = *this;
        r.schema_ = std::move(schema);
        return r;
    }

    // Reorders columns to `order` (a permutation of the schema).
    KRelation reordered(const std::vector<int>& order) const
    {
        std::vector<size_t> pos;
        for (int v : order) {
            auto it = std::find(schema_.begin(), schema_.end(), v);
            if (it == schema_.end() || order.size() != arity())
                throw std::invalid_argument("reorder: not a permutation of the schema");
            pos.push_back(static_cast<size_t>(it - schema_.begin()));
        }
        std::vector<std::pair<Tuple, V>> rs;
        rs.reserve(size());
        for (size_t i = 0; i < size(); ++i) {
            Tuple t(arity());
            for (size_t k = 0; k < pos.size(); ++k) t[k] = row(i)[pos[k]];
            rs.emplace_back(std::move(t), vals_[i]);
        }
        return from_rows(order, std::move(rs));
    }

    bool equals(const KRelation& o) const
    {
        if (schema_ != o.schema_ || size() != o.size() || cells_ != o.cells_) return false;
        for (size_t i = 0; i < size(); ++i)
            if (!S::eq(vals_[i], o.vals_[i])) return false;
        return true;
    }

private:
    std::vector<int> schema_;
    std::vector<Value> cells_;
    std::vector<V> vals_;
};

// (a (x) b)(u) = a(u[Ua]) (x) b(u[Ub]); schema is a's schema followed by b's
// attributes that are not in a.
template <class S>
KRelation<S> kjoin(const KRelation<S>& a, const KRelation<S>& b)
{
    std::vector<int> schema = a.schema();
    std::vector<std::pair<size_t, size_t>> shared;  // (pos in a, pos in b)
    std::vector<size_t> extra;
    for (size_t j = 0; j < b.arity(); ++j) {
        auto it = std::find(a.schema().begin(), a.schema().end(), b.schema()[j]);
        if (it == a.schema().end()) {
            extra.push_back(j);
            schema.push_back(b.schema()[j]);
        } else {
            shared.emplace_back(static_cast<size_t>(it - a.schema().begin()), j);
        }
    }
    // Hash b by its shared attributes.
    std::unordered_map<std::string, std::vector<size_t>> groups;
    auto key_of = [](const Value* r, const std::vector<size_t>& pos) {
        std::string k;
        for (size_t p : pos) k.append(reinterpret_cast<const char*>(&r[p]), sizeof(Value));
        return k;
    };
    std::vector<size_t> bpos, apos;
    for (auto [pa, pb] : shared) {
        apos.push_back(pa);
        bpos.push_back(pb);
    }
    for (size_t i = 0; i < b.size(); ++i) groups[key_of(b.row(i), bpos)].push_back(i);
    std::vector<std::pair<Tuple, typename S::V>> rows;
    for (size_t i = 0; i < a.size(); ++i) {
        auto it = groups.find(key_of(a.row(i), apos));
        if (it == groups.end()) continue;
        for (size_t j : it->second) {
            Tuple t(a.row(i), a.row(i) + a.arity());
            for (size_t e : extra) t.push_back(b.row(j)[e]);
            rows.emplace_back(std::move(t), S::times(a.value(i), b.value(j)));
        }
    }
    return KRelation<S>::from_rows(std::move(schema), std::move(rows));
}

// Sums out every attribute not in `keep`; result schema keeps the original order.
template <class S>
KRelation<S> marginalize(const KRelation<S>& r, VarSet keep)
{
    std::vector<int> schema;
    std::vector<size_t> pos;
    for (size_t k = 0; k < r.arity(); ++k)
        if (has(keep, r.schema()[k])) {
            schema.push_back(r.schema()[k]);
            pos.push_back(k);
        }
    std::vector<std::pair<Tuple, typename S::V>> rows;
    rows.reserve(r.size());
    for (size_t i = 0; i < r.size(); ++i) {
        Tuple t;
        for (size_t p : pos) t.push_back(r.row(i)[p]);
        rows.emplace_back(std::move(t), r.value(i));
    }
    return KRelation<S>::from_rows(std::move(schema), std::move(rows));
}

// Support projection: rows projected to `keep`, each with value one.
template <class S>
KRelation<S> support_projection(const KRelation<S>& r, VarSet keep)
{
    std::vector<int> schema;
    std::vector<size_t> pos;
    for (size_t k = 0; k < r.arity(); ++k)
        if (has(keep, r.schema()[k])) {
            schema.push_back(r.schema()[k]);
            pos.push_back(k);
        }
    std::vector<std::pair<Tuple, typename S::V>> rows;
    rows.reserve(r.size());
    for (size_t i = 0; i < r.size(); ++i) {
        Tuple t;
        for (size_t p : pos) t.push_back(r.row(i)[p]);
        rows.emplace_back(std::move(t), S::one());
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    rows.erase(std::unique(rows.begin(), rows.end(),
                           [](const auto& a, const auto& b) { return a.first == b.first; }),
               rows.end());
    return KRelation<S>::from_rows(std::move(schema), std::move(rows));
}

} // namespace spq
