#pragma once

#include "spq/krelation.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace spq {

// Sorted index over a K-relation with its columns permuted. Stored column-major;
// a trie node is a row range [lo, hi) whose rows agree on a prefix of columns.
template <class S>
class Trie {
public:
    using V = typename S::V;

    struct Range {
        size_t lo = 0, hi = 0;
        bool empty() const { return lo >= hi; }
        size_t size() const { return hi - lo; }
    };

    Trie() = default;

    // perm lists the relation's attributes in trie level order.
    Trie(const KRelation<S>& rel, const std::vector<int>& perm) : perm_(perm)
    {
        std::vector<size_t> pos;
        for (int v : perm) {
            auto it = std::find(rel.schema().begin(), rel.schema().end(), v);
            if (it == rel.schema().end())
                throw std::invalid_argument("trie permutation names an attribute outside the schema");
            pos.push_back(static_cast<size_t>(it - rel.schema().begin()));
        }
        if (perm.size() != rel.arity()) throw std::invalid_argument("trie permutation has wrong length");
        for (size_t i = 0; i < pos.size(); ++i)
            for (size_t j = i + 1; j < pos.size(); ++j)
                if (pos[i] == pos[j]) throw std::invalid_argument("trie permutation repeats an attribute");

        size_t n = rel.size(), k = perm.size();
        std::vector<size_t> order(n);
        for (size_t i = 0; i < n; ++i) order[i] = i;
        auto less = [&](size_t a, size_t b) {
            const Value* ra = rel.row(a);
            const Value* rb = rel.row(b);
            for (size_t p : pos) {
                if (ra[p] != rb[p]) return ra[p] < rb[p];
            }
            return false;
        };
        if (!std::is_sorted(order.begin(), order.end(), less)) std::sort(order.begin(), order.end(), less);
        cols_.assign(k, std::vector<Value>(n));
        vals_.resize(n);
        for (size_t i = 0; i < n; ++i) {
            const Value* r = rel.row(order[i]);
            for (size_t d = 0; d < k; ++d) cols_[d][i] = r[pos[d]];
            vals_[i] = rel.value(order[i]);
        }
    }

    const std::vector<int>& perm() const { return perm_; }
    size_t levels() const { return perm_.size(); }
    size_t size() const { return vals_.size(); }
    Range root() const { return {0, size()}; }
    Value key(size_t depth, size_t row) const { return cols_[depth][row]; }
    V value(size_t row) const { return vals_[row]; }

    // Rows of r (at level `depth`) whose column `depth` equals v.
    Range child(Range r, size_t depth, Value v) const
    {
        const auto& c = cols_[depth];
        auto b = c.begin();
        auto lo = std::lower_bound(b + r.lo, b + r.hi, v);
        if (lo == b + r.hi || *lo != v) return {0, 0};
        auto hi = std::upper_bound(lo, b + r.hi, v);
        return {static_cast<size_t>(lo - b), static_cast<size_t>(hi - b)};
    }

    // First row after `row` (inside r) with a different value in column `depth`.
    size_t next_distinct(Range r, size_t depth, size_t row) const
    {
        const auto& c = cols_[depth];
        auto b = c.begin();
        return static_cast<size_t>(std::upper_bound(b + row, b + r.hi, c[row]) - b);
    }

    // First row in [row, r.hi) whose column `depth` is >= v.
    size_t seek(Range r, size_t depth, size_t row, Value v) const
    {
        const auto& c = cols_[depth];
        auto b = c.begin();
        return static_cast<size_t>(std::lower_bound(b + row, b + r.hi, v) - b);
    }

    // Distinct values of the next level under `prefix` (a leading segment).
    std::vector<Value> restricted_support(const Tuple& prefix, int next_attr) const
    {
        if (prefix.size() >= levels() || perm_[prefix.size()] != next_attr)
            throw std::invalid_argument("restricted_support: attribute is not next in the permutation");
        Range r = root();
        for (size_t d = 0; d < prefix.size() && !r.empty(); ++d) r = child(r, d, prefix[d]);
        std::vector<Value> out;
        size_t d = prefix.size();
        for (size_t i = r.lo; i < r.hi; i = next_distinct(r, d, i)) out.push_back(cols_[d][i]);
        return out;
    }

    // The indexed rows, in trie order, as a relation over perm().
    KRelation<S> to_relation() const
    {
        std::vector<Value> cells;
        cells.reserve(size() * levels());
        for (size_t i = 0; i < size(); ++i)
            for (size_t d = 0; d < levels(); ++d) cells.push_back(cols_[d][i]);
        return KRelation<S>::from_sorted(perm_, std::move(cells), vals_);
    }

    size_t cells() const { return size() * (levels() + 1); }

private:
    std::vector<int> perm_;
    std::vector<std::vector<Value>> cols_;
    std::vector<V> vals_;
};

} // namespace spq
