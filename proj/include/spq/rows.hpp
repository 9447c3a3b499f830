#pragma once

#include "spq/krelation.hpp"

#include <cstring>
#include <numeric>
#include <vector>

namespace spq {

struct TupleHash {
    size_t operator()(const Tuple& t) const
    {
        size_t h = 0xcbf29ce484222325ull;
        for (Value v : t) {
            h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return h;
    }
};

// Scratch relation used for OUT/TMP and cache payloads. Rows may repeat until
// normalize() merges them. Width 0 means a single scalar slot.
template <class S>
struct Rows {
    using V = typename S::V;

    size_t width = 0;
    std::vector<Value> cells;
    std::vector<V> vals;

    Rows() = default;
    explicit Rows(size_t w) : width(w) {}

    size_t size() const { return vals.size(); }
    bool empty() const { return vals.empty(); }
    const Value* row(size_t i) const { return cells.data() + i * width; }
    std::int64_t footprint() const { return static_cast<std::int64_t>(size() * (width + 1)); }

    void push(const Value* r, V v)
    {
        if (width == 0 && !vals.empty()) {
            vals[0] = S::plus(vals[0], v);
            return;
        }
        cells.insert(cells.end(), r, r + width);
        vals.push_back(v);
    }

    void normalize()
    {
        if (width == 0) {
            if (!vals.empty() && S::is_zero(vals[0])) vals.clear();
            return;
        }
        size_t n = size();
        std::vector<size_t> idx(n);
        std::iota(idx.begin(), idx.end(), size_t{0});
        auto less = [&](size_t a, size_t b) {
            return std::lexicographical_compare(row(a), row(a) + width, row(b), row(b) + width);
        };
        std::sort(idx.begin(), idx.end(), less);
        std::vector<Value> nc;
        std::vector<V> nv;
        nc.reserve(cells.size());
        nv.reserve(n);
        for (size_t i = 0; i < n;) {
            V acc = vals[idx[i]];
            size_t j = i + 1;
            while (j < n && std::equal(row(idx[i]), row(idx[i]) + width, row(idx[j]))) acc = S::plus(acc, vals[idx[j++]]);
            if (!S::is_zero(acc)) {
                nc.insert(nc.end(), row(idx[i]), row(idx[i]) + width);
                nv.push_back(acc);
            }
            i = j;
        }
        cells.swap(nc);
        vals.swap(nv);
    }

    KRelation<S> to_relation(const std::vector<int>& schema) const
    {
        std::vector<std::pair<Tuple, V>> rs;
        rs.reserve(size());
        for (size_t i = 0; i < size(); ++i) rs.emplace_back(Tuple(row(i), row(i) + width), vals[i]);
        return KRelation<S>::from_rows(schema, std::move(rs));
    }
};

} // namespace spq
