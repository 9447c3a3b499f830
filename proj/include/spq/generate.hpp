#pragma once

#include "spq/database.hpp"
#include "spq/query.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <unordered_set>

namespace spq {

enum class Shape { Random, WorstCaseHint };

inline Shape parse_shape(const std::string& s)
{
    if (s == "random") return Shape::Random;
    if (s == "worst_case_hint" || s == "worst") return Shape::WorstCaseHint;
    throw std::invalid_argument("unknown instance shape: " + s);
}

template <class S>
typename S::V random_value(std::mt19937_64& g)
{
    if constexpr (S::id == SemiringId::Bool) {
        return S::one();
    } else if constexpr (S::id == SemiringId::Nat) {
        return 1 + g() % 3;
    } else if constexpr (S::id == SemiringId::Real) {
        return 0.5 + static_cast<double>(g() >> 11) * 0x1.0p-53;
    } else {
        return static_cast<typename S::V>(g() % 10);
    }
}

// Domain size per column. Random data spreads each column over n values; the
// worst-case hint squeezes columns so that every join value has high degree.
inline std::uint64_t column_domain(size_t n, size_t arity, Shape shape)
{
    if (shape == Shape::Random) return std::max<std::uint64_t>(1, n);
    double d = std::ceil(std::pow(2.0 * static_cast<double>(n), 1.0 / static_cast<double>(arity)) - 1e-9);
    return std::max<std::uint64_t>(2, static_cast<std::uint64_t>(d));
}

// About n tuples per relation (fewer when the column domains are too small),
// values drawn for semiring S. Domain value i is the string "i".
template <class S>
Database<S> generate_instance(const Query& q, size_t n, std::uint64_t seed, Shape shape, Dictionary& dict)
{
    if (n < 1) throw std::invalid_argument("instance size must be at least 1");
    std::mt19937_64 g(seed);
    Database<S> db;
    std::uint64_t dmax = 0;
    for (const auto& a : q.atoms) dmax = std::max(dmax, column_domain(n, a.vars.size(), shape));
    for (std::uint64_t i = dict.size(); i < dmax; ++i) dict.encode(std::to_string(i));
    for (const auto& a : q.atoms) {
        size_t k = a.vars.size();
        std::uint64_t d = column_domain(n, k, shape);
        double space = std::pow(static_cast<double>(d), static_cast<double>(k));
        std::vector<std::pair<Tuple, typename S::V>> rows;
        auto decode = [&](std::uint64_t code) {
            Tuple t(k);
            for (size_t c = k; c-- > 0;) {
                t[c] = dict.encode(std::to_string(code % d));
                code /= d;
            }
            return t;
        };
        if (space <= 2.0 * static_cast<double>(n)) {
            std::uint64_t total = static_cast<std::uint64_t>(space + 0.5);
            std::vector<std::uint64_t> codes(total);
            for (std::uint64_t i = 0; i < total; ++i) codes[i] = i;
            std::shuffle(codes.begin(), codes.end(), g);
            codes.resize(std::min<std::uint64_t>(total, n));
            for (auto code : codes) rows.emplace_back(decode(code), random_value<S>(g));
        } else {
            std::unordered_set<std::string> seen;
            std::uniform_int_distribution<std::uint64_t> pick(0, d - 1);
            while (rows.size() < n) {
                Tuple t(k);
                std::string key;
                for (size_t c = 0; c < k; ++c) {
                    std::uint64_t v = pick(g);
                    t[c] = dict.encode(std::to_string(v));
                    key += std::to_string(v) + ",";
                }
                if (!seen.insert(key).second) continue;
                rows.emplace_back(std::move(t), random_value<S>(g));
            }
        }
        db.relations.emplace(a.name, KRelation<S>::from_rows(a.vars, std::move(rows)));
    }
    return db;
}

} // namespace spq
