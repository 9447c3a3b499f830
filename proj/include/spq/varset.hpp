#pragma once

#include <bit>
#include <cstdint>
#include <vector>

namespace spq {

// Variables are interned to ids 0..63; sets of them are bitmasks.
using VarSet = std::uint64_t;

constexpr int kMaxVars = 64;

inline constexpr VarSet bit(int v) { return VarSet{1} << v; }
inline constexpr bool has(VarSet s, int v) { return (s >> v) & 1u; }
inline constexpr bool subset(VarSet a, VarSet b) { return (a & ~b) == 0; }
inline int count(VarSet s) { return std::popcount(s); }
inline int lowest(VarSet s) { return std::countr_zero(s); }

inline std::vector<int> members(VarSet s)
{
    std::vector<int> out;
    while (s) {
        out.push_back(lowest(s));
        s &= s - 1;
    }
    return out;
}

template <class F>
inline void for_each_var(VarSet s, F&& f)
{
    while (s) {
        f(lowest(s));
        s &= s - 1;
    }
}

inline VarSet mask_of(const std::vector<int>& vs)
{
    VarSet m = 0;
    for (int v : vs) m |= bit(v);
    return m;
}

} // namespace spq
