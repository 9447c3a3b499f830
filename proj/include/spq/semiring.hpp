#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace spq {

enum class SemiringId { Bool, Nat, Real, MinPlus };

SemiringId parse_semiring(const std::string& name);
std::string semiring_name(SemiringId id);

class SemiringError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BoolSR {
    using V = std::uint8_t;
    static constexpr SemiringId id = SemiringId::Bool;
    static V zero() { return 0; }
    static V one() { return 1; }
    static V plus(V a, V b) { return a | b; }
    static V times(V a, V b) { return a & b; }
    static bool is_zero(V a) { return a == 0; }
    static bool eq(V a, V b) { return a == b; }
    static V parse(const std::string& s);
    static std::string format(V a) { return a ? "true" : "false"; }
};

// Counting semiring over unsigned 64-bit integers; overflow is an error, not a wrap.
struct NatSR {
    using V = std::uint64_t;
    static constexpr SemiringId id = SemiringId::Nat;
    static V zero() { return 0; }
    static V one() { return 1; }
    static V plus(V a, V b)
    {
        V r;
        if (__builtin_add_overflow(a, b, &r)) throw SemiringError("nat overflow in +");
        return r;
    }
    static V times(V a, V b)
    {
        V r;
        if (__builtin_mul_overflow(a, b, &r)) throw SemiringError("nat overflow in *");
        return r;
    }
    static bool is_zero(V a) { return a == 0; }
    static bool eq(V a, V b) { return a == b; }
    static V parse(const std::string& s);
    static std::string format(V a) { return std::to_string(a); }
};

struct RealSR {
    using V = double;
    static constexpr SemiringId id = SemiringId::Real;
    static constexpr double kRelTol = 1e-9;
    static V zero() { return 0.0; }
    static V one() { return 1.0; }
    static V plus(V a, V b) { return a + b; }
    static V times(V a, V b) { return a * b; }
    static bool is_zero(V a) { return a == 0.0; }
    static bool eq(V a, V b)
    {
        if (a == b) return true;
        return std::fabs(a - b) <= kRelTol * std::max(std::fabs(a), std::fabs(b));
    }
    static V parse(const std::string& s);
    static std::string format(V a);
};

// (min, +) over 64-bit integers. Zero is +infinity, kept as a distinguished
// sentinel that times() propagates explicitly.
struct MinPlusSR {
    using V = std::int64_t;
    static constexpr SemiringId id = SemiringId::MinPlus;
    static constexpr V kInf = std::numeric_limits<V>::max();
    static V zero() { return kInf; }
    static V one() { return 0; }
    static V plus(V a, V b) { return a < b ? a : b; }
    static V times(V a, V b)
    {
        if (a == kInf || b == kInf) return kInf;
        V r;
        if (__builtin_add_overflow(a, b, &r) || r == kInf)
            throw SemiringError("min-plus overflow");
        return r;
    }
    static bool is_zero(V a) { return a == kInf; }
    static bool eq(V a, V b) { return a == b; }
    static V parse(const std::string& s);
    static std::string format(V a) { return a == kInf ? "inf" : std::to_string(a); }
};

// Calls f(SR{}) with the semiring type selected at run time.
template <class F>
decltype(auto) with_semiring(SemiringId id, F&& f)
{
    switch (id) {
    case SemiringId::Bool: return f(BoolSR{});
    case SemiringId::Nat: return f(NatSR{});
    case SemiringId::Real: return f(RealSR{});
    case SemiringId::MinPlus: return f(MinPlusSR{});
    }
    throw std::logic_error("unknown semiring");
}

} // namespace spq
