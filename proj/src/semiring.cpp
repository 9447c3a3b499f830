#include "spq/semiring.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>

namespace spq {

SemiringId parse_semiring(const std::string& name)
{
    if (name == "bool") return SemiringId::Bool;
    if (name == "nat") return SemiringId::Nat;
    if (name == "real") return SemiringId::Real;
    if (name == "minplus") return SemiringId::MinPlus;
    throw std::invalid_argument("unknown semiring '" + name + "' (bool|nat|real|minplus)");
}

std::string semiring_name(SemiringId id)
{
    switch (id) {
    case SemiringId::Bool: return "bool";
    case SemiringId::Nat: return "nat";
    case SemiringId::Real: return "real";
    case SemiringId::MinPlus: return "minplus";
    }
    return "?";
}

BoolSR::V BoolSR::parse(const std::string& s)
{
    if (s == "true" || s == "1") return 1;
    if (s == "false" || s == "0") return 0;
    throw SemiringError("bad bool value '" + s + "'");
}

namespace {

bool all_digits(const std::string& s, size_t from)
{
    if (from >= s.size()) return false;
    for (size_t i = from; i < s.size(); ++i)
        if (s[i] < '0' || s[i] > '9') return false;
    return true;
}

} // namespace

NatSR::V NatSR::parse(const std::string& s)
{
    if (!all_digits(s, 0)) throw SemiringError("bad nat value '" + s + "'");
    errno = 0;
    unsigned long long v = std::strtoull(s.c_str(), nullptr, 10);
    if (errno == ERANGE) throw SemiringError("nat value out of range '" + s + "'");
    return v;
}

RealSR::V RealSR::parse(const std::string& s)
{
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0' || !std::isfinite(v))
        throw SemiringError("bad real value '" + s + "'");
    return v;
}

std::string RealSR::format(V a)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", a);
    return buf;
}

MinPlusSR::V MinPlusSR::parse(const std::string& s)
{
    if (s == "inf") return kInf;
    if (!all_digits(s, (!s.empty() && s[0] == '-') ? 1 : 0))
        throw SemiringError("bad min-plus value '" + s + "' (integers or inf)");
    errno = 0;
    long long v = std::strtoll(s.c_str(), nullptr, 10);
    if (errno == ERANGE || v == kInf) throw SemiringError("min-plus value out of range '" + s + "'");
    return v;
}

} // namespace spq
