#include "spq/rational.hpp"

#include <cctype>
#include <stdexcept>

namespace spq {

std::string to_string(const Rational& r)
{
    BigInt n = boost::multiprecision::numerator(r);
    BigInt d = boost::multiprecision::denominator(r);
    if (d == 1) return n.str();
    return n.str() + "/" + d.str();
}

namespace {

BigInt parse_int(const std::string& s, bool allow_sign)
{
    if (s.empty()) throw std::invalid_argument("empty number");
    size_t i = 0;
    if (allow_sign && (s[0] == '-' || s[0] == '+')) i = 1;
    if (i == s.size()) throw std::invalid_argument("bad number: " + s);
    for (size_t j = i; j < s.size(); ++j)
        if (!std::isdigit(static_cast<unsigned char>(s[j])))
            throw std::invalid_argument("bad number: " + s);
    BigInt v(s.substr(i));
    return s[0] == '-' ? BigInt(-v) : v;
}

} // namespace

Rational parse_rational(const std::string& text)
{
    auto slash = text.find('/');
    if (slash != std::string::npos) {
        BigInt n = parse_int(text.substr(0, slash), true);
        BigInt d = parse_int(text.substr(slash + 1), false);
        if (d == 0) throw std::invalid_argument("zero denominator: " + text);
        return Rational(n, d);
    }
    auto dot = text.find('.');
    if (dot != std::string::npos) {
        std::string ip = text.substr(0, dot), fp = text.substr(dot + 1);
        bool neg = !ip.empty() && ip[0] == '-';
        if (neg || (!ip.empty() && ip[0] == '+')) ip = ip.substr(1);
        if (ip.empty()) ip = "0";
        if (fp.empty()) throw std::invalid_argument("bad number: " + text);
        BigInt whole = parse_int(ip, false), frac = parse_int(fp, false);
        BigInt scale = 1;
        for (size_t i = 0; i < fp.size(); ++i) scale *= 10;
        Rational r(whole * scale + frac, scale);
        return neg ? Rational(-r) : r;
    }
    return Rational(parse_int(text, true));
}

double to_double(const Rational& r)
{
    return r.convert_to<double>();
}

} // namespace spq
