#pragma once

// Scalar backends for all symbolic machinery.
//
// Two coefficient fields are supported:
//   Cx    -- std::complex<double>, the hardware backend
//   RatCx -- complex numbers with exact rational real/imaginary parts (GMP)
//
// Templated code selects behaviour through scalar_traits<K>: exact backends
// compare against literal zero, the float backend prunes below eps_zero.

#include <gmpxx.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <sstream>
#include <string>

#include "infdyn/errors.hpp"

namespace infdyn {

using Cx = std::complex<double>;
using Rat = mpq_class;

// Default tolerance for pruning float coefficients that should be zero.
inline constexpr double eps_zero = 1e-12;

// ---------------------------------------------------------------------------
// RatCx: Gaussian rationals
// ---------------------------------------------------------------------------

struct RatCx {
    Rat re{0}, im{0};

    RatCx() = default;
    RatCx(long r) : re(r) {}
    RatCx(const Rat& r) : re(r) {}
    RatCx(const Rat& r, const Rat& i) : re(r), im(i) {}

    bool is_zero() const { return re == 0 && im == 0; }
    bool is_real() const { return im == 0; }

    RatCx operator-() const { return {-re, -im}; }
    RatCx& operator+=(const RatCx& o) { re += o.re; im += o.im; return *this; }
    RatCx& operator-=(const RatCx& o) { re -= o.re; im -= o.im; return *this; }
    RatCx& operator*=(const RatCx& o) {
        Rat r = re * o.re - im * o.im;
        Rat i = re * o.im + im * o.re;
        re = r; im = i;
        return *this;
    }
    RatCx& operator/=(const RatCx& o) {
        Rat n2 = o.re * o.re + o.im * o.im;
        if (n2 == 0) throw DegenerateInput("division by zero Gaussian rational");
        Rat r = (re * o.re + im * o.im) / n2;
        Rat i = (im * o.re - re * o.im) / n2;
        re = r; im = i;
        return *this;
    }

    friend RatCx operator+(RatCx a, const RatCx& b) { return a += b; }
    friend RatCx operator-(RatCx a, const RatCx& b) { return a -= b; }
    friend RatCx operator*(RatCx a, const RatCx& b) { return a *= b; }
    friend RatCx operator/(RatCx a, const RatCx& b) { return a /= b; }
    friend bool operator==(const RatCx& a, const RatCx& b) { return a.re == b.re && a.im == b.im; }
    friend bool operator!=(const RatCx& a, const RatCx& b) { return !(a == b); }
};

inline RatCx conj(const RatCx& a) { return {a.re, -a.im}; }
// Squared modulus; stays inside the rationals (no square roots available here).
inline Rat norm2(const RatCx& a) { return a.re * a.re + a.im * a.im; }

inline Cx to_cx(const RatCx& a) { return {a.re.get_d(), a.im.get_d()}; }
inline Cx to_cx(const Cx& a) { return a; }
inline double norm2_d(const Cx& a) { return std::norm(a); }
inline double norm2_d(const RatCx& a) { return norm2(a).get_d(); }

// ---------------------------------------------------------------------------
// Formatting / parsing
// ---------------------------------------------------------------------------

inline std::string rat_str(const Rat& r) {
    Rat c = r; c.canonicalize();
    std::string s = c.get_num().get_str();
    s += "/";
    s += c.get_den().get_str();
    return s;
}

inline Rat parse_rat(const std::string& s) {
    try {
        // Accept "n/d", plain integers, and decimal literals like "-0.25".
        auto dot = s.find('.');
        if (dot != std::string::npos && s.find('/') == std::string::npos) {
            std::string digits = s.substr(0, dot) + s.substr(dot + 1);
            size_t frac = s.size() - dot - 1;
            Rat num(digits, 10);
            Rat den(1);
            for (size_t i = 0; i < frac; ++i) den *= 10;
            Rat r = num / den;
            r.canonicalize();
            return r;
        }
        Rat r(s, 10);
        r.canonicalize();
        return r;
    } catch (const std::exception&) {
        throw ParseError("cannot parse rational literal: '" + s + "'");
    }
}

// "num/den+num/den i" (either part optional, 'i' suffix marks the imaginary term).
inline std::string ratcx_str(const RatCx& a) {
    if (a.im == 0) return rat_str(a.re);
    if (a.re == 0) return rat_str(a.im) + "i";
    std::string s = rat_str(a.re);
    if (a.im > 0) s += "+";
    return s + rat_str(a.im) + "i";
}

inline RatCx parse_ratcx(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (s.empty()) throw ParseError("empty complex-rational literal");

    // Split on a '+'/'-' that is not leading and not inside a fraction's sign.
    // Terms look like "3/4", "-1/2i", "5", "2i".
    auto parse_term = [](const std::string& t, RatCx& acc) {
        if (t.empty()) throw ParseError("malformed complex-rational term");
        if (t.back() == 'i') {
            std::string body = t.substr(0, t.size() - 1);
            if (body.empty() || body == "+") body = "1";
            else if (body == "-") body = "-1";
            acc.im += parse_rat(body);
        } else {
            acc.re += parse_rat(t);
        }
    };

    RatCx out;
    size_t start = 0;
    for (size_t i = 1; i < s.size(); ++i) {
        if ((s[i] == '+' || s[i] == '-') && s[i - 1] != '/' && s[i - 1] != '+' && s[i - 1] != '-') {
            parse_term(s.substr(start, i - start), out);
            start = i;
        }
    }
    parse_term(s.substr(start), out);
    return out;
}

// Shortest double formatting that round-trips; used by all serializers.
inline std::string double_str(double x) {
    for (int prec = 15; prec <= 17; ++prec) {
        std::ostringstream os;
        os.precision(prec);
        os << x;
        double back = 0;
        std::istringstream(os.str()) >> back;
        if (back == x) return os.str();
    }
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

// ---------------------------------------------------------------------------
// Rational reconstruction of doubles (for snapping float roots in the exact
// backend). Continued-fraction expansion with a denominator cap.
// ---------------------------------------------------------------------------

inline bool snap_to_rat(double x, Rat& out, double tol = 1e-9,
                        unsigned long max_den = (1ul << 40)) {
    if (!std::isfinite(x)) return false;
    double target = x;
    long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double frac = target;
    for (int it = 0; it < 64; ++it) {
        double fl = std::floor(frac);
        if (fl > 9e17 || fl < -9e17) return false;
        long long a = static_cast<long long>(fl);
        long long p2 = a * p1 + p0, q2 = a * q1 + q0;
        if (q2 < 0 || static_cast<unsigned long long>(q2 > 0 ? q2 : -q2) > max_den) break;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        double approx = static_cast<double>(p1) / static_cast<double>(q1);
        if (std::abs(approx - target) <= tol * std::max(1.0, std::abs(target))) {
            out = Rat(mpz_class(static_cast<long>(p1)), mpz_class(static_cast<long>(q1)));
            out.canonicalize();
            return true;
        }
        double rem = frac - fl;
        if (rem < 1e-18) break;
        frac = 1.0 / rem;
    }
    return false;
}

inline bool snap_to_ratcx(const Cx& z, RatCx& out, double tol = 1e-9) {
    Rat re, im;
    if (!snap_to_rat(z.real(), re, tol)) return false;
    if (!snap_to_rat(z.imag(), im, tol)) return false;
    out = RatCx(re, im);
    return true;
}

// ---------------------------------------------------------------------------
// scalar_traits
// ---------------------------------------------------------------------------

template <class K>
struct scalar_traits;

template <>
struct scalar_traits<Cx> {
    static constexpr bool is_exact = false;
    static bool is_zero(const Cx& a, double scale = 1.0) {
        return std::abs(a) <= eps_zero * std::max(1.0, scale);
    }
    static Cx from_int(long n) { return Cx(static_cast<double>(n), 0.0); }
    static std::string str(const Cx& a) {
        return "(" + double_str(a.real()) + "," + double_str(a.imag()) + ")";
    }
};

template <>
struct scalar_traits<RatCx> {
    static constexpr bool is_exact = true;
    static bool is_zero(const RatCx& a, double = 1.0) { return a.is_zero(); }
    static RatCx from_int(long n) { return RatCx(n); }
    static std::string str(const RatCx& a) { return ratcx_str(a); }
};

} // namespace infdyn
