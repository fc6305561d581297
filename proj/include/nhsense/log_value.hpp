// log_value.hpp — signed log-magnitude arithmetic
//
// Products like e^{A(N-1)} factors can leave double headroom long before the
// final reported logarithm does, so oracle paths carry (sign, ln|x|) pairs.
#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace nhsense {

struct LogValue {
    double log_abs{-std::numeric_limits<double>::infinity()}; // ln|x|; -inf means x == 0
    int sign{0};                                              // -1, 0, +1

    static LogValue zero() { return {}; }

    static LogValue from(double x) {
        if (x == 0.0) return {};
        return {std::log(std::abs(x)), x > 0.0 ? 1 : -1};
    }

    static LogValue from_log(double log_abs, int sign) {
        if (sign == 0) return {};
        return {log_abs, sign > 0 ? 1 : -1};
    }

    bool is_zero() const { return sign == 0; }

    double value() const {
        if (sign == 0) return 0.0;
        return sign * std::exp(log_abs); // may overflow to +-inf; log_abs stays exact
    }

    double log10_abs() const { return log_abs / std::numbers::ln10; }

    friend LogValue operator*(const LogValue& a, const LogValue& b) {
        if (a.sign == 0 || b.sign == 0) return {};
        return {a.log_abs + b.log_abs, a.sign * b.sign};
    }

    friend LogValue operator/(const LogValue& a, const LogValue& b) {
        if (a.sign == 0) return {};
        return {a.log_abs - b.log_abs, a.sign * b.sign};
    }

    friend LogValue operator+(const LogValue& a, const LogValue& b) {
        if (a.sign == 0) return b;
        if (b.sign == 0) return a;
        const LogValue& big = (a.log_abs >= b.log_abs) ? a : b;
        const LogValue& sml = (a.log_abs >= b.log_abs) ? b : a;
        const double r = std::exp(sml.log_abs - big.log_abs); // in [0,1]
        const double t = (big.sign == sml.sign) ? 1.0 + r : 1.0 - r;
        if (t == 0.0) return {};
        return {big.log_abs + std::log(std::abs(t)), t > 0.0 ? big.sign : -big.sign};
    }

    friend LogValue operator-(const LogValue& a, const LogValue& b) {
        return a + LogValue{b.log_abs, -b.sign};
    }

    LogValue squared() const {
        if (sign == 0) return {};
        return {2.0 * log_abs, 1};
    }
};

} // namespace nhsense
