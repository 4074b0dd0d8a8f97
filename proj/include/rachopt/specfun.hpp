#pragma once

// Scalar special functions used by the closed forms: Gaussian tail and its
// inverse, the real branches of Lambert W, and incomplete gamma functions.
// Everything here is pure and safe to call concurrently.

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rachopt {

/// Thrown when an argument lies outside the domain of a function.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A probability in [0, 1].
class Probability {
public:
    constexpr Probability() = default;
    explicit Probability(double v) : value_(v) {
        if (!(v >= 0.0 && v <= 1.0))
            throw DomainError("probability out of [0,1]: " + std::to_string(v));
    }
    [[nodiscard]] constexpr double value() const { return value_; }
    constexpr operator double() const { return value_; }  // NOLINT

private:
    double value_ = 0.0;
};

/// Gaussian tail Q(x) = P(Z > x), Z ~ N(0,1).
inline double q_function(double x) {
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

namespace detail {

inline double std_normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// Acklam's rational approximation of the lower-tail normal quantile,
// relative error about 1.15e-9 before refinement.
inline double normal_quantile_initial(double p) {
    constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                            -2.759285104469687e+02, 1.383577518672690e+02,
                            -3.066479806614716e+01, 2.506628277459239e+00};
    constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                            -1.556989798598866e+02, 6.680131188771972e+01,
                            -1.328068155288572e+01};
    constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                            -2.400758277161838e+00, -2.549732539343734e+00,
                            4.374664141464968e+00,  2.938163982698783e+00};
    constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                            2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

}  // namespace detail

/// Inverse of q_function on (0, 1). Rational start, then Halley steps on
/// Q(x) - p using erfc, which takes the error to rounding level.
inline double q_inverse(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw DomainError("q_inverse requires 0 < p < 1, got " + std::to_string(p));
    if (p == 0.5) return 0.0;
    // Q^{-1}(p) = Phi^{-1}(1 - p) = -Phi^{-1}(p)
    double x = -detail::normal_quantile_initial(p);
    for (int i = 0; i < 3; ++i) {
        const double phi = detail::std_normal_pdf(x);
        if (phi == 0.0) break;
        const double u = (q_function(x) - p) / phi;
        x += u / (1.0 - 0.5 * x * u);
    }
    return x;
}

namespace detail {

// One Halley update for w*e^w = x.
inline double lambert_halley_step(double w, double x) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    return w - f / denom;
}

inline double lambert_iterate(double x, double w) {
    for (int i = 0; i < 64; ++i) {
        const double next = lambert_halley_step(w, x);
        if (!std::isfinite(next)) break;
        const double delta = std::abs(next - w);
        w = next;
        if (delta <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(w)) break;
    }
    return w;
}

}  // namespace detail

/// Real secondary branch W_{-1}(x) for -1/e <= x < 0; returns w <= -1 with w e^w = x.
inline double lambert_w_m1(double x) {
    constexpr double inv_e = 0.36787944117144233;
    if (!(x >= -inv_e && x < 0.0))
        throw DomainError("lambert_w_m1 requires -1/e <= x < 0, got " + std::to_string(x));
    if (x == -inv_e) return -1.0;

    double w;
    if (x < -0.25) {
        // Branch-point series in p = -sqrt(2(1 + e x)).
        const double p = -std::sqrt(std::max(0.0, 2.0 * (1.0 + std::numbers::e * x)));
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
    } else {
        const double l1 = std::log(-x);
        const double l2 = std::log(-l1);
        w = l1 - l2 + l2 / l1;
    }
    w = detail::lambert_iterate(x, w);
    return std::min(w, -1.0);
}

/// Principal branch W_0(x) for x >= -1/e; returns w >= -1.
inline double lambert_w0(double x) {
    constexpr double inv_e = 0.36787944117144233;
    if (!(x >= -inv_e))
        throw DomainError("lambert_w0 requires x >= -1/e, got " + std::to_string(x));
    if (x == -inv_e) return -1.0;
    if (x == 0.0) return 0.0;

    double w;
    if (x < -0.25) {
        const double p = std::sqrt(std::max(0.0, 2.0 * (1.0 + std::numbers::e * x)));
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
    } else if (x < 3.0) {
        w = std::log1p(x) * (1.0 - std::log1p(std::log1p(x)) / (2.0 + std::log1p(x)));
    } else {
        const double l1 = std::log(x);
        const double l2 = std::log(l1);
        w = l1 - l2 + l2 / l1;
    }
    w = detail::lambert_iterate(x, w);
    return std::max(w, -1.0);
}

/// Tricomi-scaled lower incomplete gamma, x^{-s} * gamma(s, x)
///   = sum_j (-x)^j / (j! (s + j)).
/// Entire in x and real for real x, so it is the form used at negative
/// arguments. Terms are all positive when x < 0; positive x uses the
/// Kummer-transformed series instead.
inline double lower_gamma_scaled(double s, double x) {
    if (!(s > 0.0)) throw DomainError("lower_gamma_scaled requires s > 0");
    if (x > 0.0) {
        // e^-x sum_j x^j / (s (s+1) ... (s+j)): positive terms, no cancellation
        double t = 1.0 / s;
        double sum = t;
        for (int j = 1; j < 100000; ++j) {
            t *= x / (s + j);
            sum += t;
            if (t <= 1e-17 * sum) return std::exp(-x) * sum;
        }
        throw DomainError("lower_gamma_scaled: series did not converge");
    }
    double term = 1.0;  // (-x)^j / j!
    double sum = 1.0 / s;
    for (int j = 1; j < 10000; ++j) {
        term *= -x / j;
        const double add = term / (s + j);
        sum += add;
        if (std::abs(add) <= 1e-17 * std::abs(sum) && j > std::abs(x)) return sum;
    }
    throw DomainError("lower_gamma_scaled: series did not converge");
}

/// Upper incomplete gamma Gamma(s, x) = int_x^inf t^{s-1} e^{-t} dt.
///
/// For x >= 0: power series of the lower function when x < s + 1, Lentz
/// continued fraction otherwise. For x < 0 the value is real only for
/// integer s, where it is Gamma(s) - x^s * lower_gamma_scaled(s, x);
/// non-integer s with x < 0 is a domain error.
inline double upper_incomplete_gamma(double s, double x) {
    if (!(s > 0.0)) throw DomainError("upper_incomplete_gamma requires s > 0");
    if (!std::isfinite(x)) throw DomainError("upper_incomplete_gamma requires finite x");
    const double full = std::tgamma(s);
    if (x == 0.0) return full;
    if (x < 0.0) {
        if (s != std::floor(s))
            throw DomainError("upper_incomplete_gamma: x < 0 needs integer s");
        return full - std::pow(x, s) * lower_gamma_scaled(s, x);
    }
    const double log_prefactor = s * std::log(x) - x;
    if (x < s + 1.0) {
        double ap = s;
        double del = 1.0 / s;
        double sum = del;
        for (int n = 0; n < 100000; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-17) break;
        }
        return full - sum * std::exp(log_prefactor);
    }
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - s;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 100000; ++i) {
        const double an = -i * (i - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return std::exp(log_prefactor) * h;
}

}  // namespace rachopt
