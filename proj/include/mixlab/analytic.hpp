#pragma once

// Closed-form kernels: the time-window integral
//   I(T) = int_{[-T,T]^2} max(1, |s - t|)^a ds dt
// over the reals and over p-adic balls, and empirical constants for the
// nilpotent exponential bounds.

#include <mixlab/error.hpp>
#include <mixlab/lie.hpp>
#include <mixlab/random.hpp>

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace mixlab {

using Rational = boost::multiprecision::cpp_rational;

/// int_0^{2T} (2T - u) max(1, u)^a du
///   = (2T)^{a+2} / ((a+1)(a+2)) + 2aT/(a+1) - a/(2(a+2)),   T >= 1.
inline double real_integral_J(double T, double a) {
    if (!(T >= 1.0)) throw DomainError("real_integral_J: T must be >= 1");
    if (!(a > -0.5)) throw DomainError("real_integral_J: a must exceed -1/2");
    return std::pow(2.0 * T, a + 2.0) / ((a + 1.0) * (a + 2.0)) + 2.0 * a * T / (a + 1.0) - a / (2.0 * (a + 2.0));
}

struct IntegralBound {
    double value; // I(T)
    double bound; // (2T)^{a+2} = |V(T)|^{a+2}
};

// The double integral equals twice the one-variable reduction (the density of |s - t| is 2(2T - u)).
inline IntegralBound real_integral_I_bound(double T, double a) {
    return {2.0 * real_integral_J(T, a), std::pow(2.0 * T, a + 2.0)};
}

inline bool is_prime(std::int64_t p) {
    if (p < 2) return false;
    for (std::int64_t d = 2; d * d <= p; ++d)
        if (p % d == 0) return false;
    return true;
}

namespace detail {
inline Rational rational_pow(std::int64_t base, std::int64_t exp) {
    Rational r = 1;
    const Rational b = exp >= 0 ? Rational(base) : Rational(1) / Rational(base);
    for (std::int64_t i = 0; i < std::abs(exp); ++i) r *= b;
    return r;
}
} // namespace detail

/// sum_{s,t=0}^{p^n - 1} max(1, p^n |s - t|_p)^a in closed form:
///   p^n ((p^n - p^{n-1}) p^{na} + (p^{n-1} - p^{n-2}) p^{(n-1)a} + ... + (p - 1) p^a + 1).
inline Rational padic_integral_I(std::int64_t p, std::int64_t n, std::int64_t a) {
    if (!is_prime(p)) throw InvalidInput("padic_integral_I: p must be prime");
    if (n < 0) throw InvalidInput("padic_integral_I: n must be >= 0");
    Rational inner = 1;
    for (std::int64_t j = 1; j <= n; ++j) {
        const Rational count = detail::rational_pow(p, j) - detail::rational_pow(p, j - 1);
        inner += count * detail::rational_pow(p, j * a);
    }
    return detail::rational_pow(p, n) * inner;
}

struct NilpotentConstants {
    double c0_hat;  // min |exp X|_F / |X|_F over sampled X with |X| >= 1
    double c3_hat;  // smallest c with max(1,|X|)/c <= |exp X|_op <= c max(1,|X|)^3
};

/// Random nilpotent X = t k E k^{-1}, k a random rotation, t log-uniform on [1e-3, 1e3].
inline LieVector random_nilpotent(SampleRng& rng) {
    const double t = std::pow(10.0, rng.uniform(-3.0, 3.0));
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return ad_apply(GroupElement::rotation(angle), t * LieVector::E());
}

inline NilpotentConstants nilpotent_exp_constants(std::size_t samples, std::uint64_t seed) {
    if (samples < 1) throw InvalidInput("nilpotent_exp_constants: samples must be >= 1");
    double c0 = std::numeric_limits<double>::infinity();
    double c3 = 1.0;
    for (std::size_t i = 0; i < samples; ++i) {
        SampleRng rng(seed, i);
        const LieVector x = random_nilpotent(rng);
        const double nx = x.norm();
        const GroupElement g = exp_sl2(x);
        if (nx >= 1.0) c0 = std::min(c0, g.frobenius() / nx);
        const double op = op_norm(g);
        const double base = std::max(1.0, nx);
        c3 = std::max({c3, base / op, op / (base * base * base)});
    }
    return {c0, c3};
}

} // namespace mixlab
