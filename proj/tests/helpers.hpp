#pragma once

#include <mixlab/homspace.hpp>
#include <mixlab/hyperbolic.hpp>
#include <mixlab/lie.hpp>
#include <mixlab/random.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace testutil {

using namespace mixlab;

// Cauchy draw clipped to [-cap, cap].
inline double cauchy(SampleRng& rng, double cap) {
    const double c = std::tan(std::numbers::pi * (rng.uniform() - 0.5));
    return std::clamp(c, -cap, cap);
}

// Unimodular matrix with heavy-tailed entries: a, b, c Cauchy, d = (1 + bc) / a.
inline GroupElement heavy_tailed_element(SampleRng& rng) {
    double a = cauchy(rng, 100.0);
    if (std::abs(a) < 0.01) a = std::copysign(0.01, a == 0.0 ? 1.0 : a);
    const double b = cauchy(rng, 100.0);
    const double c = cauchy(rng, 100.0);
    return GroupElement(a, b, c, (1.0 + b * c) / a);
}

// k1 a(t) k2 with moderate t, for checks that need well-conditioned elements.
inline GroupElement moderate_element(SampleRng& rng, double tmax = 2.0) {
    return GroupElement::rotation(rng.uniform(0.0, 2.0 * std::numbers::pi)) * GroupElement::diag(std::exp(rng.uniform(-tmax, tmax))) *
           GroupElement::rotation(rng.uniform(0.0, 2.0 * std::numbers::pi));
}

inline LatticeElement random_lattice_element(SampleRng& rng, int length) {
    LatticeElement g;
    for (int i = 0; i < length; ++i) {
        const auto n = static_cast<std::int64_t>(std::floor(rng.uniform(-3.0, 4.0)));
        g = g * LatticeElement::T(n) * LatticeElement::S();
    }
    return g;
}

inline double entry_distance(const GroupElement& g, const GroupElement& h) {
    return std::max({std::abs(g.a() - h.a()), std::abs(g.b() - h.b()), std::abs(g.c() - h.c()), std::abs(g.d() - h.d())});
}

// Distance between two points of X, insensitive to which boundary representative was chosen.
inline double x_distance(const XPoint& p, const XPoint& q) {
    static const std::vector<LatticeElement> nbhd = enumerate_ball(2.0);
    const GroupElement lp = lift(p), lq = lift(q);
    double best = 1e300;
    for (const auto& gamma : nbhd) {
        const GroupElement m = gamma.to_group() * lq;
        best = std::min(best, entry_distance(lp, m));
        best = std::min(best, entry_distance(lp, GroupElement(-m.a(), -m.b(), -m.c(), -m.d())));
    }
    return best;
}

inline XPoint random_xpoint(SampleRng& rng) {
    const XPoint raw{rng.uniform(-3.0, 3.0), std::exp(rng.uniform(-2.0, 2.0)), rng.uniform(0.0, std::numbers::pi)};
    return project(lift(raw));
}

} // namespace testutil
