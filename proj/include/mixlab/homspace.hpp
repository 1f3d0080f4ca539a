#pragma once

// The probability space X = SL2(Z)\SL2(R) with normalized Haar measure m.
//
// A point is stored in Iwasawa coordinates s = n(x) a(y) k(theta) of a
// representative with s.i in the standard fundamental domain. Since -I lies
// in SL2(Z), theta has period pi.

#include <mixlab/error.hpp>
#include <mixlab/hyperbolic.hpp>
#include <mixlab/lie.hpp>
#include <mixlab/parallel.hpp>
#include <mixlab/random.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace mixlab {

struct XPoint {
    double x = 0.0;
    double y = 1.0;
    double theta = 0.0;

    HPoint h() const { return {x, y}; }
    friend bool operator==(const XPoint&, const XPoint&) = default;
};

// Hyperbolic area of the modular fundamental domain.
inline constexpr double kDomainArea = std::numbers::pi / 3.0;

/// The representative n(x) a(y) k(theta).
inline GroupElement lift(const XPoint& p) {
    const double sy = std::sqrt(p.y);
    const double c = std::cos(p.theta), s = std::sin(p.theta);
    // [[sy, x/sy], [0, 1/sy]] * [[c, -s], [s, c]]
    return GroupElement(sy * c + p.x / sy * s, -sy * s + p.x / sy * c, s / sy, c / sy);
}

namespace detail {
inline double wrap_pi(double theta) {
    double t = std::fmod(theta, std::numbers::pi);
    if (t < 0.0) t += std::numbers::pi;
    if (t >= std::numbers::pi) t -= std::numbers::pi;
    return t;
}

// Iwasawa coordinates of s, no reduction. Bottom row of n a k is (sin, cos)/sqrt(y).
inline XPoint iwasawa(const GroupElement& s) {
    const double den = s.c() * s.c() + s.d() * s.d();
    return {(s.a() * s.c() + s.b() * s.d()) / den, 1.0 / den, wrap_pi(std::atan2(s.c(), s.d()))};
}
} // namespace detail

/// Projects a group element to X: reduces s.i and returns the coordinates of gamma s.
inline XPoint project(const GroupElement& s) {
    const XPoint raw = detail::iwasawa(s);
    const Reduction red = reduce_to_fundamental(raw.h());
    if (red.gamma == LatticeElement::identity()) return raw;
    XPoint out = detail::iwasawa(red.gamma.to_group() * s);
    out.x = red.point.x; // reduction result is the more accurate of the two
    out.y = red.point.y;
    return out;
}

/// Right-translation action g.x = x g^{-1}, so that (g.phi)(x) = phi(g^{-1}.x) = phi(x g).
inline XPoint act(const GroupElement& g, const XPoint& p) {
    if (g == GroupElement::identity()) return p;
    return project(lift(p) * g.inverse());
}

/// min(1, 1/y): a stand-in for the injectivity radius, decaying into the cusp.
inline double injectivity_proxy(const XPoint& p) { return std::min(1.0, 1.0 / p.y); }

struct SamplerConfig {
    std::uint64_t seed = 0;
    std::size_t count = 1;
};

/// Exact Haar draw for sample `index` of stream `seed`.
///
/// (x, y) is drawn from dx dy / y^2 on the strip |x| <= 1/2, y >= sqrt(3)/2
/// (x uniform, y = (sqrt 3 / 2) / u) and rejected below the unit circle;
/// theta is uniform on [0, pi).
inline XPoint haar_point(std::uint64_t seed, std::uint64_t index) {
    SampleRng rng(seed, index);
    constexpr double y0 = 0.86602540378443864676; // sqrt(3)/2
    for (;;) {
        const double x = rng.uniform() - 0.5;
        const double y = y0 / rng.uniform_open0();
        const double theta = std::numbers::pi * rng.uniform();
        if (x * x + y * y >= 1.0) return {x, y, theta};
    }
}

inline std::vector<XPoint> sample_haar(const SamplerConfig& cfg) {
    if (cfg.count < 1) throw InvalidInput("sample_haar: count must be >= 1");
    return parallel_map(cfg.count, [&](std::size_t i) { return haar_point(cfg.seed, i); });
}

// Sampler objects: callables i -> point, with the stream seed baked in.

struct HaarSampler {
    std::uint64_t seed = 0;
    XPoint operator()(std::size_t i) const { return haar_point(seed, i); }
};

struct PointMassSampler {
    XPoint point;
    XPoint operator()(std::size_t) const { return point; }
};

// Push-forward of a sampler by the action of g.
template <class Sampler>
struct TranslatedSampler {
    Sampler base;
    GroupElement g;
    XPoint operator()(std::size_t i) const { return act(g, base(i)); }
};

inline bool valid_xpoint(const XPoint& p, double tol = 1e-9) {
    return in_fundamental_domain(p.h(), tol) && p.theta >= 0.0 && p.theta < std::numbers::pi;
}

} // namespace mixlab
