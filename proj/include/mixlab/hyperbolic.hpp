#pragma once

// Upper half-plane geometry and the modular group PSL2(Z).

#include <mixlab/error.hpp>
#include <mixlab/lie.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <set>
#include <tuple>
#include <vector>

namespace mixlab {

struct HPoint {
    double x = 0.0;
    double y = 1.0;

    HPoint() = default;
    HPoint(double x_, double y_) : x(x_), y(y_) {
        if (!(y_ > 0.0) || !std::isfinite(x_) || !std::isfinite(y_)) {
            throw InvalidInput("HPoint: need finite x and y > 0");
        }
    }
    explicit HPoint(std::complex<double> z) : HPoint(z.real(), z.imag()) {}

    std::complex<double> complex() const { return {x, y}; }
    friend bool operator==(const HPoint&, const HPoint&) = default;
};

/// Element of PSL2(Z), stored as an integer matrix with the first nonzero
/// entry of (a, b, c, d) positive.
class LatticeElement {
public:
    LatticeElement() = default;

    LatticeElement(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) : a_(a), b_(b), c_(c), d_(d) {
        if (a * d - b * c != 1) throw InvalidInput("LatticeElement: ad - bc must equal 1");
        canonicalize();
    }

    static LatticeElement identity() { return {}; }
    static LatticeElement T(std::int64_t n = 1) { return {1, n, 0, 1}; }
    static LatticeElement S() { return {0, -1, 1, 0}; }

    std::int64_t a() const { return a_; }
    std::int64_t b() const { return b_; }
    std::int64_t c() const { return c_; }
    std::int64_t d() const { return d_; }

    std::int64_t sum_of_squares() const { return a_ * a_ + b_ * b_ + c_ * c_ + d_ * d_; }

    LatticeElement inverse() const { return {d_, -b_, -c_, a_}; }

    friend LatticeElement operator*(const LatticeElement& x, const LatticeElement& y) {
        return {x.a_ * y.a_ + x.b_ * y.c_, x.a_ * y.b_ + x.b_ * y.d_, x.c_ * y.a_ + x.d_ * y.c_,
                x.c_ * y.b_ + x.d_ * y.d_};
    }

    GroupElement to_group() const {
        return {static_cast<double>(a_), static_cast<double>(b_), static_cast<double>(c_), static_cast<double>(d_)};
    }

    friend bool operator==(const LatticeElement&, const LatticeElement&) = default;
    friend auto operator<=>(const LatticeElement& x, const LatticeElement& y) {
        return std::tie(x.a_, x.b_, x.c_, x.d_) <=> std::tie(y.a_, y.b_, y.c_, y.d_);
    }

    friend std::ostream& operator<<(std::ostream& os, const LatticeElement& g) {
        return os << "[[" << g.a_ << ", " << g.b_ << "], [" << g.c_ << ", " << g.d_ << "]]";
    }

private:
    void canonicalize() {
        const std::int64_t lead = a_ != 0 ? a_ : (b_ != 0 ? b_ : c_);
        if (lead < 0) {
            a_ = -a_;
            b_ = -b_;
            c_ = -c_;
            d_ = -d_;
        }
    }

    std::int64_t a_ = 1, b_ = 0, c_ = 0, d_ = 1;
};

inline HPoint mobius_act(double a, double b, double c, double d, const HPoint& z) {
    // Im((az+b)/(cz+d)) = y / |cz+d|^2 for ad - bc = 1.
    const double re_den = c * z.x + d;
    const double im_den = c * z.y;
    const double den = re_den * re_den + im_den * im_den;
    const double re_num = a * z.x + b;
    const double im_num = a * z.y;
    return {(re_num * re_den + im_num * im_den) / den, z.y / den};
}

inline HPoint mobius_act(const GroupElement& g, const HPoint& z) { return mobius_act(g.a(), g.b(), g.c(), g.d(), z); }

inline HPoint mobius_act(const LatticeElement& g, const HPoint& z) {
    return mobius_act(static_cast<double>(g.a()), static_cast<double>(g.b()), static_cast<double>(g.c()),
                      static_cast<double>(g.d()), z);
}

/// Hyperbolic distance, curvature -1: cosh d = 1 + |z - w|^2 / (2 Im z Im w).
/// Evaluated as 2 asinh(|z - w| / (2 sqrt(Im z Im w))) for accuracy at short range.
inline double hyp_dist(const HPoint& z, const HPoint& w) {
    const double chord = std::hypot(z.x - w.x, z.y - w.y);
    return 2.0 * std::asinh(chord / (2.0 * std::sqrt(z.y * w.y)));
}

struct Reduction {
    HPoint point;
    LatticeElement gamma; // point = gamma . z
};

inline constexpr int kReductionCap = 10000;
inline constexpr double kDomainTol = 1e-12;

/// Gauss reduction into |Re z| <= 1/2, |z| >= 1.
inline Reduction reduce_to_fundamental(const HPoint& z) {
    double x = z.x, y = z.y;
    std::int64_t a = 1, b = 0, c = 0, d = 1; // accumulated gamma, unnormalized sign
    for (int iter = 0; iter < kReductionCap; ++iter) {
        if (std::abs(x) > 0.5) {
            const double shift = std::round(x);
            const auto n = static_cast<std::int64_t>(shift);
            x -= shift;
            a -= n * c;
            b -= n * d;
        }
        const double r2 = x * x + y * y;
        if (r2 < 1.0 - kDomainTol) {
            // z -> -1/z
            x = -x / r2;
            y = y / r2;
            const std::int64_t na = -c, nb = -d;
            c = a;
            d = b;
            a = na;
            b = nb;
            continue;
        }
        return {HPoint(x, y), LatticeElement(a, b, c, d)};
    }
    throw NumericDegeneracy("reduce_to_fundamental: iteration cap exceeded");
}

inline bool in_fundamental_domain(const HPoint& z, double tol = 1e-9) {
    return std::abs(z.x) <= 0.5 + tol && z.x * z.x + z.y * z.y >= 1.0 - tol;
}

namespace detail {
// Returns (g, x, y) with a x + b y = g = gcd(a, b) >= 0.
inline std::tuple<std::int64_t, std::int64_t, std::int64_t> ext_gcd(std::int64_t a, std::int64_t b) {
    std::int64_t old_r = a, r = b, old_s = 1, s = 0, old_t = 0, t = 1;
    while (r != 0) {
        const std::int64_t q = old_r / r;
        std::tie(old_r, r) = std::make_tuple(r, old_r - q * r);
        std::tie(old_s, s) = std::make_tuple(s, old_s - q * s);
        std::tie(old_t, t) = std::make_tuple(t, old_t - q * t);
    }
    if (old_r < 0) return {-old_r, -old_s, -old_t};
    return {old_r, old_s, old_t};
}

// One (a, b) with a d - b c = 1, for coprime (c, d).
inline std::pair<std::int64_t, std::int64_t> complete_row(std::int64_t c, std::int64_t d) {
    // a d + (-b) c = 1
    const auto [g, x, y] = ext_gcd(d, c);
    (void)g;
    return {x, -y};
}
} // namespace detail

inline constexpr std::int64_t kDefaultBallBudget = 2'000'000;

/// All gamma in PSL2(Z) with d(gamma.i, i) <= R, sorted.
///
/// Uses cosh d(gamma.i, i) = (a^2 + b^2 + c^2 + d^2) / 2. Runs over coprime
/// bottom rows (c, d) and the translates (a + nc, b + nd) of one completion.
inline std::vector<LatticeElement> enumerate_ball(double R, std::int64_t budget = kDefaultBallBudget) {
    if (!(R >= 0.0) || !std::isfinite(R)) throw InvalidInput("enumerate_ball: R must be finite and >= 0");
    const double bound = 2.0 * std::cosh(R) * (1.0 + 1e-12);
    if (bound > static_cast<double>(budget)) throw BudgetError("enumerate_ball: sum-of-squares bound exceeds budget");
    const auto N = static_cast<std::int64_t>(std::floor(bound));

    std::vector<LatticeElement> out;
    const auto cmax = static_cast<std::int64_t>(std::floor(std::sqrt(static_cast<double>(N))));
    for (std::int64_t c = 0; c <= cmax; ++c) {
        for (std::int64_t d = -cmax; d <= cmax; ++d) {
            if (c == 0 && d != 1) continue; // PSL: bottom row (0, 1) or c > 0
            const std::int64_t rest = N - c * c - d * d;
            if (rest < 1) continue;
            if (std::gcd(c, d) != 1) continue;
            const auto [a0, b0] = detail::complete_row(c, d);
            const std::int64_t norm = c * c + d * d;
            // minimize (a0 + n c)^2 + (b0 + n d)^2 over integer n
            const double n_star = -static_cast<double>(a0 * c + b0 * d) / static_cast<double>(norm);
            const auto n0 = static_cast<std::int64_t>(std::floor(n_star));
            auto try_n = [&](std::int64_t n) {
                const std::int64_t a = a0 + n * c, b = b0 + n * d;
                if (a * a + b * b > rest) return false;
                out.emplace_back(a, b, c, d);
                return true;
            };
            for (std::int64_t n = n0; try_n(n); --n) {}
            for (std::int64_t n = n0 + 1; try_n(n); ++n) {}
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Sorted distinct values d(gamma.i, i) <= R over the ball of radius R.
inline std::vector<double> distance_set(double R, std::int64_t budget = kDefaultBallBudget) {
    std::set<std::int64_t> sums;
    for (const auto& g : enumerate_ball(R, budget)) sums.insert(g.sum_of_squares());
    std::vector<double> out;
    for (auto s : sums) {
        const double dist = std::acosh(static_cast<double>(s) / 2.0);
        if (dist <= R) out.push_back(dist);
    }
    return out;
}

struct OrbitHit {
    LatticeElement gamma;
    double distance;
};

/// All gamma in PSL2(Z) with d(center, gamma.w) <= rho, each element once.
///
/// Im(gamma.w) >= Im(center) e^{-rho} bounds the bottom row (c, d); at a
/// given height the disc is an interval in x, which bounds the translates.
inline void orbit_near(const HPoint& center, const HPoint& w, double rho, std::vector<OrbitHit>& hits) {
    hits.clear();
    const double B = w.y * std::exp(rho) / center.y; // bound on |cw + d|^2
    const double two_cm1 = 2.0 * (std::cosh(rho) - 1.0);
    auto scan_translates = [&](std::int64_t a0, std::int64_t b0, std::int64_t c, std::int64_t d) {
        const HPoint base = mobius_act(static_cast<double>(a0), static_cast<double>(b0), static_cast<double>(c),
                                       static_cast<double>(d), w);
        // |z - center|^2 <= 2 y y_c (cosh rho - 1) at height y = base.y, padded for rounding
        const double dy = base.y - center.y;
        const double w2 = two_cm1 * base.y * center.y - dy * dy;
        if (w2 < -1e-9 * center.y * center.y) return;
        const double half_width = std::sqrt(std::max(0.0, w2)) * (1.0 + 1e-9) + 1e-12;
        const auto n_lo = static_cast<std::int64_t>(std::ceil(center.x - half_width - base.x));
        const auto n_hi = static_cast<std::int64_t>(std::floor(center.x + half_width - base.x));
        for (std::int64_t n = n_lo; n <= n_hi; ++n) {
            const double dist = hyp_dist(center, HPoint{base.x + static_cast<double>(n), base.y});
            if (dist <= rho) hits.push_back({LatticeElement(a0 + n * c, b0 + n * d, c, d), dist});
        }
    };
    scan_translates(1, 0, 0, 1);
    const auto cmax = static_cast<std::int64_t>(std::floor(std::sqrt(B) / w.y));
    for (std::int64_t c = 1; c <= cmax; ++c) {
        const double cy = static_cast<double>(c) * w.y;
        const double r = std::sqrt(std::max(0.0, B - cy * cy));
        const double mid = -static_cast<double>(c) * w.x;
        const auto d_lo = static_cast<std::int64_t>(std::ceil(mid - r));
        const auto d_hi = static_cast<std::int64_t>(std::floor(mid + r));
        for (std::int64_t d = d_lo; d <= d_hi; ++d) {
            if (std::gcd(c, d) != 1) continue;
            const auto [a0, b0] = detail::complete_row(c, d);
            scan_translates(a0, b0, c, d);
        }
    }
}

inline std::vector<OrbitHit> orbit_near(const HPoint& center, const HPoint& w, double rho) {
    std::vector<OrbitHit> hits;
    orbit_near(center, w, rho, hits);
    return hits;
}

} // namespace mixlab
