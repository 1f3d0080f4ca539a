#pragma once

// SL2(R) kernels: group elements, the Lie algebra sl2 in the basis (H, E, F),
// Cartan decomposition, adjoint action and the norms built from them.
//
// The inner product on sl2 is <X, Y> = tr(X Y^T), so |H| = sqrt(2) and
// |E| = |F| = 1. It is Ad(SO(2))-invariant.

#include <mixlab/error.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace mixlab {

inline constexpr double kUnimodularTol = 1e-9;

/// A real 2x2 matrix of determinant one.
///
/// Construction checks that the entries are finite and that det is within
/// kUnimodularTol of one (relative to the magnitude of the products ad, bc),
/// then rescales by det^{-1/2}. Products go through the same repair.
class GroupElement {
public:
    GroupElement() = default;

    GroupElement(double a, double b, double c, double d) : m_{a, b, c, d} {
        for (double v : m_) {
            if (!std::isfinite(v)) throw InvalidInput("GroupElement: non-finite entry");
        }
        const double det = a * d - b * c;
        const double scale = std::max(1.0, std::abs(a * d) + std::abs(b * c));
        if (!(std::abs(det - 1.0) <= kUnimodularTol * scale)) {
            throw InvalidInput("GroupElement: determinant " + std::to_string(det) + " is not 1");
        }
        if (det != 1.0) {
            const double r = 1.0 / std::sqrt(det);
            for (double& v : m_) v *= r;
        }
    }

    static GroupElement identity() { return {}; }
    static GroupElement diag(double lambda) { return {lambda, 0.0, 0.0, 1.0 / lambda}; }
    static GroupElement rotation(double angle) {
        const double c = std::cos(angle), s = std::sin(angle);
        return {c, -s, s, c};
    }
    static GroupElement upper(double t) { return {1.0, t, 0.0, 1.0}; }
    static GroupElement lower(double t) { return {1.0, 0.0, t, 1.0}; }

    double a() const { return m_[0]; }
    double b() const { return m_[1]; }
    double c() const { return m_[2]; }
    double d() const { return m_[3]; }

    double det() const { return m_[0] * m_[3] - m_[1] * m_[2]; }

    GroupElement inverse() const { return unchecked(m_[3], -m_[1], -m_[2], m_[0]); }
    GroupElement transpose() const { return unchecked(m_[0], m_[2], m_[1], m_[3]); }

    friend GroupElement operator*(const GroupElement& x, const GroupElement& y) {
        return GroupElement(x.a() * y.a() + x.b() * y.c(), x.a() * y.b() + x.b() * y.d(),
                            x.c() * y.a() + x.d() * y.c(), x.c() * y.b() + x.d() * y.d());
    }

    friend bool operator==(const GroupElement&, const GroupElement&) = default;

    double frobenius() const { return std::hypot(std::hypot(m_[0], m_[1]), std::hypot(m_[2], m_[3])); }

    Eigen::Matrix2d matrix() const {
        Eigen::Matrix2d m;
        m << m_[0], m_[1], m_[2], m_[3];
        return m;
    }

    friend std::ostream& operator<<(std::ostream& os, const GroupElement& g) {
        return os << "[[" << g.a() << ", " << g.b() << "], [" << g.c() << ", " << g.d() << "]]";
    }

private:
    // Entries already known to be unimodular to rounding (inverse, transpose).
    static GroupElement unchecked(double a, double b, double c, double d) {
        GroupElement g;
        g.m_ = {a, b, c, d};
        return g;
    }

    std::array<double, 4> m_{1.0, 0.0, 0.0, 1.0};
};

/// Element h*H + e*E + f*F of sl2.
struct LieVector {
    double h = 0.0;
    double e = 0.0;
    double f = 0.0;

    static LieVector H() { return {1.0, 0.0, 0.0}; }
    static LieVector E() { return {0.0, 1.0, 0.0}; }
    static LieVector F() { return {0.0, 0.0, 1.0}; }

    // Norm induced by tr(X Y^T).
    double norm() const { return std::sqrt(2.0 * h * h + e * e + f * f); }

    // Matrix [[h, e], [f, -h]].
    Eigen::Matrix2d matrix() const {
        Eigen::Matrix2d m;
        m << h, e, f, -h;
        return m;
    }

    static LieVector from_matrix(const Eigen::Matrix2d& m) { return {0.5 * (m(0, 0) - m(1, 1)), m(0, 1), m(1, 0)}; }

    friend LieVector operator+(LieVector x, LieVector y) { return {x.h + y.h, x.e + y.e, x.f + y.f}; }
    friend LieVector operator*(double s, LieVector x) { return {s * x.h, s * x.e, s * x.f}; }
    friend bool operator==(const LieVector&, const LieVector&) = default;
};

/// g = k1 * diag(sigma, 1/sigma) * k2 with k1, k2 rotations and sigma >= 1.
struct CartanTriple {
    GroupElement k1;
    double sigma = 1.0;
    GroupElement k2;

    GroupElement recompose() const { return k1 * GroupElement::diag(sigma) * k2; }
};

/// KA+K decomposition in closed form.
///
/// Writing g = A R(phi) + B J R(psi) with J = diag(1, -1) gives
/// A = sqrt(p^2 + q^2), B = sqrt(r^2 + s^2) for p = (a+d)/2, q = (c-b)/2,
/// r = (a-d)/2, s = (b+c)/2, and sigma = A + B. When B = 0 the element is a
/// rotation and the triple is (g, 1, I).
inline CartanTriple cartan_decompose(const GroupElement& g) {
    const double p = 0.5 * (g.a() + g.d());
    const double q = 0.5 * (g.c() - g.b());
    const double r = 0.5 * (g.a() - g.d());
    const double s = 0.5 * (g.b() + g.c());
    const double big = std::hypot(p, q);
    const double small = std::hypot(r, s);
    if (small == 0.0) return {g, 1.0, GroupElement::identity()};

    const double phi = std::atan2(q, p);
    const double psi = std::atan2(-s, r);
    const double alpha = 0.5 * (phi - psi);
    const double beta = 0.5 * (phi + psi);
    return {GroupElement::rotation(alpha), big + small, GroupElement::rotation(beta)};
}

// Largest singular value of g.
inline double singular_value(const GroupElement& g) { return cartan_decompose(g).sigma; }

/// Matrix of Ad(g) on sl2 in the basis (H, E, F).
inline Eigen::Matrix3d ad_matrix(const GroupElement& g) {
    const Eigen::Matrix2d m = g.matrix();
    const Eigen::Matrix2d mi = g.inverse().matrix();
    Eigen::Matrix3d out;
    const std::array<LieVector, 3> basis{LieVector::H(), LieVector::E(), LieVector::F()};
    for (int col = 0; col < 3; ++col) {
        const LieVector v = LieVector::from_matrix(m * basis[col].matrix() * mi);
        out(0, col) = v.h;
        out(1, col) = v.e;
        out(2, col) = v.f;
    }
    return out;
}

inline LieVector ad_apply(const GroupElement& g, const LieVector& x) {
    return LieVector::from_matrix(g.matrix() * x.matrix() * g.inverse().matrix());
}

/// Operator norm of Ad(g) for the tr(XY^T) norm on sl2.
///
/// Computed as the largest singular value of W Ad(g) W^{-1}, W = diag(sqrt 2, 1, 1),
/// i.e. of Ad(g) in an orthonormal basis. Equals sigma(g)^2.
inline double op_norm(const GroupElement& g) {
    const Eigen::Vector3d w(std::numbers::sqrt2, 1.0, 1.0);
    const Eigen::Matrix3d m = w.asDiagonal() * ad_matrix(g) * w.cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(m);
    return std::max(1.0, svd.singularValues()(0));
}

/// Cartan pseudo-distance |log a_{g^{-1} h}| = sqrt(2) log sigma(g^{-1} h).
///
/// Left-invariant, bi-K-invariant, and zero on K-cosets. Equals the
/// hyperbolic distance between g.i and h.i divided by sqrt(2).
inline double cartan_distance(const GroupElement& g, const GroupElement& h) {
    return std::numbers::sqrt2 * std::log(singular_value(g.inverse() * h));
}

/// Matrix exponential on sl2. X^2 = (h^2 + ef) I, so the series sums to
/// cosh/sinh, cos/sin or I + X according to the sign of h^2 + ef.
inline GroupElement exp_sl2(const LieVector& x) {
    for (double v : {x.h, x.e, x.f}) {
        if (!std::isfinite(v)) throw InvalidInput("exp_sl2: non-finite coefficient");
    }
    const double disc = x.h * x.h + x.e * x.f;
    double c0, c1; // exp X = c0 I + c1 X
    if (disc == 0.0) {
        c0 = 1.0;
        c1 = 1.0;
    } else if (std::abs(disc) < 1e-8) {
        c0 = 1.0 + disc / 2.0 + disc * disc / 24.0;
        c1 = 1.0 + disc / 6.0 + disc * disc / 120.0;
    } else if (disc > 0.0) {
        const double mu = std::sqrt(disc);
        c0 = std::cosh(mu);
        c1 = std::sinh(mu) / mu;
    } else {
        const double mu = std::sqrt(-disc);
        c0 = std::cos(mu);
        c1 = std::sin(mu) / mu;
    }
    return {c0 + c1 * x.h, c1 * x.e, c1 * x.f, c0 - c1 * x.h};
}

/// Pairwise separation statistics of a tuple of group elements.
struct SeparationStats {
    double M_hat = 1.0; // exp(min pairwise cartan_distance)
    double q = 1.0;     // min pairwise op_norm(g_i^{-1} g_j)
    double Q = 1.0;     // max pairwise op_norm(g_i^{-1} g_j)
};

inline SeparationStats separation_stats(std::span<const GroupElement> gs) {
    if (gs.size() < 2) throw InvalidInput("separation_stats: need at least two elements");
    double min_dist = std::numeric_limits<double>::infinity();
    double q = std::numeric_limits<double>::infinity();
    double Q = 0.0;
    for (std::size_t i = 0; i < gs.size(); ++i) {
        for (std::size_t j = i + 1; j < gs.size(); ++j) {
            const GroupElement rel = gs[i].inverse() * gs[j];
            const double n = op_norm(rel);
            min_dist = std::min(min_dist, cartan_distance(gs[i], gs[j]));
            q = std::min(q, n);
            Q = std::max(Q, n);
        }
    }
    return {std::exp(min_dist), q, Q};
}

} // namespace mixlab
