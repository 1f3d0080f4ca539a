#pragma once

// Approximate configurations in the modular group: given targets v_1..v_k,
// find gamma_i in PSL2(Z) and an isometry g with d(v_i, g gamma_i . i) small.

#include <mixlab/error.hpp>
#include <mixlab/homspace.hpp>
#include <mixlab/hyperbolic.hpp>
#include <mixlab/lie.hpp>
#include <mixlab/random.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace mixlab {

inline double width(std::span<const HPoint> targets) {
    if (targets.size() < 2) throw InvalidInput("width: need at least two targets");
    double w = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < targets.size(); ++i)
        for (std::size_t j = i + 1; j < targets.size(); ++j) w = std::min(w, hyp_dist(targets[i], targets[j]));
    return w;
}

inline double width(std::span<const GroupElement> targets) {
    if (targets.size() < 2) throw InvalidInput("width: need at least two targets");
    double w = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < targets.size(); ++i)
        for (std::size_t j = i + 1; j < targets.size(); ++j) w = std::min(w, cartan_distance(targets[i], targets[j]));
    return w;
}

struct ConfigResult {
    std::vector<LatticeElement> gammas;
    GroupElement g;
    double max_error = std::numeric_limits<double>::infinity();
    double width = 0.0; // 0 for a single target
    bool found = false; // max_error < epsilon
};

enum class SearchMode {
    anchored,  // gamma_1, gamma_2 over the ball, rotation fixed by the pair, greedy for the rest
    exhaustive // all tuples (k <= 3), rotation scanned on a grid
};

struct ConfigRequest {
    std::vector<HPoint> targets;
    double epsilon = 0.1;
    double search_radius = 2.0;
    std::uint64_t seed = 0;
    SearchMode mode = SearchMode::anchored;
    std::size_t rotation_steps = 720; // exhaustive mode only
};

// n(x) a(y): maps i to z.
inline GroupElement translation_to(const HPoint& z) {
    const double sy = std::sqrt(z.y);
    return {sy, z.x / sy, 0.0, 1.0 / sy};
}

/// Isometry sending z1 to i and z2 to i e^{d(z1, z2)} on the imaginary axis.
inline GroupElement standard_frame(const HPoint& z1, const HPoint& z2) {
    const GroupElement hinv = translation_to(z1).inverse();
    const std::complex<double> w = mobius_act(hinv, z2).complex();
    const std::complex<double> zeta = (w - std::complex<double>(0, 1)) / (w + std::complex<double>(0, 1));
    // Rotation R(phi) about i multiplies the disc coordinate by e^{-2 i phi}.
    const double phi = std::abs(zeta) > 0.0 ? 0.5 * std::arg(zeta) : 0.0;
    return GroupElement::rotation(phi) * hinv;
}

namespace detail {

// Ball ordered by distance from i, identity first.
inline std::vector<LatticeElement> search_ball(double radius) {
    auto ball = enumerate_ball(radius);
    std::stable_sort(ball.begin(), ball.end(), [](const LatticeElement& a, const LatticeElement& b) {
        return a.sum_of_squares() < b.sum_of_squares();
    });
    const auto id = std::find(ball.begin(), ball.end(), LatticeElement::identity());
    std::rotate(ball.begin(), id, id + 1);
    return ball;
}

inline double max_error(std::span<const HPoint> targets, const GroupElement& g, std::span<const LatticeElement> gammas) {
    double err = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i)
        err = std::max(err, hyp_dist(targets[i], mobius_act(g * gammas[i].to_group(), HPoint{0.0, 1.0})));
    return err;
}

} // namespace detail

/// Searches for gamma_1..gamma_k in the ball of radius search_radius and g.
///
/// Anchored mode: for each (gamma_1, gamma_2), g maps gamma_1.i onto v_1 and
/// turns gamma_2.i toward v_2, which is optimal for the first two indices;
/// the remaining gamma_i are chosen greedily. Exhaustive mode (k <= 3) tries
/// every tuple with rotations about v_1 on a grid, as a cross-check.
inline ConfigResult find_configuration(const ConfigRequest& req) {
    const std::size_t k = req.targets.size();
    if (k < 1) throw InvalidInput("find_configuration: need at least one target");
    if (!(req.epsilon > 0.0)) throw InvalidInput("find_configuration: epsilon must be positive");
    const auto& v = req.targets;
    const auto ball = detail::search_ball(req.search_radius);
    std::vector<HPoint> orbit;
    for (const auto& g : ball) orbit.push_back(mobius_act(g, HPoint{0.0, 1.0}));

    ConfigResult best;
    best.width = k >= 2 ? width(v) : 0.0;

    if (k == 1) {
        best.gammas = {LatticeElement::identity()};
        best.g = translation_to(v[0]);
        best.max_error = hyp_dist(v[0], mobius_act(best.g, HPoint{0.0, 1.0}));
        best.found = best.max_error < req.epsilon;
        return best;
    }

    std::vector<std::size_t> pick(k);
    auto consider = [&](const GroupElement& g, std::span<const std::size_t> idx, double err) {
        if (err < best.max_error) {
            best.max_error = err;
            best.g = g;
            best.gammas.clear();
            for (auto i : idx) best.gammas.push_back(ball[i]);
        }
    };

    if (req.mode == SearchMode::anchored) {
        const GroupElement target_frame = standard_frame(v[0], v[1]);
        const GroupElement target_inv = target_frame.inverse();
        const double d12 = hyp_dist(v[0], v[1]);
        for (std::size_t a = 0; a < ball.size(); ++a) {
            for (std::size_t b = 0; b < ball.size(); ++b) {
                const double err2 = std::abs(d12 - hyp_dist(orbit[a], orbit[b]));
                if (err2 >= best.max_error) continue;
                const GroupElement g = target_inv * standard_frame(orbit[a], orbit[b]);
                pick[0] = a;
                pick[1] = b;
                double err = std::max(hyp_dist(v[0], mobius_act(g, orbit[a])), hyp_dist(v[1], mobius_act(g, orbit[b])));
                const GroupElement ginv = g.inverse();
                for (std::size_t i = 2; i < k && err < best.max_error; ++i) {
                    const HPoint pulled = mobius_act(ginv, v[i]);
                    double bi = std::numeric_limits<double>::infinity();
                    for (std::size_t c = 0; c < ball.size(); ++c) {
                        const double dd = hyp_dist(pulled, orbit[c]);
                        if (dd < bi) {
                            bi = dd;
                            pick[i] = c;
                        }
                    }
                    err = std::max(err, bi);
                }
                consider(g, pick, err);
            }
        }
    } else {
        if (k > 3) throw InvalidInput("find_configuration: exhaustive mode supports k <= 3");
        const GroupElement to_v1 = translation_to(v[0]);
        std::vector<std::size_t> idx(k, 0);
        for (;;) {
            const GroupElement from_u1 = translation_to(orbit[idx[0]]).inverse();
            for (std::size_t r = 0; r < req.rotation_steps; ++r) {
                const double phi = std::numbers::pi * static_cast<double>(r) / static_cast<double>(req.rotation_steps);
                const GroupElement g = to_v1 * GroupElement::rotation(phi) * from_u1;
                double err = 0.0;
                for (std::size_t i = 0; i < k; ++i) err = std::max(err, hyp_dist(v[i], mobius_act(g, orbit[idx[i]])));
                consider(g, idx, err);
            }
            std::size_t pos = 0;
            while (pos < k && ++idx[pos] == ball.size()) idx[pos++] = 0;
            if (pos == k) break;
        }
    }
    best.found = best.max_error < req.epsilon;
    return best;
}

/// Recomputes max_i d(v_i, g gamma_i . i) from scratch.
inline double verify_configuration(std::span<const HPoint> targets, const ConfigResult& r) {
    if (r.gammas.size() != targets.size()) throw InvalidInput("verify_configuration: size mismatch");
    return detail::max_error(targets, r.g, r.gammas);
}

/// Group-element targets: distances are cartan_distance(g_i, g gamma_i),
/// which is hyp_dist(g_i.i, g gamma_i.i) / sqrt(2).
inline ConfigResult find_configuration(std::span<const GroupElement> targets, double epsilon, double search_radius,
                                       SearchMode mode = SearchMode::anchored) {
    ConfigRequest req;
    for (const auto& g : targets) req.targets.push_back(mobius_act(g, HPoint{0.0, 1.0}));
    req.epsilon = std::numbers::sqrt2 * epsilon;
    req.search_radius = search_radius;
    req.mode = mode;
    ConfigResult r = find_configuration(req);
    r.max_error /= std::numbers::sqrt2;
    r.width = targets.size() >= 2 ? width(targets) : 0.0;
    r.found = r.max_error < epsilon;
    return r;
}

inline double verify_configuration(std::span<const GroupElement> targets, const ConfigResult& r) {
    if (r.gammas.size() != targets.size()) throw InvalidInput("verify_configuration: size mismatch");
    double err = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i)
        err = std::max(err, cartan_distance(targets[i], r.g * r.gammas[i].to_group()));
    return err;
}

struct DensityReport {
    double lower = 0.0; // c log(1/epsilon)
    double upper = 0.0;
    std::size_t points = 0;      // distances inside [lower, upper]
    double max_gap = 0.0;        // largest gap between consecutive distances in the interval
    double lower_edge_gap = 0.0; // first distance - lower
    double upper_edge_gap = 0.0; // upper - last distance
    bool degenerate = false;     // no distance inside the interval
    bool dense = false;          // max_gap <= 2 eps and both edge gaps <= eps
};

inline DensityReport density_check(double epsilon, double c, double upper) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidInput("density_check: epsilon must lie in (0, 1)");
    DensityReport rep;
    rep.lower = c * std::log(1.0 / epsilon);
    rep.upper = upper;
    if (!(upper > rep.lower)) throw InvalidInput("density_check: upper must exceed c log(1/epsilon)");
    std::vector<double> inside;
    for (double d : distance_set(upper))
        if (d >= rep.lower) inside.push_back(d);
    rep.points = inside.size();
    if (inside.empty()) {
        rep.degenerate = true;
        rep.max_gap = upper - rep.lower;
        return rep;
    }
    rep.lower_edge_gap = inside.front() - rep.lower;
    rep.upper_edge_gap = upper - inside.back();
    for (std::size_t i = 1; i < inside.size(); ++i) rep.max_gap = std::max(rep.max_gap, inside[i] - inside[i - 1]);
    rep.dense = rep.max_gap <= 2.0 * epsilon && rep.lower_edge_gap <= epsilon && rep.upper_edge_gap <= epsilon;
    return rep;
}

/// Point at hyperbolic distance `dist` from z in direction `angle`.
inline HPoint point_at(const HPoint& z, double dist, double angle) {
    const GroupElement frame = translation_to(z) * GroupElement::rotation(angle);
    return mobius_act(frame, HPoint{0.0, std::exp(dist)});
}

struct SuccessCell {
    double epsilon = 0.0;
    double width = 0.0;
    std::size_t trials = 0;
    std::size_t successes = 0;
    double mean_error = 0.0;
};

struct ConstantsEstimate {
    double c_hat = std::numeric_limits<double>::quiet_NaN();
    std::vector<SuccessCell> table;
};

/// Success table over an (epsilon, width) grid.
///
/// Trial t of width column w uses the same random targets for every
/// epsilon, so success is monotone in epsilon within a column. For each
/// epsilon < 1 the threshold is the smallest width from which every larger
/// width succeeds in at least half of the trials; c_hat is the least-squares
/// slope through the origin of threshold against log(1/epsilon).
inline ConstantsEstimate estimate_constants(std::span<const double> epsilons, std::span<const double> widths,
                                            std::size_t trials, std::uint64_t seed, std::size_t k = 2,
                                            double radius_margin = 1.0) {
    if (epsilons.empty() || widths.empty() || trials == 0) throw InvalidInput("estimate_constants: empty grid");
    if (k < 2) throw InvalidInput("estimate_constants: need k >= 2");
    if (!std::is_sorted(widths.begin(), widths.end())) throw InvalidInput("estimate_constants: widths must ascend");
    ConstantsEstimate out;
    // errors[w][t]
    std::vector<std::vector<double>> errors(widths.size());
    for (std::size_t wi = 0; wi < widths.size(); ++wi) {
        for (std::size_t t = 0; t < trials; ++t) {
            SampleRng rng(derive_seed(seed, wi), t);
            const XPoint base = haar_point(derive_seed(seed, 0xba5e), derive_seed(wi, t));
            ConfigRequest req;
            req.targets.push_back(base.h());
            for (std::size_t j = 1; j < k; ++j)
                req.targets.push_back(point_at(base.h(), widths[wi], rng.uniform(0.0, 2.0 * std::numbers::pi)));
            req.epsilon = 1.0;
            req.search_radius = widths[wi] + radius_margin;
            errors[wi].push_back(find_configuration(req).max_error);
        }
    }
    std::vector<double> xs, ys;
    for (double eps : epsilons) {
        std::vector<bool> half(widths.size());
        for (std::size_t wi = 0; wi < widths.size(); ++wi) {
            SuccessCell cell{eps, widths[wi], trials, 0, 0.0};
            for (double e : errors[wi]) {
                cell.successes += e < eps ? 1 : 0;
                cell.mean_error += e / static_cast<double>(trials);
            }
            half[wi] = 2 * cell.successes >= trials;
            out.table.push_back(cell);
        }
        if (eps >= 1.0) continue;
        std::optional<double> threshold;
        for (std::size_t wi = widths.size(); wi-- > 0;) {
            if (!half[wi]) break;
            threshold = widths[wi];
        }
        if (threshold) {
            xs.push_back(std::log(1.0 / eps));
            ys.push_back(*threshold);
        }
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += xs[i] * ys[i];
        sxx += xs[i] * xs[i];
    }
    if (sxx > 0.0) out.c_hat = sxy / sxx;
    return out;
}

} // namespace mixlab
