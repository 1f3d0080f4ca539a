#pragma once

// Smooth bump functions on X, Monte Carlo Sobolev norms along the basis
// (H, E, F), projective tensor norms, and an empirical harness for the
// norm axioms (sup-norm domination, Lipschitz, translation growth, products).

#include <mixlab/error.hpp>
#include <mixlab/homspace.hpp>
#include <mixlab/hyperbolic.hpp>
#include <mixlab/lie.hpp>
#include <mixlab/parallel.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace mixlab {

using ScalarFunction = std::function<double(const XPoint&)>;

// Standard mollifier profile exp(-1/(1-u)) on u < 1.
inline double bump_profile(double u) { return u < 1.0 ? std::exp(-1.0 / (1.0 - u)) : 0.0; }

enum class Normalization { raw, unit_mass, unit_sobolev };

inline const char* to_string(Normalization n) {
    switch (n) {
    case Normalization::raw: return "raw";
    case Normalization::unit_mass: return "unit_mass";
    case Normalization::unit_sobolev: return "unit_sobolev";
    }
    return "raw";
}

inline Normalization parse_normalization(const std::string& s) {
    if (s == "raw") return Normalization::raw;
    if (s == "unit_mass") return Normalization::unit_mass;
    if (s == "unit_sobolev") return Normalization::unit_sobolev;
    throw InvalidInput("unknown normalization mode '" + s + "'");
}

/// Mass m(phi) of a bump of unit amplitude and the given radius.
///
/// The periodized function integrates to (3/pi) times the integral over the
/// plane, i.e. 6 * int_0^{sqrt2 r} psi(rho^2 / (2 r^2)) sinh(rho) d rho.
inline double bump_unit_mass(double radius) {
    const double rho_max = std::numbers::sqrt2 * radius;
    auto integrand = [&](double rho) { return bump_profile(rho * rho / (rho_max * rho_max)) * std::sinh(rho); };
    return 6.0 * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, rho_max, 15, 1e-13);
}

/// amplitude * psi(dist^2 / radius^2), dist the Cartan pseudo-distance to the
/// center, summed over all lattice translates. The function is K-invariant.
struct Bump {
    XPoint center;
    double radius = 0.5;
    double amplitude = 1.0;
    Normalization mode = Normalization::raw;

    Bump() = default;
    Bump(XPoint c, double r, double amp = 1.0, Normalization m = Normalization::raw)
        : center(c), radius(r), amplitude(amp), mode(m) {
        if (!(r > 0.0) || !std::isfinite(r)) throw InvalidInput("Bump: radius must be positive");
        if (!std::isfinite(amp)) throw InvalidInput("Bump: amplitude must be finite");
    }

    static Bump unit_mass(XPoint c, double r) { return {c, r, 1.0 / bump_unit_mass(r), Normalization::unit_mass}; }

    double operator()(const XPoint& p) const {
        thread_local std::vector<OrbitHit> hits;
        const double rho_max = std::numbers::sqrt2 * radius;
        orbit_near(center.h(), p.h(), rho_max, hits);
        double total = 0.0;
        for (const auto& hit : hits) total += bump_profile(hit.distance * hit.distance / (rho_max * rho_max));
        return amplitude * total;
    }

    Bump scaled(double s) const { return {center, radius, amplitude * s, Normalization::raw}; }

    // Largest value, attained at the center.
    double sup_norm() const { return std::abs((*this)(center)); }

    friend bool operator==(const Bump&, const Bump&) = default;
};

inline double eval(const Bump& phi, const XPoint& p) { return phi(p); }

// (g.f)(x) = f(g^{-1}.x)
template <class F>
ScalarFunction translate(const GroupElement& g, F f) {
    const GroupElement ginv = g.inverse();
    return [ginv, f = std::move(f)](const XPoint& p) { return f(act(ginv, p)); };
}

template <class F, class G>
ScalarFunction product(F f, G g) {
    return [f = std::move(f), g = std::move(g)](const XPoint& p) { return f(p) * g(p); };
}

struct SobolevConfig {
    int d = 1;
    double kappa = 0.0;
    std::size_t mc_samples = 4000;
    double fd_step = 1e-3;
    std::uint64_t seed = 0x5eed5eedULL;

    void validate() const {
        if (d < 0 || d > 3) throw InvalidInput("SobolevConfig: d must lie in [0, 3]");
        if (kappa != 0.0) throw InvalidInput("SobolevConfig: only kappa = 0 is supported");
        if (mc_samples < 2) throw InvalidInput("SobolevConfig: need at least two samples");
        if (!(fd_step >= 1e-5 && fd_step <= 1e-2)) throw InvalidInput("SobolevConfig: fd_step must lie in [1e-5, 1e-2]");
    }
};

struct NormEstimate {
    double value = 0.0;
    double stderr = 0.0;
    bool fd_warning = false; // steps h and 2h disagree by more than 10%
};

namespace detail {

// Exponents (m_H, m_E, m_F) with m_H + m_E + m_F <= d.
inline std::vector<std::array<int, 3>> monomials(int d) {
    std::vector<std::array<int, 3>> out;
    for (int deg = 0; deg <= d; ++deg)
        for (int mh = deg; mh >= 0; --mh)
            for (int me = deg - mh; me >= 0; --me) out.push_back({mh, me, deg - mh - me});
    return out;
}

/// Finite-difference stencil for D_H^{mH} D_E^{mE} D_F^{mF} at step h: the
/// nested central differences expand to a signed sum over group elements
/// u with weight w, D_W f(x) ~ sum w f(u.x).
struct Stencil {
    std::vector<GroupElement> shifts;
    std::vector<double> weights;
};

inline Stencil make_stencil(const std::array<int, 3>& m, double h) {
    std::vector<LieVector> word;
    const std::array<LieVector, 3> basis{LieVector::H(), LieVector::E(), LieVector::F()};
    for (int b = 0; b < 3; ++b)
        for (int r = 0; r < m[b]; ++r) word.push_back(basis[b]);

    Stencil st;
    const std::size_t n = word.size();
    const double scale = std::pow(2.0 * h, -static_cast<double>(n));
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        GroupElement u;
        double sign = 1.0;
        // Outermost derivative is applied last: D_{Y1}(D_{Y2} f)(x) uses exp(t2 Y2) exp(t1 Y1).x
        for (std::size_t k = 0; k < n; ++k) {
            const double eps = (mask >> k) & 1 ? -1.0 : 1.0;
            sign *= eps;
            u = exp_sl2((eps * h) * word[k]) * u;
        }
        st.shifts.push_back(u);
        st.weights.push_back(sign * scale);
    }
    return st;
}

template <class F>
double apply_stencil(const Stencil& st, const F& f, const XPoint& x) {
    double acc = 0.0;
    for (std::size_t s = 0; s < st.shifts.size(); ++s) acc += st.weights[s] * f(act(st.shifts[s], x));
    return acc;
}

} // namespace detail

/// Monte Carlo estimate of S_d(f) = (sum_{deg W <= d} int |D_W f|^2 dm)^{1/2}.
///
/// Derivatives are central differences along one-parameter subgroups of the
/// basis (H, E, F) acting on X. The same estimate is repeated at step 2h; a
/// relative disagreement above 10% sets fd_warning.
template <class F>
NormEstimate sobolev_norm(const F& f, const SobolevConfig& cfg) {
    cfg.validate();
    const auto monos = detail::monomials(cfg.d);
    std::vector<detail::Stencil> fine, coarse;
    for (const auto& m : monos) {
        fine.push_back(detail::make_stencil(m, cfg.fd_step));
        coarse.push_back(detail::make_stencil(m, 2.0 * cfg.fd_step));
    }
    const bool check = cfg.d > 0;

    const Moments acc = block_reduce(
        cfg.mc_samples, [] { return Moments(2); },
        [&](std::size_t i, Moments& m) {
            const XPoint x = haar_point(cfg.seed, i);
            double s_fine = 0.0, s_coarse = 0.0;
            for (std::size_t w = 0; w < monos.size(); ++w) {
                const double v = detail::apply_stencil(fine[w], f, x);
                s_fine += v * v;
                if (check) {
                    const double vc = detail::apply_stencil(coarse[w], f, x);
                    s_coarse += vc * vc;
                }
            }
            m.add(0, s_fine);
            m.add(1, s_coarse);
            ++m.count;
        },
        [](Moments& into, const Moments& from) { into.merge(from); });

    NormEstimate out;
    const double mean_sq = acc.mean(0);
    out.value = std::sqrt(mean_sq);
    out.stderr = out.value > 0.0 ? acc.stderr_of_mean(0) / (2.0 * out.value) : 0.0;
    if (check) {
        const double other = std::sqrt(acc.mean(1));
        const double scale = std::max(out.value, other);
        out.fd_warning = scale > 0.0 && std::abs(out.value - other) > 0.1 * scale;
    }
    return out;
}

inline NormEstimate sobolev_norm(const Bump& phi, const SobolevConfig& cfg) { return sobolev_norm<Bump>(phi, cfg); }

/// Bump rescaled so that its estimated S_d equals one.
inline Bump unit_sobolev_bump(XPoint c, double r, const SobolevConfig& cfg) {
    const double n = sobolev_norm(Bump(c, r), cfg).value;
    if (!(n > 0.0)) throw NumericDegeneracy("unit_sobolev_bump: zero norm estimate");
    return {c, r, 1.0 / n, Normalization::unit_sobolev};
}

/// Finite sums of elementary tensors phi_1 (x) ... (x) phi_n on X^n.
///
/// Several representations of the same tensor may be stored; the first one
/// is used for evaluation, and projective_norm minimizes over all of them.
class TensorFunction {
public:
    using Term = std::vector<Bump>;
    using Representation = std::vector<Term>;

    TensorFunction() = default;
    explicit TensorFunction(Representation rep) { add_representation(std::move(rep)); }

    static TensorFunction elementary(std::vector<Bump> factors) { return TensorFunction(Representation{std::move(factors)}); }

    // Caller guarantees the new representation describes the same tensor.
    void add_representation(Representation rep) {
        if (rep.empty()) throw InvalidInput("TensorFunction: empty representation");
        const std::size_t n = rep.front().size();
        if (n == 0) throw InvalidInput("TensorFunction: empty term");
        for (const auto& t : rep)
            if (t.size() != n) throw InvalidInput("TensorFunction: terms of different arity");
        if (!reps_.empty() && n != arity()) throw InvalidInput("TensorFunction: representation arity mismatch");
        reps_.push_back(std::move(rep));
    }

    std::size_t arity() const { return reps_.empty() ? 0 : reps_.front().front().size(); }
    const std::vector<Representation>& representations() const { return reps_; }
    const Representation& terms() const { return reps_.front(); }

    double operator()(std::span<const XPoint> xs) const {
        double total = 0.0;
        for (const auto& term : reps_.front()) {
            double prod = 1.0;
            for (std::size_t i = 0; i < term.size(); ++i) prod *= term[i](xs[i]);
            total += prod;
        }
        return total;
    }

private:
    std::vector<Representation> reps_;
};

/// min over stored representations of sum_j prod_i S_d(factor_ij); an upper
/// bound for the projective tensor norm.
inline double projective_norm(const TensorFunction& t, const SobolevConfig& cfg) {
    if (t.representations().empty()) throw InvalidInput("projective_norm: empty tensor");
    std::vector<std::pair<Bump, double>> cache;
    auto norm_of = [&](const Bump& b) {
        for (const auto& [k, v] : cache)
            if (k == b) return v;
        const double v = sobolev_norm(b, cfg).value;
        cache.emplace_back(b, v);
        return v;
    };
    double best = std::numeric_limits<double>::infinity();
    for (const auto& rep : t.representations()) {
        double sum = 0.0;
        for (const auto& term : rep) {
            double prod = 1.0;
            for (const auto& f : term) prod *= norm_of(f);
            sum += prod;
        }
        best = std::min(best, sum);
    }
    return best;
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

// Ordinary least squares y ~ intercept + slope x. R^2 is 1 for an exact fit.
inline LinearFit fit_line(std::span<const double> xs, std::span<const double> ys) {
    const std::size_t n = xs.size();
    if (n < 2 || ys.size() != n) throw InsufficientData("fit_line: need at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0) throw InsufficientData("fit_line: abscissae are all equal");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
        ss_res += r * r;
    }
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : (ss_res == 0.0 ? 1.0 : 0.0);
    return fit;
}

inline constexpr double kNearIdentity = 0.25;

namespace detail {

// Points of X covering the support of a bump: rings around the center in
// the plane, each at several frame angles.
inline std::vector<XPoint> support_grid(const Bump& phi, int rings = 16, int spokes = 16, int frames = 8) {
    std::vector<XPoint> out{phi.center};
    const double rho_max = std::numbers::sqrt2 * phi.radius;
    const std::complex<double> i1(0.0, 1.0);
    for (int r = 1; r <= rings; ++r) {
        const double t = std::tanh(0.5 * rho_max * r / rings);
        for (int s = 0; s < spokes; ++s) {
            const std::complex<double> zeta = std::polar(t, 2.0 * std::numbers::pi * s / spokes);
            const std::complex<double> w = i1 * (1.0 + zeta) / (1.0 - zeta); // disc -> half-plane around i
            const HPoint z{phi.center.x + phi.center.y * w.real(), phi.center.y * w.imag()};
            const HPoint red = reduce_to_fundamental(z).point;
            for (int f = 0; f < frames; ++f) out.push_back({red.x, red.y, std::numbers::pi * f / frames});
        }
    }
    return out;
}

} // namespace detail

/// Empirical constants for the four norm axioms over a dictionary.
struct AxiomReport {
    double sup_bound = 0.0;         // sup |phi|_inf / S_d(phi)
    double lipschitz = 0.0;         // sup |phi - g.phi|_inf / (rho(g, e) S_d(phi))
    LinearFit lipschitz_fit;        // |phi - g.phi|_inf / S_d(phi) against rho(g, e), pooled
    double translation_exponent = 0.0; // fitted sigma: log(S_d(g.phi)/S_d(phi)) vs log |g|_op
    double translation_constant = 0.0; // sup ratio / |g|_op^sigma
    double product_bound = 0.0;     // sup S_d(phi1 phi2) / (S_{d+1}(phi1) S_{d+1}(phi2))
    bool product_checked = false;   // false when d + 1 exceeds the supported order

    bool all_finite() const {
        return std::isfinite(sup_bound) && std::isfinite(lipschitz) && std::isfinite(translation_constant) &&
               std::isfinite(translation_exponent) && (!product_checked || std::isfinite(product_bound));
    }
};

inline AxiomReport verify_norm_axioms(std::span<const Bump> dictionary, std::span<const GroupElement> probes,
                                      const SobolevConfig& cfg, std::size_t sup_points = 2000) {
    if (dictionary.empty() || probes.empty()) throw InvalidInput("verify_norm_axioms: empty dictionary or probes");
    cfg.validate();
    AxiomReport rep;

    std::vector<XPoint> grid = sample_haar({derive_seed(cfg.seed, 0xa11), sup_points});
    auto sup_over_grid = [&](const auto& f, const std::vector<XPoint>& extra) {
        double s = 0.0;
        for (const auto& p : grid) s = std::max(s, std::abs(f(p)));
        for (const auto& p : extra) s = std::max(s, std::abs(f(p)));
        return s;
    };

    std::vector<double> norms;
    for (const auto& phi : dictionary) {
        if (phi.amplitude == 0.0) throw InvalidInput("verify_norm_axioms: zero function in dictionary");
        norms.push_back(sobolev_norm(phi, cfg).value);
    }

    std::vector<std::vector<XPoint>> local;
    for (const auto& phi : dictionary) local.push_back(detail::support_grid(phi));

    // N1
    for (std::size_t i = 0; i < dictionary.size(); ++i)
        rep.sup_bound = std::max(rep.sup_bound, sup_over_grid(dictionary[i], local[i]) / norms[i]);

    // N2; the linear fit uses probes near the identity only
    std::vector<double> rho_x, lip_y;
    for (const auto& g : probes) {
        const double rho = cartan_distance(g, GroupElement::identity());
        if (rho < 1e-12) continue;
        for (std::size_t i = 0; i < dictionary.size(); ++i) {
            const Bump& phi = dictionary[i];
            const ScalarFunction moved = translate(g, phi);
            auto diff = [&](const XPoint& p) { return phi(p) - moved(p); };
            const double sup = sup_over_grid(diff, local[i]);
            rep.lipschitz = std::max(rep.lipschitz, sup / (rho * norms[i]));
            if (rho <= kNearIdentity) {
                rho_x.push_back(rho);
                lip_y.push_back(sup / norms[i]);
            }
        }
    }
    if (rho_x.size() >= 2) {
        try {
            rep.lipschitz_fit = fit_line(rho_x, lip_y);
        } catch (const InsufficientData&) {
        }
    }

    // N3
    std::vector<double> log_op, log_ratio, op_vals, ratios;
    for (const auto& g : probes) {
        const double op = op_norm(g);
        if (op <= 1.0 + 1e-9) continue;
        for (std::size_t i = 0; i < dictionary.size(); ++i) {
            const double moved = sobolev_norm(translate(g, dictionary[i]), cfg).value;
            log_op.push_back(std::log(op));
            log_ratio.push_back(std::log(moved / norms[i]));
            op_vals.push_back(op);
            ratios.push_back(moved / norms[i]);
        }
    }
    if (log_op.size() >= 2) {
        try {
            rep.translation_exponent = fit_line(log_op, log_ratio).slope;
        } catch (const InsufficientData&) {
        }
    }
    for (std::size_t i = 0; i < op_vals.size(); ++i)
        rep.translation_constant =
            std::max(rep.translation_constant, ratios[i] / std::pow(op_vals[i], rep.translation_exponent));

    // N4 with r = 1
    if (cfg.d + 1 <= 3) {
        rep.product_checked = true;
        SobolevConfig up = cfg;
        up.d = cfg.d + 1;
        std::vector<double> up_norms;
        for (const auto& phi : dictionary) up_norms.push_back(sobolev_norm(phi, up).value);
        for (std::size_t i = 0; i < dictionary.size(); ++i) {
            for (std::size_t j = i; j < dictionary.size(); ++j) {
                const double prod = sobolev_norm(product(dictionary[i], dictionary[j]), cfg).value;
                rep.product_bound = std::max(rep.product_bound, prod / (up_norms[i] * up_norms[j]));
            }
        }
    }
    return rep;
}

// Dictionary records, one per line:
//   bump x=<x> y=<y> theta=<theta> radius=<r> amplitude=<a> mode=<raw|unit_mass|unit_sobolev>

inline void write_dictionary(std::ostream& os, std::span<const Bump> dict) {
    for (const auto& b : dict) {
        char buf[512];
        std::snprintf(buf, sizeof buf, "bump x=%.17g y=%.17g theta=%.17g radius=%.17g amplitude=%.17g mode=%s\n",
                      b.center.x, b.center.y, b.center.theta, b.radius, b.amplitude, to_string(b.mode));
        os << buf;
    }
}

inline std::vector<Bump> read_dictionary(std::istream& is) {
    std::vector<Bump> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string kind;
        ls >> kind;
        if (kind != "bump") throw InvalidInput("dictionary line " + std::to_string(lineno) + ": expected 'bump'");
        std::map<std::string, std::string> kv;
        std::string tok;
        while (ls >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) throw InvalidInput("dictionary line " + std::to_string(lineno) + ": bad field");
            kv[tok.substr(0, eq)] = tok.substr(eq + 1);
        }
        auto num = [&](const char* key) {
            const auto it = kv.find(key);
            if (it == kv.end()) throw InvalidInput("dictionary line " + std::to_string(lineno) + ": missing " + key);
            return std::stod(it->second);
        };
        const auto mode_it = kv.find("mode");
        out.emplace_back(XPoint{num("x"), num("y"), num("theta")}, num("radius"), num("amplitude"),
                         mode_it == kv.end() ? Normalization::raw : parse_normalization(mode_it->second));
    }
    return out;
}

} // namespace mixlab
