#pragma once

// Flows, time averages and Wasserstein-type semi-distances on couplings.
//
// Given g_1..g_k, build_flow produces nilpotent directions Z_j with weights
// w_j = |Z_j| normalized so that 1 = w_1 >= ... >= w_k. The flows
// h_j(t).x = exp(t Z_j).x drive the time-averaging operator P_T, and the
// pigeonhole scheduler picks the split p and time scale T.

#include <mixlab/error.hpp>
#include <mixlab/homspace.hpp>
#include <mixlab/lie.hpp>
#include <mixlab/parallel.hpp>
#include <mixlab/testfn.hpp>

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace mixlab {

struct FlowSpec {
    std::vector<LieVector> Z;         // relabeled, w descending
    std::vector<double> w;            // w_j = |Z_j|
    std::vector<GroupElement> source; // g_j in the relabeled order
    std::vector<std::size_t> order;   // order[j] = original index of relabeled j
    std::size_t s_index = 0;          // anchor s, relabeled
    double Q = 1.0;

    std::size_t k() const { return Z.size(); }
};

inline constexpr double kDegenerateTol = 1e-9;

// True when h^2 + ef (= -det of the matrix) vanishes relative to |X|^2.
inline bool is_nilpotent(const LieVector& x, double tol = 1e-9) {
    const double n2 = x.norm() * x.norm();
    return std::abs(x.h * x.h + x.e * x.f) <= tol * std::max(n2, 1e-300);
}

/// Nilpotent flow directions for a tuple of group elements.
///
/// Picks the lexicographically first pair (i1, s) realizing
/// Q = max |g_i^{-1} g_j|_op, sets Z = Ad(k2)^{-1} E from the Cartan factors
/// of g_i1^{-1} g_s so that |Ad(g_i1^{-1} g_s) Z| = Q, and normalizes
/// Z_j = Ad(g_j^{-1} g_s) Z / Q. Indices are relabeled so weights descend.
inline FlowSpec build_flow(std::span<const GroupElement> gs) {
    const std::size_t k = gs.size();
    if (k < 2) throw InvalidInput("build_flow: need at least two elements");
    double Q = 0.0;
    std::size_t i1 = 0, s = 1;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            const double n = op_norm(gs[i].inverse() * gs[j]);
            if (n > Q * (1.0 + 1e-12)) {
                Q = n;
                i1 = i;
                s = j;
            }
        }
    }
    if (Q <= 1.0 + kDegenerateTol) throw DegenerateTuple("build_flow: all elements coincide up to K (Q = 1)");

    const CartanTriple ct = cartan_decompose(gs[i1].inverse() * gs[s]);
    const LieVector Z = ad_apply(ct.k2.inverse(), LieVector::E());

    std::vector<LieVector> raw(k);
    std::vector<double> norms(k);
    for (std::size_t j = 0; j < k; ++j) {
        raw[j] = ad_apply(gs[j].inverse() * gs[s], Z);
        norms[j] = raw[j].norm();
    }
    const double top = norms[i1];

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (a == i1) return b != i1;
        if (b == i1) return false;
        return norms[a] > norms[b];
    });

    FlowSpec spec;
    spec.Q = Q;
    spec.order = order;
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t src = order[j];
        spec.Z.push_back((1.0 / top) * raw[src]);
        spec.w.push_back(j == 0 ? 1.0 : norms[src] / top);
        spec.source.push_back(gs[src]);
        if (src == s) spec.s_index = j;
    }
    return spec;
}

/// h_j(t).p = exp(t Z_j).p, j zero-based in the relabeled order.
inline XPoint flow_apply(const FlowSpec& spec, std::size_t j, double t, const XPoint& p) {
    if (j >= spec.k()) throw InvalidInput("flow_apply: flow index out of range");
    return act(exp_sl2(t * spec.Z[j]), p);
}

namespace detail {
// Full 257-node Gauss-Legendre rule on [-1, 1].
struct LegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline const LegendreRule& legendre257() {
    static const LegendreRule rule = [] {
        using G = boost::math::quadrature::gauss<double, 257>;
        LegendreRule r;
        const auto& x = G::abscissa();
        const auto& w = G::weights();
        // abscissa()[0] is the center node for odd N
        for (std::size_t i = x.size(); i-- > 1;) {
            r.nodes.push_back(-x[i]);
            r.weights.push_back(w[i]);
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            r.nodes.push_back(x[i]);
            r.weights.push_back(w[i]);
        }
        return r;
    }();
    return rule;
}
} // namespace detail

/// Time averages along a flow: (P_T f)(x) = (1/2T) int_{-T}^{T} f(h_j(t).x) dt.
///
/// With t_samples = 0 the integral uses a fixed 257-node Gauss-Legendre rule,
/// making P_T a deterministic linear operator. Otherwise t is drawn uniformly
/// t_samples times from a stream derived from `seed` and the point.
class TimeAverager {
public:
    TimeAverager(const FlowSpec& spec, std::size_t j, double T, std::size_t t_samples = 0, std::uint64_t seed = 0)
        : T_(T), mc_(t_samples), seed_(seed) {
        if (!(T > 0.0)) throw InvalidInput("time_average: T must be positive");
        if (j >= spec.k()) throw InvalidInput("time_average: flow index out of range");
        if (mc_ == 0) {
            const auto& rule = detail::legendre257();
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                shifts_.push_back(exp_sl2((T * rule.nodes[i]) * spec.Z[j]));
                weights_.push_back(0.5 * rule.weights[i]);
            }
        } else {
            Z_ = spec.Z[j];
        }
    }

    template <class F>
    double operator()(const F& f, const XPoint& p) const {
        double acc = 0.0;
        if (mc_ == 0) {
            for (std::size_t i = 0; i < shifts_.size(); ++i) acc += weights_[i] * f(act(shifts_[i], p));
            return acc;
        }
        const std::uint64_t h = derive_seed(seed_, std::hash<double>{}(p.x) ^ (std::hash<double>{}(p.y) << 1) ^
                                                         (std::hash<double>{}(p.theta) << 2));
        SampleRng rng(h, 0);
        for (std::size_t i = 0; i < mc_; ++i) acc += f(act(exp_sl2(rng.uniform(-T_, T_) * Z_), p));
        return acc / static_cast<double>(mc_);
    }

    double T() const { return T_; }

private:
    double T_;
    std::size_t mc_;
    std::uint64_t seed_;
    LieVector Z_;
    std::vector<GroupElement> shifts_;
    std::vector<double> weights_;
};

template <class F>
double time_average(const F& f, double T, const FlowSpec& spec, std::size_t j, const XPoint& p,
                    std::size_t t_samples = 0, std::uint64_t seed = 0) {
    return TimeAverager(spec, j, T, t_samples, seed)(f, p);
}

/// A finite family of test functions with cached norms. Entries are used
/// through f / norm, so every rescaled entry has unit norm.
template <class Point>
struct DictionaryEntry {
    std::function<double(const Point&)> f;
    double norm = 1.0;
    int order = 0;
    double sup_bound = std::numeric_limits<double>::infinity(); // bound on |f|_inf, if known

    double operator()(const Point& p) const { return f(p) / norm; }
};

template <class Point>
class Dictionary {
public:
    void add(std::function<double(const Point&)> f, double norm, int order = 0,
             double sup_bound = std::numeric_limits<double>::infinity()) {
        if (!(norm > 0.0) || !std::isfinite(norm)) throw InvalidInput("Dictionary: cached norm must be positive and finite");
        entries_.push_back({std::move(f), norm, order, sup_bound});
    }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const DictionaryEntry<Point>& operator[](std::size_t i) const { return entries_[i]; }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    // Multiply every cached norm by `factor`.
    Dictionary rescaled(double factor) const {
        Dictionary out;
        for (const auto& e : entries_) out.add(e.f, e.norm * factor, e.order, e.sup_bound);
        return out;
    }

private:
    std::vector<DictionaryEntry<Point>> entries_;
};

/// Dictionary of bumps with cached S_d norms from `cfg`.
inline Dictionary<XPoint> bump_dictionary(std::span<const Bump> bumps, const SobolevConfig& cfg) {
    Dictionary<XPoint> dict;
    for (const auto& b : bumps) dict.add(b, sobolev_norm(b, cfg).value, cfg.d, b.sup_norm());
    return dict;
}

struct SupEstimate {
    double value = 0.0;
    double stderr = 0.0;
    std::size_t argmax = 0;
};

/// sup over the dictionary of |mu(phi) - nu(phi)|, a lower bound for the
/// semi-distance over the unit ball. The two measures are sampled in pairs
/// (mu(i), nu(i)), so identical samplers give exactly zero.
template <class Point, class MuSampler, class NuSampler>
SupEstimate wasserstein(const MuSampler& mu, const NuSampler& nu, const Dictionary<Point>& dict, std::size_t samples) {
    if (dict.empty()) throw InvalidInput("wasserstein: empty dictionary");
    if (samples < 2) throw InvalidInput("wasserstein: need at least two samples");
    const std::size_t n = dict.size();
    const Moments acc = block_reduce(
        samples, [n] { return Moments(n); },
        [&](std::size_t i, Moments& m) {
            const Point a = mu(i);
            const Point b = nu(i);
            for (std::size_t e = 0; e < n; ++e) m.add(e, dict[e](a) - dict[e](b));
            ++m.count;
        },
        [](Moments& into, const Moments& from) { into.merge(from); });
    SupEstimate out;
    for (std::size_t e = 0; e < n; ++e) {
        const double v = std::abs(acc.mean(e));
        if (e == 0 || v > out.value) {
            out.value = v;
            out.stderr = acc.stderr_of_mean(e);
            out.argmax = e;
        }
    }
    return out;
}

/// E_T(nu) over a dictionary: max_phi (int |P_T phi - nu(phi)|^2 dnu)^{1/2},
/// with nu(phi) estimated from the same draws. A lower bound for the
/// supremum over the unit ball.
template <class Sampler>
SupEstimate e_t_statistic(const Sampler& nu, const Dictionary<XPoint>& dict, double T, const FlowSpec& spec,
                          std::size_t j, std::size_t samples) {
    if (dict.empty()) throw InvalidInput("e_t_statistic: empty dictionary");
    if (samples < 2) throw InvalidInput("e_t_statistic: need at least two samples");
    const TimeAverager avg(spec, j, T);
    const std::size_t n = dict.size();
    // Moments are taken about a pilot value (the entry at the first draw) to
    // avoid cancellation when P_T phi is nearly constant.
    std::vector<double> pilot(n);
    for (std::size_t e = 0; e < n; ++e) pilot[e] = dict[e](nu(0));
    // per entry: P, P^2, P^3, P^4, phi, all shifted by the pilot
    const Moments acc = block_reduce(
        samples, [n] { return Moments(5 * n); },
        [&](std::size_t i, Moments& m) {
            const XPoint x = nu(i);
            for (std::size_t e = 0; e < n; ++e) {
                const double p = avg(dict[e], x) - pilot[e];
                const double p2 = p * p;
                m.add(5 * e + 0, p);
                m.add(5 * e + 1, p2);
                m.add(5 * e + 2, p2 * p);
                m.add(5 * e + 3, p2 * p2);
                m.add(5 * e + 4, dict[e](x) - pilot[e]);
            }
            ++m.count;
        },
        [](Moments& into, const Moments& from) { into.merge(from); });

    SupEstimate out;
    const double N = static_cast<double>(acc.count);
    for (std::size_t e = 0; e < n; ++e) {
        const double c = acc.mean(5 * e + 4);
        const double m1 = acc.mean(5 * e), m2 = acc.mean(5 * e + 1), m3 = acc.mean(5 * e + 2), m4 = acc.mean(5 * e + 3);
        // moments of (P - c)^2
        const double s2 = std::max(0.0, m2 - 2.0 * c * m1 + c * c);
        const double s4 = m4 - 4.0 * c * m3 + 6.0 * c * c * m2 - 4.0 * c * c * c * m1 + c * c * c * c;
        const double value = std::sqrt(s2);
        const double var_sq = std::max(0.0, s4 - s2 * s2);
        const double se = value > 0.0 ? std::sqrt(var_sq / N) / (2.0 * value) : 0.0;
        if (e == 0 || value > out.value) {
            out.value = value;
            out.stderr = se;
            out.argmax = e;
        }
    }
    return out;
}

struct ThreeTermResult {
    double T = 0.0;
    std::size_t p = 1;
    double delta = 0.0;
    double term_I = 0.0;   // dist(eta, (P_T x id)_* eta)
    double term_II = 0.0;  // dist((P_T x id)_* eta, eta_1 x eta_2)
    double term_III = 0.0; // dist(eta_1 x eta_2, m x m)
    double direct = 0.0;   // dist(eta, m x m)
    double se_I = 0.0, se_II = 0.0, se_III = 0.0, se_direct = 0.0;
    bool t_in_window = true; // T in [1/w_p, 1/w_{p+1}]

    double sum() const { return term_I + term_II + term_III; }
};

/// Samplers for the three-term diagnostic on X x X.
template <class EtaSampler, class Eta1Sampler, class Eta2Sampler, class M1Sampler, class M2Sampler>
struct ThreeTermSamplers {
    EtaSampler eta;   // i -> std::pair<XPoint, XPoint>
    Eta1Sampler eta1; // marginal on the first factor
    Eta2Sampler eta2; // marginal on the second factor
    M1Sampler m1;
    M2Sampler m2;
};

/// Termwise estimate of the triangle decomposition
///   dist(eta, m x m) <= dist(eta, (P_T x id)_* eta) + dist((P_T x id)_* eta, eta_1 x eta_2)
///                       + dist(eta_1 x eta_2, m x m)
/// over the product dictionary {phi (x) psi}, with P_T averaging the first
/// factor along flow j of `spec`. Every term shares its sample means with its
/// neighbours, so the estimated terms obey the triangle inequality per entry.
template <class S>
ThreeTermResult three_term_diagnostic(const S& samplers, const Dictionary<XPoint>& first, const Dictionary<XPoint>& second,
                                      double T, const FlowSpec& spec, std::size_t j, std::size_t samples,
                                      std::size_t p = 1) {
    if (first.empty() || second.empty()) throw InvalidInput("three_term_diagnostic: empty dictionary");
    if (samples < 2) throw InvalidInput("three_term_diagnostic: need at least two samples");
    const TimeAverager avg(spec, j, T);
    const std::size_t na = first.size(), nb = second.size(), np = na * nb;
    // Layout: per pair (uv, pv, (u-p)v) sums and squares; per single entry
    // y1_a, z1_a, y2_b, z2_b.
    const std::size_t pair_base = 0, single_base = 3 * np;
    const std::size_t dims = 3 * np + 2 * na + 2 * nb;

    const Moments acc = block_reduce(
        samples, [dims] { return Moments(dims); },
        [&](std::size_t i, Moments& m) {
            const auto [x1, x2] = samplers.eta(i);
            const XPoint y1 = samplers.eta1(i), y2 = samplers.eta2(i);
            const XPoint z1 = samplers.m1(i), z2 = samplers.m2(i);
            thread_local std::vector<double> u, pt, v;
            u.assign(na, 0.0);
            pt.assign(na, 0.0);
            v.assign(nb, 0.0);
            for (std::size_t a = 0; a < na; ++a) {
                u[a] = first[a](x1);
                pt[a] = avg(first[a], x1);
                m.add(single_base + a, first[a](y1));
                m.add(single_base + na + a, first[a](z1));
            }
            for (std::size_t b = 0; b < nb; ++b) {
                v[b] = second[b](x2);
                m.add(single_base + 2 * na + b, second[b](y2));
                m.add(single_base + 2 * na + nb + b, second[b](z2));
            }
            for (std::size_t a = 0; a < na; ++a) {
                for (std::size_t b = 0; b < nb; ++b) {
                    const std::size_t idx = pair_base + 3 * (a * nb + b);
                    m.add(idx, u[a] * v[b]);
                    m.add(idx + 1, pt[a] * v[b]);
                    m.add(idx + 2, (u[a] - pt[a]) * v[b]);
                }
            }
            ++m.count;
        },
        [](Moments& into, const Moments& from) { into.merge(from); });

    ThreeTermResult r;
    r.T = T;
    r.p = p;
    if (p >= 1 && p < spec.k()) {
        const double lo = 1.0 / spec.w[p - 1], hi = 1.0 / spec.w[p];
        r.t_in_window = T >= lo * (1.0 - 1e-12) && T <= hi * (1.0 + 1e-12);
    }
    auto prod_se = [](double a, double sa, double b, double sb) { return std::sqrt(b * b * sa * sa + a * a * sb * sb); };
    bool first_pair = true;
    for (std::size_t a = 0; a < na; ++a) {
        const double y1 = acc.mean(single_base + a), se_y1 = acc.stderr_of_mean(single_base + a);
        const double z1 = acc.mean(single_base + na + a), se_z1 = acc.stderr_of_mean(single_base + na + a);
        for (std::size_t b = 0; b < nb; ++b) {
            const double y2 = acc.mean(single_base + 2 * na + b), se_y2 = acc.stderr_of_mean(single_base + 2 * na + b);
            const double z2 = acc.mean(single_base + 2 * na + nb + b);
            const double se_z2 = acc.stderr_of_mean(single_base + 2 * na + nb + b);
            const std::size_t idx = pair_base + 3 * (a * nb + b);
            const double eta_v = acc.mean(idx), pushed = acc.mean(idx + 1);
            const double prod_eta = y1 * y2, prod_m = z1 * z2;
            const double se_prod_eta = prod_se(y1, se_y1, y2, se_y2);
            const double se_prod_m = prod_se(z1, se_z1, z2, se_z2);

            const double t1 = std::abs(acc.mean(idx + 2));
            const double t2 = std::abs(pushed - prod_eta);
            const double t3 = std::abs(prod_eta - prod_m);
            const double td = std::abs(eta_v - prod_m);
            const double s1 = acc.stderr_of_mean(idx + 2);
            const double s2 = std::hypot(acc.stderr_of_mean(idx + 1), se_prod_eta);
            const double s3 = std::hypot(se_prod_eta, se_prod_m);
            const double sd = std::hypot(acc.stderr_of_mean(idx), se_prod_m);
            if (first_pair || t1 > r.term_I) r.term_I = t1, r.se_I = s1;
            if (first_pair || t2 > r.term_II) r.term_II = t2, r.se_II = s2;
            if (first_pair || t3 > r.term_III) r.term_III = t3, r.se_III = s3;
            if (first_pair || td > r.direct) r.direct = td, r.se_direct = sd;
            first_pair = false;
        }
    }
    return r;
}

// Diagnostic dump: one "key=value" per line, records separated by a blank line.
inline void write_diagnostic(std::ostream& os, const ThreeTermResult& r) {
    char buf[1024];
    std::snprintf(buf, sizeof buf,
                  "T=%.17g\np=%zu\ndelta=%.17g\nterm_I=%.17g\nterm_II=%.17g\nterm_III=%.17g\ndirect_dist=%.17g\n"
                  "se_I=%.17g\nse_II=%.17g\nse_III=%.17g\nse_direct=%.17g\nt_in_window=%d\n\n",
                  r.T, r.p, r.delta, r.term_I, r.term_II, r.term_III, r.direct, r.se_I, r.se_II, r.se_III, r.se_direct,
                  r.t_in_window ? 1 : 0);
    os << buf;
}

inline std::vector<ThreeTermResult> read_diagnostics(std::istream& is) {
    std::vector<ThreeTermResult> out;
    std::map<std::string, std::string> kv;
    auto flush = [&] {
        if (kv.empty()) return;
        auto num = [&](const char* key) {
            const auto it = kv.find(key);
            if (it == kv.end()) throw InvalidInput(std::string("read_diagnostics: missing ") + key);
            return std::stod(it->second);
        };
        ThreeTermResult r;
        r.T = num("T");
        r.p = static_cast<std::size_t>(num("p"));
        r.delta = num("delta");
        r.term_I = num("term_I");
        r.term_II = num("term_II");
        r.term_III = num("term_III");
        r.direct = num("direct_dist");
        r.se_I = num("se_I");
        r.se_II = num("se_II");
        r.se_III = num("se_III");
        r.se_direct = num("se_direct");
        r.t_in_window = num("t_in_window") != 0.0;
        out.push_back(r);
        kv.clear();
    };
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) {
            flush();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InvalidInput("read_diagnostics: malformed line '" + line + "'");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    flush();
    return out;
}

struct SchedulerInput {
    std::vector<double> w; // 1 = w_1 >= ... >= w_k
    double q = 1.0;
    double tau = 1.0;
    double a = 1.0;
    std::size_t k = 2;

    void validate() const {
        if (k < 2 || w.size() != k) throw InvalidInput("SchedulerInput: need k >= 2 weights");
        if (std::abs(w.front() - 1.0) > 1e-9) throw InvalidInput("SchedulerInput: w_1 must equal 1");
        for (std::size_t i = 1; i < k; ++i)
            if (w[i] > w[i - 1] || !(w[i] >= 0.0)) throw InvalidInput("SchedulerInput: weights must descend");
        if (!(q >= 1.0) || !std::isfinite(q)) throw InvalidInput("SchedulerInput: q must be >= 1");
        if (!(tau > 0.0) || !(a > 0.0)) throw InvalidInput("SchedulerInput: tau and a must be positive");
    }
};

struct SchedulerOutput {
    std::size_t p = 1; // split I = [1, p], J = [p+1, k]; 1-based like the weights
    std::size_t i = 0;
    double T = 1.0;
    double delta = 0.0;
};

struct SchedulerTraceRow {
    std::size_t i;
    double grid_point;    // q^{-i delta}
    std::size_t interval; // p with w_{p+1} <= grid_point <= w_p, 0 if none
};

/// Pigeonhole choice of (p, T).
///
/// delta = gamma_0 min(1, tau), gamma_0 = min(1/k, 1/(2ak)). The k points
/// q^{-i delta} lie in [w_k, w_1], so two consecutive ones share an interval
/// [w_{p+1}, w_p]; the first such i (ascending) is taken and
/// T = q^{(i + 1/2) delta}.
inline SchedulerOutput pigeonhole_schedule(const SchedulerInput& in, std::vector<SchedulerTraceRow>* trace = nullptr) {
    in.validate();
    const double k = static_cast<double>(in.k);
    const double gamma0 = std::min(1.0 / k, 1.0 / (2.0 * in.a * k));
    const double delta = gamma0 * std::min(1.0, in.tau);
    const auto& w = in.w; // w[0] is w_1

    if (trace) {
        trace->clear();
        for (std::size_t i = 0; i < in.k; ++i) {
            const double x = std::pow(in.q, -static_cast<double>(i) * delta);
            std::size_t iv = 0;
            for (std::size_t p = 1; p < in.k; ++p) {
                if (w[p] <= x && x <= w[p - 1]) {
                    iv = p;
                    break;
                }
            }
            trace->push_back({i, x, iv});
        }
    }

    for (std::size_t i = 0; i + 2 <= in.k; ++i) {
        const double hi = std::pow(in.q, -static_cast<double>(i) * delta);
        const double lo = std::pow(in.q, -static_cast<double>(i + 1) * delta);
        for (std::size_t p = 1; p < in.k; ++p) {
            if (w[p] <= lo && hi <= w[p - 1]) {
                return {p, i, std::pow(in.q, (static_cast<double>(i) + 0.5) * delta), delta};
            }
        }
    }
    throw Infeasible("pigeonhole_schedule: no consecutive grid points share an interval (is w_k <= 1/q?)");
}

} // namespace mixlab
