#pragma once

// Experiment runner behind the command-line tool.
//
// Config files are flat "key = value" text with an optional [params]
// section; '#' starts a comment. Lists are comma-separated.
//
//   experiment = decay
//   seed = 42
//   samples = 1000000
//   output = runs/decay
//
//   [params]
//   t = 1, 2, 3

#include <mixlab/analytic.hpp>
#include <mixlab/configurations.hpp>
#include <mixlab/correlation.hpp>
#include <mixlab/coupling.hpp>
#include <mixlab/error.hpp>
#include <mixlab/homspace.hpp>
#include <mixlab/lie.hpp>
#include <mixlab/parallel.hpp>
#include <mixlab/testfn.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace mixlab {

inline constexpr const char* kLibraryVersion = "mixlab 0.1.0";

enum class Experiment { norms, decay, coupling, scheduler, configs, kernels };

inline const char* to_string(Experiment e) {
    switch (e) {
    case Experiment::norms: return "norms";
    case Experiment::decay: return "decay";
    case Experiment::coupling: return "coupling";
    case Experiment::scheduler: return "scheduler";
    case Experiment::configs: return "configs";
    case Experiment::kernels: return "kernels";
    }
    return "kernels";
}

inline Experiment parse_experiment(const std::string& s) {
    for (auto e : {Experiment::norms, Experiment::decay, Experiment::coupling, Experiment::scheduler,
                   Experiment::configs, Experiment::kernels})
        if (s == to_string(e)) return e;
    throw InvalidInput("unknown experiment '" + s + "'");
}

struct ExperimentConfig {
    Experiment experiment = Experiment::kernels;
    std::uint64_t seed = 1;
    std::size_t samples = 10000;
    std::string output;
    std::map<std::string, std::string> params;
    std::string source_text;

    bool has(const std::string& key) const { return params.count(key) != 0; }

    double number(const std::string& key, double fallback) const {
        const auto it = params.find(key);
        if (it == params.end()) return fallback;
        return parse_number(key, it->second);
    }

    std::vector<double> list(const std::string& key, std::vector<double> fallback) const {
        const auto it = params.find(key);
        if (it == params.end()) return fallback;
        std::vector<double> out;
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(parse_number(key, item));
        if (out.empty()) throw InvalidInput("parameter '" + key + "' is an empty list");
        return out;
    }

    std::string text(const std::string& key, std::string fallback) const {
        const auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }

    static double parse_number(const std::string& key, const std::string& raw) {
        std::string s = raw;
        s.erase(0, s.find_first_not_of(" \t"));
        s.erase(s.find_last_not_of(" \t") + 1);
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw InvalidInput("parameter '" + key + "' is not a number: '" + raw + "'");
        }
    }
};

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct ParamSpec {
    std::set<std::string> required;
    std::set<std::string> optional;
};

inline const ParamSpec& param_spec(Experiment e) {
    static const std::map<Experiment, ParamSpec> specs{
        {Experiment::norms, {{}, {"d", "radii", "center_y", "probe_eps", "lambdas", "fd_step"}}},
        {Experiment::decay, {{"t"}, {"k", "radius", "center_x", "center_y", "coupling"}}},
        {Experiment::coupling, {{}, {"t", "T", "radius", "center_y", "d", "norm_samples"}}},
        {Experiment::scheduler, {{"w", "q"}, {"tau", "a"}}},
        {Experiment::configs, {{}, {"epsilon", "c", "upper", "epsilons", "widths", "trials", "k", "margin"}}},
        {Experiment::kernels, {{}, {}}},
    };
    return specs.at(e);
}

} // namespace detail

/// Parses and validates a config. Unknown keys and missing required
/// parameters raise InvalidInput naming the key.
inline ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    cfg.source_text = text;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    bool have_experiment = false;
    std::map<std::string, std::string> top;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw InvalidInput("line " + std::to_string(lineno) + ": malformed section");
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section != "params") throw InvalidInput("unknown section '" + section + "'");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InvalidInput("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        auto& dest = section.empty() ? top : cfg.params;
        if (dest.count(key)) throw InvalidInput("duplicate key '" + key + "'");
        dest[key] = value;
    }
    for (const auto& [key, value] : top) {
        if (key == "experiment") {
            cfg.experiment = parse_experiment(value);
            have_experiment = true;
        } else if (key == "seed") {
            std::uint64_t seed = 0;
            const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), seed);
            if (ec != std::errc() || end != value.data() + value.size())
                throw InvalidInput("key 'seed' is not an unsigned integer: '" + value + "'");
            cfg.seed = seed;
        } else if (key == "samples") {
            const double s = ExperimentConfig::parse_number(key, value);
            if (!(s >= 2.0)) throw InvalidInput("samples must be >= 2");
            cfg.samples = static_cast<std::size_t>(s);
        } else if (key == "output") {
            cfg.output = value;
        } else {
            throw InvalidInput("unknown key '" + key + "'");
        }
    }
    if (!have_experiment) throw InvalidInput("missing key 'experiment'");
    const auto& spec = detail::param_spec(cfg.experiment);
    for (const auto& [key, value] : cfg.params) {
        if (!spec.required.count(key) && !spec.optional.count(key))
            throw InvalidInput("unknown key '" + key + "' for experiment " + to_string(cfg.experiment));
    }
    for (const auto& key : spec.required)
        if (!cfg.params.count(key)) throw InvalidInput("missing key '" + key + "' for experiment " + to_string(cfg.experiment));
    return cfg;
}

/// In-memory results of one run: named text files plus manifest warnings.
struct RunResult {
    std::map<std::string, std::string> files; // file name -> contents
    std::vector<std::string> warnings;
    bool all_passed = true; // kernels suite verdict
};

namespace detail {

inline std::string fmt(double v) { return format_double(v); }

// Geodesic family used by the decay experiment: unit-mass bumps at
// (center_x, center_y), elements (I, a(t), a(2t), ...) with a(t) = diag(e^t, e^-t).
inline std::vector<CorrelationRecord> geodesic_family(std::size_t k, std::span<const double> ts, double radius,
                                                      double cx, double cy, std::size_t samples, std::uint64_t seed,
                                                      Coupling coupling = Coupling::diagonal) {
    const Bump phi = Bump::unit_mass({cx, cy, 0.0}, radius);
    std::vector<CorrelationRecord> out;
    for (double t : ts) {
        CorrelationRequest req;
        for (std::size_t i = 0; i < k; ++i) {
            req.elements.push_back(GroupElement::diag(std::exp(static_cast<double>(i) * t)));
            req.functions.push_back(phi);
        }
        req.samples = samples;
        req.seed = seed;
        req.coupling = coupling;
        req.label = "t=" + fmt(t);
        out.push_back(correlate(req));
    }
    return out;
}

inline std::string decay_plot(std::span<const CorrelationRecord> records, std::vector<std::string>* warnings) {
    std::ostringstream os;
    os << "# log_M_hat log_abs_error\n";
    std::size_t used = 0;
    for (const auto& r : records) {
        if (!usable_for_fit(r)) continue;
        os << fmt(std::log(r.M_hat)) << ' ' << fmt(std::log(r.abs_error)) << '\n';
        ++used;
    }
    if (used == 0 && warnings) warnings->push_back("decay plot: no usable records");
    return os.str();
}

struct KernelCheck {
    std::string name;
    double value;
    double expected;
    bool pass;
};

inline std::vector<KernelCheck> kernel_checks(std::size_t nilpotent_samples, std::uint64_t seed) {
    std::vector<KernelCheck> out;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
    auto add = [&](std::string name, double v, double e, double tol) { out.push_back({std::move(name), v, e, rel(v, e) <= tol}); };

    // closed form against adaptive quadrature
    for (double T : {1.0, 2.5, 10.0, 50.0}) {
        for (double a : {-0.49, 0.0, 0.5, 1.0, 3.0}) {
            auto integrand = [&](double u) { return (2.0 * T - u) * std::pow(std::max(1.0, u), a); };
            using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
            const double quad = GK::integrate(integrand, 0.0, 1.0, 15, 1e-14) + GK::integrate(integrand, 1.0, 2.0 * T, 20, 1e-14);
            const double cf = real_integral_J(T, a);
            out.push_back({"real_integral_J T=" + fmt(T) + " a=" + fmt(a), cf, quad, std::abs(cf - quad) <= 1e-9 * std::abs(quad)});
        }
    }
    add("real_integral_J T=1 a=0", real_integral_J(1, 0), 2.0, 1e-15);
    add("real_integral_J T=1 a=1", real_integral_J(1, 1), 13.0 / 6.0, 1e-15);
    add("real_integral_I T=1 a=1", real_integral_I_bound(1, 1).value, 13.0 / 3.0, 1e-15);

    // p-adic closed form against the double sum
    for (std::int64_t p : {2, 3, 5}) {
        for (std::int64_t n = 0; n <= 3; ++n) {
            for (std::int64_t a = 0; a <= 2; ++a) {
                std::int64_t pn = 1;
                for (std::int64_t i = 0; i < n; ++i) pn *= p;
                Rational brute = 0;
                for (std::int64_t s = 0; s < pn; ++s) {
                    for (std::int64_t t = 0; t < pn; ++t) {
                        std::int64_t u = std::abs(s - t);
                        if (u == 0) {
                            brute += 1;
                            continue;
                        }
                        std::int64_t v = 0;
                        while (u % p == 0) {
                            u /= p;
                            ++v;
                        }
                        brute += detail::rational_pow(p, (n - v) * a);
                    }
                }
                const Rational cf = padic_integral_I(p, n, a);
                out.push_back({"padic_integral_I p=" + std::to_string(p) + " n=" + std::to_string(n) + " a=" + std::to_string(a),
                               static_cast<double>(cf), static_cast<double>(brute), cf == brute});
            }
        }
    }

    // lie identities
    const double golden = 0.5 * (1.0 + std::sqrt(5.0));
    add("op_norm diag(2)", op_norm(GroupElement::diag(2.0)), 4.0, 1e-12);
    add("op_norm [[1,1],[0,1]]", op_norm(GroupElement::upper(1.0)), golden * golden, 1e-12);
    add("cartan_distance I diag(e)", cartan_distance(GroupElement::identity(), GroupElement::diag(std::numbers::e)),
        std::numbers::sqrt2, 1e-12);
    const auto consts = nilpotent_exp_constants(nilpotent_samples, seed);
    out.push_back({"nilpotent c0_hat >= 1", consts.c0_hat, 1.0, consts.c0_hat >= 1.0});
    out.push_back({"nilpotent c3_hat <= 10", consts.c3_hat, 10.0, consts.c3_hat <= 10.0});
    return out;
}

} // namespace detail

/// Runs one experiment and returns its result files.
inline RunResult run_experiment(const ExperimentConfig& cfg) {
    RunResult res;
    switch (cfg.experiment) {
    case Experiment::kernels: {
        std::ostringstream os;
        os << "check,value,expected,status\n";
        for (const auto& c : detail::kernel_checks(std::min<std::size_t>(cfg.samples, 100000), cfg.seed)) {
            os << c.name << ',' << detail::fmt(c.value) << ',' << detail::fmt(c.expected) << ','
               << (c.pass ? "pass" : "fail") << '\n';
            res.all_passed = res.all_passed && c.pass;
        }
        res.files["results.csv"] = os.str();
        break;
    }
    case Experiment::decay: {
        const auto ts = cfg.list("t", {});
        const auto k = static_cast<std::size_t>(cfg.number("k", 2));
        if (k < 1 || k > 6) throw InvalidInput("parameter 'k' must lie in [1, 6]");
        const Coupling coupling = parse_coupling(cfg.text("coupling", "diagonal"));
        if (coupling == Coupling::translated_diagonal)
            throw InvalidInput("parameter 'coupling': translated_diagonal needs per-factor offsets; use diagonal or product");
        const auto records = detail::geodesic_family(k, ts, cfg.number("radius", 2.0), cfg.number("center_x", 0.0),
                                                     cfg.number("center_y", 3.0), cfg.samples, cfg.seed,
                                                     coupling);
        std::ostringstream rs;
        write_records(rs, records);
        res.files["results.csv"] = rs.str();
        std::ostringstream fs;
        fs << "delta_hat,intercept,r_squared,used,excluded\n";
        try {
            const DecayFit fit = decay_fit(records);
            fs << detail::fmt(fit.delta_hat) << ',' << detail::fmt(fit.intercept) << ',' << detail::fmt(fit.r_squared)
               << ',' << fit.used << ',' << fit.excluded << '\n';
        } catch (const InsufficientData& e) {
            res.warnings.push_back(e.what());
        }
        res.files["fit.csv"] = fs.str();
        res.files["decay.dat"] = detail::decay_plot(records, &res.warnings);
        break;
    }
    case Experiment::scheduler: {
        SchedulerInput in;
        in.w = cfg.list("w", {});
        in.k = in.w.size();
        in.q = cfg.number("q", 1.0);
        in.tau = cfg.number("tau", 1.0);
        in.a = cfg.number("a", 1.0);
        std::vector<SchedulerTraceRow> trace;
        const SchedulerOutput out = pigeonhole_schedule(in, &trace);
        std::ostringstream os;
        os << "p,i,T,delta\n" << out.p << ',' << out.i << ',' << detail::fmt(out.T) << ',' << detail::fmt(out.delta) << '\n';
        res.files["schedule.csv"] = os.str();
        std::ostringstream ts;
        ts << "i,grid_point,interval\n";
        for (const auto& row : trace) ts << row.i << ',' << detail::fmt(row.grid_point) << ',' << row.interval << '\n';
        res.files["trace.csv"] = ts.str();
        std::ostringstream ps;
        ps << "# i grid_point interval\n";
        for (const auto& row : trace) ps << row.i << ' ' << detail::fmt(row.grid_point) << ' ' << row.interval << '\n';
        res.files["scheduler.dat"] = ps.str();
        break;
    }
    case Experiment::norms: {
        SobolevConfig sc;
        sc.d = static_cast<int>(cfg.number("d", 1));
        sc.mc_samples = cfg.samples;
        sc.fd_step = cfg.number("fd_step", 1e-3);
        sc.seed = cfg.seed;
        std::vector<Bump> dict;
        const double cy = cfg.number("center_y", 1.5);
        const auto radii = cfg.list("radii", {0.5, 0.7, 0.9});
        for (std::size_t i = 0; i < radii.size(); ++i)
            dict.push_back(Bump::unit_mass({0.3 * (static_cast<double>(i) / radii.size() - 0.5), cy, 0.0}, radii[i]));
        std::vector<GroupElement> probes;
        for (double e : cfg.list("probe_eps", {0.01, 0.02, 0.04, 0.08})) probes.push_back(exp_sl2(e * LieVector::H()));
        for (double l : cfg.list("lambdas", {2.0, 4.0, 8.0})) probes.push_back(GroupElement::diag(l));
        const AxiomReport rep = verify_norm_axioms(dict, probes, sc);
        std::ostringstream os;
        os << "quantity,value\n";
        os << "sup_bound," << detail::fmt(rep.sup_bound) << '\n';
        os << "lipschitz," << detail::fmt(rep.lipschitz) << '\n';
        os << "lipschitz_slope," << detail::fmt(rep.lipschitz_fit.slope) << '\n';
        os << "lipschitz_r2," << detail::fmt(rep.lipschitz_fit.r_squared) << '\n';
        os << "translation_exponent," << detail::fmt(rep.translation_exponent) << '\n';
        os << "translation_constant," << detail::fmt(rep.translation_constant) << '\n';
        os << "product_bound," << detail::fmt(rep.product_bound) << '\n';
        os << "all_finite," << (rep.all_finite() ? 1 : 0) << '\n';
        res.files["results.csv"] = os.str();
        std::ostringstream ds;
        write_dictionary(ds, dict);
        res.files["dictionary.txt"] = ds.str();
        break;
    }
    case Experiment::coupling: {
        const double t = cfg.number("t", 1.0);
        const std::vector<GroupElement> gs{GroupElement::identity(), GroupElement::diag(std::exp(t))};
        const FlowSpec spec = build_flow(gs);
        SobolevConfig sc;
        sc.d = static_cast<int>(cfg.number("d", 1));
        sc.mc_samples = static_cast<std::size_t>(cfg.number("norm_samples", 2000));
        sc.seed = derive_seed(cfg.seed, 0x50b);
        const double radius = cfg.number("radius", 0.8);
        const double cy = cfg.number("center_y", 1.2);
        const std::vector<Bump> bumps{Bump::unit_mass({0.0, cy, 0.0}, radius), Bump::unit_mass({0.3, 2.0 * cy, 0.0}, radius)};
        const Dictionary<XPoint> dict = bump_dictionary(bumps, sc);

        // scheduler on the flow weights
        SchedulerInput sin;
        sin.w = spec.w;
        sin.k = spec.k();
        sin.q = separation_stats(gs).q;
        const SchedulerOutput sched = pigeonhole_schedule(sin);

        const auto& src = spec.source;
        const GroupElement inv0 = src[0].inverse(), inv1 = src[1].inverse();
        const std::uint64_t s = cfg.seed;
        auto product_eta = [s](std::size_t i) { return std::make_pair(haar_point(derive_seed(s, 1), i), haar_point(derive_seed(s, 2), i)); };
        auto diag_eta = [s, inv0, inv1](std::size_t i) {
            const XPoint x = haar_point(derive_seed(s, 3), i);
            return std::make_pair(act(inv0, x), act(inv1, x));
        };
        const HaarSampler e1{derive_seed(s, 4)}, e2{derive_seed(s, 5)}, m1{derive_seed(s, 6)}, m2{derive_seed(s, 7)};
        std::ostringstream diag_out;
        {
            ThreeTermSamplers<decltype(product_eta), HaarSampler, HaarSampler, HaarSampler, HaarSampler> smp{product_eta, e1, e2, m1, m2};
            ThreeTermResult r = three_term_diagnostic(smp, dict, dict, sched.T, spec, 0, cfg.samples, sched.p);
            r.delta = sched.delta;
            diag_out << "# eta = m x m\n";
            write_diagnostic(diag_out, r);
        }
        {
            ThreeTermSamplers<decltype(diag_eta), HaarSampler, HaarSampler, HaarSampler, HaarSampler> smp{diag_eta, e1, e2, m1, m2};
            ThreeTermResult r = three_term_diagnostic(smp, dict, dict, sched.T, spec, 0, cfg.samples, sched.p);
            r.delta = sched.delta;
            diag_out << "# eta = translated diagonal\n";
            write_diagnostic(diag_out, r);
        }
        res.files["diagnostics.txt"] = diag_out.str();

        std::ostringstream et, ep;
        et << "T,E_T,stderr\n";
        ep << "# log_T log_E_T\n";
        for (double T : cfg.list("T", {1.0, 4.0, 16.0})) {
            const SupEstimate e = e_t_statistic(HaarSampler{derive_seed(s, 8)}, dict, T, spec, 0, cfg.samples);
            et << detail::fmt(T) << ',' << detail::fmt(e.value) << ',' << detail::fmt(e.stderr) << '\n';
            ep << detail::fmt(std::log(T)) << ' ' << detail::fmt(std::log(e.value)) << '\n';
        }
        res.files["et.csv"] = et.str();
        res.files["et.dat"] = ep.str();
        break;
    }
    case Experiment::configs: {
        std::ostringstream ds, dp;
        ds << "epsilon,c,lower,upper,points,max_gap,lower_edge_gap,upper_edge_gap,dense,degenerate\n";
        dp << "# epsilon max_gap\n";
        const double c = cfg.number("c", 1.0);
        const double upper = cfg.number("upper", 3.0);
        for (double eps : cfg.list("epsilon", {0.5})) {
            const DensityReport rep = density_check(eps, c, upper);
            ds << detail::fmt(eps) << ',' << detail::fmt(c) << ',' << detail::fmt(rep.lower) << ',' << detail::fmt(rep.upper)
               << ',' << rep.points << ',' << detail::fmt(rep.max_gap) << ',' << detail::fmt(rep.lower_edge_gap) << ','
               << detail::fmt(rep.upper_edge_gap) << ',' << (rep.dense ? 1 : 0) << ',' << (rep.degenerate ? 1 : 0) << '\n';
            dp << detail::fmt(eps) << ' ' << detail::fmt(rep.max_gap) << '\n';
        }
        res.files["density.csv"] = ds.str();
        res.files["density.dat"] = dp.str();

        const auto eps_grid = cfg.list("epsilons", {0.1, 0.3, 0.9});
        const auto widths = cfg.list("widths", {0.5, 1.0, 2.0});
        const auto trials = static_cast<std::size_t>(cfg.number("trials", 4));
        const auto k = static_cast<std::size_t>(cfg.number("k", 2));
        const ConstantsEstimate ce = estimate_constants(eps_grid, widths, trials, cfg.seed, k, cfg.number("margin", 1.0));
        std::ostringstream ss;
        ss << "epsilon,width,trials,successes,mean_error\n";
        for (const auto& cell : ce.table)
            ss << detail::fmt(cell.epsilon) << ',' << detail::fmt(cell.width) << ',' << cell.trials << ',' << cell.successes
               << ',' << detail::fmt(cell.mean_error) << '\n';
        res.files["success.csv"] = ss.str();
        res.files["constants.csv"] = "c_hat\n" + detail::fmt(ce.c_hat) + "\n";
        break;
    }
    }
    return res;
}

/// Plot data from a results file: decay (log M_hat, log abs_error),
/// et (log T, log E_T), density (epsilon, max gap), scheduler (trace table).
inline std::string emit_plot_data(const std::string& results, const std::string& kind, std::vector<std::string>* warnings = nullptr) {
    std::istringstream is(results);
    if (kind == "decay") {
        const auto records = read_records(is);
        return detail::decay_plot(records, warnings);
    }
    std::string header;
    std::getline(is, header);
    std::ostringstream os;
    std::string line;
    auto rows = [&](auto emit) {
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            emit(split_csv_line(line));
        }
    };
    if (kind == "et") {
        if (header != "T,E_T,stderr") throw InvalidInput("plotdata: not an E_T results file");
        os << "# log_T log_E_T\n";
        rows([&](const std::vector<std::string>& c) {
            os << detail::fmt(std::log(std::stod(c[0]))) << ' ' << detail::fmt(std::log(std::stod(c[1]))) << '\n';
        });
    } else if (kind == "density") {
        if (header.rfind("epsilon,c,lower", 0) != 0) throw InvalidInput("plotdata: not a density results file");
        os << "# epsilon max_gap\n";
        rows([&](const std::vector<std::string>& c) { os << c[0] << ' ' << c[5] << '\n'; });
    } else if (kind == "scheduler") {
        if (header != "i,grid_point,interval") throw InvalidInput("plotdata: not a scheduler trace file");
        os << "# i grid_point interval\n";
        rows([&](const std::vector<std::string>& c) { os << c[0] << ' ' << c[1] << ' ' << c[2] << '\n'; });
    } else {
        throw InvalidInput("plotdata: unknown kind '" + kind + "'");
    }
    return os.str();
}

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumeric = 3;

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::optional<std::string> output;
};

/// Reads a config, runs it and writes results plus a manifest into the
/// output directory (default: "<config stem>_out" next to the config).
inline int run(const std::filesystem::path& config_path, const RunOverrides& ov = {}, std::ostream& log = std::cerr) {
    try {
        std::ifstream in(config_path);
        if (!in) throw InvalidInput("cannot read config '" + config_path.string() + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        ExperimentConfig cfg = parse_config(buf.str());
        if (ov.seed) cfg.seed = *ov.seed;
        if (ov.samples) cfg.samples = *ov.samples;
        if (ov.output) cfg.output = *ov.output;
        std::filesystem::path out_dir = cfg.output.empty()
                                            ? config_path.parent_path() / (config_path.stem().string() + "_out")
                                            : std::filesystem::path(cfg.output);
        if (out_dir.is_relative() && !cfg.output.empty() && !ov.output) out_dir = config_path.parent_path() / out_dir;

        const auto start = std::chrono::steady_clock::now();
        RunResult res = run_experiment(cfg);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        std::filesystem::create_directories(out_dir);
        for (const auto& [name, contents] : res.files) std::ofstream(out_dir / name, std::ios::binary) << contents;
        std::ofstream man(out_dir / "manifest.txt");
        man << "version = " << kLibraryVersion << '\n'
            << "experiment = " << to_string(cfg.experiment) << '\n'
            << "seed = " << cfg.seed << '\n'
            << "samples = " << cfg.samples << '\n'
            << "threads = " << default_threads() << '\n'
            << "wall_time_s = " << wall << '\n';
        for (const auto& [name, contents] : res.files) man << "file = " << name << '\n';
        for (const auto& w : res.warnings) man << "warning = " << w << '\n';
        man << "--- config ---\n" << cfg.source_text;
        for (const auto& w : res.warnings) log << "warning: " << w << '\n';
        log << "wrote " << res.files.size() << " result files to " << out_dir.string() << '\n';
        return res.all_passed ? kExitOk : kExitFailed;
    } catch (const InvalidInput& e) {
        log << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const NumericDegeneracy& e) {
        log << "numeric degeneracy: " << e.what() << '\n';
        return kExitNumeric;
    }
}

} // namespace mixlab
