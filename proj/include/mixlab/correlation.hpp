#pragma once

// Monte Carlo estimation of k-point correlations
//   m((g_1.phi_1) ... (g_k.phi_k))
// against the product of means, and fits of the decay exponent against the
// separation statistic M_hat.

#include <mixlab/error.hpp>
#include <mixlab/homspace.hpp>
#include <mixlab/lie.hpp>
#include <mixlab/parallel.hpp>
#include <mixlab/testfn.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace mixlab {

enum class Coupling { diagonal, product, translated_diagonal };

inline const char* to_string(Coupling c) {
    switch (c) {
    case Coupling::diagonal: return "diagonal";
    case Coupling::product: return "product";
    case Coupling::translated_diagonal: return "translated_diagonal";
    }
    return "diagonal";
}

inline Coupling parse_coupling(const std::string& s) {
    if (s == "diagonal") return Coupling::diagonal;
    if (s == "product") return Coupling::product;
    if (s == "translated_diagonal") return Coupling::translated_diagonal;
    throw InvalidInput("unknown coupling '" + s + "'");
}

struct CorrelationRequest {
    std::vector<GroupElement> elements;
    std::vector<Bump> functions;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    Coupling coupling = Coupling::diagonal;
    std::vector<GroupElement> offsets; // translated_diagonal only
    std::string label;                 // free-form parameter tag, e.g. "t=2"

    std::size_t k() const { return elements.size(); }
};

/// One correlation estimate.
///
/// `stderr` is the standard error of estimate - baseline, so abs_error is
/// comparable to it directly; `estimate_stderr` is that of the estimate alone.
struct CorrelationRecord {
    std::size_t k = 0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    Coupling coupling = Coupling::diagonal;
    std::string t_params;
    double estimate = 0.0;
    double stderr = 0.0;
    double baseline = 0.0;
    double abs_error = 0.0;
    double M_hat = 1.0;
    double q = 1.0;
    double estimate_stderr = 0.0;

    friend bool operator==(const CorrelationRecord&, const CorrelationRecord&) = default;
};

namespace detail {

// Sums of v and v v^T for a fixed-length vector.
struct CovAccumulator {
    std::size_t dim = 0;
    std::size_t count = 0;
    std::vector<double> sum;
    std::vector<double> cross;

    explicit CovAccumulator(std::size_t n) : dim(n), sum(n, 0.0), cross(n * n, 0.0) {}

    void add(const double* v) {
        ++count;
        for (std::size_t i = 0; i < dim; ++i) {
            sum[i] += v[i];
            for (std::size_t j = i; j < dim; ++j) cross[i * dim + j] += v[i] * v[j];
        }
    }

    void merge(const CovAccumulator& o) {
        count += o.count;
        for (std::size_t i = 0; i < dim; ++i) sum[i] += o.sum[i];
        for (std::size_t i = 0; i < cross.size(); ++i) cross[i] += o.cross[i];
    }

    double mean(std::size_t i) const { return sum[i] / static_cast<double>(count); }

    double cov(std::size_t i, std::size_t j) const {
        if (i > j) std::swap(i, j);
        const double n = static_cast<double>(count);
        return (cross[i * dim + j] / n - mean(i) * mean(j)) * n / (n - 1.0);
    }
};

} // namespace detail

/// Estimates m(prod_i (g_i.phi_i)) under the requested coupling.
///
/// Each index i evaluates f_i(x_i) = phi_i(g_i^{-1}.x_i), where (x_1..x_k)
/// is drawn from the coupling: all equal to x ~ m (diagonal), independent
/// Haar draws (product), or (h_1.x, ..., h_k.x) (translated_diagonal).
/// The baseline is prod_i mean(f_i) over the same draws; its standard error
/// uses the linearization P - sum_i f_i prod_{j != i} mean(f_j).
inline CorrelationRecord correlate(const CorrelationRequest& req) {
    const std::size_t k = req.k();
    if (k < 1) throw InvalidInput("correlate: need k >= 1");
    if (req.functions.size() != k) throw InvalidInput("correlate: functions and elements differ in length");
    if (req.samples < 2) throw InvalidInput("correlate: need at least two samples");
    if (req.coupling == Coupling::translated_diagonal && req.offsets.size() != k)
        throw InvalidInput("correlate: translated_diagonal needs one offset per index");

    std::vector<GroupElement> inv;
    for (const auto& g : req.elements) inv.push_back(g.inverse());
    // Compose offset and translation into a single element per index.
    std::vector<GroupElement> shift = inv;
    if (req.coupling == Coupling::translated_diagonal)
        for (std::size_t i = 0; i < k; ++i) shift[i] = inv[i] * req.offsets[i];

    const detail::CovAccumulator acc = block_reduce(
        req.samples, [k] { return detail::CovAccumulator(k + 1); },
        [&](std::size_t n, detail::CovAccumulator& a) {
            double v[8];
            std::vector<double> big;
            double* vals = v;
            if (k + 1 > 8) {
                big.resize(k + 1);
                vals = big.data();
            }
            double prod = 1.0;
            const XPoint x = haar_point(req.seed, n);
            for (std::size_t i = 0; i < k; ++i) {
                const XPoint xi = req.coupling == Coupling::product ? haar_point(derive_seed(req.seed, i + 1), n) : x;
                const double f = req.functions[i](act(shift[i], xi));
                vals[i + 1] = f;
                prod *= f;
            }
            vals[0] = prod;
            a.add(vals);
        },
        [](detail::CovAccumulator& into, const detail::CovAccumulator& from) { into.merge(from); });

    CorrelationRecord rec;
    rec.k = k;
    rec.samples = req.samples;
    rec.seed = req.seed;
    rec.coupling = req.coupling;
    rec.t_params = req.label;
    rec.estimate = acc.mean(0);
    rec.baseline = 1.0;
    std::vector<double> c(k, 1.0); // c_i = prod_{j != i} mean_j
    for (std::size_t i = 0; i < k; ++i) {
        rec.baseline *= acc.mean(i + 1);
        for (std::size_t j = 0; j < k; ++j)
            if (j != i) c[i] *= acc.mean(j + 1);
    }
    rec.abs_error = std::abs(rec.estimate - rec.baseline);

    const double n = static_cast<double>(acc.count);
    double var = acc.cov(0, 0);
    rec.estimate_stderr = std::sqrt(std::max(0.0, var) / n);
    for (std::size_t i = 0; i < k; ++i) {
        var -= 2.0 * c[i] * acc.cov(0, i + 1);
        for (std::size_t j = 0; j < k; ++j) var += c[i] * c[j] * acc.cov(i + 1, j + 1);
    }
    rec.stderr = k == 1 ? 0.0 : std::sqrt(std::max(0.0, var) / n);

    if (k >= 2) {
        const SeparationStats st = separation_stats(req.elements);
        rec.M_hat = st.M_hat;
        rec.q = st.q;
    }
    return rec;
}

struct Estimate {
    double value = 0.0;
    double stderr = 0.0;
};

// Mean of f under Haar measure, `samples` draws from stream `seed`.
template <class F>
Estimate haar_mean(const F& f, std::size_t samples, std::uint64_t seed) {
    const Moments m = block_reduce(
        samples, [] { return Moments(1); },
        [&](std::size_t i, Moments& acc) {
            acc.add(0, f(haar_point(seed, i)));
            ++acc.count;
        },
        [](Moments& into, const Moments& from) { into.merge(from); });
    return {m.mean(0), m.stderr_of_mean(0)};
}

/// prod_i m(phi_i) from independent Haar estimates. Factor 0 uses stream
/// `seed` (the stream correlate draws from), factor i > 0 stream i + 1 of it.
template <class Range>
Estimate product_baseline(const Range& functions, std::size_t samples, std::uint64_t seed) {
    if (std::empty(functions)) throw InvalidInput("product_baseline: empty function list");
    if (samples < 2) throw InvalidInput("product_baseline: need at least two samples");
    std::vector<Estimate> parts;
    std::size_t i = 0;
    for (const auto& f : functions) {
        parts.push_back(haar_mean(f, samples, i == 0 ? seed : derive_seed(seed, i + 1)));
        ++i;
    }
    Estimate out{1.0, 0.0};
    for (const auto& p : parts) out.value *= p.value;
    double var = 0.0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        double others = 1.0;
        for (std::size_t j = 0; j < parts.size(); ++j)
            if (j != i) others *= parts[j].value;
        var += others * others * parts[i].stderr * parts[i].stderr;
    }
    out.stderr = std::sqrt(var);
    return out;
}

struct DecayFit {
    double delta_hat = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t used = 0;
    std::size_t excluded = 0; // records with abs_error <= 2 stderr
};

inline bool usable_for_fit(const CorrelationRecord& r) {
    return r.abs_error > 2.0 * r.stderr && r.abs_error > 0.0 && r.M_hat > 0.0;
}

/// Least squares log abs_error = intercept - delta_hat log M_hat over usable records.
inline DecayFit decay_fit(std::span<const CorrelationRecord> records) {
    std::vector<double> xs, ys;
    DecayFit fit;
    for (const auto& r : records) {
        if (!usable_for_fit(r)) {
            ++fit.excluded;
            continue;
        }
        xs.push_back(std::log(r.M_hat));
        ys.push_back(std::log(r.abs_error));
    }
    fit.used = xs.size();
    std::vector<double> distinct = xs;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (xs.size() < 3 || distinct.size() < 2)
        throw InsufficientData("decay_fit: fewer than 3 usable records (" + std::to_string(xs.size()) + " usable, " +
                               std::to_string(fit.excluded) + " noise-dominated)");
    const LinearFit lf = fit_line(xs, ys);
    fit.delta_hat = -lf.slope;
    fit.intercept = lf.intercept;
    fit.r_squared = lf.r_squared;
    return fit;
}

// CSV persistence. Numbers are written with 17 significant digits so that
// parsing reproduces every record exactly.

inline constexpr const char* kRecordHeader =
    "k,samples,seed,coupling,t_params,estimate,stderr,baseline,abs_error,M_hat,q,estimate_stderr";

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_records(std::ostream& os, std::span<const CorrelationRecord> records) {
    os << kRecordHeader << '\n';
    for (const auto& r : records) {
        os << r.k << ',' << r.samples << ',' << r.seed << ',' << to_string(r.coupling) << ',' << r.t_params << ','
           << format_double(r.estimate) << ',' << format_double(r.stderr) << ',' << format_double(r.baseline) << ','
           << format_double(r.abs_error) << ',' << format_double(r.M_hat) << ',' << format_double(r.q) << ','
           << format_double(r.estimate_stderr) << '\n';
    }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline std::vector<CorrelationRecord> read_records(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kRecordHeader) throw InvalidInput("read_records: unexpected header");
    std::vector<CorrelationRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto c = split_csv_line(line);
        if (c.size() != 12) throw InvalidInput("read_records: expected 12 columns");
        CorrelationRecord r;
        r.k = std::stoull(c[0]);
        r.samples = std::stoull(c[1]);
        r.seed = std::stoull(c[2]);
        r.coupling = parse_coupling(c[3]);
        r.t_params = c[4];
        r.estimate = std::stod(c[5]);
        r.stderr = std::stod(c[6]);
        r.baseline = std::stod(c[7]);
        r.abs_error = std::stod(c[8]);
        r.M_hat = std::stod(c[9]);
        r.q = std::stod(c[10]);
        r.estimate_stderr = std::stod(c[11]);
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace mixlab
