#ifndef TWINNN_EVALSTATS_HPP
#define TWINNN_EVALSTATS_HPP

/*
 Confusion-matrix metrics for imbalanced binary classification, and the
 Wilcoxon signed-ranks and Friedman tests used to compare algorithms
 across datasets.

 Conventions
 ~~~~~~~~~~~
 Labels are +1 (positive) and -1 (negative).

   PC = TP+FN   NC = FP+TN   PR = TP+FP   NR = FN+TN

 A metric whose denominator is zero is reported as undefined (nullopt),
 with two exceptions that reproduce the "0 +- 0" entries of degenerate
 all-majority predictors:
   * G-means is 0 when TPR or TNR is undefined or zero.
   * MCC is 0 when any of PC, NC, PR, NR is zero.

 Wilcoxon p-values are two-sided. For n <= 20 non-zero differences the
 null distribution of W+ is counted exactly; above that a normal
 approximation with tie-corrected variance and continuity correction is
 used.
*/

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "twinnn/numcore.hpp"

namespace twinnn {

struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const noexcept { return tp + tn + fp + fn; }
    std::uint64_t pc() const noexcept { return tp + fn; }
    std::uint64_t nc() const noexcept { return fp + tn; }
    std::uint64_t pr() const noexcept { return tp + fp; }
    std::uint64_t nr() const noexcept { return fn + tn; }

    ConfusionMatrix& operator+=(const ConfusionMatrix& o) noexcept {
        tp += o.tp;
        tn += o.tn;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.size() != predicted.size())
        throw dimension_error("confusion: " + std::to_string(truth.size()) + " true labels vs " +
                              std::to_string(predicted.size()) + " predictions");
    if (truth.empty()) throw data_error("confusion: no labels");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i];
        const int p = predicted[i];
        if ((t != 1 && t != -1) || (p != 1 && p != -1))
            throw data_error("confusion: labels must be +1 or -1 (index " + std::to_string(i) + ")");
        if (t == 1)
            (p == 1 ? cm.tp : cm.fn)++;
        else
            (p == 1 ? cm.fp : cm.tn)++;
    }
    return cm;
}

struct MetricReport {
    std::optional<double> acc;
    std::optional<double> tpr;
    std::optional<double> tnr;
    std::optional<double> ppv;
    std::optional<double> npv;
    std::optional<double> gmeans;
    std::optional<double> fmeasure;
    std::optional<double> mcc;
};

inline MetricReport metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw data_error("metrics: empty confusion matrix");
    const auto ratio = [](std::uint64_t num, std::uint64_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    const double tp = static_cast<double>(cm.tp);
    const double tn = static_cast<double>(cm.tn);
    const double fp = static_cast<double>(cm.fp);
    const double fn = static_cast<double>(cm.fn);

    MetricReport r;
    r.acc = (tp + tn) / (tp + tn + fp + fn);
    r.tpr = ratio(cm.tp, cm.pc());
    r.tnr = ratio(cm.tn, cm.nc());
    r.ppv = ratio(cm.tp, cm.pr());
    r.npv = ratio(cm.tn, cm.nr());

    if (r.tpr && r.tnr && *r.tpr > 0.0 && *r.tnr > 0.0)
        r.gmeans = std::sqrt(*r.tpr * *r.tnr);
    else
        r.gmeans = 0.0;

    if (r.tpr && r.ppv) {
        if (*r.tpr == 0.0 || *r.ppv == 0.0)
            r.fmeasure = 0.0;  // limit of 2 / (1/TPR + 1/PPV)
        else
            r.fmeasure = 2.0 / (1.0 / *r.tpr + 1.0 / *r.ppv);
    }

    if (cm.pc() == 0 || cm.nc() == 0 || cm.pr() == 0 || cm.nr() == 0) {
        r.mcc = 0.0;
    } else {
        const double den = std::sqrt(static_cast<double>(cm.pc()) * static_cast<double>(cm.nc()) *
                                     static_cast<double>(cm.pr()) * static_cast<double>(cm.nr()));
        r.mcc = (tp * tn - fp * fn) / den;
    }
    return r;
}

inline void to_json(nlohmann::json& j, const ConfusionMatrix& cm) {
    j = nlohmann::json{{"tp", cm.tp}, {"tn", cm.tn}, {"fp", cm.fp}, {"fn", cm.fn}};
}

inline void from_json(const nlohmann::json& j, ConfusionMatrix& cm) {
    j.at("tp").get_to(cm.tp);
    j.at("tn").get_to(cm.tn);
    j.at("fp").get_to(cm.fp);
    j.at("fn").get_to(cm.fn);
}

// Undefined metrics serialize as null.
inline void to_json(nlohmann::json& j, const MetricReport& r) {
    const auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    j = nlohmann::json{{"acc", opt(r.acc)},         {"tpr", opt(r.tpr)},       {"tnr", opt(r.tnr)},
                       {"ppv", opt(r.ppv)},         {"npv", opt(r.npv)},       {"gmeans", opt(r.gmeans)},
                       {"fmeasure", opt(r.fmeasure)}, {"mcc", opt(r.mcc)}};
}

inline void from_json(const nlohmann::json& j, MetricReport& r) {
    const auto opt = [&](const char* key) -> std::optional<double> {
        const auto& v = j.at(key);
        if (v.is_null()) return std::nullopt;
        return v.get<double>();
    };
    r.acc = opt("acc");
    r.tpr = opt("tpr");
    r.tnr = opt("tnr");
    r.ppv = opt("ppv");
    r.npv = opt("npv");
    r.gmeans = opt("gmeans");
    r.fmeasure = opt("fmeasure");
    r.mcc = opt("mcc");
}

// Metric names in report order, with accessors; used by the harness for
// aggregation and tables.
inline const std::vector<std::pair<std::string, std::optional<double> MetricReport::*>>& metric_fields() {
    static const std::vector<std::pair<std::string, std::optional<double> MetricReport::*>> fields = {
        {"acc", &MetricReport::acc},       {"tpr", &MetricReport::tpr},
        {"tnr", &MetricReport::tnr},       {"ppv", &MetricReport::ppv},
        {"npv", &MetricReport::npv},       {"gmeans", &MetricReport::gmeans},
        {"fmeasure", &MetricReport::fmeasure}, {"mcc", &MetricReport::mcc},
    };
    return fields;
}

// ---------------------------------------------------------------------------
// Ranking and special functions
// ---------------------------------------------------------------------------

// 1-based ranks of values in ascending order; ties share their average rank.
inline std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

namespace detail {

// Lower regularized gamma P(a, x) by its power series; valid for x < a + 1.
inline double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 100000; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized gamma Q(a, x) by Lentz's continued fraction; x >= a + 1.
inline double gamma_q_continued_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 100000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

// Upper regularized incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
inline double gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw usage_error("gamma_q: need a > 0 and x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_continued_fraction(a, x);
}

// Upper tail of the chi-square distribution.
inline double chi_square_sf(double statistic, double dof) {
    if (!(dof > 0.0)) throw usage_error("chi_square_sf: dof must be positive");
    if (statistic <= 0.0) return 1.0;
    return gamma_q(0.5 * dof, 0.5 * statistic);
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-ranks test
// ---------------------------------------------------------------------------

enum class WilcoxonMethod { automatic, exact, normal };

struct WilcoxonResult {
    double statistic = 0.0;  // min(W+, W-)
    double w_plus = 0.0;
    double w_minus = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;  // pairs after dropping zero differences
    bool exact = false;
};

inline constexpr std::size_t wilcoxon_exact_limit = 20;

inline WilcoxonResult wilcoxon_signed_ranks(std::span<const double> a, std::span<const double> b,
                                            WilcoxonMethod method = WilcoxonMethod::automatic) {
    if (a.size() != b.size())
        throw dimension_error("wilcoxon_signed_ranks: arrays differ in length (" + std::to_string(a.size()) +
                              " vs " + std::to_string(b.size()) + ")");
    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (!std::isfinite(d)) throw data_error("wilcoxon_signed_ranks: non-finite score");
        if (d != 0.0) diffs.push_back(d);
    }
    if (diffs.empty()) throw data_error("wilcoxon_signed_ranks: all differences are zero");
    if (diffs.size() < 5)
        throw data_error("wilcoxon_signed_ranks: insufficient pairs (" + std::to_string(diffs.size()) +
                         " non-zero differences, need 5)");

    const std::size_t n = diffs.size();
    std::vector<double> mags(n);
    for (std::size_t i = 0; i < n; ++i) mags[i] = std::abs(diffs[i]);
    const std::vector<double> ranks = average_ranks(mags);

    WilcoxonResult res;
    res.n = n;
    for (std::size_t i = 0; i < n; ++i) (diffs[i] > 0 ? res.w_plus : res.w_minus) += ranks[i];
    res.statistic = std::min(res.w_plus, res.w_minus);

    const bool use_exact =
        method == WilcoxonMethod::exact || (method == WilcoxonMethod::automatic && n <= wilcoxon_exact_limit);
    if (use_exact) {
        if (n > 62) throw usage_error("wilcoxon_signed_ranks: exact mode supports at most 62 pairs");
        // Doubled ranks are integers even with averaged ties. Count sign
        // assignments by their positive rank sum.
        std::vector<std::size_t> twice(n);
        std::size_t total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            twice[i] = static_cast<std::size_t>(std::llround(2.0 * ranks[i]));
            total += twice[i];
        }
        std::vector<double> counts(total + 1, 0.0);
        counts[0] = 1.0;
        std::size_t reach = 0;
        for (std::size_t r : twice) {
            for (std::size_t s = reach + 1; s-- > 0;)
                if (counts[s] != 0.0) counts[s + r] += counts[s];
            reach += r;
        }
        const auto observed = static_cast<std::size_t>(std::llround(2.0 * res.statistic));
        double tail = 0.0;
        for (std::size_t s = 0; s <= observed; ++s) tail += counts[s];
        res.p_value = std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(n)));
        res.exact = true;
    } else {
        const double nn = static_cast<double>(n);
        const double mean = nn * (nn + 1.0) / 4.0;
        double tie_term = 0.0;
        std::vector<double> sorted = ranks;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < n;) {
            std::size_t j = i;
            while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
            const double t = static_cast<double>(j - i + 1);
            tie_term += t * t * t - t;
            i = j + 1;
        }
        const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
        const double dev = std::max(0.0, std::abs(res.statistic - mean) - 0.5);
        const double z = dev / std::sqrt(var);
        res.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
        res.exact = false;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Friedman test
// ---------------------------------------------------------------------------

struct FriedmanResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::vector<double> mean_ranks;  // per algorithm; rank 1 = highest score
};

// scores: one row per dataset, one column per algorithm; higher is better.
inline FriedmanResult friedman(const Matrix& scores) {
    const std::size_t datasets = scores.rows();
    const std::size_t algos = scores.cols();
    if (datasets < 2 || algos < 2)
        throw data_error("friedman: need at least 2 datasets and 2 algorithms, got " + std::to_string(datasets) +
                         "x" + std::to_string(algos));
    if (!scores.all_finite()) throw data_error("friedman: non-finite score");
    FriedmanResult res;
    res.mean_ranks.assign(algos, 0.0);
    std::vector<double> negated(algos);
    for (std::size_t i = 0; i < datasets; ++i) {
        auto row = scores.row(i);
        for (std::size_t j = 0; j < algos; ++j) negated[j] = -row[j];
        const auto r = average_ranks(negated);
        for (std::size_t j = 0; j < algos; ++j) res.mean_ranks[j] += r[j];
    }
    double sum_sq = 0.0;
    for (double& r : res.mean_ranks) {
        r /= static_cast<double>(datasets);
        sum_sq += r * r;
    }
    const double n = static_cast<double>(datasets);
    const double k = static_cast<double>(algos);
    const double stat = 12.0 * n / (k * (k + 1.0)) * (sum_sq - k * (k + 1.0) * (k + 1.0) / 4.0);
    res.statistic = std::max(0.0, stat);
    // Rounding can leave a tiny positive residue when all ranks tie.
    if (res.statistic < 1e-12) res.statistic = 0.0;
    res.p_value = chi_square_sf(res.statistic, k - 1.0);
    return res;
}

}  // namespace twinnn

#endif  // TWINNN_EVALSTATS_HPP
