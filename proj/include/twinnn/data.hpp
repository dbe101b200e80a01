#ifndef TWINNN_DATA_HPP
#define TWINNN_DATA_HPP

/*
 Dataset ingestion and preprocessing.

 * CSV (RFC-4180 subset: quoted fields, "" escapes, '.' decimal point);
   an empty cell is a missing value.
 * LibSVM sparse text ("label idx:val ..." with 1-based ascending
   indices); absent indices are 0.0, not missing.
 * Min-max scaling to [-1, 1], fitted on observed values only.
 * KNN imputation over mutually observed features.
 * Stratified repeated k-fold plans and one-vs-rest binarization.

 Labels are stored as dense integers 0..K-1 (ordered numerically when every
 label string is a number, lexicographically otherwise) with the original
 strings kept in label_names. make_imbalanced() produces the +1/-1 labels
 that the binary models consume.

 Fitting functions accept any RowSource (Dataset, RowSubset, ...) so that a
 fold's preprocessing can be fitted on a view that only exposes training
 rows.
*/

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "twinnn/numcore.hpp"

namespace twinnn {

struct Dataset {
    Matrix features;
    std::vector<int> labels;
    std::vector<std::uint8_t> missing;  // empty, or rows*cols flags
    std::vector<int> class_ids;         // sorted distinct labels
    std::map<int, std::string> label_names;

    std::size_t rows() const noexcept { return features.rows(); }
    std::size_t cols() const noexcept { return features.cols(); }

    bool has_missing() const noexcept {
        return std::any_of(missing.begin(), missing.end(), [](std::uint8_t m) { return m != 0; });
    }
    bool is_missing(std::size_t i, std::size_t j) const noexcept {
        return !missing.empty() && missing[i * cols() + j] != 0;
    }
    double value(std::size_t i, std::size_t j) const noexcept { return features(i, j); }
    std::size_t count_missing() const noexcept {
        return static_cast<std::size_t>(std::count_if(missing.begin(), missing.end(), [](auto m) { return m != 0; }));
    }

    std::size_t class_count(int cls) const noexcept {
        return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), cls));
    }

    std::string name_of(int cls) const {
        auto it = label_names.find(cls);
        return it != label_names.end() ? it->second : std::to_string(cls);
    }

    // Class id for an original label string; also accepts the numeric id.
    int class_for_name(std::string_view name) const {
        for (const auto& [id, n] : label_names)
            if (n == name) return id;
        int id = 0;
        auto [p, ec] = std::from_chars(name.data(), name.data() + name.size(), id);
        if (ec == std::errc() && p == name.data() + name.size() &&
            std::find(class_ids.begin(), class_ids.end(), id) != class_ids.end())
            return id;
        throw data_error("unknown class '" + std::string(name) + "'");
    }

    Dataset subset(std::span<const std::size_t> idx) const {
        Dataset d;
        d.features = features.select_rows(idx);
        d.labels.reserve(idx.size());
        for (auto i : idx) d.labels.push_back(labels[i]);
        if (!missing.empty()) {
            d.missing.reserve(idx.size() * cols());
            for (auto i : idx)
                d.missing.insert(d.missing.end(), missing.begin() + i * cols(), missing.begin() + (i + 1) * cols());
        }
        d.class_ids = class_ids;
        d.label_names = label_names;
        return d;
    }

    void validate() const {
        if (rows() == 0 || cols() == 0) throw data_error("dataset is empty");
        if (labels.size() != rows()) throw data_error("dataset: label count does not match row count");
        if (!missing.empty() && missing.size() != rows() * cols())
            throw data_error("dataset: missing mask does not match feature dimensions");
        for (int l : labels)
            if (!std::binary_search(class_ids.begin(), class_ids.end(), l))
                throw data_error("dataset: label " + std::to_string(l) + " not among class ids");
        for (std::size_t i = 0; i < rows(); ++i)
            for (std::size_t j = 0; j < cols(); ++j)
                if (!is_missing(i, j) && !std::isfinite(features(i, j)))
                    throw data_error("dataset: non-finite feature at row " + std::to_string(i));
    }
};

// Builds a dataset from already-integer labels; class_ids are derived.
inline Dataset make_dataset(Matrix features, std::vector<int> labels) {
    Dataset d;
    d.features = std::move(features);
    d.labels = std::move(labels);
    std::set<int> ids(d.labels.begin(), d.labels.end());
    d.class_ids.assign(ids.begin(), ids.end());
    for (int id : d.class_ids) d.label_names[id] = std::to_string(id);
    d.validate();
    return d;
}

template <typename S>
concept RowSource = requires(const S& s, std::size_t i, std::size_t j) {
    { s.rows() } -> std::convertible_to<std::size_t>;
    { s.cols() } -> std::convertible_to<std::size_t>;
    { s.value(i, j) } -> std::convertible_to<double>;
    { s.is_missing(i, j) } -> std::convertible_to<bool>;
};

// A read-only view of selected rows of another source.
template <RowSource Source>
class RowSubset {
public:
    RowSubset(const Source& src, std::span<const std::size_t> idx) : src_(&src), idx_(idx) {}
    std::size_t rows() const noexcept { return idx_.size(); }
    std::size_t cols() const noexcept { return src_->cols(); }
    double value(std::size_t i, std::size_t j) const { return src_->value(idx_[i], j); }
    bool is_missing(std::size_t i, std::size_t j) const { return src_->is_missing(idx_[i], j); }

private:
    const Source* src_;
    std::span<const std::size_t> idx_;
};

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::optional<double> parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::string trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return std::string(s);
}

// Splits one CSV record. Returns false when a quoted field is unterminated.
inline bool split_csv_record(std::string_view line, std::vector<std::string>& out) {
    out.clear();
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(trim(field));
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    if (quoted) return false;
    out.push_back(trim(field));
    return true;
}

// Dense ids for label strings: numeric order when all parse as numbers.
inline std::map<std::string, int> dense_label_ids(const std::vector<std::string>& raw) {
    std::set<std::string> distinct(raw.begin(), raw.end());
    std::vector<std::string> names(distinct.begin(), distinct.end());
    const bool numeric =
        std::all_of(names.begin(), names.end(), [](const std::string& s) { return parse_double(s).has_value(); });
    if (numeric)
        std::stable_sort(names.begin(), names.end(),
                         [](const std::string& a, const std::string& b) { return *parse_double(a) < *parse_double(b); });
    std::map<std::string, int> ids;
    for (std::size_t i = 0; i < names.size(); ++i) ids[names[i]] = static_cast<int>(i);
    return ids;
}

inline Dataset assemble(Matrix features, std::vector<std::uint8_t> missing, const std::vector<std::string>& raw) {
    const auto ids = dense_label_ids(raw);
    Dataset d;
    d.features = std::move(features);
    d.missing = std::move(missing);
    if (!d.has_missing()) d.missing.clear();
    d.labels.reserve(raw.size());
    for (const auto& r : raw) d.labels.push_back(ids.at(r));
    for (const auto& [name, id] : ids) {
        d.class_ids.push_back(id);
        d.label_names[id] = name;
    }
    std::sort(d.class_ids.begin(), d.class_ids.end());
    d.validate();
    return d;
}

}  // namespace detail

struct CsvOptions {
    // "last", "first", a header name (when has_header) or a 0-based index.
    std::string label_column = "last";
    bool has_header = false;
};

inline Dataset read_csv(std::istream& in, const CsvOptions& opt = {}) {
    std::string line;
    std::vector<std::string> cells;
    std::vector<std::string> header;
    std::size_t line_no = 0;
    std::optional<std::size_t> width;
    std::optional<std::size_t> label_col;

    const auto resolve_label = [&](std::size_t ncols) {
        if (opt.label_column == "last") return ncols - 1;
        if (opt.label_column == "first") return std::size_t{0};
        if (opt.has_header) {
            auto it = std::find(header.begin(), header.end(), opt.label_column);
            if (it != header.end()) return static_cast<std::size_t>(it - header.begin());
        }
        std::size_t idx = 0;
        auto [p, ec] = std::from_chars(opt.label_column.data(), opt.label_column.data() + opt.label_column.size(), idx);
        if (ec != std::errc() || p != opt.label_column.data() + opt.label_column.size() || idx >= ncols)
            throw data_error("csv: unknown label column '" + opt.label_column + "'");
        return idx;
    };

    std::vector<double> values;
    std::vector<std::uint8_t> missing;
    std::vector<std::string> raw_labels;
    bool header_pending = opt.has_header;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        if (!detail::split_csv_record(line, cells))
            throw data_error("csv line " + std::to_string(line_no) + ": unterminated quoted field");
        if (header_pending) {
            header = cells;
            header_pending = false;
            width = cells.size();
            continue;
        }
        if (!width) width = cells.size();
        if (cells.size() != *width)
            throw data_error("csv line " + std::to_string(line_no) + ": malformed row (" +
                             std::to_string(cells.size()) + " fields, expected " + std::to_string(*width) + ")");
        if (*width < 2) throw data_error("csv: need at least one feature column and a label column");
        if (!label_col) label_col = resolve_label(*width);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c == *label_col) {
                if (cells[c].empty()) throw data_error("csv line " + std::to_string(line_no) + ": empty label");
                raw_labels.push_back(cells[c]);
                continue;
            }
            if (cells[c].empty()) {
                values.push_back(0.0);
                missing.push_back(1);
                continue;
            }
            auto v = detail::parse_double(cells[c]);
            if (!v)
                throw data_error("csv line " + std::to_string(line_no) + ": non-numeric cell '" + cells[c] + "'");
            values.push_back(*v);
            missing.push_back(0);
        }
    }
    if (!header.empty() && !label_col) resolve_label(header.size());
    if (raw_labels.empty()) throw data_error("csv: no data rows");
    const std::size_t n = raw_labels.size();
    const std::size_t m = *width - 1;
    return detail::assemble(Matrix(n, m, std::move(values)), std::move(missing), raw_labels);
}

inline Dataset load_csv(const std::string& path, const CsvOptions& opt = {}) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open '" + path + "'");
    return read_csv(in, opt);
}

// Header row f0..f{M-1},label; missing cells are left empty.
inline void write_csv(std::ostream& out, const Dataset& d) {
    for (std::size_t j = 0; j < d.cols(); ++j) out << 'f' << j << ',';
    out << "label\n";
    char buf[64];
    for (std::size_t i = 0; i < d.rows(); ++i) {
        for (std::size_t j = 0; j < d.cols(); ++j) {
            if (!d.is_missing(i, j)) {
                std::snprintf(buf, sizeof buf, "%.17g", d.features(i, j));
                out << buf;
            }
            out << ',';
        }
        const std::string name = d.name_of(d.labels[i]);
        if (name.find_first_of(",\"") != std::string::npos) {
            out << '"';
            for (char c : name) out << (c == '"' ? std::string("\"\"") : std::string(1, c));
            out << '"';
        } else {
            out << name;
        }
        out << '\n';
    }
}

inline void save_csv(const std::string& path, const Dataset& d) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write '" + path + "'");
    write_csv(out, d);
}

inline Dataset read_libsvm(std::istream& in) {
    struct Row {
        std::string label;
        std::vector<std::pair<std::size_t, double>> entries;
    };
    std::vector<Row> rows;
    std::size_t max_index = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream tokens(line);
        std::string tok;
        if (!(tokens >> tok)) continue;
        Row row;
        if (!detail::parse_double(tok))
            throw data_error("libsvm line " + std::to_string(line_no) + ": unparsable label '" + tok + "'");
        row.label = tok;
        std::size_t prev = 0;
        while (tokens >> tok) {
            const auto colon = tok.find(':');
            std::size_t idx = 0;
            const char* b = tok.data();
            const char* e = colon == std::string::npos ? nullptr : tok.data() + colon;
            auto [p, ec] = e ? std::from_chars(b, e, idx) : std::from_chars_result{b, std::errc::invalid_argument};
            auto v = e ? detail::parse_double(std::string_view(tok).substr(colon + 1)) : std::nullopt;
            if (ec != std::errc() || p != e || idx == 0 || !v)
                throw data_error("libsvm line " + std::to_string(line_no) + ": unparsable token '" + tok + "'");
            if (idx <= prev)
                throw data_error("libsvm line " + std::to_string(line_no) + ": indices not ascending at '" + tok + "'");
            prev = idx;
            max_index = std::max(max_index, idx);
            row.entries.emplace_back(idx, *v);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw data_error("libsvm: no data rows");
    if (max_index == 0) throw data_error("libsvm: no feature entries");
    Matrix x(rows.size(), max_index);
    std::vector<std::string> raw;
    raw.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (auto [idx, v] : rows[i].entries) x(i, idx - 1) = v;
        raw.push_back(rows[i].label);
    }
    return detail::assemble(std::move(x), {}, raw);
}

inline Dataset load_libsvm(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open '" + path + "'");
    return read_libsvm(in);
}

// ---------------------------------------------------------------------------
// Scaling
// ---------------------------------------------------------------------------

struct ScalingParams {
    Vector min;
    Vector max;
};

// Per-feature min/max over observed values.
template <RowSource Source>
ScalingParams fit_scaling(const Source& src) {
    const std::size_t m = src.cols();
    ScalingParams p{Vector(m, std::numeric_limits<double>::infinity()),
                    Vector(m, -std::numeric_limits<double>::infinity())};
    for (std::size_t i = 0; i < src.rows(); ++i)
        for (std::size_t j = 0; j < m; ++j) {
            if (src.is_missing(i, j)) continue;
            const double v = src.value(i, j);
            p.min[j] = std::min(p.min[j], v);
            p.max[j] = std::max(p.max[j], v);
        }
    for (std::size_t j = 0; j < m; ++j)
        if (p.min[j] > p.max[j]) throw data_error("fit_scaling: feature " + std::to_string(j) + " has no observed value");
    return p;
}

inline double scale_value(const ScalingParams& p, std::size_t j, double x) noexcept {
    const double span = p.max[j] - p.min[j];
    if (span == 0.0) return 0.0;
    return 2.0 * (x - p.min[j]) / span - 1.0;
}

// 2*(x-min)/(max-min) - 1 per feature, constant features -> 0, no clamping.
// Missing cells stay missing.
inline Dataset apply_scaling(const Dataset& d, const ScalingParams& p) {
    if (p.min.size() != d.cols() || p.max.size() != d.cols())
        throw dimension_error("apply_scaling: parameters for " + std::to_string(p.min.size()) +
                              " features, dataset has " + std::to_string(d.cols()));
    Dataset out = d;
    for (std::size_t i = 0; i < d.rows(); ++i)
        for (std::size_t j = 0; j < d.cols(); ++j)
            if (!d.is_missing(i, j)) out.features(i, j) = scale_value(p, j, d.features(i, j));
    return out;
}

inline void to_json(nlohmann::json& j, const ScalingParams& p) { j = nlohmann::json{{"min", p.min}, {"max", p.max}}; }
inline void from_json(const nlohmann::json& j, ScalingParams& p) {
    j.at("min").get_to(p.min);
    j.at("max").get_to(p.max);
    if (p.min.size() != p.max.size()) throw data_error("scaling: min/max length mismatch");
}

// ---------------------------------------------------------------------------
// KNN imputation
// ---------------------------------------------------------------------------

inline constexpr std::size_t default_impute_neighbors = 5;

// Donor rows are copied at fit time; transform() fills every missing cell of
// its argument from them.
class KnnImputer {
public:
    KnnImputer() = default;

    template <RowSource Source>
    static KnnImputer fit(const Source& src, std::size_t k = default_impute_neighbors) {
        if (k == 0) throw usage_error("knn_impute: k must be at least 1");
        KnnImputer imp;
        imp.k_ = k;
        imp.donors_ = Matrix(src.rows(), src.cols());
        imp.observed_.assign(src.rows() * src.cols(), 0);
        std::vector<std::size_t> per_feature(src.cols(), 0);
        for (std::size_t i = 0; i < src.rows(); ++i)
            for (std::size_t j = 0; j < src.cols(); ++j) {
                if (src.is_missing(i, j)) continue;
                imp.donors_(i, j) = src.value(i, j);
                imp.observed_[i * src.cols() + j] = 1;
                ++per_feature[j];
            }
        imp.complete_features_ = per_feature;
        return imp;
    }

    std::size_t k() const noexcept { return k_; }
    std::size_t cols() const noexcept { return donors_.cols(); }

    // Distance between a query row and donor r over mutually observed
    // features, normalized by their count; infinity when none are shared.
    double distance(std::span<const double> x, std::span<const std::uint8_t> x_observed, std::size_t r) const {
        double s = 0.0;
        std::size_t shared = 0;
        for (std::size_t j = 0; j < donors_.cols(); ++j) {
            if (!x_observed[j] || !observed_[r * donors_.cols() + j]) continue;
            const double d = x[j] - donors_(r, j);
            s += d * d;
            ++shared;
        }
        if (shared == 0) return std::numeric_limits<double>::infinity();
        return std::sqrt(s / static_cast<double>(shared));
    }

    Dataset transform(const Dataset& d) const {
        if (d.cols() != donors_.cols())
            throw dimension_error("knn_impute: imputer fitted on " + std::to_string(donors_.cols()) +
                                  " features, dataset has " + std::to_string(d.cols()));
        Dataset out = d;
        out.missing.clear();
        if (!d.has_missing()) return out;
        const std::size_t m = d.cols();
        std::vector<std::uint8_t> obs(m);
        std::vector<std::pair<double, std::size_t>> cand;
        for (std::size_t i = 0; i < d.rows(); ++i) {
            bool any = false;
            for (std::size_t j = 0; j < m; ++j) {
                obs[j] = d.is_missing(i, j) ? 0 : 1;
                any = any || !obs[j];
            }
            if (!any) continue;
            auto xi = d.features.row(i);
            for (std::size_t j = 0; j < m; ++j) {
                if (obs[j]) continue;
                if (complete_features_[j] == 0)
                    throw data_error("knn_impute: feature " + std::to_string(j) + " is missing in every row");
                cand.clear();
                for (std::size_t r = 0; r < donors_.rows(); ++r)
                    if (observed_[r * m + j]) cand.emplace_back(distance(xi, obs, r), r);
                const std::size_t take = std::min(k_, cand.size());
                std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end());
                double sum = 0.0;
                for (std::size_t t = 0; t < take; ++t) sum += donors_(cand[t].second, j);
                out.features(i, j) = sum / static_cast<double>(take);
            }
        }
        return out;
    }

private:
    std::size_t k_ = default_impute_neighbors;
    Matrix donors_;
    std::vector<std::uint8_t> observed_;
    std::vector<std::size_t> complete_features_;
};

// Fills each missing cell with the mean of that feature over the k nearest
// rows that observe it; k is clamped to the donor count.
inline Dataset knn_impute(const Dataset& d, std::size_t k = default_impute_neighbors) {
    return KnnImputer::fit(d, k).transform(d);
}

// ---------------------------------------------------------------------------
// Folds and class manipulation
// ---------------------------------------------------------------------------

struct FoldPlan {
    std::size_t k = 0;
    std::size_t repeats = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<std::size_t>> assignments;  // [repeat][sample] -> fold

    std::vector<std::size_t> test_indices(std::size_t repeat, std::size_t fold) const {
        std::vector<std::size_t> idx;
        const auto& a = assignments.at(repeat);
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a[i] == fold) idx.push_back(i);
        return idx;
    }

    std::vector<std::size_t> train_indices(std::size_t repeat, std::size_t fold) const {
        std::vector<std::size_t> idx;
        const auto& a = assignments.at(repeat);
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a[i] != fold) idx.push_back(i);
        return idx;
    }
};

inline void to_json(nlohmann::json& j, const FoldPlan& p) {
    j = nlohmann::json{{"k", p.k}, {"repeat", p.repeats}, {"seed", p.seed}, {"assignments", p.assignments}};
}

inline void from_json(const nlohmann::json& j, FoldPlan& p) {
    j.at("k").get_to(p.k);
    j.at("repeat").get_to(p.repeats);
    j.at("seed").get_to(p.seed);
    j.at("assignments").get_to(p.assignments);
}

namespace detail {

inline std::map<int, std::vector<std::size_t>> indices_by_class(std::span<const int> labels) {
    std::map<int, std::vector<std::size_t>> by;
    for (std::size_t i = 0; i < labels.size(); ++i) by[labels[i]].push_back(i);
    return by;
}

}  // namespace detail

// Stratified k-fold assignment for each repeat. Within a class the shuffled
// members are dealt round-robin, continuing the deal across classes so the
// overall fold sizes also stay within one of each other.
inline FoldPlan make_folds(std::span<const int> labels, std::size_t k, std::size_t repeats, std::uint64_t seed) {
    if (k < 2) throw usage_error("make_folds: k must be at least 2");
    if (repeats < 1) throw usage_error("make_folds: repeats must be at least 1");
    const auto by_class = detail::indices_by_class(labels);
    std::string small;
    for (const auto& [cls, idx] : by_class)
        if (idx.size() < k)
            small += (small.empty() ? "" : ", ") + std::to_string(cls) + " (" + std::to_string(idx.size()) + ")";
    if (!small.empty())
        throw data_error("make_folds: classes with fewer than " + std::to_string(k) + " samples: " + small);

    FoldPlan plan;
    plan.k = k;
    plan.repeats = repeats;
    plan.seed = seed;
    Rng rng(seed);
    for (std::size_t r = 0; r < repeats; ++r) {
        std::vector<std::size_t> assign(labels.size(), 0);
        std::size_t deal = 0;
        for (const auto& [cls, idx] : by_class) {
            std::vector<std::size_t> members = idx;
            rng.shuffle(members);
            for (std::size_t i : members) assign[i] = deal++ % k;
        }
        plan.assignments.push_back(std::move(assign));
    }
    return plan;
}

inline FoldPlan make_folds(const Dataset& d, std::size_t k, std::size_t repeats, std::uint64_t seed) {
    return make_folds(d.labels, k, repeats, seed);
}

// Stratified holdout: roughly `fraction` of every class goes to the second
// set, at least one sample per class when the class has two or more.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(std::span<const int> labels,
                                                                                        double fraction,
                                                                                        std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw usage_error("stratified_holdout: fraction must be in (0,1)");
    Rng rng(seed);
    std::vector<std::size_t> fit, hold;
    for (const auto& [cls, idx] : detail::indices_by_class(labels)) {
        std::vector<std::size_t> members = idx;
        rng.shuffle(members);
        std::size_t n_hold = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
        if (members.size() >= 2) n_hold = std::clamp<std::size_t>(n_hold, 1, members.size() - 1);
        else n_hold = 0;
        for (std::size_t i = 0; i < members.size(); ++i) (i < n_hold ? hold : fit).push_back(members[i]);
    }
    std::sort(fit.begin(), fit.end());
    std::sort(hold.begin(), hold.end());
    return {fit, hold};
}

// One-vs-rest binarization: positive_class -> +1, every other class -> -1.
inline Dataset make_imbalanced(const Dataset& d, int positive_class) {
    if (!std::binary_search(d.class_ids.begin(), d.class_ids.end(), positive_class))
        throw data_error("make_imbalanced: unknown class " + std::to_string(positive_class));
    if (d.class_ids.size() < 2) throw data_error("make_imbalanced: dataset has a single class");
    Dataset out;
    out.features = d.features;
    out.missing = d.missing;
    out.labels.reserve(d.rows());
    for (int l : d.labels) out.labels.push_back(l == positive_class ? 1 : -1);
    out.class_ids = {-1, 1};
    out.label_names[1] = d.name_of(positive_class);
    if (d.class_ids.size() == 2)
        out.label_names[-1] = d.name_of(d.class_ids[0] == positive_class ? d.class_ids[1] : d.class_ids[0]);
    else
        out.label_names[-1] = "rest";
    return out;
}

// Smallest class (ties: lowest id); the default positive class.
inline int minority_class(const Dataset& d) {
    int best = d.class_ids.front();
    for (int c : d.class_ids)
        if (d.class_count(c) < d.class_count(best)) best = c;
    return best;
}

inline bool is_binary_pm1(const Dataset& d) { return d.class_ids == std::vector<int>{-1, 1}; }

// Two unit-variance Gaussian blobs centred at -+separation/2 on the first
// axis. Majority rows come first and are labelled -1, minority rows +1.
inline Dataset make_imbalanced_blobs(std::size_t minority, std::size_t majority, double separation,
                                     std::size_t dims, std::uint64_t seed) {
    if (minority == 0 || majority == 0) throw usage_error("blobs: both classes need at least one sample");
    if (dims == 0) throw usage_error("blobs: need at least one dimension");
    Rng rng(seed);
    Matrix x(minority + majority, dims);
    std::vector<int> y(minority + majority);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const bool pos = i >= majority;
        y[i] = pos ? 1 : -1;
        for (std::size_t j = 0; j < dims; ++j) x(i, j) = rng.normal();
        x(i, 0) += (pos ? 0.5 : -0.5) * separation;
    }
    return make_dataset(std::move(x), std::move(y));
}

}  // namespace twinnn

#endif  // TWINNN_DATA_HPP
