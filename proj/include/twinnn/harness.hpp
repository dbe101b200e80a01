#ifndef TWINNN_HARNESS_HPP
#define TWINNN_HARNESS_HPP

/*
 Experiment orchestration.

 Flow per experiment:

   load -> (one-vs-rest binarization if requested) -> stratified k-fold
   plan repeated R times -> for each (repeat, fold):
       fit scaling on the training rows, scale, fit KNN imputer on the
       scaled training rows, impute both sides
       pick a grid point on an inner stratified 80/20 split of the
       training rows (G-means for binary runs, accuracy otherwise, unless
       the spec names the metric)
       retrain on the whole training fold, score the test fold
   -> mean and sample standard deviation of every metric over all R*k runs

 Every random choice is seeded from (master seed, repeat, fold, grid index)
 so results do not depend on execution order. A fold whose training
 diverges is recorded with its error and skipped in the aggregates.

 Result JSON is deterministic for a given spec and seed; per-fold wall-clock
 times are only written when include_timing is set.
*/

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "twinnn/data.hpp"
#include "twinnn/evalstats.hpp"
#include "twinnn/multiclass.hpp"
#include "twinnn/numcore.hpp"
#include "twinnn/twin_nn.hpp"
#include "twinnn/twsvm.hpp"

namespace twinnn {

enum class ModelKind { twin_nn, twin_nn_mc, twsvm_linear, twsvm_rbf, rfnn };

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::twin_nn: return "twin_nn";
        case ModelKind::twin_nn_mc: return "twin_nn_mc";
        case ModelKind::twsvm_linear: return "twsvm_linear";
        case ModelKind::twsvm_rbf: return "twsvm_rbf";
        case ModelKind::rfnn: return "rfnn";
    }
    return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
    for (auto k : {ModelKind::twin_nn, ModelKind::twin_nn_mc, ModelKind::twsvm_linear, ModelKind::twsvm_rbf,
                   ModelKind::rfnn})
        if (to_string(k) == s) return k;
    throw usage_error("unknown model '" + s + "' (twin_nn, twin_nn_mc, twsvm_linear, twsvm_rbf, rfnn)");
}

inline bool is_multiclass_kind(ModelKind k) { return k == ModelKind::twin_nn_mc; }

using HyperPoint = std::map<std::string, double>;
using HyperGrid = std::map<std::string, std::vector<double>>;

// Default hyperparameters; also the set of accepted keys per model.
inline HyperPoint default_hyper(ModelKind k) {
    switch (k) {
        case ModelKind::twin_nn: {
            const TwinHyper h;
            return {{"c_plus", h.c_plus}, {"c_minus", h.c_minus}, {"hidden", double(h.hidden)},
                    {"lr", h.lr},         {"epochs", double(h.epochs)}, {"tol", h.tol}};
        }
        case ModelKind::twin_nn_mc: {
            const MCHyper h;
            return {{"n", double(h.features)}, {"p", double(h.planes)}, {"c", h.c},
                    {"lr", h.lr},              {"epochs", double(h.epochs)}, {"tol", h.tol}};
        }
        case ModelKind::twsvm_linear: return {{"c1", 1.0}, {"c2", 1.0}, {"ridge", -1.0}};
        case ModelKind::twsvm_rbf: return {{"c1", 1.0}, {"c2", 1.0}, {"gamma", 1.0}, {"ridge", -1.0}};
        case ModelKind::rfnn: {
            const RfnnHyper h;
            return {{"hidden", double(h.hidden)}, {"lr", h.lr}, {"epochs", double(h.epochs)},
                    {"l2", h.l2},                 {"tol", h.tol}};
        }
    }
    return {};
}

// Cartesian product in key order, last key varying fastest. Keys missing
// from the grid take their defaults.
inline std::vector<HyperPoint> expand_grid(ModelKind kind, const HyperGrid& grid) {
    const HyperPoint defaults = default_hyper(kind);
    for (const auto& [key, values] : grid) {
        if (!defaults.contains(key)) {
            std::string allowed;
            for (const auto& [k, v] : defaults) allowed += (allowed.empty() ? "" : ", ") + k;
            throw usage_error("grid key '" + key + "' is not a " + to_string(kind) + " hyperparameter (" + allowed + ")");
        }
        if (values.empty()) throw usage_error("grid key '" + key + "' has no values");
    }
    std::vector<HyperPoint> points{defaults};
    for (const auto& [key, values] : grid) {
        std::vector<HyperPoint> next;
        for (const auto& p : points)
            for (double v : values) {
                HyperPoint q = p;
                q[key] = v;
                next.push_back(std::move(q));
            }
        points = std::move(next);
    }
    return points;
}

namespace detail {

inline std::size_t as_count(const HyperPoint& h, const std::string& key) {
    const double v = h.at(key);
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e9)
        throw usage_error("hyperparameter '" + key + "' must be a non-negative integer");
    return static_cast<std::size_t>(v);
}

}  // namespace detail

inline TwinHyper twin_hyper_from(const HyperPoint& h, std::uint64_t seed) {
    TwinHyper t;
    t.c_plus = h.at("c_plus");
    t.c_minus = h.at("c_minus");
    t.hidden = detail::as_count(h, "hidden");
    t.lr = h.at("lr");
    t.epochs = detail::as_count(h, "epochs");
    t.tol = h.at("tol");
    t.seed = seed;
    return t;
}

inline MCHyper mc_hyper_from(const HyperPoint& h, std::uint64_t seed) {
    MCHyper m;
    m.features = detail::as_count(h, "n");
    m.planes = detail::as_count(h, "p");
    m.c = h.at("c");
    m.lr = h.at("lr");
    m.epochs = detail::as_count(h, "epochs");
    m.tol = h.at("tol");
    m.seed = seed;
    return m;
}

inline RfnnHyper rfnn_hyper_from(const HyperPoint& h, std::uint64_t seed) {
    RfnnHyper r;
    r.hidden = detail::as_count(h, "hidden");
    r.lr = h.at("lr");
    r.epochs = detail::as_count(h, "epochs");
    r.l2 = h.at("l2");
    r.tol = h.at("tol");
    r.seed = seed;
    return r;
}

// ---------------------------------------------------------------------------
// Trained models behind one interface
// ---------------------------------------------------------------------------

struct TrainedModel {
    ModelKind kind = ModelKind::twin_nn;
    std::variant<TwinNNModel, MulticlassTwinModel, TwsvmModel, RfnnModel> model;
};

inline TrainedModel fit_model(ModelKind kind, const Dataset& data, const HyperPoint& hp, std::uint64_t seed) {
    HyperPoint h = default_hyper(kind);
    for (const auto& [k, v] : hp) h[k] = v;
    TrainedModel out;
    out.kind = kind;
    switch (kind) {
        case ModelKind::twin_nn: out.model = train(data, twin_hyper_from(h, seed)); break;
        case ModelKind::twin_nn_mc: out.model = mc_train(data, mc_hyper_from(h, seed)); break;
        case ModelKind::rfnn: out.model = train_rfnn_baseline(data, rfnn_hyper_from(h, seed)); break;
        case ModelKind::twsvm_linear:
        case ModelKind::twsvm_rbf: {
            KernelSpec ks;
            TwsvmMode mode = TwsvmMode::linear;
            if (kind == ModelKind::twsvm_rbf) {
                mode = TwsvmMode::kernel;
                ks.kind = KernelSpec::Kind::rbf;
                ks.gamma = h.at("gamma");
            }
            auto p = make_twsvm_problem(data, h.at("c1"), h.at("c2"), mode, ks);
            if (h.at("ridge") >= 0.0) p.ridge = h.at("ridge");
            out.model = solve_dual(p);
            break;
        }
    }
    return out;
}

inline std::vector<int> predict_labels(const TrainedModel& m, const Matrix& x) {
    return std::visit(
        [&](const auto& model) -> std::vector<int> {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, TwinNNModel>) return predict(model, x);
            else if constexpr (std::is_same_v<T, MulticlassTwinModel>) return mc_predict(model, x);
            else if constexpr (std::is_same_v<T, TwsvmModel>) return twsvm_predict(model, x);
            else return rfnn_predict(model, x);
        },
        m.model);
}

// Normalized distance of x to the model's own (+1) plane.
inline double own_plane_distance(const TrainedModel& m, std::span<const double> x) {
    if (const auto* t = std::get_if<TwinNNModel>(&m.model)) return decision_values(*t, x).d_plus;
    if (const auto* s = std::get_if<TwsvmModel>(&m.model)) return twsvm_distances(*s, x).d_plus;
    throw usage_error("model " + to_string(m.kind) + " has no own-class plane");
}

inline nlohmann::json to_json(const TrainedModel& m) {
    nlohmann::json body = std::visit([](const auto& model) { return to_json(model); }, m.model);
    return {{"kind", to_string(m.kind)}, {"model", body}};
}

inline TrainedModel trained_model_from_json(const nlohmann::json& j) {
    TrainedModel m;
    m.kind = parse_model_kind(j.at("kind").get<std::string>());
    const auto& body = j.at("model");
    switch (m.kind) {
        case ModelKind::twin_nn: m.model = twin_model_from_json(body); break;
        case ModelKind::twin_nn_mc: m.model = mc_model_from_json(body); break;
        case ModelKind::rfnn: m.model = rfnn_model_from_json(body); break;
        case ModelKind::twsvm_linear:
        case ModelKind::twsvm_rbf: m.model = twsvm_model_from_json(body); break;
    }
    return m;
}

// K binary models, class k against the rest; the class whose model puts x
// closest to its own plane wins (ties: lowest class id).
struct OneVsRestModel {
    ModelKind base = ModelKind::twin_nn;
    std::vector<int> class_ids;
    std::vector<TrainedModel> models;

    std::vector<double> distances(std::span<const double> x) const {
        std::vector<double> d;
        d.reserve(models.size());
        for (const auto& m : models) d.push_back(own_plane_distance(m, x));
        return d;
    }

    int predict(std::span<const double> x) const {
        const auto d = distances(x);
        std::size_t best = 0;
        for (std::size_t k = 1; k < d.size(); ++k)
            if (d[k] < d[best] || (d[k] == d[best] && class_ids[k] < class_ids[best])) best = k;
        return class_ids[best];
    }

    std::vector<int> predict(const Matrix& x) const {
        std::vector<int> out(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict(x.row(i));
        return out;
    }
};

inline OneVsRestModel fit_onevsrest(ModelKind base, const Dataset& train, const HyperPoint& hp, std::uint64_t seed) {
    if (base != ModelKind::twin_nn && base != ModelKind::twsvm_linear && base != ModelKind::twsvm_rbf)
        throw usage_error("one-vs-rest needs a plane-based binary model (twin_nn, twsvm_linear, twsvm_rbf), got " +
                          to_string(base));
    OneVsRestModel m;
    m.base = base;
    for (int c : train.class_ids) {
        if (train.class_count(c) == 0) continue;
        m.class_ids.push_back(c);
        m.models.push_back(fit_model(base, make_imbalanced(train, c), hp, derive_seed(seed, 0x0f7, c)));
    }
    if (m.models.size() < 2) throw data_error("one-vs-rest: training data has a single class");
    return m;
}

inline nlohmann::json to_json(const OneVsRestModel& m) {
    auto models = nlohmann::json::array();
    for (const auto& t : m.models) models.push_back(to_json(t));
    return {{"kind", "onevsrest"}, {"base", to_string(m.base)}, {"class_ids", m.class_ids}, {"models", models}};
}

inline OneVsRestModel onevsrest_from_json(const nlohmann::json& j) {
    OneVsRestModel m;
    m.base = parse_model_kind(j.at("base").get<std::string>());
    m.class_ids = j.at("class_ids").get<std::vector<int>>();
    for (const auto& t : j.at("models")) m.models.push_back(trained_model_from_json(t));
    if (m.models.size() != m.class_ids.size()) throw data_error("one-vs-rest json: model count mismatch");
    return m;
}

// ---------------------------------------------------------------------------
// Fold preprocessing
// ---------------------------------------------------------------------------

// Scaled read-through view of another row source.
template <RowSource Source>
class ScaledView {
public:
    ScaledView(const Source& src, const ScalingParams& p) : src_(&src), p_(&p) {}
    std::size_t rows() const { return src_->rows(); }
    std::size_t cols() const { return src_->cols(); }
    double value(std::size_t i, std::size_t j) const { return scale_value(*p_, j, src_->value(i, j)); }
    bool is_missing(std::size_t i, std::size_t j) const { return src_->is_missing(i, j); }

private:
    const Source* src_;
    const ScalingParams* p_;
};

struct FoldPreprocessor {
    ScalingParams scaling;
    std::optional<KnnImputer> imputer;  // absent when the training rows had no missing cells

    Dataset apply(const Dataset& d) const {
        Dataset out = apply_scaling(d, scaling);
        if (out.has_missing()) {
            if (!imputer) throw data_error("missing values present but no imputer was fitted");
            out = imputer->transform(out);
        }
        return out;
    }
};

// Fits on `train` only: scaling on observed values, then KNN donors in the
// scaled space.
template <RowSource Source>
FoldPreprocessor fit_fold_preprocessing(const Source& train, std::size_t impute_k, bool need_imputer) {
    FoldPreprocessor p;
    p.scaling = fit_scaling(train);
    if (need_imputer) p.imputer = KnnImputer::fit(ScaledView<Source>(train, p.scaling), impute_k);
    return p;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct ExperimentSpec {
    std::string data_path;
    std::string format = "csv";
    CsvOptions csv;
    ModelKind model = ModelKind::twin_nn;
    HyperGrid grid;
    std::size_t folds = 5;
    std::size_t repeats = 1;
    std::uint64_t seed = 0;
    std::string out;
    std::optional<std::string> positive_class;
    std::size_t impute_k = default_impute_neighbors;
    double inner_holdout = 0.2;
    // Grid selection metric: "auto" (G-means for binary runs, accuracy
    // otherwise), "gmeans" or "acc".
    std::string select = "auto";
    bool include_timing = false;

    void validate() const {
        if (folds < 2) throw usage_error("folds must be at least 2");
        if (select != "auto" && select != "gmeans" && select != "acc")
            throw usage_error("unknown selection metric '" + select + "' (auto, gmeans, acc)");
        if (!(inner_holdout > 0.0 && inner_holdout < 1.0)) throw usage_error("inner holdout must lie in (0, 1)");
        if (repeats < 1) throw usage_error("repeats must be at least 1");
        if (impute_k < 1) throw usage_error("impute neighbours must be at least 1");
        expand_grid(model, grid);
    }
};

struct FoldResult {
    std::size_t repeat = 0;
    std::size_t fold = 0;
    std::size_t grid_index = 0;
    HyperPoint chosen;
    std::map<std::string, std::optional<double>> scores;
    std::optional<ConfusionMatrix> confusion;   // binary runs
    std::vector<std::vector<std::uint64_t>> class_confusion;  // multiclass runs, [true][predicted]
    std::optional<std::string> error;
    std::vector<std::string> notes;  // grid points that failed during selection
    double seconds = 0.0;
};

struct MetricAggregate {
    double mean = 0.0;
    double std = 0.0;
    std::size_t count = 0;
};

struct RunResult {
    std::string model;
    std::string mode;  // "binary", "multiclass" or "onevsrest"
    std::string data_path;
    std::vector<std::string> class_names;
    std::optional<std::string> positive_class;
    std::size_t folds = 0;
    std::size_t repeats = 0;
    std::uint64_t seed = 0;
    HyperGrid grid;
    std::string select;  // metric used for grid selection
    std::vector<FoldResult> runs;
    std::map<std::string, MetricAggregate> aggregate;
    std::vector<std::vector<std::uint64_t>> class_confusion;  // summed over runs
    std::size_t failures = 0;
    bool include_timing = false;
};

inline MetricAggregate aggregate_values(std::span<const double> v) {
    MetricAggregate a;
    a.count = v.size();
    if (v.empty()) return a;
    double s = 0.0;
    for (double x : v) s += x;
    a.mean = s / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - a.mean) * (x - a.mean);
        a.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return a;
}

// Mean and sample std of each metric over the runs where it is defined.
inline std::map<std::string, MetricAggregate> aggregate_runs(const std::vector<FoldResult>& runs) {
    std::map<std::string, std::vector<double>> values;
    for (const auto& r : runs) {
        if (r.error) continue;
        for (const auto& [k, v] : r.scores) {
            auto& bucket = values[k];
            if (v) bucket.push_back(*v);
        }
    }
    std::map<std::string, MetricAggregate> out;
    for (const auto& [k, v] : values) out[k] = aggregate_values(v);
    return out;
}

namespace detail {

inline std::map<std::string, std::optional<double>> binary_scores(const ConfusionMatrix& cm) {
    const MetricReport r = metrics(cm);
    std::map<std::string, std::optional<double>> s;
    for (const auto& [name, field] : metric_fields()) s[name] = r.*field;
    return s;
}

inline std::vector<std::vector<std::uint64_t>> class_confusion(std::span<const int> truth, std::span<const int> pred,
                                                               std::size_t k) {
    std::vector<std::vector<std::uint64_t>> m(k, std::vector<std::uint64_t>(k, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) m.at(truth[i]).at(pred[i])++;
    return m;
}

inline double accuracy(std::span<const int> truth, std::span<const int> pred) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) ok += truth[i] == pred[i];
    return static_cast<double>(ok) / static_cast<double>(truth.size());
}

enum class RunMode { binary, multiclass, onevsrest };

// Trains the configured model on `train` and returns predictions for `test`.
inline std::vector<int> fit_and_predict(RunMode mode, ModelKind kind, const Dataset& train, const Matrix& test,
                                        const HyperPoint& hp, std::uint64_t seed) {
    if (mode == RunMode::onevsrest) return fit_onevsrest(kind, train, hp, seed).predict(test);
    return predict_labels(fit_model(kind, train, hp, seed), test);
}

inline double selection_score(RunMode mode, const std::string& select, std::span<const int> truth,
                              std::span<const int> pred) {
    if (mode == RunMode::binary && select != "acc") return *metrics(confusion(truth, pred)).gmeans;
    return accuracy(truth, pred);
}

}  // namespace detail

// Core CV loop shared by run_experiment and run_onevsrest. `d` is already
// binarized for binary runs.
inline RunResult run_cv(const Dataset& d, const ExperimentSpec& spec, detail::RunMode mode) {
    spec.validate();
    d.validate();
    const auto points = expand_grid(spec.model, spec.grid);
    const FoldPlan plan = make_folds(d, spec.folds, spec.repeats, spec.seed);

    RunResult res;
    res.model = to_string(spec.model);
    res.mode = mode == detail::RunMode::binary ? "binary" : (mode == detail::RunMode::multiclass ? "multiclass" : "onevsrest");
    res.data_path = spec.data_path;
    for (int c : d.class_ids) res.class_names.push_back(d.name_of(c));
    res.positive_class = spec.positive_class;
    res.folds = spec.folds;
    res.repeats = spec.repeats;
    res.seed = spec.seed;
    res.grid = spec.grid;
    res.select = spec.select == "auto" ? (mode == detail::RunMode::binary ? "gmeans" : "acc") : spec.select;
    res.include_timing = spec.include_timing;
    const std::size_t k_classes = d.class_ids.size();
    if (mode != detail::RunMode::binary) res.class_confusion.assign(k_classes, std::vector<std::uint64_t>(k_classes, 0));

    if (mode != detail::RunMode::binary && spec.select == "gmeans")
        throw usage_error("G-means selection needs a binary run; use --positive-class or select acc");

    // Multiclass runs index the K x K matrix by dense class id.
    if (mode != detail::RunMode::binary)
        for (std::size_t i = 0; i < k_classes; ++i)
            if (d.class_ids[i] != static_cast<int>(i)) throw data_error("multiclass labels must be dense 0..K-1");

    for (std::size_t r = 0; r < spec.repeats; ++r) {
        for (std::size_t f = 0; f < spec.folds; ++f) {
            const auto t0 = std::chrono::steady_clock::now();
            FoldResult fr;
            fr.repeat = r;
            fr.fold = f;
            try {
                const auto train_idx = plan.train_indices(r, f);
                const auto test_idx = plan.test_indices(r, f);
                const RowSubset<Dataset> train_view(d, train_idx);
                const auto prep = fit_fold_preprocessing(train_view, spec.impute_k, d.has_missing());
                const Dataset train = prep.apply(d.subset(train_idx));
                const Dataset test = prep.apply(d.subset(test_idx));

                std::size_t best = 0;
                if (points.size() > 1) {
                    const auto [fit_idx, hold_idx] =
                        stratified_holdout(train.labels, spec.inner_holdout, derive_seed(spec.seed, 0x5e1, r, f));
                    const Dataset fit = train.subset(fit_idx);
                    const Dataset hold = train.subset(hold_idx);
                    double best_score = -1.0;
                    bool any = false;
                    for (std::size_t g = 0; g < points.size(); ++g) {
                        try {
                            const auto pred = detail::fit_and_predict(mode, spec.model, fit, hold.features, points[g],
                                                                      derive_seed(spec.seed, r, f, g));
                            const double s = detail::selection_score(mode, spec.select, hold.labels, pred);
                            if (!any || s > best_score) {
                                best_score = s;
                                best = g;
                                any = true;
                            }
                        } catch (const numerical_error& e) {
                            fr.notes.push_back("grid point " + std::to_string(g) + ": " + e.what());
                        }
                    }
                    if (!any) throw numerical_error("every grid point failed during selection");
                }
                fr.grid_index = best;
                fr.chosen = points[best];
                const auto pred = detail::fit_and_predict(mode, spec.model, train, test.features, points[best],
                                                          derive_seed(spec.seed, r, f, best));
                if (mode == detail::RunMode::binary) {
                    fr.confusion = confusion(test.labels, pred);
                    fr.scores = detail::binary_scores(*fr.confusion);
                } else {
                    fr.class_confusion = detail::class_confusion(test.labels, pred, k_classes);
                    fr.scores["acc"] = detail::accuracy(test.labels, pred);
                    for (std::size_t a = 0; a < k_classes; ++a)
                        for (std::size_t b = 0; b < k_classes; ++b) res.class_confusion[a][b] += fr.class_confusion[a][b];
                }
            } catch (const numerical_error& e) {
                fr.error = e.what();
                ++res.failures;
            }
            fr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            res.runs.push_back(std::move(fr));
        }
    }
    res.aggregate = aggregate_runs(res.runs);
    return res;
}

inline Dataset load_dataset(const ExperimentSpec& spec) {
    if (spec.format == "csv") return load_csv(spec.data_path, spec.csv);
    if (spec.format == "libsvm") return load_libsvm(spec.data_path);
    throw usage_error("unknown format '" + spec.format + "' (csv, libsvm)");
}

// K >= 3 classes, each class against the rest with a binary plane model.
inline RunResult run_onevsrest(const Dataset& d, const ExperimentSpec& spec) {
    if (d.class_ids.size() < 3) throw usage_error("dataset has fewer than 3 classes; use run_experiment");
    if (is_multiclass_kind(spec.model) || spec.model == ModelKind::rfnn)
        throw usage_error("one-vs-rest needs a plane-based binary model (twin_nn, twsvm_linear, twsvm_rbf)");
    return run_cv(d, spec, detail::RunMode::onevsrest);
}

// Binary models get a +1/-1 dataset: the requested positive class against
// the rest, or the minority class of a two-class dataset. A binary model on
// a K >= 3 dataset without a positive class runs one-vs-rest.
inline RunResult run_experiment(const Dataset& d, const ExperimentSpec& spec) {
    if (is_multiclass_kind(spec.model)) return run_cv(d, spec, detail::RunMode::multiclass);
    if (spec.positive_class) {
        ExperimentSpec s = spec;
        return run_cv(make_imbalanced(d, d.class_for_name(*spec.positive_class)), s, detail::RunMode::binary);
    }
    if (is_binary_pm1(d)) return run_cv(d, spec, detail::RunMode::binary);
    if (d.class_ids.size() == 2) {
        ExperimentSpec s = spec;
        s.positive_class = d.name_of(minority_class(d));
        return run_cv(make_imbalanced(d, minority_class(d)), s, detail::RunMode::binary);
    }
    return run_onevsrest(d, spec);
}

inline RunResult run_experiment(const ExperimentSpec& spec) { return run_experiment(load_dataset(spec), spec); }

inline constexpr const char* result_schema = "twinnn.result/1";

inline nlohmann::json to_json(const RunResult& r) {
    using nlohmann::json;
    const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json runs = json::array();
    for (const auto& f : r.runs) {
        json scores = json::object();
        for (const auto& [k, v] : f.scores) scores[k] = opt(v);
        json jr{{"repeat", f.repeat}, {"fold", f.fold}, {"grid_index", f.grid_index}, {"chosen", f.chosen},
                {"scores", scores},   {"notes", f.notes}};
        if (f.confusion) jr["confusion"] = *f.confusion;
        if (!f.class_confusion.empty()) jr["class_confusion"] = f.class_confusion;
        jr["error"] = f.error ? json(*f.error) : json(nullptr);
        if (r.include_timing) jr["seconds"] = f.seconds;
        runs.push_back(std::move(jr));
    }
    json agg = json::object();
    for (const auto& [k, a] : r.aggregate) agg[k] = {{"mean", a.mean}, {"std", a.std}, {"count", a.count}};
    json j{{"schema", result_schema},
           {"model", r.model},
           {"mode", r.mode},
           {"data", r.data_path},
           {"classes", r.class_names},
           {"positive_class", r.positive_class ? json(*r.positive_class) : json(nullptr)},
           {"folds", r.folds},
           {"repeats", r.repeats},
           {"seed", r.seed},
           {"grid", r.grid},
           {"select", r.select},
           {"std_over", "all repeat x fold runs"},
           {"runs", runs},
           {"aggregate", agg},
           {"failures", r.failures}};
    if (!r.class_confusion.empty()) j["class_confusion"] = r.class_confusion;
    return j;
}

inline std::string format_mean_std(const MetricAggregate& a, int digits = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << a.mean << " ± " << a.std;
    return os.str();
}

// Plain-text report: one line per metric, mean ± std over all runs.
inline std::string format_table(const RunResult& r) {
    std::ostringstream os;
    os << "model " << r.model << " (" << r.mode << "), " << r.folds << "-fold CV x " << r.repeats
       << " repeats, seed " << r.seed << "\n";
    os << "std over all " << r.folds * r.repeats << " runs; failed runs: " << r.failures << "\n";
    std::size_t width = 6;
    for (const auto& [k, a] : r.aggregate) width = std::max(width, k.size());
    for (const auto& [k, a] : r.aggregate) {
        os << std::left << std::setw(static_cast<int>(width) + 2) << k << format_mean_std(a);
        if (a.count != r.runs.size() - r.failures) os << "  (defined in " << a.count << " runs)";
        os << "\n";
    }
    if (!r.class_confusion.empty()) {
        os << "confusion (rows: true, cols: predicted)\n";
        std::size_t cw = 5;
        for (const auto& n : r.class_names) cw = std::max(cw, n.size() + 1);
        os << std::setw(static_cast<int>(cw)) << "";
        for (const auto& n : r.class_names) os << std::right << std::setw(static_cast<int>(cw)) << n;
        os << "\n";
        for (std::size_t a = 0; a < r.class_confusion.size(); ++a) {
            os << std::right << std::setw(static_cast<int>(cw)) << r.class_names[a];
            for (auto v : r.class_confusion[a]) os << std::setw(static_cast<int>(cw)) << v;
            os << "\n";
        }
    }
    return os.str();
}

// Side-by-side table of several runs on the same data.
inline std::string format_bench_table(const std::vector<RunResult>& results,
                                      const std::vector<std::string>& metrics_order = {"acc", "gmeans", "fmeasure",
                                                                                         "mcc"}) {
    std::ostringstream os;
    std::size_t w0 = 6;
    for (const auto& r : results) w0 = std::max(w0, r.model.size());
    const int cw = 18;
    os << std::left << std::setw(static_cast<int>(w0) + 2) << "model";
    for (const auto& m : metrics_order) os << std::left << std::setw(cw) << m;
    os << "\n";
    for (const auto& r : results) {
        os << std::left << std::setw(static_cast<int>(w0) + 2) << r.model;
        for (const auto& m : metrics_order) {
            auto it = r.aggregate.find(m);
            const std::string cell =
                it == r.aggregate.end() || it->second.count == 0 ? "-" : format_mean_std(it->second, 3);
            // setw counts bytes; pad by code points so the UTF-8 "±" lines up.
            const auto width = static_cast<int>(std::count_if(cell.begin(), cell.end(),
                                                              [](char c) { return (c & 0xC0) != 0x80; }));
            os << cell << std::string(static_cast<std::size_t>(std::max(1, cw - width)), ' ');
        }
        os << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Algorithm comparison
// ---------------------------------------------------------------------------

struct PairwiseComparison {
    std::string algorithm;
    std::optional<WilcoxonResult> wilcoxon;
    std::optional<std::string> note;
};

struct ComparisonReport {
    std::string reference;
    std::vector<std::string> algorithms;
    std::vector<PairwiseComparison> pairs;
    FriedmanResult friedman;
};

// scores: one row per dataset, one column per algorithm (higher is better).
inline ComparisonReport compare_algorithms(const std::vector<std::string>& algorithms, const Matrix& scores,
                                          const std::string& reference) {
    if (scores.cols() != algorithms.size()) throw dimension_error("compare: algorithm names do not match score columns");
    if (algorithms.size() < 2) throw data_error("compare: need at least 2 algorithms");
    if (scores.rows() < 5)
        throw data_error("compare: insufficient datasets (" + std::to_string(scores.rows()) + ", need at least 5)");
    const auto ref_it = std::find(algorithms.begin(), algorithms.end(), reference);
    if (ref_it == algorithms.end()) throw usage_error("compare: unknown reference algorithm '" + reference + "'");
    const std::size_t ref = static_cast<std::size_t>(ref_it - algorithms.begin());

    ComparisonReport rep;
    rep.reference = reference;
    rep.algorithms = algorithms;
    Vector ref_col(scores.rows()), col(scores.rows());
    for (std::size_t i = 0; i < scores.rows(); ++i) ref_col[i] = scores(i, ref);
    for (std::size_t a = 0; a < algorithms.size(); ++a) {
        PairwiseComparison pc;
        pc.algorithm = algorithms[a];
        if (a == ref) {
            pc.note = "reference";
        } else {
            for (std::size_t i = 0; i < scores.rows(); ++i) col[i] = scores(i, a);
            try {
                pc.wilcoxon = wilcoxon_signed_ranks(ref_col, col);
            } catch (const data_error& e) {
                pc.note = e.what();
            }
        }
        rep.pairs.push_back(std::move(pc));
    }
    rep.friedman = friedman(scores);
    return rep;
}

inline nlohmann::json to_json(const ComparisonReport& r) {
    using nlohmann::json;
    json pairs = json::array();
    for (const auto& p : r.pairs) {
        json jp{{"algorithm", p.algorithm}};
        if (p.wilcoxon)
            jp["wilcoxon"] = {{"statistic", p.wilcoxon->statistic}, {"w_plus", p.wilcoxon->w_plus},
                              {"w_minus", p.wilcoxon->w_minus},     {"n", p.wilcoxon->n},
                              {"p_value", p.wilcoxon->p_value},     {"exact", p.wilcoxon->exact}};
        else
            jp["wilcoxon"] = nullptr;
        jp["note"] = p.note ? json(*p.note) : json(nullptr);
        pairs.push_back(std::move(jp));
    }
    return {{"reference", r.reference},
            {"algorithms", r.algorithms},
            {"pairs", pairs},
            {"friedman",
             {{"statistic", r.friedman.statistic}, {"p_value", r.friedman.p_value}, {"mean_ranks", r.friedman.mean_ranks}}}};
}

inline std::string format_comparison(const ComparisonReport& r) {
    std::ostringstream os;
    std::size_t w0 = 9;
    for (const auto& a : r.algorithms) w0 = std::max(w0, a.size());
    os << "Wilcoxon signed-ranks (two-sided) against " << r.reference << "\n";
    os << std::left << std::setw(static_cast<int>(w0) + 2) << "algorithm" << std::setw(10) << "mean rank"
       << std::setw(10) << "W" << std::setw(6) << "n" << "p-value\n";
    for (std::size_t a = 0; a < r.pairs.size(); ++a) {
        const auto& p = r.pairs[a];
        os << std::left << std::setw(static_cast<int>(w0) + 2) << p.algorithm << std::setw(10) << std::fixed
           << std::setprecision(3) << r.friedman.mean_ranks[a];
        if (p.wilcoxon) {
            std::ostringstream pv;
            pv << std::scientific << std::setprecision(4) << p.wilcoxon->p_value;
            os << std::setw(10) << std::setprecision(1) << p.wilcoxon->statistic << std::setw(6) << p.wilcoxon->n
               << pv.str() << (p.wilcoxon->exact ? " (exact)" : " (normal approx.)");
        } else {
            os << "- (" << p.note.value_or("") << ")";
        }
        os << "\n";
    }
    std::ostringstream fp;
    fp << std::scientific << std::setprecision(4) << r.friedman.p_value;
    os << "Friedman chi-square " << std::fixed << std::setprecision(4) << r.friedman.statistic << ", p = " << fp.str()
       << "\n";
    return os.str();
}

}  // namespace twinnn

#endif  // TWINNN_HARNESS_HPP
