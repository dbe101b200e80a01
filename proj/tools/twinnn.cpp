// twinnn command-line front end.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

#include <fstream>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "twinnn/harness.hpp"

namespace {

using namespace twinnn;
using nlohmann::json;

constexpr const char* model_schema = "twinnn.model/1";
constexpr const char* bench_schema = "twinnn.bench/1";

struct DataFlags {
    std::string path;
    std::string format = "csv";
    std::string label_column = "last";
    bool header = false;

    CsvOptions csv() const { return {label_column, header}; }

    Dataset load() const {
        if (format == "libsvm") return load_libsvm(path);
        return load_csv(path, csv());
    }
};

void add_data_flags(CLI::App* cmd, DataFlags& f, bool required = true) {
    auto* opt = cmd->add_option("--data", f.path, "input file");
    if (required) opt->required();
    cmd->add_option("--format", f.format, "csv or libsvm")->check(CLI::IsMember({"csv", "libsvm"}));
    cmd->add_option("--label-column", f.label_column, "csv label column: last, first, index or header name");
    cmd->add_flag("--header", f.header, "csv has a header row");
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write '" + path + "'");
    out << text;
    if (!out) throw data_error("write to '" + path + "' failed");
}

// "key=v1,v2,..." entries, each key at most once.
HyperGrid parse_grid(const std::vector<std::string>& entries) {
    HyperGrid grid;
    for (const auto& e : entries) {
        const auto eq = e.find('=');
        if (eq == std::string::npos || eq == 0) throw usage_error("--grid expects key=v1,v2,... but got '" + e + "'");
        const std::string key = e.substr(0, eq);
        if (grid.contains(key)) throw usage_error("--grid key '" + key + "' given twice");
        std::vector<double> values;
        std::stringstream ss(e.substr(eq + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto v = detail::parse_double(item);
            if (!v) throw usage_error("--grid " + key + ": '" + item + "' is not a number");
            values.push_back(*v);
        }
        if (values.empty()) throw usage_error("--grid key '" + key + "' has no values");
        grid[key] = std::move(values);
    }
    return grid;
}

// ---------------------------------------------------------------------------
// Model files: preprocessing + model + label names
// ---------------------------------------------------------------------------

// Plain table used to rebuild the imputer's donor set from JSON.
struct DonorTable {
    Matrix values;
    std::vector<std::uint8_t> missing;
    std::size_t rows() const { return values.rows(); }
    std::size_t cols() const { return values.cols(); }
    double value(std::size_t i, std::size_t j) const { return values(i, j); }
    bool is_missing(std::size_t i, std::size_t j) const { return missing[i * values.cols() + j] != 0; }
};

struct Pipeline {
    std::string mode;
    std::size_t inputs = 0;
    std::map<int, std::string> names;  // model output id -> class name
    FoldPreprocessor prep;
    std::optional<std::size_t> impute_k;
    Dataset donors;  // scaled training rows, kept only when an imputer exists
    std::optional<TrainedModel> single;
    std::optional<OneVsRestModel> ovr;

    std::vector<int> predict(const Matrix& x) const { return single ? predict_labels(*single, x) : ovr->predict(x); }
};

json pipeline_to_json(const Pipeline& p) {
    json labels = json::array();
    for (const auto& [id, name] : p.names) labels.push_back({{"id", id}, {"name", name}});
    json impute = nullptr;
    if (p.impute_k) {
        json rows = json::array();
        for (std::size_t i = 0; i < p.donors.rows(); ++i) {
            json r = json::array();
            for (std::size_t j = 0; j < p.donors.cols(); ++j)
                r.push_back(p.donors.is_missing(i, j) ? json(nullptr) : json(p.donors.features(i, j)));
            rows.push_back(std::move(r));
        }
        impute = {{"k", *p.impute_k}, {"rows", rows}};
    }
    return {{"schema", model_schema},
            {"mode", p.mode},
            {"inputs", p.inputs},
            {"labels", labels},
            {"preprocess", {{"scaling", p.prep.scaling}, {"impute", impute}}},
            {"model", p.single ? to_json(*p.single) : to_json(*p.ovr)}};
}

Pipeline pipeline_from_json(const json& j) {
    if (j.value("schema", "") != model_schema) throw data_error("not a twinnn model file (schema mismatch)");
    Pipeline p;
    p.mode = j.at("mode").get<std::string>();
    p.inputs = j.at("inputs").get<std::size_t>();
    for (const auto& l : j.at("labels")) p.names[l.at("id").get<int>()] = l.at("name").get<std::string>();
    p.prep.scaling = j.at("preprocess").at("scaling").get<ScalingParams>();
    const auto& imp = j.at("preprocess").at("impute");
    if (!imp.is_null()) {
        const auto& rows = imp.at("rows");
        DonorTable t{Matrix(rows.size(), p.inputs), std::vector<std::uint8_t>(rows.size() * p.inputs, 0)};
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != p.inputs) throw data_error("model file: imputer row width mismatch");
            for (std::size_t c = 0; c < p.inputs; ++c) {
                if (rows[i][c].is_null())
                    t.missing[i * p.inputs + c] = 1;
                else
                    t.values(i, c) = rows[i][c].get<double>();
            }
        }
        p.impute_k = imp.at("k").get<std::size_t>();
        p.prep.imputer = KnnImputer::fit(t, *p.impute_k);
    }
    if (p.mode == "onevsrest")
        p.ovr = onevsrest_from_json(j.at("model"));
    else
        p.single = trained_model_from_json(j.at("model"));
    return p;
}

// Same routing as the cross-validation harness.
Pipeline fit_pipeline(const Dataset& d, ModelKind kind, const HyperPoint& hp, std::uint64_t seed,
                      const std::optional<std::string>& positive, std::size_t impute_k) {
    Pipeline p;
    p.inputs = d.cols();
    p.prep = fit_fold_preprocessing(d, impute_k, d.has_missing());
    if (p.prep.imputer) {
        p.impute_k = impute_k;
        p.donors = apply_scaling(d, p.prep.scaling);
    }
    const Dataset x = p.prep.apply(d);

    std::optional<Dataset> binary;
    if (is_multiclass_kind(kind)) {
        p.mode = "multiclass";
    } else if (positive) {
        binary = make_imbalanced(x, d.class_for_name(*positive));
    } else if (is_binary_pm1(x)) {
        binary = x;
    } else if (x.class_ids.size() == 2) {
        binary = make_imbalanced(x, minority_class(x));
    } else {
        p.mode = "onevsrest";
    }

    if (binary) {
        p.mode = "binary";
        p.names = binary->label_names;
        p.single = fit_model(kind, *binary, hp, seed);
    } else if (p.mode == "multiclass") {
        p.names = x.label_names;
        p.single = fit_model(kind, x, hp, seed);
    } else {
        p.names = x.label_names;
        p.ovr = fit_onevsrest(kind, x, hp, seed);
    }
    return p;
}

// Output id for a true class name, when the model can express it.
std::optional<int> output_id(const Pipeline& p, const std::string& name) {
    for (const auto& [id, n] : p.names)
        if (n == name) return id;
    if (p.mode == "binary" && p.names.contains(-1) && p.names.at(-1) == "rest") return -1;
    return std::nullopt;
}

HyperPoint single_point(ModelKind kind, const HyperGrid& grid) {
    for (const auto& [k, v] : grid)
        if (v.size() != 1) throw usage_error("train takes one value per hyperparameter ('" + k + "'); use cv to search a grid");
    return expand_grid(kind, grid).front();
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct TrainArgs {
    DataFlags data;
    std::string model = "twin_nn";
    std::vector<std::string> grid;
    std::uint64_t seed = 0;
    std::string out;
    std::string positive;
    std::size_t impute_k = default_impute_neighbors;
};

int run_train(const TrainArgs& a) {
    const Dataset d = a.data.load();
    const ModelKind kind = parse_model_kind(a.model);
    const HyperPoint hp = single_point(kind, parse_grid(a.grid));
    const auto positive = a.positive.empty() ? std::nullopt : std::optional<std::string>(a.positive);
    const Pipeline p = fit_pipeline(d, kind, hp, a.seed, positive, a.impute_k);
    write_text(a.out, pipeline_to_json(p).dump(2) + "\n");

    const auto pred = p.predict(p.prep.apply(d).features);
    std::size_t ok = 0, known = 0;
    for (std::size_t i = 0; i < d.rows(); ++i)
        if (const auto id = output_id(p, d.name_of(d.labels[i]))) {
            ++known;
            ok += *id == pred[i];
        }
    std::cout << "trained " << a.model << " (" << p.mode << ") on " << d.rows() << " rows x " << d.cols()
              << " features";
    if (p.mode == "binary") std::cout << ", positive class '" << p.names.at(1) << "'";
    std::cout << "\n";
    if (known) std::cout << "training accuracy " << std::fixed << std::setprecision(4) << double(ok) / double(known) << "\n";
    std::cout << "model written to " << a.out << "\n";
    return 0;
}

struct PredictArgs {
    DataFlags data;
    std::string model_file;
    std::string out;
};

int run_predict(const PredictArgs& a) {
    std::ifstream in(a.model_file);
    if (!in) throw data_error("cannot open model file '" + a.model_file + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw data_error("model file '" + a.model_file + "' is not valid JSON: " + e.what());
    }
    const Pipeline p = pipeline_from_json(j);
    const Dataset d = a.data.load();
    if (d.cols() != p.inputs)
        throw dimension_error("model expects " + std::to_string(p.inputs) + " features, data has " +
                              std::to_string(d.cols()));
    const auto pred = p.predict(p.prep.apply(d).features);

    std::ostringstream os;
    os << "prediction\n";
    std::size_t ok = 0, known = 0;
    for (std::size_t i = 0; i < d.rows(); ++i) {
        os << p.names.at(pred[i]) << "\n";
        if (const auto id = output_id(p, d.name_of(d.labels[i]))) {
            ++known;
            ok += *id == pred[i];
        }
    }
    if (a.out.empty()) {
        std::cout << os.str();
    } else {
        write_text(a.out, os.str());
        std::cout << "wrote " << d.rows() << " predictions to " << a.out << "\n";
    }
    if (known == d.rows())
        std::cerr << "accuracy " << std::fixed << std::setprecision(4) << double(ok) / double(known) << "\n";
    return 0;
}

struct CvArgs {
    DataFlags data;
    std::string model = "twin_nn";
    std::vector<std::string> grid;
    std::size_t folds = 5;
    std::size_t repeats = 1;
    std::uint64_t seed = 0;
    std::string out;
    std::string positive;
    std::size_t impute_k = default_impute_neighbors;
    double inner_holdout = 0.2;
    std::string select = "auto";
    bool timing = false;
};

ExperimentSpec make_spec(const CvArgs& a, ModelKind kind, HyperGrid grid) {
    ExperimentSpec s;
    s.data_path = a.data.path;
    s.format = a.data.format;
    s.csv = a.data.csv();
    s.model = kind;
    s.grid = std::move(grid);
    s.folds = a.folds;
    s.repeats = a.repeats;
    s.seed = a.seed;
    s.out = a.out;
    if (!a.positive.empty()) s.positive_class = a.positive;
    s.impute_k = a.impute_k;
    s.inner_holdout = a.inner_holdout;
    s.select = a.select;
    s.include_timing = a.timing;
    return s;
}

int run_cv_command(const CvArgs& a) {
    const auto spec = make_spec(a, parse_model_kind(a.model), parse_grid(a.grid));
    spec.validate();
    const auto r = run_experiment(spec);
    std::cout << format_table(r);
    if (!a.out.empty()) write_text(a.out, to_json(r).dump(2) + "\n");
    if (r.failures == r.runs.size()) {
        std::cerr << "twinnn: numerical failure: every run failed, first error: " << *r.runs.front().error << "\n";
        return 4;
    }
    return 0;
}

struct BenchArgs {
    CvArgs cv;
    std::vector<std::string> models{"twin_nn", "rfnn", "twsvm_linear"};
};

// Grid keys may be prefixed "model.key"; bare keys go to every model that
// accepts them.
int run_bench(const BenchArgs& a) {
    const HyperGrid all = parse_grid(a.cv.grid);
    std::vector<ModelKind> kinds;
    for (const auto& m : a.models) kinds.push_back(parse_model_kind(m));
    std::set<std::string> used;
    std::vector<ExperimentSpec> specs;
    for (auto kind : kinds) {
        const HyperPoint accepted = default_hyper(kind);
        HyperGrid g;
        for (const auto& [key, values] : all) {
            const auto dot = key.find('.');
            if (dot != std::string::npos) {
                const ModelKind target = parse_model_kind(key.substr(0, dot));
                if (target == kind) {
                    g[key.substr(dot + 1)] = values;
                    used.insert(key);
                }
            } else if (accepted.contains(key)) {
                g[key] = values;
                used.insert(key);
            }
        }
        specs.push_back(make_spec(a.cv, kind, g));
        specs.back().validate();
    }
    for (const auto& [key, values] : all)
        if (!used.contains(key)) throw usage_error("--grid key '" + key + "' applies to none of the benchmarked models");

    const Dataset d = load_dataset(specs.front());
    std::vector<RunResult> results;
    json out = {{"schema", bench_schema}, {"data", a.cv.data.path}, {"results", json::array()}};
    for (const auto& s : specs) {
        results.push_back(run_experiment(d, s));
        out["results"].push_back(to_json(results.back()));
    }
    std::cout << a.cv.folds << "-fold CV x " << a.cv.repeats << " repeats, seed " << a.cv.seed
              << "; mean ± sample std over all runs\n";
    std::cout << format_bench_table(results);
    for (const auto& r : results)
        if (r.failures) std::cout << r.model << ": " << r.failures << " failed runs\n";
    if (!a.cv.out.empty()) write_text(a.cv.out, out.dump(2) + "\n");
    return 0;
}

struct ImputeArgs {
    DataFlags data;
    std::size_t k = default_impute_neighbors;
    std::string out;
};

int run_impute(const ImputeArgs& a) {
    const Dataset d = a.data.load();
    const std::size_t cells = d.count_missing();
    save_csv(a.out, knn_impute(d, a.k));
    std::cout << "imputed " << cells << " missing cells (k = " << a.k << "); wrote " << a.out << "\n";
    return 0;
}

struct GenArgs {
    DataFlags data;
    std::string positive;
    std::size_t minority = 50;
    std::size_t majority = 1000;
    double separation = 4.0;
    std::size_t dims = 2;
    std::uint64_t seed = 0;
    std::string out;
};

// With --data: one class against the rest. Without: seeded Gaussian blobs.
int run_gen(const GenArgs& a) {
    Dataset out;
    if (!a.data.path.empty()) {
        if (a.positive.empty()) throw usage_error("gen-imbalance with --data needs --positive-class");
        const Dataset d = a.data.load();
        out = make_imbalanced(d, d.class_for_name(a.positive));
    } else {
        out = make_imbalanced_blobs(a.minority, a.majority, a.separation, a.dims, a.seed);
    }
    save_csv(a.out, out);
    std::cout << "wrote " << out.rows() << " rows (" << out.class_count(1) << " positive '" << out.name_of(1) << "', "
              << out.class_count(-1) << " negative '" << out.name_of(-1) << "') to " << a.out << "\n";
    return 0;
}

struct CompareArgs {
    std::string path;
    std::string reference;
    std::string out;
};

// Scores CSV: header "dataset,alg1,alg2,...", one row per dataset.
int run_compare(const CompareArgs& a) {
    std::ifstream in(a.path);
    if (!in) throw data_error("cannot open '" + a.path + "'");
    std::string line;
    std::vector<std::string> cells, algorithms;
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        if (!detail::split_csv_record(line, cells)) throw data_error(a.path + ":" + std::to_string(line_no) + ": unbalanced quotes");
        if (algorithms.empty()) {
            if (cells.size() < 3) throw data_error("scores file needs a dataset column and at least 2 algorithms");
            algorithms.assign(cells.begin() + 1, cells.end());
            continue;
        }
        if (cells.size() != algorithms.size() + 1)
            throw data_error(a.path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(algorithms.size() + 1) + " fields");
        std::vector<double> r;
        for (std::size_t c = 1; c < cells.size(); ++c) {
            const auto v = detail::parse_double(cells[c]);
            if (!v) throw data_error(a.path + ":" + std::to_string(line_no) + ": '" + cells[c] + "' is not a number");
            r.push_back(*v);
        }
        rows.push_back(std::move(r));
    }
    if (algorithms.empty()) throw data_error("scores file is empty");
    Matrix scores(rows.size(), algorithms.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < algorithms.size(); ++j) scores(i, j) = rows[i][j];
    const auto rep = compare_algorithms(algorithms, scores, a.reference.empty() ? algorithms.front() : a.reference);
    std::cout << format_comparison(rep);
    if (!a.out.empty()) write_text(a.out, to_json(rep).dump(2) + "\n");
    return 0;
}

void add_cv_flags(CLI::App* cmd, CvArgs& a, bool with_model) {
    add_data_flags(cmd, a.data);
    if (with_model) cmd->add_option("--model", a.model, "twin_nn, twin_nn_mc, twsvm_linear, twsvm_rbf or rfnn");
    cmd->add_option("--grid", a.grid, "hyperparameter values, key=v1,v2,... (repeatable)");
    cmd->add_option("--folds", a.folds, "folds per repeat")->check(CLI::PositiveNumber);
    cmd->add_option("--repeats", a.repeats, "repeats of the fold plan")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", a.seed, "master seed");
    cmd->add_option("--out", a.out, "result JSON path");
    cmd->add_option("--positive-class", a.positive, "class name to treat as +1 (others become -1)");
    cmd->add_option("--impute-k", a.impute_k, "neighbours for KNN imputation")->check(CLI::PositiveNumber);
    cmd->add_option("--inner-holdout", a.inner_holdout, "fraction of each training fold used to pick the grid point")
        ->check(CLI::Range(0.05, 0.5));
    cmd->add_option("--select", a.select, "grid selection metric: auto (G-means for binary runs), gmeans or acc")
        ->check(CLI::IsMember({"auto", "gmeans", "acc"}));
    cmd->add_flag("--timing", a.timing, "include per-fold wall-clock seconds in the JSON");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Twin neural network classifiers, Twin SVM reference and benchmark harness"};
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "fit one model on a whole dataset and save it");
    add_data_flags(train_cmd, train_args.data);
    train_cmd->add_option("--model", train_args.model, "twin_nn, twin_nn_mc, twsvm_linear, twsvm_rbf or rfnn");
    train_cmd->add_option("--grid", train_args.grid, "hyperparameters, key=value (repeatable)");
    train_cmd->add_option("--seed", train_args.seed, "seed");
    train_cmd->add_option("--out", train_args.out, "model JSON path")->required();
    train_cmd->add_option("--positive-class", train_args.positive, "class name to treat as +1");
    train_cmd->add_option("--impute-k", train_args.impute_k, "neighbours for KNN imputation")->check(CLI::PositiveNumber);

    PredictArgs predict_args;
    auto* predict_cmd = app.add_subcommand("predict", "label rows with a saved model");
    add_data_flags(predict_cmd, predict_args.data);
    predict_cmd->add_option("--model-file", predict_args.model_file, "model JSON written by train")->required();
    predict_cmd->add_option("--out", predict_args.out, "predictions CSV path (default stdout)");

    CvArgs cv_args;
    auto* cv_cmd = app.add_subcommand("cv", "repeated stratified cross validation with grid search");
    add_cv_flags(cv_cmd, cv_args, true);

    BenchArgs bench_args;
    auto* bench_cmd = app.add_subcommand("bench", "cross-validate several models on the same folds");
    add_cv_flags(bench_cmd, bench_args.cv, false);
    bench_cmd->add_option("--models", bench_args.models, "models to compare")->delimiter(',');

    ImputeArgs impute_args;
    auto* impute_cmd = app.add_subcommand("impute", "fill missing cells by KNN imputation");
    add_data_flags(impute_cmd, impute_args.data);
    impute_cmd->add_option("--k", impute_args.k, "neighbours")->check(CLI::PositiveNumber);
    impute_cmd->add_option("--out", impute_args.out, "output CSV")->required();

    GenArgs gen_args;
    auto* gen_cmd = app.add_subcommand("gen-imbalance", "one-vs-rest relabelling, or synthetic imbalanced blobs");
    add_data_flags(gen_cmd, gen_args.data, false);
    gen_cmd->add_option("--positive-class", gen_args.positive, "class kept as +1 (with --data)");
    gen_cmd->add_option("--minority", gen_args.minority, "synthetic +1 rows")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--majority", gen_args.majority, "synthetic -1 rows")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--separation", gen_args.separation, "distance between blob centres");
    gen_cmd->add_option("--dims", gen_args.dims, "feature count")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--seed", gen_args.seed, "seed");
    gen_cmd->add_option("--out", gen_args.out, "output CSV")->required();

    CompareArgs cmp_args;
    auto* cmp_cmd = app.add_subcommand("compare", "Wilcoxon and Friedman tests over per-dataset scores");
    cmp_cmd->add_option("--data", cmp_args.path, "scores CSV: dataset,alg1,alg2,...")->required();
    cmp_cmd->add_option("--reference", cmp_args.reference, "reference algorithm (default: first column)");
    cmp_cmd->add_option("--out", cmp_args.out, "report JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*train_cmd) return run_train(train_args);
        if (*predict_cmd) return run_predict(predict_args);
        if (*cv_cmd) return run_cv_command(cv_args);
        if (*bench_cmd) return run_bench(bench_args);
        if (*impute_cmd) return run_impute(impute_args);
        if (*gen_cmd) return run_gen(gen_args);
        if (*cmp_cmd) return run_compare(cmp_args);
    } catch (const usage_error& e) {
        std::cerr << "twinnn: usage error: " << e.what() << "\n";
        return 2;
    } catch (const data_error& e) {
        std::cerr << "twinnn: data error: " << e.what() << "\n";
        return 3;
    } catch (const numerical_error& e) {
        std::cerr << "twinnn: numerical failure: " << e.what() << "\n";
        return 4;
    }
    return 2;
}
