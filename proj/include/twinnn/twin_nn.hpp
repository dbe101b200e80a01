#ifndef TWINNN_TWIN_NN_HPP
#define TWINNN_TWIN_NN_HPP

/*
 Binary Twin Neural Network.

 Two disjoint one-hidden-layer tanh networks. Each learns its own feature
 map phi(x) = tanh(W x + c) and one hyperplane (w, b) in that space; the
 output neuron is y = tanh(z) with z = w.phi(x) + b.

 Class +1 rows are A (N_A of them), class -1 rows are B (N_B).

   E+ = 1/(2 N_B) sum_B (t - y)^2 + C+/(2 N_A) sum_A z^2        t = -1
   E- = 1/(2 N_A) sum_A (t - y)^2 + C-/(2 N_B) sum_B z^2        t = +1

 The first sum is the margin term (other class pushed to the target), the
 second the proximal term (own class pulled onto the plane, on the raw
 pre-activation). Gradients cover every parameter of a side, hidden layer
 included, and are derived from the losses above by the chain rule.

 Prediction compares the normalized distances d = |z| / ||w|| of the two
 sides and picks the closer plane, ties going to +1. The signed comparison
 (no absolute value) is available as DistanceRule::signed_value.

 Each side is trained with full-batch gradient descent at a fixed rate and
 stops after `epochs` updates or when the largest parameter change drops
 below `tol`.

 The RFNN baseline reuses the same network shape with a plain squared loss
 to +-1 targets plus an L2 weight penalty.
*/

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "twinnn/data.hpp"
#include "twinnn/numcore.hpp"

namespace twinnn {

struct HiddenLayer {
    Matrix weights;  // width x inputs
    Vector biases;   // width

    std::size_t width() const noexcept { return weights.rows(); }
    std::size_t inputs() const noexcept { return weights.cols(); }

    void forward(std::span<const double> x, std::span<double> phi) const {
        for (std::size_t k = 0; k < width(); ++k) {
            auto wk = weights.row(k);
            double s = biases[k];
            for (std::size_t j = 0; j < wk.size(); ++j) s += wk[j] * x[j];
            phi[k] = std::tanh(s);
        }
    }

    Vector forward(std::span<const double> x) const {
        if (x.size() != inputs())
            throw dimension_error("hidden layer expects " + std::to_string(inputs()) + " features, got " +
                                  std::to_string(x.size()));
        Vector phi(width());
        forward(x, phi);
        return phi;
    }

    // Uniform in [-1/sqrt(inputs), 1/sqrt(inputs)] for weights and biases.
    static HiddenLayer init(std::size_t inputs, std::size_t width, Rng& rng) {
        HiddenLayer l{Matrix(width, inputs), Vector(width)};
        const double r = 1.0 / std::sqrt(static_cast<double>(inputs));
        for (double& v : l.weights.data()) v = rng.uniform(-r, r);
        for (double& v : l.biases) v = rng.uniform(-r, r);
        return l;
    }
};

struct HeadParams {
    Vector w;
    double b = 0.0;

    double norm() const { return norm2(w); }
    double preactivation(std::span<const double> phi) const { return dot(w, phi) + b; }
};

// One side of the twin: feature map plus hyperplane.
struct SideNet {
    HiddenLayer hidden;
    HeadParams head;

    std::size_t inputs() const noexcept { return hidden.inputs(); }
    std::size_t width() const noexcept { return hidden.width(); }

    double preactivation(std::span<const double> x) const { return head.preactivation(hidden.forward(x)); }

    // |z| / ||w||
    double distance(std::span<const double> x) const {
        const double n = head.norm();
        if (!(n > 0.0)) throw numerical_error("twin_nn: hyperplane has zero-norm weight vector");
        return std::abs(preactivation(x)) / n;
    }

    // Flat parameter order: hidden weights (row-major), hidden biases, w, b.
    std::size_t parameter_count() const noexcept { return width() * inputs() + 2 * width() + 1; }

    Vector parameters() const {
        Vector p;
        p.reserve(parameter_count());
        p.insert(p.end(), hidden.weights.data().begin(), hidden.weights.data().end());
        p.insert(p.end(), hidden.biases.begin(), hidden.biases.end());
        p.insert(p.end(), head.w.begin(), head.w.end());
        p.push_back(head.b);
        return p;
    }

    void set_parameters(std::span<const double> p) {
        if (p.size() != parameter_count()) throw dimension_error("SideNet::set_parameters: wrong length");
        auto it = p.begin();
        for (double& v : hidden.weights.data()) v = *it++;
        for (double& v : hidden.biases) v = *it++;
        for (double& v : head.w) v = *it++;
        head.b = *it;
    }

    // Head weights are drawn in [-1/sqrt(width), 1/sqrt(width)] and
    // multiplied by head_sign; zero draws are rejected so ||w|| > 0.
    static SideNet init(std::size_t inputs, std::size_t width, double head_sign, Rng& rng) {
        if (inputs == 0 || width == 0) throw usage_error("twin_nn: inputs and hidden width must be positive");
        SideNet n;
        n.hidden = HiddenLayer::init(inputs, width, rng);
        const double r = 1.0 / std::sqrt(static_cast<double>(width));
        n.head.w.resize(width);
        for (double& v : n.head.w) {
            do {
                v = rng.uniform(-r, r);
            } while (v == 0.0);
            v *= head_sign;
        }
        n.head.b = head_sign * rng.uniform(-r, r);
        return n;
    }
};

// Gradient of a side's loss, same shapes as SideNet.
struct SideGradient {
    Matrix hidden_w;
    Vector hidden_b;
    Vector w;
    double b = 0.0;

    explicit SideGradient(const SideNet& n)
        : hidden_w(n.width(), n.inputs()), hidden_b(n.width(), 0.0), w(n.width(), 0.0) {}

    Vector flat() const {
        Vector p;
        p.insert(p.end(), hidden_w.data().begin(), hidden_w.data().end());
        p.insert(p.end(), hidden_b.begin(), hidden_b.end());
        p.insert(p.end(), w.begin(), w.end());
        p.push_back(b);
        return p;
    }

    SideGradient& scale(double s) {
        for (double& v : hidden_w.data()) v *= s;
        for (double& v : hidden_b) v *= s;
        for (double& v : w) v *= s;
        b *= s;
        return *this;
    }

    SideGradient& operator+=(const SideGradient& o) {
        for (std::size_t i = 0; i < hidden_w.data().size(); ++i) hidden_w.data()[i] += o.hidden_w.data()[i];
        for (std::size_t i = 0; i < hidden_b.size(); ++i) hidden_b[i] += o.hidden_b[i];
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += o.w[i];
        b += o.b;
        return *this;
    }
};

// The loss of one side: margin term over `other` rows driven to `target`,
// proximal term over `own` rows weighted by c.
struct SideObjective {
    const Matrix& own;
    const Matrix& other;
    double target;
    double c;
};

struct SideLoss {
    double margin = 0.0;
    double proximal = 0.0;  // already multiplied by c
    double total() const noexcept { return margin + proximal; }
};

// Gradient split into its two terms; `proximal` includes the factor c.
struct SideGradients {
    SideLoss loss;
    SideGradient margin;
    SideGradient proximal;

    SideGradient total() const {
        SideGradient g = margin;
        g += proximal;
        return g;
    }
};

namespace detail {

inline void check_objective(const SideNet& net, const SideObjective& obj) {
    if (obj.own.rows() == 0 || obj.other.rows() == 0) throw data_error("twin_nn: both classes need at least one sample");
    if (obj.own.cols() != net.inputs() || obj.other.cols() != net.inputs())
        throw dimension_error("twin_nn: sample dimension does not match network input width");
    if (!(obj.c >= 0.0)) throw usage_error("twin_nn: C must be non-negative");
}

// Accumulates dE/dparams for one sample given dE/dz.
inline void backprop_sample(const SideNet& net, std::span<const double> x, std::span<const double> phi, double dz,
                            SideGradient& g) {
    g.b += dz;
    for (std::size_t k = 0; k < net.width(); ++k) {
        g.w[k] += dz * phi[k];
        const double dpre = dz * net.head.w[k] * (1.0 - phi[k] * phi[k]);
        g.hidden_b[k] += dpre;
        auto gk = g.hidden_w.row(k);
        for (std::size_t j = 0; j < x.size(); ++j) gk[j] += dpre * x[j];
    }
}

}  // namespace detail

inline SideLoss side_loss(const SideNet& net, const SideObjective& obj) {
    detail::check_objective(net, obj);
    Vector phi(net.width());
    SideLoss l;
    double margin = 0.0;
    for (std::size_t i = 0; i < obj.other.rows(); ++i) {
        net.hidden.forward(obj.other.row(i), phi);
        const double y = std::tanh(net.head.preactivation(phi));
        margin += (obj.target - y) * (obj.target - y);
    }
    double prox = 0.0;
    for (std::size_t i = 0; i < obj.own.rows(); ++i) {
        net.hidden.forward(obj.own.row(i), phi);
        const double z = net.head.preactivation(phi);
        prox += z * z;
    }
    l.margin = margin / (2.0 * static_cast<double>(obj.other.rows()));
    l.proximal = obj.c * (prox / (2.0 * static_cast<double>(obj.own.rows())));
    return l;
}

inline SideGradients side_gradients(const SideNet& net, const SideObjective& obj) {
    detail::check_objective(net, obj);
    SideGradients out{{}, SideGradient(net), SideGradient(net)};
    Vector phi(net.width());
    const double n_other = static_cast<double>(obj.other.rows());
    const double n_own = static_cast<double>(obj.own.rows());

    double margin = 0.0;
    for (std::size_t i = 0; i < obj.other.rows(); ++i) {
        auto x = obj.other.row(i);
        net.hidden.forward(x, phi);
        const double y = std::tanh(net.head.preactivation(phi));
        margin += (obj.target - y) * (obj.target - y);
        const double dz = (y - obj.target) * (1.0 - y * y) / n_other;
        detail::backprop_sample(net, x, phi, dz, out.margin);
    }
    double prox = 0.0;
    for (std::size_t i = 0; i < obj.own.rows(); ++i) {
        auto x = obj.own.row(i);
        net.hidden.forward(x, phi);
        const double z = net.head.preactivation(phi);
        prox += z * z;
        detail::backprop_sample(net, x, phi, z / n_own, out.proximal);
    }
    out.proximal.scale(obj.c);
    out.loss.margin = margin / (2.0 * n_other);
    out.loss.proximal = obj.c * (prox / (2.0 * n_own));
    return out;
}

// E+ : plus network, own rows A, other rows B with target -1.
inline SideLoss loss_plus(const SideNet& net, const Matrix& a_rows, const Matrix& b_rows, double c_plus) {
    return side_loss(net, {a_rows, b_rows, -1.0, c_plus});
}

// E- : minus network, own rows B, other rows A with target +1.
inline SideLoss loss_minus(const SideNet& net, const Matrix& a_rows, const Matrix& b_rows, double c_minus) {
    return side_loss(net, {b_rows, a_rows, +1.0, c_minus});
}

inline SideGradients gradients_plus(const SideNet& net, const Matrix& a_rows, const Matrix& b_rows, double c_plus) {
    return side_gradients(net, {a_rows, b_rows, -1.0, c_plus});
}

inline SideGradients gradients_minus(const SideNet& net, const Matrix& a_rows, const Matrix& b_rows, double c_minus) {
    return side_gradients(net, {b_rows, a_rows, +1.0, c_minus});
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TwinHyper {
    double c_plus = 1.0;
    double c_minus = 1.0;
    std::size_t hidden = 8;
    double lr = 0.05;
    std::size_t epochs = 2000;
    double tol = 1e-6;
    std::uint64_t seed = 0;

    void validate() const {
        if (hidden < 1) throw usage_error("twin_nn: hidden width must be at least 1");
        if (!(lr > 0.0) || !std::isfinite(lr)) throw usage_error("twin_nn: learning rate must be positive");
        if (!(c_plus >= 0.0) || !(c_minus >= 0.0)) throw usage_error("twin_nn: C+ and C- must be non-negative");
        if (!(tol >= 0.0)) throw usage_error("twin_nn: tol must be non-negative");
    }

    std::uint64_t plus_seed() const noexcept { return derive_seed(seed, 1); }
    std::uint64_t minus_seed() const noexcept { return derive_seed(seed, 2); }
};

struct SideTrainResult {
    SideNet net;
    SideLoss final_loss;
    std::size_t epochs_run = 0;
    bool converged = false;  // stopped on tol rather than the epoch budget
};

struct SideTrainOptions {
    double c = 1.0;
    std::size_t hidden = 8;
    double lr = 0.05;
    std::size_t epochs = 2000;
    double tol = 1e-6;
    std::uint64_t seed = 0;
    std::string name = "side";
    std::vector<double>* loss_history = nullptr;  // loss before each update, then the final loss
};

// Full-batch gradient descent on one side. The head is initialized with the
// sign of -target, so training the same rows towards the opposite target
// with the same seed mirrors the head exactly.
inline SideTrainResult train_side(const Matrix& own, const Matrix& other, double target, const SideTrainOptions& opt) {
    if (own.rows() == 0 || other.rows() == 0) throw data_error("twin_nn: both classes need at least one sample");
    Rng rng(opt.seed);
    SideTrainResult res;
    res.net = SideNet::init(own.cols(), opt.hidden, target > 0 ? -1.0 : 1.0, rng);
    const SideObjective obj{own, other, target, opt.c};
    Vector params = res.net.parameters();
    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        const SideGradients g = side_gradients(res.net, obj);
        if (!std::isfinite(g.loss.total()))
            throw numerical_error("twin_nn: " + opt.name + " network diverged at epoch " + std::to_string(epoch));
        if (opt.loss_history) opt.loss_history->push_back(g.loss.total());
        const Vector grad = g.total().flat();
        double max_step = 0.0;
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double step = opt.lr * grad[i];
            params[i] -= step;
            max_step = std::max(max_step, std::abs(step));
        }
        res.net.set_parameters(params);
        res.epochs_run = epoch + 1;
        if (!std::isfinite(max_step))
            throw numerical_error("twin_nn: " + opt.name + " network diverged at epoch " + std::to_string(epoch));
        if (max_step < opt.tol) {
            res.converged = true;
            break;
        }
    }
    res.final_loss = side_loss(res.net, obj);
    if (!std::isfinite(res.final_loss.total()))
        throw numerical_error("twin_nn: " + opt.name + " network diverged at epoch " + std::to_string(res.epochs_run));
    if (opt.loss_history) opt.loss_history->push_back(res.final_loss.total());
    return res;
}

enum class DistanceRule { absolute, signed_value };

struct TwinNNModel {
    SideNet plus;
    SideNet minus;
    TwinHyper hyper;
    SideLoss final_loss_plus;
    SideLoss final_loss_minus;
    std::size_t epochs_plus = 0;
    std::size_t epochs_minus = 0;

    std::size_t inputs() const noexcept { return plus.inputs(); }
};

// Rows of the two classes of a +-1 dataset.
inline std::pair<Matrix, Matrix> split_classes(const Dataset& d) {
    std::vector<std::size_t> a, b;
    for (std::size_t i = 0; i < d.rows(); ++i) {
        if (d.labels[i] == 1)
            a.push_back(i);
        else if (d.labels[i] == -1)
            b.push_back(i);
        else
            throw data_error("binary model needs labels +1/-1, found " + std::to_string(d.labels[i]));
    }
    if (a.empty() || b.empty()) throw data_error("binary model needs samples of both classes");
    return {d.features.select_rows(a), d.features.select_rows(b)};
}

namespace detail {

inline void require_trainable(const Dataset& d) {
    if (d.has_missing()) throw data_error("training data has missing values; impute first");
    if (!d.features.all_finite()) throw data_error("training data has non-finite features");
}

}  // namespace detail

inline TwinNNModel train(const Dataset& data, const TwinHyper& hyper) {
    hyper.validate();
    detail::require_trainable(data);
    const auto [a, b] = split_classes(data);
    SideTrainOptions po{hyper.c_plus, hyper.hidden, hyper.lr, hyper.epochs, hyper.tol, hyper.plus_seed(), "plus"};
    SideTrainOptions mo{hyper.c_minus, hyper.hidden, hyper.lr, hyper.epochs, hyper.tol, hyper.minus_seed(), "minus"};
    auto plus = train_side(a, b, -1.0, po);
    auto minus = train_side(b, a, +1.0, mo);
    TwinNNModel m;
    m.plus = std::move(plus.net);
    m.minus = std::move(minus.net);
    m.hyper = hyper;
    m.final_loss_plus = plus.final_loss;
    m.final_loss_minus = minus.final_loss;
    m.epochs_plus = plus.epochs_run;
    m.epochs_minus = minus.epochs_run;
    return m;
}

struct DecisionValues {
    double d_plus;
    double d_minus;
};

inline DecisionValues decision_values(const TwinNNModel& m, std::span<const double> x,
                                      DistanceRule rule = DistanceRule::absolute) {
    const double np = m.plus.head.norm();
    const double nm = m.minus.head.norm();
    if (!(np > 0.0) || !(nm > 0.0)) throw numerical_error("twin_nn: hyperplane has zero-norm weight vector");
    double zp = m.plus.preactivation(x);
    double zm = m.minus.preactivation(x);
    if (rule == DistanceRule::absolute) {
        zp = std::abs(zp);
        zm = std::abs(zm);
    }
    return {zp / np, zm / nm};
}

inline int predict(const TwinNNModel& m, std::span<const double> x, DistanceRule rule = DistanceRule::absolute) {
    const auto d = decision_values(m, x, rule);
    return d.d_plus <= d.d_minus ? 1 : -1;
}

inline std::vector<int> predict(const TwinNNModel& m, const Matrix& x, DistanceRule rule = DistanceRule::absolute) {
    if (x.cols() != m.inputs())
        throw dimension_error("twin_nn: model expects " + std::to_string(m.inputs()) + " features, got " +
                              std::to_string(x.cols()));
    std::vector<int> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict(m, x.row(i), rule);
    return out;
}

// ---------------------------------------------------------------------------
// RFNN baseline
// ---------------------------------------------------------------------------

struct RfnnHyper {
    std::size_t hidden = 8;
    double lr = 0.05;
    std::size_t epochs = 2000;
    double l2 = 1e-4;
    double tol = 1e-6;
    std::uint64_t seed = 0;

    void validate() const {
        if (hidden < 1) throw usage_error("rfnn: hidden width must be at least 1");
        if (!(lr > 0.0) || !std::isfinite(lr)) throw usage_error("rfnn: learning rate must be positive");
        if (!(l2 >= 0.0)) throw usage_error("rfnn: l2 must be non-negative");
        if (!(tol >= 0.0)) throw usage_error("rfnn: tol must be non-negative");
    }
};

struct RfnnModel {
    SideNet net;
    RfnnHyper hyper;
    double final_loss = 0.0;
    std::size_t epochs_run = 0;

    double output(std::span<const double> x) const { return std::tanh(net.preactivation(x)); }
};

// 1/(2N) sum (t - y)^2 + l2 * (||W||^2 + ||w||^2); biases are not penalized.
inline double rfnn_loss(const SideNet& net, const Matrix& x, std::span<const int> targets, double l2) {
    if (x.rows() != targets.size() || x.rows() == 0) throw dimension_error("rfnn: sample/target count mismatch");
    Vector phi(net.width());
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        net.hidden.forward(x.row(i), phi);
        const double y = std::tanh(net.head.preactivation(phi));
        const double t = static_cast<double>(targets[i]);
        s += (t - y) * (t - y);
    }
    double sq = 0.0;
    for (double v : net.hidden.weights.data()) sq += v * v;
    for (double v : net.head.w) sq += v * v;
    return s / (2.0 * static_cast<double>(x.rows())) + l2 * sq;
}

inline SideGradient rfnn_gradient(const SideNet& net, const Matrix& x, std::span<const int> targets, double l2) {
    if (x.rows() != targets.size() || x.rows() == 0) throw dimension_error("rfnn: sample/target count mismatch");
    SideGradient g(net);
    Vector phi(net.width());
    const double n = static_cast<double>(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto xi = x.row(i);
        net.hidden.forward(xi, phi);
        const double y = std::tanh(net.head.preactivation(phi));
        const double t = static_cast<double>(targets[i]);
        detail::backprop_sample(net, xi, phi, (y - t) * (1.0 - y * y) / n, g);
    }
    for (std::size_t i = 0; i < g.hidden_w.data().size(); ++i) g.hidden_w.data()[i] += 2.0 * l2 * net.hidden.weights.data()[i];
    for (std::size_t k = 0; k < g.w.size(); ++k) g.w[k] += 2.0 * l2 * net.head.w[k];
    return g;
}

inline RfnnModel train_rfnn_baseline(const Dataset& data, const RfnnHyper& hyper) {
    hyper.validate();
    detail::require_trainable(data);
    split_classes(data);  // label and class-presence checks
    Rng rng(hyper.seed);
    RfnnModel m;
    m.hyper = hyper;
    m.net = SideNet::init(data.cols(), hyper.hidden, 1.0, rng);
    Vector params = m.net.parameters();
    for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        const Vector grad = rfnn_gradient(m.net, data.features, data.labels, hyper.l2).flat();
        double max_step = 0.0;
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double step = hyper.lr * grad[i];
            params[i] -= step;
            max_step = std::max(max_step, std::abs(step));
        }
        if (!std::isfinite(max_step))
            throw numerical_error("rfnn: network diverged at epoch " + std::to_string(epoch));
        m.net.set_parameters(params);
        m.epochs_run = epoch + 1;
        if (max_step < hyper.tol) break;
    }
    m.final_loss = rfnn_loss(m.net, data.features, data.labels, hyper.l2);
    if (!std::isfinite(m.final_loss))
        throw numerical_error("rfnn: network diverged at epoch " + std::to_string(m.epochs_run));
    return m;
}

// Sign of the output; 0 maps to +1.
inline int rfnn_predict(const RfnnModel& m, std::span<const double> x) {
    if (x.size() != m.net.inputs())
        throw dimension_error("rfnn: model expects " + std::to_string(m.net.inputs()) + " features");
    return m.output(x) >= 0.0 ? 1 : -1;
}

inline std::vector<int> rfnn_predict(const RfnnModel& m, const Matrix& x) {
    std::vector<int> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = rfnn_predict(m, x.row(i));
    return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline constexpr int twin_model_version = 1;

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
    auto j = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) j.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    return j;
}

inline Matrix matrix_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols) {
    if (!j.is_array() || j.size() != rows) throw data_error("model json: matrix has wrong row count");
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto r = j[i].get<std::vector<double>>();
        if (r.size() != cols) throw data_error("model json: matrix has wrong column count");
        std::copy(r.begin(), r.end(), m.row(i).begin());
    }
    return m;
}

inline void check_version(const nlohmann::json& j, int expected, const char* what) {
    const int v = j.at("version").get<int>();
    if (v != expected)
        throw data_error(std::string(what) + " json: unsupported version " + std::to_string(v) + " (expected " +
                         std::to_string(expected) + ")");
}

}  // namespace detail

inline nlohmann::json side_to_json(const SideNet& n) {
    return {{"hidden_w", detail::matrix_to_json(n.hidden.weights)},
            {"hidden_b", n.hidden.biases},
            {"w", n.head.w},
            {"b", n.head.b}};
}

inline SideNet side_from_json(const nlohmann::json& j, std::size_t inputs, std::size_t width) {
    SideNet n;
    n.hidden.weights = detail::matrix_from_json(j.at("hidden_w"), width, inputs);
    n.hidden.biases = j.at("hidden_b").get<Vector>();
    n.head.w = j.at("w").get<Vector>();
    n.head.b = j.at("b").get<double>();
    if (n.hidden.biases.size() != width || n.head.w.size() != width)
        throw data_error("model json: layer width mismatch");
    return n;
}

inline void to_json(nlohmann::json& j, const TwinHyper& h) {
    j = nlohmann::json{{"c_plus", h.c_plus}, {"c_minus", h.c_minus}, {"hidden", h.hidden}, {"lr", h.lr},
                       {"epochs", h.epochs}, {"tol", h.tol},         {"seed", h.seed}};
}

inline void from_json(const nlohmann::json& j, TwinHyper& h) {
    j.at("c_plus").get_to(h.c_plus);
    j.at("c_minus").get_to(h.c_minus);
    j.at("hidden").get_to(h.hidden);
    j.at("lr").get_to(h.lr);
    j.at("epochs").get_to(h.epochs);
    j.at("tol").get_to(h.tol);
    j.at("seed").get_to(h.seed);
}

inline nlohmann::json to_json(const TwinNNModel& m) {
    return {{"version", twin_model_version},
            {"M", m.inputs()},
            {"h", m.plus.width()},
            {"hyper", m.hyper},
            {"plus", side_to_json(m.plus)},
            {"minus", side_to_json(m.minus)},
            {"final_loss", {{"plus", m.final_loss_plus.total()}, {"minus", m.final_loss_minus.total()}}}};
}

inline TwinNNModel twin_model_from_json(const nlohmann::json& j) {
    detail::check_version(j, twin_model_version, "twin_nn");
    const auto inputs = j.at("M").get<std::size_t>();
    const auto width = j.at("h").get<std::size_t>();
    TwinNNModel m;
    m.hyper = j.at("hyper").get<TwinHyper>();
    m.plus = side_from_json(j.at("plus"), inputs, width);
    m.minus = side_from_json(j.at("minus"), inputs, width);
    return m;
}

inline void to_json(nlohmann::json& j, const RfnnHyper& h) {
    j = nlohmann::json{{"hidden", h.hidden}, {"lr", h.lr},   {"epochs", h.epochs},
                       {"l2", h.l2},         {"tol", h.tol}, {"seed", h.seed}};
}

inline void from_json(const nlohmann::json& j, RfnnHyper& h) {
    j.at("hidden").get_to(h.hidden);
    j.at("lr").get_to(h.lr);
    j.at("epochs").get_to(h.epochs);
    j.at("l2").get_to(h.l2);
    j.at("tol").get_to(h.tol);
    j.at("seed").get_to(h.seed);
}

inline nlohmann::json to_json(const RfnnModel& m) {
    return {{"version", twin_model_version},
            {"M", m.net.inputs()},
            {"h", m.net.width()},
            {"hyper", m.hyper},
            {"net", side_to_json(m.net)}};
}

inline RfnnModel rfnn_model_from_json(const nlohmann::json& j) {
    detail::check_version(j, twin_model_version, "rfnn");
    RfnnModel m;
    m.hyper = j.at("hyper").get<RfnnHyper>();
    m.net = side_from_json(j.at("net"), j.at("M").get<std::size_t>(), j.at("h").get<std::size_t>());
    return m;
}

}  // namespace twinnn

#endif  // TWINNN_TWIN_NN_HPP
