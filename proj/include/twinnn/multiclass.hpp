#ifndef TWINNN_MULTICLASS_HPP
#define TWINNN_MULTICLASS_HPP

/*
 Multiclass Twin NN.

 One bank per class: a tanh sub-network producing n features and p
 classifier neurons a_j = tanh(w_j . phi(x) + b_j), each standing for one
 hyperplane through a cluster of that class.

 Training loss for a sample x of class c (batch loss = mean over samples):

   C * (min_j |a_cj|)^2  +  max(0, 1 - min_{k != c, j} |a_kj|)^2

 i.e. squared error to target 0 for the closest own plane and to target 1
 for the closest foreign plane, with no penalty once the foreign planes are
 already beyond the target. The min is differentiated by routing the
 gradient to the arg-min plane only (ties: lowest class id, then lowest
 plane index).

 Prediction: the class whose closest plane, measured as |w.phi + b| / ||w||,
 is nearest; ties go to the lowest class id.

 Bank initialization is seeded from (model seed, class id), so the result
 does not depend on the order in which banks are stored.
*/

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "twinnn/data.hpp"
#include "twinnn/numcore.hpp"
#include "twinnn/twin_nn.hpp"

namespace twinnn {

struct ClassBank {
    int class_id = 0;
    HiddenLayer subnet;
    std::vector<HeadParams> planes;

    std::size_t inputs() const noexcept { return subnet.inputs(); }
    std::size_t features() const noexcept { return subnet.width(); }
    std::size_t plane_count() const noexcept { return planes.size(); }
};

struct MCHyper {
    std::size_t features = 8;  // n, sub-network width
    std::size_t planes = 2;    // p, classifier neurons per class
    double c = 1.0;
    double lr = 0.05;
    std::size_t epochs = 2000;
    double tol = 1e-6;
    std::uint64_t seed = 0;

    void validate() const {
        if (features < 1) throw usage_error("multiclass: need at least one feature per sub-network");
        if (planes < 1) throw usage_error("multiclass: need at least one plane per class");
        if (!(c >= 0.0)) throw usage_error("multiclass: C must be non-negative");
        if (!(lr > 0.0) || !std::isfinite(lr)) throw usage_error("multiclass: learning rate must be positive");
        if (!(tol >= 0.0)) throw usage_error("multiclass: tol must be non-negative");
    }
};

struct MulticlassTwinModel {
    std::vector<ClassBank> banks;
    MCHyper hyper;
    double final_loss = 0.0;
    std::size_t epochs_run = 0;

    std::size_t inputs() const noexcept { return banks.empty() ? 0 : banks.front().inputs(); }

    std::size_t bank_index(int class_id) const {
        for (std::size_t k = 0; k < banks.size(); ++k)
            if (banks[k].class_id == class_id) return k;
        throw data_error("multiclass: unknown class " + std::to_string(class_id));
    }

    std::size_t parameter_count() const noexcept {
        std::size_t n = 0;
        for (const auto& b : banks) n += b.subnet.weights.data().size() + b.subnet.biases.size() + b.planes.size() * (b.features() + 1);
        return n;
    }

    // Per bank: sub-network weights (row-major), biases, then each plane's w and b.
    Vector parameters() const {
        Vector p;
        p.reserve(parameter_count());
        for (const auto& b : banks) {
            p.insert(p.end(), b.subnet.weights.data().begin(), b.subnet.weights.data().end());
            p.insert(p.end(), b.subnet.biases.begin(), b.subnet.biases.end());
            for (const auto& pl : b.planes) {
                p.insert(p.end(), pl.w.begin(), pl.w.end());
                p.push_back(pl.b);
            }
        }
        return p;
    }

    void set_parameters(std::span<const double> p) {
        if (p.size() != parameter_count()) throw dimension_error("multiclass: parameter vector length mismatch");
        auto it = p.begin();
        for (auto& b : banks) {
            for (double& v : b.subnet.weights.data()) v = *it++;
            for (double& v : b.subnet.biases) v = *it++;
            for (auto& pl : b.planes) {
                for (double& v : pl.w) v = *it++;
                pl.b = *it++;
            }
        }
    }
};

// Plane activations of one bank for input x.
struct BankOutput {
    Vector phi;
    Vector z;
    Vector a;
};

inline BankOutput bank_forward(const ClassBank& bank, std::span<const double> x) {
    BankOutput o;
    o.phi = bank.subnet.forward(x);
    o.z.resize(bank.plane_count());
    o.a.resize(bank.plane_count());
    for (std::size_t j = 0; j < bank.plane_count(); ++j) {
        o.z[j] = bank.planes[j].preactivation(o.phi);
        o.a[j] = std::tanh(o.z[j]);
    }
    return o;
}

// min_j |w_j . phi(x) + b_j| / ||w_j||
inline double class_distance(const ClassBank& bank, std::span<const double> x) {
    if (bank.planes.empty()) throw usage_error("multiclass: bank has no planes");
    const Vector phi = bank.subnet.forward(x);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pl : bank.planes) {
        const double n = pl.norm();
        if (!(n > 0.0)) throw numerical_error("multiclass: plane of class " + std::to_string(bank.class_id) +
                                              " has zero-norm weight vector");
        best = std::min(best, std::abs(pl.preactivation(phi)) / n);
    }
    return best;
}

// Per-sample loss from the two minima (absolute activations).
inline double mc_sample_loss(double own_min, double other_min, double c) {
    const double gap = std::max(0.0, 1.0 - other_min);
    return c * own_min * own_min + gap * gap;
}

namespace detail {

struct McArgmins {
    std::size_t own_plane = 0;
    std::size_t other_bank = 0;
    std::size_t other_plane = 0;
    double own_min = 0.0;
    double other_min = 0.0;
};

inline McArgmins mc_argmins(const MulticlassTwinModel& m, const std::vector<BankOutput>& outs, std::size_t own) {
    McArgmins r;
    r.own_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < outs[own].a.size(); ++j)
        if (std::abs(outs[own].a[j]) < r.own_min) {
            r.own_min = std::abs(outs[own].a[j]);
            r.own_plane = j;
        }
    r.other_min = std::numeric_limits<double>::infinity();
    int other_id = std::numeric_limits<int>::max();
    for (std::size_t k = 0; k < outs.size(); ++k) {
        if (k == own) continue;
        for (std::size_t j = 0; j < outs[k].a.size(); ++j) {
            const double v = std::abs(outs[k].a[j]);
            const int id = m.banks[k].class_id;
            if (v < r.other_min || (v == r.other_min && (id < other_id || (id == other_id && j < r.other_plane)))) {
                r.other_min = v;
                r.other_bank = k;
                r.other_plane = j;
                other_id = id;
            }
        }
    }
    return r;
}

inline void check_mc_batch(const MulticlassTwinModel& m, const Matrix& x, std::span<const int> labels) {
    if (m.banks.size() < 2) throw usage_error("multiclass: model needs at least two classes");
    if (x.rows() != labels.size() || x.rows() == 0) throw dimension_error("multiclass: sample/label count mismatch");
    if (x.cols() != m.inputs())
        throw dimension_error("multiclass: model expects " + std::to_string(m.inputs()) + " features, got " +
                              std::to_string(x.cols()));
}

}  // namespace detail

inline double mc_loss(const MulticlassTwinModel& m, std::span<const double> x, int cls) {
    if (m.banks.size() < 2) throw usage_error("multiclass: model needs at least two classes");
    const std::size_t own = m.bank_index(cls);
    std::vector<BankOutput> outs;
    outs.reserve(m.banks.size());
    for (const auto& b : m.banks) outs.push_back(bank_forward(b, x));
    const auto am = detail::mc_argmins(m, outs, own);
    return mc_sample_loss(am.own_min, am.other_min, m.hyper.c);
}

inline double mc_batch_loss(const MulticlassTwinModel& m, const Matrix& x, std::span<const int> labels) {
    detail::check_mc_batch(m, x, labels);
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) s += mc_loss(m, x.row(i), labels[i]);
    return s / static_cast<double>(x.rows());
}

struct McGradient {
    double loss = 0.0;
    Vector flat;  // same layout as MulticlassTwinModel::parameters()
};

// Subgradient of the batch loss, argmin-routed through both minima.
inline McGradient mc_gradient(const MulticlassTwinModel& m, const Matrix& x, std::span<const int> labels) {
    detail::check_mc_batch(m, x, labels);
    const std::size_t nb = m.banks.size();
    std::vector<std::size_t> offset(nb + 1, 0);
    for (std::size_t k = 0; k < nb; ++k) {
        const auto& b = m.banks[k];
        offset[k + 1] = offset[k] + b.subnet.weights.data().size() + b.subnet.biases.size() + b.planes.size() * (b.features() + 1);
    }
    McGradient g;
    g.flat.assign(offset[nb], 0.0);
    const double inv_n = 1.0 / static_cast<double>(x.rows());

    // dE/dz for plane j of bank k, given the bank's forward pass.
    const auto backprop = [&](std::size_t k, std::size_t j, const BankOutput& o, std::span<const double> xi, double dz) {
        const auto& b = m.banks[k];
        const std::size_t nf = b.features();
        const std::size_t m_in = b.inputs();
        double* base = g.flat.data() + offset[k];
        double* gw_hidden = base;
        double* gb_hidden = base + nf * m_in;
        double* gplane = gb_hidden + nf + j * (nf + 1);
        const auto& pl = b.planes[j];
        for (std::size_t f = 0; f < nf; ++f) {
            gplane[f] += dz * o.phi[f];
            const double dpre = dz * pl.w[f] * (1.0 - o.phi[f] * o.phi[f]);
            gb_hidden[f] += dpre;
            for (std::size_t c = 0; c < m_in; ++c) gw_hidden[f * m_in + c] += dpre * xi[c];
        }
        gplane[nf] += dz;
    };

    std::vector<BankOutput> outs(nb);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto xi = x.row(i);
        const std::size_t own = m.bank_index(labels[i]);
        for (std::size_t k = 0; k < nb; ++k) outs[k] = bank_forward(m.banks[k], xi);
        const auto am = detail::mc_argmins(m, outs, own);
        g.loss += mc_sample_loss(am.own_min, am.other_min, m.hyper.c);

        const auto sign = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
        {
            const double a = outs[own].a[am.own_plane];
            const double dm = 2.0 * m.hyper.c * am.own_min * inv_n;
            backprop(own, am.own_plane, outs[own], xi, dm * sign(a) * (1.0 - a * a));
        }
        const double gap = std::max(0.0, 1.0 - am.other_min);
        if (gap > 0.0) {
            const double a = outs[am.other_bank].a[am.other_plane];
            const double dm = -2.0 * gap * inv_n;
            backprop(am.other_bank, am.other_plane, outs[am.other_bank], xi, dm * sign(a) * (1.0 - a * a));
        }
    }
    g.loss *= inv_n;
    return g;
}

// Banks for the given class ids, each initialized from (seed, class id).
inline MulticlassTwinModel mc_init(std::span<const int> class_ids, std::size_t inputs, const MCHyper& hyper) {
    hyper.validate();
    if (inputs == 0) throw usage_error("multiclass: inputs must be positive");
    MulticlassTwinModel m;
    m.hyper = hyper;
    for (int id : class_ids) {
        Rng rng(derive_seed(hyper.seed, static_cast<std::uint64_t>(static_cast<std::int64_t>(id))));
        ClassBank b;
        b.class_id = id;
        b.subnet = HiddenLayer::init(inputs, hyper.features, rng);
        const double r = 1.0 / std::sqrt(static_cast<double>(hyper.features));
        for (std::size_t j = 0; j < hyper.planes; ++j) {
            HeadParams pl;
            pl.w.resize(hyper.features);
            for (double& v : pl.w) {
                do {
                    v = rng.uniform(-r, r);
                } while (v == 0.0);
            }
            pl.b = rng.uniform(-r, r);
            b.planes.push_back(std::move(pl));
        }
        m.banks.push_back(std::move(b));
    }
    return m;
}

// Joint full-batch subgradient descent over all banks. `class_order` sets
// the storage order of the banks (default: ascending class id).
inline MulticlassTwinModel mc_train(const Dataset& data, const MCHyper& hyper,
                                    std::vector<int> class_order = {}, std::vector<double>* loss_history = nullptr) {
    hyper.validate();
    if (data.has_missing()) throw data_error("multiclass: training data has missing values; impute first");
    std::vector<int> present;
    for (int c : data.class_ids)
        if (data.class_count(c) > 0) present.push_back(c);
    if (present.size() < 2) throw data_error("multiclass: need samples of at least two classes");
    if (class_order.empty()) {
        class_order = present;
    } else {
        auto sorted = class_order;
        std::sort(sorted.begin(), sorted.end());
        if (sorted != present) throw usage_error("multiclass: class_order must list every class exactly once");
    }
    MulticlassTwinModel m = mc_init(class_order, data.cols(), hyper);
    Vector params = m.parameters();
    for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        const McGradient g = mc_gradient(m, data.features, data.labels);
        if (!std::isfinite(g.loss))
            throw numerical_error("multiclass: training diverged at epoch " + std::to_string(epoch));
        if (loss_history) loss_history->push_back(g.loss);
        double max_step = 0.0;
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double step = hyper.lr * g.flat[i];
            params[i] -= step;
            max_step = std::max(max_step, std::abs(step));
        }
        m.set_parameters(params);
        m.epochs_run = epoch + 1;
        if (max_step < hyper.tol) break;
    }
    m.final_loss = mc_batch_loss(m, data.features, data.labels);
    if (!std::isfinite(m.final_loss))
        throw numerical_error("multiclass: training diverged at epoch " + std::to_string(m.epochs_run));
    return m;
}

// Per-class distances in bank order.
inline std::vector<double> mc_distances(const MulticlassTwinModel& m, std::span<const double> x) {
    if (x.size() != m.inputs())
        throw dimension_error("multiclass: model expects " + std::to_string(m.inputs()) + " features, got " +
                              std::to_string(x.size()));
    std::vector<double> d;
    d.reserve(m.banks.size());
    for (const auto& b : m.banks) d.push_back(class_distance(b, x));
    return d;
}

inline int mc_predict(const MulticlassTwinModel& m, std::span<const double> x) {
    const auto d = mc_distances(m, x);
    std::size_t best = 0;
    for (std::size_t k = 1; k < d.size(); ++k)
        if (d[k] < d[best] || (d[k] == d[best] && m.banks[k].class_id < m.banks[best].class_id)) best = k;
    return m.banks[best].class_id;
}

inline std::vector<int> mc_predict(const MulticlassTwinModel& m, const Matrix& x) {
    std::vector<int> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = mc_predict(m, x.row(i));
    return out;
}

inline constexpr int mc_model_version = 1;

inline void to_json(nlohmann::json& j, const MCHyper& h) {
    j = nlohmann::json{{"n", h.features}, {"p", h.planes},   {"c", h.c},      {"lr", h.lr},
                       {"epochs", h.epochs}, {"tol", h.tol}, {"seed", h.seed}};
}

inline void from_json(const nlohmann::json& j, MCHyper& h) {
    j.at("n").get_to(h.features);
    j.at("p").get_to(h.planes);
    j.at("c").get_to(h.c);
    j.at("lr").get_to(h.lr);
    j.at("epochs").get_to(h.epochs);
    j.at("tol").get_to(h.tol);
    j.at("seed").get_to(h.seed);
}

inline nlohmann::json to_json(const MulticlassTwinModel& m) {
    auto banks = nlohmann::json::array();
    for (const auto& b : m.banks) {
        auto planes = nlohmann::json::array();
        for (const auto& pl : b.planes) planes.push_back({{"w", pl.w}, {"b", pl.b}});
        banks.push_back({{"class_id", b.class_id},
                         {"hidden_w", detail::matrix_to_json(b.subnet.weights)},
                         {"hidden_b", b.subnet.biases},
                         {"planes", planes}});
    }
    return {{"version", mc_model_version},
            {"K", m.banks.size()},
            {"M", m.inputs()},
            {"n", m.hyper.features},
            {"p", m.hyper.planes},
            {"hyper", m.hyper},
            {"banks", banks}};
}

inline MulticlassTwinModel mc_model_from_json(const nlohmann::json& j) {
    detail::check_version(j, mc_model_version, "multiclass");
    MulticlassTwinModel m;
    m.hyper = j.at("hyper").get<MCHyper>();
    const auto inputs = j.at("M").get<std::size_t>();
    const auto n = j.at("n").get<std::size_t>();
    const auto p = j.at("p").get<std::size_t>();
    for (const auto& jb : j.at("banks")) {
        ClassBank b;
        b.class_id = jb.at("class_id").get<int>();
        b.subnet.weights = detail::matrix_from_json(jb.at("hidden_w"), n, inputs);
        b.subnet.biases = jb.at("hidden_b").get<Vector>();
        for (const auto& jp : jb.at("planes")) {
            HeadParams pl{jp.at("w").get<Vector>(), jp.at("b").get<double>()};
            if (pl.w.size() != n) throw data_error("multiclass json: plane width mismatch");
            b.planes.push_back(std::move(pl));
        }
        if (b.planes.size() != p || b.subnet.biases.size() != n) throw data_error("multiclass json: bank shape mismatch");
        m.banks.push_back(std::move(b));
    }
    if (m.banks.size() != j.at("K").get<std::size_t>()) throw data_error("multiclass json: bank count mismatch");
    return m;
}

}  // namespace twinnn

#endif  // TWINNN_MULTICLASS_HPP
