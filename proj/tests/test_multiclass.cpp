#include <gtest/gtest.h>

#include "support.hpp"
#include "twinnn/multiclass.hpp"

using namespace twinnn;
using twinnn::testing::central_differences;
using twinnn::testing::make_blobs;
using twinnn::testing::max_relative_error;
using twinnn::testing::random_matrix;

namespace {

ClassBank random_bank(Rng& rng, int id, std::size_t m, std::size_t n, std::size_t p) {
    ClassBank b;
    b.class_id = id;
    b.subnet.weights = random_matrix(rng, n, m, -1.5, 1.5);
    b.subnet.biases.resize(n);
    for (auto& v : b.subnet.biases) v = rng.uniform(-1, 1);
    for (std::size_t j = 0; j < p; ++j) {
        HeadParams pl;
        pl.w.resize(n);
        for (auto& v : pl.w) v = rng.uniform(-1.5, 1.5);
        pl.b = rng.uniform(-1, 1);
        b.planes.push_back(pl);
    }
    return b;
}

MulticlassTwinModel random_model(Rng& rng, std::size_t k, std::size_t m, std::size_t n, std::size_t p, double c) {
    MulticlassTwinModel model;
    model.hyper.features = n;
    model.hyper.planes = p;
    model.hyper.c = c;
    for (std::size_t i = 0; i < k; ++i) model.banks.push_back(random_bank(rng, static_cast<int>(i), m, n, p));
    return model;
}

// Direct scalar re-computation of the per-sample loss.
double formula_loss(const MulticlassTwinModel& m, std::span<const double> x, int cls) {
    double own = INFINITY, other = INFINITY;
    for (const auto& b : m.banks)
        for (const auto& pl : b.planes) {
            double z = pl.b;
            for (std::size_t f = 0; f < b.subnet.width(); ++f) {
                double u = b.subnet.biases[f];
                for (std::size_t j = 0; j < x.size(); ++j) u += b.subnet.weights(f, j) * x[j];
                z += pl.w[f] * std::tanh(u);
            }
            const double a = std::abs(std::tanh(z));
            (b.class_id == cls ? own : other) = std::min(b.class_id == cls ? own : other, a);
        }
    const double hinge = std::max(0.0, 1.0 - other);
    return m.hyper.c * own * own + hinge * hinge;
}

// Smallest gap between any two |activations| that a min compares, and
// distance of each from the kink of |.| at zero.
double min_tie_gap(const MulticlassTwinModel& m, const Matrix& x) {
    double gap = INFINITY;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        std::vector<double> all;
        for (const auto& b : m.banks) {
            const auto o = bank_forward(b, x.row(i));
            for (double a : o.a) {
                gap = std::min(gap, std::abs(a));
                all.push_back(std::abs(a));
            }
        }
        std::sort(all.begin(), all.end());
        for (std::size_t j = 1; j < all.size(); ++j) gap = std::min(gap, all[j] - all[j - 1]);
    }
    return gap;
}

Dataset three_blobs(std::uint64_t seed, std::size_t per_class) {
    return make_blobs({{{0, 3}, 0.6, per_class, 0}, {{-3, -2}, 0.6, per_class, 1}, {{3, -2}, 0.6, per_class, 2}},
                      seed);
}

std::pair<Dataset, Dataset> split_quarter(const Dataset& d, std::uint64_t seed) {
    const auto [fit, hold] = stratified_holdout(d.labels, 0.25, seed);
    return {d.subset(fit), d.subset(hold)};
}

}  // namespace

TEST(ClassDistance, PointOnPlaneIsZero) {
    Rng rng(1);
    ClassBank b = random_bank(rng, 0, 2, 3, 2);
    const Vector x{0.2, -0.4};
    const Vector phi = b.subnet.forward(x);
    b.planes[1].b = -dot(b.planes[1].w, phi);
    EXPECT_EQ(class_distance(b, x), 0.0);
}

TEST(ClassDistance, SinglePlaneIsNormalizedAbsoluteValue) {
    Rng rng(2);
    const ClassBank b = random_bank(rng, 0, 3, 4, 1);
    const Vector x{0.1, 0.5, -0.7};
    const auto o = bank_forward(b, x);
    EXPECT_DOUBLE_EQ(class_distance(b, x), std::abs(o.z[0]) / norm2(b.planes[0].w));
}

TEST(ClassDistance, ExhaustiveMinimum) {
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        const ClassBank b = random_bank(rng, 0, 2, 3, 3);
        const Vector x{rng.normal(), rng.normal()};
        const auto o = bank_forward(b, x);
        const double d0 = std::abs(o.z[0]) / norm2(b.planes[0].w);
        const double d1 = std::abs(o.z[1]) / norm2(b.planes[1].w);
        const double d2 = std::abs(o.z[2]) / norm2(b.planes[2].w);
        ASSERT_EQ(class_distance(b, x), std::min({d0, d1, d2}));
        ASSERT_GT(class_distance(b, x), 0.0);
    }
}

TEST(ClassDistance, ZeroNormPlaneThrows) {
    Rng rng(4);
    ClassBank b = random_bank(rng, 0, 2, 2, 2);
    b.planes[0].w.assign(2, 0.0);
    EXPECT_THROW(class_distance(b, Vector{0, 0}), numerical_error);
}

TEST(McLoss, TargetsMetGiveZero) {
    EXPECT_EQ(mc_sample_loss(0.0, 1.0, 1.0), 0.0);
    EXPECT_EQ(mc_sample_loss(0.0, 1.5, 2.0), 0.0);
    EXPECT_DOUBLE_EQ(mc_sample_loss(0.5, 1.5, 2.0), 0.5);
    EXPECT_DOUBLE_EQ(mc_sample_loss(0.0, 0.25, 1.0), 0.5625);
}

TEST(McLoss, MatchesScalarFormula) {
    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
        const auto m = random_model(rng, 3, 2, 2, 2, rng.uniform(0.1, 2));
        const Vector x{rng.normal(), rng.normal()};
        const int cls = static_cast<int>(rng.below(3));
        ASSERT_NEAR(mc_loss(m, x, cls), formula_loss(m, x, cls), 1e-14);
    }
}

TEST(McLoss, UnknownClassThrows) {
    Rng rng(6);
    const auto m = random_model(rng, 3, 2, 2, 2, 1.0);
    EXPECT_THROW(mc_loss(m, Vector{0, 0}, 7), data_error);
}

TEST(McGradient, FiniteDifferencesAwayFromTies) {
    Rng rng(7);
    int checked = 0;
    while (checked < 50) {
        const std::size_t k = 2 + rng.below(3), m_in = 1 + rng.below(3), n = 1 + rng.below(3), p = 1 + rng.below(3);
        const std::size_t rows = 2 + rng.below(6);
        auto model = random_model(rng, k, m_in, n, p, rng.uniform(0.1, 2));
        const Matrix x = random_matrix(rng, rows, m_in, -2, 2);
        std::vector<int> y(rows);
        for (auto& v : y) v = static_cast<int>(rng.below(k));
        if (min_tie_gap(model, x) < 1e-3) continue;
        const auto f = [&](const Vector& q) {
            auto copy = model;
            copy.set_parameters(q);
            return mc_batch_loss(copy, x, y);
        };
        const auto g = mc_gradient(model, x, y);
        ASSERT_NEAR(g.loss, mc_batch_loss(model, x, y), 1e-14);
        ASSERT_LE(max_relative_error(g.flat, central_differences(f, model.parameters())), 1e-5);
        ++checked;
    }
}

TEST(McTrain, ThreeBlobsHeldOut) {
    const auto [train, test] = split_quarter(three_blobs(8, 60), 9);
    MCHyper h;
    h.seed = 3;
    const auto m = mc_train(train, h);
    EXPECT_GE(twinnn::testing::accuracy(test.labels, mc_predict(m, test.features)), 0.95);
}

TEST(McTrain, TwoClassesAgreeWithBinaryTwin) {
    const auto d = make_blobs({{{-2, -1}, 0.7, 80, -1}, {{2, 1}, 0.7, 80, 1}}, 10);
    const auto [train_set, test] = split_quarter(d, 11);
    const auto mc = mc_train(train_set, MCHyper{});
    const auto bin = twinnn::train(train_set, TwinHyper{});
    const auto a = mc_predict(mc, test.features), b = predict(bin, test.features);
    EXPECT_GE(twinnn::testing::accuracy(a, b), 0.9);
}

TEST(McTrain, ZeroEpochs) {
    MCHyper h;
    h.epochs = 0;
    const auto d = three_blobs(12, 10);
    const auto m = mc_train(d, h);
    EXPECT_EQ(m.banks.size(), 3u);
    EXPECT_NO_THROW(mc_predict(m, d.features));
}

TEST(McTrain, ClassOrderDoesNotChangeLabels) {
    const auto d = three_blobs(13, 20);
    MCHyper h;
    h.epochs = 200;
    h.seed = 5;
    const auto a = mc_train(d, h);
    const auto b = mc_train(d, h, {2, 0, 1});
    EXPECT_EQ(b.banks[0].class_id, 2);
    EXPECT_EQ(b.banks[0].subnet.weights, a.banks[2].subnet.weights);
    Rng rng(14);
    const Matrix probe = random_matrix(rng, 200, 2, -5, 5);
    EXPECT_EQ(mc_predict(a, probe), mc_predict(b, probe));
    EXPECT_THROW(mc_train(d, h, {0, 1}), usage_error);
}

TEST(McTrain, SingleClassAndMissingRejected) {
    EXPECT_THROW(mc_train(make_dataset(Matrix{{1}, {2}}, {0, 0}), MCHyper{}), data_error);
    auto d = three_blobs(15, 5);
    d.missing.assign(d.rows() * d.cols(), 0);
    d.missing[0] = 1;
    EXPECT_THROW(mc_train(d, MCHyper{}), data_error);
}

TEST(McTrain, Reproducible) {
    const auto d = three_blobs(16, 10);
    MCHyper h;
    h.epochs = 100;
    EXPECT_EQ(mc_train(d, h).parameters(), mc_train(d, h).parameters());
}

TEST(McPredict, MatchesArgminOracle) {
    Rng rng(17);
    const auto m = random_model(rng, 4, 2, 3, 3, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const Vector x{rng.uniform(-3, 3), rng.uniform(-3, 3)};
        std::size_t best = 0;
        double best_d = INFINITY;
        for (std::size_t k = 0; k < m.banks.size(); ++k) {
            const double dk = class_distance(m.banks[k], x);
            if (dk < best_d) {
                best_d = dk;
                best = k;
            }
        }
        ASSERT_EQ(mc_predict(m, x), m.banks[best].class_id);
    }
}

TEST(McPredict, PointOnPlaneWins) {
    Rng rng(18);
    auto m = random_model(rng, 3, 2, 2, 2, 1.0);
    const Vector x{0.3, 0.1};
    auto& pl = m.banks[1].planes[0];
    pl.b = -dot(pl.w, m.banks[1].subnet.forward(x));
    EXPECT_EQ(mc_predict(m, x), 1);
}

TEST(McPredict, PerBankRescalingInvariance) {
    Rng rng(19);
    const auto m = random_model(rng, 3, 2, 3, 2, 1.0);
    auto s = m;
    for (auto& b : s.banks) {
        const double lambda = rng.uniform(0.05, 20);
        for (auto& pl : b.planes) {
            for (auto& w : pl.w) w *= lambda;
            pl.b *= lambda;
        }
    }
    for (int i = 0; i < 500; ++i) {
        const Vector x{rng.uniform(-3, 3), rng.uniform(-3, 3)};
        const auto d = mc_distances(m, x);
        auto sorted = d;
        std::sort(sorted.begin(), sorted.end());
        if (sorted[1] - sorted[0] < 1e-9) continue;
        ASSERT_EQ(mc_predict(m, x), mc_predict(s, x));
    }
}

TEST(McPredict, TieGoesToLowestClassId) {
    Rng rng(20);
    auto m = random_model(rng, 2, 2, 2, 1, 1.0);
    m.banks[0] = m.banks[1];
    m.banks[0].class_id = 5;
    m.banks[1].class_id = 3;
    EXPECT_EQ(mc_predict(m, Vector{0.1, 0.2}), 3);
}

TEST(McJson, RoundTrip) {
    MCHyper h;
    h.epochs = 30;
    h.planes = 3;
    h.features = 4;
    const auto m = mc_train(three_blobs(21, 10), h);
    const auto j = to_json(m);
    EXPECT_EQ(j.at("K"), 3);
    EXPECT_EQ(j.at("p"), 3);
    const auto back = mc_model_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(back.parameters(), m.parameters());
    EXPECT_EQ(back.hyper.planes, 3u);
}
