#include <gtest/gtest.h>

#include <cmath>

#include "twinnn/evalstats.hpp"

using namespace twinnn;

namespace {

// Two-sided exact p by listing every sign assignment: the share of
// assignments whose W+ is at least as far from n(n+1)/4 as the observed one.
double enumerated_p(const std::vector<double>& ranks, double w_plus) {
    const std::size_t n = ranks.size();
    double total = 0.0;
    for (double r : ranks) total += r;
    const double centre = total / 2.0;
    const double obs = std::abs(w_plus - centre);
    std::uint64_t hits = 0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        double w = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1) w += ranks[i];
        if (std::abs(w - centre) >= obs - 1e-9) ++hits;
    }
    return static_cast<double>(hits) / std::ldexp(1.0, static_cast<int>(n));
}

ConfusionMatrix random_cm(Rng& rng, std::uint64_t cap) {
    ConfusionMatrix cm;
    do {
        cm.tp = rng.below(cap);
        cm.tn = rng.below(cap);
        cm.fp = rng.below(cap);
        cm.fn = rng.below(cap);
    } while (cm.total() == 0);
    return cm;
}

}  // namespace

TEST(Confusion, PerfectAndInverted) {
    const std::vector<int> t{1, 1, -1, -1, 1};
    const auto perfect = confusion(t, t);
    EXPECT_EQ(perfect.fp, 0u);
    EXPECT_EQ(perfect.fn, 0u);
    std::vector<int> inv(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) inv[i] = -t[i];
    const auto inverted = confusion(t, inv);
    EXPECT_EQ(inverted.tp, 0u);
    EXPECT_EQ(inverted.tn, 0u);
}

TEST(Confusion, MatchesCountingOracle) {
    Rng rng(3);
    std::vector<int> t(10000), p(10000);
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = rng.below(2) ? 1 : -1;
        p[i] = rng.below(2) ? 1 : -1;
    }
    std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] == 1 && p[i] == 1) ++tp;
        if (t[i] == -1 && p[i] == -1) ++tn;
        if (t[i] == -1 && p[i] == 1) ++fp;
        if (t[i] == 1 && p[i] == -1) ++fn;
    }
    const auto cm = confusion(t, p);
    EXPECT_EQ(cm, (ConfusionMatrix{tp, tn, fp, fn}));
    EXPECT_EQ(cm.total(), t.size());
}

TEST(Confusion, Errors) {
    EXPECT_THROW(confusion(std::vector<int>{1, -1}, std::vector<int>{1}), dimension_error);
    EXPECT_THROW(confusion(std::vector<int>{1, 0}, std::vector<int>{1, 1}), data_error);
    EXPECT_THROW(confusion(std::vector<int>{}, std::vector<int>{}), data_error);
}

TEST(Metrics, PerfectClassifier) {
    const auto r = metrics({50, 50, 0, 0});
    EXPECT_EQ(*r.acc, 1.0);
    EXPECT_EQ(*r.gmeans, 1.0);
    EXPECT_EQ(*r.fmeasure, 1.0);
    EXPECT_EQ(*r.mcc, 1.0);
}

TEST(Metrics, AllNegativePredictorIsZeroZero) {
    const auto r = metrics({0, 90, 0, 10});
    EXPECT_EQ(*r.gmeans, 0.0);
    EXPECT_EQ(*r.mcc, 0.0);
    EXPECT_FALSE(r.ppv.has_value());
    EXPECT_FALSE(r.fmeasure.has_value());
    EXPECT_DOUBLE_EQ(*r.acc, 0.9);
}

TEST(Metrics, MccHandArithmetic) {
    const auto r = metrics({3, 4, 1, 2});
    EXPECT_NEAR(*r.mcc, 10.0 / std::sqrt(600.0), 1e-15);
    EXPECT_NEAR(*r.mcc, 0.40825, 5e-6);
}

TEST(Metrics, UndefinedIsNullInJson) {
    const nlohmann::json j = metrics({0, 5, 0, 0});
    EXPECT_TRUE(j.at("tpr").is_null());
    EXPECT_EQ(j.at("gmeans").get<double>(), 0.0);
    const MetricReport back = j.get<MetricReport>();
    EXPECT_FALSE(back.tpr.has_value());
    EXPECT_EQ(*back.tnr, 1.0);
}

TEST(Metrics, EmptyMatrixThrows) { EXPECT_THROW(metrics({}), data_error); }

TEST(Metrics, RandomIdentities) {
    Rng rng(17);
    for (int t = 0; t < 100000; ++t) {
        const auto cm = random_cm(rng, t % 3 == 0 ? 4 : 1000);
        const auto r = metrics(cm);
        if (r.tpr && r.tnr && *r.tpr > 0 && *r.tnr > 0) {
            const double prod = *r.tpr * *r.tnr;
            ASSERT_NEAR(*r.gmeans * *r.gmeans, prod, 4 * std::numeric_limits<double>::epsilon() * prod);
        } else {
            ASSERT_EQ(*r.gmeans, 0.0);
        }
        if (r.tpr && r.ppv && *r.tpr + *r.ppv > 0) {
            ASSERT_NEAR(*r.fmeasure, 2 * *r.tpr * *r.ppv / (*r.tpr + *r.ppv), 1e-14);
        }
        ASSERT_GE(*r.mcc, -1.0);
        ASSERT_LE(*r.mcc, 1.0);
        if (cm.pc() == 0 || cm.nc() == 0 || cm.pr() == 0 || cm.nr() == 0) {
            ASSERT_EQ(*r.mcc, 0.0);
        }
        for (const auto& [name, field] : metric_fields()) {
            const auto& v = r.*field;
            if (!v) continue;
            ASSERT_LE(*v, 1.0 + 1e-15) << name;
            if (name != "mcc") {
                ASSERT_GE(*v, 0.0) << name;
            }
        }
    }
}

TEST(Metrics, ClassRoleSwapSymmetry) {
    Rng rng(23);
    for (int t = 0; t < 10000; ++t) {
        const auto cm = random_cm(rng, 50);
        const auto a = metrics(cm);
        const auto b = metrics({cm.tn, cm.tp, cm.fn, cm.fp});
        ASSERT_EQ(a.acc, b.acc);
        ASSERT_NEAR(*a.gmeans, *b.gmeans, 1e-15);
        ASSERT_NEAR(*a.mcc, *b.mcc, 1e-15);
        ASSERT_EQ(a.tpr, b.tnr);
        ASSERT_EQ(a.ppv, b.npv);
    }
}

TEST(AverageRanks, TiesShareAverage) {
    const auto r = average_ranks(std::vector<double>{10, 20, 20, 5});
    EXPECT_EQ(r, (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(ChiSquare, KnownTails) {
    EXPECT_NEAR(chi_square_sf(8.0, 2.0), std::exp(-4.0), 1e-12);
    EXPECT_NEAR(chi_square_sf(3.841458820694124, 1.0), 0.05, 1e-10);
    EXPECT_NEAR(chi_square_sf(11.070497693516351, 5.0), 0.05, 1e-10);
    EXPECT_EQ(chi_square_sf(0.0, 3.0), 1.0);
}

TEST(Wilcoxon, AllZeroDifferencesThrows) {
    const std::vector<double> a{1, 2, 3, 4, 5, 6};
    EXPECT_THROW(wilcoxon_signed_ranks(a, a), data_error);
}

TEST(Wilcoxon, InsufficientPairs) {
    try {
        wilcoxon_signed_ranks(std::vector<double>{1, 2, 3, 4, 5, 6}, std::vector<double>{0, 1, 2, 3, 5, 6});
        FAIL();
    } catch (const data_error& e) {
        EXPECT_NE(std::string(e.what()).find("insufficient pairs"), std::string::npos);
    }
}

TEST(Wilcoxon, AllPositiveSixPairs) {
    const std::vector<double> a{1, 2, 3, 4, 5, 6}, b(6, 0.0);
    const auto r = wilcoxon_signed_ranks(a, b);
    EXPECT_EQ(r.statistic, 0.0);
    EXPECT_EQ(r.w_plus, 21.0);
    EXPECT_TRUE(r.exact);
    EXPECT_EQ(r.p_value, 0.03125);
}

TEST(Wilcoxon, ExactMatchesEnumeration) {
    Rng rng(31);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 5 + rng.below(11);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            // Coarse values create ties among |d|.
            a[i] = static_cast<double>(rng.below(7));
            b[i] = static_cast<double>(rng.below(7)) + (t % 2 ? 0.5 : 0.0);
        }
        std::vector<double> mags;
        for (std::size_t i = 0; i < n; ++i)
            if (a[i] != b[i]) mags.push_back(std::abs(a[i] - b[i]));
        if (mags.size() < 5) continue;
        const auto r = wilcoxon_signed_ranks(a, b);
        ASSERT_TRUE(r.exact);
        ASSERT_NEAR(r.p_value, enumerated_p(average_ranks(mags), r.w_plus), 1e-12);
        ASSERT_GT(r.p_value, 0.0);
        ASSERT_LE(r.p_value, 1.0);
    }
}

// The normal path is only trusted where decisions are made: in the tail.
// Around the centre of the distribution the gap at n = 15 reaches ~0.011.
TEST(Wilcoxon, NormalApproximationCloseToExactAtFifteen) {
    for (int w = 0; w <= 60; ++w) {
        std::vector<double> a(15), b(15, 0.0);
        int rest = w;
        for (int r = 15; r >= 1; --r) {
            a[r - 1] = rest >= r ? r : -r;
            if (rest >= r) rest -= r;
        }
        const auto ex = wilcoxon_signed_ranks(a, b, WilcoxonMethod::exact);
        const auto ap = wilcoxon_signed_ranks(a, b, WilcoxonMethod::normal);
        ASSERT_EQ(ex.w_plus, w);
        EXPECT_FALSE(ap.exact);
        if (ex.p_value <= 0.15) {
            EXPECT_NEAR(ex.p_value, ap.p_value, 0.005) << "W+ = " << w;
        }
        EXPECT_NEAR(ex.p_value, ap.p_value, 0.012) << "W+ = " << w;
    }
}

TEST(Wilcoxon, LargeSampleUsesNormalPath) {
    std::vector<double> a(30), b(30, 0.0);
    for (int i = 0; i < 30; ++i) a[i] = (i % 3 == 0 ? -1.0 : 1.0) * (i + 1);
    EXPECT_FALSE(wilcoxon_signed_ranks(a, b).exact);
}

TEST(Wilcoxon, InvariantToCommonRescaling) {
    Rng rng(41);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 6 + rng.below(30);
        std::vector<double> a(n), b(n), a2(n), b2(n);
        // Tied integer scores need an exact factor to keep their ties;
        // continuous scores take any factor.
        const bool tied = t % 2 == 0;
        const double k = tied ? std::ldexp(1.0, static_cast<int>(rng.below(9)) - 4) : rng.uniform(0.01, 100.0);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = tied ? std::round(rng.normal() * 8) : rng.normal();
            b[i] = tied ? std::round(rng.normal() * 8) : rng.normal();
            a2[i] = a[i] * k;
            b2[i] = b[i] * k;
        }
        std::size_t nz = 0;
        for (std::size_t i = 0; i < n; ++i) nz += a[i] != b[i];
        if (nz < 5) continue;
        ASSERT_DOUBLE_EQ(wilcoxon_signed_ranks(a, b).p_value, wilcoxon_signed_ranks(a2, b2).p_value);
    }
}

TEST(Friedman, IdenticalColumns) {
    Matrix s(5, 3);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 3; ++j) s(i, j) = static_cast<double>(i);
    const auto r = friedman(s);
    EXPECT_EQ(r.statistic, 0.0);
    EXPECT_EQ(r.p_value, 1.0);
}

TEST(Friedman, ConsistentOrderingOverFourDatasets) {
    const Matrix s{{0.9, 0.8, 0.7}, {0.6, 0.5, 0.4}, {0.99, 0.98, 0.1}, {3, 2, 1}};
    const auto r = friedman(s);
    EXPECT_NEAR(r.statistic, 8.0, 1e-12);
    EXPECT_NEAR(r.p_value, 0.0183, 1e-4);
    EXPECT_EQ(r.mean_ranks, (std::vector<double>{1, 2, 3}));
}

TEST(Friedman, ColumnPermutationSymmetry) {
    Rng rng(43);
    Matrix s(6, 4), p(6, 4);
    const std::vector<std::size_t> perm{2, 0, 3, 1};
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 4; ++j) s(i, j) = std::round(rng.uniform(0, 5));
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 4; ++j) p(i, j) = s(i, perm[j]);
    const auto a = friedman(s), b = friedman(p);
    EXPECT_DOUBLE_EQ(a.statistic, b.statistic);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(b.mean_ranks[j], a.mean_ranks[perm[j]]);
}

TEST(Friedman, DegenerateShape) { EXPECT_THROW(friedman(Matrix(1, 3)), data_error); }
