// Shared helpers for the test binaries: synthetic data and finite
// differences.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "twinnn/data.hpp"
#include "twinnn/numcore.hpp"

namespace twinnn::testing {

struct Blob {
    std::vector<double> centre;
    double sd = 1.0;
    std::size_t count = 0;
    int label = 0;
};

// Isotropic Gaussian blobs, rows in blob order.
inline Dataset make_blobs(const std::vector<Blob>& blobs, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t m = blobs.front().centre.size();
    std::size_t n = 0;
    for (const auto& b : blobs) n += b.count;
    Matrix x(n, m);
    std::vector<int> y;
    y.reserve(n);
    std::size_t r = 0;
    for (const auto& b : blobs)
        for (std::size_t i = 0; i < b.count; ++i, ++r) {
            for (std::size_t j = 0; j < m; ++j) x(r, j) = rng.normal(b.centre[j], b.sd);
            y.push_back(b.label);
        }
    return make_dataset(std::move(x), std::move(y));
}

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (auto& v : m.data()) v = rng.uniform(lo, hi);
    return m;
}

// Central differences of f around p with step h.
inline Vector central_differences(const std::function<double(const Vector&)>& f, Vector p, double h = 1e-5) {
    Vector g(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double keep = p[i];
        p[i] = keep + h;
        const double up = f(p);
        p[i] = keep - h;
        const double down = f(p);
        p[i] = keep;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

// Only guards components that are exactly zero on both sides.
inline constexpr double gradient_floor = 1e-8;

inline double max_relative_error(const Vector& analytic, const Vector& numeric, double floor = gradient_floor) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double den = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / den);
    }
    return worst;
}

inline double accuracy(const std::vector<int>& truth, const std::vector<int>& pred) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) ok += truth[i] == pred[i];
    return static_cast<double>(ok) / static_cast<double>(truth.size());
}

}  // namespace twinnn::testing
