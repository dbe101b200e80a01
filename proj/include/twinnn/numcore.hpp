#ifndef TWINNN_NUMCORE_HPP
#define TWINNN_NUMCORE_HPP

/*
 Dense linear algebra, reproducible random numbers and the error types
 shared by every twinnn module.

 Notes
 ~~~~~
 * Matrix is row-major, 64-bit floats, value semantics.
 * Vector is a plain std::vector<double>.
 * Rng is xoshiro256** seeded through splitmix64. Every distribution is
   derived from the raw 64-bit stream with integer/IEEE arithmetic only, so
   the same seed gives the same numbers on every platform. Normal draws use
   the Box-Muller transform (one draw per pair of uniforms, no caching).
*/

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace twinnn {

// Error hierarchy. The CLI maps these onto exit codes (usage 2, data 3,
// numerical 4).
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class usage_error : public error {
public:
    using error::error;
};

class data_error : public error {
public:
    using error::error;
};

class dimension_error : public data_error {
public:
    using data_error::data_error;
};

class numerical_error : public error {
public:
    using error::error;
};

using Vector = std::vector<double>;

class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_)
            throw dimension_error("Matrix: data length " + std::to_string(data_.size()) +
                                  " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }

    Matrix(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ ? rows.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) throw dimension_error("Matrix: ragged initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }

    const std::vector<double>& data() const noexcept { return data_; }
    std::vector<double>& data() noexcept { return data_; }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    // Rows selected by index, in the given order.
    Matrix select_rows(std::span<const std::size_t> idx) const {
        Matrix out(idx.size(), cols_);
        for (std::size_t r = 0; r < idx.size(); ++r) {
            auto src = row(idx[r]);
            std::copy(src.begin(), src.end(), out.row(r).begin());
        }
        return out;
    }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw dimension_error("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                              " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ci = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            auto bk = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

inline Vector matvec(const Matrix& a, std::span<const double> x) {
    if (a.cols() != x.size())
        throw dimension_error("matvec: matrix has " + std::to_string(a.cols()) + " columns, vector has " +
                              std::to_string(x.size()) + " entries");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ai = a.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < ai.size(); ++j) s += ai[j] * x[j];
        y[i] = s;
    }
    return y;
}

// aᵀx without forming the transpose.
inline Vector matvec_transposed(const Matrix& a, std::span<const double> x) {
    if (a.rows() != x.size())
        throw dimension_error("matvec_transposed: matrix has " + std::to_string(a.rows()) +
                              " rows, vector has " + std::to_string(x.size()) + " entries");
    Vector y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ai = a.row(i);
        for (std::size_t j = 0; j < ai.size(); ++j) y[j] += ai[j] * x[i];
    }
    return y;
}

// aᵀa
inline Matrix gram(const Matrix& a) {
    Matrix g(a.cols(), a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        auto ar = a.row(r);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double v = ar[i];
            for (std::size_t j = i; j < a.cols(); ++j) g(i, j) += v * ar[j];
        }
    }
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
    return g;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw dimension_error("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

inline double trace(const Matrix& m) {
    double t = 0.0;
    for (std::size_t i = 0; i < std::min(m.rows(), m.cols()); ++i) t += m(i, i);
    return t;
}

// Ridge used when the caller does not supply one: 1e-6 * trace(m) / dim.
inline double default_ridge(const Matrix& m) {
    if (m.rows() == 0) return 0.0;
    return 1e-6 * std::abs(trace(m)) / static_cast<double>(m.rows());
}

// Lower-triangular Cholesky factor of (m + ridge*I).
namespace detail {

// Dot product of the first n entries; four partial sums let the loop pipeline.
inline double dot_prefix(const double* a, const double* b, std::size_t n) noexcept {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    for (; k < n; ++k) s0 += a[k] * b[k];
    return (s0 + s1) + (s2 + s3);
}

}  // namespace detail

class Cholesky {
public:
    Cholesky(const Matrix& m, double ridge) {
        if (m.rows() != m.cols())
            throw dimension_error("solve_spd: matrix is " + std::to_string(m.rows()) + "x" +
                                  std::to_string(m.cols()) + ", expected square");
        if (!(ridge >= 0.0)) throw usage_error("solve_spd: ridge must be non-negative");
        const std::size_t n = m.rows();
        l_ = Matrix(n, n);
        for (std::size_t j = 0; j < n; ++j) {
            const double* lj = &l_(j, 0);
            const double d = m(j, j) + ridge - detail::dot_prefix(lj, lj, j);
            if (!(d > 0.0) || !std::isfinite(d))
                throw numerical_error("solve_spd: matrix is not positive definite (pivot " + std::to_string(j) +
                                      "); use a larger ridge");
            const double ljj = std::sqrt(d);
            l_(j, j) = ljj;
            for (std::size_t i = j + 1; i < n; ++i) {
                l_(i, j) = (m(i, j) - detail::dot_prefix(&l_(i, 0), lj, j)) / ljj;
            }
        }
    }

    std::size_t size() const noexcept { return l_.rows(); }

    Vector solve(std::span<const double> rhs) const {
        const std::size_t n = size();
        if (rhs.size() != n) throw dimension_error("solve_spd: rhs length mismatch");
        Vector y(rhs.begin(), rhs.end());
        for (std::size_t i = 0; i < n; ++i) {
            double s = y[i];
            for (std::size_t k = 0; k < i; ++k) s -= l_(i, k) * y[k];
            y[i] = s / l_(i, i);
        }
        for (std::size_t i = n; i-- > 0;) {
            double s = y[i];
            for (std::size_t k = i + 1; k < n; ++k) s -= l_(k, i) * y[k];
            y[i] = s / l_(i, i);
        }
        return y;
    }

    // (m + ridge*I)^-1 * b, column by column.
    Matrix solve(const Matrix& b) const {
        if (b.rows() != size()) throw dimension_error("solve_spd: rhs row count mismatch");
        Matrix x(b.rows(), b.cols());
        Vector col(b.rows());
        for (std::size_t j = 0; j < b.cols(); ++j) {
            for (std::size_t i = 0; i < b.rows(); ++i) col[i] = b(i, j);
            Vector s = solve(col);
            for (std::size_t i = 0; i < b.rows(); ++i) x(i, j) = s[i];
        }
        return x;
    }

    const Matrix& factor() const noexcept { return l_; }

private:
    Matrix l_;
};

// Solves (m + ridge*I) x = rhs for symmetric positive definite m.
inline Vector solve_spd(const Matrix& m, std::span<const double> rhs, double ridge) {
    return Cholesky(m, ridge).solve(rhs);
}

// splitmix64 finalizer; used to seed xoshiro and to derive per-job seeds.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic seed for a sub-job keyed by integers, independent of the
// order in which jobs are run.
template <typename... Keys>
constexpr std::uint64_t derive_seed(std::uint64_t master, Keys... keys) noexcept {
    std::uint64_t s = master;
    std::uint64_t out = splitmix64(s);
    ((s = out ^ (static_cast<std::uint64_t>(keys) * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL),
      out = splitmix64(s)),
     ...);
    return out;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed) {
        std::uint64_t s = seed;
        for (auto& w : state_) w = splitmix64(s);
    }

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) {
        if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
            throw usage_error("Rng::uniform: need finite lo <= hi");
        return lo + (hi - lo) * uniform();
    }

    // Box-Muller on two uniforms; u1 is taken from (0, 1].
    double normal(double mean = 0.0, double stddev = 1.0) {
        if (!(stddev > 0.0) || !std::isfinite(stddev) || !std::isfinite(mean))
            throw usage_error("Rng::normal: stddev must be positive and finite");
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // Uniform integer in [0, n) by rejection (no modulo bias).
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw usage_error("Rng::below: n must be positive");
        const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        shuffle(std::span<T>(items));
    }

    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> p(n);
        std::iota(p.begin(), p.end(), std::size_t{0});
        shuffle(p);
        return p;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

    std::uint64_t seed_;
    std::uint64_t state_[4];
};

}  // namespace twinnn

#endif  // TWINNN_NUMCORE_HPP
