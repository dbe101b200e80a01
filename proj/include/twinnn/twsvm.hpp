#ifndef TWINNN_TWSVM_HPP
#define TWINNN_TWSVM_HPP

/*
 Reference Twin SVM solved through its two box-constrained duals.

   H = [A e],  G = [B e]

   max_a  e'a - 1/2 a' G (H'H + r1 I)^-1 G' a     0 <= a <= c1
   max_b  e'b - 1/2 b' H (G'G + r2 I)^-1 H' b     0 <= b <= c2

   u = [w+; b+] = -(H'H + r1 I)^-1 G' a
   v = [w-; b-] =  (G'G + r2 I)^-1 H' b

 With an RBF (or explicit linear) kernel the rows of H and G become
 [K(A, C) e] and [K(B, C) e] where C stacks every training row, and the
 plane is evaluated as K(x, C) w + b.

 The ridge defaults to 1e-6 * trace / dim of the matrix being inverted;
 without it H'H is singular whenever N_A < M + 1.

 Both duals are solved by projected gradient ascent with a fixed step 1/L,
 L = max_i sum_j |Q_ij| (a Gershgorin bound on the largest eigenvalue),
 accelerated by occasional free-set Newton steps that are only accepted when
 they increase the objective, so the objective never decreases. Convergence
 is declared when the projected gradient's infinity norm is at most `tol`.
*/

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "twinnn/data.hpp"
#include "twinnn/numcore.hpp"

namespace twinnn {

struct KernelSpec {
    enum class Kind { linear, rbf };
    Kind kind = Kind::linear;
    double gamma = 1.0;

    void validate() const {
        if (kind == Kind::rbf && !(gamma > 0.0 && std::isfinite(gamma)))
            throw usage_error("kernel: rbf gamma must be positive");
    }

    double operator()(std::span<const double> x, std::span<const double> y) const {
        if (kind == Kind::linear) return dot(x, y);
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
        return std::exp(-gamma * s);
    }
};

// linear: X Y'; rbf: exp(-gamma ||x_i - y_j||^2)
inline Matrix kernel_matrix(const KernelSpec& spec, const Matrix& x, const Matrix& y) {
    spec.validate();
    if (x.cols() != y.cols())
        throw dimension_error("kernel_matrix: feature dimensions differ (" + std::to_string(x.cols()) + " vs " +
                              std::to_string(y.cols()) + ")");
    Matrix k(x.rows(), y.rows());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < y.rows(); ++j) k(i, j) = spec(x.row(i), y.row(j));
    return k;
}

// ---------------------------------------------------------------------------
// Box-constrained concave QP
// ---------------------------------------------------------------------------

struct BoxQpOptions {
    double tol = 1e-8;
    std::size_t max_iter = 2'000'000;
    std::size_t warm_start_after = 200;  // iteration that tries the interior point warm start
    std::vector<double>* objective_trace = nullptr;  // objective after each iteration
};

struct BoxQpResult {
    Vector x;
    double objective = 0.0;
    double residual = 0.0;  // projected-gradient infinity norm
    std::size_t iterations = 0;
};

class qp_not_converged : public numerical_error {
public:
    qp_not_converged(const std::string& what, BoxQpResult best) : numerical_error(what), best_(std::move(best)) {}
    const BoxQpResult& best() const noexcept { return best_; }

private:
    BoxQpResult best_;
};

inline double box_qp_objective(const Matrix& q, std::span<const double> x) {
    const Vector qx = matvec(q, x);
    double lin = 0.0;
    for (double v : x) lin += v;
    return lin - 0.5 * dot(x, qx);
}

// Infinity norm of the projected gradient of e'x - x'Qx/2 on [0, upper].
inline double box_qp_residual(std::span<const double> x, std::span<const double> grad, double upper) {
    double r = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double g = grad[i];
        if (x[i] <= 0.0) g = std::max(g, 0.0);
        if (x[i] >= upper) g = std::min(g, 0.0);
        r = std::max(r, std::abs(g));
    }
    return r;
}

namespace detail {

// Coordinates not held at a bound by the sign of their gradient.
inline std::vector<std::size_t> box_qp_free_set(std::span<const double> x, std::span<const double> grad,
                                                double upper) {
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const bool pinned = (x[i] <= 0.0 && grad[i] <= 0.0) || (x[i] >= upper && grad[i] >= 0.0);
        if (!pinned) free.push_back(i);
    }
    return free;
}

// Newton step towards the optimum of the current face. A coordinate
// sitting on a bound that the step would push outwards is moved off the
// face and the step recomputed. Dropped coordinates are flagged in held.
inline bool box_qp_face_newton(const Matrix& q, double upper, std::vector<std::size_t> free, Vector& x,
                               const Vector& grad, double& objective, std::vector<char>& held) {
    Vector dir;
    for (;;) {
        const std::size_t n = free.size();
        if (n == 0) return false;
        Matrix qf(n, n);
        Vector gf(n);
        double tr = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            gf[a] = grad[free[a]];
            for (std::size_t b = 0; b < n; ++b) qf(a, b) = q(free[a], free[b]);
            tr += qf(a, a);
        }
        try {
            dir = Cholesky(qf, 1e-12 * tr / static_cast<double>(n) + 1e-300).solve(gf);
        } catch (const numerical_error&) {
            return false;
        }
        std::vector<std::size_t> keep;
        for (std::size_t a = 0; a < n; ++a) {
            const double xi = x[free[a]];
            if ((xi <= 0.0 && dir[a] < 0.0) || (xi >= upper && dir[a] > 0.0)) {
                held[free[a]] = 1;
                continue;
            }
            keep.push_back(free[a]);
        }
        if (keep.size() == n) break;
        free = std::move(keep);
    }
    // Walk the projected path x(t) = clamp(x + t*dir), t in [0, 1], through
    // its breakpoints. On each piece the objective is a quadratic in t, so
    // its maximiser is exact; the best point over the whole path is kept.
    const std::size_t n = x.size();
    const std::size_t m = free.size();
    std::vector<std::pair<double, std::size_t>> breaks;
    Vector d(n, 0.0), qd(n, 0.0), g(grad);
    for (std::size_t a = 0; a < m; ++a) {
        const std::size_t i = free[a];
        d[i] = dir[a];
        if (dir[a] > 0.0) breaks.emplace_back((upper - x[i]) / dir[a], i);
        if (dir[a] < 0.0) breaks.emplace_back(-x[i] / dir[a], i);
        for (std::size_t r = 0; r < n; ++r) qd[r] += q(r, i) * dir[a];
    }
    std::sort(breaks.begin(), breaks.end());
    double t = 0.0, f = objective, best_f = objective, best_t = 0.0;
    std::size_t next = 0;
    while (t < 1.0) {
        const double end = next < breaks.size() ? std::min(breaks[next].first, 1.0) : 1.0;
        const double slope = dot(g, d);
        const double curv = dot(d, qd);
        const double len = end - t;
        const double s = curv > 0.0 ? std::clamp(slope / curv, 0.0, len) : (slope > 0.0 ? len : 0.0);
        const double f_s = f + s * slope - 0.5 * s * s * curv;
        if (f_s > best_f) {
            best_f = f_s;
            best_t = t + s;
        }
        f += len * slope - 0.5 * len * len * curv;
        for (std::size_t r = 0; r < n; ++r) g[r] -= len * qd[r];
        t = end;
        for (; next < breaks.size() && breaks[next].first <= t; ++next) {
            const std::size_t i = breaks[next].second;
            for (std::size_t r = 0; r < n; ++r) qd[r] -= q(r, i) * d[i];
            d[i] = 0.0;
        }
        if (slope <= 0.0 && curv >= 0.0) break;
    }
    if (!(best_t > 0.0)) return false;
    Vector trial(x);
    for (std::size_t a = 0; a < m; ++a) trial[free[a]] = std::clamp(x[free[a]] + best_t * dir[a], 0.0, upper);
    const double f_new = box_qp_objective(q, trial);
    if (!(f_new > objective)) return false;
    x = std::move(trial);
    objective = f_new;
    return true;
}

// Projected gradient step. Starts from the exact line maximiser along the
// projected gradient and halves until a sufficient increase; 1/L always
// qualifies, so the step never drops below it.
inline void box_qp_projected_step(const Matrix& q, double upper, double min_step, Vector& x, const Vector& grad,
                                  double& objective) {
    const std::size_t n = x.size();
    Vector p(grad);
    for (std::size_t i = 0; i < n; ++i)
        if ((x[i] <= 0.0 && p[i] < 0.0) || (x[i] >= upper && p[i] > 0.0)) p[i] = 0.0;
    const double curv = dot(p, matvec(q, p));
    double step = curv > 0.0 ? std::max(dot(p, grad) / curv, min_step) : 2.0 * upper / std::max(norm_inf(p), 1e-300);
    Vector trial(n);
    for (;; step *= 0.5) {
        if (step <= min_step) step = min_step;
        double gain = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            trial[i] = std::clamp(x[i] + step * grad[i], 0.0, upper);
            gain += grad[i] * (trial[i] - x[i]);
        }
        const double f = box_qp_objective(q, trial);
        if (step == min_step || f >= objective + 1e-4 * gain) {
            x.swap(trial);
            objective = f;
            return;
        }
    }
}

// Primal-dual interior point (Mehrotra predictor-corrector) for
// min 1/2 x'Qx - e'x on 0 <= x <= upper, z and w the bound multipliers and
// s = upper - x. Returns the final iterate snapped onto the bounds its
// multipliers point to. Used as a warm start when the face steps stall on
// degenerate, badly scaled Q.
inline Vector box_qp_interior_point(const Matrix& q, double upper) {
    const std::size_t n = q.rows();
    Vector x(n, 0.5 * upper), s(n, 0.5 * upper), z(n), w(n);
    Vector rd(n), dx(n), dz(n), dw(n), rhs(n);
    // Multipliers that absorb the starting gradient, so only centring is left.
    const Vector qx0 = matvec(q, x);
    for (std::size_t i = 0; i < n; ++i) {
        const double g = qx0[i] - 1.0;
        z[i] = std::max(g, 0.0) + 1.0;
        w[i] = std::max(-g, 0.0) + 1.0;
    }
    double tr = 0.0;
    for (std::size_t i = 0; i < n; ++i) tr += q(i, i);
    const double base_ridge = 1e-14 * tr / static_cast<double>(n) + 1e-300;

    const auto max_step = [&](const Vector& dx_, const Vector& dz_, const Vector& dw_, double& ap, double& ad) {
        ap = ad = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (dx_[i] < 0.0) ap = std::min(ap, -x[i] / dx_[i]);
            if (dx_[i] > 0.0) ap = std::min(ap, s[i] / dx_[i]);
            if (dz_[i] < 0.0) ad = std::min(ad, -z[i] / dz_[i]);
            if (dw_[i] < 0.0) ad = std::min(ad, -w[i] / dw_[i]);
        }
    };

    for (int iter = 0; iter < 100; ++iter) {
        const Vector qx = matvec(q, x);
        double mu = 0.0, rd_norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            rd[i] = qx[i] - 1.0 - z[i] + w[i];
            rd_norm = std::max(rd_norm, std::abs(rd[i]));
            mu += x[i] * z[i] + s[i] * w[i];
        }
        mu /= static_cast<double>(2 * n);
        if (mu <= 1e-15 && rd_norm <= 1e-10) break;

        Matrix k = q;
        for (std::size_t i = 0; i < n; ++i) k(i, i) += z[i] / x[i] + w[i] / s[i];
        std::optional<Cholesky> chol;
        for (double ridge = base_ridge; !chol && ridge < 1e-2 * tr; ridge *= 100.0) {
            try {
                chol.emplace(k, ridge);
            } catch (const numerical_error&) {
            }
        }
        if (!chol) break;

        // Predictor: sigma = 0.
        for (std::size_t i = 0; i < n; ++i) rhs[i] = -rd[i] - z[i] + w[i];
        const Vector ax = chol->solve(rhs);
        Vector az(n), aw(n);
        for (std::size_t i = 0; i < n; ++i) {
            az[i] = -z[i] - z[i] / x[i] * ax[i];
            aw[i] = -w[i] + w[i] / s[i] * ax[i];
        }
        double ap, ad;
        max_step(ax, az, aw, ap, ad);
        double mu_aff = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            mu_aff += (x[i] + ap * ax[i]) * (z[i] + ad * az[i]) + (s[i] - ap * ax[i]) * (w[i] + ad * aw[i]);
        mu_aff /= static_cast<double>(2 * n);
        const double sigma = std::pow(mu_aff / mu, 3);

        // Corrector with the second-order terms of the predictor.
        for (std::size_t i = 0; i < n; ++i) {
            const double cz = sigma * mu - x[i] * z[i] - ax[i] * az[i];
            const double cw = sigma * mu - s[i] * w[i] + ax[i] * aw[i];
            rhs[i] = -rd[i] + cz / x[i] - cw / s[i];
        }
        dx = chol->solve(rhs);
        for (std::size_t i = 0; i < n; ++i) {
            dz[i] = (sigma * mu - x[i] * z[i] - ax[i] * az[i] - z[i] * dx[i]) / x[i];
            dw[i] = (sigma * mu - s[i] * w[i] + ax[i] * aw[i] + w[i] * dx[i]) / s[i];
        }
        max_step(dx, dz, dw, ap, ad);
        ap = std::min(1.0, 0.99 * ap);
        ad = std::min(1.0, 0.99 * ad);
        if (ap < 1e-12 && ad < 1e-12) break;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += ap * dx[i];
            s[i] -= ap * dx[i];
            z[i] += ad * dz[i];
            w[i] += ad * dw[i];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] <= z[i] && x[i] <= s[i]) x[i] = 0.0;
        else if (s[i] <= w[i]) x[i] = upper;
        x[i] = std::clamp(x[i], 0.0, upper);
    }
    return x;
}

}  // namespace detail

// max e'x - 1/2 x'Qx subject to 0 <= x <= upper, Q symmetric PSD.
//
// Gradient projection with a face Newton step, in the spirit of
// More-Toraldo: projected steps pick out the active bounds, and once the
// free set stops changing, Newton steps searched along their projected
// path finish the job, crossing as many bounds as pays.
// Plain 1/L steps crawl on badly conditioned Q (the default ridge makes
// eigenvalues of order 1/ridge). On degenerate Q the face steps can still
// stall, so past a short budget an interior point solve is tried once as a
// warm start. Every accepted move raises the objective.
inline BoxQpResult maximize_box_qp(const Matrix& q, double upper, const BoxQpOptions& opt = {}) {
    if (q.rows() != q.cols()) throw dimension_error("box qp: matrix must be square");
    if (!(upper >= 0.0)) throw usage_error("box qp: upper bound must be non-negative");
    const std::size_t n = q.rows();
    BoxQpResult res;
    res.x.assign(n, 0.0);
    double lipschitz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (double v : q.row(i)) s += std::abs(v);
        lipschitz = std::max(lipschitz, s);
    }
    const double min_step = lipschitz > 0.0 ? 1.0 / lipschitz : 1.0;
    Vector grad(n, 1.0);
    double objective = 0.0;
    std::vector<std::size_t> last_free;
    bool have_last = false;
    bool last_newton = false;
    // Coordinates a run of Newton steps has taken off the face.
    std::vector<char> held(n, 0);
    for (std::size_t it = 0;; ++it) {
        const Vector qx = matvec(q, res.x);
        for (std::size_t i = 0; i < n; ++i) grad[i] = 1.0 - qx[i];
        res.residual = box_qp_residual(res.x, grad, upper);
        res.iterations = it;
        if (res.residual <= opt.tol) break;
        if (it >= opt.max_iter) {
            res.objective = box_qp_objective(q, res.x);
            throw qp_not_converged("box qp: iteration cap " + std::to_string(opt.max_iter) +
                                       " reached with projected-gradient residual " + std::to_string(res.residual),
                                   res);
        }
        if (it == opt.warm_start_after && n > 1) {
            Vector cand = detail::box_qp_interior_point(q, upper);
            const double f = box_qp_objective(q, cand);
            if (f > objective) {
                res.x = std::move(cand);
                objective = f;
                last_newton = true;
                if (opt.objective_trace) opt.objective_trace->push_back(objective);
                continue;
            }
        }
        auto free = detail::box_qp_free_set(res.x, grad, upper);
        // A Newton step cut short at a bound leaves a smaller face to finish.
        const bool settled = last_newton || (have_last && free == last_free);
        if (settled) {
            std::vector<std::size_t> face;
            for (std::size_t i : free)
                if (!held[i] || (res.x[i] > 0.0 && res.x[i] < upper)) face.push_back(i);
            last_newton = detail::box_qp_face_newton(q, upper, std::move(face), res.x, grad, objective, held);
        } else {
            last_newton = false;
        }
        if (!last_newton) {
            std::fill(held.begin(), held.end(), 0);
            detail::box_qp_projected_step(q, upper, min_step, res.x, grad, objective);
        }
        last_free = std::move(free);
        have_last = true;
        if (opt.objective_trace) opt.objective_trace->push_back(objective);
    }
    res.objective = box_qp_objective(q, res.x);
    return res;
}

// ---------------------------------------------------------------------------
// Twin SVM
// ---------------------------------------------------------------------------

enum class TwsvmMode { linear, kernel };

struct TwsvmProblem {
    Matrix a;  // class +1 rows
    Matrix b;  // class -1 rows
    double c1 = 1.0;
    double c2 = 1.0;
    TwsvmMode mode = TwsvmMode::linear;
    KernelSpec kernel;            // used in kernel mode
    std::optional<double> ridge;  // default: 1e-6 * trace / dim, per inverted matrix
    BoxQpOptions qp;

    void validate() const {
        if (a.rows() == 0 || b.rows() == 0) throw data_error("twsvm: both classes need at least one sample");
        if (a.cols() != b.cols()) throw dimension_error("twsvm: class matrices differ in feature count");
        if (!(c1 >= 0.0) || !(c2 >= 0.0)) throw usage_error("twsvm: c1 and c2 must be non-negative");
        if (ridge && !(*ridge >= 0.0)) throw usage_error("twsvm: ridge must be non-negative");
        kernel.validate();
    }
};

struct TwsvmModel {
    TwsvmMode mode = TwsvmMode::linear;
    KernelSpec kernel;
    Matrix support;  // stacked training rows [A; B], kernel mode only
    std::size_t inputs = 0;
    Vector u;  // [w+; b+]
    Vector v;  // [w-; b-]
    Vector alpha;
    Vector beta;
    double c1 = 0.0;
    double c2 = 0.0;
    double ridge_plus = 0.0;
    double ridge_minus = 0.0;
    double objective_plus = 0.0;
    double objective_minus = 0.0;
};

namespace detail {

// [rows e]
inline Matrix augment_ones(const Matrix& m) {
    Matrix out(m.rows(), m.cols() + 1);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        std::copy(m.row(i).begin(), m.row(i).end(), out.row(i).begin());
        out(i, m.cols()) = 1.0;
    }
    return out;
}

inline Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
    Matrix out(top.rows() + bottom.rows(), top.cols());
    std::copy(top.data().begin(), top.data().end(), out.data().begin());
    std::copy(bottom.data().begin(), bottom.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(top.data().size()));
    return out;
}

struct DualPieces {
    Matrix q;         // other (own'own + rI)^-1 other'
    Matrix solved;    // (own'own + rI)^-1 other'
    double ridge = 0.0;
};

inline DualPieces dual_pieces(const Matrix& own, const Matrix& other, std::optional<double> ridge) {
    const Matrix g = gram(own);
    DualPieces p;
    p.ridge = ridge ? *ridge : default_ridge(g);
    const Cholesky chol(g, p.ridge);
    p.solved = chol.solve(other.transpose());
    p.q = matmul(other, p.solved);
    for (std::size_t i = 0; i < p.q.rows(); ++i)
        for (std::size_t j = 0; j < i; ++j) p.q(i, j) = p.q(j, i) = 0.5 * (p.q(i, j) + p.q(j, i));
    return p;
}

}  // namespace detail

inline TwsvmModel solve_dual(const TwsvmProblem& p) {
    p.validate();
    TwsvmModel m;
    m.mode = p.mode;
    m.kernel = p.kernel;
    m.inputs = p.a.cols();
    m.c1 = p.c1;
    m.c2 = p.c2;

    Matrix h, g;
    if (p.mode == TwsvmMode::linear) {
        h = detail::augment_ones(p.a);
        g = detail::augment_ones(p.b);
    } else {
        m.support = detail::stack_rows(p.a, p.b);
        h = detail::augment_ones(kernel_matrix(p.kernel, p.a, m.support));
        g = detail::augment_ones(kernel_matrix(p.kernel, p.b, m.support));
    }

    const auto plus = detail::dual_pieces(h, g, p.ridge);
    const auto alpha = maximize_box_qp(plus.q, p.c1, p.qp);
    m.alpha = alpha.x;
    m.objective_plus = alpha.objective;
    m.ridge_plus = plus.ridge;
    m.u = matvec(plus.solved, m.alpha);
    for (double& x : m.u) x = -x;

    const auto minus = detail::dual_pieces(g, h, p.ridge);
    const auto beta = maximize_box_qp(minus.q, p.c2, p.qp);
    m.beta = beta.x;
    m.objective_minus = beta.objective;
    m.ridge_minus = minus.ridge;
    m.v = matvec(minus.solved, m.beta);
    return m;
}

// Builds the problem from a +-1 dataset.
inline TwsvmProblem make_twsvm_problem(const Dataset& d, double c1, double c2, TwsvmMode mode = TwsvmMode::linear,
                                       KernelSpec kernel = {}) {
    if (d.has_missing()) throw data_error("twsvm: training data has missing values; impute first");
    std::vector<std::size_t> a, b;
    for (std::size_t i = 0; i < d.rows(); ++i) {
        if (d.labels[i] == 1)
            a.push_back(i);
        else if (d.labels[i] == -1)
            b.push_back(i);
        else
            throw data_error("twsvm needs labels +1/-1, found " + std::to_string(d.labels[i]));
    }
    TwsvmProblem p;
    p.a = d.features.select_rows(a);
    p.b = d.features.select_rows(b);
    p.c1 = c1;
    p.c2 = c2;
    p.mode = mode;
    p.kernel = kernel;
    return p;
}

struct TwsvmDistances {
    double d_plus;
    double d_minus;
};

// |w.x + b| / ||w|| for both planes; in kernel mode x enters through K(x, C).
inline TwsvmDistances twsvm_distances(const TwsvmModel& m, std::span<const double> x) {
    if (x.size() != m.inputs)
        throw dimension_error("twsvm: model expects " + std::to_string(m.inputs) + " features, got " +
                              std::to_string(x.size()));
    Vector feat;
    if (m.mode == TwsvmMode::linear) {
        feat.assign(x.begin(), x.end());
    } else {
        feat.resize(m.support.rows());
        for (std::size_t j = 0; j < m.support.rows(); ++j) feat[j] = m.kernel(x, m.support.row(j));
    }
    const auto plane = [&](const Vector& coef) {
        const std::span<const double> w(coef.data(), coef.size() - 1);
        const double n = norm2(w);
        if (!(n > 0.0)) throw numerical_error("twsvm: hyperplane has zero-norm weight vector");
        return std::abs(dot(w, feat) + coef.back()) / n;
    };
    return {plane(m.u), plane(m.v)};
}

inline int twsvm_predict(const TwsvmModel& m, std::span<const double> x) {
    const auto d = twsvm_distances(m, x);
    return d.d_plus <= d.d_minus ? 1 : -1;
}

inline std::vector<int> twsvm_predict(const TwsvmModel& m, const Matrix& x) {
    std::vector<int> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = twsvm_predict(m, x.row(i));
    return out;
}

inline constexpr int twsvm_model_version = 1;

inline nlohmann::json to_json(const TwsvmModel& m) {
    nlohmann::json j{{"version", twsvm_model_version},
                     {"M", m.inputs},
                     {"mode", m.mode == TwsvmMode::linear ? "linear" : "kernel"},
                     {"kernel", {{"kind", m.kernel.kind == KernelSpec::Kind::linear ? "linear" : "rbf"},
                                 {"gamma", m.kernel.gamma}}},
                     {"c1", m.c1},
                     {"c2", m.c2},
                     {"ridge_plus", m.ridge_plus},
                     {"ridge_minus", m.ridge_minus},
                     {"u", m.u},
                     {"v", m.v},
                     {"alpha", m.alpha},
                     {"beta", m.beta}};
    if (m.mode == TwsvmMode::kernel) {
        auto rows = nlohmann::json::array();
        for (std::size_t i = 0; i < m.support.rows(); ++i)
            rows.push_back(std::vector<double>(m.support.row(i).begin(), m.support.row(i).end()));
        j["support"] = rows;
    }
    return j;
}

inline TwsvmModel twsvm_model_from_json(const nlohmann::json& j) {
    if (j.at("version").get<int>() != twsvm_model_version) throw data_error("twsvm json: unsupported version");
    TwsvmModel m;
    m.inputs = j.at("M").get<std::size_t>();
    m.mode = j.at("mode").get<std::string>() == "linear" ? TwsvmMode::linear : TwsvmMode::kernel;
    m.kernel.kind = j.at("kernel").at("kind").get<std::string>() == "linear" ? KernelSpec::Kind::linear
                                                                              : KernelSpec::Kind::rbf;
    m.kernel.gamma = j.at("kernel").at("gamma").get<double>();
    j.at("c1").get_to(m.c1);
    j.at("c2").get_to(m.c2);
    j.at("ridge_plus").get_to(m.ridge_plus);
    j.at("ridge_minus").get_to(m.ridge_minus);
    j.at("u").get_to(m.u);
    j.at("v").get_to(m.v);
    j.at("alpha").get_to(m.alpha);
    j.at("beta").get_to(m.beta);
    if (m.mode == TwsvmMode::kernel) {
        const auto& rows = j.at("support");
        m.support = Matrix(rows.size(), m.inputs);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto r = rows[i].get<Vector>();
            if (r.size() != m.inputs) throw data_error("twsvm json: support row width mismatch");
            std::copy(r.begin(), r.end(), m.support.row(i).begin());
        }
    }
    const std::size_t coef = (m.mode == TwsvmMode::linear ? m.inputs : m.support.rows()) + 1;
    if (m.u.size() != coef || m.v.size() != coef) throw data_error("twsvm json: plane length mismatch");
    return m;
}

}  // namespace twinnn

#endif  // TWINNN_TWSVM_HPP
