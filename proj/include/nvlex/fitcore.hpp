#pragma once

// Damped iterative nonlinear least squares (Levenberg-Marquardt style),
// closed-form linear regression and first-order uncertainty propagation.
// Shared by every analysis module; no model knowledge lives here.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nvlex::fitcore {

// A fitted model y = f(params, x). `jacobian`, when set, fills grad[j] with
// the partial derivative of f with respect to params[j]; otherwise central
// finite differences are used.
struct ModelFunction {
    std::size_t arity = 0;
    std::function<double(std::span<const double>, double)> evaluate;
    std::function<void(std::span<const double>, double, std::span<double>)> jacobian;
};

struct FitOptions {
    int max_iter = 200;
    double tol = 1e-8;  // relative parameter change declaring convergence
};

struct FitResult {
    std::vector<double> parameters;
    std::vector<double> standard_errors;
    std::vector<std::vector<double>> covariance;
    double residual_sum_squares = 0.0;
    int degrees_of_freedom = 0;
    bool converged = false;
    int iterations = 0;
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_error = 0.0;
    double intercept_error = 0.0;

    double operator()(double x) const { return slope * x + intercept; }
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

inline bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Solve A x = b for symmetric positive definite A (Cholesky, in place copies).
// Returns false if a non-positive pivot shows up.
inline bool solve_spd(std::vector<double> a, std::vector<double> b, std::size_t n,
                      std::vector<double>& x) {
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0) || !std::isfinite(d)) return false;
        const double lj = std::sqrt(d);
        a[j * n + j] = lj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / lj;
        }
    }
    // forward then backward substitution
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    x.assign(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * x[k];
        x[ii] = s / a[ii * n + ii];
    }
    return all_finite(x);
}

// Invert symmetric matrix by Gauss-Jordan with partial pivoting.
inline bool invert(std::vector<double> a, std::size_t n, std::vector<double>& inv) {
    inv.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) inv[i * n + i] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
        if (a[piv * n + col] == 0.0 || !std::isfinite(a[piv * n + col])) return false;
        if (piv != col)
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(a[piv * n + c], a[col * n + c]);
                std::swap(inv[piv * n + c], inv[col * n + c]);
            }
        const double d = a[col * n + col];
        for (std::size_t c = 0; c < n; ++c) {
            a[col * n + c] /= d;
            inv[col * n + c] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r * n + col];
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) {
                a[r * n + c] -= f * a[col * n + c];
                inv[r * n + c] -= f * inv[col * n + c];
            }
        }
    }
    return all_finite(inv);
}

inline double fd_step(double p) { return std::max(1e-8, 1e-6 * std::abs(p)); }

// One row of the Jacobian by central differences.
inline void fd_row(const ModelFunction& model, std::span<const double> params, double x,
                   std::vector<double>& scratch, std::span<double> row) {
    scratch.assign(params.begin(), params.end());
    for (std::size_t j = 0; j < model.arity; ++j) {
        const double h = fd_step(params[j]);
        const double p0 = scratch[j];
        scratch[j] = p0 + h;
        const double hi = model.evaluate(scratch, x);
        scratch[j] = p0 - h;
        const double lo = model.evaluate(scratch, x);
        scratch[j] = p0;
        row[j] = (hi - lo) / (2.0 * h);
    }
}

}  // namespace detail

// Central-difference Jacobian, one row per abscissa, one column per parameter.
inline std::vector<std::vector<double>> finite_difference_jacobian(
    const ModelFunction& model, std::span<const double> params, std::span<const double> x) {
    detail::require(static_cast<bool>(model.evaluate), "finite_difference_jacobian: model has no evaluate");
    detail::require(params.size() == model.arity, "finite_difference_jacobian: parameter count != arity");
    detail::require(detail::all_finite(params), "finite_difference_jacobian: non-finite parameter");
    std::vector<std::vector<double>> jac(x.size(), std::vector<double>(model.arity));
    std::vector<double> scratch;
    for (std::size_t i = 0; i < x.size(); ++i) {
        detail::fd_row(model, params, x[i], scratch, jac[i]);
        detail::require(detail::all_finite(jac[i]), "finite_difference_jacobian: non-finite model evaluation");
    }
    return jac;
}

// Ordinary least-squares line through (x, y).
inline LinearFit fit_linear(std::span<const double> x, std::span<const double> y) {
    detail::require(x.size() == y.size(), "fit_linear: x and y differ in length");
    detail::require(x.size() >= 2, "fit_linear: need at least 2 points");
    detail::require(detail::all_finite(x) && detail::all_finite(y), "fit_linear: non-finite input");
    const auto n = static_cast<double>(x.size());
    double xm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        xm += x[i];
        ym += y[i];
    }
    xm /= n;
    ym /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - xm) * (x[i] - xm);
        sxy += (x[i] - xm) * (y[i] - ym);
    }
    detail::require(sxx > 0.0, "fit_linear: degenerate abscissa (all x equal)");

    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = ym - fit.slope * xm;
    if (x.size() > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - fit(x[i]);
            rss += r * r;
        }
        const double s2 = rss / (n - 2.0);
        fit.slope_error = std::sqrt(s2 / sxx);
        fit.intercept_error = std::sqrt(s2 * (1.0 / n + xm * xm / sxx));
    }
    return fit;
}

// Weighted Levenberg-Marquardt minimization of sum_i w_i (y_i - f(p, x_i))^2.
//
// Damping is multiplicative on the normal-matrix diagonal, raised x10 on a
// rejected step and lowered /10 on an accepted one. Convergence requires both
// a relative parameter step below options.tol and a small gradient (cosine
// between the residual and every Jacobian column below 1e-4). A singular
// system that damping cannot rescue is reported as converged=false, never as
// an exception. Without weights the covariance is scaled by the reduced
// chi-square; with weights they are taken as 1/sigma^2 and used as-is.
inline FitResult fit_nonlinear(const ModelFunction& model, std::span<const double> x,
                               std::span<const double> y,
                               std::span<const double> weights,
                               std::span<const double> initial,
                               const FitOptions& options = {}) {
    using detail::require;
    const std::size_t n = x.size();
    const std::size_t p = model.arity;
    require(static_cast<bool>(model.evaluate), "fit_nonlinear: model has no evaluate");
    require(p >= 1, "fit_nonlinear: model arity must be >= 1");
    require(n == y.size(), "fit_nonlinear: x and y differ in length");
    require(n >= p + 1, "fit_nonlinear: need at least arity+1 points");
    require(initial.size() == p, "fit_nonlinear: initial guess length != arity");
    require(detail::all_finite(x) && detail::all_finite(y), "fit_nonlinear: non-finite data");
    require(detail::all_finite(initial), "fit_nonlinear: non-finite initial guess");
    if (!weights.empty()) {
        require(weights.size() == n, "fit_nonlinear: weights length != data length");
        for (double w : weights)
            require(std::isfinite(w) && w > 0.0, "fit_nonlinear: weights must be positive");
    }
    const bool weighted = !weights.empty();
    auto wt = [&](std::size_t i) { return weighted ? weights[i] : 1.0; };

    std::vector<double> params(initial.begin(), initial.end());
    std::vector<double> resid(n);
    auto chi2_at = [&](std::span<const double> pr, std::vector<double>& r) {
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double f = model.evaluate(pr, x[i]);
            if (!std::isfinite(f)) return std::numeric_limits<double>::infinity();
            r[i] = y[i] - f;
            c += wt(i) * r[i] * r[i];
        }
        return c;
    };
    double chi2 = chi2_at(params, resid);
    require(std::isfinite(chi2), "fit_nonlinear: model non-finite at initial guess");

    std::vector<double> jrow(p), scratch, grad(p), normal(p * p), colnorm(p);
    std::vector<double> step, trial(p), trial_resid(n);
    const double gtol = 1e-4;

    auto build_normal = [&]() {
        std::fill(grad.begin(), grad.end(), 0.0);
        std::fill(normal.begin(), normal.end(), 0.0);
        std::fill(colnorm.begin(), colnorm.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (model.jacobian)
                model.jacobian(params, x[i], jrow);
            else
                detail::fd_row(model, params, x[i], scratch, jrow);
            const double w = wt(i);
            for (std::size_t a = 0; a < p; ++a) {
                grad[a] += w * jrow[a] * resid[i];
                colnorm[a] += w * jrow[a] * jrow[a];
                for (std::size_t b = a; b < p; ++b) normal[a * p + b] += w * jrow[a] * jrow[b];
            }
        }
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < a; ++b) normal[a * p + b] = normal[b * p + a];
    };
    auto gradient_cosine = [&]() {
        double rn = 0.0;
        for (std::size_t i = 0; i < n; ++i) rn += wt(i) * resid[i] * resid[i];
        rn = std::sqrt(rn);
        double worst = 0.0;
        for (std::size_t a = 0; a < p; ++a) {
            const double den = std::sqrt(colnorm[a]) * rn;
            if (den > 0.0) worst = std::max(worst, std::abs(grad[a]) / den);
        }
        return worst;
    };
    auto small_step = [&](const std::vector<double>& d) {
        for (std::size_t a = 0; a < p; ++a)
            if (std::abs(d[a]) > options.tol * (std::abs(params[a]) + options.tol)) return false;
        return true;
    };

    FitResult out;
    out.degrees_of_freedom = static_cast<int>(n - p);
    double lambda = 1e-3;
    double yscale2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) yscale2 += wt(i) * y[i] * y[i];

    for (int iter = 1; iter <= options.max_iter; ++iter) {
        out.iterations = iter;
        build_normal();
        // On exact-fit data the residual is pure roundoff and the cosine test
        // is meaningless, so a negligible chi2 also counts as zero gradient.
        const bool gradient_ok = gradient_cosine() < gtol || chi2 <= 1e-20 * yscale2;

        bool accepted = false;
        while (lambda <= 1e13) {
            std::vector<double> damped = normal;
            for (std::size_t a = 0; a < p; ++a) damped[a * p + a] += lambda * std::max(normal[a * p + a], 1e-300);
            if (!detail::solve_spd(damped, grad, p, step)) {
                lambda *= 10.0;
                continue;
            }
            if (small_step(step) && gradient_ok) {
                out.converged = true;  // already at the optimum; keep params
                break;
            }
            for (std::size_t a = 0; a < p; ++a) trial[a] = params[a] + step[a];
            const double trial_chi2 = chi2_at(trial, trial_resid);
            if (trial_chi2 < chi2) {
                const double rel_gain = (chi2 - trial_chi2) / std::max(chi2, 1e-300);
                const bool done = small_step(step) && (gradient_ok || rel_gain < 1e-13);
                params = trial;
                resid = trial_resid;
                chi2 = trial_chi2;
                lambda = std::max(lambda / 10.0, 1e-12);
                accepted = true;
                out.converged = done;
                break;
            }
            lambda *= 10.0;
        }
        if (out.converged || !accepted) break;
    }

    out.parameters = params;
    out.residual_sum_squares = chi2;

    // covariance of the solution from the undamped normal matrix
    build_normal();
    std::vector<double> inv;
    if (detail::invert(normal, p, inv)) {
        double scale = 1.0;
        if (!weighted && out.degrees_of_freedom > 0) scale = chi2 / out.degrees_of_freedom;
        out.covariance.assign(p, std::vector<double>(p));
        out.standard_errors.assign(p, 0.0);
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = 0; b < p; ++b) out.covariance[a][b] = scale * inv[a * p + b];
            out.standard_errors[a] = std::sqrt(std::max(out.covariance[a][a], 0.0));
        }
    } else {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        out.covariance.assign(p, std::vector<double>(p, nan));
        out.standard_errors.assign(p, nan);
        out.converged = false;  // singular normal equations
    }
    return out;
}

inline FitResult fit_nonlinear(const ModelFunction& model, std::span<const double> x,
                               std::span<const double> y, std::span<const double> initial,
                               const FitOptions& options = {}) {
    return fit_nonlinear(model, x, y, {}, initial, options);
}

// First-order error propagation: variance of g(p) given grad g and covariance.
inline double propagate_variance(std::span<const double> grad,
                                 const std::vector<std::vector<double>>& cov) {
    double v = 0.0;
    for (std::size_t a = 0; a < grad.size(); ++a)
        for (std::size_t b = 0; b < grad.size(); ++b) v += grad[a] * cov[a][b] * grad[b];
    return std::max(v, 0.0);
}

}  // namespace nvlex::fitcore
