#include "mfg/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>

namespace mfg {

std::string to_string(OptimStatus status)
{
    switch (status) {
    case OptimStatus::Converged:
        return "converged";
    case OptimStatus::MaxIterations:
        return "max_iterations";
    case OptimStatus::LineSearchFailed:
        return "line_search_failed";
    }
    return "unknown";
}

namespace {

double dot(std::span<const double> a, std::span<const double> b)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

double sup_norm(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

struct Trial {
    double alpha = 0.0;
    double phi = 0.0;
    double dphi = 0.0;
    std::vector<double> x;
    std::vector<double> grad;
};

class LineSearch {
public:
    LineSearch(const ObjectiveFunction& f, const OptimOptions& opt, int& evals)
        : f_(f)
        , opt_(opt)
        , evals_(evals)
    {
    }

    /// Strong Wolfe search along p from x. Returns the accepted trial, or a
    /// trial satisfying sufficient decrease only when the bracket collapses.
    std::optional<Trial> run(std::span<const double> x, double fx, std::span<const double> gx,
                             std::span<const double> p)
    {
        x_ = x;
        p_ = p;
        phi0_ = fx;
        dphi0_ = dot(gx, p);
        Trial prev;
        prev.alpha = 0.0;
        prev.phi = fx;
        prev.dphi = dphi0_;
        double alpha = 1.0;
        for (int i = 0; i < opt_.max_line_search; ++i) {
            Trial cur = evaluate(alpha);
            if (!std::isfinite(cur.phi)) {
                // step left the domain where f is finite: shrink
                alpha = 0.5 * (prev.alpha + alpha);
                continue;
            }
            if (!sufficient_decrease(cur) || (i > 0 && cur.phi >= prev.phi)) {
                return zoom(std::move(prev), std::move(cur));
            }
            if (std::abs(cur.dphi) <= -opt_.c2 * dphi0_) {
                return cur;
            }
            if (cur.dphi >= 0.0) {
                return zoom(std::move(cur), std::move(prev));
            }
            prev = std::move(cur);
            alpha *= 2.0;
        }
        if (prev.alpha > 0.0) {
            return prev;
        }
        return std::nullopt;
    }

private:
    /// Armijo test, with the approximate Wolfe fallback of Hager and Zhang
    /// once phi differences are at rounding level.
    bool sufficient_decrease(const Trial& t) const
    {
        if (t.phi <= phi0_ + opt_.c1 * t.alpha * dphi0_) {
            return true;
        }
        const double noise = 1e3 * std::numeric_limits<double>::epsilon() * std::abs(phi0_);
        return t.phi <= phi0_ + noise && t.dphi <= (2.0 * opt_.c1 - 1.0) * dphi0_;
    }

    Trial evaluate(double alpha)
    {
        Trial t;
        t.alpha = alpha;
        t.x.resize(x_.size());
        t.grad.assign(x_.size(), 0.0);
        for (std::size_t i = 0; i < x_.size(); ++i) {
            t.x[i] = x_[i] + alpha * p_[i];
        }
        t.phi = f_(t.x, t.grad);
        ++evals_;
        t.dphi = dot(t.grad, p_);
        return t;
    }

    static double cubic_minimizer(const Trial& a, const Trial& b)
    {
        const double d1 = a.dphi + b.dphi - 3.0 * (a.phi - b.phi) / (a.alpha - b.alpha);
        const double disc = d1 * d1 - a.dphi * b.dphi;
        if (!(disc >= 0.0)) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
        return b.alpha - (b.alpha - a.alpha) * (b.dphi + d2 - d1) / (b.dphi - a.dphi + 2.0 * d2);
    }

    std::optional<Trial> zoom(Trial lo, Trial hi)
    {
        for (int j = 0; j < opt_.max_line_search; ++j) {
            const double left = std::min(lo.alpha, hi.alpha);
            const double right = std::max(lo.alpha, hi.alpha);
            const double width = right - left;
            if (width <= 1e-16 * std::max(1.0, right)) {
                break;
            }
            double alpha = cubic_minimizer(lo, hi);
            if (!std::isfinite(alpha) || alpha < left + 0.1 * width || alpha > right - 0.1 * width) {
                alpha = 0.5 * (left + right);
            }
            Trial cur = evaluate(alpha);
            if (!std::isfinite(cur.phi) || !sufficient_decrease(cur) || cur.phi >= lo.phi) {
                hi = std::move(cur);
            } else {
                if (std::abs(cur.dphi) <= -opt_.c2 * dphi0_) {
                    return cur;
                }
                if (cur.dphi * (hi.alpha - lo.alpha) >= 0.0) {
                    hi = std::move(lo);
                }
                lo = std::move(cur);
            }
        }
        if (lo.alpha > 0.0 && lo.phi < phi0_) {
            return lo;
        }
        return std::nullopt;
    }

    const ObjectiveFunction& f_;
    const OptimOptions& opt_;
    int& evals_;
    std::span<const double> x_;
    std::span<const double> p_;
    double phi0_ = 0.0;
    double dphi0_ = 0.0;
};

/// Inverse-Hessian approximation: dense matrix or limited-memory pairs.
class InverseHessian {
public:
    InverseHessian(std::size_t n, bool dense, int memory)
        : n_(n)
        , dense_(dense)
        , memory_(static_cast<std::size_t>(memory))
    {
    }

    void reset(double scale)
    {
        scale_ = scale;
        pairs_.clear();
        if (dense_) {
            h_.assign(n_ * n_, 0.0);
            for (std::size_t i = 0; i < n_; ++i) {
                h_[i * n_ + i] = scale;
            }
        }
        updates_ = 0;
    }

    int updates() const { return updates_; }

    std::vector<double> apply(std::span<const double> g) const
    {
        std::vector<double> r(n_, 0.0);
        if (dense_) {
            for (std::size_t i = 0; i < n_; ++i) {
                r[i] = dot({h_.data() + i * n_, n_}, g);
            }
            return r;
        }
        // two-loop recursion
        std::vector<double> q(g.begin(), g.end());
        std::vector<double> alphas(pairs_.size());
        for (std::size_t k = pairs_.size(); k-- > 0;) {
            const auto& [s, y, rho] = pairs_[k];
            alphas[k] = rho * dot(s, q);
            for (std::size_t i = 0; i < n_; ++i) {
                q[i] -= alphas[k] * y[i];
            }
        }
        for (std::size_t i = 0; i < n_; ++i) {
            r[i] = scale_ * q[i];
        }
        for (std::size_t k = 0; k < pairs_.size(); ++k) {
            const auto& [s, y, rho] = pairs_[k];
            const double beta = rho * dot(y, r);
            for (std::size_t i = 0; i < n_; ++i) {
                r[i] += (alphas[k] - beta) * s[i];
            }
        }
        return r;
    }

    /// Returns false when the curvature condition fails and the update is skipped.
    bool update(std::vector<double> s, std::vector<double> y)
    {
        const double sy = dot(s, y);
        const double yy = dot(y, y);
        if (!(sy > 0.0) || !(yy > 0.0)) {
            return false;
        }
        if (updates_ == 0 || !dense_) {
            scale_ = sy / yy;
            if (dense_) {
                reset(scale_);
            }
        }
        const double rho = 1.0 / sy;
        if (dense_) {
            // H+ = (I - rho s y') H (I - rho y s') + rho s s'
            const auto hy = apply(y);
            const double yhy = dot(y, hy);
            for (std::size_t i = 0; i < n_; ++i) {
                for (std::size_t j = 0; j < n_; ++j) {
                    h_[i * n_ + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        } else {
            pairs_.push_back({std::move(s), std::move(y), rho});
            if (pairs_.size() > memory_) {
                pairs_.pop_front();
            }
        }
        ++updates_;
        return true;
    }

private:
    struct Pair {
        std::vector<double> s;
        std::vector<double> y;
        double rho;
    };

    std::size_t n_;
    bool dense_;
    std::size_t memory_;
    double scale_ = 1.0;
    int updates_ = 0;
    std::vector<double> h_;
    std::deque<Pair> pairs_;
};

} // namespace

OptimReport minimize(const ObjectiveFunction& f, std::vector<double> x0, const OptimOptions& options)
{
    if (!(options.opt_tol > 0.0)) {
        throw std::invalid_argument("optimality tolerance must be positive");
    }
    const std::size_t n = x0.size();
    OptimReport report;
    report.minimizer = std::move(x0);
    std::vector<double> grad(n, 0.0);
    report.objective = f(report.minimizer, grad);
    report.function_evals = 1;
    if (!std::isfinite(report.objective)) {
        throw std::invalid_argument("objective is not finite at the starting point");
    }

    InverseHessian hess(n, n <= options.dense_limit, options.lbfgs_memory);
    auto initial_scale = [&] {
        double g2 = std::sqrt(dot(grad, grad));
        return g2 > 0.0 ? 1.0 / g2 : 1.0;
    };
    hess.reset(initial_scale());

    LineSearch search(f, options, report.function_evals);
    while (true) {
        report.first_order_optimality = sup_norm(grad);
        if (report.first_order_optimality <= options.opt_tol) {
            report.status = OptimStatus::Converged;
            return report;
        }
        if (report.iterations >= options.max_iter) {
            report.status = OptimStatus::MaxIterations;
            return report;
        }

        std::optional<Trial> step;
        for (int attempt = 0; attempt < 2 && !step; ++attempt) {
            if (attempt == 1) {
                // fall back to a scaled steepest-descent step
                hess.reset(initial_scale());
            }
            auto p = hess.apply(grad);
            for (double& v : p) {
                v = -v;
            }
            if (!(dot(p, grad) < 0.0)) {
                continue;
            }
            step = search.run(report.minimizer, report.objective, grad, p);
        }
        if (!step) {
            report.status = OptimStatus::LineSearchFailed;
            return report;
        }

        std::vector<double> s(n);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = step->x[i] - report.minimizer[i];
            y[i] = step->grad[i] - grad[i];
        }
        hess.update(std::move(s), std::move(y));
        report.minimizer = std::move(step->x);
        grad = std::move(step->grad);
        report.objective = step->phi;
        ++report.iterations;
        if (options.on_iteration) {
            options.on_iteration({report.iterations, report.objective, sup_norm(grad), report.minimizer});
        }
    }
}

} // namespace mfg
