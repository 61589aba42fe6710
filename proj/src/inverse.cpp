#include "mfg/inverse.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace mfg {

SpatialField closed_form_b(const MFGProblem& prob, const ScalarField& m, std::span<const double> g)
{
    const Grid& grid = prob.grid;
    const std::size_t points = grid.spatial_size();
    if (g.size() != points) {
        throw InvalidArgument("data has wrong length");
    }
    const auto lap = laplacian_apply(grid, prob.uT);
    const auto ham = eo_hamiltonian(grid, one_sided_gradients(grid, prob.uT));
    const auto m_final = m.level(grid.levels() - 1);
    SpatialField b(points);
    for (std::size_t i = 0; i < points; ++i) {
        b[i] = -g[i] - prob.eps * lap[i] + ham[i] - prob.coupling.value(m_final[i]);
    }
    return b;
}

LinearInverseStep::LinearInverseStep(const MFGProblem& prob, const PolicyField& q, const ScalarField& m,
                                     std::span<const double> g, double gamma, std::vector<Observation> extra)
    : prob_(prob)
    , m_(m)
    , steps_(prob.grid, q, prob.eps, true)
    , g_(g.begin(), g.end())
    , gamma_(gamma)
    , extra_(std::move(extra))
{
    if (g_.size() != prob.grid.spatial_size()) {
        throw InvalidArgument("data has wrong length");
    }
    if (!(gamma >= 0.0)) {
        throw InvalidArgument("regularisation weight must be nonnegative");
    }
    for (const auto& obs : extra_) {
        if (obs.level == 0 || obs.level >= prob.grid.levels() - 1 || obs.g.size() != g_.size()) {
            throw InvalidArgument("extra observation must sit on an interior time level");
        }
    }
}

ScalarField LinearInverseStep::state(std::span<const double> b) const
{
    return solve_hjb_linear(prob_, steps_, m_, b);
}

namespace {

double misfit(const Grid& grid, std::span<const double> u, std::span<const double> g, std::vector<double>* residual)
{
    std::vector<double> r(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        r[i] = u[i] - g[i];
    }
    const double norm = l2_norm(grid, r);
    if (residual) {
        *residual = std::move(r);
    }
    return 0.5 * norm * norm;
}

} // namespace

double LinearInverseStep::objective(std::span<const double> b) const
{
    const Grid& grid = prob_.grid;
    const auto u = state(b);
    double value = misfit(grid, u.level(0), g_, nullptr);
    for (const auto& obs : extra_) {
        value += misfit(grid, u.level(obs.level), obs.g, nullptr);
    }
    return value + 0.5 * gamma_ * gradient_energy(grid, b);
}

double LinearInverseStep::objective_and_gradient(std::span<const double> b, std::span<double> gradient) const
{
    const Grid& grid = prob_.grid;
    const std::size_t points = grid.spatial_size();
    const auto u = state(b);

    std::vector<double> w;
    double value = misfit(grid, u.level(0), g_, &w);
    std::vector<std::vector<double>> injected(extra_.size());
    for (std::size_t j = 0; j < extra_.size(); ++j) {
        value += misfit(grid, u.level(extra_[j].level), extra_[j].g, &injected[j]);
    }
    value += 0.5 * gamma_ * gradient_energy(grid, b);

    // Adjoint sweep: each misfit enters as initial data at its own level and is
    // carried forward by the FP operator; the gradient is dt * sum_{n>=1} w^n.
    std::fill(gradient.begin(), gradient.end(), 0.0);
    for (std::size_t n = 0; n < static_cast<std::size_t>(grid.time_steps); ++n) {
        for (std::size_t j = 0; j < extra_.size(); ++j) {
            if (extra_[j].level == n) {
                for (std::size_t i = 0; i < points; ++i) {
                    w[i] += injected[j][i];
                }
            }
        }
        w = steps_.solve_fp(n, w);
        for (std::size_t i = 0; i < points; ++i) {
            gradient[i] += grid.dt * w[i];
        }
    }
    if (gamma_ > 0.0) {
        const auto lap = laplacian_apply(grid, b);
        for (std::size_t i = 0; i < points; ++i) {
            gradient[i] -= gamma_ * lap[i];
        }
    }
    return value;
}

Step2Gradient step2_gradient_u0(const MFGProblem& prob, const PolicyField& q, std::span<const double> b,
                                std::span<const double> g, double gamma)
{
    const auto m = solve_fp(prob, q);
    const LinearInverseStep step(prob, q, m, g, gamma);
    Step2Gradient out;
    out.gradient.assign(prob.grid.spatial_size(), 0.0);
    out.objective = step.objective_and_gradient(b, out.gradient);
    return out;
}

namespace {

Step2Report minimize_step(const LinearInverseStep& step, const Grid& grid, std::span<const double> b_init,
                          double opt_tol, int max_iter)
{
    // Optimise J / dx^d so that the Euclidean gradient seen by BFGS is the L2 gradient.
    const double weight = grid.cell_volume();
    const ObjectiveFunction f = [&](std::span<const double> x, std::span<double> grad) {
        return step.objective_and_gradient(x, grad) / weight;
    };
    OptimOptions opt;
    opt.opt_tol = opt_tol;
    opt.max_iter = max_iter;
    Step2Report report;
    report.initial_objective = step.objective(b_init);
    const auto r = minimize(f, {b_init.begin(), b_init.end()}, opt);
    if (r.status != OptimStatus::Converged) {
        throw ConvergenceError("step (ii) optimisation stopped: " + to_string(r.status),
                               r.first_order_optimality);
    }
    report.b = r.minimizer;
    report.final_objective = r.objective * weight;
    report.first_order_optimality = r.first_order_optimality;
    report.iterations = r.iterations;
    return report;
}

void check_finite(std::span<const double> v, const char* what)
{
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw InvalidArgument(std::string(what) + " contains non-finite values");
        }
    }
}

} // namespace

Step2Report invert_step_u0(const MFGProblem& prob, const PolicyField& q, const ScalarField& m,
                           std::span<const double> g, double gamma, std::span<const double> b_init,
                           double opt_tol, int max_iter, std::vector<Observation> extra)
{
    if (b_init.size() != prob.grid.spatial_size()) {
        throw InvalidArgument("initial obstacle has wrong length");
    }
    const LinearInverseStep step(prob, q, m, g, gamma, std::move(extra));
    return minimize_step(step, prob.grid, b_init, opt_tol, max_iter);
}

double relative_error(const Grid& grid, std::span<const double> b, std::span<const double> b_true)
{
    std::vector<double> diff(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
        diff[i] = b[i] - b_true[i];
    }
    return l2_norm(grid, diff) / l2_norm(grid, b_true);
}

InverseResult policy_iteration_inverse(const MFGProblem& prob, const InverseData& data, const PolicyField& q0,
                                       const InverseOptions& options)
{
    const auto start = std::chrono::steady_clock::now();
    const Grid& grid = prob.grid;
    if (!(options.tol > 0.0)) {
        throw InvalidArgument("policy iteration tolerance must be positive");
    }
    if (data.g.size() != grid.spatial_size()) {
        throw InvalidArgument("data has wrong length");
    }
    check_finite(data.g, "data");
    for (const auto& obs : data.extra) {
        check_finite(obs.g, "extra observation");
    }
    if (!data.extra.empty() && data.kind != DataKind::InitialValue) {
        throw InvalidArgument("extra observations require initial-value data");
    }
    if (options.b_true && options.b_true->size() != grid.spatial_size()) {
        throw InvalidArgument("ground-truth obstacle has wrong length");
    }

    InverseResult result;
    result.q = q0;
    result.b.assign(grid.spatial_size(), 0.0);
    for (int k = 1; k <= options.max_iter; ++k) {
        const StepSystem steps(grid, result.q, prob.eps, true);
        result.m = solve_fp(prob, steps);
        if (data.kind == DataKind::TerminalRate) {
            result.b = closed_form_b(prob, result.m, data.g);
            result.u = solve_hjb_linear(prob, steps, result.m, result.b);
        } else {
            const LinearInverseStep step(prob, result.q, result.m, data.g, options.gamma, data.extra);
            double tol_k = options.opt_tol;
            if (options.loose_to_tight) {
                tol_k = std::max(options.opt_tol, 1e-6 * std::pow(0.5, k - 1));
            }
            const auto r = minimize_step(step, grid, result.b, tol_k, options.step2_max_iter);
            result.b = r.b;
            result.inner_iterations.push_back(r.iterations);
            result.u = step.state(result.b);
        }
        auto next = policy_update(grid, result.u);
        const double gap = policy_gap(grid, next, result.q);
        result.q = std::move(next);
        result.iterations = k;
        result.policy_gap_history.push_back(gap);
        if (options.b_true) {
            std::vector<double> diff(result.b.size());
            for (std::size_t i = 0; i < diff.size(); ++i) {
                diff[i] = result.b[i] - (*options.b_true)[i];
            }
            result.b_error_history.push_back(l2_norm(grid, diff));
        }
        if (!std::isfinite(gap)) {
            break;
        }
        if (gap < options.tol) {
            result.wall_time_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            return result;
        }
    }
    throw ConvergenceError("inverse policy iteration exceeded its iteration cap",
                           result.policy_gap_history.empty() ? 0.0 : result.policy_gap_history.back());
}

} // namespace mfg
