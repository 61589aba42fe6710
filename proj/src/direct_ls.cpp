#include "mfg/direct_ls.hpp"

#include <chrono>
#include <cmath>

namespace mfg {

DirectLeastSquares::DirectLeastSquares(const MFGProblem& prob, const InverseData& data, double gamma,
                                       const DirectOptions& options)
    : prob_(prob)
    , data_(data)
    , gamma_(gamma)
    , options_(options)
    , warm_q_(prob.grid)
{
    if (data.g.size() != prob.grid.spatial_size()) {
        throw InvalidArgument("data has wrong length");
    }
    if (!data.extra.empty()) {
        throw InvalidArgument("direct least squares supports a single observation");
    }
    if (data.kind == DataKind::TerminalRate && data.stencil != TerminalRateStencil::PdeRightHandSide) {
        throw InvalidArgument("direct least squares measures terminal-rate data through the PDE right-hand side");
    }
    if (!(gamma >= 0.0)) {
        throw InvalidArgument("regularisation weight must be nonnegative");
    }
}

void DirectLeastSquares::solve_state(std::span<const double> b)
{
    const PolicyField start = options_.cold_start ? PolicyField(prob_.grid) : warm_q_;
    state_ = policy_iteration_forward(prob_, b, start, options_.fwd_tol, options_.fwd_max_iter);
    warm_q_ = state_.q;
    ++forward_solves_;
}

double DirectLeastSquares::objective(std::span<const double> b)
{
    solve_state(b);
    const auto gu = measure(prob_, b, state_.u, state_.m, data_.kind, TerminalRateStencil::PdeRightHandSide);
    std::vector<double> r(gu.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] = gu[i] - data_.g[i];
    }
    const double misfit = l2_norm(prob_.grid, r);
    return 0.5 * misfit * misfit + 0.5 * gamma_ * gradient_energy(prob_.grid, b);
}

double DirectLeastSquares::objective_and_gradient(std::span<const double> b, std::span<double> gradient)
{
    const Grid& grid = prob_.grid;
    const std::size_t points = grid.spatial_size();
    const double value = objective(b);
    const auto gu = measure(prob_, b, state_.u, state_.m, data_.kind, TerminalRateStencil::PdeRightHandSide);
    std::vector<double> r(points);
    for (std::size_t i = 0; i < points; ++i) {
        r[i] = gu[i] - data_.g[i];
    }

    std::vector<double> w_init(points, 0.0);
    std::vector<double> v_term(points, 0.0);
    if (data_.kind == DataKind::InitialValue) {
        w_init = r;
    } else {
        const auto m_final = state_.m.level(grid.levels() - 1);
        for (std::size_t i = 0; i < points; ++i) {
            v_term[i] = -r[i] * prob_.coupling.derivative(m_final[i]);
        }
    }
    const auto adj = solve_coupled_adjoint(prob_, state_.u, state_.m, w_init, v_term, options_.adj_tol,
                                           options_.adj_max_iter);

    std::fill(gradient.begin(), gradient.end(), 0.0);
    for (std::size_t n = 1; n < grid.levels(); ++n) {
        const auto wn = adj.w.level(n);
        for (std::size_t i = 0; i < points; ++i) {
            gradient[i] += grid.dt * wn[i];
        }
    }
    if (data_.kind == DataKind::TerminalRate) {
        for (std::size_t i = 0; i < points; ++i) {
            gradient[i] -= r[i];
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

double objective_direct(const MFGProblem& prob, std::span<const double> b, const InverseData& data, double gamma,
                        double fwd_tol)
{
    DirectOptions opt;
    opt.fwd_tol = fwd_tol;
    opt.cold_start = true;
    DirectLeastSquares ls(prob, data, gamma, opt);
    return ls.objective(b);
}

SpatialField gradient_direct(const MFGProblem& prob, std::span<const double> b, const InverseData& data,
                             double gamma, double fwd_tol, double adj_tol)
{
    DirectOptions opt;
    opt.fwd_tol = fwd_tol;
    opt.adj_tol = adj_tol;
    opt.cold_start = true;
    DirectLeastSquares ls(prob, data, gamma, opt);
    SpatialField grad(prob.grid.spatial_size(), 0.0);
    ls.objective_and_gradient(b, grad);
    return grad;
}

InverseResult direct_ls_solve(const MFGProblem& prob, const InverseData& data, std::span<const double> b0,
                              double gamma, double opt_tol, const DirectOptions& options)
{
    const auto start = std::chrono::steady_clock::now();
    const Grid& grid = prob.grid;
    if (!(opt_tol > 0.0)) {
        throw InvalidArgument("optimality tolerance must be positive");
    }
    if (b0.size() != grid.spatial_size()) {
        throw InvalidArgument("initial obstacle has wrong length");
    }
    DirectLeastSquares ls(prob, data, gamma, options);
    const double weight = grid.cell_volume();
    const ObjectiveFunction f = [&](std::span<const double> x, std::span<double> grad) {
        return ls.objective_and_gradient(x, grad) / weight;
    };

    InverseResult result;
    OptimOptions opt;
    opt.opt_tol = opt_tol;
    opt.max_iter = options.max_iter;
    opt.on_iteration = [&](const IterationInfo& info) {
        result.objective_history.push_back(info.objective * weight);
        if (options.b_true) {
            std::vector<double> diff(info.x.size());
            for (std::size_t i = 0; i < diff.size(); ++i) {
                diff[i] = info.x[i] - (*options.b_true)[i];
            }
            result.b_error_history.push_back(l2_norm(grid, diff));
        }
    };
    const auto report = minimize(f, {b0.begin(), b0.end()}, opt);
    if (report.status != OptimStatus::Converged) {
        throw ConvergenceError("direct least squares stopped: " + to_string(report.status),
                               report.first_order_optimality);
    }
    result.b = report.minimizer;
    result.iterations = report.iterations;
    // Final state at the returned obstacle (the last evaluation may be a rejected trial).
    ls.objective(result.b);
    result.u = ls.state().u;
    result.m = ls.state().m;
    result.q = ls.state().q;
    result.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

} // namespace mfg
