#include "mfg/pde.hpp"

#include <algorithm>
#include <cmath>

namespace mfg {

double Coupling::value(double m) const
{
    if (!enabled) {
        return 0.0;
    }
    if (exponent == 2.0) {
        return m * m;
    }
    return std::pow(std::max(m, 0.0), exponent);
}

double Coupling::derivative(double m) const
{
    if (!enabled) {
        return 0.0;
    }
    if (exponent == 2.0) {
        return 2.0 * m;
    }
    return exponent * std::pow(std::max(m, 0.0), exponent - 1.0);
}

MFGProblem make_problem(const Grid& grid, double eps, SpatialField m0, SpatialField uT,
                        double coupling_exponent)
{
    const std::size_t n = grid.spatial_size();
    if (m0.size() != n || uT.size() != n) {
        throw InvalidArgument("initial density and terminal cost must have I^d entries");
    }
    if (!(eps > 0.0)) {
        throw InvalidArgument("diffusion coefficient must be positive");
    }
    if (!(coupling_exponent > 0.0)) {
        throw InvalidArgument("coupling exponent must be positive");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(m0[i]) || !std::isfinite(uT[i])) {
            throw InvalidArgument("non-finite initial or terminal data");
        }
        if (m0[i] < 0.0) {
            throw InvalidArgument("initial density must be nonnegative");
        }
    }
    const double mass = integrate(grid, m0);
    if (!(mass > 0.0)) {
        throw InvalidArgument("initial density has zero mass");
    }
    for (double& v : m0) {
        v /= mass;
    }
    MFGProblem p;
    p.grid = grid;
    p.eps = eps;
    p.m0 = std::move(m0);
    p.uT = std::move(uT);
    p.coupling.exponent = coupling_exponent;
    return p;
}

StepSystem::StepSystem(const Grid& grid, const PolicyField& q, double eps, bool cache)
    : grid_(grid)
    , q_(q)
    , eps_(eps)
    , cache_(cache)
    , factors_(cache ? static_cast<std::size_t>(grid.time_steps) : 0)
{
    if (q.levels() != grid.levels() || q.points() != grid.spatial_size()
        || q.components() != grid.slope_components()) {
        throw InvalidArgument("policy field does not match grid");
    }
}

const Factorization& StepSystem::factor(std::size_t n, std::optional<Factorization>& scratch) const
{
    if (n >= static_cast<std::size_t>(grid_.time_steps)) {
        throw InvalidArgument("time step index out of range");
    }
    auto& slot = cache_ ? factors_[n] : scratch;
    if (!slot) {
        slot.emplace(assemble_hjb_step(grid_, q_.level(n), eps_));
    }
    return *slot;
}

std::vector<double> StepSystem::solve_fp(std::size_t n, std::span<const double> rhs) const
{
    std::optional<Factorization> scratch;
    return factor(n, scratch).solve_transpose(rhs);
}

std::vector<double> StepSystem::solve_hjb(std::size_t n, std::span<const double> rhs) const
{
    std::optional<Factorization> scratch;
    return factor(n, scratch).solve(rhs);
}

SpatialField lagrangian(const Grid& grid, std::span<const double> q_slice)
{
    // Same quadratic form as the EO Hamiltonian on the slope representation.
    return eo_hamiltonian(grid, q_slice);
}

ScalarField march_forward(const StepSystem& steps, std::span<const double> initial)
{
    const Grid& grid = steps.grid();
    ScalarField x(grid);
    std::copy(initial.begin(), initial.end(), x.level(0).begin());
    for (std::size_t n = 0; n < static_cast<std::size_t>(grid.time_steps); ++n) {
        const auto next = steps.solve_fp(n, x.level(n));
        std::copy(next.begin(), next.end(), x.level(n + 1).begin());
    }
    return x;
}

ScalarField solve_fp(const MFGProblem& prob, const PolicyField& q)
{
    return solve_fp(prob, StepSystem(prob.grid, q, prob.eps, false));
}

ScalarField solve_fp(const MFGProblem& prob, const StepSystem& steps)
{
    return march_forward(steps, prob.m0);
}

ScalarField solve_hjb_linear(const MFGProblem& prob, const PolicyField& q, const ScalarField& m,
                             std::span<const double> b)
{
    return solve_hjb_linear(prob, StepSystem(prob.grid, q, prob.eps, false), m, b);
}

ScalarField solve_hjb_linear(const MFGProblem& prob, const StepSystem& steps, const ScalarField& m,
                             std::span<const double> b)
{
    const Grid& grid = prob.grid;
    const std::size_t points = grid.spatial_size();
    if (b.size() != points || m.levels() != grid.levels() || m.points() != points) {
        throw InvalidArgument("shape mismatch in linear HJB solve");
    }
    ScalarField u(grid);
    std::copy(prob.uT.begin(), prob.uT.end(), u.level(grid.levels() - 1).begin());
    std::vector<double> rhs(points);
    for (std::size_t n = static_cast<std::size_t>(grid.time_steps); n-- > 0;) {
        const auto lag = lagrangian(grid, steps.policy().level(n));
        const auto mn = m.level(n);
        const auto next = u.level(n + 1);
        for (std::size_t i = 0; i < points; ++i) {
            rhs[i] = next[i] + grid.dt * (lag[i] + b[i] + prob.coupling.value(mn[i]));
        }
        const auto un = steps.solve_hjb(n, rhs);
        std::copy(un.begin(), un.end(), u.level(n).begin());
    }
    return u;
}

ScalarField solve_adjoint_w(const MFGProblem& prob, const PolicyField& q, std::span<const double> w0)
{
    if (w0.size() != prob.grid.spatial_size()) {
        throw InvalidArgument("adjoint initial data has wrong length");
    }
    return march_forward(StepSystem(prob.grid, q, prob.eps, false), w0);
}

SparseOperator assemble_density_sensitivity(const Grid& grid, std::span<const double> q_slice,
                                            std::span<const double> m_slice)
{
    const std::size_t n = grid.spatial_size();
    const std::size_t d = static_cast<std::size_t>(grid.dim);
    if (q_slice.size() != n * 2 * d || m_slice.size() != n) {
        throw InvalidArgument("shape mismatch in density sensitivity");
    }
    const double inv_dx2 = 1.0 / (grid.dx * grid.dx);
    std::vector<Triplet> t;
    t.reserve(n * 8 * d);
    // D^T diag(s) D for a one-sided difference between points i and j
    // contributes s/dx^2 * [[1, -1], [-1, 1]] on rows/cols {i, j}.
    auto add_pair = [&](std::size_t i, std::size_t j, double s) {
        t.push_back({i, i, s});
        t.push_back({j, j, s});
        t.push_back({i, j, -s});
        t.push_back({j, i, -s});
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < grid.dim; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            if (q_slice[i * 2 * d + kk] > 0.0) {
                add_pair(i, grid.neighbor(i, k, -1), m_slice[i] * inv_dx2);
            }
            if (q_slice[i * 2 * d + d + kk] < 0.0) {
                add_pair(i, grid.neighbor(i, k, 1), m_slice[i] * inv_dx2);
            }
        }
    }
    return {n, std::move(t)};
}

double space_time_norm(const Grid& grid, const ScalarField& f)
{
    double acc = 0.0;
    for (double v : f.values()) {
        acc += v * v;
    }
    return std::sqrt(acc * grid.cell_volume() * grid.dt);
}

CoupledAdjoint solve_coupled_adjoint(const MFGProblem& prob, const ScalarField& u, const ScalarField& m,
                                     std::span<const double> w_init, std::span<const double> v_term,
                                     double tol, int max_iter)
{
    const Grid& grid = prob.grid;
    const std::size_t points = grid.spatial_size();
    const auto steps_count = static_cast<std::size_t>(grid.time_steps);
    if (!(tol > 0.0)) {
        throw InvalidArgument("adjoint tolerance must be positive");
    }
    if (w_init.size() != points || v_term.size() != points) {
        throw InvalidArgument("adjoint boundary data has wrong length");
    }

    PolicyField q(grid);
    std::vector<SparseOperator> sensitivity;
    sensitivity.reserve(steps_count);
    for (std::size_t n = 0; n < grid.levels(); ++n) {
        const auto s = one_sided_gradients(grid, u.level(n));
        std::copy(s.begin(), s.end(), q.level(n).begin());
    }
    for (std::size_t n = 0; n < steps_count; ++n) {
        sensitivity.push_back(assemble_density_sensitivity(grid, q.level(n), m.level(n + 1)));
    }
    const StepSystem steps(grid, q, prob.eps, true);

    CoupledAdjoint out{ScalarField(grid), ScalarField(grid), 0, 0.0};
    std::vector<double> rhs(points);
    for (int iter = 1; iter <= max_iter; ++iter) {
        ScalarField w(grid);
        std::copy(w_init.begin(), w_init.end(), w.level(0).begin());
        for (std::size_t n = 0; n < steps_count; ++n) {
            const auto kv = sensitivity[n].multiply(out.v.level(n));
            const auto wn = w.level(n);
            for (std::size_t i = 0; i < points; ++i) {
                rhs[i] = wn[i] - grid.dt * kv[i];
            }
            const auto next = steps.solve_fp(n, rhs);
            std::copy(next.begin(), next.end(), w.level(n + 1).begin());
        }

        ScalarField v(grid);
        std::copy(v_term.begin(), v_term.end(), v.level(steps_count).begin());
        for (std::size_t n = steps_count; n-- > 0;) {
            const auto vn1 = v.level(n + 1);
            const auto mn1 = m.level(n + 1);
            for (std::size_t i = 0; i < points; ++i) {
                const double w_ahead = n + 2 <= steps_count ? w.level(n + 2)[i] : 0.0;
                rhs[i] = vn1[i] + grid.dt * prob.coupling.derivative(mn1[i]) * w_ahead;
            }
            const auto vn = steps.solve_hjb(n, rhs);
            std::copy(vn.begin(), vn.end(), v.level(n).begin());
        }

        ScalarField dw = w;
        ScalarField dv = v;
        for (std::size_t i = 0; i < dw.values().size(); ++i) {
            dw.values()[i] -= out.w.values()[i];
            dv.values()[i] -= out.v.values()[i];
        }
        const double change = std::max(space_time_norm(grid, dw), space_time_norm(grid, dv));
        out.w = std::move(w);
        out.v = std::move(v);
        out.iterations = iter;
        out.last_change = change;
        if (!std::isfinite(change)) {
            break;
        }
        if (change < tol) {
            return out;
        }
    }
    throw ConvergenceError("coupled adjoint iteration did not converge", out.last_change);
}

} // namespace mfg
