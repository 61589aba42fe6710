#include "mfg/forward.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mfg {

PolicyField policy_update(const Grid& grid, const ScalarField& u)
{
    if (u.levels() != grid.levels() || u.points() != grid.spatial_size()) {
        throw InvalidArgument("value function does not match grid");
    }
    PolicyField q(grid);
    for (std::size_t n = 0; n < grid.levels(); ++n) {
        const auto s = one_sided_gradients(grid, u.level(n));
        std::copy(s.begin(), s.end(), q.level(n).begin());
    }
    return q;
}

double policy_gap(const Grid& grid, const PolicyField& q1, const PolicyField& q2)
{
    if (q1.values().size() != q2.values().size()) {
        throw InvalidArgument("policy fields differ in shape");
    }
    double worst = 0.0;
    for (std::size_t n = 0; n < q1.levels(); ++n) {
        const auto a = q1.level(n);
        const auto b = q2.level(n);
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = a[i] - b[i];
            acc += d * d;
        }
        worst = std::max(worst, std::sqrt(acc * grid.cell_volume()));
    }
    return worst;
}

MFGSolution policy_iteration_forward(const MFGProblem& prob, std::span<const double> b,
                                     const PolicyField& q0, double tol, int max_iter)
{
    if (!(tol > 0.0)) {
        throw InvalidArgument("policy iteration tolerance must be positive");
    }
    if (b.size() != prob.grid.spatial_size()) {
        throw InvalidArgument("obstacle has wrong length");
    }
    MFGSolution sol;
    sol.q = q0;
    for (int k = 1; k <= max_iter; ++k) {
        const StepSystem steps(prob.grid, sol.q, prob.eps, true);
        sol.m = solve_fp(prob, steps);
        sol.u = solve_hjb_linear(prob, steps, sol.m, b);
        auto next = policy_update(prob.grid, sol.u);
        const double gap = policy_gap(prob.grid, next, sol.q);
        sol.q = std::move(next);
        sol.iterations = k;
        sol.policy_gap_history.push_back(gap);
        if (!std::isfinite(gap)) {
            break;
        }
        if (gap < tol) {
            return sol;
        }
    }
    throw ConvergenceError("forward policy iteration exceeded its iteration cap",
                           sol.policy_gap_history.empty() ? 0.0 : sol.policy_gap_history.back());
}

MFGResidual mfg_residual(const MFGProblem& prob, std::span<const double> b, const ScalarField& u,
                         const ScalarField& m)
{
    const Grid& grid = prob.grid;
    const std::size_t points = grid.spatial_size();
    MFGResidual r;
    std::vector<double> res(points);
    for (std::size_t n = 0; n < static_cast<std::size_t>(grid.time_steps); ++n) {
        const auto un = u.level(n);
        const auto un1 = u.level(n + 1);
        const auto slopes = one_sided_gradients(grid, un);
        const auto lap_u = laplacian_apply(grid, un);
        const auto ham = eo_hamiltonian(grid, slopes);
        for (std::size_t i = 0; i < points; ++i) {
            res[i] = (un[i] - un1[i]) / grid.dt - prob.eps * lap_u[i] + ham[i] - b[i]
                - prob.coupling.value(m.level(n)[i]);
        }
        r.hjb = std::max(r.hjb, l2_norm(grid, res));

        const auto mn = m.level(n);
        const auto mn1 = m.level(n + 1);
        const auto lap_m = laplacian_apply(grid, mn1);
        const auto div = divergence_conservative(grid, mn1, slopes);
        for (std::size_t i = 0; i < points; ++i) {
            res[i] = (mn1[i] - mn[i]) / grid.dt - prob.eps * lap_m[i] - div[i];
        }
        r.fp = std::max(r.fp, l2_norm(grid, res));
    }
    return r;
}

SpatialField measure(const MFGProblem& prob, std::span<const double> b, const ScalarField& u,
                     const ScalarField& m, DataKind kind, TerminalRateStencil stencil)
{
    const Grid& grid = prob.grid;
    const std::size_t points = grid.spatial_size();
    const std::size_t last = grid.levels() - 1;
    if (kind == DataKind::InitialValue) {
        return u.level_copy(0);
    }
    SpatialField out(points);
    if (stencil == TerminalRateStencil::BackwardDifference) {
        for (std::size_t i = 0; i < points; ++i) {
            out[i] = (u.level(last)[i] - u.level(last - 1)[i]) / grid.dt;
        }
        return out;
    }
    const auto lap = laplacian_apply(grid, prob.uT);
    const auto ham = eo_hamiltonian(grid, one_sided_gradients(grid, prob.uT));
    for (std::size_t i = 0; i < points; ++i) {
        out[i] = -prob.eps * lap[i] + ham[i] - b[i] - prob.coupling.value(m.level(last)[i]);
    }
    return out;
}

NormalSampler::NormalSampler(std::uint64_t seed)
    : engine_(seed)
{
}

double NormalSampler::operator()()
{
    if (spare_) {
        const double z = *spare_;
        spare_.reset();
        return z;
    }
    constexpr double scale = 1.0 / 9007199254740992.0; // 2^-53
    const double u1 = static_cast<double>(engine_() >> 11) * scale;
    const double u2 = static_cast<double>(engine_() >> 11) * scale;
    const double radius = std::sqrt(-2.0 * std::log(1.0 - u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
}

std::size_t observation_level(const Grid& grid, double t_obs)
{
    if (!(t_obs > 0.0) || !(t_obs < grid.horizon)) {
        throw InvalidArgument("observation time must lie in (0, T)");
    }
    const double ratio = t_obs / grid.dt;
    const double nearest = std::round(ratio);
    if (std::abs(ratio - nearest) > 1e-9 * std::max(1.0, ratio)) {
        throw InvalidArgument("observation time is not on a time level");
    }
    return static_cast<std::size_t>(nearest);
}

SpatialField add_noise(const Grid& grid, std::span<const double> clean, double noise_level,
                       NormalSampler& sampler)
{
    SpatialField g(clean.begin(), clean.end());
    if (noise_level == 0.0) {
        return g;
    }
    const double sigma = noise_level * l2_norm(grid, clean);
    for (double& v : g) {
        v += sigma * sampler();
    }
    return g;
}

InverseData generate_data(const MFGProblem& prob, std::span<const double> b_true, DataKind kind,
                          double noise_level, std::uint64_t seed, const DataOptions& options)
{
    if (!(noise_level >= 0.0)) {
        throw InvalidArgument("noise level must be nonnegative");
    }
    if (!options.extra_times.empty() && kind != DataKind::InitialValue) {
        throw InvalidArgument("extra observation times require initial-value data");
    }
    const auto sol = policy_iteration_forward(prob, b_true, PolicyField(prob.grid), options.forward_tol,
                                              options.forward_max_iter);
    InverseData data;
    data.kind = kind;
    data.noise_level = noise_level;
    data.rng_seed = seed;
    data.stencil = options.stencil;
    data.clean = measure(prob, b_true, sol.u, sol.m, kind, options.stencil);

    NormalSampler sampler(seed);
    data.g = add_noise(prob.grid, data.clean, noise_level, sampler);
    for (double t : options.extra_times) {
        Observation obs;
        obs.level = observation_level(prob.grid, t);
        obs.clean = sol.u.level_copy(obs.level);
        obs.g = add_noise(prob.grid, obs.clean, noise_level, sampler);
        data.extra.push_back(std::move(obs));
    }
    return data;
}

} // namespace mfg
