#ifndef MFG_FORWARD_HPP
#define MFG_FORWARD_HPP

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mfg/grid.hpp"
#include "mfg/pde.hpp"

namespace mfg {

struct MFGSolution {
    ScalarField u;
    ScalarField m;
    PolicyField q;
    int iterations = 0;
    std::vector<double> policy_gap_history;
};

/// Two-sided gradients of u at every space-time point. For H(p) = |p|^2/2 the
/// maximiser of q.p - L(q) is p itself, so this is the policy update.
PolicyField policy_update(const Grid& grid, const ScalarField& u);

/// max_n ||q1(.,t_n) - q2(.,t_n)||_{L2}, all slope components, dx^d weights.
double policy_gap(const Grid& grid, const PolicyField& q1, const PolicyField& q2);

/// Policy iteration for the forward MFG with a fixed obstacle b. Stops once
/// the policy gap drops below tol; returns the final (u, m) and the updated
/// policy q = grad u.
MFGSolution policy_iteration_forward(const MFGProblem& prob, std::span<const double> b,
                                     const PolicyField& q0, double tol, int max_iter);

struct MFGResidual {
    double hjb = 0.0; ///< max_n ||HJB residual||_{L2}
    double fp = 0.0;  ///< max_n ||FP residual||_{L2}
};

/// Residuals of the nonlinear discrete MFG evaluated with the policy induced by u.
MFGResidual mfg_residual(const MFGProblem& prob, std::span<const double> b, const ScalarField& u,
                         const ScalarField& m);

enum class DataKind { InitialValue, TerminalRate };

/// How the terminal time derivative d/dt u(.,T) is read off a solution.
enum class TerminalRateStencil {
    BackwardDifference, ///< (u^N - u^{N-1}) / dt
    PdeRightHandSide,   ///< -eps Lap u_T + H(grad u_T) - b - F(m^N)
};

struct Observation {
    std::size_t level = 0;
    SpatialField g;
    SpatialField clean;
};

struct InverseData {
    DataKind kind = DataKind::TerminalRate;
    SpatialField g;
    SpatialField clean;
    double noise_level = 0.0;
    std::uint64_t rng_seed = 0;
    TerminalRateStencil stencil = TerminalRateStencil::PdeRightHandSide;
    /// Additional value-function snapshots u(., t_obs) (initial-value data only).
    std::vector<Observation> extra;
};

/// The measurement G u of a solved state.
SpatialField measure(const MFGProblem& prob, std::span<const double> b, const ScalarField& u,
                     const ScalarField& m, DataKind kind, TerminalRateStencil stencil);

/// Standard normal samples from a 64-bit Mersenne Twister: uniforms are the top
/// 53 bits scaled to [0,1), transformed pairwise with Box-Muller
/// (sqrt(-2 ln(1-u1)) cos/sin(2 pi u2)). Reproducible across platforms.
class NormalSampler {
public:
    explicit NormalSampler(std::uint64_t seed);
    double operator()();

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

struct DataOptions {
    TerminalRateStencil stencil = TerminalRateStencil::PdeRightHandSide;
    double forward_tol = 1e-10;
    int forward_max_iter = 200;
    /// Extra observation times in (0, T); initial-value data only.
    std::vector<double> extra_times;
};

/// Time level of t_obs; rejects times that are not interior grid levels.
std::size_t observation_level(const Grid& grid, double t_obs);

/// Adds i.i.d. N(0, sigma^2) noise with sigma = noise_level * ||clean||_{L2}.
SpatialField add_noise(const Grid& grid, std::span<const double> clean, double noise_level,
                       NormalSampler& sampler);

InverseData generate_data(const MFGProblem& prob, std::span<const double> b_true, DataKind kind,
                          double noise_level, std::uint64_t seed, const DataOptions& options = {});

} // namespace mfg

#endif // MFG_FORWARD_HPP
