#ifndef MFG_DIRECT_LS_HPP
#define MFG_DIRECT_LS_HPP

#include <optional>
#include <span>

#include "mfg/forward.hpp"
#include "mfg/inverse.hpp"

namespace mfg {

struct DirectOptions {
    double fwd_tol = 1e-9;
    double adj_tol = 1e-10;
    int fwd_max_iter = 500;
    int adj_max_iter = 200;
    int max_iter = 1000;
    /// Re-solve every forward MFG from q = 0 instead of the last converged policy.
    bool cold_start = false;
    std::optional<SpatialField> b_true;
};

/// Least-squares misfit of the full nonlinear MFG,
///   Phi(b) = 1/2 ||G u - g||^2 + gamma/2 ||grad_h b||^2,
/// with gradients from the coupled forward-backward adjoint. Terminal-rate
/// data is measured through the PDE right-hand side at T.
class DirectLeastSquares {
public:
    DirectLeastSquares(const MFGProblem& prob, const InverseData& data, double gamma, const DirectOptions& options);

    double objective(std::span<const double> b);
    /// Returns the objective; writes the L2 gradient.
    double objective_and_gradient(std::span<const double> b, std::span<double> gradient);

    /// Forward state of the most recent evaluation.
    const MFGSolution& state() const { return state_; }
    int forward_solves() const { return forward_solves_; }

private:
    void solve_state(std::span<const double> b);

    const MFGProblem& prob_;
    const InverseData& data_;
    double gamma_;
    DirectOptions options_;
    MFGSolution state_;
    PolicyField warm_q_;
    int forward_solves_ = 0;
};

/// Cold-start objective evaluation.
double objective_direct(const MFGProblem& prob, std::span<const double> b, const InverseData& data, double gamma,
                        double fwd_tol);

/// Cold-start adjoint gradient (L2 representer).
SpatialField gradient_direct(const MFGProblem& prob, std::span<const double> b, const InverseData& data,
                             double gamma, double fwd_tol, double adj_tol);

/// BFGS on the direct least-squares objective from b0.
InverseResult direct_ls_solve(const MFGProblem& prob, const InverseData& data, std::span<const double> b0,
                              double gamma, double opt_tol, const DirectOptions& options = {});

} // namespace mfg

#endif // MFG_DIRECT_LS_HPP
