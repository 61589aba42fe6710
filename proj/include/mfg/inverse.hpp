#ifndef MFG_INVERSE_HPP
#define MFG_INVERSE_HPP

#include <optional>
#include <span>
#include <vector>

#include "mfg/forward.hpp"
#include "mfg/optim.hpp"
#include "mfg/pde.hpp"

namespace mfg {

/// Reconstruction produced by either inversion method.
struct InverseResult {
    SpatialField b;
    ScalarField u;
    ScalarField m;
    PolicyField q;
    int iterations = 0;
    std::vector<double> policy_gap_history;
    /// ||b^(k) - b_true||_{L2}; empty without ground truth.
    std::vector<double> b_error_history;
    /// Objective after each accepted optimizer step (direct least squares only).
    std::vector<double> objective_history;
    /// Optimizer iterations spent in each step (ii) (initial-value data only).
    std::vector<int> inner_iterations;
    double wall_time_seconds = 0.0;
};

/// One-shot solution of step (ii) for terminal-rate data:
///   b = -g - eps Lap_h u_T + H_EO(grad u_T) - F(m(., T)).
SpatialField closed_form_b(const MFGProblem& prob, const ScalarField& m, std::span<const double> g);

/// The linear inverse problem of step (ii) for initial-value data, with q and m
/// frozen. The objective
///   1/2 ||u(.,0) - g||^2 + sum_j 1/2 ||u(.,t_j) - g_j||^2 + gamma/2 ||grad_h b||^2
/// is quadratic in b; its L2 gradient comes from one FP-type adjoint sweep.
class LinearInverseStep {
public:
    LinearInverseStep(const MFGProblem& prob, const PolicyField& q, const ScalarField& m,
                      std::span<const double> g, double gamma, std::vector<Observation> extra = {});

    double objective(std::span<const double> b) const;
    /// Returns the objective; writes the L2 (Riesz) gradient.
    double objective_and_gradient(std::span<const double> b, std::span<double> gradient) const;
    ScalarField state(std::span<const double> b) const;
    const StepSystem& steps() const { return steps_; }

private:
    const MFGProblem& prob_;
    const ScalarField& m_;
    StepSystem steps_;
    SpatialField g_;
    double gamma_;
    std::vector<Observation> extra_;
};

struct Step2Gradient {
    double objective = 0.0;
    SpatialField gradient;
};

/// Objective and adjoint gradient of step (ii) with m = solve_fp(q).
Step2Gradient step2_gradient_u0(const MFGProblem& prob, const PolicyField& q, std::span<const double> b,
                                std::span<const double> g, double gamma);

struct Step2Report {
    SpatialField b;
    double initial_objective = 0.0;
    double final_objective = 0.0;
    double first_order_optimality = 0.0;
    int iterations = 0;
};

/// Minimises the step (ii) objective by BFGS from b_init until the sup-norm of
/// the L2 gradient is at most opt_tol. Throws ConvergenceError otherwise.
Step2Report invert_step_u0(const MFGProblem& prob, const PolicyField& q, const ScalarField& m,
                           std::span<const double> g, double gamma, std::span<const double> b_init,
                           double opt_tol, int max_iter = 2000, std::vector<Observation> extra = {});

struct InverseOptions {
    double tol = 1e-9;
    double gamma = 0.0;
    double opt_tol = 1e-10;
    int max_iter = 100;
    int step2_max_iter = 2000;
    /// Start step (ii) at 1e-6 and halve per outer iteration down to opt_tol.
    bool loose_to_tight = false;
    std::optional<SpatialField> b_true;
};

/// Policy iteration for the inverse MFG: (i) FP solve, (ii) linear inversion
/// for b followed by the linear HJB solve, (iii) policy update.
InverseResult policy_iteration_inverse(const MFGProblem& prob, const InverseData& data, const PolicyField& q0,
                                       const InverseOptions& options);

/// Relative discrete L2 error ||b - b_true|| / ||b_true||.
double relative_error(const Grid& grid, std::span<const double> b, std::span<const double> b_true);

} // namespace mfg

#endif // MFG_INVERSE_HPP
