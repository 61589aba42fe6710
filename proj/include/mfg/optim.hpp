#ifndef MFG_OPTIM_HPP
#define MFG_OPTIM_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mfg {

/// Returns f(x) and writes the gradient into `grad` (same length as x).
using ObjectiveFunction = std::function<double(std::span<const double> x, std::span<double> grad)>;

enum class OptimStatus { Converged, MaxIterations, LineSearchFailed };

std::string to_string(OptimStatus status);

struct IterationInfo {
    int iteration = 0;
    double objective = 0.0;
    double first_order_optimality = 0.0;
    std::span<const double> x;
};

struct OptimOptions {
    double opt_tol = 1e-10;
    int max_iter = 1000;
    double c1 = 1e-4;
    double c2 = 0.9;
    /// Dense inverse-Hessian BFGS up to this many variables, L-BFGS above.
    std::size_t dense_limit = 4096;
    int lbfgs_memory = 20;
    int max_line_search = 40;
    /// Called after every accepted step.
    std::function<void(const IterationInfo&)> on_iteration;
};

struct OptimReport {
    std::vector<double> minimizer;
    double objective = 0.0;
    /// Sup-norm of the gradient at the minimizer.
    double first_order_optimality = 0.0;
    int iterations = 0;
    int function_evals = 0;
    OptimStatus status = OptimStatus::Converged;
};

/// Quasi-Newton (BFGS) minimisation with a strong Wolfe line search. The first
/// trial step uses H0 = I / ||g0||; the inverse Hessian is rescaled by
/// s'y / y'y before the first update. Updates with s'y <= 0 are skipped.
OptimReport minimize(const ObjectiveFunction& f, std::vector<double> x0, const OptimOptions& options = {});

} // namespace mfg

#endif // MFG_OPTIM_HPP
