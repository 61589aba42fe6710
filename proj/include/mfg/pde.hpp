#ifndef MFG_PDE_HPP
#define MFG_PDE_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mfg/grid.hpp"
#include "mfg/sparse.hpp"

namespace mfg {

/// Raised when an iterative scheme does not reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double last_residual)
        : std::runtime_error(what + " (last residual " + std::to_string(last_residual) + ")")
        , last_residual_(last_residual)
    {
    }
    double last_residual() const { return last_residual_; }

private:
    double last_residual_;
};

/// Congestion cost F(m) = m^alpha. `enabled = false` gives F = 0, used to
/// decouple the system in tests.
struct Coupling {
    double exponent = 2.0;
    bool enabled = true;

    double value(double m) const;
    double derivative(double m) const;
};

/// MFG data with quadratic Hamiltonian H(p) = |p|^2/2.
struct MFGProblem {
    Grid grid;
    double eps = 0.3;
    SpatialField m0;
    SpatialField uT;
    Coupling coupling;
};

/// Validates and normalises m0 to unit mass.
MFGProblem make_problem(const Grid& grid, double eps, SpatialField m0, SpatialField uT,
                        double coupling_exponent = 2.0);

/// Implicit Euler operators for one policy: B_n (backward HJB step) and its
/// transpose A_n (forward FP step), n = 0..N-1. Factorisations are built on
/// first use and optionally kept. Not safe for concurrent use.
class StepSystem {
public:
    StepSystem(const Grid& grid, const PolicyField& q, double eps, bool cache = true);

    const Grid& grid() const { return grid_; }
    const PolicyField& policy() const { return q_; }

    /// Solves A_n x = rhs.
    std::vector<double> solve_fp(std::size_t n, std::span<const double> rhs) const;
    /// Solves B_n x = rhs.
    std::vector<double> solve_hjb(std::size_t n, std::span<const double> rhs) const;

private:
    const Factorization& factor(std::size_t n, std::optional<Factorization>& scratch) const;

    Grid grid_;
    PolicyField q_;
    double eps_;
    bool cache_;
    mutable std::vector<std::optional<Factorization>> factors_;
};

/// L_h(q) = 1/2 sum_k [max(q-_k,0)^2 + min(q+_k,0)^2], the Lagrangian paired with
/// the Engquist-Osher Hamiltonian.
SpatialField lagrangian(const Grid& grid, std::span<const double> q_slice);

/// Forward sweep A_n x^{n+1} = x^n from x^0 = initial.
ScalarField march_forward(const StepSystem& steps, std::span<const double> initial);

ScalarField solve_fp(const MFGProblem& prob, const PolicyField& q);
ScalarField solve_fp(const MFGProblem& prob, const StepSystem& steps);

/// Backward sweep B_n u^n = u^{n+1} + dt (L_h(q^n) + b + F(m^n)), u^N = u_T.
ScalarField solve_hjb_linear(const MFGProblem& prob, const PolicyField& q, const ScalarField& m,
                             std::span<const double> b);
ScalarField solve_hjb_linear(const MFGProblem& prob, const StepSystem& steps, const ScalarField& m,
                             std::span<const double> b);

/// Adjoint of the linear HJB for initial-value data: the FP operator applied
/// to w(.,0) = w0, without normalisation.
ScalarField solve_adjoint_w(const MFGProblem& prob, const PolicyField& q, std::span<const double> w0);

/// Linearisation of Adv[q]^T m with respect to the slopes of u:
///   K = sum_k D-_k^T diag(m [q-_k > 0]) D-_k + D+_k^T diag(m [q+_k < 0]) D+_k,
/// the discrete counterpart of -div(m grad .).
SparseOperator assemble_density_sensitivity(const Grid& grid, std::span<const double> q_slice,
                                            std::span<const double> m_slice);

struct CoupledAdjoint {
    ScalarField w;
    ScalarField v;
    int iterations = 0;
    double last_change = 0.0;
};

/// Adjoint of the nonlinear discrete MFG around a solved state (u, m):
///   A_n w^{n+1} = w^n - dt K_n(m^{n+1}) v^n,             w^0 = w_init,
///   B_n v^n     = v^{n+1} + dt F'(m^{n+1}) w^{n+2},       v^N = v_term,
/// with w^{N+1} = 0 and A_n, B_n built from the two-sided gradients of u^n.
/// Solved by alternating sweeps from v = 0 until both space-time L2 changes
/// drop below tol.
CoupledAdjoint solve_coupled_adjoint(const MFGProblem& prob, const ScalarField& u, const ScalarField& m,
                                     std::span<const double> w_init, std::span<const double> v_term,
                                     double tol, int max_iter = 200);

/// Space-time L2 norm sqrt(dt sum_n ||f^n||^2) over levels 0..N.
double space_time_norm(const Grid& grid, const ScalarField& f);

} // namespace mfg

#endif // MFG_PDE_HPP
