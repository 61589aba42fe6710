// Dense reference operators built straight from the stencil definitions.
// Deliberately independent of the library's sparse assembly.
#ifndef MFG_TEST_ORACLE_HPP
#define MFG_TEST_ORACLE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "mfg/grid.hpp"
#include "mfg/pde.hpp"

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline std::size_t wrap_index(const mfg::Grid& g, std::size_t i, int k, int shift)
{
    // Decompose the row-major index by hand.
    const std::size_t I = static_cast<std::size_t>(g.points_per_dim);
    std::vector<std::size_t> c(static_cast<std::size_t>(g.dim));
    std::size_t rest = i;
    for (int j = g.dim - 1; j >= 0; --j) {
        c[static_cast<std::size_t>(j)] = rest % I;
        rest /= I;
    }
    auto& ck = c[static_cast<std::size_t>(k)];
    ck = static_cast<std::size_t>((static_cast<long>(ck) + shift + static_cast<long>(I)) % static_cast<long>(I));
    std::size_t out = 0;
    for (int j = 0; j < g.dim; ++j) {
        out = out * I + c[static_cast<std::size_t>(j)];
    }
    return out;
}

inline MatrixXd laplacian(const mfg::Grid& g)
{
    const auto n = static_cast<Eigen::Index>(g.spatial_size());
    MatrixXd L = MatrixXd::Zero(n, n);
    const double h2 = g.dx * g.dx;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int k = 0; k < g.dim; ++k) {
            L(i, i) -= 2.0 / h2;
            L(i, static_cast<Eigen::Index>(wrap_index(g, static_cast<std::size_t>(i), k, 1))) += 1.0 / h2;
            L(i, static_cast<Eigen::Index>(wrap_index(g, static_cast<std::size_t>(i), k, -1))) += 1.0 / h2;
        }
    }
    return L;
}

/// D-_k (sign = -1) or D+_k (sign = +1).
inline MatrixXd difference(const mfg::Grid& g, int k, int sign)
{
    const auto n = static_cast<Eigen::Index>(g.spatial_size());
    MatrixXd D = MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto j = static_cast<Eigen::Index>(wrap_index(g, static_cast<std::size_t>(i), k, sign));
        if (sign < 0) {
            D(i, i) += 1.0 / g.dx;
            D(i, j) -= 1.0 / g.dx;
        } else {
            D(i, j) += 1.0 / g.dx;
            D(i, i) -= 1.0 / g.dx;
        }
    }
    return D;
}

/// sum_k diag(max(q-_k,0)) D-_k + diag(min(q+_k,0)) D+_k
inline MatrixXd transport(const mfg::Grid& g, const std::vector<double>& q_slice)
{
    const auto n = static_cast<Eigen::Index>(g.spatial_size());
    const std::size_t d = static_cast<std::size_t>(g.dim);
    MatrixXd A = MatrixXd::Zero(n, n);
    for (int k = 0; k < g.dim; ++k) {
        VectorXd a(n), c(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto base = static_cast<std::size_t>(i) * 2 * d;
            a(i) = std::max(q_slice[base + static_cast<std::size_t>(k)], 0.0);
            c(i) = std::min(q_slice[base + d + static_cast<std::size_t>(k)], 0.0);
        }
        A += a.asDiagonal() * difference(g, k, -1) + c.asDiagonal() * difference(g, k, 1);
    }
    return A;
}

inline MatrixXd hjb_step(const mfg::Grid& g, const std::vector<double>& q_slice, double eps)
{
    const auto n = static_cast<Eigen::Index>(g.spatial_size());
    return MatrixXd::Identity(n, n) + g.dt * (-eps * laplacian(g) + transport(g, q_slice));
}

inline MatrixXd fp_step(const mfg::Grid& g, const std::vector<double>& q_slice, double eps)
{
    return hjb_step(g, q_slice, eps).transpose();
}

inline VectorXd to_vec(const std::vector<double>& v)
{
    return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> slice(const mfg::PolicyField& q, std::size_t n)
{
    const auto s = q.level(n);
    return {s.begin(), s.end()};
}

inline std::vector<double> slice(const mfg::ScalarField& f, std::size_t n)
{
    const auto s = f.level(n);
    return {s.begin(), s.end()};
}

inline mfg::PolicyField random_policy(const mfg::Grid& g, std::mt19937& rng, double scale = 2.0)
{
    std::uniform_real_distribution<double> u(-scale, scale);
    mfg::PolicyField q(g);
    for (double& v : q.values()) {
        v = u(rng);
    }
    return q;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937& rng, double lo = -1.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) {
        x = u(rng);
    }
    return v;
}

/// Monolithic space-time solve of the forward sweep A_n x^{n+1} = x^n.
inline MatrixXd forward_space_time(const mfg::Grid& g, const mfg::PolicyField& q, double eps,
                                   const std::vector<double>& x0)
{
    const auto n = static_cast<Eigen::Index>(g.spatial_size());
    const auto L = static_cast<Eigen::Index>(g.levels());
    MatrixXd M = MatrixXd::Zero(n * L, n * L);
    VectorXd rhs = VectorXd::Zero(n * L);
    M.block(0, 0, n, n).setIdentity();
    rhs.head(n) = to_vec(x0);
    for (Eigen::Index t = 0; t + 1 < L; ++t) {
        M.block((t + 1) * n, (t + 1) * n, n, n) = fp_step(g, slice(q, static_cast<std::size_t>(t)), eps);
        M.block((t + 1) * n, t * n, n, n) = -MatrixXd::Identity(n, n);
    }
    VectorXd x = M.partialPivLu().solve(rhs);
    return Eigen::Map<MatrixXd>(x.data(), n, L); // column t = level t
}

inline double quadratic_lagrangian(const std::vector<double>& q_slice, std::size_t i, std::size_t d)
{
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        const double a = std::max(q_slice[i * 2 * d + k], 0.0);
        const double c = std::min(q_slice[i * 2 * d + d + k], 0.0);
        s += 0.5 * (a * a + c * c);
    }
    return s;
}

/// Monolithic space-time solve of the backward linear HJB.
inline MatrixXd hjb_space_time(const mfg::MFGProblem& p, const mfg::PolicyField& q, const mfg::ScalarField& m,
                               const std::vector<double>& b)
{
    const mfg::Grid& g = p.grid;
    const auto n = static_cast<Eigen::Index>(g.spatial_size());
    const auto L = static_cast<Eigen::Index>(g.levels());
    const auto d = static_cast<std::size_t>(g.dim);
    MatrixXd M = MatrixXd::Zero(n * L, n * L);
    VectorXd rhs = VectorXd::Zero(n * L);
    M.block((L - 1) * n, (L - 1) * n, n, n).setIdentity();
    rhs.segment((L - 1) * n, n) = to_vec(p.uT);
    for (Eigen::Index t = 0; t + 1 < L; ++t) {
        const auto qs = slice(q, static_cast<std::size_t>(t));
        const auto ms = slice(m, static_cast<std::size_t>(t));
        M.block(t * n, t * n, n, n) = hjb_step(g, qs, p.eps);
        M.block(t * n, (t + 1) * n, n, n) = -MatrixXd::Identity(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            const double mm = ms[ii];
            const double f = p.coupling.enabled ? std::pow(mm, p.coupling.exponent) : 0.0;
            rhs(t * n + i) = g.dt * (quadratic_lagrangian(qs, ii, d) + b[ii] + f);
        }
    }
    VectorXd x = M.partialPivLu().solve(rhs);
    return Eigen::Map<MatrixXd>(x.data(), n, L);
}

} // namespace oracle

#endif // MFG_TEST_ORACLE_HPP
