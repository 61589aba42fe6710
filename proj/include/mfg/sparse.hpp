#ifndef MFG_SPARSE_HPP
#define MFG_SPARSE_HPP

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "mfg/grid.hpp"

namespace mfg {

class SingularMatrixError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Square sparse matrix in compressed-row form with sorted columns per row.
/// Immutable once built.
class SparseOperator {
public:
    SparseOperator() = default;
    /// Duplicate (row, col) entries are summed.
    SparseOperator(std::size_t dimension, std::vector<Triplet> entries);

    std::size_t dimension() const { return dimension_; }
    std::size_t nonzeros() const { return values_.size(); }

    std::span<const std::size_t> row_offsets() const { return row_offsets_; }
    std::span<const std::size_t> columns() const { return columns_; }
    std::span<const double> values() const { return values_; }

    double at(std::size_t row, std::size_t col) const;
    std::vector<double> multiply(std::span<const double> x) const;
    std::vector<double> multiply_transpose(std::span<const double> x) const;
    SparseOperator transpose() const;
    /// Row-major dense copy, for tests and small diagnostics.
    std::vector<double> to_dense() const;

private:
    std::size_t dimension_ = 0;
    std::vector<std::size_t> row_offsets_{0};
    std::vector<std::size_t> columns_;
    std::vector<double> values_;
};

/// Upwind transport matrix Adv[q]: (Adv f)_i = sum_k a_k D-_k f + c_k D+_k f,
/// with a = max(q-, 0), c = min(q+, 0). Every stencil entry is stored, so all
/// transport matrices on one grid share a sparsity pattern.
SparseOperator assemble_transport(const Grid& grid, std::span<const double> q_slice);

/// Implicit Euler FP step A = Id - dt (eps Lap_h + Div_h[q]),  A m^{n+1} = m^n.
SparseOperator assemble_fp_step(const Grid& grid, std::span<const double> q_slice, double eps);

/// Implicit Euler backward HJB step B = Id + dt (-eps Lap_h + Adv_h[q]).
/// B is the transpose of the FP step built from the same policy slice.
SparseOperator assemble_hjb_step(const Grid& grid, std::span<const double> q_slice, double eps);

/// Reusable factorisation of a SparseOperator. Chooses a cyclic tridiagonal
/// elimination when the pattern allows it, a sparse LU up to 10^4 unknowns and
/// a diagonally preconditioned BiCGSTAB beyond that.
class Factorization {
public:
    explicit Factorization(const SparseOperator& op);
    ~Factorization();
    Factorization(Factorization&&) noexcept;
    Factorization& operator=(Factorization&&) noexcept;

    std::vector<double> solve(std::span<const double> rhs) const;
    std::vector<double> solve_transpose(std::span<const double> rhs) const;

    static constexpr double residual_tolerance = 1e-12;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::vector<double> solve(const SparseOperator& op, std::span<const double> rhs);

} // namespace mfg

#endif // MFG_SPARSE_HPP
