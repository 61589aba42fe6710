#include "mfg/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

namespace mfg {

SparseOperator::SparseOperator(std::size_t dimension, std::vector<Triplet> entries)
    : dimension_(dimension)
{
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    row_offsets_.assign(dimension + 1, 0);
    std::size_t last_row = 0;
    for (const auto& e : entries) {
        if (e.row >= dimension || e.col >= dimension) {
            throw InvalidArgument("sparse entry outside matrix bounds");
        }
        if (!std::isfinite(e.value)) {
            throw InvalidArgument("non-finite sparse entry");
        }
        if (!values_.empty() && last_row == e.row && columns_.back() == e.col) {
            values_.back() += e.value;
        } else {
            columns_.push_back(e.col);
            values_.push_back(e.value);
            row_offsets_[e.row + 1] += 1;
            last_row = e.row;
        }
    }
    std::partial_sum(row_offsets_.begin(), row_offsets_.end(), row_offsets_.begin());
}

double SparseOperator::at(std::size_t row, std::size_t col) const
{
    const auto begin = columns_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[row]);
    const auto end = columns_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[row + 1]);
    const auto it = std::lower_bound(begin, end, col);
    if (it == end || *it != col) {
        return 0.0;
    }
    return values_[static_cast<std::size_t>(it - columns_.begin())];
}

std::vector<double> SparseOperator::multiply(std::span<const double> x) const
{
    std::vector<double> y(dimension_, 0.0);
    for (std::size_t i = 0; i < dimension_; ++i) {
        double acc = 0.0;
        for (std::size_t p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
            acc += values_[p] * x[columns_[p]];
        }
        y[i] = acc;
    }
    return y;
}

std::vector<double> SparseOperator::multiply_transpose(std::span<const double> x) const
{
    std::vector<double> y(dimension_, 0.0);
    for (std::size_t i = 0; i < dimension_; ++i) {
        for (std::size_t p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
            y[columns_[p]] += values_[p] * x[i];
        }
    }
    return y;
}

SparseOperator SparseOperator::transpose() const
{
    std::vector<Triplet> t;
    t.reserve(values_.size());
    for (std::size_t i = 0; i < dimension_; ++i) {
        for (std::size_t p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
            t.push_back({columns_[p], i, values_[p]});
        }
    }
    return {dimension_, std::move(t)};
}

std::vector<double> SparseOperator::to_dense() const
{
    std::vector<double> dense(dimension_ * dimension_, 0.0);
    for (std::size_t i = 0; i < dimension_; ++i) {
        for (std::size_t p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
            dense[i * dimension_ + columns_[p]] = values_[p];
        }
    }
    return dense;
}

SparseOperator assemble_transport(const Grid& grid, std::span<const double> q_slice)
{
    const std::size_t n = grid.spatial_size();
    const std::size_t d = static_cast<std::size_t>(grid.dim);
    if (q_slice.size() != n * 2 * d) {
        throw InvalidArgument("policy slice length does not match grid");
    }
    const double inv_dx = 1.0 / grid.dx;
    std::vector<Triplet> t;
    t.reserve(n * (1 + 2 * d));
    for (std::size_t i = 0; i < n; ++i) {
        double diag = 0.0;
        for (int k = 0; k < grid.dim; ++k) {
            const double a = std::max(q_slice[i * 2 * d + static_cast<std::size_t>(k)], 0.0) * inv_dx;
            const double c = std::min(q_slice[i * 2 * d + d + static_cast<std::size_t>(k)], 0.0) * inv_dx;
            diag += a - c;
            t.push_back({i, grid.neighbor(i, k, -1), -a});
            t.push_back({i, grid.neighbor(i, k, 1), c});
        }
        t.push_back({i, i, diag});
    }
    return {n, std::move(t)};
}

namespace {

std::vector<Triplet> diffusion_step_entries(const Grid& grid, double eps)
{
    const std::size_t n = grid.spatial_size();
    const double r = grid.dt * eps / (grid.dx * grid.dx);
    std::vector<Triplet> t;
    t.reserve(n * (1 + 2 * static_cast<std::size_t>(grid.dim)));
    for (std::size_t i = 0; i < n; ++i) {
        t.push_back({i, i, 1.0 + 2.0 * grid.dim * r});
        for (int k = 0; k < grid.dim; ++k) {
            t.push_back({i, grid.neighbor(i, k, -1), -r});
            t.push_back({i, grid.neighbor(i, k, 1), -r});
        }
    }
    return t;
}

SparseOperator step_operator(const Grid& grid, std::span<const double> q_slice, double eps,
                             bool transposed)
{
    if (!(eps > 0.0)) {
        throw InvalidArgument("diffusion coefficient must be positive");
    }
    auto t = diffusion_step_entries(grid, eps);
    const auto adv = assemble_transport(grid, q_slice);
    const auto rows = adv.row_offsets();
    const auto cols = adv.columns();
    const auto vals = adv.values();
    for (std::size_t i = 0; i < adv.dimension(); ++i) {
        for (std::size_t p = rows[i]; p < rows[i + 1]; ++p) {
            if (transposed) {
                t.push_back({cols[p], i, grid.dt * vals[p]});
            } else {
                t.push_back({i, cols[p], grid.dt * vals[p]});
            }
        }
    }
    return {grid.spatial_size(), std::move(t)};
}

} // namespace

SparseOperator assemble_fp_step(const Grid& grid, std::span<const double> q_slice, double eps)
{
    // -Div_h[q] = Adv_h[q]^T
    return step_operator(grid, q_slice, eps, true);
}

SparseOperator assemble_hjb_step(const Grid& grid, std::span<const double> q_slice, double eps)
{
    return step_operator(grid, q_slice, eps, false);
}

namespace {

/// Cyclic tridiagonal elimination via Sherman-Morrison on a diagonally
/// dominant matrix: no pivoting.
class CyclicTridiagonal {
public:
    static bool applicable(const SparseOperator& op)
    {
        const std::size_t n = op.dimension();
        if (n < 3) {
            return false;
        }
        const auto rows = op.row_offsets();
        const auto cols = op.columns();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t p = rows[i]; p < rows[i + 1]; ++p) {
                const std::size_t off = (cols[p] + n - i) % n;
                if (off != 0 && off != 1 && off != n - 1) {
                    return false;
                }
            }
        }
        return true;
    }

    explicit CyclicTridiagonal(const SparseOperator& op)
        : n_(op.dimension())
        , lower_(n_, 0.0)
        , upper_(n_, 0.0)
        , cprime_(n_, 0.0)
        , denom_(n_, 0.0)
    {
        std::vector<double> diag(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            diag[i] = op.at(i, i);
            lower_[i] = op.at(i, (i + n_ - 1) % n_);
            upper_[i] = op.at(i, (i + 1) % n_);
        }
        // corners: alpha = A(n-1, 0), beta = A(0, n-1)
        alpha_ = upper_[n_ - 1];
        beta_ = lower_[0];
        gamma_ = -diag[0];
        if (gamma_ == 0.0) {
            throw SingularMatrixError("zero leading diagonal in cyclic tridiagonal system");
        }
        diag[0] -= gamma_;
        diag[n_ - 1] -= alpha_ * beta_ / gamma_;

        denom_[0] = diag[0];
        cprime_[0] = upper_[0] / denom_[0];
        for (std::size_t i = 1; i < n_; ++i) {
            denom_[i] = diag[i] - lower_[i] * cprime_[i - 1];
            if (denom_[i] == 0.0 || !std::isfinite(denom_[i])) {
                throw SingularMatrixError("zero pivot in cyclic tridiagonal elimination");
            }
            cprime_[i] = i + 1 < n_ ? upper_[i] / denom_[i] : 0.0;
        }
        std::vector<double> u(n_, 0.0);
        u[0] = gamma_;
        u[n_ - 1] = alpha_;
        z_ = thomas(u);
        correction_denom_ = 1.0 + z_[0] + beta_ * z_[n_ - 1] / gamma_;
        if (correction_denom_ == 0.0) {
            throw SingularMatrixError("singular cyclic tridiagonal system");
        }
    }

    std::vector<double> solve(std::span<const double> rhs) const
    {
        auto x = thomas(rhs);
        const double fact = (x[0] + beta_ * x[n_ - 1] / gamma_) / correction_denom_;
        for (std::size_t i = 0; i < n_; ++i) {
            x[i] -= fact * z_[i];
        }
        return x;
    }

private:
    std::vector<double> thomas(std::span<const double> r) const
    {
        std::vector<double> x(n_);
        x[0] = r[0] / denom_[0];
        for (std::size_t i = 1; i < n_; ++i) {
            x[i] = (r[i] - lower_[i] * x[i - 1]) / denom_[i];
        }
        for (std::size_t i = n_ - 1; i-- > 0;) {
            x[i] -= cprime_[i] * x[i + 1];
        }
        return x;
    }

    std::size_t n_;
    std::vector<double> lower_;
    std::vector<double> upper_;
    std::vector<double> cprime_;
    std::vector<double> denom_;
    std::vector<double> z_;
    double alpha_ = 0.0;
    double beta_ = 0.0;
    double gamma_ = 0.0;
    double correction_denom_ = 1.0;
};

using EigenSparse = Eigen::SparseMatrix<double>;

EigenSparse to_eigen(const SparseOperator& op)
{
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(op.nonzeros());
    const auto rows = op.row_offsets();
    const auto cols = op.columns();
    const auto vals = op.values();
    for (std::size_t i = 0; i < op.dimension(); ++i) {
        for (std::size_t p = rows[i]; p < rows[i + 1]; ++p) {
            t.emplace_back(static_cast<int>(i), static_cast<int>(cols[p]), vals[p]);
        }
    }
    const auto n = static_cast<Eigen::Index>(op.dimension());
    EigenSparse m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

double norm2(std::span<const double> v)
{
    double acc = 0.0;
    for (double x : v) {
        acc += x * x;
    }
    return std::sqrt(acc);
}

constexpr std::size_t direct_limit = 10000;

} // namespace

struct Factorization::Impl {
    SparseOperator op;
    SparseOperator op_t;
    std::unique_ptr<CyclicTridiagonal> cyclic;
    std::unique_ptr<CyclicTridiagonal> cyclic_t;
    std::unique_ptr<Eigen::SparseLU<EigenSparse, Eigen::COLAMDOrdering<int>>> lu;
    EigenSparse eigen_op;
    EigenSparse eigen_op_t;

    std::vector<double> raw_solve(std::span<const double> rhs, bool transposed) const
    {
        const auto n = static_cast<Eigen::Index>(op.dimension());
        if (cyclic) {
            return transposed ? cyclic_t->solve(rhs) : cyclic->solve(rhs);
        }
        Eigen::Map<const Eigen::VectorXd> b(rhs.data(), n);
        Eigen::VectorXd x;
        if (lu) {
            x = transposed ? Eigen::VectorXd(lu->transpose().solve(b)) : Eigen::VectorXd(lu->solve(b));
        } else {
            Eigen::BiCGSTAB<EigenSparse, Eigen::DiagonalPreconditioner<double>> it;
            it.setTolerance(1e-14);
            it.setMaxIterations(10 * static_cast<int>(n));
            it.compute(transposed ? eigen_op_t : eigen_op);
            x = it.solve(b);
        }
        return {x.data(), x.data() + n};
    }

    std::vector<double> checked_solve(std::span<const double> rhs, bool transposed) const
    {
        const double rhs_norm = norm2(rhs);
        if (rhs_norm == 0.0) {
            return std::vector<double>(rhs.size(), 0.0);
        }
        const SparseOperator& a = transposed ? op_t : op;
        auto x = raw_solve(rhs, transposed);
        for (int pass = 0; pass < 3; ++pass) {
            auto r = a.multiply(x);
            for (std::size_t i = 0; i < r.size(); ++i) {
                r[i] = rhs[i] - r[i];
            }
            const double rel = norm2(r) / rhs_norm;
            if (!std::isfinite(rel)) {
                break;
            }
            if (rel <= residual_tolerance) {
                return x;
            }
            // iterative refinement
            const auto dx = raw_solve(r, transposed);
            for (std::size_t i = 0; i < x.size(); ++i) {
                x[i] += dx[i];
            }
        }
        throw SingularMatrixError("linear solve did not reach relative residual "
                                  + std::to_string(residual_tolerance));
    }
};

Factorization::Factorization(const SparseOperator& op)
    : impl_(std::make_unique<Impl>())
{
    impl_->op = op;
    impl_->op_t = op.transpose();
    if (CyclicTridiagonal::applicable(op)) {
        impl_->cyclic = std::make_unique<CyclicTridiagonal>(impl_->op);
        impl_->cyclic_t = std::make_unique<CyclicTridiagonal>(impl_->op_t);
        return;
    }
    impl_->eigen_op = to_eigen(op);
    if (op.dimension() <= direct_limit) {
        impl_->lu = std::make_unique<Eigen::SparseLU<EigenSparse, Eigen::COLAMDOrdering<int>>>();
        impl_->lu->compute(impl_->eigen_op);
        if (impl_->lu->info() != Eigen::Success) {
            throw SingularMatrixError("sparse LU factorisation failed: " + impl_->lu->lastErrorMessage());
        }
    } else {
        impl_->eigen_op_t = to_eigen(impl_->op_t);
    }
}

Factorization::~Factorization() = default;
Factorization::Factorization(Factorization&&) noexcept = default;
Factorization& Factorization::operator=(Factorization&&) noexcept = default;

std::vector<double> Factorization::solve(std::span<const double> rhs) const
{
    if (rhs.size() != impl_->op.dimension()) {
        throw InvalidArgument("right-hand side length does not match operator");
    }
    return impl_->checked_solve(rhs, false);
}

std::vector<double> Factorization::solve_transpose(std::span<const double> rhs) const
{
    if (rhs.size() != impl_->op.dimension()) {
        throw InvalidArgument("right-hand side length does not match operator");
    }
    return impl_->checked_solve(rhs, true);
}

std::vector<double> solve(const SparseOperator& op, std::span<const double> rhs)
{
    return Factorization(op).solve(rhs);
}

} // namespace mfg
