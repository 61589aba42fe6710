#include "mfg/grid.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace mfg {

std::size_t Grid::spatial_size() const
{
    std::size_t n = 1;
    for (int k = 0; k < dim; ++k) {
        n *= static_cast<std::size_t>(points_per_dim);
    }
    return n;
}

double Grid::cell_volume() const
{
    return std::pow(dx, dim);
}

std::size_t Grid::stride(int k) const
{
    // row-major: the last dimension is contiguous
    std::size_t s = 1;
    for (int j = dim - 1; j > k; --j) {
        s *= static_cast<std::size_t>(points_per_dim);
    }
    return s;
}

std::size_t Grid::neighbor(std::size_t index, int k, int shift) const
{
    const std::size_t s = stride(k);
    const auto count = static_cast<std::size_t>(points_per_dim);
    const std::size_t coord = (index / s) % count;
    const long shifted = static_cast<long>(coord) + shift;
    const long n = static_cast<long>(count);
    const auto wrapped = static_cast<std::size_t>(((shifted % n) + n) % n);
    return index - coord * s + wrapped * s;
}

double Grid::coordinate(std::size_t index, int k) const
{
    const std::size_t coord = (index / stride(k)) % static_cast<std::size_t>(points_per_dim);
    return static_cast<double>(coord) * dx;
}

Grid make_grid(int dim, int points_per_dim, int time_steps, double horizon)
{
    if (dim != 1 && dim != 2) {
        throw InvalidArgument("grid dimension must be 1 or 2, got " + std::to_string(dim));
    }
    if (points_per_dim < 4) {
        throw InvalidArgument("points_per_dim must be at least 4");
    }
    if (time_steps < 2) {
        throw InvalidArgument("time_steps must be at least 2");
    }
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw InvalidArgument("horizon must be positive");
    }
    Grid g;
    g.dim = dim;
    g.points_per_dim = points_per_dim;
    g.time_steps = time_steps;
    g.horizon = horizon;
    g.dx = 1.0 / points_per_dim;
    g.dt = horizon / time_steps;
    return g;
}

ScalarField::ScalarField(const Grid& grid, double fill)
    : levels_(grid.levels())
    , points_(grid.spatial_size())
    , values_(levels_ * points_, fill)
{
}

std::span<double> ScalarField::level(std::size_t n)
{
    assert(n < levels_);
    return {values_.data() + n * points_, points_};
}

std::span<const double> ScalarField::level(std::size_t n) const
{
    assert(n < levels_);
    return {values_.data() + n * points_, points_};
}

SpatialField ScalarField::level_copy(std::size_t n) const
{
    auto s = level(n);
    return {s.begin(), s.end()};
}

PolicyField::PolicyField(const Grid& grid, double fill)
    : levels_(grid.levels())
    , points_(grid.spatial_size())
    , components_(grid.slope_components())
    , values_(levels_ * points_ * components_, fill)
{
}

std::span<double> PolicyField::level(std::size_t n)
{
    assert(n < levels_);
    const std::size_t len = points_ * components_;
    return {values_.data() + n * len, len};
}

std::span<const double> PolicyField::level(std::size_t n) const
{
    assert(n < levels_);
    const std::size_t len = points_ * components_;
    return {values_.data() + n * len, len};
}

namespace {

void check_slice(const Grid& grid, std::size_t len, std::size_t per_point)
{
    if (len != grid.spatial_size() * per_point) {
        throw InvalidArgument("slice length does not match grid");
    }
}

} // namespace

SpatialField laplacian_apply(const Grid& grid, std::span<const double> f)
{
    check_slice(grid, f.size(), 1);
    const double inv_dx2 = 1.0 / (grid.dx * grid.dx);
    SpatialField out(f.size(), 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) {
        double acc = 0.0;
        for (int k = 0; k < grid.dim; ++k) {
            acc += f[grid.neighbor(i, k, 1)] - 2.0 * f[i] + f[grid.neighbor(i, k, -1)];
        }
        out[i] = acc * inv_dx2;
    }
    return out;
}

std::vector<double> one_sided_gradients(const Grid& grid, std::span<const double> f)
{
    check_slice(grid, f.size(), 1);
    const std::size_t d = static_cast<std::size_t>(grid.dim);
    const double inv_dx = 1.0 / grid.dx;
    std::vector<double> out(f.size() * 2 * d);
    for (std::size_t i = 0; i < f.size(); ++i) {
        for (int k = 0; k < grid.dim; ++k) {
            out[i * 2 * d + k] = (f[i] - f[grid.neighbor(i, k, -1)]) * inv_dx;
            out[i * 2 * d + d + k] = (f[grid.neighbor(i, k, 1)] - f[i]) * inv_dx;
        }
    }
    return out;
}

SpatialField eo_hamiltonian(const Grid& grid, std::span<const double> slopes)
{
    check_slice(grid, slopes.size(), grid.slope_components());
    const std::size_t d = static_cast<std::size_t>(grid.dim);
    const std::size_t n = grid.spatial_size();
    SpatialField out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double back = std::max(slopes[i * 2 * d + k], 0.0);
            const double fwd = std::min(slopes[i * 2 * d + d + k], 0.0);
            acc += back * back + fwd * fwd;
        }
        out[i] = 0.5 * acc;
    }
    return out;
}

SpatialField transport_apply(const Grid& grid, std::span<const double> slopes,
                             std::span<const double> f)
{
    check_slice(grid, f.size(), 1);
    check_slice(grid, slopes.size(), grid.slope_components());
    const std::size_t d = static_cast<std::size_t>(grid.dim);
    const double inv_dx = 1.0 / grid.dx;
    SpatialField out(f.size(), 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) {
        double acc = 0.0;
        for (int k = 0; k < grid.dim; ++k) {
            const double a = std::max(slopes[i * 2 * d + k], 0.0);
            const double c = std::min(slopes[i * 2 * d + d + k], 0.0);
            acc += a * (f[i] - f[grid.neighbor(i, k, -1)]) + c * (f[grid.neighbor(i, k, 1)] - f[i]);
        }
        out[i] = acc * inv_dx;
    }
    return out;
}

SpatialField divergence_conservative(const Grid& grid, std::span<const double> m,
                                     std::span<const double> slopes)
{
    check_slice(grid, m.size(), 1);
    check_slice(grid, slopes.size(), grid.slope_components());
    const std::size_t d = static_cast<std::size_t>(grid.dim);
    const double inv_dx = 1.0 / grid.dx;
    SpatialField out(m.size(), 0.0);
    // Scatter the transpose of transport_apply row by row, then negate.
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (int k = 0; k < grid.dim; ++k) {
            const double a = std::max(slopes[i * 2 * d + k], 0.0) * inv_dx * m[i];
            const double c = std::min(slopes[i * 2 * d + d + k], 0.0) * inv_dx * m[i];
            out[i] -= a - c;
            out[grid.neighbor(i, k, -1)] += a;
            out[grid.neighbor(i, k, 1)] -= c;
        }
    }
    return out;
}

double integrate(const Grid& grid, std::span<const double> f)
{
    check_slice(grid, f.size(), 1);
    double acc = 0.0;
    for (double v : f) {
        acc += v;
    }
    return acc * grid.cell_volume();
}

double l2_norm(const Grid& grid, std::span<const double> f)
{
    double acc = 0.0;
    for (double v : f) {
        acc += v * v;
    }
    return std::sqrt(acc * grid.cell_volume());
}

double gradient_energy(const Grid& grid, std::span<const double> f)
{
    const auto slopes = one_sided_gradients(grid, f);
    const std::size_t d = static_cast<std::size_t>(grid.dim);
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        for (std::size_t k = 0; k < d; ++k) {
            const double s = slopes[i * 2 * d + d + k];
            acc += s * s;
        }
    }
    return acc * grid.cell_volume();
}

} // namespace mfg
