#ifndef MFG_GRID_HPP
#define MFG_GRID_HPP

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfg {

/// Raised when an argument violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Uniform periodic space-time grid on the flat torus [0,1)^d x [0,T].
///
/// Spatial points are laid out row-major (dimension 0 slowest) and sit at
/// the left endpoints x_i = i*dx. Time levels are t_n = n*dt, n = 0..N.
struct Grid {
    int dim = 1;
    int points_per_dim = 4;
    int time_steps = 2;
    double horizon = 1.0;
    double dx = 0.25;
    double dt = 0.5;

    std::size_t spatial_size() const;
    std::size_t levels() const { return static_cast<std::size_t>(time_steps) + 1; }
    /// Number of slope components stored per spatial point (2d).
    std::size_t slope_components() const { return 2 * static_cast<std::size_t>(dim); }
    /// Quadrature weight dx^d of a single cell.
    double cell_volume() const;

    /// Stride of dimension k in the flat spatial index.
    std::size_t stride(int k) const;
    /// Flat index of the periodic neighbour of `index` shifted by `shift` along dimension k.
    std::size_t neighbor(std::size_t index, int k, int shift) const;
    /// Coordinate along dimension k of the point with flat index `index`.
    double coordinate(std::size_t index, int k) const;
};

Grid make_grid(int dim, int points_per_dim, int time_steps, double horizon);

/// Values on the I^d spatial points of a grid.
using SpatialField = std::vector<double>;

/// Values on all (N+1) x I^d space-time points, time-major.
class ScalarField {
public:
    ScalarField() = default;
    ScalarField(const Grid& grid, double fill = 0.0);

    std::size_t levels() const { return levels_; }
    std::size_t points() const { return points_; }

    std::span<double> level(std::size_t n);
    std::span<const double> level(std::size_t n) const;
    SpatialField level_copy(std::size_t n) const;

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::size_t levels_ = 0;
    std::size_t points_ = 0;
    std::vector<double> values_;
};

/// Two-sided slope representation of a control: for every space-time point
/// the d backward differences followed by the d forward differences.
class PolicyField {
public:
    PolicyField() = default;
    explicit PolicyField(const Grid& grid, double fill = 0.0);

    std::size_t levels() const { return levels_; }
    std::size_t points() const { return points_; }
    std::size_t components() const { return components_; }

    std::span<double> level(std::size_t n);
    std::span<const double> level(std::size_t n) const;

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::size_t levels_ = 0;
    std::size_t points_ = 0;
    std::size_t components_ = 0;
    std::vector<double> values_;
};

// Discrete operators. All take a single spatial slice and wrap periodically.

SpatialField laplacian_apply(const Grid& grid, std::span<const double> f);

/// Backward and forward one-sided differences, 2d components per point.
std::vector<double> one_sided_gradients(const Grid& grid, std::span<const double> f);

/// Engquist-Osher numerical Hamiltonian for H(p) = |p|^2 / 2:
///   1/2 sum_k [ max(D-_k, 0)^2 + min(D+_k, 0)^2 ].
SpatialField eo_hamiltonian(const Grid& grid, std::span<const double> slopes);

/// Upwind transport (q . grad) f induced by the policy `slopes`; this is the
/// linearisation of eo_hamiltonian with respect to the slopes of f.
SpatialField transport_apply(const Grid& grid, std::span<const double> slopes,
                             std::span<const double> f);

/// Discrete div(m q): the negative transpose of transport_apply applied to m.
SpatialField divergence_conservative(const Grid& grid, std::span<const double> m,
                                     std::span<const double> slopes);

/// Rectangular quadrature sum_i f_i dx^d.
double integrate(const Grid& grid, std::span<const double> f);

/// Discrete L2 norm with rectangular quadrature.
double l2_norm(const Grid& grid, std::span<const double> f);

/// ||grad_h f||^2 in L2, using forward differences.
double gradient_energy(const Grid& grid, std::span<const double> f);

} // namespace mfg

#endif // MFG_GRID_HPP
