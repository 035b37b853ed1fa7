#pragma once

// Uniform cell-centred grids on a truncated box, densities of absolutely
// continuous probability measures on them, and the discrete calculus shared by
// every other module.

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace pflow {

using Point = std::array<double, 2>;

class Grid {
public:
    /// 1D grid of n cells on [lower, upper].
    static Grid line(double lower, double upper, int cells);
    /// 2D grid of nx*ny cells on [lower, upper] (componentwise).
    static Grid rect(Point lower, Point upper, int nx, int ny);

    Grid(int dim, Point origin, Point extent, std::array<int, 2> cells);

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] const Point& origin() const noexcept { return origin_; }
    [[nodiscard]] const Point& extent() const noexcept { return extent_; }
    [[nodiscard]] const std::array<int, 2>& cells() const noexcept { return cells_; }
    [[nodiscard]] const Point& spacing() const noexcept { return spacing_; }
    [[nodiscard]] double spacing(int axis) const noexcept { return spacing_[axis]; }
    /// Largest spacing over the active axes.
    [[nodiscard]] double max_spacing() const noexcept;
    [[nodiscard]] double min_spacing() const noexcept;

    [[nodiscard]] std::size_t size() const noexcept {
        return static_cast<std::size_t>(cells_[0]) * static_cast<std::size_t>(cells_[1]);
    }
    [[nodiscard]] double cell_volume() const noexcept;

    [[nodiscard]] std::size_t index(int i, int j = 0) const noexcept {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(cells_[0]) * static_cast<std::size_t>(j);
    }
    [[nodiscard]] int ix(std::size_t idx) const noexcept { return static_cast<int>(idx % cells_[0]); }
    [[nodiscard]] int iy(std::size_t idx) const noexcept { return static_cast<int>(idx / cells_[0]); }
    [[nodiscard]] Point center(std::size_t idx) const noexcept;
    [[nodiscard]] Point upper() const noexcept;

    /// Number of complete cell layers between the cell and the boundary
    /// (0 for the outermost layer).
    [[nodiscard]] int layer(std::size_t idx) const noexcept;

    /// True if the point lies inside the box shrunk by `margin_cells` cells.
    [[nodiscard]] bool inside(const Point& p, double margin_cells = 0.0) const noexcept;

    bool operator==(const Grid& other) const noexcept;

private:
    int dim_;
    Point origin_;
    Point extent_;
    std::array<int, 2> cells_;
    Point spacing_;
};

/// Cell-averaged nonnegative density on a grid (the discrete u(t,.)).
class DensityField {
public:
    DensityField(Grid grid, std::vector<double> values);

    /// Samples f at cell centres.
    static DensityField sample(const Grid& grid, const std::function<double(const Point&)>& f);

    [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] double operator[](std::size_t i) const noexcept { return values_[i]; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

    [[nodiscard]] double mass() const noexcept;
    [[nodiscard]] double max() const noexcept;
    [[nodiscard]] double min() const noexcept;
    /// Copy rescaled to unit mass.
    [[nodiscard]] DensityField normalized() const;
    /// Copy with cells below `floor` set to zero (nu-null cells).
    [[nodiscard]] DensityField masked(double floor) const;

private:
    Grid grid_;
    std::vector<double> values_;
};

/// Cell-wise samples of a vector field (one array per active axis).
class VectorFieldSample {
public:
    explicit VectorFieldSample(Grid grid);
    VectorFieldSample(Grid grid, std::array<std::vector<double>, 2> components);

    static VectorFieldSample sample(const Grid& grid, const std::function<Point(const Point&)>& f);

    [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
    [[nodiscard]] std::span<const double> component(int axis) const noexcept { return comps_[axis]; }
    [[nodiscard]] std::span<double> component(int axis) noexcept { return comps_[axis]; }
    [[nodiscard]] Point at(std::size_t i) const noexcept;
    void set(std::size_t i, const Point& v) noexcept;

    /// Componentwise scaling by a cell-wise array.
    [[nodiscard]] VectorFieldSample scaled(std::span<const double> factor) const;
    [[nodiscard]] VectorFieldSample scaled(double factor) const;
    /// Sup norm of the Euclidean length.
    [[nodiscard]] double sup_norm() const noexcept;

    friend VectorFieldSample operator+(const VectorFieldSample& a, const VectorFieldSample& b);
    friend VectorFieldSample operator-(const VectorFieldSample& a, const VectorFieldSample& b);

private:
    Grid grid_;
    std::array<std::vector<double>, 2> comps_;
};

/// Midpoint quadrature of integrand * density.
[[nodiscard]] double integrate(const DensityField& field, std::span<const double> integrand);

/// <a, b>_{alpha, nu} = sum weight * (a . b) * v * cellvolume.
[[nodiscard]] double weighted_inner(const DensityField& field, std::span<const double> weight,
                                    const VectorFieldSample& a, const VectorFieldSample& b);

/// Plain sum of integrand * cellvolume (Lebesgue measure).
[[nodiscard]] double integrate_dx(const Grid& grid, std::span<const double> integrand);

/// Second-order central differences inside, second-order one-sided at the
/// boundary cells.
[[nodiscard]] VectorFieldSample gradient_of(std::span<const double> scalar, const Grid& grid);

[[nodiscard]] std::vector<double> divergence_of(const VectorFieldSample& field);

/// Per-cell Jacobian of a vector field, row-major [d phi_r / d x_c].
struct Jacobian {
    std::vector<std::array<double, 4>> entries;
};
[[nodiscard]] Jacobian jacobian_of(const VectorFieldSample& field);

/// Piecewise (bi)linear interpolation of cell-centred values; points outside
/// the hull of cell centres take the nearest value.
[[nodiscard]] double interpolate_linear(const Grid& grid, std::span<const double> values, const Point& p);

/// Catmull-Rom (tensor product) interpolation; C1 in the evaluation point.
[[nodiscard]] double interpolate_cubic(const Grid& grid, std::span<const double> values, const Point& p);

/// Largest density value within the outermost `layers` cell layers.
[[nodiscard]] double margin_max(const DensityField& field, int layers = 2);

/// Cell-averaged coarsening by an integer factor along every active axis.
[[nodiscard]] DensityField coarsen(const DensityField& field, int factor);

void require_same_grid(const Grid& a, const Grid& b, const char* what);

}  // namespace pflow
