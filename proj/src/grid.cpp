#include "pflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pflow/errors.hpp"

namespace pflow {

Grid Grid::line(double lower, double upper, int cells) {
    return Grid(1, {lower, 0.0}, {upper - lower, 1.0}, {cells, 1});
}

Grid Grid::rect(Point lower, Point upper, int nx, int ny) {
    return Grid(2, lower, {upper[0] - lower[0], upper[1] - lower[1]}, {nx, ny});
}

Grid::Grid(int dim, Point origin, Point extent, std::array<int, 2> cells)
    : dim_(dim), origin_(origin), extent_(extent), cells_(cells) {
    if (dim != 1 && dim != 2) throw DomainError("grid dimension must be 1 or 2");
    if (dim == 1) {
        cells_[1] = 1;
        origin_[1] = 0.0;
        extent_[1] = 1.0;
    }
    for (int a = 0; a < dim_; ++a) {
        if (cells_[a] < 3) throw DomainError("grid needs at least 3 cells per axis");
        if (!(extent_[a] > 0.0) || !std::isfinite(extent_[a]))
            throw DomainError("grid extent must be positive and finite");
    }
    spacing_ = {extent_[0] / cells_[0], extent_[1] / cells_[1]};
}

double Grid::max_spacing() const noexcept {
    return dim_ == 1 ? spacing_[0] : std::max(spacing_[0], spacing_[1]);
}

double Grid::min_spacing() const noexcept {
    return dim_ == 1 ? spacing_[0] : std::min(spacing_[0], spacing_[1]);
}

double Grid::cell_volume() const noexcept {
    return dim_ == 1 ? spacing_[0] : spacing_[0] * spacing_[1];
}

Point Grid::center(std::size_t idx) const noexcept {
    Point p{origin_[0] + (ix(idx) + 0.5) * spacing_[0], 0.0};
    if (dim_ == 2) p[1] = origin_[1] + (iy(idx) + 0.5) * spacing_[1];
    return p;
}

Point Grid::upper() const noexcept {
    return {origin_[0] + extent_[0], origin_[1] + extent_[1]};
}

int Grid::layer(std::size_t idx) const noexcept {
    const int i = ix(idx);
    int d = std::min(i, cells_[0] - 1 - i);
    if (dim_ == 2) {
        const int j = iy(idx);
        d = std::min({d, j, cells_[1] - 1 - j});
    }
    return d;
}

bool Grid::inside(const Point& p, double margin_cells) const noexcept {
    for (int a = 0; a < dim_; ++a) {
        const double lo = origin_[a] + margin_cells * spacing_[a];
        const double hi = origin_[a] + extent_[a] - margin_cells * spacing_[a];
        if (p[a] < lo || p[a] > hi) return false;
    }
    return true;
}

bool Grid::operator==(const Grid& o) const noexcept {
    return dim_ == o.dim_ && cells_ == o.cells_ && origin_ == o.origin_ && extent_ == o.extent_;
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
    if (!(a == b)) throw ShapeError(std::string(what) + ": grid mismatch");
}

// ---------------------------------------------------------------------------

DensityField::DensityField(Grid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw ShapeError("density: value count does not match grid");
    for (double v : values_) {
        if (!std::isfinite(v)) throw DomainError("density: non-finite value");
        if (v < -1e-14) throw DomainError("density: negative value " + std::to_string(v));
    }
}

DensityField DensityField::sample(const Grid& grid, const std::function<double(const Point&)>& f) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(grid.center(i));
    return DensityField(grid, std::move(v));
}

double DensityField::mass() const noexcept {
    double s = 0.0;
    for (double v : values_) s += v;
    return s * grid_.cell_volume();
}

double DensityField::max() const noexcept { return *std::max_element(values_.begin(), values_.end()); }
double DensityField::min() const noexcept { return *std::min_element(values_.begin(), values_.end()); }

DensityField DensityField::normalized() const {
    const double m = mass();
    if (!(m > 0.0)) throw DomainError("density: cannot normalize zero mass");
    std::vector<double> v(values_);
    for (double& x : v) x /= m;
    return DensityField(grid_, std::move(v));
}

DensityField DensityField::masked(double floor) const {
    std::vector<double> v(values_);
    for (double& x : v)
        if (x < floor) x = 0.0;
    return DensityField(grid_, std::move(v));
}

// ---------------------------------------------------------------------------

VectorFieldSample::VectorFieldSample(Grid grid) : grid_(std::move(grid)) {
    for (int a = 0; a < grid_.dim(); ++a) comps_[a].assign(grid_.size(), 0.0);
}

VectorFieldSample::VectorFieldSample(Grid grid, std::array<std::vector<double>, 2> components)
    : grid_(std::move(grid)), comps_(std::move(components)) {
    for (int a = 0; a < grid_.dim(); ++a) {
        if (comps_[a].size() != grid_.size()) throw ShapeError("vector field: component size mismatch");
        for (double v : comps_[a])
            if (!std::isfinite(v)) throw DomainError("vector field: non-finite entry");
    }
    if (grid_.dim() == 1) comps_[1].clear();
}

VectorFieldSample VectorFieldSample::sample(const Grid& grid, const std::function<Point(const Point&)>& f) {
    VectorFieldSample out(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) out.set(i, f(grid.center(i)));
    return out;
}

Point VectorFieldSample::at(std::size_t i) const noexcept {
    Point p{comps_[0][i], 0.0};
    if (grid_.dim() == 2) p[1] = comps_[1][i];
    return p;
}

void VectorFieldSample::set(std::size_t i, const Point& v) noexcept {
    comps_[0][i] = v[0];
    if (grid_.dim() == 2) comps_[1][i] = v[1];
}

VectorFieldSample VectorFieldSample::scaled(std::span<const double> factor) const {
    if (factor.size() != grid_.size()) throw ShapeError("vector field: factor size mismatch");
    VectorFieldSample out(*this);
    for (int a = 0; a < grid_.dim(); ++a)
        for (std::size_t i = 0; i < factor.size(); ++i) out.comps_[a][i] *= factor[i];
    return out;
}

VectorFieldSample VectorFieldSample::scaled(double factor) const {
    VectorFieldSample out(*this);
    for (int a = 0; a < grid_.dim(); ++a)
        for (double& v : out.comps_[a]) v *= factor;
    return out;
}

double VectorFieldSample::sup_norm() const noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        const Point p = at(i);
        s = std::max(s, std::hypot(p[0], p[1]));
    }
    return s;
}

VectorFieldSample operator+(const VectorFieldSample& a, const VectorFieldSample& b) {
    require_same_grid(a.grid_, b.grid_, "vector field sum");
    VectorFieldSample out(a);
    for (int k = 0; k < a.grid_.dim(); ++k)
        for (std::size_t i = 0; i < a.grid_.size(); ++i) out.comps_[k][i] += b.comps_[k][i];
    return out;
}

VectorFieldSample operator-(const VectorFieldSample& a, const VectorFieldSample& b) {
    require_same_grid(a.grid_, b.grid_, "vector field difference");
    VectorFieldSample out(a);
    for (int k = 0; k < a.grid_.dim(); ++k)
        for (std::size_t i = 0; i < a.grid_.size(); ++i) out.comps_[k][i] -= b.comps_[k][i];
    return out;
}

// ---------------------------------------------------------------------------

double integrate(const DensityField& field, std::span<const double> integrand) {
    if (integrand.size() != field.size()) throw ShapeError("integrate: grid mismatch");
    const auto v = field.values();
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += integrand[i] * v[i];
    return s * field.grid().cell_volume();
}

double integrate_dx(const Grid& grid, std::span<const double> integrand) {
    if (integrand.size() != grid.size()) throw ShapeError("integrate_dx: grid mismatch");
    double s = 0.0;
    for (double x : integrand) s += x;
    return s * grid.cell_volume();
}

double weighted_inner(const DensityField& field, std::span<const double> weight, const VectorFieldSample& a,
                      const VectorFieldSample& b) {
    require_same_grid(field.grid(), a.grid(), "weighted_inner");
    require_same_grid(field.grid(), b.grid(), "weighted_inner");
    if (weight.size() != field.size()) throw ShapeError("weighted_inner: weight size mismatch");
    const auto v = field.values();
    const int dim = field.grid().dim();
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(weight[i] > 0.0)) throw DomainError("weighted_inner: weight must be positive");
        double dot = a.component(0)[i] * b.component(0)[i];
        if (dim == 2) dot += a.component(1)[i] * b.component(1)[i];
        s += weight[i] * dot * v[i];
    }
    return s * field.grid().cell_volume();
}

namespace {

// Derivative along one axis of a cell-centred array.
void differentiate_axis(std::span<const double> f, const Grid& grid, int axis, std::span<double> out) {
    const int nx = grid.cells()[0];
    const int ny = grid.cells()[1];
    const int n = grid.cells()[axis];
    const double h = grid.spacing(axis);
    auto at = [&](int i, int j) { return f[grid.index(i, j)]; };
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int k = axis == 0 ? i : j;
            auto shifted = [&](int d) { return axis == 0 ? at(i + d, j) : at(i, j + d); };
            double d;
            if (k == 0)
                d = (-3.0 * shifted(0) + 4.0 * shifted(1) - shifted(2)) / (2.0 * h);
            else if (k == n - 1)
                d = (3.0 * shifted(0) - 4.0 * shifted(-1) + shifted(-2)) / (2.0 * h);
            else
                d = (shifted(1) - shifted(-1)) / (2.0 * h);
            out[grid.index(i, j)] = d;
        }
    }
}

}  // namespace

VectorFieldSample gradient_of(std::span<const double> scalar, const Grid& grid) {
    if (scalar.size() != grid.size()) throw ShapeError("gradient_of: grid mismatch");
    VectorFieldSample out(grid);
    for (int a = 0; a < grid.dim(); ++a) differentiate_axis(scalar, grid, a, out.component(a));
    return out;
}

std::vector<double> divergence_of(const VectorFieldSample& field) {
    const Grid& grid = field.grid();
    std::vector<double> div(grid.size(), 0.0);
    std::vector<double> tmp(grid.size());
    for (int a = 0; a < grid.dim(); ++a) {
        differentiate_axis(field.component(a), grid, a, tmp);
        for (std::size_t i = 0; i < div.size(); ++i) div[i] += tmp[i];
    }
    return div;
}

Jacobian jacobian_of(const VectorFieldSample& field) {
    const Grid& grid = field.grid();
    Jacobian J;
    J.entries.assign(grid.size(), {0.0, 0.0, 0.0, 0.0});
    std::vector<double> tmp(grid.size());
    for (int r = 0; r < grid.dim(); ++r) {
        for (int c = 0; c < grid.dim(); ++c) {
            differentiate_axis(field.component(r), grid, c, tmp);
            for (std::size_t i = 0; i < grid.size(); ++i) J.entries[i][r * 2 + c] = tmp[i];
        }
    }
    return J;
}

namespace {

struct AxisStencil {
    int i0;    // left node
    double t;  // fractional position in [0, 1]
};

AxisStencil locate(const Grid& grid, int axis, double x) {
    const int n = grid.cells()[axis];
    const double s = (x - grid.origin()[axis]) / grid.spacing(axis) - 0.5;
    int i0 = static_cast<int>(std::floor(s));
    i0 = std::clamp(i0, 0, n - 2);
    const double t = std::clamp(s - i0, 0.0, 1.0);
    return {i0, t};
}

std::array<double, 4> catmull_rom(double t) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    return {-0.5 * t3 + t2 - 0.5 * t, 1.5 * t3 - 2.5 * t2 + 1.0, -1.5 * t3 + 2.0 * t2 + 0.5 * t, 0.5 * t3 - 0.5 * t2};
}

}  // namespace

double interpolate_linear(const Grid& grid, std::span<const double> values, const Point& p) {
    const AxisStencil sx = locate(grid, 0, p[0]);
    if (grid.dim() == 1)
        return (1.0 - sx.t) * values[grid.index(sx.i0)] + sx.t * values[grid.index(sx.i0 + 1)];
    const AxisStencil sy = locate(grid, 1, p[1]);
    const double v00 = values[grid.index(sx.i0, sy.i0)];
    const double v10 = values[grid.index(sx.i0 + 1, sy.i0)];
    const double v01 = values[grid.index(sx.i0, sy.i0 + 1)];
    const double v11 = values[grid.index(sx.i0 + 1, sy.i0 + 1)];
    return (1.0 - sy.t) * ((1.0 - sx.t) * v00 + sx.t * v10) + sy.t * ((1.0 - sx.t) * v01 + sx.t * v11);
}

double interpolate_cubic(const Grid& grid, std::span<const double> values, const Point& p) {
    const AxisStencil sx = locate(grid, 0, p[0]);
    const auto wx = catmull_rom(sx.t);
    const int nx = grid.cells()[0];
    auto cx = [&](int k) { return std::clamp(sx.i0 - 1 + k, 0, nx - 1); };
    if (grid.dim() == 1) {
        double s = 0.0;
        for (int k = 0; k < 4; ++k) s += wx[k] * values[grid.index(cx(k))];
        return s;
    }
    const AxisStencil sy = locate(grid, 1, p[1]);
    const auto wy = catmull_rom(sy.t);
    const int ny = grid.cells()[1];
    double s = 0.0;
    for (int l = 0; l < 4; ++l) {
        const int j = std::clamp(sy.i0 - 1 + l, 0, ny - 1);
        double row = 0.0;
        for (int k = 0; k < 4; ++k) row += wx[k] * values[grid.index(cx(k), j)];
        s += wy[l] * row;
    }
    return s;
}

double margin_max(const DensityField& field, int layers) {
    const Grid& g = field.grid();
    double m = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.layer(i) < layers) m = std::max(m, field[i]);
    return m;
}

DensityField coarsen(const DensityField& field, int factor) {
    const Grid& g = field.grid();
    const int dim = g.dim();
    std::array<int, 2> nc = g.cells();
    for (int a = 0; a < dim; ++a) {
        if (nc[a] % factor != 0) throw ShapeError("coarsen: cell count not divisible by factor");
        nc[a] /= factor;
    }
    Grid coarse(dim, g.origin(), g.extent(), nc);
    std::vector<double> v(coarse.size(), 0.0);
    const double inv = 1.0 / (dim == 1 ? factor : factor * factor);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const int ci = g.ix(i) / factor;
        const int cj = dim == 2 ? g.iy(i) / factor : 0;
        v[coarse.index(ci, cj)] += field[i] * inv;
    }
    return DensityField(coarse, std::move(v));
}

}  // namespace pflow
