#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace qact {

// Uniform grid with Dirichlet-zero boundaries, 1D or 2D.
// For half-line domains (inverse-power potentials) the lower bound is
// strictly positive.
struct Grid {
    int dimension = 1;
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{0.0, 0.0};
    std::array<std::size_t, 2> npts{0, 0};

    static Grid make_1d(double lo, double hi, std::size_t n) {
        Grid g;
        g.dimension = 1;
        g.lo = {lo, 0.0};
        g.hi = {hi, 0.0};
        g.npts = {n, 1};
        g.validate();
        return g;
    }

    static Grid make_2d(double lox, double hix, std::size_t nx,
                        double loy, double hiy, std::size_t ny) {
        Grid g;
        g.dimension = 2;
        g.lo = {lox, loy};
        g.hi = {hix, hiy};
        g.npts = {nx, ny};
        g.validate();
        return g;
    }

    void validate() const {
        for (int a = 0; a < dimension; ++a) {
            if (npts[a] < 16)
                throw std::invalid_argument("Grid: need at least 16 points per axis");
            if (!(hi[a] > lo[a]))
                throw std::invalid_argument("Grid: empty axis extent");
        }
    }

    double spacing(int axis) const {
        return (hi[axis] - lo[axis]) / static_cast<double>(npts[axis] - 1);
    }

    double coord(int axis, std::size_t i) const {
        return lo[axis] + spacing(axis) * static_cast<double>(i);
    }

    std::size_t total_points() const {
        return dimension == 1 ? npts[0] : npts[0] * npts[1];
    }

    // Row-major flattening: index = ix * ny + iy in 2D.
    std::size_t flat(std::size_t ix, std::size_t iy = 0) const {
        return dimension == 1 ? ix : ix * npts[1] + iy;
    }

    double cell_volume() const {
        double v = spacing(0);
        if (dimension == 2) v *= spacing(1);
        return v;
    }

    bool contains(double x, double y = 0.0) const {
        if (x < lo[0] || x > hi[0]) return false;
        if (dimension == 2 && (y < lo[1] || y > hi[1])) return false;
        return true;
    }
};

// One real value per grid point.
struct GridFunction {
    Grid grid;
    std::vector<double> values;

    GridFunction() = default;
    explicit GridFunction(const Grid& g, double fill = 0.0)
        : grid(g), values(g.total_points(), fill) {}

    double& operator()(std::size_t ix, std::size_t iy = 0) {
        return values[grid.flat(ix, iy)];
    }
    double operator()(std::size_t ix, std::size_t iy = 0) const {
        return values[grid.flat(ix, iy)];
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }

    // Trapezoid-free grid quadrature: sum * cell volume (Dirichlet ends
    // carry negligible weight for decaying states).
    double quadrature() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s * grid.cell_volume();
    }

    double dot(const GridFunction& other) const {
        double s = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) s += values[i] * other.values[i];
        return s * grid.cell_volume();
    }

    // Linear interpolation at an off-grid point.
    double interpolate(double x, double y = 0.0) const;
};

inline double GridFunction::interpolate(double x, double y) const {
    auto locate = [&](int axis, double q, std::size_t& i0, double& w) {
        const double h = grid.spacing(axis);
        double t = (q - grid.lo[axis]) / h;
        if (t < 0.0) t = 0.0;
        const double tmax = static_cast<double>(grid.npts[axis] - 1);
        if (t > tmax) t = tmax;
        i0 = static_cast<std::size_t>(t);
        if (i0 >= grid.npts[axis] - 1) i0 = grid.npts[axis] - 2;
        w = t - static_cast<double>(i0);
    };
    std::size_t ix;
    double wx;
    locate(0, x, ix, wx);
    if (grid.dimension == 1) {
        return (1.0 - wx) * (*this)(ix) + wx * (*this)(ix + 1);
    }
    std::size_t iy;
    double wy;
    locate(1, y, iy, wy);
    return (1.0 - wx) * ((1.0 - wy) * (*this)(ix, iy) + wy * (*this)(ix, iy + 1)) +
           wx * ((1.0 - wy) * (*this)(ix + 1, iy) + wy * (*this)(ix + 1, iy + 1));
}

}  // namespace qact
