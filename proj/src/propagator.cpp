#include "qact/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace qact {

BoundarySet BoundarySet::uniform_1d(double lo, double hi, std::size_t n, double T) {
    BoundarySet b;
    b.T = T;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        b.sources.push_back({x, 0.0});
    }
    b.sinks = b.sources;
    return b;
}

AmplitudeTable spectral_amplitude(const SpectralData& spectral, const BoundarySet& boundaries,
                                  double hbar) {
    if (boundaries.T <= 0.0) throw std::invalid_argument("spectral_amplitude: T must be positive");
    const std::size_t k = spectral.count();
    if (k < 2) throw std::invalid_argument("spectral_amplitude: need at least two states");

    const double E0 = spectral.eigenvalues.front();
    const double Etop = spectral.eigenvalues.back();
    if (std::exp(-(Etop - E0) * boundaries.T / hbar) > 1e-8)
        throw std::runtime_error(
            "spectral_amplitude: truncated tail above 1e-8; use more states or larger T");

    AmplitudeTable out;
    out.boundaries = boundaries;
    out.backend = "spectral";
    out.error_estimate = std::exp(-(Etop - E0) * boundaries.T / hbar);

    // Interpolated eigenfunction values at sources and sinks.
    std::vector<std::vector<double>> at_src(k), at_snk(k);
    for (std::size_t n = 0; n < k; ++n) {
        const auto& psi = spectral.eigenfunctions[n];
        for (const auto& p : boundaries.sources) at_src[n].push_back(psi.interpolate(p[0], p[1]));
        for (const auto& p : boundaries.sinks) at_snk[n].push_back(psi.interpolate(p[0], p[1]));
    }

    std::vector<double> decay(k);
    for (std::size_t n = 0; n < k; ++n)
        decay[n] = std::exp(-spectral.eigenvalues[n] * boundaries.T / hbar);

    out.G.assign(boundaries.sources.size(),
                 std::vector<double>(boundaries.sinks.size(), 0.0));
    for (std::size_t i = 0; i < boundaries.sources.size(); ++i)
        for (std::size_t j = 0; j < boundaries.sinks.size(); ++j) {
            double g = 0.0;
            for (std::size_t n = 0; n < k; ++n) g += at_src[n][i] * decay[n] * at_snk[n][j];
            out.G[i][j] = g;
        }
    return out;
}

namespace {

// Tridiagonal solve with constant off-diagonal, in place.
void thomas_solve(std::vector<double>& diag, double off, std::vector<double>& rhs) {
    const std::size_t n = rhs.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = off / diag[i - 1];
        diag[i] -= w * off;
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - off * rhs[i + 1]) / diag[i];
}

struct Stepper1D {
    const Grid& grid;
    std::vector<double> V;
    double kin_diag, hop, hbar;

    Stepper1D(const PotentialSpec& spec, const Grid& g) : grid(g), hbar(spec.hbar) {
        const double dx = g.spacing(0);
        kin_diag = spec.hbar * spec.hbar / (spec.mass * dx * dx);
        hop = -0.5 * kin_diag;
        V.resize(g.npts[0]);
        for (std::size_t i = 0; i < g.npts[0]; ++i) V[i] = spec.evaluate(g.coord(0, i));
    }

    // (I + a H) u = rhs
    void implicit_solve(double a, std::vector<double>& u) const {
        std::vector<double> diag(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) diag[i] = 1.0 + a * (kin_diag + V[i]);
        thomas_solve(diag, a * hop, u);
    }

    // u <- (I - a H) u
    void explicit_apply(double a, std::vector<double>& u) const {
        std::vector<double> out(u.size());
        const std::size_t n = u.size();
        for (std::size_t i = 0; i < n; ++i) {
            double hu = (kin_diag + V[i]) * u[i];
            if (i > 0) hu += hop * u[i - 1];
            if (i + 1 < n) hu += hop * u[i + 1];
            out[i] = u[i] - a * hu;
        }
        u.swap(out);
    }

    GridFunction evolve(std::vector<double> u, double T, std::size_t n_steps) const {
        const double dt = T / static_cast<double>(n_steps);
        // Rannacher start: four backward-Euler half steps damp the delta's
        // high modes, then Crank-Nicolson.
        for (int s = 0; s < 4; ++s) implicit_solve(0.5 * dt / hbar, u);
        for (std::size_t s = 2; s < n_steps; ++s) {
            explicit_apply(0.5 * dt / hbar, u);
            implicit_solve(0.5 * dt / hbar, u);
        }
        GridFunction out(grid);
        out.values = std::move(u);
        return out;
    }
};

struct Stepper2D {
    const Grid& grid;
    std::vector<double> V;
    std::array<double, 2> kin_diag{}, hop{};
    double hbar;

    Stepper2D(const PotentialSpec& spec, const Grid& g) : grid(g), hbar(spec.hbar) {
        for (int a = 0; a < 2; ++a) {
            const double dx = g.spacing(a);
            kin_diag[a] = spec.hbar * spec.hbar / (spec.mass * dx * dx);
            hop[a] = -0.5 * kin_diag[a];
        }
        V.resize(g.total_points());
        for (std::size_t ix = 0; ix < g.npts[0]; ++ix)
            for (std::size_t iy = 0; iy < g.npts[1]; ++iy)
                V[g.flat(ix, iy)] = spec.evaluate(g.coord(0, ix), g.coord(1, iy));
    }

    // Apply (I - a A_axis) where A_axis = K_axis + V/2.
    void explicit_axis(int axis, double a, std::vector<double>& u) const {
        const std::size_t nx = grid.npts[0], ny = grid.npts[1];
        std::vector<double> out(u.size());
        for (std::size_t ix = 0; ix < nx; ++ix)
            for (std::size_t iy = 0; iy < ny; ++iy) {
                const std::size_t id = grid.flat(ix, iy);
                double hu = (kin_diag[axis] + 0.5 * V[id]) * u[id];
                if (axis == 0) {
                    if (ix > 0) hu += hop[0] * u[grid.flat(ix - 1, iy)];
                    if (ix + 1 < nx) hu += hop[0] * u[grid.flat(ix + 1, iy)];
                } else {
                    if (iy > 0) hu += hop[1] * u[grid.flat(ix, iy - 1)];
                    if (iy + 1 < ny) hu += hop[1] * u[grid.flat(ix, iy + 1)];
                }
                out[id] = u[id] - a * hu;
            }
        u.swap(out);
    }

    // Solve (I + a A_axis) u = rhs, line by line.
    void implicit_axis(int axis, double a, std::vector<double>& u) const {
        const std::size_t nx = grid.npts[0], ny = grid.npts[1];
        const std::size_t nline = axis == 0 ? nx : ny;
        const std::size_t nperp = axis == 0 ? ny : nx;
        std::vector<double> diag(nline), rhs(nline);
        for (std::size_t p = 0; p < nperp; ++p) {
            for (std::size_t q = 0; q < nline; ++q) {
                const std::size_t id = axis == 0 ? grid.flat(q, p) : grid.flat(p, q);
                diag[q] = 1.0 + a * (kin_diag[axis] + 0.5 * V[id]);
                rhs[q] = u[id];
            }
            thomas_solve(diag, a * hop[axis], rhs);
            for (std::size_t q = 0; q < nline; ++q) {
                const std::size_t id = axis == 0 ? grid.flat(q, p) : grid.flat(p, q);
                u[id] = rhs[q];
            }
        }
    }

    GridFunction evolve(std::vector<double> u, double T, std::size_t n_steps) const {
        const double dt = T / static_cast<double>(n_steps);
        // Damped start: backward-Euler Lie splitting at half step.
        for (int s = 0; s < 4; ++s) {
            implicit_axis(0, 0.5 * dt / hbar, u);
            implicit_axis(1, 0.5 * dt / hbar, u);
        }
        // Peaceman-Rachford ADI for the remaining steps.
        for (std::size_t s = 2; s < n_steps; ++s) {
            explicit_axis(1, 0.5 * dt / hbar, u);
            implicit_axis(0, 0.5 * dt / hbar, u);
            explicit_axis(0, 0.5 * dt / hbar, u);
            implicit_axis(1, 0.5 * dt / hbar, u);
        }
        GridFunction out(grid);
        out.values = std::move(u);
        return out;
    }
};

// Delta at an off-grid source: split 1/(cell volume) onto the bracketing
// nodes with linear weights (preserves the first moment).
std::vector<double> delta_vector(const Grid& g, const std::array<double, 2>& p) {
    std::vector<double> u(g.total_points(), 0.0);
    auto locate = [&](int axis, double q, std::size_t& i0, double& w) {
        double t = (q - g.lo[axis]) / g.spacing(axis);
        t = std::clamp(t, 1.0, static_cast<double>(g.npts[axis] - 2));
        i0 = static_cast<std::size_t>(t);
        if (i0 >= g.npts[axis] - 2) i0 = g.npts[axis] - 3;
        w = t - static_cast<double>(i0);
    };
    std::size_t ix; double wx;
    locate(0, p[0], ix, wx);
    const double amp = 1.0 / g.cell_volume();
    if (g.dimension == 1) {
        u[g.flat(ix)] += (1.0 - wx) * amp;
        u[g.flat(ix + 1)] += wx * amp;
    } else {
        std::size_t iy; double wy;
        locate(1, p[1], iy, wy);
        u[g.flat(ix, iy)] += (1.0 - wx) * (1.0 - wy) * amp;
        u[g.flat(ix + 1, iy)] += wx * (1.0 - wy) * amp;
        u[g.flat(ix, iy + 1)] += (1.0 - wx) * wy * amp;
        u[g.flat(ix + 1, iy + 1)] += wx * wy * amp;
    }
    return u;
}

}  // namespace

SteppingResult stepping_amplitude(const PotentialSpec& spec, const Grid& grid,
                                  const BoundarySet& boundaries, std::size_t n_steps) {
    if (n_steps < 100) throw std::invalid_argument("stepping_amplitude: n_steps >= 100 required");
    for (const auto& p : boundaries.sources)
        if (!grid.contains(p[0], p[1]))
            throw std::invalid_argument("stepping_amplitude: source outside the grid");
    for (const auto& p : boundaries.sinks)
        if (!grid.contains(p[0], p[1]))
            throw std::invalid_argument("stepping_amplitude: sink outside the grid");

    SteppingResult res;
    res.table.boundaries = boundaries;
    res.table.backend = "stepping";
    res.table.G.assign(boundaries.sources.size(),
                       std::vector<double>(boundaries.sinks.size(), 0.0));

    double max_rel_change = 0.0;
    for (std::size_t i = 0; i < boundaries.sources.size(); ++i) {
        auto u0 = delta_vector(grid, boundaries.sources[i]);
        GridFunction coarse, fine;
        if (grid.dimension == 1) {
            Stepper1D st(spec, grid);
            coarse = st.evolve(u0, boundaries.T, n_steps);
            fine = st.evolve(u0, boundaries.T, 2 * n_steps);
        } else {
            Stepper2D st(spec, grid);
            coarse = st.evolve(u0, boundaries.T, n_steps);
            fine = st.evolve(u0, boundaries.T, 2 * n_steps);
        }
        for (std::size_t j = 0; j < boundaries.sinks.size(); ++j) {
            const auto& s = boundaries.sinks[j];
            const double gc = coarse.interpolate(s[0], s[1]);
            const double gf = fine.interpolate(s[0], s[1]);
            res.table.G[i][j] = gf;
            if (gf > 0.0) max_rel_change = std::max(max_rel_change, std::abs(gf - gc) / gf);
        }
        res.kernels.push_back(std::move(fine));
    }
    res.table.error_estimate = max_rel_change;
    if (max_rel_change > 1e-4)
        throw std::runtime_error("stepping_amplitude: step-halving check failed; increase n_steps");
    return res;
}

FeynmanKacProfile feynman_kac_diagnostics(const std::vector<AmplitudeTable>& tables,
                                          double hbar) {
    if (tables.size() < 3)
        throw std::invalid_argument("feynman_kac_diagnostics: need at least 3 transition times");
    for (std::size_t k = 1; k < tables.size(); ++k)
        if (tables[k].boundaries.T <= tables[k - 1].boundaries.T)
            throw std::invalid_argument("feynman_kac_diagnostics: T values must increase");

    FeynmanKacProfile prof;
    for (std::size_t k = 1; k < tables.size(); ++k) {
        const double T0 = tables[k - 1].boundaries.T;
        const double T1 = tables[k].boundaries.T;
        const double g0 = tables[k - 1].at(0, 0);
        const double g1 = tables[k].at(0, 0);
        prof.T_mid.push_back(0.5 * (T0 + T1));
        prof.estimates.push_back(-hbar * (std::log(g1) - std::log(g0)) / (T1 - T0));
    }
    prof.ground_energy = prof.estimates.back();
    // The profile should approach a constant from one side.
    for (std::size_t k = 1; k < prof.estimates.size(); ++k) {
        const double d_prev = std::abs(prof.estimates[k - 1] - prof.ground_energy);
        const double d_here = std::abs(prof.estimates[k] - prof.ground_energy);
        if (d_here > d_prev + 1e-6 * std::abs(prof.ground_energy)) prof.monotone = false;
    }
    return prof;
}

void export_amplitude_csv(std::ostream& os, const AmplitudeTable& table, int dimension) {
    if (dimension == 1)
        os << "T,x_in,x_fi,G,backend\n";
    else
        os << "T,x_in,y_in,x_fi,y_fi,G,backend\n";
    os.precision(12);
    for (std::size_t i = 0; i < table.boundaries.sources.size(); ++i)
        for (std::size_t j = 0; j < table.boundaries.sinks.size(); ++j) {
            const auto& a = table.boundaries.sources[i];
            const auto& b = table.boundaries.sinks[j];
            os << table.boundaries.T << ',' << a[0] << ',';
            if (dimension == 2) os << a[1] << ',';
            os << b[0] << ',';
            if (dimension == 2) os << b[1] << ',';
            os << table.G[i][j] << ',' << table.backend << '\n';
        }
}

}  // namespace qact
