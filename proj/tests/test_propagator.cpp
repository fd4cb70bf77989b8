#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qact/propagator.hpp"

using namespace qact;

namespace {

PotentialSpec harmonic_spec() {
    PotentialSpec s;
    s.add_term(2, 0.5);
    return s;
}

PotentialSpec free_spec() { return PotentialSpec{}; }

PotentialSpec isotonic_spec() {
    PotentialSpec s;
    s.add_term(2, 0.5);
    s.add_term(-2, 5.0);
    return s;
}

// Euclidean oscillator kernel, m = hbar = omega = 1.
double oscillator_kernel(double a, double b, double T) {
    const double s = std::sinh(T), c = std::cosh(T);
    return std::sqrt(1.0 / (2.0 * std::numbers::pi * s)) *
           std::exp(-((a * a + b * b) * c - 2.0 * a * b) / (2.0 * s));
}

double heat_kernel(double a, double b, double T) {
    return std::exp(-(a - b) * (a - b) / (2.0 * T)) / std::sqrt(2.0 * std::numbers::pi * T);
}

SpectralData solve(const PotentialSpec& spec, const Grid& grid, std::size_t k) {
    return eigensolve(discretize_hamiltonian(spec, grid), k);
}

}  // namespace

TEST_CASE("spectral amplitude: harmonic kernel") {
    auto grid = Grid::make_1d(-10.0, 10.0, 2001);
    auto sd = solve(harmonic_spec(), grid, 25);
    BoundarySet b;
    b.T = 1.0;
    b.sources = {{0.0, 0.0}};
    b.sinks = {{0.0, 0.0}};
    auto t = spectral_amplitude(sd, b);
    CHECK(t.at(0, 0) == doctest::Approx(0.3680).epsilon(1e-3));
    CHECK(t.at(0, 0) == doctest::Approx(oscillator_kernel(0, 0, 1.0)).epsilon(1e-3));
}

TEST_CASE("spectral amplitude: free particle") {
    auto grid = Grid::make_1d(-10.0, 10.0, 2001);
    auto sd = solve(free_spec(), grid, 80);
    BoundarySet b;
    b.T = 1.0;
    b.sources = {{0.0, 0.0}};
    b.sinks = {{0.0, 0.0}, {1.0, 0.0}};
    auto t = spectral_amplitude(sd, b);
    CHECK(t.at(0, 0) == doctest::Approx(heat_kernel(0, 0, 1.0)).epsilon(1e-3));
    CHECK(t.at(0, 1) == doctest::Approx(heat_kernel(0, 1, 1.0)).epsilon(1e-3));
}

TEST_CASE("spectral amplitude: truncation guard") {
    auto grid = Grid::make_1d(-10.0, 10.0, 2001);
    auto sd = solve(harmonic_spec(), grid, 5);
    BoundarySet b;
    b.T = 0.5;
    b.sources = {{0.0, 0.0}};
    b.sinks = {{0.0, 0.0}};
    CHECK_THROWS_AS(spectral_amplitude(sd, b), std::runtime_error);
}

TEST_CASE("feynman-kac projection at large T") {
    auto grid = Grid::make_1d(-10.0, 10.0, 2001);
    auto sd = solve(harmonic_spec(), grid, 25);
    const double T = 15.0;  // 15 / (E1 - E0)
    BoundarySet b;
    b.T = T;
    b.sources = {{0.5, 0.0}};
    b.sinks = {{-0.3, 0.0}};
    auto t = spectral_amplitude(sd, b);
    const double psi_a = sd.eigenfunctions[0].interpolate(0.5);
    const double psi_b = sd.eigenfunctions[0].interpolate(-0.3);
    const double limit = psi_a * psi_b * std::exp(-sd.eigenvalues[0] * T);
    CHECK(t.at(0, 0) / limit == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("stepping amplitude: free and harmonic") {
    auto grid = Grid::make_1d(-10.0, 10.0, 2001);
    BoundarySet b;
    b.T = 1.0;
    b.sources = {{0.0, 0.0}};
    b.sinks = {{0.0, 0.0}, {1.0, 0.0}};
    auto rf = stepping_amplitude(free_spec(), grid, b, 400);
    CHECK(rf.table.at(0, 1) == doctest::Approx(std::exp(-0.5) / std::sqrt(2.0 * std::numbers::pi))
                                   .epsilon(1e-3));
    auto rh = stepping_amplitude(harmonic_spec(), grid, b, 400);
    CHECK(rh.table.at(0, 0) == doctest::Approx(0.3680).epsilon(1e-3));
}

TEST_CASE("backend cross-validation on the isotonic potential") {
    auto spec = isotonic_spec();
    auto grid = default_grid_for(spec);
    auto sd = solve(spec, grid, 30);
    auto b = BoundarySet::uniform_1d(0.8, 2.4, 10, 1.0);
    auto ts = spectral_amplitude(sd, b);
    auto tp = stepping_amplitude(spec, grid, b, 400);
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t j = 0; j < 10; ++j) {
            CHECK(ts.at(i, j) > 0.0);
            CHECK(tp.table.at(i, j) == doctest::Approx(ts.at(i, j)).epsilon(1e-3));
        }
}

TEST_CASE("source/sink symmetry") {
    auto spec = isotonic_spec();
    auto grid = default_grid_for(spec);
    auto sd = solve(spec, grid, 30);
    auto b = BoundarySet::uniform_1d(0.8, 2.4, 8, 1.0);
    auto t = spectral_amplitude(sd, b);
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j)
            CHECK(t.at(i, j) == doctest::Approx(t.at(j, i)).epsilon(1e-6));
}

TEST_CASE("semigroup property on the grid") {
    auto spec = harmonic_spec();
    auto grid = Grid::make_1d(-10.0, 10.0, 1001);
    BoundarySet b1;
    b1.T = 0.6;
    b1.sources = {{0.4, 0.0}};
    b1.sinks = {{0.4, 0.0}};
    auto r1 = stepping_amplitude(spec, grid, b1, 300);

    // Evolve the T1 kernel for another T2 by treating every grid point as
    // intermediate: G(a, T1+T2; b) = sum_c G(a,T2;c) G(c,T1;b) dx.
    BoundarySet b2;
    b2.T = 1.0;
    b2.sources = {{0.4, 0.0}};
    b2.sinks = {{-0.2, 0.0}};
    auto r2 = stepping_amplitude(spec, grid, b2, 300);

    auto sd = solve(spec, grid, 25);
    BoundarySet bc;
    bc.T = 0.4;
    bc.sinks = {{-0.2, 0.0}};
    double conv = 0.0;
    for (std::size_t c = 0; c < grid.npts[0]; ++c) {
        const double xc = grid.coord(0, c);
        BoundarySet bs;
        bs.T = 0.4;
        bs.sources = {{xc, 0.0}};
        bs.sinks = {{-0.2, 0.0}};
        // spectral kernel value G(-0.2, 0.4; xc)
        double g = 0.0;
        for (std::size_t n = 0; n < sd.count(); ++n)
            g += sd.eigenfunctions[n].interpolate(-0.2) *
                 std::exp(-sd.eigenvalues[n] * 0.4) * sd.eigenfunctions[n].values[c];
        conv += g * r1.kernels[0].values[c];
    }
    conv *= grid.cell_volume();
    CHECK(conv == doctest::Approx(r2.table.at(0, 0)).epsilon(1e-3));
}

TEST_CASE("feynman-kac diagnostics") {
    auto grid = Grid::make_1d(-10.0, 10.0, 2001);
    auto sd = solve(harmonic_spec(), grid, 25);
    std::vector<AmplitudeTable> tables;
    for (double T : {4.0, 6.0, 8.0, 10.0}) {
        BoundarySet b;
        b.T = T;
        b.sources = {{0.3, 0.0}};
        b.sinks = {{0.3, 0.0}};
        tables.push_back(spectral_amplitude(sd, b));
    }
    auto prof = feynman_kac_diagnostics(tables);
    CHECK(prof.monotone);
    CHECK(std::abs(prof.ground_energy - 0.5) < 1e-3);
}

TEST_CASE("feynman-kac on the isotonic potential") {
    auto spec = isotonic_spec();
    auto grid = default_grid_for(spec);
    auto sd = solve(spec, grid, 20);
    std::vector<AmplitudeTable> tables;
    for (double T : {3.0, 4.0, 5.0, 6.0}) {
        BoundarySet b;
        b.T = T;
        b.sources = {{1.5, 0.0}};
        b.sinks = {{1.5, 0.0}};
        tables.push_back(spectral_amplitude(sd, b));
    }
    auto prof = feynman_kac_diagnostics(tables);
    const double lambda = 0.5 * (1.0 + std::sqrt(41.0));
    CHECK(std::abs(prof.ground_energy - (lambda + 0.5)) < 5e-3);
}

TEST_CASE("feynman-kac on a finite box converges to the box ground energy") {
    const double L = 20.0;
    auto grid = Grid::make_1d(-10.0, 10.0, 2001);
    auto sd = solve(free_spec(), grid, 40);
    std::vector<AmplitudeTable> tables;
    for (double T : {40.0, 60.0, 80.0}) {
        BoundarySet b;
        b.T = T;
        b.sources = {{0.0, 0.0}};
        b.sinks = {{0.0, 0.0}};
        tables.push_back(spectral_amplitude(sd, b));
    }
    auto prof = feynman_kac_diagnostics(tables);
    const double e_box = std::numbers::pi * std::numbers::pi / (2.0 * L * L);
    CHECK(prof.ground_energy == doctest::Approx(e_box).epsilon(1e-2));
    CHECK(prof.ground_energy > 1e-3);  // distinctly not zero
}
