#include <doctest.h>

#include <cmath>

#include "qact/structure.hpp"

using namespace qact;

namespace {

constexpr double kIsoLambda = 3.7015621187164243;  // (1 + sqrt(41)) / 2

PotentialSpec harmonic_spec(double mass = 1.0) {
    PotentialSpec s;
    s.mass = mass;
    s.add_term(2, 0.5 * mass);  // keeps omega = 1 for any mass
    return s;
}

GridFunction exact_isotonic_state(const Grid& g, double lambda) {
    GridFunction psi(g);
    for (std::size_t i = 0; i < g.npts[0]; ++i) {
        const double x = g.coord(0, i);
        psi.values[i] = std::pow(x, lambda) * std::exp(-0.5 * x * x);
    }
    return psi;
}

}  // namespace

TEST_CASE("classical potential reconstructed from the ground state") {
    auto spec = harmonic_spec();
    auto grid = default_grid_for(spec);
    auto sd = eigensolve(discretize_hamiltonian(spec, grid), 2);
    auto v = reconstruct_classical_potential(sd.eigenfunctions[0], sd.eigenvalues[0],
                                             spec.mass, spec.hbar);
    for (std::size_t i = 0; i < grid.npts[0]; ++i) {
        const double x = grid.coord(0, i);
        if (std::abs(x) > 3.0) continue;
        CHECK(std::abs(v.values[i] - 0.5 * x * x) < 1e-4);
    }
}

TEST_CASE("mass recovered from two states") {
    for (double m : {1.0, 1.7}) {
        auto spec = harmonic_spec(m);
        auto grid = default_grid_for(spec);
        auto sd = eigensolve(discretize_hamiltonian(spec, grid), 2);
        auto est = reconstruct_mass(sd.eigenfunctions[0], sd.eigenfunctions[1],
                                    sd.eigenvalues[0], sd.eigenvalues[1], spec.hbar);
        CHECK(est.mass == doctest::Approx(m).epsilon(1e-3));
        CHECK(est.consistent);
    }
}

TEST_CASE("mass estimate rejects mismatched states") {
    auto spec = harmonic_spec();
    auto grid = default_grid_for(spec);
    auto sd = eigensolve(discretize_hamiltonian(spec, grid), 2);
    CHECK_THROWS(reconstruct_mass(sd.eigenfunctions[0], sd.eigenfunctions[1],
                                  sd.eigenvalues[1], sd.eigenvalues[0], spec.hbar));
}

TEST_CASE("quantum potential of the exact isotonic state") {
    // psi = x^lambda exp(-x^2/2) gives Q = lambda^2/x^2 - 2 lambda + x^2.
    auto grid = Grid::make_1d(0.04, 10.0, 2500);
    auto psi = exact_isotonic_state(grid, kIsoLambda);
    auto prof = quantum_potential_from_ground_state(psi, kIsoLambda + 0.5, 1.0, {-2, 0, 2});

    REQUIRE(prof.ansatz_products.size() == 3);
    CHECK(prof.ansatz_products[0] ==
          doctest::Approx(0.5 * kIsoLambda * kIsoLambda).epsilon(1e-5));
    CHECK(prof.ansatz_products[1] == doctest::Approx(-kIsoLambda).epsilon(1e-5));
    CHECK(prof.ansatz_products[2] == doctest::Approx(0.5).epsilon(1e-5));
    CHECK(prof.ansatz_complete);
    CHECK(grid.coord(0, prof.max_index) ==
          doctest::Approx(std::sqrt(kIsoLambda)).epsilon(1e-2));
}

TEST_CASE("quantum potential products from the solved isotonic state") {
    PotentialSpec spec;
    spec.add_term(-2, 5.0);
    spec.add_term(2, 0.5);
    auto grid = default_grid_for(spec);
    auto sd = eigensolve(discretize_hamiltonian(spec, grid), 1);
    CHECK(sd.eigenvalues[0] == doctest::Approx(kIsoLambda + 0.5).epsilon(1e-4));

    auto prof = quantum_potential_from_ground_state(sd.eigenfunctions[0], sd.eigenvalues[0],
                                                    spec.hbar, {-2, 0, 2});
    CHECK(prof.ansatz_products[0] ==
          doctest::Approx(0.5 * kIsoLambda * kIsoLambda).epsilon(1e-3));
    CHECK(prof.ansatz_products[2] == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(prof.ansatz_complete);
}

TEST_CASE("ground state law inverts on a harmonic profile") {
    auto grid = Grid::make_1d(-6.0, 6.0, 1201);
    GridFunction psi(grid);
    for (std::size_t i = 0; i < grid.npts[0]; ++i) {
        const double x = grid.coord(0, i);
        psi.values[i] = std::exp(-0.5 * x * x);
    }
    auto prof = quantum_potential_from_ground_state(psi, 0.5, 1.0);
    auto rec = ground_state_from_quantum_potential(prof);

    double norm2 = 0.0;
    for (double v : psi.values) norm2 += v * v;
    const double scale = std::sqrt(norm2 * grid.cell_volume());
    for (std::size_t i = 0; i < grid.npts[0]; ++i)
        if (std::abs(grid.coord(0, i)) <= 4.0)
            CHECK(std::abs(rec.values[i] - psi.values[i] / scale) < 1e-8);
}

TEST_CASE("multi-valley profiles are rejected") {
    auto grid = Grid::make_1d(-4.0, 4.0, 801);
    QuantumPotentialProfile prof;
    prof.grid = grid;
    prof.q = GridFunction(grid);
    for (std::size_t i = 0; i < grid.npts[0]; ++i) {
        const double x = grid.coord(0, i);
        const double u = x * x - 4.0;
        prof.q.values[i] = 0.25 * u * u;
    }
    prof.max_index = 200;  // one of the two valleys
    CHECK_THROWS_AS(ground_state_from_quantum_potential(prof), std::invalid_argument);
}

TEST_CASE("transform law holds for the isotonic pair") {
    PotentialSpec spec;
    spec.add_term(-2, 5.0);
    spec.add_term(2, 0.5);

    auto grid = Grid::make_1d(0.05, 8.0, 1600);
    auto psi = exact_isotonic_state(grid, kIsoLambda);
    auto prof = quantum_potential_from_ground_state(psi, kIsoLambda + 0.5, 1.0);
    auto res = transform_law_residual(spec, prof, kIsoLambda + 0.5);

    CHECK(res.values[prof.max_index] == 0.0);  // excluded window
    for (std::size_t i = 0; i < grid.npts[0]; ++i) {
        const double x = grid.coord(0, i);
        if (x < 1.0 || x > 3.0) continue;
        CHECK(std::abs(res.values[i]) < 1e-3);
    }
}

TEST_CASE("transform law flags a wrong classical potential") {
    PotentialSpec wrong;
    wrong.add_term(-2, 5.0);
    wrong.add_term(2, 0.8);

    auto grid = Grid::make_1d(0.05, 8.0, 1600);
    auto psi = exact_isotonic_state(grid, kIsoLambda);
    auto prof = quantum_potential_from_ground_state(psi, kIsoLambda + 0.5, 1.0);
    auto res = transform_law_residual(wrong, prof, kIsoLambda + 0.5);

    double worst = 0.0;
    for (std::size_t i = 0; i < grid.npts[0]; ++i) {
        const double x = grid.coord(0, i);
        if (x >= 1.0 && x <= 3.0) worst = std::max(worst, std::abs(res.values[i]));
    }
    CHECK(worst > 0.1);
}

TEST_CASE("susy partner of the shifted oscillator") {
    // V- = x^2 - 1 in hbar = 2m = 1 units: spectrum 0, 2, 4, ...
    auto grid = Grid::make_1d(-10.0, 10.0, 2001);
    GridFunction vm(grid);
    for (std::size_t i = 0; i < grid.npts[0]; ++i) {
        const double x = grid.coord(0, i);
        vm.values[i] = x * x - 1.0;
    }
    auto pair = susy_partner(vm);
    CHECK(std::abs(pair.ground_energy) < 1e-4);

    for (std::size_t i = 0; i < grid.npts[0]; ++i) {
        const double x = grid.coord(0, i);
        const double w = pair.superpotential.values[i];
        if (std::abs(x) <= 3.0) CHECK(std::abs(w + x) < 1e-3);
        // pair invariant W^2 = (V+ + V-)/2 holds by construction in the bulk
        if (std::abs(x) <= 5.0)
            CHECK(std::abs(w * w - 0.5 * (pair.v_plus.values[i] + pair.v_minus.values[i])) <
                  1e-12);
    }

    // V+ = x^2 + 1: spectrum of the partner is the V- spectrum minus the
    // ground level.
    auto partner_of_plus = susy_partner(pair.v_plus);
    CHECK(partner_of_plus.ground_energy == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("susy spectra are degenerate above the ground level") {
    PotentialSpec minus;
    minus.dimension = 1;
    minus.mass = 0.5;  // hbar = 2m = 1 units
    minus.add_term(2, 1.0);
    minus.add_term(0, -1.0);
    PotentialSpec plus = minus;
    plus.terms.clear();
    plus.add_term(2, 1.0);
    plus.add_term(0, 1.0);

    auto grid = Grid::make_1d(-10.0, 10.0, 2001);
    auto sm = eigensolve(discretize_hamiltonian(minus, grid), 4);
    auto sp = eigensolve(discretize_hamiltonian(plus, grid), 3);
    for (std::size_t n = 0; n < 3; ++n)
        CHECK(sp.eigenvalues[n] == doctest::Approx(sm.eigenvalues[n + 1]).epsilon(1e-4));
}

TEST_CASE("superpotential squared matches the quantum potential") {
    auto grid = Grid::make_1d(-10.0, 10.0, 2001);
    GridFunction vm(grid);
    for (std::size_t i = 0; i < grid.npts[0]; ++i) {
        const double x = grid.coord(0, i);
        vm.values[i] = x * x - 1.0;
    }
    auto pair = susy_partner(vm);
    auto prof =
        quantum_potential_from_ground_state(pair.ground_state, pair.ground_energy, 1.0);
    auto rep = susy_quantum_equivalence(pair, prof);
    CHECK(rep.equivalent);

    // Riccati form: W^2 + W' = V- - E0 within discretization error.
    const double h = grid.spacing(0);
    for (std::size_t i = 1; i + 1 < grid.npts[0]; ++i) {
        if (std::abs(grid.coord(0, i)) > 3.0) continue;
        const double w = pair.superpotential.values[i];
        const double dw =
            (pair.superpotential.values[i + 1] - pair.superpotential.values[i - 1]) / (2.0 * h);
        CHECK(std::abs(w * w + dw - (vm.values[i] - pair.ground_energy)) < 5e-3);
    }
}
