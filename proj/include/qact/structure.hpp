#pragma once

#include <optional>
#include <vector>

#include "qact/potential.hpp"
#include "qact/spectral.hpp"

namespace qact {

// Q(x) = 2 m-tilde (V-tilde - v_min) / hbar^2 on a grid, with v_min = E_gr.
struct QuantumPotentialProfile {
    Grid grid;
    GridFunction q;                  // equals U^2; >= 0
    double v_min = 0.0;              // ground energy
    double hbar = 1.0;
    std::vector<int> ansatz_exponents;    // when fitted
    std::vector<double> ansatz_products;  // m-tilde v-tilde_k per exponent
    double ansatz_residual = 0.0;
    bool ansatz_complete = true;
    std::size_t max_index = 0;       // grid index of the psi maximum
};

struct SusyPair {
    GridFunction v_minus;  // input potential, hbar = 2m = 1 units
    GridFunction v_plus;
    GridFunction superpotential;
    double ground_energy = 0.0;
    GridFunction ground_state;
};

// V(x) = E_gr + (hbar^2/2m) (Laplacian psi)/psi; boundary cells excluded
// (copied from the nearest interior value).
GridFunction reconstruct_classical_potential(const GridFunction& psi_gr, double E_gr,
                                             double m, double hbar);

struct MassEstimate {
    double mass = 0.0;
    double scatter = 0.0;  // relative rms over admissible points
    bool consistent = true;
};

MassEstimate reconstruct_mass(const GridFunction& psi_gr, const GridFunction& psi_ex,
                              double E_gr, double E_ex, double hbar);

QuantumPotentialProfile quantum_potential_from_ground_state(
    const GridFunction& psi_gr, double E_gr, double hbar,
    const std::vector<int>& ansatz_exponents = {});

// Inverts the 1D ground-state law: psi = exp(-int sqrt(Q)) from the psi
// maximum outward, grid-normalized.
GridFunction ground_state_from_quantum_potential(const QuantumPotentialProfile& profile);

// Pointwise residual of the explicit 1D transform law relating
// 2 m-tilde (V-tilde - v0) to 2 m (V - E_gr). Excluded window near the psi
// maximum is set to zero.
GridFunction transform_law_residual(const PotentialSpec& classical,
                                    const QuantumPotentialProfile& profile, double E_gr);

// Spectrum of H = -d^2/dx^2 + V (hbar = 2m = 1 units) for a grid potential.
SpectralData eigensolve_unit(const GridFunction& v, std::size_t k);

// Builds the partner potential of V- for H = -d^2/dx^2 + V-.
SusyPair susy_partner(const GridFunction& v_minus, std::size_t eigensolve_states = 8);

struct SusyEquivalenceReport {
    double max_deviation = 0.0;  // max |W^2 - Q| on the shared bulk region
    bool equivalent = false;
};

SusyEquivalenceReport susy_quantum_equivalence(const SusyPair& pair,
                                               const QuantumPotentialProfile& profile);

}  // namespace qact
