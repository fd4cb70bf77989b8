#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "qact/grid.hpp"
#include "qact/potential.hpp"
#include "qact/spectral.hpp"

namespace qact {

struct BoundarySet {
    std::vector<std::array<double, 2>> sources;
    std::vector<std::array<double, 2>> sinks;
    double T = 1.0;

    static BoundarySet uniform_1d(double lo, double hi, std::size_t n, double T);
};

// Euclidean transition amplitudes G(x_fi, T; x_in, 0).
struct AmplitudeTable {
    BoundarySet boundaries;
    std::vector<std::vector<double>> G;  // [source][sink]
    std::string backend;
    double error_estimate = 0.0;

    double at(std::size_t i, std::size_t j) const { return G[i][j]; }
};

// G[i][j] = sum_n psi_n(sink_j) exp(-E_n T / hbar) psi_n(source_i).
// Requires the truncated tail to contribute < 1e-8 relative.
AmplitudeTable spectral_amplitude(const SpectralData& spectral, const BoundarySet& boundaries,
                                  double hbar = 1.0);

// Integrates dG/dt = -(1/hbar) H G from a grid delta at the source with
// Crank-Nicolson (Rannacher-smoothed start). Full-grid kernel per source.
struct SteppingResult {
    std::vector<GridFunction> kernels;  // one per source point, at time T
    AmplitudeTable table;
};

SteppingResult stepping_amplitude(const PotentialSpec& spec, const Grid& grid,
                                  const BoundarySet& boundaries, std::size_t n_steps);

struct FeynmanKacProfile {
    double ground_energy = 0.0;
    std::vector<double> T_mid;       // midpoints of successive T intervals
    std::vector<double> estimates;   // -hbar d(ln G)/dT per interval
    bool monotone = true;
};

// E_gr from the decay of ln G between successive transition times
// (fixed boundary pair, first source/sink of each table).
FeynmanKacProfile feynman_kac_diagnostics(const std::vector<AmplitudeTable>& tables,
                                          double hbar = 1.0);

void export_amplitude_csv(std::ostream& os, const AmplitudeTable& table, int dimension);

}  // namespace qact
