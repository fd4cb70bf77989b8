#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qact/potential.hpp"

namespace qact {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GridConfig {
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{0.0, 0.0};
    std::array<std::size_t, 2> npts{0, 0};
};

struct BoundaryConfig {
    double lo = -1.6;
    double hi = 1.6;
    std::size_t n = 10;
};

struct TransitionConfig {
    std::vector<double> T;
    BoundaryConfig boundary;
    std::size_t states = 60;   // spectral backend truncation
    std::size_t steps = 400;   // stepping backend step count
};

struct FitConfig {
    std::vector<int> ansatz;       // 1D monomial powers
    bool use_2d_full = false;      // "2d-full" ansatz family
    double initial_mass = 1.0;
    std::vector<double> initial_coeffs;
    std::size_t simplex_budget = 400;
    std::size_t newton_budget = 60;
    double tolerance = 1e-12;
    std::size_t trajectory_steps = 0;
};

struct StructureConfig {
    std::vector<int> ansatz;
    std::size_t states = 8;
    bool inject_perturbation = false;  // negative control for validation
};

struct ChaosConfig {
    std::vector<double> energies;  // relative to the potential minimum
    std::size_t samples = 200;
    double horizon = 2000.0;
    double dt = 0.02;
    double renorm_interval = 2.0;
    double threshold = 0.0;  // 0 = calibrate against the integrable baseline
    std::size_t baseline_samples = 40;
    bool quantum = false;    // also run the fitted quantum action
    std::size_t section_orbits = 0;
    double section_tmax = 200.0;
};

struct RunConfig {
    std::uint64_t seed = 1;
    std::string output = "out";
    PotentialSpec potential;
    std::optional<GridConfig> grid;
    std::optional<TransitionConfig> transition;
    std::optional<FitConfig> fit;
    std::optional<StructureConfig> structure;
    std::optional<ChaosConfig> chaos;

    Grid make_grid() const;
};

// Strict parsing: unknown keys anywhere are hard errors.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Resolved configuration echoed as deterministic JSON.
std::string echo_config(const RunConfig& cfg);

}  // namespace qact
