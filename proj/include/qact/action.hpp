#pragma once

#include <optional>
#include <vector>

#include "qact/potential.hpp"
#include "qact/propagator.hpp"

namespace qact {

// Trial quantum action: kinetic mass, potential coefficient map, and one
// log-normalization per transition time.
struct ActionParams {
    PotentialSpec potential;  // mass field holds m-tilde; terms hold v-tilde
    double log_z = 0.0;

    double hbar() const { return potential.hbar; }
    double mass() const { return potential.mass; }
};

struct Trajectory {
    double T = 0.0;
    std::vector<std::array<double, 2>> positions;  // including endpoints
    double action = 0.0;        // discretized Euclidean action
    double residual_norm = 0.0; // sup norm of the discrete Euler-Lagrange residual
    double energy_drift = 0.0;  // relative variation of 1/2 m v^2 - V along the path
    bool converged = false;

    double dt() const { return T / static_cast<double>(positions.size() - 1); }
};

// Stationary path of the discretized Euclidean action (midpoint rule) between
// fixed endpoints, found by damped Newton from a straight-line start.
Trajectory euclidean_trajectory(const ActionParams& params, std::array<double, 2> x_in,
                                std::array<double, 2> x_fi, double T, std::size_t n_steps);

// As above, doubling n_steps until the action changes by < 1e-4 relative,
// then Richardson-extrapolating the action value.
Trajectory refined_trajectory(const ActionParams& params, std::array<double, 2> x_in,
                              std::array<double, 2> x_fi, double T,
                              std::size_t n_steps_start = 256);

// G-tilde = exp(log_z - action / hbar); throws if the trajectory fails.
double model_amplitude(const ActionParams& params, std::array<double, 2> x_in,
                       std::array<double, 2> x_fi, double T, std::size_t n_steps = 256);

struct ActionScan {
    std::vector<std::vector<double>> action;      // [source][sink]
    std::vector<std::vector<bool>> ok;
};

ActionScan action_scan(const ActionParams& params, const BoundarySet& boundaries,
                       std::size_t n_steps = 256);

}  // namespace qact
