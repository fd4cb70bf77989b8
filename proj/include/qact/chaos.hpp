#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "qact/action.hpp"
#include "qact/potential.hpp"

namespace qact {

struct PhaseState {
    double x = 0.0, y = 0.0, px = 0.0, py = 0.0;
};

// Real-time 2D Hamiltonian dynamics H = (px^2 + py^2)/2m + V(x, y), built
// either from a classical potential spec or from fitted quantum-action
// parameters (then m = m-tilde, V = V-tilde).
class Dynamics {
public:
    explicit Dynamics(const PotentialSpec& spec);
    explicit Dynamics(const ActionParams& params) : Dynamics(params.potential) {}

    double mass() const { return mass_; }
    double potential(double x, double y) const;
    void force(double x, double y, double& fx, double& fy) const;  // -grad V
    void hessian(double x, double y, double& vxx, double& vyy, double& vxy) const;
    double energy(const PhaseState& s) const;

private:
    struct Term {
        int px, py;
        double c;
    };
    double mass_ = 1.0;
    std::vector<Term> terms_;
};

struct Orbit {
    std::vector<double> times;
    std::vector<PhaseState> states;
    double energy_drift = 0.0;  // max |E(t) - E(0)| / max(1, |E(0)|)
};

// Fixed-step fourth-order symplectic composition (PEFRL). Throws on energy
// drift beyond drift_tol with advice to reduce dt.
Orbit integrate(const Dynamics& dyn, const PhaseState& start, double t_max, double dt,
                std::size_t store_every = 1, double drift_tol = 1e-6);

struct SectionPoint {
    double t = 0.0;
    double x = 0.0;
    double px = 0.0;
};

struct SectionResult {
    std::vector<SectionPoint> points;  // crossings of y = 0 with py > 0
    bool crossed = false;
};

SectionResult poincare_section(const Dynamics& dyn, const PhaseState& start, double t_max,
                               double dt);

struct LyapunovResult {
    std::array<double, 4> exponents{};  // descending
    std::vector<double> times;          // renormalization instants
    std::vector<std::array<double, 4>> history;  // running exponents at each instant
    double horizon = 0.0;
    double energy_drift = 0.0;  // sampled at each renormalization instant
    bool converged = false;
    bool escaped = false;
};

// Benettin construction: four tangent frames evolved through the linearized
// flow, re-orthonormalized at fixed intervals.
LyapunovResult lyapunov_spectrum(const Dynamics& dyn, const PhaseState& start, double t_max,
                                 double dt, double renorm_interval = 2.0,
                                 double escape_radius = 50.0);

// Uniform positions over the accessible region {V <= E}, momentum magnitude
// sqrt(2m(E - V)) with uniform direction. Every state is on-shell to 1e-12.
std::vector<PhaseState> sample_energy_shell(const Dynamics& dyn, double E, std::size_t n,
                                            std::uint64_t seed);

struct FractionResult {
    double energy = 0.0;
    std::size_t n_requested = 0;
    std::size_t n_accepted = 0;
    std::size_t chaotic = 0;
    double fraction = 0.0;
    double threshold = 0.0;
    std::vector<double> lambda1;  // per accepted sample
    bool flagged = false;         // more than 10% of samples discarded
};

// max(0.01, 10 x 95th percentile of lambda1 on an integrable baseline at the
// same horizon); finite-horizon estimates are biased, so the cutoff is
// calibrated rather than absolute.
double calibrate_threshold(const Dynamics& baseline, double E, std::size_t n, double t_max,
                           double dt, std::uint64_t seed);

FractionResult chaotic_fraction(const Dynamics& dyn, double E, std::size_t n, double threshold,
                                double t_max, double dt, std::uint64_t seed);

}  // namespace qact
