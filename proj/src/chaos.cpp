#include "qact/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qact/rng.hpp"

namespace qact {

namespace {

// PEFRL coefficients (fourth order, position-extended Forest-Ruth-like).
constexpr double kXi = 0.1786178958448091;
constexpr double kLambda = -0.2123418310626054;
constexpr double kChi = -0.06626458266981849;

constexpr double kDrift1 = kXi;
constexpr double kDrift2 = kChi;
constexpr double kDrift3 = 1.0 - 2.0 * (kChi + kXi);
constexpr double kKick1 = 0.5 - kLambda;
constexpr double kKick2 = kLambda;

using Tangent = std::array<std::array<double, 4>, 4>;  // [component][frame]

struct Stepper {
    const Dynamics& dyn;
    double h;
    double inv_m;

    void drift(PhaseState& s, Tangent* tg, double c) const {
        const double a = c * h * inv_m;
        s.x += a * s.px;
        s.y += a * s.py;
        if (tg) {
            for (int k = 0; k < 4; ++k) {
                (*tg)[0][k] += a * (*tg)[2][k];
                (*tg)[1][k] += a * (*tg)[3][k];
            }
        }
    }

    void kick(PhaseState& s, Tangent* tg, double b) const {
        double fx, fy;
        dyn.force(s.x, s.y, fx, fy);
        const double a = b * h;
        s.px += a * fx;
        s.py += a * fy;
        if (tg) {
            double vxx, vyy, vxy;
            dyn.hessian(s.x, s.y, vxx, vyy, vxy);
            for (int k = 0; k < 4; ++k) {
                const double dx = (*tg)[0][k];
                const double dy = (*tg)[1][k];
                (*tg)[2][k] -= a * (vxx * dx + vxy * dy);
                (*tg)[3][k] -= a * (vxy * dx + vyy * dy);
            }
        }
    }

    void step(PhaseState& s, Tangent* tg = nullptr) const {
        drift(s, tg, kDrift1);
        kick(s, tg, kKick1);
        drift(s, tg, kDrift2);
        kick(s, tg, kKick2);
        drift(s, tg, kDrift3);
        kick(s, tg, kKick2);
        drift(s, tg, kDrift2);
        kick(s, tg, kKick1);
        drift(s, tg, kDrift1);
    }
};

}  // namespace

Dynamics::Dynamics(const PotentialSpec& spec) : mass_(spec.mass) {
    if (spec.dimension != 2)
        throw std::invalid_argument("Dynamics: 2D potentials only");
    if (spec.has_singular_terms())
        throw std::invalid_argument("Dynamics: singular terms not supported");
    if (mass_ <= 0.0) throw std::invalid_argument("Dynamics: mass must be positive");
    for (const auto& [e, c] : spec.terms)
        if (c != 0.0) terms_.push_back({e[0], e[1], c});
}

double Dynamics::potential(double x, double y) const {
    double v = 0.0;
    for (const auto& t : terms_)
        v += t.c * PotentialSpec::ipow(x, t.px) * PotentialSpec::ipow(y, t.py);
    return v;
}

void Dynamics::force(double x, double y, double& fx, double& fy) const {
    fx = 0.0;
    fy = 0.0;
    for (const auto& t : terms_) {
        const double gx = PotentialSpec::ipow(x, t.px);
        const double gy = PotentialSpec::ipow(y, t.py);
        if (t.px != 0) fx -= t.c * t.px * PotentialSpec::ipow(x, t.px - 1) * gy;
        if (t.py != 0) fy -= t.c * t.py * PotentialSpec::ipow(y, t.py - 1) * gx;
    }
}

void Dynamics::hessian(double x, double y, double& vxx, double& vyy, double& vxy) const {
    vxx = 0.0;
    vyy = 0.0;
    vxy = 0.0;
    for (const auto& t : terms_) {
        const double gx = PotentialSpec::ipow(x, t.px);
        const double gy = PotentialSpec::ipow(y, t.py);
        if (t.px > 1) vxx += t.c * t.px * (t.px - 1) * PotentialSpec::ipow(x, t.px - 2) * gy;
        if (t.py > 1) vyy += t.c * t.py * (t.py - 1) * PotentialSpec::ipow(y, t.py - 2) * gx;
        if (t.px != 0 && t.py != 0)
            vxy += t.c * t.px * t.py * PotentialSpec::ipow(x, t.px - 1) *
                   PotentialSpec::ipow(y, t.py - 1);
    }
}

double Dynamics::energy(const PhaseState& s) const {
    return (s.px * s.px + s.py * s.py) / (2.0 * mass_) + potential(s.x, s.y);
}

Orbit integrate(const Dynamics& dyn, const PhaseState& start, double t_max, double dt,
                std::size_t store_every, double drift_tol) {
    if (dt <= 0.0 || t_max <= 0.0) throw std::invalid_argument("integrate: dt, t_max > 0");
    if (store_every == 0) store_every = 1;

    const auto n_steps = static_cast<std::size_t>(std::llround(t_max / dt));
    Stepper st{dyn, dt, 1.0 / dyn.mass()};
    PhaseState s = start;
    const double e0 = dyn.energy(s);
    const double scale = std::max(1.0, std::abs(e0));

    Orbit orbit;
    orbit.times.reserve(n_steps / store_every + 2);
    orbit.states.reserve(n_steps / store_every + 2);
    orbit.times.push_back(0.0);
    orbit.states.push_back(s);

    for (std::size_t i = 1; i <= n_steps; ++i) {
        st.step(s);
        const double drift = std::abs(dyn.energy(s) - e0) / scale;
        orbit.energy_drift = std::max(orbit.energy_drift, drift);
        if (drift > drift_tol)
            throw std::runtime_error("integrate: energy drift exceeded, reduce dt");
        if (i % store_every == 0 || i == n_steps) {
            orbit.times.push_back(dt * static_cast<double>(i));
            orbit.states.push_back(s);
        }
    }
    return orbit;
}

SectionResult poincare_section(const Dynamics& dyn, const PhaseState& start, double t_max,
                               double dt) {
    const auto n_steps = static_cast<std::size_t>(std::llround(t_max / dt));
    Stepper st{dyn, dt, 1.0 / dyn.mass()};
    SectionResult out;
    PhaseState prev = start;
    for (std::size_t i = 1; i <= n_steps; ++i) {
        PhaseState next = prev;
        st.step(next);
        if (prev.y < 0.0 && next.y >= 0.0 && next.py > 0.0) {
            // Bisect the substep length until the refined crossing satisfies
            // |y| < 1e-8.
            double lo = 0.0, hi = dt;
            PhaseState hit = next;
            for (int it = 0; it < 64; ++it) {
                const double mid = 0.5 * (lo + hi);
                PhaseState trial = prev;
                Stepper sub{dyn, mid, 1.0 / dyn.mass()};
                sub.step(trial);
                if (std::abs(trial.y) < 1e-9) {
                    hit = trial;
                    lo = mid;
                    break;
                }
                if (trial.y < 0.0)
                    lo = mid;
                else {
                    hi = mid;
                    hit = trial;
                }
            }
            if (hit.py > 0.0 && std::abs(hit.y) < 1e-8)
                out.points.push_back({dt * static_cast<double>(i - 1) + 0.5 * (lo + hi),
                                      hit.x, hit.px});
        }
        prev = next;
    }
    out.crossed = !out.points.empty();
    return out;
}

LyapunovResult lyapunov_spectrum(const Dynamics& dyn, const PhaseState& start, double t_max,
                                 double dt, double renorm_interval, double escape_radius) {
    Stepper st{dyn, dt, 1.0 / dyn.mass()};
    PhaseState s = start;
    Tangent tg{};
    for (int k = 0; k < 4; ++k) tg[k][k] = 1.0;

    std::array<double, 4> logsum{};
    LyapunovResult res;
    res.horizon = t_max;
    const double e0 = dyn.energy(s);
    const double e_scale = std::max(1.0, std::abs(e0));

    const auto steps_per_block =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(renorm_interval / dt)));
    const auto n_steps = static_cast<std::size_t>(std::llround(t_max / dt));

    std::size_t done = 0;
    while (done < n_steps) {
        const std::size_t block = std::min(steps_per_block, n_steps - done);
        for (std::size_t i = 0; i < block; ++i) {
            st.step(s, &tg);
            if (std::abs(s.x) > escape_radius || std::abs(s.y) > escape_radius) {
                res.escaped = true;
                return res;
            }
        }
        done += block;
        res.energy_drift =
            std::max(res.energy_drift, std::abs(dyn.energy(s) - e0) / e_scale);

        // Modified Gram-Schmidt on the four frames; diagonal norms are the
        // stretch factors.
        for (int k = 0; k < 4; ++k) {
            for (int j = 0; j < k; ++j) {
                double d = 0.0;
                for (int c = 0; c < 4; ++c) d += tg[c][j] * tg[c][k];
                for (int c = 0; c < 4; ++c) tg[c][k] -= d * tg[c][j];
            }
            double norm = 0.0;
            for (int c = 0; c < 4; ++c) norm += tg[c][k] * tg[c][k];
            norm = std::sqrt(norm);
            if (norm <= 0.0) return res;  // degenerate frame, not converged
            logsum[k] += std::log(norm);
            for (int c = 0; c < 4; ++c) tg[c][k] /= norm;
        }

        const double t = dt * static_cast<double>(done);
        res.times.push_back(t);
        std::array<double, 4> running;
        for (int k = 0; k < 4; ++k) running[k] = logsum[k] / t;
        res.history.push_back(running);
    }

    res.exponents = res.history.back();
    std::sort(res.exponents.begin(), res.exponents.end(), std::greater<>());

    // Converged when lambda1 is stable over the final half of the horizon;
    // the absolute floor absorbs the ~log(t)/t finite-horizon bias of
    // integrable orbits.
    const double l1 = res.exponents[0];
    const double bias = 3.0 * std::log(std::max(t_max, 3.0)) / t_max;
    const double tol = std::max(0.2 * std::abs(l1), bias);
    res.converged = true;
    for (std::size_t i = 0; i < res.times.size(); ++i) {
        if (res.times[i] < 0.5 * t_max) continue;
        double m1 = res.history[i][0];
        for (int k = 1; k < 4; ++k) m1 = std::max(m1, res.history[i][k]);
        if (std::abs(m1 - l1) > tol) {
            res.converged = false;
            break;
        }
    }
    return res;
}

std::vector<PhaseState> sample_energy_shell(const Dynamics& dyn, double E, std::size_t n,
                                            std::uint64_t seed) {
    // Bounding box: grow until the potential exceeds E on the whole border.
    double L = 1.0;
    bool bounded = false;
    while (L <= 4096.0) {
        bool wall = true;
        for (int i = 0; i <= 256 && wall; ++i) {
            const double u = -L + 2.0 * L * static_cast<double>(i) / 256.0;
            wall = dyn.potential(u, -L) > E && dyn.potential(u, L) > E &&
                   dyn.potential(-L, u) > E && dyn.potential(L, u) > E;
        }
        if (wall) {
            bounded = true;
            break;
        }
        L *= 2.0;
    }
    if (!bounded)
        throw std::invalid_argument("sample_energy_shell: accessible region unbounded");

    std::vector<PhaseState> out;
    out.reserve(n);
    const double two_pi = 2.0 * std::acos(-1.0);
    for (std::size_t i = 0; i < n; ++i) {
        CounterRng rng(seed, i);
        PhaseState s;
        bool ok = false;
        for (std::size_t tries = 0; tries < 1000000; ++tries) {
            s.x = L * (2.0 * rng.uniform() - 1.0);
            s.y = L * (2.0 * rng.uniform() - 1.0);
            const double v = dyn.potential(s.x, s.y);
            if (v > E) continue;
            const double p = std::sqrt(2.0 * dyn.mass() * (E - v));
            const double phi = two_pi * rng.uniform();
            s.px = p * std::cos(phi);
            s.py = p * std::sin(phi);
            ok = true;
            break;
        }
        if (!ok) throw std::runtime_error("sample_energy_shell: empty shell at this energy");
        out.push_back(s);
    }
    return out;
}

double calibrate_threshold(const Dynamics& baseline, double E, std::size_t n, double t_max,
                           double dt, std::uint64_t seed) {
    auto states = sample_energy_shell(baseline, E, n, seed);
    std::vector<double> l1;
    for (const auto& s : states) {
        auto res = lyapunov_spectrum(baseline, s, t_max, dt);
        if (!res.escaped) l1.push_back(res.exponents[0]);
    }
    if (l1.empty()) throw std::runtime_error("calibrate_threshold: no baseline orbits");
    std::sort(l1.begin(), l1.end());
    const auto idx = static_cast<std::size_t>(0.95 * static_cast<double>(l1.size() - 1));
    return std::max(0.01, 10.0 * l1[idx]);
}

FractionResult chaotic_fraction(const Dynamics& dyn, double E, std::size_t n, double threshold,
                                double t_max, double dt, std::uint64_t seed) {
    FractionResult out;
    out.energy = E;
    out.n_requested = n;
    out.threshold = threshold;

    auto states = sample_energy_shell(dyn, E, n, seed);
    for (const auto& s : states) {
        auto res = lyapunov_spectrum(dyn, s, t_max, dt);
        if (res.escaped || !res.converged) continue;
        out.lambda1.push_back(res.exponents[0]);
        if (res.exponents[0] > threshold) ++out.chaotic;
    }
    out.n_accepted = out.lambda1.size();
    if (out.n_accepted == 0) throw std::runtime_error("chaotic_fraction: all samples discarded");
    out.fraction = static_cast<double>(out.chaotic) / static_cast<double>(out.n_accepted);
    out.flagged = 10 * (n - out.n_accepted) > n;
    return out;
}

}  // namespace qact
