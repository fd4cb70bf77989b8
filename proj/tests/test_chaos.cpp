#include <doctest.h>

#include <cmath>

#include "qact/chaos.hpp"

using namespace qact;

namespace {

constexpr double kPi = 3.14159265358979323846;

PotentialSpec decoupled_2d() {
    PotentialSpec s;
    s.dimension = 2;
    s.add_term(2, 0, 0.5);
    s.add_term(0, 2, 0.5);
    return s;
}

PotentialSpec coupled_2d(double v22 = 0.05) {
    auto s = decoupled_2d();
    s.add_term(2, 2, v22);
    return s;
}

}  // namespace

TEST_CASE("decoupled orbit matches the closed form") {
    Dynamics dyn(decoupled_2d());  // omega = sqrt(2 v2 / m) = 1
    auto orbit = integrate(dyn, {1.0, 0.0, 0.0, 1.0}, 100.0, 0.02, 50);
    for (std::size_t i = 0; i < orbit.times.size(); ++i) {
        const double t = orbit.times[i];
        CHECK(std::abs(orbit.states[i].x - std::cos(t)) < 1e-6);
        CHECK(std::abs(orbit.states[i].y - std::sin(t)) < 1e-6);
    }
    CHECK(orbit.energy_drift < 1e-6);
}

TEST_CASE("energy is conserved on a coupled orbit") {
    Dynamics dyn(coupled_2d());
    PhaseState s{2.0, 1.0, 1.5, -0.5};
    auto orbit = integrate(dyn, s, 200.0, 0.02, 1000);
    CHECK(orbit.energy_drift < 1e-6);
    CHECK(dyn.energy(orbit.states.back()) ==
          doctest::Approx(dyn.energy(s)).epsilon(1e-6));
}

TEST_CASE("oversized steps trip the drift guard") {
    Dynamics dyn(coupled_2d());
    CHECK_THROWS_AS(integrate(dyn, {5.0, 1.0, 3.0, -2.0}, 50.0, 1.0), std::runtime_error);
}

TEST_CASE("integration is time reversible") {
    Dynamics dyn(coupled_2d());
    PhaseState s{2.0, 1.0, 1.5, -0.5};
    auto fwd = integrate(dyn, s, 50.0, 0.02, 1u << 30);
    PhaseState back = fwd.states.back();
    back.px = -back.px;
    back.py = -back.py;
    auto rev = integrate(dyn, back, 50.0, 0.02, 1u << 30);
    const PhaseState& r = rev.states.back();
    CHECK(std::abs(r.x - s.x) < 1e-8);
    CHECK(std::abs(r.y - s.y) < 1e-8);
    CHECK(std::abs(r.px + s.px) < 1e-8);
    CHECK(std::abs(r.py + s.py) < 1e-8);
}

TEST_CASE("poincare section of the decoupled orbit") {
    Dynamics dyn(decoupled_2d());
    auto sec = poincare_section(dyn, {1.0, 0.0, 0.0, 1.0}, 100.0, 0.02);
    REQUIRE(sec.crossed);
    CHECK(sec.points.size() == 15);  // crossings at t = 2 pi k
    for (std::size_t k = 0; k < sec.points.size(); ++k) {
        CHECK(std::abs(sec.points[k].x - 1.0) < 1e-6);
        CHECK(std::abs(sec.points[k].px) < 1e-6);
        CHECK(std::abs(sec.points[k].t - 2.0 * kPi * static_cast<double>(k + 1)) < 1e-6);
    }
}

TEST_CASE("doubling the horizon only appends section points") {
    Dynamics dyn(coupled_2d());
    PhaseState s{2.0, -1.0, 0.5, 1.5};
    auto short_run = poincare_section(dyn, s, 60.0, 0.02);
    auto long_run = poincare_section(dyn, s, 120.0, 0.02);
    REQUIRE(long_run.points.size() >= short_run.points.size());
    for (std::size_t i = 0; i < short_run.points.size(); ++i) {
        CHECK(std::abs(long_run.points[i].x - short_run.points[i].x) < 1e-8);
        CHECK(std::abs(long_run.points[i].px - short_run.points[i].px) < 1e-8);
    }
}

TEST_CASE("no crossing yields an empty flagged list") {
    Dynamics dyn(decoupled_2d());
    // orbit confined to y > 0.5: never crosses y = 0
    auto sec = poincare_section(dyn, {0.0, 1.0, 0.0, 0.0}, 0.5, 0.02);
    CHECK_FALSE(sec.crossed);
    CHECK(sec.points.empty());
}

TEST_CASE("integrable system has vanishing exponents") {
    Dynamics dyn(decoupled_2d());
    auto res = lyapunov_spectrum(dyn, {1.0, 0.3, -0.2, 1.1}, 2000.0, 0.02);
    CHECK(res.converged);
    CHECK_FALSE(res.escaped);
    for (double l : res.exponents) CHECK(std::abs(l) < 1e-3);
}

TEST_CASE("chaotic orbit satisfies the symplectic invariants") {
    Dynamics dyn(coupled_2d());
    auto states = sample_energy_shell(dyn, 40.0, 1, 5);
    auto res = lyapunov_spectrum(dyn, states[0], 2000.0, 0.02);
    REQUIRE_FALSE(res.escaped);
    CHECK(res.exponents[0] > 0.05);
    CHECK(std::abs(res.exponents[0] + res.exponents[1] + res.exponents[2] +
                   res.exponents[3]) < 1e-2);
    CHECK(std::abs(res.exponents[0] + res.exponents[3]) < 1e-2);
    CHECK(std::abs(res.exponents[1] + res.exponents[2]) < 1e-2);
}

TEST_CASE("energy shell samples are on shell") {
    Dynamics dyn(coupled_2d());
    auto states = sample_energy_shell(dyn, 7.5, 100, 42);
    REQUIRE(states.size() == 100);
    for (const auto& s : states)
        CHECK(std::abs(dyn.energy(s) - 7.5) < 1e-12);
}

TEST_CASE("shell sampling rejects bad configurations") {
    Dynamics dyn(coupled_2d());
    CHECK_THROWS(sample_energy_shell(dyn, -1.0, 4, 1));  // below min V

    PotentialSpec open_channel;  // V independent of y: region unbounded
    open_channel.dimension = 2;
    open_channel.add_term(2, 0, 0.5);
    Dynamics dyn_open(open_channel);
    CHECK_THROWS_AS(sample_energy_shell(dyn_open, 1.0, 4, 1), std::invalid_argument);
}

TEST_CASE("shell x-marginal matches the area measure") {
    // Decoupled case: accessible region is the disk of radius R = sqrt(2E/v2
    // ...) = 2 at E = 2, so the x-marginal is proportional to sqrt(R^2-x^2).
    Dynamics dyn(decoupled_2d());
    const double E = 2.0, R = 2.0;
    auto states = sample_energy_shell(dyn, E, 10000, 2024);

    const int nb = 16;
    std::vector<double> counts(nb, 0.0);
    for (const auto& s : states) {
        int b = static_cast<int>((s.x + R) / (2.0 * R) * nb);
        b = std::max(0, std::min(nb - 1, b));
        counts[b] += 1.0;
    }
    auto slice = [&](double x) {  // antiderivative of 2 sqrt(R^2-x^2)
        return x * std::sqrt(std::max(0.0, R * R - x * x)) + R * R * std::asin(x / R);
    };
    const double total = slice(R) - slice(-R);
    double chi2 = 0.0;
    for (int b = 0; b < nb; ++b) {
        const double x0 = -R + 2.0 * R * b / nb;
        const double x1 = -R + 2.0 * R * (b + 1) / nb;
        const double expect = 10000.0 * (slice(x1) - slice(x0)) / total;
        chi2 += (counts[b] - expect) * (counts[b] - expect) / expect;
    }
    CHECK(chi2 < 50.0);  // df = 15, far beyond the 0.1% quantile would fail
}

TEST_CASE("integrable baseline has zero chaotic fraction") {
    Dynamics dyn(decoupled_2d());
    const double thr = calibrate_threshold(dyn, 10.0, 20, 1000.0, 0.02, 11);
    CHECK(thr >= 0.01);
    auto fr = chaotic_fraction(dyn, 10.0, 20, thr, 1000.0, 0.02, 99);
    CHECK(fr.fraction == 0.0);
    CHECK_FALSE(fr.flagged);
    CHECK(fr.n_accepted == 20);
}

TEST_CASE("fraction estimates agree between independent samples") {
    Dynamics dyn(coupled_2d());
    auto f1 = chaotic_fraction(dyn, 30.0, 40, 0.01, 2000.0, 0.02, 1);
    auto f2 = chaotic_fraction(dyn, 30.0, 40, 0.01, 2000.0, 0.02, 2);
    const double pooled = 0.5 * (f1.fraction + f2.fraction);
    const double sigma = std::sqrt(std::max(pooled * (1.0 - pooled), 0.01) * (2.0 / 40.0));
    CHECK(std::abs(f1.fraction - f2.fraction) <= 3.0 * sigma);
}
