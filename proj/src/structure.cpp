#include "qact/structure.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qact {

namespace {

void require_1d(const Grid& g, const char* who) {
    if (g.dimension != 1)
        throw std::invalid_argument(std::string(who) + ": 1D grids only");
}

void require_positive_interior(const GridFunction& psi, const char* who) {
    for (std::size_t i = 1; i + 1 < psi.grid.npts[0]; ++i)
        if (psi.values[i] <= 0.0)
            throw std::invalid_argument(std::string(who) + ": psi must be positive on the interior");
}

// Fourth-order first derivative of log(psi); second order at the edges.
std::vector<double> log_derivative_o4(const GridFunction& psi) {
    const std::size_t n = psi.grid.npts[0];
    const double h = psi.grid.spacing(0);
    std::vector<double> lp(n), out(n);
    for (std::size_t i = 0; i < n; ++i)
        lp[i] = std::log(std::max(psi.values[i], 1e-300));
    for (std::size_t i = 0; i < n; ++i) {
        if (i >= 2 && i + 2 < n)
            out[i] = (-lp[i + 2] + 8.0 * lp[i + 1] - 8.0 * lp[i - 1] + lp[i - 2]) / (12.0 * h);
        else if (i >= 1 && i + 1 < n)
            out[i] = (lp[i + 1] - lp[i - 1]) / (2.0 * h);
        else if (i == 0)
            out[i] = (lp[1] - lp[0]) / h;
        else
            out[i] = (lp[n - 1] - lp[n - 2]) / h;
    }
    return out;
}

std::size_t argmax(const GridFunction& f) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < f.values.size(); ++i)
        if (f.values[i] > f.values[best]) best = i;
    return best;
}

// Laplacian(psi)/psi by central second differences.
std::vector<double> curvature_ratio(const GridFunction& psi) {
    const std::size_t n = psi.grid.npts[0];
    const double h2 = psi.grid.spacing(0) * psi.grid.spacing(0);
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i)
        out[i] = (psi.values[i + 1] - 2.0 * psi.values[i] + psi.values[i - 1]) /
                 (h2 * psi.values[i]);
    out[0] = out[1];
    out[n - 1] = out[n - 2];
    return out;
}

}  // namespace

GridFunction reconstruct_classical_potential(const GridFunction& psi_gr, double E_gr,
                                             double m, double hbar) {
    require_1d(psi_gr.grid, "reconstruct_classical_potential");
    require_positive_interior(psi_gr, "reconstruct_classical_potential");
    auto curv = curvature_ratio(psi_gr);
    GridFunction v(psi_gr.grid);
    const double c = hbar * hbar / (2.0 * m);
    for (std::size_t i = 0; i < v.values.size(); ++i) v.values[i] = E_gr + c * curv[i];
    return v;
}

MassEstimate reconstruct_mass(const GridFunction& psi_gr, const GridFunction& psi_ex,
                              double E_gr, double E_ex, double hbar) {
    require_1d(psi_gr.grid, "reconstruct_mass");
    if (E_ex <= E_gr) throw std::invalid_argument("reconstruct_mass: E_ex must exceed E_gr");
    if (psi_gr.values.size() != psi_ex.values.size())
        throw std::invalid_argument("reconstruct_mass: grids differ");

    const double ex_floor = 1e-6 * psi_ex.max_abs();
    const double gr_floor = 1e-6 * psi_gr.max_abs();
    const std::size_t n = psi_gr.grid.npts[0];
    const double h2 = psi_gr.grid.spacing(0) * psi_gr.grid.spacing(0);

    // Probability-weighted mean over admissible points; nodes excluded.
    double wsum = 0.0, msum = 0.0;
    std::vector<double> samples, weights;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (std::abs(psi_ex.values[i]) < ex_floor) continue;
        if (psi_gr.values[i] < gr_floor) continue;
        const double lex = (psi_ex.values[i + 1] - 2.0 * psi_ex.values[i] + psi_ex.values[i - 1]) /
                           (h2 * psi_ex.values[i]);
        const double lgr = (psi_gr.values[i + 1] - 2.0 * psi_gr.values[i] + psi_gr.values[i - 1]) /
                           (h2 * psi_gr.values[i]);
        const double m_i = -hbar * hbar * (lex - lgr) / (2.0 * (E_ex - E_gr));
        const double w = psi_ex.values[i] * psi_ex.values[i];
        samples.push_back(m_i);
        weights.push_back(w);
        msum += w * m_i;
        wsum += w;
    }
    if (wsum <= 0.0) throw std::runtime_error("reconstruct_mass: no admissible points");

    MassEstimate est;
    est.mass = msum / wsum;
    double var = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const double d = samples[k] - est.mass;
        var += weights[k] * d * d;
    }
    est.scatter = std::sqrt(var / wsum) / std::abs(est.mass);
    est.consistent = est.scatter <= 0.01;
    return est;
}

QuantumPotentialProfile quantum_potential_from_ground_state(
    const GridFunction& psi_gr, double E_gr, double hbar,
    const std::vector<int>& ansatz_exponents) {
    require_1d(psi_gr.grid, "quantum_potential_from_ground_state");
    require_positive_interior(psi_gr, "quantum_potential_from_ground_state");

    const Grid& g = psi_gr.grid;
    const std::size_t n = g.npts[0];
    const double h = g.spacing(0);

    QuantumPotentialProfile prof;
    prof.grid = g;
    prof.v_min = E_gr;
    prof.hbar = hbar;
    prof.max_index = argmax(psi_gr);
    prof.q = GridFunction(g);

    // Fourth-order stencil keeps the ansatz-fit bias well below the 1e-3
    // product tolerance.
    const auto u = log_derivative_o4(psi_gr);
    for (std::size_t i = 0; i < n; ++i) prof.q.values[i] = u[i] * u[i];

    // Below ~1e-8 of the peak the state is dominated by solver noise and the
    // log derivative is meaningless; hold Q at the edge of the trusted region.
    const double trust = 1e-8 * psi_gr.max_abs();
    std::size_t il = 0, ir = n - 1;
    while (il + 1 < n && psi_gr.values[il] < trust) ++il;
    while (ir > 0 && psi_gr.values[ir] < trust) --ir;
    for (std::size_t i = 0; i < il; ++i) prof.q.values[i] = prof.q.values[il];
    for (std::size_t i = ir + 1; i < n; ++i) prof.q.values[i] = prof.q.values[ir];

    if (!ansatz_exponents.empty()) {
        // Weighted least squares of Q against the ansatz monomials on the
        // bulk region.
        const double floor = 1e-3 * psi_gr.max_abs();
        std::vector<std::size_t> pts;
        for (std::size_t i = 2; i + 2 < n; ++i)
            if (psi_gr.values[i] > floor) pts.push_back(i);
        if (pts.size() < ansatz_exponents.size() + 2)
            throw std::runtime_error("quantum_potential_from_ground_state: bulk region too small");

        const Eigen::Index np = static_cast<Eigen::Index>(ansatz_exponents.size());
        Eigen::MatrixXd A(static_cast<Eigen::Index>(pts.size()), np);
        Eigen::VectorXd b(static_cast<Eigen::Index>(pts.size()));
        for (std::size_t r = 0; r < pts.size(); ++r) {
            const double x = g.coord(0, pts[r]);
            const double w = psi_gr.values[pts[r]];
            for (Eigen::Index c = 0; c < np; ++c)
                A(static_cast<Eigen::Index>(r), c) =
                    w * PotentialSpec::ipow(x, ansatz_exponents[static_cast<std::size_t>(c)]);
            b(static_cast<Eigen::Index>(r)) = w * prof.q.values[pts[r]];
        }
        const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(b);
        const double rel_res = (A * coef - b).norm() / std::max(1e-300, b.norm());

        prof.ansatz_exponents = ansatz_exponents;
        for (Eigen::Index c = 0; c < np; ++c)
            prof.ansatz_products.push_back(0.5 * hbar * hbar * coef(c));  // m v = hbar^2 c / 2
        prof.ansatz_residual = rel_res;
        prof.ansatz_complete = rel_res <= 1e-3;
    }
    return prof;
}

GridFunction ground_state_from_quantum_potential(const QuantumPotentialProfile& profile) {
    require_1d(profile.grid, "ground_state_from_quantum_potential");
    const Grid& g = profile.grid;
    const std::size_t n = g.npts[0];
    const double h = g.spacing(0);
    const std::size_t i0 = profile.max_index;

    // Reject multi-valley profiles: sqrt(Q) must not dip back toward zero
    // away from the origin point.
    const double qmax = profile.q.max_abs();
    auto check_monotone = [&](bool forward) {
        double running = 0.0;
        std::size_t i = i0;
        while (true) {
            if (forward ? (i + 1 >= n) : (i == 0)) break;
            i = forward ? i + 1 : i - 1;
            const double qv = profile.q.values[i];
            if (qv < 0.0)
                throw std::invalid_argument("ground_state_from_quantum_potential: Q must be >= 0");
            if (qv + 0.05 * qmax < running)
                throw std::invalid_argument(
                    "ground_state_from_quantum_potential: multi-valley profile rejected");
            running = std::max(running, qv);
        }
    };
    check_monotone(true);
    check_monotone(false);

    GridFunction psi(g);
    std::vector<double> root(n);
    for (std::size_t i = 0; i < n; ++i) root[i] = std::sqrt(std::max(0.0, profile.q.values[i]));

    psi.values[i0] = 1.0;
    double acc = 0.0;
    for (std::size_t i = i0 + 1; i < n; ++i) {
        acc += 0.5 * (root[i - 1] + root[i]) * h;
        psi.values[i] = std::exp(-acc);
    }
    acc = 0.0;
    for (std::size_t i = i0; i-- > 0;) {
        acc += 0.5 * (root[i + 1] + root[i]) * h;
        psi.values[i] = std::exp(-acc);
    }

    double norm2 = 0.0;
    for (double v : psi.values) norm2 += v * v;
    norm2 *= g.cell_volume();
    for (double& v : psi.values) v /= std::sqrt(norm2);
    return psi;
}

GridFunction transform_law_residual(const PotentialSpec& classical,
                                    const QuantumPotentialProfile& profile, double E_gr) {
    require_1d(profile.grid, "transform_law_residual");
    const Grid& g = profile.grid;
    const std::size_t n = g.npts[0];
    const double h = g.spacing(0);
    const double hb = profile.hbar;
    const double hb2 = hb * hb;

    GridFunction res(g);
    const double qmax = profile.q.max_abs();
    const double q_floor = 1e-6 * qmax;

    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double q = profile.q.values[i];
        if (q < q_floor) {
            res.values[i] = 0.0;  // excluded window around the psi maximum
            continue;
        }
        const auto& qv = profile.q.values;
        const double dq =
            (i >= 2 && i + 2 < n)
                ? (-qv[i + 2] + 8.0 * qv[i + 1] - 8.0 * qv[i - 1] + qv[i - 2]) / (12.0 * h)
                : (qv[i + 1] - qv[i - 1]) / (2.0 * h);
        const double sgn = i >= profile.max_index ? 1.0 : -1.0;
        const double lhs = hb2 * (q - sgn * dq / (2.0 * std::sqrt(q)));
        const double x = g.coord(0, i);
        const double rhs =
            2.0 * classical.mass * (classical.evaluate(x) - E_gr);
        res.values[i] = lhs - rhs;
    }
    res.values[0] = res.values[1];
    res.values[n - 1] = res.values[n - 2];
    return res;
}

SpectralData eigensolve_unit(const GridFunction& v, std::size_t k) {
    require_1d(v.grid, "eigensolve_unit");
    const Grid& g = v.grid;
    const std::size_t n = g.npts[0];

    HamiltonianOperator op;
    op.grid = g;
    op.mass = 0.5;
    op.hbar = 1.0;
    op.potential_min = *std::min_element(v.values.begin(), v.values.end());
    const double h2 = g.spacing(0) * g.spacing(0);
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t i = 0; i < n; ++i) {
        trip.emplace_back(i, i, 2.0 / h2 + v.values[i]);
        if (i > 0) trip.emplace_back(i, i - 1, -1.0 / h2);
        if (i + 1 < n) trip.emplace_back(i, i + 1, -1.0 / h2);
    }
    op.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    op.matrix.setFromTriplets(trip.begin(), trip.end());
    return eigensolve(op, k);
}

SusyPair susy_partner(const GridFunction& v_minus, std::size_t eigensolve_states) {
    require_1d(v_minus.grid, "susy_partner");
    const Grid& g = v_minus.grid;
    const std::size_t n = g.npts[0];

    auto sd = eigensolve_unit(v_minus, eigensolve_states);

    SusyPair pair;
    pair.v_minus = v_minus;
    pair.ground_energy = sd.eigenvalues[0];
    pair.ground_state = sd.eigenfunctions[0];
    pair.superpotential = GridFunction(g);
    pair.superpotential.values = log_derivative_o4(sd.eigenfunctions[0]);
    pair.v_plus = GridFunction(g);

    // The log derivative is only reliable where the ground state sits well
    // above the eigensolver noise floor; outside that bulk W is held at the
    // edge value and V+ continues V- with the edge offset, which keeps the
    // partner confining without touching the low-lying spectrum.
    const double floor = 1e-8 * pair.ground_state.max_abs();
    std::size_t il = 0, ir = n - 1;
    while (il + 1 < n && pair.ground_state.values[il] < floor) ++il;
    while (ir > 0 && pair.ground_state.values[ir] < floor) --ir;
    if (il >= ir) throw std::runtime_error("susy_partner: ground state has no bulk region");

    for (std::size_t i = il; i <= ir; ++i) {
        const double w = pair.superpotential.values[i];
        pair.v_plus.values[i] = -v_minus.values[i] + 2.0 * w * w;
    }
    const double off_l = pair.v_plus.values[il] - v_minus.values[il];
    const double off_r = pair.v_plus.values[ir] - v_minus.values[ir];
    for (std::size_t i = 0; i < il; ++i) {
        pair.superpotential.values[i] = pair.superpotential.values[il];
        pair.v_plus.values[i] = v_minus.values[i] + off_l;
    }
    for (std::size_t i = ir + 1; i < n; ++i) {
        pair.superpotential.values[i] = pair.superpotential.values[ir];
        pair.v_plus.values[i] = v_minus.values[i] + off_r;
    }
    return pair;
}

SusyEquivalenceReport susy_quantum_equivalence(const SusyPair& pair,
                                               const QuantumPotentialProfile& profile) {
    if (pair.v_minus.values.size() != profile.q.values.size())
        throw std::invalid_argument("susy_quantum_equivalence: grid mismatch");
    if (std::abs(profile.hbar - 1.0) > 1e-12)
        throw std::invalid_argument(
            "susy_quantum_equivalence: profile must be in hbar = 2m = 1 units");

    const double floor = 1e-3 * pair.ground_state.max_abs();
    SusyEquivalenceReport rep;
    for (std::size_t i = 2; i + 2 < pair.ground_state.values.size(); ++i) {
        if (pair.ground_state.values[i] < floor) continue;
        const double w = pair.superpotential.values[i];
        rep.max_deviation = std::max(rep.max_deviation,
                                     std::abs(w * w - profile.q.values[i]));
    }
    rep.equivalent = rep.max_deviation < 1e-6 * std::max(1.0, profile.q.max_abs());
    return rep;
}

}  // namespace qact
