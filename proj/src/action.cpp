#include "qact/action.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace qact {

namespace {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

struct DiscreteAction {
    const ActionParams& params;
    int dim;
    double dt;
    std::array<double, 2> a, b;
    std::size_t n;  // number of segments; n-1 interior points
    bool singular;

    DiscreteAction(const ActionParams& p, std::array<double, 2> x_in,
                   std::array<double, 2> x_fi, double T, std::size_t n_steps)
        : params(p), dim(p.potential.dimension), dt(T / static_cast<double>(n_steps)),
          a(x_in), b(x_fi), n(n_steps), singular(p.potential.has_singular_terms()) {}

    bool admissible(const std::vector<Vec2>& x) const {
        if (!singular) return true;
        if (a[0] <= 0.0 || b[0] <= 0.0) return false;
        for (const auto& p : x)
            if (p(0) <= 0.0) return false;
        return true;
    }

    Vec2 point(const std::vector<Vec2>& x, std::size_t k) const {
        if (k == 0) return Vec2(a[0], a[1]);
        if (k == n) return Vec2(b[0], b[1]);
        return x[k - 1];
    }

    double value(const std::vector<Vec2>& x) const {
        double s = 0.0;
        const double m = params.mass();
        for (std::size_t k = 1; k <= n; ++k) {
            const Vec2 x0 = point(x, k - 1), x1 = point(x, k);
            const Vec2 mid = 0.5 * (x0 + x1);
            const double v2 = (x1 - x0).squaredNorm() / (dt * dt);
            s += (0.5 * m * v2 + params.potential.evaluate(mid(0), mid(1))) * dt;
        }
        return s;
    }

    // Gradient with respect to the interior points.
    void gradient(const std::vector<Vec2>& x, std::vector<Vec2>& g) const {
        const double m = params.mass();
        g.assign(n - 1, Vec2::Zero());
        for (std::size_t k = 1; k <= n; ++k) {
            const Vec2 x0 = point(x, k - 1), x1 = point(x, k);
            const Vec2 mid = 0.5 * (x0 + x1);
            const auto dv = params.potential.gradient(mid(0), mid(1));
            const Vec2 grad_v(dv[0], dim == 2 ? dv[1] : 0.0);
            const Vec2 kin = m * (x1 - x0) / dt;
            if (k >= 2) g[k - 2] += -kin + 0.5 * dt * grad_v;
            if (k <= n - 1) g[k - 1] += kin + 0.5 * dt * grad_v;
        }
    }

    // Block-tridiagonal Hessian: diag[i] couples interior point i with itself,
    // upper[i] couples points i and i+1.
    void hessian(const std::vector<Vec2>& x, std::vector<Mat2>& diag,
                 std::vector<Mat2>& upper) const {
        const double m = params.mass();
        diag.assign(n - 1, Mat2::Zero());
        upper.assign(n - 2, Mat2::Zero());
        const Mat2 kin = (m / dt) * Mat2::Identity();
        for (std::size_t k = 1; k <= n; ++k) {
            const Vec2 x0 = point(x, k - 1), x1 = point(x, k);
            const Vec2 mid = 0.5 * (x0 + x1);
            const auto hv = params.potential.hessian(mid(0), mid(1));
            Mat2 H;
            H << hv[0], hv[2], hv[2], dim == 2 ? hv[1] : 0.0;
            const Mat2 quarter = 0.25 * dt * H;
            if (k >= 2) diag[k - 2] += kin + quarter;
            if (k <= n - 1) diag[k - 1] += kin + quarter;
            if (k >= 2 && k <= n - 1) upper[k - 2] += -kin + quarter;
        }
    }
};

// Solve the block-tridiagonal system (with Levenberg shift mu) in place.
bool block_thomas(std::vector<Mat2> diag, std::vector<Mat2> upper, std::vector<Vec2> rhs,
                  double mu, std::vector<Vec2>& out) {
    const std::size_t n = diag.size();
    for (auto& d : diag) d += mu * Mat2::Identity();
    std::vector<Mat2> dinv(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            const Mat2 w = upper[i - 1].transpose() * dinv[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        const double det = diag[i].determinant();
        if (!(std::abs(det) > 1e-300)) return false;
        dinv[i] = diag[i].inverse();
    }
    out.resize(n);
    out[n - 1] = dinv[n - 1] * rhs[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) out[i] = dinv[i] * (rhs[i] - upper[i] * out[i + 1]);
    return true;
}

}  // namespace

Trajectory euclidean_trajectory(const ActionParams& params, std::array<double, 2> x_in,
                                std::array<double, 2> x_fi, double T, std::size_t n_steps) {
    if (n_steps < 64) throw std::invalid_argument("euclidean_trajectory: n_steps >= 64 required");
    if (T <= 0.0) throw std::invalid_argument("euclidean_trajectory: T must be positive");
    params.potential.validate();

    DiscreteAction da(params, x_in, x_fi, T, n_steps);

    // Straight-line initial path.
    std::vector<Vec2> x(n_steps - 1);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = static_cast<double>(i + 1) / static_cast<double>(n_steps);
        x[i] = Vec2(x_in[0] + t * (x_fi[0] - x_in[0]), x_in[1] + t * (x_fi[1] - x_in[1]));
    }
    if (!da.admissible(x))
        throw std::invalid_argument("euclidean_trajectory: endpoints violate the domain");

    double s = da.value(x);
    std::vector<Vec2> g, step;
    std::vector<Mat2> diag, upper;
    double mu = 0.0;
    bool converged = false;
    double gnorm = 0.0;

    const int max_iter = 200;
    for (int iter = 0; iter < max_iter; ++iter) {
        da.gradient(x, g);
        gnorm = 0.0;
        for (const auto& v : g) gnorm = std::max(gnorm, v.lpNorm<Eigen::Infinity>());
        const double tol = 1e-10 * std::max(1.0, std::abs(s)) / T;
        if (gnorm < tol) {
            converged = true;
            break;
        }
        da.hessian(x, diag, upper);
        bool accepted = false;
        for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
            if (block_thomas(diag, upper, g, mu, step)) {
                std::vector<Vec2> xn(x.size());
                double alpha = 1.0;
                for (int ls = 0; ls < 25; ++ls) {
                    for (std::size_t i = 0; i < x.size(); ++i) xn[i] = x[i] - alpha * step[i];
                    if (da.admissible(xn)) {
                        const double sn = da.value(xn);
                        if (sn <= s + 1e-14 * std::abs(s)) {
                            x.swap(xn);
                            s = sn;
                            accepted = true;
                            mu *= 0.3;
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
            }
            if (!accepted) mu = mu == 0.0 ? (params.mass() / da.dt) * 1e-3 : mu * 10.0;
            if (mu > 1e12 * params.mass() / da.dt)
                throw std::runtime_error("euclidean_trajectory: descent failed (unbounded or stiff)");
        }
    }
    if (!converged) {
        da.gradient(x, g);
        gnorm = 0.0;
        for (const auto& v : g) gnorm = std::max(gnorm, v.lpNorm<Eigen::Infinity>());
        const double tol = 1e-8 * std::max(1.0, std::abs(s)) / T;
        converged = gnorm < tol;
        if (!converged)
            throw std::runtime_error("euclidean_trajectory: Newton failed to converge");
    }

    Trajectory traj;
    traj.T = T;
    traj.action = s;
    traj.residual_norm = gnorm;
    traj.converged = true;
    traj.positions.resize(n_steps + 1);
    for (std::size_t k = 0; k <= n_steps; ++k) {
        const Vec2 p = da.point(x, k);
        traj.positions[k] = {p(0), p(1)};
    }

    // Euclidean energy first integral on segment midpoints.
    double emin = 0.0, emax = 0.0, escale = 0.0;
    for (std::size_t k = 1; k <= n_steps; ++k) {
        const Vec2 x0 = da.point(x, k - 1), x1 = da.point(x, k);
        const Vec2 mid = 0.5 * (x0 + x1);
        const double kin = 0.5 * params.mass() * (x1 - x0).squaredNorm() / (da.dt * da.dt);
        const double pot = params.potential.evaluate(mid(0), mid(1));
        const double e = kin - pot;
        if (k == 1) { emin = emax = e; }
        emin = std::min(emin, e);
        emax = std::max(emax, e);
        escale = std::max({escale, std::abs(e), kin + std::abs(pot)});
    }
    traj.energy_drift = escale > 0.0 ? (emax - emin) / escale : 0.0;
    return traj;
}

Trajectory refined_trajectory(const ActionParams& params, std::array<double, 2> x_in,
                              std::array<double, 2> x_fi, double T, std::size_t n_steps_start) {
    std::size_t n = n_steps_start;
    Trajectory coarse = euclidean_trajectory(params, x_in, x_fi, T, n);
    for (int level = 0; level < 6; ++level) {
        Trajectory fine = euclidean_trajectory(params, x_in, x_fi, T, 2 * n);
        const double rel = std::abs(fine.action - coarse.action) /
                           std::max(1e-12, std::abs(fine.action));
        if (rel < 1e-4) {
            // Second-order scheme: Richardson-extrapolate the action value.
            fine.action = (4.0 * fine.action - coarse.action) / 3.0;
            return fine;
        }
        coarse = std::move(fine);
        n *= 2;
    }
    return coarse;
}

double model_amplitude(const ActionParams& params, std::array<double, 2> x_in,
                       std::array<double, 2> x_fi, double T, std::size_t n_steps) {
    const Trajectory traj = euclidean_trajectory(params, x_in, x_fi, T, n_steps);
    return std::exp(params.log_z - traj.action / params.hbar());
}

ActionScan action_scan(const ActionParams& params, const BoundarySet& boundaries,
                       std::size_t n_steps) {
    ActionScan scan;
    const std::size_t ns = boundaries.sources.size();
    const std::size_t nk = boundaries.sinks.size();
    scan.action.assign(ns, std::vector<double>(nk, 0.0));
    scan.ok.assign(ns, std::vector<bool>(nk, false));
    for (std::size_t i = 0; i < ns; ++i)
        for (std::size_t j = 0; j < nk; ++j) {
            try {
                auto traj = euclidean_trajectory(params, boundaries.sources[i],
                                                 boundaries.sinks[j], boundaries.T, n_steps);
                scan.action[i][j] = traj.action;
                scan.ok[i][j] = true;
            } catch (const std::exception&) {
                scan.ok[i][j] = false;
            }
        }
    return scan;
}

}  // namespace qact
