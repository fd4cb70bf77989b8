#include "qact/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace qact {

HamiltonianOperator discretize_hamiltonian(const PotentialSpec& spec, const Grid& grid) {
    spec.validate();
    if (spec.dimension != grid.dimension)
        throw std::invalid_argument("discretize_hamiltonian: dimension mismatch");
    if (spec.has_singular_terms() && grid.lo[0] <= 0.0)
        throw std::invalid_argument(
            "discretize_hamiltonian: singular potential needs a half-line grid (lo > 0)");

    HamiltonianOperator op;
    op.grid = grid;
    op.mass = spec.mass;
    op.hbar = spec.hbar;

    const std::size_t n = grid.total_points();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * n);

    std::array<double, 2> hop{0.0, 0.0};
    double diag_kin = 0.0;
    for (int a = 0; a < grid.dimension; ++a) {
        const double dx = grid.spacing(a);
        hop[a] = -spec.hbar * spec.hbar / (2.0 * spec.mass * dx * dx);
        diag_kin += spec.hbar * spec.hbar / (spec.mass * dx * dx);
    }

    const std::size_t nx = grid.npts[0];
    const std::size_t ny = grid.dimension == 2 ? grid.npts[1] : 1;
    for (std::size_t ix = 0; ix < nx; ++ix) {
        for (std::size_t iy = 0; iy < ny; ++iy) {
            const std::size_t row = grid.flat(ix, iy);
            const double x = grid.coord(0, ix);
            const double y = grid.dimension == 2 ? grid.coord(1, iy) : 0.0;
            const double v = spec.evaluate(x, y);
            if (row == 0 || v < op.potential_min) op.potential_min = v;
            trip.emplace_back(row, row, diag_kin + v);
            if (ix > 0) trip.emplace_back(row, grid.flat(ix - 1, iy), hop[0]);
            if (ix + 1 < nx) trip.emplace_back(row, grid.flat(ix + 1, iy), hop[0]);
            if (grid.dimension == 2) {
                if (iy > 0) trip.emplace_back(row, grid.flat(ix, iy - 1), hop[1]);
                if (iy + 1 < ny) trip.emplace_back(row, grid.flat(ix, iy + 1), hop[1]);
            }
        }
    }

    op.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    op.matrix.setFromTriplets(trip.begin(), trip.end());
    return op;
}

SpectralData eigensolve(const HamiltonianOperator& op, std::size_t k) {
    const std::size_t n = op.grid.total_points();
    if (k == 0) throw std::invalid_argument("eigensolve: k must be positive");
    if (5 * k > n)
        throw std::invalid_argument("eigensolve: k exceeds 0.2 x grid points");

    // Shift below the spectrum: H = K + V with K positive semidefinite,
    // so lambda_min >= min(V on grid).
    const double sigma = op.potential_min - 1.0;

    Eigen::SparseMatrix<double> shifted = op.matrix;
    for (Eigen::Index i = 0; i < shifted.rows(); ++i)
        shifted.coeffRef(i, i) -= sigma;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
    solver.compute(shifted);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eigensolve: factorization of shifted Hamiltonian failed");

    // Shift-invert Lanczos with full reorthogonalization, restarted with
    // deflation: converged Ritz pairs are locked and every later sweep runs
    // orthogonal to them. A single Krylov sequence carries at most one
    // vector per degenerate eigenspace (symmetric 2D potentials have exact
    // degeneracies between parity sectors), so the restarts are what
    // recover the missing partners.
    std::vector<double> locked_E;
    std::vector<Eigen::VectorXd> locked_psi;
    const std::size_t m = std::min(n, std::max(2 * k + 40, k + 60));
    Eigen::MatrixXd V(n, m);
    Eigen::VectorXd alpha(m), beta(m);

    // Deterministic pseudo-random start vectors, one stream per sweep.
    auto start_vector = [&](std::uint64_t sweep) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(n));
        std::uint64_t s = 0x9e3779b97f4a7c15ULL * (sweep + 1);
        for (std::size_t i = 0; i < n; ++i) {
            s += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = s;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            z ^= z >> 31;
            v(static_cast<Eigen::Index>(i)) =
                static_cast<double>(z >> 11) * 0x1.0p-52 - 1.0;
        }
        return v;
    };

    for (std::uint64_t sweep = 0; sweep < 5 && locked_E.size() < k; ++sweep) {
        Eigen::VectorXd v = start_vector(sweep);
        for (const auto& p : locked_psi) v -= p.dot(v) * p;
        if (v.norm() < 1e-8) continue;
        v.normalize();

        std::size_t mdone = 0;
        for (std::size_t j = 0; j < m; ++j) {
            V.col(static_cast<Eigen::Index>(j)) = v;
            Eigen::VectorXd w = solver.solve(v);
            alpha(static_cast<Eigen::Index>(j)) = v.dot(w);
            // Full reorthogonalization against the basis and the locked
            // pairs, twice for good measure.
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t i = 0; i <= j; ++i) {
                    const auto vi = V.col(static_cast<Eigen::Index>(i));
                    w -= vi.dot(w) * vi;
                }
                for (const auto& p : locked_psi) w -= p.dot(w) * p;
            }
            const double b = w.norm();
            beta(static_cast<Eigen::Index>(j)) = b;
            mdone = j + 1;
            if (b < 1e-13) break;  // invariant subspace found
            v = w / b;
        }

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
        tri.computeFromTridiagonal(alpha.head(static_cast<Eigen::Index>(mdone)),
                                   beta.head(static_cast<Eigen::Index>(mdone) - 1));
        if (tri.info() != Eigen::Success)
            throw std::runtime_error("eigensolve: tridiagonal QL iteration failed");

        // Largest Ritz values of the inverse operator = lowest states of H.
        // Lock every pair that passes the residual check.
        const Eigen::VectorXd theta = tri.eigenvalues();
        const Eigen::MatrixXd S = tri.eigenvectors();
        for (std::size_t j = 0; j < mdone && locked_E.size() < k; ++j) {
            const Eigen::Index col = static_cast<Eigen::Index>(mdone - 1 - j);
            const double th = theta(col);
            if (th <= 0.0) break;
            const double E = sigma + 1.0 / th;
            Eigen::VectorXd psi = V.leftCols(static_cast<Eigen::Index>(mdone)) * S.col(col);
            const double res = (op.matrix * psi - E * psi).norm();
            if (res > 1e-6 * std::max(1.0, std::abs(E))) break;
            psi.normalize();
            locked_E.push_back(E);
            locked_psi.push_back(std::move(psi));
        }
    }

    if (locked_E.size() < k)
        throw std::runtime_error("eigensolve: Ritz pair failed to converge");

    std::vector<std::size_t> order(locked_E.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return locked_E[a] < locked_E[b]; });

    SpectralData out;
    out.grid = op.grid;
    const double vol = op.grid.cell_volume();
    for (std::size_t j = 0; j < k; ++j) {
        const double E = locked_E[order[j]];
        Eigen::VectorXd psi = locked_psi[order[j]];
        psi /= std::sqrt(psi.squaredNorm() * vol);
        // Deterministic sign: largest-magnitude component positive.
        Eigen::Index imax;
        psi.cwiseAbs().maxCoeff(&imax);
        if (psi(imax) < 0.0) psi = -psi;

        if (j == 0) {
            // Nodeless ground state: flip roundoff-level negatives in the tails.
            const double floor = 1e-12 * psi(imax);
            for (Eigen::Index i = 0; i < psi.size(); ++i)
                if (psi(i) < 0.0 && psi(i) > -floor) psi(i) = -psi(i);
        }

        GridFunction f(op.grid);
        for (std::size_t i = 0; i < n; ++i) f.values[i] = psi(static_cast<Eigen::Index>(i));
        out.eigenvalues.push_back(E);
        out.eigenfunctions.push_back(std::move(f));
    }

    return out;
}

std::vector<GridFunction> log_derivative(const GridFunction& psi) {
    const Grid& g = psi.grid;
    const std::size_t nx = g.npts[0];
    const std::size_t ny = g.dimension == 2 ? g.npts[1] : 1;

    for (std::size_t ix = 1; ix + 1 < nx; ++ix)
        for (std::size_t iy = (g.dimension == 2 ? 1u : 0u);
             iy + 1 < ny || (g.dimension == 1 && iy < 1); ++iy)
            if (psi(ix, iy) <= 0.0)
                throw std::invalid_argument("log_derivative: psi must be positive on the interior");

    std::vector<GridFunction> out;
    for (int a = 0; a < g.dimension; ++a) {
        GridFunction u(g);
        const double inv2h = 1.0 / (2.0 * g.spacing(a));
        for (std::size_t ix = 0; ix < nx; ++ix) {
            for (std::size_t iy = 0; iy < ny; ++iy) {
                const double p = psi(ix, iy);
                double d;
                if (a == 0) {
                    if (ix == 0)
                        d = (psi(1, iy) - psi(0, iy)) * 2.0 * inv2h;
                    else if (ix + 1 == nx)
                        d = (psi(nx - 1, iy) - psi(nx - 2, iy)) * 2.0 * inv2h;
                    else
                        d = (psi(ix + 1, iy) - psi(ix - 1, iy)) * inv2h;
                } else {
                    if (iy == 0)
                        d = (psi(ix, 1) - psi(ix, 0)) * 2.0 * inv2h;
                    else if (iy + 1 == ny)
                        d = (psi(ix, ny - 1) - psi(ix, ny - 2)) * 2.0 * inv2h;
                    else
                        d = (psi(ix, iy + 1) - psi(ix, iy - 1)) * inv2h;
                }
                u(ix, iy) = p != 0.0 ? d / p : 0.0;
            }
        }
        out.push_back(std::move(u));
    }
    return out;
}

}  // namespace qact
