#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "qact/grid.hpp"
#include "qact/potential.hpp"

namespace qact {

// Discretized Hamiltonian: -(hbar^2/2m) Laplacian + V with three-point
// stencils per axis and Dirichlet-zero boundaries.
struct HamiltonianOperator {
    Grid grid;
    double mass = 1.0;
    double hbar = 1.0;
    double potential_min = 0.0;  // min of V over grid points; spectrum lower bound
    Eigen::SparseMatrix<double> matrix;
};

struct SpectralData {
    Grid grid;
    std::vector<double> eigenvalues;       // ascending
    std::vector<GridFunction> eigenfunctions;  // grid-normalized

    std::size_t count() const { return eigenvalues.size(); }
};

HamiltonianOperator discretize_hamiltonian(const PotentialSpec& spec, const Grid& grid);

// k lowest eigenpairs by shift-invert Lanczos with full reorthogonalization.
SpectralData eigensolve(const HamiltonianOperator& op, std::size_t k);

// Central-difference grad(psi)/psi per axis; psi must be positive on the
// interior. Returns one GridFunction per axis.
std::vector<GridFunction> log_derivative(const GridFunction& psi);

}  // namespace qact
