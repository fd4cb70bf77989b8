#pragma once

#include <string>
#include <vector>

#include "qact/action.hpp"
#include "qact/propagator.hpp"

namespace qact {

// One fit coefficient shared by a group of monomials, e.g. v2 (x^2 + y^2).
struct AnsatzTerm {
    std::string name;
    std::vector<Exponents> monomials;
};

// 1D term with a single monomial x^p.
AnsatzTerm ansatz_1d(int p);
// The 2D ansatz family: v11, v2, v22, v13, v4, v24, v44.
std::vector<AnsatzTerm> ansatz_2d_full();

struct FitProblem {
    AmplitudeTable reference;
    int dimension = 1;
    std::vector<AnsatzTerm> ansatz;
    double initial_mass = 1.0;
    std::vector<double> initial_coeffs;  // one per ansatz term; empty = zeros
    double hbar = 1.0;
    std::size_t simplex_budget = 400;
    std::size_t newton_budget = 60;
    double tolerance = 1e-12;
    std::size_t trajectory_steps = 0;  // 0 = automatic from T
};

struct FitResult {
    ActionParams params;
    std::vector<double> coeffs;         // per ansatz term, matching problem order
    double sigma = 0.0;                 // global relative amplitude error
    std::vector<double> residuals;      // per-pair log residuals at the optimum
    std::size_t iterations = 0;
    bool converged = false;
    std::size_t excluded_pairs = 0;
    std::vector<double> covariance_diag;  // Gauss-Newton parameter covariance estimate
};

// RMS of per-pair relative amplitude errors of the single-trajectory model
// against the reference table.
double global_error(const ActionParams& params, const AmplitudeTable& table,
                    std::size_t n_steps = 0);

FitResult fit(const FitProblem& problem);

struct ParameterScan {
    std::vector<double> T;
    std::vector<FitResult> results;
    // products m-tilde * v-tilde per ansatz term, one row per T
    std::vector<std::vector<double>> products;
};

// Per-T fits warm-started from the previous T.
ParameterScan scan_T(const FitProblem& problem_template,
                     const std::vector<AmplitudeTable>& references);

struct Fit2DReport {
    FitResult result;
    // Per term: |v_k| s^deg evaluated at the boundary-set scale s, divided by
    // the larger of the v2 and v22 magnitudes on the same scale.
    std::vector<std::string> term_names;
    std::vector<double> suppression_ratios;
};

Fit2DReport fit_2d(const FitProblem& problem, double boundary_scale);

}  // namespace qact
