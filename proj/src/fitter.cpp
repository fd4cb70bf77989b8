#include "qact/fitter.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace qact {

AnsatzTerm ansatz_1d(int p) {
    AnsatzTerm t;
    t.name = "v" + std::to_string(p);
    t.monomials = {{p, 0}};
    return t;
}

std::vector<AnsatzTerm> ansatz_2d_full() {
    auto pair_term = [](const std::string& name, Exponents a, Exponents b) {
        AnsatzTerm t;
        t.name = name;
        t.monomials = {a, b};
        return t;
    };
    auto single = [](const std::string& name, Exponents a) {
        AnsatzTerm t;
        t.name = name;
        t.monomials = {a};
        return t;
    };
    return {
        single("v11", {1, 1}),
        pair_term("v2", {2, 0}, {0, 2}),
        single("v22", {2, 2}),
        pair_term("v13", {1, 3}, {3, 1}),
        pair_term("v4", {4, 0}, {0, 4}),
        pair_term("v24", {2, 4}, {4, 2}),
        single("v44", {4, 4}),
    };
}

namespace {

struct PairList {
    std::vector<std::array<double, 2>> src, snk;
    std::vector<double> log_g;
};

PairList collect_pairs(const AmplitudeTable& table) {
    PairList p;
    for (std::size_t i = 0; i < table.boundaries.sources.size(); ++i)
        for (std::size_t j = 0; j < table.boundaries.sinks.size(); ++j) {
            if (!(table.G[i][j] > 0.0))
                throw std::invalid_argument("fit: reference table must be positive");
            p.src.push_back(table.boundaries.sources[i]);
            p.snk.push_back(table.boundaries.sinks[j]);
            p.log_g.push_back(std::log(table.G[i][j]));
        }
    return p;
}

std::size_t steps_for(double T, std::size_t requested) {
    if (requested) return requested;
    return std::max<std::size_t>(256, static_cast<std::size_t>(64.0 * T));
}

ActionParams build_params(const FitProblem& prob, const Eigen::VectorXd& theta) {
    ActionParams p;
    p.potential.dimension = prob.dimension;
    p.potential.hbar = prob.hbar;
    p.potential.mass = std::exp(theta(0));
    for (std::size_t t = 0; t < prob.ansatz.size(); ++t)
        for (const auto& mono : prob.ansatz[t].monomials)
            p.potential.terms[mono] += theta(static_cast<Eigen::Index>(t + 1));
    return p;
}

// Log residuals with ln Z profiled out (it enters additively): r centered on
// its mean. Pairs whose trajectory fails are dropped and counted.
struct Objective {
    const FitProblem& prob;
    PairList pairs;
    std::size_t n_steps;
    mutable std::size_t evals = 0;

    explicit Objective(const FitProblem& p)
        : prob(p), pairs(collect_pairs(p.reference)),
          n_steps(steps_for(p.reference.boundaries.T, p.trajectory_steps)) {}

    bool residuals(const Eigen::VectorXd& theta, Eigen::VectorXd& r, double& log_z,
                   std::size_t* excluded = nullptr) const {
        ++evals;
        ActionParams params = build_params(prob, theta);
        const double T = prob.reference.boundaries.T;
        const std::size_t n = pairs.log_g.size();
        std::vector<double> vals(n);
        std::vector<bool> ok(n, true);
        std::size_t kept = 0;
        for (std::size_t k = 0; k < n; ++k) {
            try {
                auto traj = euclidean_trajectory(params, pairs.src[k], pairs.snk[k], T, n_steps);
                vals[k] = -traj.action / prob.hbar - pairs.log_g[k];
                ++kept;
            } catch (const std::exception&) {
                ok[k] = false;
            }
        }
        if (excluded) *excluded = n - kept;
        if (kept < prob.ansatz.size() + 2) return false;
        double mean = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            if (ok[k]) mean += vals[k];
        mean /= static_cast<double>(kept);
        log_z = -mean;
        r.resize(static_cast<Eigen::Index>(kept));
        Eigen::Index m = 0;
        for (std::size_t k = 0; k < n; ++k)
            if (ok[k]) r(m++) = vals[k] - mean;
        return true;
    }

    double operator()(const Eigen::VectorXd& theta) const {
        Eigen::VectorXd r;
        double lz;
        if (!residuals(theta, r, lz)) return std::numeric_limits<double>::infinity();
        return r.squaredNorm();
    }
};

// Standard Nelder-Mead; returns the best vertex.
Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                            Eigen::VectorXd x0, std::size_t budget, double tol,
                            std::size_t* used = nullptr) {
    const Eigen::Index n = x0.size();
    std::vector<Eigen::VectorXd> v(n + 1, x0);
    std::vector<double> fv(n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double h = std::abs(x0(i)) > 1e-8 ? 0.05 * std::abs(x0(i)) : 0.02;
        v[i + 1](i) += h;
    }
    for (std::size_t i = 0; i < v.size(); ++i) fv[i] = f(v[i]);

    std::size_t it = 0;
    for (; it < budget; ++it) {
        std::vector<std::size_t> order(v.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        std::vector<Eigen::VectorXd> vs;
        std::vector<double> fs;
        for (auto i : order) {
            vs.push_back(v[i]);
            fs.push_back(fv[i]);
        }
        v = vs;
        fv = fs;
        if (fv[n] - fv[0] < tol * (1.0 + std::abs(fv[0]))) break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i) centroid += v[i];
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd xr = centroid + (centroid - v[n]);
        const double fr = f(xr);
        if (fr < fv[0]) {
            const Eigen::VectorXd xe = centroid + 2.0 * (centroid - v[n]);
            const double fe = f(xe);
            if (fe < fr) {
                v[n] = xe;
                fv[n] = fe;
            } else {
                v[n] = xr;
                fv[n] = fr;
            }
        } else if (fr < fv[n - 1]) {
            v[n] = xr;
            fv[n] = fr;
        } else {
            const Eigen::VectorXd xc = centroid + 0.5 * (v[n] - centroid);
            const double fc = f(xc);
            if (fc < fv[n]) {
                v[n] = xc;
                fv[n] = fc;
            } else {
                for (Eigen::Index i = 1; i <= n; ++i) {
                    v[i] = v[0] + 0.5 * (v[i] - v[0]);
                    fv[i] = f(v[i]);
                }
            }
        }
    }
    if (used) *used = it;
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (fv[i] < fv[best]) best = i;
    return v[best];
}

}  // namespace

double global_error(const ActionParams& params, const AmplitudeTable& table,
                    std::size_t n_steps) {
    const double T = table.boundaries.T;
    const std::size_t steps = steps_for(T, n_steps);
    double sum = 0.0;
    std::size_t n = 0, excluded = 0;
    for (std::size_t i = 0; i < table.boundaries.sources.size(); ++i)
        for (std::size_t j = 0; j < table.boundaries.sinks.size(); ++j) {
            try {
                const double g_model = model_amplitude(params, table.boundaries.sources[i],
                                                       table.boundaries.sinks[j], T, steps);
                const double g_ref = table.G[i][j];
                const double d = (g_model - g_ref) / g_ref;
                sum += d * d;
                ++n;
            } catch (const std::exception&) {
                ++excluded;
            }
        }
    if (n == 0) throw std::runtime_error("global_error: every pair failed");
    return std::sqrt(sum / static_cast<double>(n));
}

FitResult fit(const FitProblem& problem) {
    if (problem.ansatz.empty())
        throw std::invalid_argument("fit: ansatz needs at least one potential term");
    if (problem.initial_mass <= 0.0)
        throw std::invalid_argument("fit: initial mass must be positive");

    Objective obj(problem);
    const Eigen::Index np = static_cast<Eigen::Index>(problem.ansatz.size()) + 1;
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(np);
    theta(0) = std::log(problem.initial_mass);
    if (!problem.initial_coeffs.empty()) {
        if (problem.initial_coeffs.size() != problem.ansatz.size())
            throw std::invalid_argument("fit: initial_coeffs size mismatch");
        for (Eigen::Index i = 1; i < np; ++i) theta(i) = problem.initial_coeffs[i - 1];
    }

    std::size_t nm_iters = 0;
    if (problem.simplex_budget > 0)
        theta = nelder_mead([&](const Eigen::VectorXd& t) { return obj(t); }, theta,
                            problem.simplex_budget, problem.tolerance, &nm_iters);

    // Gauss-Newton refinement with finite-difference sensitivities and
    // Levenberg damping.
    Eigen::VectorXd r;
    double log_z = 0.0;
    std::size_t excluded = 0;
    if (!obj.residuals(theta, r, log_z, &excluded))
        throw std::runtime_error("fit: objective not evaluable at the simplex optimum");
    double f = r.squaredNorm();
    double lambda = 1e-8;
    Eigen::MatrixXd jac(r.size(), np);
    Eigen::MatrixXd jtj_last = Eigen::MatrixXd::Identity(np, np);
    std::size_t gn_iters = 0;

    for (std::size_t it = 0; it < problem.newton_budget; ++it, ++gn_iters) {
        for (Eigen::Index p = 0; p < np; ++p) {
            const double h = 1e-6 * std::max(1.0, std::abs(theta(p)));
            Eigen::VectorXd tp = theta, tm = theta;
            tp(p) += h;
            tm(p) -= h;
            Eigen::VectorXd rp, rm;
            double lz;
            if (!obj.residuals(tp, rp, lz) || !obj.residuals(tm, rm, lz) ||
                rp.size() != r.size() || rm.size() != r.size()) {
                jac.col(p).setZero();
                continue;
            }
            jac.col(p) = (rp - rm) / (2.0 * h);
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        jtj_last = jtj;
        const Eigen::VectorXd jtr = jac.transpose() * r;
        if (jtr.lpNorm<Eigen::Infinity>() < problem.tolerance) break;

        bool accepted = false;
        for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
            Eigen::MatrixXd m = jtj;
            m.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
            const Eigen::VectorXd step = m.ldlt().solve(jtr);
            const Eigen::VectorXd cand = theta - step;
            Eigen::VectorXd rc;
            double lzc;
            if (obj.residuals(cand, rc, lzc) && rc.squaredNorm() < f) {
                const double df = f - rc.squaredNorm();
                theta = cand;
                r = rc;
                log_z = lzc;
                f = rc.squaredNorm();
                lambda = std::max(1e-12, lambda * 0.3);
                accepted = true;
                if (df < problem.tolerance * (1.0 + f) &&
                    step.lpNorm<Eigen::Infinity>() < 1e-10)
                    it = problem.newton_budget;  // stationary
            } else {
                lambda *= 10.0;
            }
        }
        if (!accepted) break;
    }

    FitResult out;
    out.params = build_params(problem, theta);
    out.params.log_z = log_z;
    for (std::size_t t = 0; t < problem.ansatz.size(); ++t)
        out.coeffs.push_back(theta(static_cast<Eigen::Index>(t + 1)));
    out.residuals.assign(r.data(), r.data() + r.size());
    out.iterations = nm_iters + gn_iters;
    out.excluded_pairs = excluded;
    out.converged = std::isfinite(f);
    out.sigma = global_error(out.params, problem.reference,
                             steps_for(problem.reference.boundaries.T, problem.trajectory_steps));

    // Covariance diagnostics: sigma^2 (J^T J)^-1 diagonal; large entries flag
    // flat directions.
    const double dof = std::max<double>(1.0, static_cast<double>(r.size()) -
                                                 static_cast<double>(np));
    const double s2 = f / dof;
    Eigen::MatrixXd cov = jtj_last;
    cov.diagonal().array() += 1e-14;
    const Eigen::MatrixXd cinv = cov.ldlt().solve(Eigen::MatrixXd::Identity(np, np));
    for (Eigen::Index i = 0; i < np; ++i)
        out.covariance_diag.push_back(s2 * cinv(i, i));
    return out;
}

ParameterScan scan_T(const FitProblem& problem_template,
                     const std::vector<AmplitudeTable>& references) {
    if (references.size() < 3)
        throw std::invalid_argument("scan_T: need at least 3 transition times");
    for (std::size_t k = 1; k < references.size(); ++k)
        if (references[k].boundaries.T <= references[k - 1].boundaries.T)
            throw std::invalid_argument("scan_T: T values must be strictly increasing");

    ParameterScan scan;
    FitProblem prob = problem_template;
    for (const auto& table : references) {
        prob.reference = table;
        FitResult res;
        try {
            res = fit(prob);
        } catch (const std::exception&) {
            res.converged = false;
        }
        if (res.converged) {
            // Warm start the next T.
            prob.initial_mass = res.params.mass();
            prob.initial_coeffs = res.coeffs;
        }
        scan.T.push_back(table.boundaries.T);
        std::vector<double> prod;
        for (double c : res.coeffs) prod.push_back(res.params.mass() * c);
        scan.products.push_back(std::move(prod));
        scan.results.push_back(std::move(res));
    }
    return scan;
}

Fit2DReport fit_2d(const FitProblem& problem, double boundary_scale) {
    if (problem.dimension != 2) throw std::invalid_argument("fit_2d: dimension must be 2");
    Fit2DReport rep;
    rep.result = fit(problem);
    const double s = boundary_scale;

    double ref_scale = 0.0;
    std::vector<double> magnitude(problem.ansatz.size(), 0.0);
    for (std::size_t t = 0; t < problem.ansatz.size(); ++t) {
        const auto& e = problem.ansatz[t].monomials.front();
        const int deg = e[0] + e[1];
        magnitude[t] = std::abs(rep.result.coeffs[t]) * std::pow(s, deg);
        if (problem.ansatz[t].name == "v2" || problem.ansatz[t].name == "v22")
            ref_scale = std::max(ref_scale, magnitude[t]);
    }
    if (ref_scale <= 0.0) ref_scale = 1e-300;
    for (std::size_t t = 0; t < problem.ansatz.size(); ++t) {
        rep.term_names.push_back(problem.ansatz[t].name);
        rep.suppression_ratios.push_back(magnitude[t] / ref_scale);
    }
    return rep;
}

}  // namespace qact
