#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "qact/chaos.hpp"
#include "qact/config.hpp"
#include "qact/fitter.hpp"
#include "qact/propagator.hpp"
#include "qact/structure.hpp"

namespace fs = std::filesystem;
using namespace qact;

namespace {

constexpr const char* kVersion = "qact 0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitValidation = 3;

struct ValidationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
    std::ofstream os(dir / name);
    if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
    return os;
}

void write_run_metadata(const fs::path& dir, const RunConfig& cfg) {
    fs::create_directories(dir);
    open_out(dir, "config.json") << echo_config(cfg);
    open_out(dir, "VERSION") << kVersion << "\n";
}

BoundarySet make_boundaries(const RunConfig& cfg, double T) {
    const BoundaryConfig& b = cfg.transition->boundary;
    if (cfg.potential.dimension == 1) return BoundarySet::uniform_1d(b.lo, b.hi, b.n, T);
    BoundarySet set;
    set.T = T;
    const double step = (b.hi - b.lo) / static_cast<double>(b.n - 1);
    for (std::size_t i = 0; i < b.n; ++i)
        for (std::size_t j = 0; j < b.n; ++j) {
            const std::array<double, 2> p{b.lo + step * static_cast<double>(i),
                                          b.lo + step * static_cast<double>(j)};
            set.sources.push_back(p);
            set.sinks.push_back(p);
        }
    return set;
}

std::vector<AnsatzTerm> make_ansatz(const RunConfig& cfg) {
    if (cfg.fit->use_2d_full) return ansatz_2d_full();
    std::vector<AnsatzTerm> terms;
    for (int p : cfg.fit->ansatz) terms.push_back(ansatz_1d(p));
    return terms;
}

FitProblem make_fit_problem(const RunConfig& cfg) {
    FitProblem prob;
    prob.dimension = cfg.potential.dimension;
    prob.ansatz = make_ansatz(cfg);
    prob.initial_mass = cfg.fit->initial_mass;
    prob.initial_coeffs = cfg.fit->initial_coeffs;
    prob.hbar = cfg.potential.hbar;
    prob.simplex_budget = cfg.fit->simplex_budget;
    prob.newton_budget = cfg.fit->newton_budget;
    prob.tolerance = cfg.fit->tolerance;
    prob.trajectory_steps = cfg.fit->trajectory_steps;
    return prob;
}

// ---------------------------------------------------------------- spectrum

int run_spectrum(const RunConfig& cfg, const fs::path& out) {
    const Grid grid = cfg.make_grid();
    const std::size_t k = cfg.transition ? cfg.transition->states : 16;
    auto sd = eigensolve(discretize_hamiltonian(cfg.potential, grid), k);

    auto os = open_out(out, "spectrum.csv");
    os << "n,E\n";
    for (std::size_t n = 0; n < sd.count(); ++n)
        os << n << "," << fmt(sd.eigenvalues[n]) << "\n";
    return kExitOk;
}

// -------------------------------------------------------------- amplitudes

int run_amplitudes(const RunConfig& cfg, const fs::path& out) {
    if (!cfg.transition) throw ConfigError("amplitudes requires the transition section");
    const Grid grid = cfg.make_grid();
    auto sd = eigensolve(discretize_hamiltonian(cfg.potential, grid), cfg.transition->states);

    auto os = open_out(out, "amplitudes.csv");
    const bool two_d = cfg.potential.dimension == 2;
    os << (two_d ? "T,x_in,y_in,x_fi,y_fi,G,backend,agreement\n"
                 : "T,x_in,x_fi,G,backend,agreement\n");

    double worst = 0.0;
    for (double T : cfg.transition->T) {
        auto bset = make_boundaries(cfg, T);
        auto spectral = spectral_amplitude(sd, bset, cfg.potential.hbar);
        auto stepping = stepping_amplitude(cfg.potential, grid, bset, cfg.transition->steps);

        double agree = 0.0;
        for (std::size_t i = 0; i < bset.sources.size(); ++i)
            for (std::size_t j = 0; j < bset.sinks.size(); ++j) {
                const double a = spectral.at(i, j), b = stepping.table.at(i, j);
                agree = std::max(agree, std::abs(a - b) / std::max(1e-300, std::abs(a)));
            }
        worst = std::max(worst, agree);

        for (const AmplitudeTable* table : {&spectral, &stepping.table})
            for (std::size_t i = 0; i < bset.sources.size(); ++i)
                for (std::size_t j = 0; j < bset.sinks.size(); ++j) {
                    os << fmt(T) << "," << fmt(bset.sources[i][0]) << ",";
                    if (two_d) os << fmt(bset.sources[i][1]) << ",";
                    os << fmt(bset.sinks[j][0]) << ",";
                    if (two_d) os << fmt(bset.sinks[j][1]) << ",";
                    os << fmt(table->at(i, j)) << "," << table->backend << "," << fmt(agree)
                       << "\n";
                }
    }
    if (worst > 1e-2)
        throw std::runtime_error("backend disagreement " + fmt(worst) + " exceeds 1e-2");
    return kExitOk;
}

// --------------------------------------------------------------------- fit

int run_fit(const RunConfig& cfg, const fs::path& out) {
    if (!cfg.transition || !cfg.fit)
        throw ConfigError("fit requires the transition and fit sections");
    const Grid grid = cfg.make_grid();
    auto sd = eigensolve(discretize_hamiltonian(cfg.potential, grid), cfg.transition->states);

    std::vector<double> times = cfg.transition->T;
    std::sort(times.begin(), times.end());
    std::vector<AmplitudeTable> refs;
    for (double T : times)
        refs.push_back(spectral_amplitude(sd, make_boundaries(cfg, T), cfg.potential.hbar));

    FitProblem prob = make_fit_problem(cfg);
    auto scan = scan_T(prob, refs);

    auto os = open_out(out, "fit_scan.csv");
    os << "T,mass,log_z";
    for (const auto& term : prob.ansatz) os << "," << term.name << ",m_" << term.name;
    os << ",sigma,converged,excluded\n";
    std::size_t n_ok = 0;
    for (std::size_t k = 0; k < scan.T.size(); ++k) {
        const FitResult& r = scan.results[k];
        os << fmt(scan.T[k]) << "," << fmt(r.params.mass()) << "," << fmt(r.params.log_z);
        for (std::size_t t = 0; t < prob.ansatz.size(); ++t)
            os << "," << fmt(r.coeffs[t]) << "," << fmt(scan.products[k][t]);
        os << "," << fmt(r.sigma) << "," << (r.converged ? 1 : 0) << "," << r.excluded_pairs
           << "\n";
        if (r.converged) ++n_ok;
        if (!r.converged)
            std::cerr << "warning: fit at T=" << scan.T[k] << " did not converge\n";
    }
    if (n_ok == 0) throw ValidationFailure("no fit converged at any T");

    if (cfg.fit->use_2d_full) {
        FitProblem last = prob;
        last.reference = refs.back();
        last.initial_mass = scan.results.back().params.mass();
        last.initial_coeffs = scan.results.back().coeffs;
        auto rep = fit_2d(last, std::max(std::abs(cfg.transition->boundary.lo),
                                         std::abs(cfg.transition->boundary.hi)));
        auto sos = open_out(out, "suppression.csv");
        sos << "term,coeff,ratio\n";
        for (std::size_t t = 0; t < rep.term_names.size(); ++t)
            sos << rep.term_names[t] << "," << fmt(rep.result.coeffs[t]) << ","
                << fmt(rep.suppression_ratios[t]) << "\n";
    }
    return kExitOk;
}

// --------------------------------------------------------------- structure

int run_structure(const RunConfig& cfg, const fs::path& out) {
    if (cfg.potential.dimension != 1)
        throw ConfigError("structure requires a 1D potential");
    const StructureConfig sc = cfg.structure.value_or(StructureConfig{});
    const Grid grid = cfg.make_grid();
    auto sd = eigensolve(discretize_hamiltonian(cfg.potential, grid),
                         std::max<std::size_t>(sc.states, 6));
    const GridFunction& psi = sd.eigenfunctions[0];
    const double e_gr = sd.eigenvalues[0];

    std::vector<int> ansatz = sc.ansatz;
    if (ansatz.empty())
        for (const auto& [e, c] : cfg.potential.terms) ansatz.push_back(e[0]);

    auto v_rec = reconstruct_classical_potential(psi, e_gr, cfg.potential.mass,
                                                 cfg.potential.hbar);
    auto mass_est = reconstruct_mass(psi, sd.eigenfunctions[1], e_gr, sd.eigenvalues[1],
                                     cfg.potential.hbar);
    auto prof = quantum_potential_from_ground_state(psi, e_gr, cfg.potential.hbar, ansatz);
    if (sc.inject_perturbation) {
        // negative control: a localized bump must be caught by the checks
        const double x0 = grid.coord(0, prof.max_index) + 0.8;
        for (std::size_t i = 0; i < grid.npts[0]; ++i) {
            const double d = grid.coord(0, i) - x0;
            prof.q.values[i] += 0.5 * std::exp(-8.0 * d * d);
        }
    }
    auto psi_rec = ground_state_from_quantum_potential(prof);
    auto law = transform_law_residual(cfg.potential, prof, e_gr);

    const double psi_floor = 1e-3 * psi.max_abs();
    double v_err = 0.0, psi_err = 0.0, law_err = 0.0, v_scale = 0.0;
    for (std::size_t i = 2; i + 2 < grid.npts[0]; ++i) {
        if (psi.values[i] < psi_floor) continue;
        const double x = grid.coord(0, i);
        v_err = std::max(v_err, std::abs(v_rec.values[i] - cfg.potential.evaluate(x)));
        v_scale = std::max(v_scale, std::abs(cfg.potential.evaluate(x) - e_gr));
        psi_err = std::max(psi_err, std::abs(psi_rec.values[i] - psi.values[i]));
        const double law_scale = std::max(
            1.0, 2.0 * cfg.potential.mass * std::abs(cfg.potential.evaluate(x) - e_gr));
        law_err = std::max(law_err, std::abs(law.values[i]) / law_scale);
    }
    const double v_rel = v_err / std::max(1.0, v_scale);

    // SUSY side in hbar = 2m = 1 units: V- = 2m(V - E_gr)/hbar^2 has ground
    // energy 0 and the same ground state as the original problem, so the
    // Q profile above is directly comparable to W^2.
    GridFunction v_minus(grid);
    const double unit = 2.0 * cfg.potential.mass / (cfg.potential.hbar * cfg.potential.hbar);
    for (std::size_t i = 0; i < grid.npts[0]; ++i)
        v_minus.values[i] = unit * (cfg.potential.evaluate(grid.coord(0, i)) - e_gr);
    auto pair = susy_partner(v_minus, std::max<std::size_t>(sc.states, 6));
    QuantumPotentialProfile prof_unit = prof;
    prof_unit.hbar = 1.0;
    auto equiv = susy_quantum_equivalence(pair, prof_unit);
    auto sd_minus_full = eigensolve_unit(v_minus, std::max<std::size_t>(sc.states, 6));
    auto sd_plus_full = eigensolve_unit(pair.v_plus, std::max<std::size_t>(sc.states, 6));
    double susy_gap = 0.0;
    const std::size_t n_align = std::min(sd_plus_full.count(), sd_minus_full.count() - 1);
    for (std::size_t n = 0; n < n_align; ++n)
        susy_gap = std::max(susy_gap, std::abs(sd_plus_full.eigenvalues[n] -
                                               sd_minus_full.eigenvalues[n + 1]));

    {
        auto os = open_out(out, "structure.csv");
        os << "x,v_true,v_rec,q,psi,psi_rec,transform_residual\n";
        for (std::size_t i = 0; i < grid.npts[0]; ++i) {
            const double x = grid.coord(0, i);
            os << fmt(x) << "," << fmt(cfg.potential.evaluate(x)) << "," << fmt(v_rec.values[i])
               << "," << fmt(prof.q.values[i]) << "," << fmt(psi.values[i]) << ","
               << fmt(psi_rec.values[i]) << "," << fmt(law.values[i]) << "\n";
        }
    }
    {
        auto os = open_out(out, "susy.csv");
        os << "x,v_minus,v_plus,w\n";
        for (std::size_t i = 0; i < grid.npts[0]; ++i)
            os << fmt(grid.coord(0, i)) << "," << fmt(pair.v_minus.values[i]) << ","
               << fmt(pair.v_plus.values[i]) << "," << fmt(pair.superpotential.values[i])
               << "\n";
    }
    {
        auto os = open_out(out, "susy_spectra.csv");
        os << "n,e_minus,e_plus\n";
        for (std::size_t n = 0; n < n_align; ++n)
            os << n << "," << fmt(sd_minus_full.eigenvalues[n + 1]) << ","
               << fmt(sd_plus_full.eigenvalues[n]) << "\n";
    }

    struct Check {
        const char* name;
        double value;
        double threshold;
    };
    const std::vector<Check> checks = {
        {"v_round_trip_rel", v_rel, 0.01},
        {"mass_scatter", mass_est.scatter, 0.01},
        {"psi_round_trip", psi_err, 1e-3},
        {"transform_law_bulk", law_err, 1e-3},
        {"ansatz_residual", prof.ansatz_residual, 1e-3},
        {"susy_w2_vs_q", equiv.max_deviation, 1e-6},
        {"susy_spectral_gap", susy_gap, 1e-3},
    };
    bool all_pass = true;
    auto os = open_out(out, "structure_summary.csv");
    os << "check,value,threshold,pass\n";
    for (const auto& c : checks) {
        const bool pass = c.value <= c.threshold;
        all_pass = all_pass && pass;
        os << c.name << "," << fmt(c.value) << "," << fmt(c.threshold) << "," << (pass ? 1 : 0)
           << "\n";
    }
    os << "reconstructed_mass," << fmt(mass_est.mass) << ",," << (mass_est.consistent ? 1 : 0)
       << "\n";
    if (!all_pass) throw ValidationFailure("structure invariant violation, see structure_summary.csv");
    return kExitOk;
}

// ------------------------------------------------------------------- chaos

PotentialSpec integrable_baseline(const PotentialSpec& spec) {
    PotentialSpec base = spec;
    base.terms.clear();
    for (const auto& [e, c] : spec.terms)
        if (e[0] == 0 || e[1] == 0) base.terms[e] = c;
    return base;
}

double potential_floor(const Dynamics& dyn) {
    double best = dyn.potential(0.0, 0.0);
    for (int i = -40; i <= 40; ++i)
        for (int j = -40; j <= 40; ++j)
            best = std::min(best, dyn.potential(0.1 * i, 0.1 * j));
    return best;
}

void run_fraction_scan(const Dynamics& dyn, const Dynamics& baseline, const ChaosConfig& cc,
                       std::uint64_t seed, std::ostream& os, bool& any_flagged) {
    const double v0 = potential_floor(dyn);
    const double vb = potential_floor(baseline);
    for (double e_rel : cc.energies) {
        const double threshold =
            cc.threshold > 0.0
                ? cc.threshold
                : calibrate_threshold(baseline, vb + e_rel, cc.baseline_samples, cc.horizon,
                                      cc.dt, seed);
        auto fr = chaotic_fraction(dyn, v0 + e_rel, cc.samples, threshold, cc.horizon, cc.dt,
                                   seed);
        any_flagged = any_flagged || fr.flagged;
        os << fmt(e_rel) << "," << fr.n_accepted << "," << fmt(fr.fraction) << ","
           << fmt(fr.threshold) << "," << (fr.flagged ? 1 : 0) << "\n";
    }
}

int run_chaos(const RunConfig& cfg, const fs::path& out) {
    if (cfg.potential.dimension != 2) throw ConfigError("chaos requires a 2D potential");
    if (!cfg.chaos) throw ConfigError("chaos requires the chaos section");
    const ChaosConfig& cc = *cfg.chaos;

    Dynamics classical(cfg.potential);
    Dynamics baseline(integrable_baseline(cfg.potential));

    bool any_flagged = false;
    {
        auto os = open_out(out, "fraction.csv");
        os << "energy,n,fraction,threshold,flagged\n";
        run_fraction_scan(classical, baseline, cc, cfg.seed, os, any_flagged);
    }

    if (cc.quantum) {
        if (!cfg.transition || !cfg.fit || cfg.transition->T.size() < 2)
            throw ConfigError("chaos.quantum requires fit + transition with at least two T");
        const Grid grid = cfg.make_grid();
        auto sd = eigensolve(discretize_hamiltonian(cfg.potential, grid),
                             cfg.transition->states);
        std::vector<double> times = cfg.transition->T;
        std::sort(times.begin(), times.end());
        std::vector<AmplitudeTable> refs;
        for (double T : {times[times.size() - 2], times.back()})
            refs.push_back(spectral_amplitude(sd, make_boundaries(cfg, T), cfg.potential.hbar));
        FitProblem prob = make_fit_problem(cfg);
        prob.reference = refs[0];
        auto r1 = fit(prob);
        prob.reference = refs[1];
        prob.initial_mass = r1.params.mass();
        prob.initial_coeffs = r1.coeffs;
        auto r2 = fit(prob);
        double drift = std::abs(r2.params.mass() - r1.params.mass()) /
                       std::max(1e-12, std::abs(r2.params.mass()));
        for (std::size_t t = 0; t < r2.coeffs.size(); ++t)
            drift = std::max(drift, std::abs(r2.coeffs[t] - r1.coeffs[t]) /
                                        std::max(1.0, std::abs(r2.coeffs[t])));
        if (drift > 0.01)
            std::cerr << "warning: fitted parameters moved " << fmt(100.0 * drift)
                      << "% between the two largest T\n";

        Dynamics quantum(r2.params);
        Dynamics qbaseline(integrable_baseline(r2.params.potential));
        auto os = open_out(out, "fraction_quantum.csv");
        os << "energy,n,fraction,threshold,flagged\n";
        run_fraction_scan(quantum, qbaseline, cc, cfg.seed, os, any_flagged);
    }

    {
        // Representative diagnostics at the highest configured energy.
        const double e_top = potential_floor(classical) +
                             *std::max_element(cc.energies.begin(), cc.energies.end());
        auto states = sample_energy_shell(classical, e_top,
                                          std::max<std::size_t>(cc.section_orbits, 1), cfg.seed);
        auto los = open_out(out, "lyapunov.csv");
        los << "t,l1,l2,l3,l4\n";
        auto res = lyapunov_spectrum(classical, states[0], cc.horizon, cc.dt,
                                     cc.renorm_interval);
        for (std::size_t i = 0; i < res.times.size(); ++i) {
            los << fmt(res.times[i]);
            for (double l : res.history[i]) los << "," << fmt(l);
            los << "\n";
        }

        auto sos = open_out(out, "section.csv");
        sos << "orbit_id,t,x,px\n";
        for (std::size_t k = 0; k < cc.section_orbits && k < states.size(); ++k) {
            auto sec = poincare_section(classical, states[k], cc.section_tmax, cc.dt);
            for (const auto& p : sec.points)
                sos << k << "," << fmt(p.t) << "," << fmt(p.x) << "," << fmt(p.px) << "\n";
        }
    }

    if (any_flagged)
        throw std::runtime_error("discard budget exceeded on at least one energy row");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(kVersion) + " - quantum action toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 1;

    for (const char* name : {"spectrum", "amplitudes", "fit", "structure", "chaos"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "configuration file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides config)");
        sub->add_option("--seed", seed, "random seed (overrides config)")
            ->each([&](const std::string&) { seed_set = true; });
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    }

    CLI11_PARSE(app, argc, argv);
    const std::string cmd = app.get_subcommands().front()->get_name();

    try {
        RunConfig cfg = load_config(config_path);
        if (seed_set) cfg.seed = seed;
        if (!out_dir.empty()) cfg.output = out_dir;

        const fs::path out(cfg.output);
        write_run_metadata(out, cfg);

        if (cmd == "spectrum") return run_spectrum(cfg, out);
        if (cmd == "amplitudes") return run_amplitudes(cfg, out);
        if (cmd == "fit") return run_fit(cfg, out);
        if (cmd == "structure") return run_structure(cfg, out);
        if (cmd == "chaos") return run_chaos(cfg, out);
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ValidationFailure& e) {
        std::cerr << "validation failure: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
}
