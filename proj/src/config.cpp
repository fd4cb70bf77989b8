#include "qact/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace qact {

namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key))
            throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("invalid value for '" + key + "'");
    }
}

Exponents parse_exponents(const std::string& key, int dimension) {
    Exponents e{0, 0};
    try {
        const auto comma = key.find(',');
        if (comma == std::string::npos) {
            if (dimension != 1) throw ConfigError("");
            e[0] = std::stoi(key);
        } else {
            if (dimension != 2) throw ConfigError("");
            e[0] = std::stoi(key.substr(0, comma));
            e[1] = std::stoi(key.substr(comma + 1));
        }
    } catch (const std::exception&) {
        throw ConfigError("potential.terms: bad exponent key '" + key +
                          "' (use \"p\" in 1D, \"px,py\" in 2D)");
    }
    return e;
}

PotentialSpec parse_potential(const json& obj) {
    check_keys(obj, {"dimension", "mass", "hbar", "terms"}, "potential");
    PotentialSpec spec;
    spec.dimension = get_or<int>(obj, "dimension", 1);
    if (spec.dimension != 1 && spec.dimension != 2)
        throw ConfigError("potential.dimension must be 1 or 2");
    spec.mass = get_or<double>(obj, "mass", 1.0);
    spec.hbar = get_or<double>(obj, "hbar", 1.0);
    if (!obj.contains("terms") || !obj.at("terms").is_object() || obj.at("terms").empty())
        throw ConfigError("potential.terms: at least one term required");
    for (const auto& [key, value] : obj.at("terms").items()) {
        if (!value.is_number())
            throw ConfigError("potential.terms['" + key + "'] must be a number");
        spec.terms[parse_exponents(key, spec.dimension)] += value.get<double>();
    }
    try {
        spec.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("potential: ") + e.what());
    }
    return spec;
}

template <typename T, std::size_t N>
std::array<T, N> parse_axis_array(const json& v, const std::string& key, int dimension) {
    std::array<T, N> out{};
    if (v.is_array()) {
        if (static_cast<int>(v.size()) != dimension)
            throw ConfigError("grid." + key + ": expected " + std::to_string(dimension) +
                              " entries");
        for (std::size_t a = 0; a < v.size(); ++a) out[a] = v[a].get<T>();
    } else if (v.is_number()) {
        out[0] = v.get<T>();
        if (dimension == 2) out[1] = out[0];
    } else {
        throw ConfigError("grid." + key + ": expected number or array");
    }
    return out;
}

GridConfig parse_grid(const json& obj, int dimension) {
    check_keys(obj, {"lo", "hi", "npts"}, "grid");
    for (const char* key : {"lo", "hi", "npts"})
        if (!obj.contains(key)) throw ConfigError(std::string("grid.") + key + " is required");
    GridConfig g;
    g.lo = parse_axis_array<double, 2>(obj.at("lo"), "lo", dimension);
    g.hi = parse_axis_array<double, 2>(obj.at("hi"), "hi", dimension);
    g.npts = parse_axis_array<std::size_t, 2>(obj.at("npts"), "npts", dimension);
    return g;
}

TransitionConfig parse_transition(const json& obj) {
    check_keys(obj, {"T", "boundary", "states", "steps"}, "transition");
    TransitionConfig t;
    if (!obj.contains("T") || !obj.at("T").is_array() || obj.at("T").empty())
        throw ConfigError("transition.T: nonempty array required");
    for (const auto& v : obj.at("T")) {
        const double T = v.get<double>();
        if (T <= 0.0) throw ConfigError("transition.T entries must be positive");
        t.T.push_back(T);
    }
    if (obj.contains("boundary")) {
        const auto& b = obj.at("boundary");
        check_keys(b, {"lo", "hi", "n"}, "transition.boundary");
        t.boundary.lo = get_or<double>(b, "lo", t.boundary.lo);
        t.boundary.hi = get_or<double>(b, "hi", t.boundary.hi);
        t.boundary.n = get_or<std::size_t>(b, "n", t.boundary.n);
        if (t.boundary.n < 2 || !(t.boundary.hi > t.boundary.lo))
            throw ConfigError("transition.boundary: need hi > lo and n >= 2");
    }
    t.states = get_or<std::size_t>(obj, "states", t.states);
    t.steps = get_or<std::size_t>(obj, "steps", t.steps);
    return t;
}

FitConfig parse_fit(const json& obj, int dimension) {
    check_keys(obj,
               {"ansatz", "initial_mass", "initial_coeffs", "simplex_budget", "newton_budget",
                "tolerance", "trajectory_steps"},
               "fit");
    FitConfig f;
    if (!obj.contains("ansatz")) throw ConfigError("fit.ansatz is required");
    const auto& a = obj.at("ansatz");
    if (a.is_string()) {
        if (a.get<std::string>() != "2d-full" || dimension != 2)
            throw ConfigError("fit.ansatz: the only named family is \"2d-full\" (2D)");
        f.use_2d_full = true;
    } else if (a.is_array() && !a.empty() && dimension == 1) {
        for (const auto& v : a) f.ansatz.push_back(v.get<int>());
    } else {
        throw ConfigError("fit.ansatz: array of powers (1D) or \"2d-full\" (2D)");
    }
    f.initial_mass = get_or<double>(obj, "initial_mass", f.initial_mass);
    f.initial_coeffs = get_or<std::vector<double>>(obj, "initial_coeffs", f.initial_coeffs);
    f.simplex_budget = get_or<std::size_t>(obj, "simplex_budget", f.simplex_budget);
    f.newton_budget = get_or<std::size_t>(obj, "newton_budget", f.newton_budget);
    f.tolerance = get_or<double>(obj, "tolerance", f.tolerance);
    f.trajectory_steps = get_or<std::size_t>(obj, "trajectory_steps", f.trajectory_steps);
    return f;
}

StructureConfig parse_structure(const json& obj) {
    check_keys(obj, {"ansatz", "states", "inject_perturbation"}, "structure");
    StructureConfig s;
    s.ansatz = get_or<std::vector<int>>(obj, "ansatz", s.ansatz);
    s.states = get_or<std::size_t>(obj, "states", s.states);
    s.inject_perturbation = get_or<bool>(obj, "inject_perturbation", false);
    return s;
}

ChaosConfig parse_chaos(const json& obj) {
    check_keys(obj,
               {"energies", "samples", "horizon", "dt", "renorm_interval", "threshold",
                "baseline_samples", "quantum", "section_orbits", "section_tmax"},
               "chaos");
    ChaosConfig c;
    if (!obj.contains("energies") || !obj.at("energies").is_array() ||
        obj.at("energies").empty())
        throw ConfigError("chaos.energies: nonempty array required");
    for (const auto& v : obj.at("energies")) c.energies.push_back(v.get<double>());
    c.samples = get_or<std::size_t>(obj, "samples", c.samples);
    c.horizon = get_or<double>(obj, "horizon", c.horizon);
    c.dt = get_or<double>(obj, "dt", c.dt);
    c.renorm_interval = get_or<double>(obj, "renorm_interval", c.renorm_interval);
    c.threshold = get_or<double>(obj, "threshold", c.threshold);
    c.baseline_samples = get_or<std::size_t>(obj, "baseline_samples", c.baseline_samples);
    c.quantum = get_or<bool>(obj, "quantum", c.quantum);
    c.section_orbits = get_or<std::size_t>(obj, "section_orbits", c.section_orbits);
    c.section_tmax = get_or<double>(obj, "section_tmax", c.section_tmax);
    if (c.dt <= 0.0 || c.horizon <= 0.0) throw ConfigError("chaos: dt, horizon must be positive");
    return c;
}

}  // namespace

Grid RunConfig::make_grid() const {
    if (!grid) return default_grid_for(potential);
    try {
        if (potential.dimension == 1) return Grid::make_1d(grid->lo[0], grid->hi[0], grid->npts[0]);
        return Grid::make_2d(grid->lo[0], grid->hi[0], grid->npts[0], grid->lo[1], grid->hi[1],
                             grid->npts[1]);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    }
}

RunConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(root, {"seed", "output", "potential", "grid", "transition", "fit", "structure",
                      "chaos"},
               "config");
    if (!root.contains("potential")) throw ConfigError("potential section is required");

    RunConfig cfg;
    cfg.seed = get_or<std::uint64_t>(root, "seed", cfg.seed);
    cfg.output = get_or<std::string>(root, "output", cfg.output);
    cfg.potential = parse_potential(root.at("potential"));
    if (root.contains("grid"))
        cfg.grid = parse_grid(root.at("grid"), cfg.potential.dimension);
    if (root.contains("transition")) cfg.transition = parse_transition(root.at("transition"));
    if (root.contains("fit")) cfg.fit = parse_fit(root.at("fit"), cfg.potential.dimension);
    if (root.contains("structure")) cfg.structure = parse_structure(root.at("structure"));
    if (root.contains("chaos")) cfg.chaos = parse_chaos(root.at("chaos"));
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string echo_config(const RunConfig& cfg) {
    ojson root;
    root["seed"] = cfg.seed;
    root["output"] = cfg.output;

    ojson pot;
    pot["dimension"] = cfg.potential.dimension;
    pot["mass"] = cfg.potential.mass;
    pot["hbar"] = cfg.potential.hbar;
    ojson terms;
    for (const auto& [e, c] : cfg.potential.terms) {
        std::string key = std::to_string(e[0]);
        if (cfg.potential.dimension == 2) key += "," + std::to_string(e[1]);
        terms[key] = c;
    }
    pot["terms"] = terms;
    root["potential"] = pot;

    const Grid g = cfg.make_grid();
    ojson grid;
    for (int a = 0; a < g.dimension; ++a) {
        grid["lo"].push_back(g.lo[a]);
        grid["hi"].push_back(g.hi[a]);
        grid["npts"].push_back(g.npts[a]);
    }
    root["grid"] = grid;

    if (cfg.transition) {
        ojson t;
        t["T"] = cfg.transition->T;
        t["boundary"] = {{"lo", cfg.transition->boundary.lo},
                         {"hi", cfg.transition->boundary.hi},
                         {"n", cfg.transition->boundary.n}};
        t["states"] = cfg.transition->states;
        t["steps"] = cfg.transition->steps;
        root["transition"] = t;
    }
    if (cfg.fit) {
        ojson f;
        if (cfg.fit->use_2d_full)
            f["ansatz"] = "2d-full";
        else
            f["ansatz"] = cfg.fit->ansatz;
        f["initial_mass"] = cfg.fit->initial_mass;
        f["initial_coeffs"] = cfg.fit->initial_coeffs;
        f["simplex_budget"] = cfg.fit->simplex_budget;
        f["newton_budget"] = cfg.fit->newton_budget;
        f["tolerance"] = cfg.fit->tolerance;
        f["trajectory_steps"] = cfg.fit->trajectory_steps;
        root["fit"] = f;
    }
    if (cfg.structure) {
        ojson s;
        s["ansatz"] = cfg.structure->ansatz;
        s["states"] = cfg.structure->states;
        s["inject_perturbation"] = cfg.structure->inject_perturbation;
        root["structure"] = s;
    }
    if (cfg.chaos) {
        ojson c;
        c["energies"] = cfg.chaos->energies;
        c["samples"] = cfg.chaos->samples;
        c["horizon"] = cfg.chaos->horizon;
        c["dt"] = cfg.chaos->dt;
        c["renorm_interval"] = cfg.chaos->renorm_interval;
        c["threshold"] = cfg.chaos->threshold;
        c["baseline_samples"] = cfg.chaos->baseline_samples;
        c["quantum"] = cfg.chaos->quantum;
        c["section_orbits"] = cfg.chaos->section_orbits;
        c["section_tmax"] = cfg.chaos->section_tmax;
        root["chaos"] = c;
    }
    return root.dump(2) + "\n";
}

}  // namespace qact
