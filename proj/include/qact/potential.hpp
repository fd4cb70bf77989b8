#pragma once

#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "qact/grid.hpp"

namespace qact {

using Exponents = std::array<int, 2>;  // per-axis exponent; second entry unused in 1D

// Polynomial-plus-inverse-power potential. Terms map exponent tuples to
// coefficients, e.g. 1D {(2)->0.5, (-2)->5} or 2D {(2,0)->v2, (0,2)->v2,
// (2,2)->v22}.
struct PotentialSpec {
    int dimension = 1;
    double mass = 1.0;
    double hbar = 1.0;
    std::map<Exponents, double> terms;

    void add_term(int px, double c) { terms[{px, 0}] += c; }
    void add_term(int px, int py, double c) { terms[{px, py}] += c; }

    bool has_singular_terms() const {
        for (const auto& [e, c] : terms)
            if (e[0] < 0 || e[1] < 0) return true;
        return false;
    }

    void validate() const {
        if (mass <= 0.0) throw std::invalid_argument("PotentialSpec: mass must be positive");
        if (hbar <= 0.0) throw std::invalid_argument("PotentialSpec: hbar must be positive");
        for (const auto& [e, c] : terms) {
            if (e[0] < 0 || e[1] < 0) {
                if (dimension != 1)
                    throw std::invalid_argument("PotentialSpec: negative exponents only in 1D");
                if (e[0] % 2 != 0)
                    throw std::invalid_argument("PotentialSpec: negative exponents must be even");
            }
        }
    }

    double evaluate(double x, double y = 0.0) const {
        if (has_singular_terms() && x == 0.0)
            throw std::domain_error("PotentialSpec: evaluation on the singular axis");
        double v = 0.0;
        for (const auto& [e, c] : terms) {
            double t = c * ipow(x, e[0]);
            if (dimension == 2) t *= ipow(y, e[1]);
            v += t;
        }
        return v;
    }

    // dV/dx, dV/dy
    std::array<double, 2> gradient(double x, double y = 0.0) const {
        std::array<double, 2> g{0.0, 0.0};
        for (const auto& [e, c] : terms) {
            const double fx = ipow(x, e[0]);
            const double fy = dimension == 2 ? ipow(y, e[1]) : 1.0;
            if (e[0] != 0) g[0] += c * e[0] * ipow(x, e[0] - 1) * fy;
            if (dimension == 2 && e[1] != 0) g[1] += c * e[1] * ipow(y, e[1] - 1) * fx;
        }
        return g;
    }

    // Second derivatives (Vxx, Vyy, Vxy).
    std::array<double, 3> hessian(double x, double y = 0.0) const {
        std::array<double, 3> h{0.0, 0.0, 0.0};
        for (const auto& [e, c] : terms) {
            const double fx = ipow(x, e[0]);
            const double fy = dimension == 2 ? ipow(y, e[1]) : 1.0;
            if (e[0] != 0 && e[0] != 1)
                h[0] += c * e[0] * (e[0] - 1) * ipow(x, e[0] - 2) * fy;
            if (dimension == 2) {
                if (e[1] != 0 && e[1] != 1)
                    h[1] += c * e[1] * (e[1] - 1) * ipow(y, e[1] - 2) * fx;
                if (e[0] != 0 && e[1] != 0)
                    h[2] += c * e[0] * e[1] * ipow(x, e[0] - 1) * ipow(y, e[1] - 1);
            }
        }
        return h;
    }

    static double ipow(double x, int p) {
        if (p == 0) return 1.0;
        if (p < 0) return 1.0 / ipow(x, -p);
        double r = 1.0, b = x;
        int n = p;
        while (n) {
            if (n & 1) r *= b;
            b *= b;
            n >>= 1;
        }
        return r;
    }
};

// Grid choices suited to a potential family: half line for singular terms,
// full line otherwise.
inline Grid default_grid_for(const PotentialSpec& spec) {
    if (spec.dimension == 1) {
        if (spec.has_singular_terms()) {
            const std::size_t n = 3000;
            const double h = 12.0 / static_cast<double>(n);
            return Grid::make_1d(h, 12.0, n);  // (0, 12], Dirichlet at both ends
        }
        return Grid::make_1d(-10.0, 10.0, 2001);
    }
    return Grid::make_2d(-6.0, 6.0, 128, -6.0, 6.0, 128);
}

}  // namespace qact
