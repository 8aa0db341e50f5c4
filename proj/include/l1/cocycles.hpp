#pragma once
// Cyclic cocycles on Γ, their delocalized parts and growth, and the φ#tr
// pairings with idempotents and invertibles.

#include <functional>

#include "l1/index.hpp"

namespace l1 {

using Tuple = std::vector<Elem>;

struct CyclicCocycle {
    GroupPtr G;
    int degree = 0;
    std::function<cd(const Tuple&)> eval;
    double C = 1.0, Kphi = 0.0;  // declared growth |φ| ≤ C e^{K_φ Σℓ}
    bool cyclicVerified = false, cocycleVerified = false, delocalized = false;
    bool unitProductOnly = false;  // φ vanishes unless γ₀⋯γₙ = e (enumeration hint)
    std::string name;

    cd operator()(const Tuple& g) const { return eval(g); }
};

// Registry: "trace", "delta:k" (k an element, e.g. "delta:1" or "delta:1,0"),
// "area_Z2", "winding_Z". Unknown names throw ArgumentError listing the registry.
CyclicCocycle make_cocycle(const std::string& name, GroupPtr G);
std::vector<std::string> registry_names();

// JSON form: a registry name (string), or
//   {"degree": n, "expr": node, "growth": {"C": c, "K": k}}
// with node one of
//   {"const": x}            {"coord": [slot, axis]}      {"length": slot}
//   {"is": [slot, elem]}    {"unit_product": true}       {"op": "add"|"mul", "args": [...]}
//   {"op": "neg"|"exp"|"abs", "arg": node}
// where elem uses the group's element JSON and indicators evaluate to 0/1.
CyclicCocycle cocycle_from_json(const nlohmann::json& j, GroupPtr G);
// Names/keys referenced by a JSON descriptor that fail to resolve (empty if valid).
std::vector<std::string> validate_cocycle_json(const nlohmann::json& j);

struct CocycleCheck {
    long tuples = 0;
    bool exhaustive = false;
    double cyclicViolation = 0;
    double cocycleViolation = 0;
    double delocalizedViolation = 0;  // max |φ| on the identity-product locus
    bool cyclic = false, closed = false, delocalized = false;
};
// Exhaustive on ball(radius)^{n+2} when at most maxExhaustive tuples, else random samples.
CocycleCheck check_cocycle(CyclicCocycle& phi, int radius, int samples, unsigned long long seed = 1,
                           long maxExhaustive = 2'000'000, double tol = 1e-12);

// (φ_e, φ_d): restriction to the identity-product locus and its complement.
std::pair<CyclicCocycle, CyclicCocycle> delocalize(const CyclicCocycle& phi);

struct CocycleGrowth {
    double C = 0, K = 0;
    int points = 0;
};
// Fit of log max|φ| at fixed Σℓ on {1, L, log(1+L)}; K clamped at 0.
CocycleGrowth cocycle_growth(const CyclicCocycle& phi, int radius);

// Coboundary bψ (degree n+1) and a deterministic random cyclic n-cochain,
// damped by e^{-decay·Σℓ}.
CyclicCocycle coboundary(const CyclicCocycle& psi);
CyclicCocycle random_cyclic_cochain(GroupPtr G, int degree, unsigned long long seed, double decay = 0.0);

struct Pairing {
    cd value = 0;
    double tailMass = 0;  // Σ |φ|·|tr| over tuples with a slot on the last shell
    long terms = 0;
    int radius = 0;
    bool converged = false;
};

// φ#tr(a₀⊗⋯⊗aₙ) over slot supports in ball(radius).
Pairing cocycle_trace(const CyclicCocycle& phi, const std::vector<Kernel>& slots, int radius);

// (2m)!/m! (φ#tr(p^{⊗2m+1}) - φ#tr(e₁₁^{⊗2m+1})), the pairing with [p] - [e₁₁].
Pairing pair_even(const CyclicCocycle& phi, const IndexIdempotent& p, int radius, double tol = 1e-8);
// Degree-0 pairing of a half-space Θ(q) from its per-θ traces.
Pairing pair_even(const CyclicCocycle& phi, const HalfIndex& r);
// 1/m! φ#tr(((u⁻¹-1)⊗(u-1))^{⊗m+1}) for degree 2m+1.
Pairing pair_odd(const CyclicCocycle& phi, const IndexInvertible& u, int radius, double tol = 1e-8);

// (1/2πi)∫ tr(u⁻¹∂_θu) dθ for a kernel on ℤ, from its symbol on a grid.
double winding_number(const Kernel& u, int gridPoints = 4096);

}  // namespace l1
