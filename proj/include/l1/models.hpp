#pragma once
// Lattice models: pure group Dirac operators, graded tensor products,
// suspensions, and half-cylinders with a cylindrical end.

#include <Eigen/Sparse>

#include "l1/calculus.hpp"
#include "l1/kernels.hpp"

namespace l1 {

using SpMat = Eigen::SparseMatrix<cd, Eigen::ColMajor, long>;

struct ModelGeometry {
    GroupPtr G;
    double h = 1.0;
    double tau = 1.0;
    double C0 = 0.0;
    double diamF = 0.0;
    std::string kind = "pure";  // pure | cylinder | half
};

ModelGeometry pure_geometry(GroupPtr G, double h = 1.0);

// Gapped Dirac model D = [[0, X*], [X, 0]], grading diag(+1, -1).
//   ℤ, ℤ/q:  X = i((m+1)δ_e - δ_1)              (gap m)
//   F_k:     X = i((m+1)δ_e - (1/k)Σ_j δ_{a_j}) (gap ≥ m)
//   ℤⁿ, products: graded tensor sum of factor models with mass m/√n, gap m.
Kernel gapped_dirac(GroupPtr G, double m, double h = 1.0);

// A ⊗̂ 1 + 1 ⊗̂ B on the product group (fiber ℂ^{dA}⊗ℂ^{dB}).
Kernel graded_tensor_sum(const Kernel& A, const Kernel& B);

// Move a kernel on an abelian group to another abelian group with the same
// coordinates (e.g. ℤ×ℤ to ℤ²).
Kernel rehome(const Kernel& a, GroupPtr target);

struct SuspendResult {
    Kernel D;
    double anticommutator = 0;  // ‖{D⊗̂1, 1⊗̂D_ℤ}‖_{1,0} on ball(NR)
    double squareDefect = 0;    // ‖S² - (D²⊗1 + 1⊗D_ℤ²)‖_{1,0} on ball(NR)
};
// D ⊗̂ 1 + 1 ⊗̂ D_ℤ with D_ℤ the gapless ℤ Dirac factor (X = i(δ_e - δ_1)).
// NR is the ball radius on which the contracts are verified.
SuspendResult suspend(const Kernel& D, int NR);

struct Displacement {
    double tau = 0;
    double C0 = 0;
    int samples = 0;
};
Displacement displacement_tau(const ModelGeometry& g, int radius);

// ---------------------------------------------------------------- half-space

struct HalfBC {
    int winding = 0;              // twist V = diag(S_x^k, 1, ...) on the boundary fiber
    double interiorStrength = 0;  // random perturbation of D⁺ on interior sites
    unsigned long long seed = 7;
    bool odd = false;             // ungraded product A⊗1 + ε_∂⊗D_x instead of the graded cylinder
};

// Operator on sites 0..L (site-major basis: index = site·d + c), Γ-equivariant
// in the boundary direction.
struct HalfKernel {
    GroupPtr G;
    int d = 1;
    int sites = 0;
    int interior = 0;
    int xprop = 1;                 // spatial propagation in sites
    double boundaryGap = 0;        // spectral gap of the boundary operator
    std::map<Elem, SpMat> comps;
    std::vector<int> grading;      // per fiber component; empty if ungraded
    HalfBC bc;
    std::string tag;

    long dim() const { return static_cast<long>(sites) * d; }
    SpMat fiber(const std::vector<double>& theta) const;
    Mat dense_fiber(const std::vector<double>& theta) const;
    Mat dense_component(const Elem& g) const;
    int word_propagation() const;
};

// Cylinder ∂ × ℤ compressed to the window of sites [x0, x1]. With bc.odd the
// fiber is that of the boundary; otherwise it doubles (H+ first, then H-).
HalfKernel cylinder_window(const Kernel& Dboundary, long x0, long x1, const HalfBC& bc);

// Half-cylinder: hard cut at site 0 (interior side) and site L.
HalfKernel half_space_model(const Kernel& Dboundary, int interiorSize, int L, const HalfBC& bc);

// The H+ → H- block (rows H-, cols H+) of a graded half-space fiber.
Mat half_plus_block(const HalfKernel& H, const std::vector<double>& theta);

double half_self_adjoint_defect(const HalfKernel& H);

struct CutoffMultiplier {
    double T = 0;
    double width = 1;
    std::vector<double> psi;  // per site
    double at(int site) const { return psi.at(site); }
    Eigen::VectorXd diag(int d) const;  // per basis index
};
// Ψ_T(x) = 1 for x ≤ T, C² decay to 0 on [T, T+width].
CutoffMultiplier cutoff(double T, double width, int sites);

// Fredholm index dim ker - dim coker of the compressed D⁺ at the x = 0 end,
// from an SVD of the truncation: singular vectors with small singular value
// are attributed to the end where their weight is concentrated.
struct ToeplitzOracle {
    int kernelDim = 0;
    int cokernelDim = 0;
    int index = 0;
    double smallestGapped = 0;  // first singular value above the cut
};
ToeplitzOracle toeplitz_index(const HalfKernel& H, const std::vector<double>& theta, double cut = 1e-6);

}  // namespace l1
