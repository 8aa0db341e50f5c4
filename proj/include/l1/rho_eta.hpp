#pragma once
// Localization paths, delocalized eta quadrature, the u/v transgression
// check, matrix identities from the product formula, and the APS residual.

#include "l1/cocycles.hpp"

namespace l1 {

enum class PathKind { U, P, V };
std::string path_kind_name(PathKind k);

struct LocalizationPath {
    PathKind kind = PathKind::U;
    std::vector<double> s;            // increasing, s[0] = 0
    std::vector<Kernel> nodes;        // u_s, p_s or v_s
    std::vector<Kernel> inverses;     // U and V only
    Kernel trivial;                   // 1, or e₁₁ = Π₋ for P
    double s0 = 0;                    // split point for the propagation check
    double K = 0;
    std::vector<int> propagation;     // word propagation after dropping below 1e-14 relative
    std::vector<double> normK;        // ‖node - trivial‖_{1,K}
    std::vector<double> residual;     // ‖u u⁻¹ - 1‖_{1,K}, or ‖p² - p‖_{1,0}
    bool monotone = false;            // propagation nonincreasing on s ≥ s0
    double supNorm = 0;
    GapReport gap;
    ThresholdRecord threshold;
};

struct PathOptions {
    double tau = 1.0;
    double KGamma = -1.0;             // < 0: exact growth rate
    double nodeTol = 1e-10;
    CalcOptions calc{};
};

// 0, then geometric on (0, s0], then uniform in s² up to sMax (n nodes after 0).
std::vector<double> default_s_grid(double s0, double sMax, int n);

// Refused (RefusedError) without the gap condition; ConvergenceError when a
// node misses nodeTol.
LocalizationPath rho_path(const Kernel& D, PathKind kind, const std::vector<double>& sGrid, double K,
                          const PathOptions& opt = {});

// Quadrature on t = 1/s for the u and p paths (Gaussian decay in t) and on
// α with s = scale·tan α for the v path. Derivatives use the fourth-order
// centered stencil with nodes beyond both ends; integration is Simpson.
struct QuadOptions {
    double tMax = 8.0;
    int nodes = 128;                  // intervals, multiple of 4
    bool refine = true;               // also evaluate on every second node
    double scale = 0.0;               // v path: 0 uses the spectral gap
    int radius = 0;                   // pairing radius; 0 uses the slot propagation
    double tol = 1e-8;                // pairing tail mass
    PathOptions path{};
};

struct EtaResult {
    cd value = 0;
    std::vector<double> grid;         // t (or α) nodes
    std::vector<cd> integrand;        // φ#tr(...) per node
    std::vector<double> integrandNorm;
    double fitA = 0, fitEps = 0, fitR2 = 0;
    double tailBound = 0;
    cd coarseValue = 0;
    double refineDelta = 0;           // |value - coarse value|
    bool converged = false;
    std::string variable;             // "t" or "alpha"
};

// (m!/πi) ∫ φ#tr(u̇u⁻¹ ⊗ ((u-1)⊗(u⁻¹-1))^{⊗m}) ds for φ delocalized of degree 2m.
EtaResult eta(const CyclicCocycle& phi, const Kernel& D, double K, const QuadOptions& q = {});
// Same integral along v_s = (D+si)(D-si)⁻¹ (the √π-normalized form).
EtaResult eta_cayley(const CyclicCocycle& phi, const Kernel& D, double K, const QuadOptions& q = {});
// ((2m)!/(m!πi)) ∫ φ#tr([ṗ,p] ⊗ (p - e₁₁)^{⊗2m+1}) ds for φ of degree 2m+1.
EtaResult eta_even(const CyclicCocycle& phi, const Kernel& D, double K, const QuadOptions& q = {});

struct TransgressionReport {
    EtaResult u, v;
    double residual = 0;              // |η_u - η_v|
    double oppositeResidual = 0;      // |η_u + η_v|
};
TransgressionReport transgression_check(const CyclicCocycle& phi, const Kernel& D, double K, const QuadOptions& q = {});

// Matrix identities on ℂⁿ ⊗ ℂᵏ with projections P₋, P₊ (Q = 1 - P) on ℂⁿ
// and a self-adjoint D on ℂᵏ; C = (iD+1)(iD-1)⁻¹.
struct ProductIdentityReport {
    double inverse = 0;         // (P₊⊗(iD+1) + Q₊⊗(iD-1))⁻¹ against P₊⊗(iD+1)⁻¹ + Q₊⊗(iD-1)⁻¹
    double quotient = 0;        // A B⁻¹ against P₋P₊⊗1 + P₋Q₊⊗C + Q₋P₊⊗C⁻¹ + Q₋Q₊⊗1
    double factorization = 0;   // the same against (P₋⊗C + Q₋⊗1)(P₊⊗C⁻¹ + Q₊⊗1)
    double projections = 0;     // (s⁻¹D̸ ± E)(s⁻²D̸² + 1)^{-1/2} against P± - Q±
    double worst() const;
};
ProductIdentityReport product_identity_check(const Mat& Pminus, const Mat& Pplus, const Mat& D);
// D̸ odd for the grading E; P± the positive spectral projections of s⁻¹D̸ ± E.
double projection_identity(const Mat& Dslash, const Eigen::VectorXd& E, double s, Mat* Pminus = nullptr,
                           Mat* Pplus = nullptr);
// Random D̸ on ℂⁿ (n even, balanced grading), random D on ℂᵏ, random s.
std::vector<ProductIdentityReport> product_identity_random(int samples, int n, int k, unsigned long long seed);

struct ApsOptions {
    double t = 1.0;                   // boundary construction parameter
    HalfOptions half{};
    QuadOptions quad{};
};
struct ApsReport {
    cd lhs = 0;                       // ch_φ(Ind) from Θ(q)
    cd rhs = 0;                       // η_φ of the boundary operator
    double residual = 0;              // |lhs + rhs/2|
    double trace = 0;                 // identity trace of Θ(q) - e₁₁
    HalfIndex index;
    EtaResult etaResult;
    double defectOp = 0;
    int sites = 0;
};
ApsReport aps_residual(const CyclicCocycle& phi, const Kernel& Db, int interior, const HalfBC& bc, double a, double K,
                       const ApsOptions& opt = {});

struct ApsTrend {
    std::vector<ApsReport> steps;     // default, then each refinement
    bool decreasing = false;          // nonincreasing, or all below the noise floor
    double noiseFloor = 1e-9;
};
// Each step doubles the Θ grid and the quadrature nodes.
ApsTrend aps_refinement(const CyclicCocycle& phi, const Kernel& Db, int interior, const HalfBC& bc, double a, double K,
                        int steps = 2, ApsOptions opt = {});

}  // namespace l1
