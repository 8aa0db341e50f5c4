#pragma once
// Index classes: the idempotent p_{F(D)} and odd unitaries on pure kernels,
// vanishing certificates, and the boundary pipeline on half-cylinders
// (cut-off quasi-idempotent q, Θ(q), the odd invertible 1 + f_n(P)Ψ_T).

#include <optional>

#include "l1/calculus.hpp"
#include "l1/models.hpp"

namespace l1 {

// A construction whose hypothesis is not met; carries the measured numbers.
struct RefusedError : std::runtime_error {
    double measured, threshold;
    RefusedError(const std::string& m, double meas, double thr)
        : std::runtime_error(m), measured(meas), threshold(thr) {}
};

// ---------------------------------------------------------------- pure kernels

struct IndexIdempotent {
    Kernel p;
    Kernel e11;  // Π₋ = (1 - ε)/2 at the identity
    double K = 0;
    double defect10 = 0;   // ‖p² - p‖_{1,0}, also an upper bound for the op norm
    double defectK = 0;    // ‖p² - p‖_{1,K}
    double distanceK = 0;  // ‖p - e₁₁‖_{1,K}
    bool quasi = false;
    void measure();        // recompute the three norms from p
};

// p_{F(D)} from the block formula with U = Π₋FΠ₊, V = Π₊FΠ₋. Products are exact.
Kernel idempotent_from_normalizer(const Kernel& FD);
IndexIdempotent index_idempotent_of(const Kernel& FD, double K);
IndexIdempotent index_idempotent(const Kernel& D, const SpectralFunction& F, double K, Scheme scheme,
                                 double tol = 1e-13, CalcOptions opt = {});

// Dense versions on ℂ^N with grading eps (±1 entries).
Mat idempotent_matrix(const Mat& F, const Eigen::VectorXd& eps);
// p - e₁₁ = εg² + Fg + ½(1-ε)g²F with g = 1 - F².
Mat idempotent_offset_matrix(const Mat& F, const Eigen::VectorXd& eps);

// Θ(q) by x ↦ 3x² - 2x³. Refused unless the op-norm bound of q² - q is < 1/4.
IndexIdempotent riesz_idempotent(const IndexIdempotent& q, double tol = 1e-13, int maxIter = 100);
Mat newton_schulz(const Mat& q, double tol = 1e-14, int maxIter = 100, int* iterations = nullptr);

struct IndexInvertible {
    Kernel w, winv;
    double K = 0;
    double certLeft = 0;   // ‖w w' - 1‖_{1,K}
    double certRight = 0;  // ‖w' w - 1‖_{1,K}
    bool invertible = false;
};
// u = exp(2πi(G_t(D) + 1)/2) with inverse u*.
IndexInvertible odd_index_unitary(const Kernel& D, double t, double K, CalcOptions opt = {});
void certify(IndexInvertible& u);

// Trace of the identity component of p - e₁₁.
struct TraceIndex {
    double value = 0;
    long index = 0;
    double distance = 0;  // to the nearest integer
    bool integral = false;
};
TraceIndex pairing_trace_index(const IndexIdempotent& p);

// ---------------------------------------------------------------- vanishing

struct DecayFit {
    double slope = 0, intercept = 0, r2 = 0;
    int points = 0;
};
// Least squares of log(value) against t² (nonpositive values skipped).
DecayFit fit_log_vs_t2(const std::vector<double>& t, const std::vector<double>& values);

struct VanishingReport {
    GapReport gap;
    ThresholdRecord threshold;
    std::vector<double> t, distance;  // ‖G_t(D) - sgn(D)‖_{1,K}
    DecayFit fit;
    double signSquareDefect = 0;      // ‖sgn(D)² - 1‖_{1,0}
    bool gapOk = false, decayOk = false, signOk = false, certified = false;
    std::string reason;
};
// KGamma < 0 uses the exact growth rate of D's group.
VanishingReport vanishing_certificate(const Kernel& D, double K, const std::vector<double>& tGrid, double tau = 1.0,
                                      double KGamma = -1.0, CalcOptions opt = {});

// ---------------------------------------------------------------- half-cylinders

struct HalfOptions {
    double width = 4.0;         // transition length of Ψ_T in sites
    double chebTol = 1e-3;      // Chebyshev realization tolerance for F_{a,t}
    int thetaPoints = 0;        // per boundary coordinate; 0: 128 (rank 1) or 16 (rank 2)
    int indexThetaPoints = 16;  // grid for the Θ traces (divides thetaPoints)
    bool norms = true;          // compute the ℓ¹ certificate norms
    double tau = 1.0;
    double KGamma = -1.0;
};

// Realization of F_{a,t} on the spectrum of H: odd Chebyshev polynomial.
ChebSeries normalizer_series(const HalfKernel& H, double a, double t, double tol);
double half_spectral_bound(const HalfKernel& H);

struct BoundaryQuasi {
    double a = 0, t = 0, T = 0, width = 0, K = 0;
    int degree = 0;     // Chebyshev degree of F
    int reach = 0;      // sites beyond the support of Ψ where q - e₁₁ can be nonzero
    int cols = 0;       // sites carrying Ψ > 0
    int sites = 0;
    int d = 0;
    int thetaPoints = 0;
    double defect10 = 0, defectK = 0, defectOp = 0;
    double defectKCoarse = 0;   // same norm from the half grid (aliasing monitor)
    double distanceK = 0;       // ‖q - e₁₁‖_{1,K}
    bool usable = false;        // defectK < 1/2
    bool hypothesisMet = true;
    std::string warning;
    bool farZero = false;       // every entry beyond the light cone is exactly 0
    int lastNonzeroSite = -1;
    double interiorMax = 0;     // max |q² - q| on columns deep inside Ψ = 1
    std::vector<std::vector<double>> indexThetas;
    std::vector<Mat> qcc;       // q restricted to the Ψ-support, per index θ
    std::vector<double> eps;    // grading on that block
    std::string modelTag;
};

// Sites L + 1 needed for exact light-cone arithmetic.
int half_sites_needed(double T, double width, int reach, double boundaryGap);

BoundaryQuasi boundary_quasi_idempotent(const HalfKernel& H, double a, double t, double K, const HalfOptions& opt = {});

struct HalfIndex {
    std::vector<std::vector<double>> thetas;
    std::vector<double> traces;  // tr(Θ(q_CC) - e₁₁) per θ
    double trace = 0;            // identity component (mean over θ)
    double idempotencyResidual = 0;
    int maxIterations = 0;
    double defectOp = 0;
};
// Refused (RefusedError) when the op defect of q is ≥ 1/4.
HalfIndex riesz_idempotent(const BoundaryQuasi& q, double tol = 1e-14);
TraceIndex pairing_trace_index(const HalfIndex& r);

cd f_n(int n, cd x);

struct OddBoundaryElement {
    double a = 0, t = 0, T = 0, width = 0, K = 0;
    int n = 0, degree = 0, reach = 0, sites = 0, thetaPoints = 0;
    int sign = 1;                 // w = 1 + f_n(sign·P)Ψ_T
    double certLeft = 0;          // ‖w w' - 1‖_{1,K}
    double certRight = 0;         // ‖w' w - 1‖_{1,K}
    double certLeftCoarse = 0, certRightCoarse = 0;
    bool invertible = false;
    bool hypothesisMet = true;
    std::string warning;
    bool farZero = false;
    int lastNonzeroSite = -1;
};
OddBoundaryElement odd_index_element(const HalfKernel& H, double a, double t, int n, double K,
                                     const HalfOptions& opt = {}, int sign = 1);

// Reach in sites of the even and odd constructions.
int even_reach(int degree, int xprop);
int odd_reach(int degree, int n, int xprop);

struct ScheduleStep {
    double t = 0;
    int n = 0;
    int sites = 0;
    double valueA = 0, valueB = 0;
    bool pass = false;
    double seconds = 0;
};

struct EvenSchedule {
    std::vector<ScheduleStep> steps;
    std::optional<BoundaryQuasi> result;
};
// Tries t in order on a half-space sized for each t; stops at the first usable q.
EvenSchedule quasi_idempotent_schedule(const Kernel& Db, int interior, const HalfBC& bc, double a, double K,
                                       const std::vector<double>& ts = {1, 2, 4, 8}, HalfOptions opt = {});

struct OddSchedule {
    std::vector<ScheduleStep> steps;
    std::optional<OddBoundaryElement> result;
};
OddSchedule odd_element_schedule(const Kernel& Db, int interior, const HalfBC& bc, double a, double K,
                                 const std::vector<double>& ts = {1, 2, 4, 8}, const std::vector<int>& ns = {4, 8, 16},
                                 HalfOptions opt = {});

// Half-space with enough sites for the construction at (a, t[, n]).
HalfKernel half_model_for(const Kernel& Db, int interior, const HalfBC& bc, double a, double t, int n,
                          const HalfOptions& opt = {});

}  // namespace l1
