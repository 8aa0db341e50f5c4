#pragma once
// Functional calculus f(D) for self-adjoint kernels, with the Fourier data
// needed for propagation and tail estimates.
//
// Fourier convention: f̂(ξ) = ∫ f(x) e^{-ixξ} dx, f(x) = (1/2π) ∫ f̂(ξ) e^{ixξ} dξ.
// For normalizing functions (limits ±1) the stored transform is that of F'.

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "l1/kernels.hpp"

namespace l1 {

struct ConvergenceError : std::runtime_error {
    double residual;
    ConvergenceError(const std::string& m, double r) : std::runtime_error(m), residual(r) {}
};

enum class Family {
    BandLimited,     // samples of f̂ (or F̂' if affine) on [-N, N]
    Gt,              // erf(t x)
    Fat,             // windowed normalizer F_{a,t}
    Heat,            // c·e^{-t x²}
    GaussSign,       // h(t x), h(x) = 2/√π x e^{-x²}
    PowerResolvent,  // (s⁻² x² + 1)^{-b}
    Cayley,          // (x + s i)/(x - s i)
    Exp2pi,          // exp(2πi (erf(t x) + 1)/2)
    Sign,            // sgn(x); fiberwise only
    GtMinusSign,     // erf(t x) - sgn(x), evaluated as -sgn(x) erfc(t|x|)
    Polynomial       // Σ c_k x^k (coefficients in `coeffs`)
};

struct SpectralFunction {
    Family family = Family::Heat;
    double t = 1.0, a = 1.0, s = 1.0, b = 1.0, scale = 1.0;
    // BandLimited data.
    double N = 0.0;
    std::vector<double> xi;          // uniform grid over [-N, N]
    std::vector<cd> samples;         // f̂ or F̂' at xi
    bool affine = false;             // true for normalizers
    std::vector<cd> coeffs;          // Polynomial
    // Declared Gaussian decay |f(x)| ≲ e^{-C x²}, |f̂(ξ)| ≲ e^{-Ĉ ξ²} (0 if none).
    double C = 0.0, Chat = 0.0;

    static SpectralFunction gt(double t);
    static SpectralFunction fat(double a, double t);
    static SpectralFunction heat(double t, double scale = 1.0);
    static SpectralFunction gauss_sign(double t = 1.0);
    static SpectralFunction power_resolvent(double s, double b);
    static SpectralFunction cayley(double s);
    static SpectralFunction exp2pi(double t);
    static SpectralFunction sign();
    static SpectralFunction gt_minus_sign(double t);
    static SpectralFunction polynomial(std::vector<cd> c);
    // Normalizer with F̂' = hatFp on [-N, N] (must be even, real, hatFp(0) = 2).
    static SpectralFunction band_limited_normalizer(double N, const std::function<double(double)>& hatFp,
                                                    int samples = 2049);
    static SpectralFunction band_limited(double N, const std::function<cd(double)>& fhat, int samples = 2049);
    // Random band-limited normalizer: F̂'(ξ) = 2χ(2|ξ|/N)(1 + (ξ/N)² g(ξ/N)), g a
    // random even trigonometric polynomial with small amplitude.
    static SpectralFunction random_normalizer(double N, std::mt19937_64& rng);

    static SpectralFunction from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    std::string name() const;

    cd operator()(double x) const;
    cd eval(cd z) const;  // analytic continuation where defined
    bool is_normalizer() const;
    bool analytic() const;  // continuation available off the real axis
    bool has_fourier() const;
    cd fhat(double xi) const;  // f̂, or F̂' for normalizers
    // Half-width of the ξ-support (band limit) or the point beyond which |f̂| < tol.
    double fourier_extent(double tol) const;
    // x-scale beyond which f (or F') is negligible, for aliasing control.
    double spatial_extent(double tol) const;
    // (1/2π) ∫_{|ξ|>ρ} |f̂(ξ)| dξ.
    double fourier_tail(double rho) const;
};

enum class Scheme { Fiberwise, FourierQuadrature, Chebyshev };

struct CalcOptions {
    int gridPoints = 0;       // per ℤ-coordinate; 0 picks 2048 (rank 1) or 256 (rank ≥ 2)
    double weightK = 0.0;     // contour shift for accurate ℓ¹_K tails (fiberwise)
    double radius = 0.0;      // spectral radius bound for chebyshev; 0 uses Σ‖D_γ‖
    int degreeCap = 4000;
    DropPolicy drop{};        // drop applied to the result
    int* degreeUsed = nullptr;
};

Kernel apply_function(const Kernel& D, const SpectralFunction& f, Scheme scheme, double tol, CalcOptions opt = {});

Kernel heat(const Kernel& D, double t, double tol, CalcOptions opt = {});
Kernel cayley(const Kernel& D, double s, double tol, CalcOptions opt = {});
Kernel power_resolvent(const Kernel& D, double s, double b, double tol, CalcOptions opt = {});
Kernel sign_kernel(const Kernel& D, CalcOptions opt = {});

// Chebyshev data on [-R, R].
struct ChebSeries {
    double R = 1.0;
    std::vector<cd> c;  // f(R cos φ) ≈ Σ c_k cos(kφ)
    double tail = 0.0;  // Σ_{k>deg} |c_k| estimate
};
ChebSeries chebyshev_series(const std::function<cd(double)>& f, double R, double tol, int degreeCap);
Kernel chebyshev_apply(const Kernel& D, const ChebSeries& s, DropPolicy drop = {});

double self_adjoint_defect(const Kernel& D);
double l1_bound(const Kernel& D);

struct ThresholdRecord {
    double K = 0, KGamma = 0, tau = 1, threshold = 0;
    bool pass = false;
};

struct GapReport {
    double sigma = 0;       // grid minimum (fiberwise) or smallest singular value (truncated)
    double lower = 0;       // certified lower bound (fiberwise only)
    std::string method;
    bool lowerBoundOnly = false;
    ThresholdRecord threshold;
};

GapReport spectral_gap(const Kernel& D, int gridPoints = 0, int truncRadius = 4);
ThresholdRecord gap_threshold(double sigma, double K, double KGamma, double tau);

struct TailReport {
    int checked = 0;
    int violations = 0;
    double worstMargin = 0;  // min over checked γ of RHS - LHS
    double worstLength = 0;
    double threshold = 0;    // 𝔑_μ
};

TailReport tail_bound_check(const Kernel& D, const SpectralFunction& f, double mu, double tau, double C0,
                            double diamF, int gridPoints = 0);

}  // namespace l1
