#pragma once
// Γ-equivariant finite-propagation operators as finitely supported kernels
// γ ↦ T_γ ∈ M_d(ℂ), acting by (Tξ)(x) = Σ_γ T_γ ξ(xγ).

#include <complex>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "l1/groups.hpp"

namespace l1 {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr double kDropTol = 1e-14;

// Components whose largest entry modulus (times e^{Kℓ(γ)} if weightK > 0)
// falls below relTol · max are discarded. relTol = 0 only removes exact zeros.
struct DropPolicy {
    double relTol = kDropTol;
    double weightK = 0.0;
};

struct Kernel {
    GroupPtr G;
    int d = 1;
    std::map<Elem, Mat> comps;
    std::vector<int> grading;  // empty: ungraded; otherwise ±1 per fiber basis vector
    double h = 1.0;            // lattice spacing of the ambient model
    std::string tag;

    Kernel() = default;
    Kernel(GroupPtr g, int dim) : G(std::move(g)), d(dim) {}

    static Kernel zero(GroupPtr g, int d);
    static Kernel identity(GroupPtr g, int d);
    static Kernel delta(GroupPtr g, const Elem& x, const Mat& m);

    Mat component(const Elem& x) const;
    void add_to(const Elem& x, const Mat& m);
    bool empty() const { return comps.empty(); }
    std::size_t size() const { return comps.size(); }
    bool graded() const { return !grading.empty(); }
    // 0 even, 1 odd, -1 mixed or ungraded.
    int parity(double tol = 1e-13) const;
    Kernel& with_meta(const Kernel& like);
};

double mat_op_norm(const Mat& m);

Kernel operator+(const Kernel& a, const Kernel& b);
Kernel operator-(const Kernel& a, const Kernel& b);
Kernel operator*(cd s, const Kernel& a);
Kernel add(const Kernel& a, const Kernel& b, cd alpha = 1.0, cd beta = 1.0, DropPolicy drop = {0.0, 0.0});
Kernel convolve(const Kernel& a, const Kernel& b, DropPolicy drop = {});
Kernel adjoint(const Kernel& a);
Kernel drop_small(const Kernel& a, DropPolicy drop = {});
Kernel restrict_radius(const Kernel& a, int radius);
// Left/right multiplication by a constant fiber matrix (e.g. the grading).
Kernel fiber_left(const Mat& m, const Kernel& a);
Kernel fiber_right(const Kernel& a, const Mat& m);

double weighted_norm(const Kernel& a, double K);
double l1_distance(const Kernel& a, const Kernel& b);
int word_propagation(const Kernel& a);
double propagation(const Kernel& a);

enum class NormMethod { Fiberwise, Truncated, L1Bound };

struct NormReport {
    double lower = 0;
    double upper = 0;
    std::string method;
};

struct NormOptions {
    int gridPoints = 256;  // per ℤ-coordinate (fiberwise)
    int radius = 4;        // ball radius (truncated)
};

NormReport op_norm(const Kernel& a, NormMethod method, NormOptions opt = {});

// Σ_γ T_γ e^{iθ·γ} for abelian parent groups; theta has dual_dim entries.
Mat symbol(const Kernel& a, const std::vector<double>& theta);
// Same with complexified angles θ + iη.
Mat symbol_shifted(const Kernel& a, const std::vector<double>& theta, const std::vector<double>& eta);

// Matrix of the operator compressed to ℓ²(ball(R)) ⊗ ℂ^d.
Mat truncated_matrix(const Kernel& a, int radius);

// Grading operator diag(grading) as a fiber matrix.
Mat grading_matrix(const Kernel& a);

// Graded tensor pieces on the product group Γ₁×Γ₂, fiber ℂ^{d₁}⊗ℂ^{d₂},
// grading ε₁⊗ε₂: A⊗̂1 = A⊗1 and 1⊗̂B = ε₁⊗B. The unit argument only supplies
// the other factor's group, dimension and grading.
Kernel tensor_left(const Kernel& a, const Kernel& bUnit);   // A ⊗̂ 1
Kernel tensor_right(const Kernel& aUnit, const Kernel& b);  // 1 ⊗̂ B
Kernel plain_tensor(const Kernel& a, const Kernel& b);      // A_α ⊗ B_β, no signs

nlohmann::json kernel_to_json(const Kernel& a);
Kernel kernel_from_json(const nlohmann::json& j);

}  // namespace l1
