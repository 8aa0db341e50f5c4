#include "l1/rho_eta.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "l1/parallel.hpp"

namespace l1 {

namespace {

constexpr double kPi = 3.141592653589793;
const cd I(0.0, 1.0);
const DropPolicy kExact{0.0, 0.0};

Scheme scheme_for(const Kernel& D) { return D.G->is_abelian() ? Scheme::Fiberwise : Scheme::Chebyshev; }

Kernel unit_like(const Kernel& D) { return Kernel::identity(D.G, D.d).with_meta(D); }

Kernel minus_projector(const Kernel& D) {
    const Mat eps = grading_matrix(D);
    return Kernel::delta(D.G, D.G->identity(), 0.5 * (Mat::Identity(D.d, D.d) - eps)).with_meta(D);
}

Kernel calc(const Kernel& D, const SpectralFunction& f, double K, const CalcOptions& base) {
    CalcOptions o = base;
    const Scheme sc = scheme_for(D);
    if (sc == Scheme::Fiberwise && o.weightK == 0.0) o.weightK = K;
    return apply_function(D, f, sc, 1e-13, o);
}

// w_t = exp(2πi F(tD)); negative t gives the inverse.
Kernel u_node(const Kernel& D, double t, double K, const CalcOptions& o) {
    if (t == 0.0) return cd(-1.0) * unit_like(D);
    const Kernel w = calc(D, SpectralFunction::exp2pi(std::abs(t)), K, o);
    return t > 0 ? w : adjoint(w);
}

// p_{G(tD)}; G is odd in t.
Kernel p_node(const Kernel& D, double t, double K, const CalcOptions& o) {
    if (t == 0.0) return idempotent_from_normalizer(Kernel::zero(D.G, D.d).with_meta(D));
    const Kernel g = calc(D, SpectralFunction::gt(std::abs(t)), K, o);
    return idempotent_from_normalizer(t > 0 ? g : cd(-1.0) * g);
}

// v at s = scale·tan α, continued through α = π/2 where v = -1.
Kernel v_node(const Kernel& D, double alpha, double scale, double K, const CalcOptions& o) {
    if (alpha == 0.0) return unit_like(D);
    const double c = std::cos(alpha), s = std::sin(alpha);
    if (std::abs(c) < 1e-300) return cd(-1.0) * unit_like(D);
    const double sv = scale * s / c;
    const Kernel v = calc(D, SpectralFunction::cayley(std::abs(sv)), K, o);
    return sv > 0 ? v : adjoint(v);
}

Kernel lincomb(const std::vector<const Kernel*>& ks, const std::vector<double>& c) {
    Kernel out = cd(c[0]) * *ks[0];
    for (std::size_t i = 1; i < ks.size(); ++i) out = add(out, *ks[i], 1.0, c[i], kExact);
    return out;
}

std::vector<double> simpson_weights(int intervals, double h) {
    std::vector<double> w(intervals + 1);
    for (int i = 0; i <= intervals; ++i) w[i] = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    for (auto& x : w) x *= h / 3.0;
    return w;
}

double factorial(int k) {
    double f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

void require_delocalized(const CyclicCocycle& phi) {
    if (phi.delocalized) return;
    CyclicCocycle c = phi;
    const auto r = check_cocycle(c, 3, 2000, 1);
    if (!r.delocalized) {
        std::ostringstream os;
        os << "eta: cocycle '" << phi.name << "' is not delocalized (|φ| = " << r.delocalizedViolation
           << " on identity-product tuples); refused";
        throw RefusedError(os.str(), r.delocalizedViolation, 0.0);
    }
}

void require_gap(const Kernel& D, double K, const PathOptions& opt, GapReport* gapOut = nullptr,
                 ThresholdRecord* thrOut = nullptr) {
    const double KG = opt.KGamma >= 0 ? opt.KGamma : exact_growth_rate(*D.G);
    const GapReport gap = spectral_gap(D, opt.calc.gridPoints);
    const ThresholdRecord thr = gap_threshold(gap.sigma, K, KG, opt.tau);
    if (gapOut) *gapOut = gap;
    if (thrOut) *thrOut = thr;
    if (!thr.pass) {
        std::ostringstream os;
        os << "refused: spectral gap " << gap.sigma << " does not exceed 2(K_Γ+K)/τ = " << thr.threshold;
        throw RefusedError(os.str(), gap.sigma, thr.threshold);
    }
}

int max_propagation(const std::vector<Kernel>& ks) {
    int r = 0;
    for (const auto& k : ks) r = std::max(r, word_propagation(k));
    return r;
}

enum class Integrand { U, P, V };

// Shared quadrature engine on x_j = j·h, j = 0..N. The derivative at each
// node is the fourth-order centered difference with its own step δ.
EtaResult integrate(const CyclicCocycle& phi, const Kernel& D, double K, const QuadOptions& q, Integrand kind,
                    double xMax, double scale, cd prefactor) {
    const int N = q.nodes;
    if (N < 8 || N % 4 != 0) throw ArgumentError("eta: nodes must be a multiple of 4 and at least 8");
    const double h = xMax / N;
    const double R = std::max(l1_bound(D), 1e-12);
    // Phase of the node changes by at most ~2·R·δ per step (u, p) or ~2δ (v, in α).
    const double delta = std::min(h, kind == Integrand::V ? 0.02 * scale / R : 0.02 / R);
    auto node = [&](double x) {
        switch (kind) {
            case Integrand::U: return u_node(D, x, K, q.path.calc);
            case Integrand::V: return v_node(D, x, scale, K, q.path.calc);
            case Integrand::P: break;
        }
        return p_node(D, x, K, q.path.calc);
    };
    const Kernel one = unit_like(D);
    const Kernel e11 = kind == Integrand::P ? minus_projector(D) : Kernel();
    const int n = phi.degree;

    auto integrand = [&](double x, double* normOut, int* propOut) -> cd {
        const Kernel w = node(x);
        const Kernel p2 = node(x + 2 * delta), p1 = node(x + delta), m1 = node(x - delta), m2 = node(x - 2 * delta);
        const double c = 1.0 / (12 * delta);
        const Kernel dw = lincomb({&p2, &p1, &m1, &m2}, {-c, 8 * c, -8 * c, c});
        std::vector<Kernel> slots;
        if (kind == Integrand::P) {
            const Kernel cm = add(convolve(dw, w, kExact), convolve(w, dw, kExact), 1.0, -1.0, kExact);
            if (normOut) *normOut = weighted_norm(cm, K);
            slots.push_back(cm);
            const Kernel y = add(w, e11, 1.0, -1.0, kExact);
            for (int s = 0; s < n; ++s) slots.push_back(y);
        } else {
            const Kernel winv = adjoint(w);
            const Kernel first = convolve(dw, winv, kExact);
            if (normOut) *normOut = weighted_norm(first, K);
            slots.push_back(first);
            const Kernel a = add(w, one, 1.0, -1.0, kExact), b = add(winv, one, 1.0, -1.0, kExact);
            for (int s = 0; s < n; ++s) slots.push_back(s % 2 == 0 ? a : b);
        }
        const int radius = q.radius > 0 ? q.radius : std::max(1, max_propagation(slots));
        if (propOut) *propOut = radius;
        const Pairing pr = cocycle_trace(phi, slots, radius);
        if (pr.tailMass > q.tol) {
            std::ostringstream os;
            os << "eta: pairing tail mass " << pr.tailMass << " on shell " << radius << " exceeds " << q.tol;
            throw ConvergenceError(os.str(), pr.tailMass);
        }
        return pr.value;
    };

    EtaResult r;
    r.variable = kind == Integrand::V ? "alpha" : "t";
    r.grid.resize(N + 1);
    r.integrand.resize(N + 1);
    r.integrandNorm.resize(N + 1);
    parallel_for(N + 1, [&](int j) {
        r.grid[j] = j * h;
        r.integrand[j] = integrand(j * h, &r.integrandNorm[j], nullptr);
    });
    const auto wf = simpson_weights(N, h);
    cd sum = 0;
    for (int j = 0; j <= N; ++j) sum += wf[j] * r.integrand[j];
    r.value = prefactor * sum;
    if (q.refine) {
        const auto wc = simpson_weights(N / 2, 2 * h);
        cd cs = 0;
        for (int j = 0; j <= N / 2; ++j) cs += wc[j] * r.integrand[2 * j];
        r.coarseValue = prefactor * cs;
        r.refineDelta = std::abs(r.value - r.coarseValue);
    }

    if (kind == Integrand::V) {
        r.converged = !q.refine || r.refineDelta <= 1e-6;
        return r;
    }
    // Tail A e^{-ε t²} fitted on the upper half of the resolved node norms.
    double mx = 0;
    for (double v : r.integrandNorm) mx = std::max(mx, v);
    std::vector<double> ts, vs;
    for (int j = 1; j <= N; ++j)
        if (r.integrandNorm[j] > 1e-13 * std::max(mx, 1e-300)) ts.push_back(r.grid[j]), vs.push_back(r.integrandNorm[j]);
    if (mx == 0.0) {
        r.fitEps = std::numeric_limits<double>::infinity();
        r.converged = true;
        return r;
    }
    const std::size_t h2 = ts.size() / 2;
    std::vector<double> tu(ts.begin() + h2, ts.end()), vu(vs.begin() + h2, vs.end());
    if (tu.size() < 2) tu = ts, vu = vs;
    const DecayFit fit = fit_log_vs_t2(tu, vu);
    r.fitA = std::exp(fit.intercept);
    r.fitEps = -fit.slope;
    r.fitR2 = fit.r2;
    if (!(r.fitEps > 0)) {
        std::ostringstream os;
        os << "eta: integrand tail fit has ε = " << r.fitEps << " ≤ 0 (no Gaussian decay)";
        throw ConvergenceError(os.str(), r.fitEps);
    }
    r.tailBound = r.fitA * std::exp(-r.fitEps * xMax * xMax) / (2 * r.fitEps * xMax);
    r.converged = r.tailBound <= 1e-8;
    return r;
}

}  // namespace

std::string path_kind_name(PathKind k) {
    switch (k) {
        case PathKind::U: return "u";
        case PathKind::P: return "p";
        case PathKind::V: return "v";
    }
    return "?";
}

std::vector<double> default_s_grid(double s0, double sMax, int n) {
    if (!(s0 > 0 && sMax > s0) || n < 4) throw ArgumentError("default_s_grid: need 0 < s0 < sMax and n >= 4");
    std::vector<double> s{0.0};
    const int nGeo = n / 2, nSq = n - nGeo;
    for (int i = nGeo - 1; i >= 0; --i) s.push_back(s0 * std::pow(0.5, i));
    for (int i = 1; i <= nSq; ++i) s.push_back(std::sqrt(s0 * s0 + (sMax * sMax - s0 * s0) * i / nSq));
    return s;
}

LocalizationPath rho_path(const Kernel& D, PathKind kind, const std::vector<double>& sGrid, double K,
                          const PathOptions& opt) {
    if (sGrid.empty() || sGrid.front() != 0.0) throw ArgumentError("rho_path: the s grid must start at 0");
    for (std::size_t i = 1; i < sGrid.size(); ++i)
        if (!(sGrid[i] > sGrid[i - 1])) throw ArgumentError("rho_path: the s grid must be increasing");
    if (kind == PathKind::P && !D.graded()) throw StructuralError("rho_path: the p path needs a graded operator");
    LocalizationPath P;
    P.kind = kind;
    P.s = sGrid;
    P.K = K;
    require_gap(D, K, opt, &P.gap, &P.threshold);
    P.s0 = 1.0 / P.gap.sigma;
    P.trivial = kind == PathKind::P ? minus_projector(D) : unit_like(D);
    const std::size_t n = sGrid.size();
    P.nodes.resize(n);
    if (kind != PathKind::P) P.inverses.resize(n);
    P.propagation.assign(n, 0);
    P.normK.assign(n, 0.0);
    P.residual.assign(n, 0.0);
    const Kernel one = unit_like(D);
    parallel_for(static_cast<int>(n), [&](int i) {
        const double s = sGrid[i];
        if (s == 0.0) {
            P.nodes[i] = P.trivial;
            if (kind != PathKind::P) P.inverses[i] = P.trivial;
            P.propagation[i] = 0;
            return;
        }
        switch (kind) {
            case PathKind::U: P.nodes[i] = u_node(D, 1.0 / s, K, opt.calc); break;
            case PathKind::P: P.nodes[i] = p_node(D, 1.0 / s, K, opt.calc); break;
            case PathKind::V: P.nodes[i] = calc(D, SpectralFunction::cayley(s), K, opt.calc); break;
        }
        if (kind == PathKind::P) {
            P.residual[i] =
                weighted_norm(add(convolve(P.nodes[i], P.nodes[i], kExact), P.nodes[i], 1.0, -1.0, kExact), 0.0);
        } else {
            P.inverses[i] = adjoint(P.nodes[i]);
            const double l = weighted_norm(add(convolve(P.nodes[i], P.inverses[i], kExact), one, 1.0, -1.0), K);
            const double r = weighted_norm(add(convolve(P.inverses[i], P.nodes[i], kExact), one, 1.0, -1.0), K);
            P.residual[i] = std::max(l, r);
        }
        P.normK[i] = weighted_norm(add(P.nodes[i], P.trivial, 1.0, -1.0, kExact), K);
        P.propagation[i] = word_propagation(drop_small(P.nodes[i], DropPolicy{1e-14, 0.0}));
    });
    for (std::size_t i = 0; i < n; ++i) {
        if (P.residual[i] > opt.nodeTol) {
            std::ostringstream os;
            os << "rho_path: node s = " << sGrid[i] << " misses the tolerance (" << P.residual[i] << " > "
               << opt.nodeTol << ")";
            throw ConvergenceError(os.str(), P.residual[i]);
        }
        P.supNorm = std::max(P.supNorm, P.normK[i]);
    }
    P.monotone = true;
    int last = -1;
    for (std::size_t i = 0; i < n; ++i) {
        if (sGrid[i] < P.s0) continue;
        if (last >= 0 && P.propagation[i] > last) P.monotone = false;
        last = P.propagation[i];
    }
    return P;
}

EtaResult eta(const CyclicCocycle& phi, const Kernel& D, double K, const QuadOptions& q) {
    if (phi.degree % 2 != 0) throw ArgumentError("eta: the u-path formula needs an even-degree cocycle");
    require_delocalized(phi);
    require_gap(D, K, q.path);
    const int m = phi.degree / 2;
    // ∫ ds over s ∈ (0, ∞) is -∫ dt over t = 1/s.
    return integrate(phi, D, K, q, Integrand::U, q.tMax, 0.0, -factorial(m) / (kPi * I));
}

EtaResult eta_cayley(const CyclicCocycle& phi, const Kernel& D, double K, const QuadOptions& q) {
    if (phi.degree % 2 != 0) throw ArgumentError("eta: the v-path formula needs an even-degree cocycle");
    require_delocalized(phi);
    GapReport gap;
    require_gap(D, K, q.path, &gap);
    const int m = phi.degree / 2;
    const double scale = q.scale > 0 ? q.scale : gap.sigma;
    return integrate(phi, D, K, q, Integrand::V, kPi / 2, scale, factorial(m) / (kPi * I));
}

EtaResult eta_even(const CyclicCocycle& phi, const Kernel& D, double K, const QuadOptions& q) {
    if (phi.degree % 2 != 1) throw ArgumentError("eta_even: the p-path formula needs an odd-degree cocycle");
    if (!D.graded()) throw StructuralError("eta_even: the p path needs a graded operator");
    require_delocalized(phi);
    require_gap(D, K, q.path);
    const int m = (phi.degree - 1) / 2;
    return integrate(phi, D, K, q, Integrand::P, q.tMax, 0.0, -factorial(2 * m) / (factorial(m) * kPi * I));
}

TransgressionReport transgression_check(const CyclicCocycle& phi, const Kernel& D, double K, const QuadOptions& q) {
    TransgressionReport r;
    r.u = eta(phi, D, K, q);
    r.v = eta_cayley(phi, D, K, q);
    r.residual = std::abs(r.u.value - r.v.value);
    r.oppositeResidual = std::abs(r.u.value + r.v.value);
    return r;
}

// ---------------------------------------------------------------- product formula identities

double ProductIdentityReport::worst() const { return std::max({inverse, quotient, factorization, projections}); }

namespace {

Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

double rel(const Mat& a, const Mat& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

// Positive spectral projection and (M²)^{-1/2} of a Hermitian matrix.
Mat positive_projection(const Mat& M) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.adjoint()));
    const Mat& V = es.eigenvectors();
    Eigen::VectorXd p(M.rows());
    for (Eigen::Index i = 0; i < M.rows(); ++i) p(i) = es.eigenvalues()(i) > 0 ? 1.0 : 0.0;
    return V * p.cast<cd>().asDiagonal() * V.adjoint();
}

}  // namespace

ProductIdentityReport product_identity_check(const Mat& Pm, const Mat& Pp, const Mat& D) {
    const Eigen::Index n = Pm.rows(), k = D.rows();
    const Mat In = Mat::Identity(n, n), Ik = Mat::Identity(k, k);
    const Mat Qm = In - Pm, Qp = In - Pp;
    const Mat Aplus = I * D + Ik, Aminus = I * D - Ik;
    const Mat AplusInv = Aplus.inverse(), AminusInv = Aminus.inverse();
    const Mat C = Aplus * AminusInv, Cinv = Aminus * AplusInv;
    ProductIdentityReport r;
    const Mat B = kron(Pp, Aplus) + kron(Qp, Aminus);
    const Mat A = kron(Pm, Aplus) + kron(Qm, Aminus);
    const Mat Binv = B.partialPivLu().inverse();
    r.inverse = rel(Binv, kron(Pp, AplusInv) + kron(Qp, AminusInv));
    const Mat quotient = A * Binv;
    r.quotient = rel(quotient, kron(Pm * Pp, Ik) + kron(Pm * Qp, C) + kron(Qm * Pp, Cinv) + kron(Qm * Qp, Ik));
    r.factorization = rel(quotient, (kron(Pm, C) + kron(Qm, Ik)) * (kron(Pp, Cinv) + kron(Qp, Ik)));
    return r;
}

double projection_identity(const Mat& Dslash, const Eigen::VectorXd& E, double s, Mat* PmOut, Mat* PpOut) {
    const Eigen::Index n = Dslash.rows();
    const Mat Em = E.cast<cd>().asDiagonal();
    const Mat In = Mat::Identity(n, n);
    Eigen::SelfAdjointEigenSolver<Mat> es(Dslash * Dslash / (s * s) + In);
    const Mat invSqrt = es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().cast<cd>().asDiagonal() *
                        es.eigenvectors().adjoint();
    double worst = 0;
    for (int sg : {-1, 1}) {
        const Mat M = Dslash / s + static_cast<double>(sg) * Em;
        const Mat P = positive_projection(M);
        worst = std::max(worst, rel(M * invSqrt, 2.0 * P - In));
        if (sg < 0 && PmOut) *PmOut = P;
        if (sg > 0 && PpOut) *PpOut = P;
    }
    return worst;
}

std::vector<ProductIdentityReport> product_identity_random(int samples, int n, int k, unsigned long long seed) {
    if (n < 2 || n % 2 != 0 || k < 1) throw ArgumentError("product_identity_random: n must be even and k positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> us(0.2, 5.0);
    const int h = n / 2;
    Eigen::VectorXd E(n);
    for (int i = 0; i < n; ++i) E(i) = i < h ? 1.0 : -1.0;
    std::vector<ProductIdentityReport> out;
    for (int sample = 0; sample < samples; ++sample) {
        Mat X(h, h), Dk(k, k);
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < h; ++j) X(i, j) = cd(g(rng), g(rng));
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) Dk(i, j) = cd(g(rng), g(rng));
        Dk = 0.5 * (Dk + Dk.adjoint()).eval();
        Mat Ds = Mat::Zero(n, n);
        Ds.block(0, h, h, h) = X.adjoint();
        Ds.block(h, 0, h, h) = X;
        const double s = us(rng);
        Mat Pm, Pp;
        const double proj = projection_identity(Ds, E, s, &Pm, &Pp);
        ProductIdentityReport r = product_identity_check(Pm, Pp, Dk);
        r.projections = proj;
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------- APS

ApsReport aps_residual(const CyclicCocycle& phi, const Kernel& Db, int interior, const HalfBC& bc, double a, double K,
                       const ApsOptions& opt) {
    if (phi.degree != 0) throw ArgumentError("aps_residual: implemented for degree-0 cocycles");
    require_delocalized(phi);
    ApsReport r;
    HalfOptions ho = opt.half;
    ho.norms = false;
    const HalfKernel H = half_model_for(Db, interior, bc, a, opt.t, 0, ho);
    const BoundaryQuasi q = boundary_quasi_idempotent(H, a, opt.t, K, ho);
    r.sites = H.sites;
    r.defectOp = q.defectOp;
    try {
        r.index = riesz_idempotent(q);
    } catch (const RefusedError& e) {
        throw RefusedError(std::string("aps_residual (index side): ") + e.what(), e.measured, e.threshold);
    }
    r.trace = r.index.trace;
    r.lhs = pair_even(phi, r.index).value;
    try {
        r.etaResult = eta(phi, Db, K, opt.quad);
    } catch (const RefusedError& e) {
        throw RefusedError(std::string("aps_residual (eta side): ") + e.what(), e.measured, e.threshold);
    }
    r.rhs = r.etaResult.value;
    r.residual = std::abs(r.lhs + 0.5 * r.rhs);
    return r;
}

ApsTrend aps_refinement(const CyclicCocycle& phi, const Kernel& Db, int interior, const HalfBC& bc, double a, double K,
                        int steps, ApsOptions opt) {
    ApsTrend t;
    for (int i = 0; i <= steps; ++i) {
        t.steps.push_back(aps_residual(phi, Db, interior, bc, a, K, opt));
        opt.half.indexThetaPoints *= 2;
        if (opt.half.thetaPoints > 0 && opt.half.thetaPoints < opt.half.indexThetaPoints)
            opt.half.thetaPoints = opt.half.indexThetaPoints;
        opt.quad.nodes *= 2;
    }
    t.decreasing = true;
    for (std::size_t i = 1; i < t.steps.size(); ++i) {
        const double prev = std::max(t.steps[i - 1].residual, t.noiseFloor);
        const double cur = std::max(t.steps[i].residual, t.noiseFloor);
        if (cur > prev) t.decreasing = false;
    }
    return t;
}

}  // namespace l1
