#include "l1/index.hpp"

#include <cmath>
#include <sstream>

namespace l1 {

namespace {

const DropPolicy kExact{0.0, 0.0};

Mat projector(const Kernel& a, int sign) {
    const Mat eps = grading_matrix(a);
    return 0.5 * (Mat::Identity(a.d, a.d) + static_cast<double>(sign) * eps);
}

Kernel at_identity(const Kernel& like, const Mat& m) {
    return Kernel::delta(like.G, like.G->identity(), m).with_meta(like);
}

}  // namespace

Kernel idempotent_from_normalizer(const Kernel& FD) {
    if (!FD.graded()) throw StructuralError("index_idempotent: operator is ungraded");
    const Mat Pm = projector(FD, -1), Pp = projector(FD, +1);
    const Kernel U = fiber_left(Pm, fiber_right(FD, Pp));
    const Kernel V = fiber_left(Pp, fiber_right(FD, Pm));
    const Kernel Im = at_identity(FD, Pm), Ip = at_identity(FD, Pp);
    // a = Π₋ - UV, b = Π₊ - VU
    const Kernel a = add(Im, convolve(U, V, kExact), 1.0, -1.0);
    const Kernel b = add(Ip, convolve(V, U, kExact), 1.0, -1.0);
    Kernel p = add(Im, convolve(a, a, kExact), 1.0, -1.0);
    p = p + convolve(convolve(Im + a, U, kExact), b, kExact);
    p = p + convolve(V, a, kExact);
    p = p + convolve(b, b, kExact);
    p = drop_small(p, kExact);
    p.with_meta(FD);
    p.tag = "p_F(D)";
    return p;
}

void IndexIdempotent::measure() {
    const Kernel def = add(convolve(p, p, kExact), p, 1.0, -1.0);
    defect10 = weighted_norm(def, 0.0);
    defectK = weighted_norm(def, K);
    distanceK = weighted_norm(add(p, e11, 1.0, -1.0), K);
}

IndexIdempotent index_idempotent_of(const Kernel& FD, double K) {
    IndexIdempotent r;
    r.p = idempotent_from_normalizer(FD);
    r.e11 = at_identity(FD, projector(FD, -1));
    r.K = K;
    r.measure();
    return r;
}

IndexIdempotent index_idempotent(const Kernel& D, const SpectralFunction& F, double K, Scheme scheme, double tol,
                                 CalcOptions opt) {
    if (!D.graded()) throw StructuralError("index_idempotent: D is ungraded");
    if (D.parity() != 1) throw StructuralError("index_idempotent: D is not odd for its grading");
    if (!F.is_normalizer()) throw ArgumentError("index_idempotent: F is not a normalizing function");
    if (std::abs(F(0.7) + F(-0.7)) > 1e-12) throw ArgumentError("index_idempotent: F is not odd");
    return index_idempotent_of(apply_function(D, F, scheme, tol, opt), K);
}

Mat idempotent_matrix(const Mat& F, const Eigen::VectorXd& eps) {
    const Eigen::Index n = F.rows();
    const Mat Pm = (0.5 * (Eigen::VectorXd::Ones(n) - eps)).cast<cd>().asDiagonal();
    const Mat Pp = (0.5 * (Eigen::VectorXd::Ones(n) + eps)).cast<cd>().asDiagonal();
    const Mat U = Pm * F * Pp, V = Pp * F * Pm;
    const Mat a = Pm - U * V, b = Pp - V * U;
    return Pm - a * a + (Pm + a) * U * b + V * a + b * b;
}

Mat idempotent_offset_matrix(const Mat& F, const Eigen::VectorXd& eps) {
    const Eigen::Index n = F.rows();
    const Mat E = eps.cast<cd>().asDiagonal();
    const Mat Pm = (0.5 * (Eigen::VectorXd::Ones(n) - eps)).cast<cd>().asDiagonal();
    const Mat g = Mat::Identity(n, n) - F * F;
    const Mat g2 = g * g;
    return E * g2 + F * g + Pm * g2 * F;
}

Mat newton_schulz(const Mat& q, double tol, int maxIter, int* iterations) {
    Mat x = q;
    int it = 0;
    for (; it < maxIter; ++it) {
        const Mat x2 = x * x;
        const double res = (x2 - x).norm();
        if (res <= tol * std::max(1.0, x.norm())) break;
        x = 3.0 * x2 - 2.0 * x2 * x;
    }
    if (iterations) *iterations = it;
    return x;
}

IndexIdempotent riesz_idempotent(const IndexIdempotent& q, double tol, int maxIter) {
    if (q.defect10 >= 0.25) {
        std::ostringstream os;
        os << "riesz_idempotent: op bound of q² - q is " << q.defect10 << " ≥ 1/4; increase t";
        throw RefusedError(os.str(), q.defect10, 0.25);
    }
    const DropPolicy drop{1e-17, 0.0};
    IndexIdempotent r = q;
    Kernel x = q.p;
    for (int it = 0; it < maxIter; ++it) {
        const Kernel x2 = convolve(x, x, drop);
        if (weighted_norm(add(x2, x, 1.0, -1.0), 0.0) <= tol) break;
        x = add(x2, convolve(x2, x, drop), 3.0, -2.0, drop);
    }
    r.p = x.with_meta(q.p);
    r.quasi = false;
    r.measure();
    return r;
}

void certify(IndexInvertible& u) {
    const Kernel one = Kernel::identity(u.w.G, u.w.d).with_meta(u.w);
    u.certLeft = weighted_norm(add(convolve(u.w, u.winv, kExact), one, 1.0, -1.0), u.K);
    u.certRight = weighted_norm(add(convolve(u.winv, u.w, kExact), one, 1.0, -1.0), u.K);
    u.invertible = u.certLeft < 1.0 && u.certRight < 1.0;
}

IndexInvertible odd_index_unitary(const Kernel& D, double t, double K, CalcOptions opt) {
    IndexInvertible u;
    u.K = K;
    const Scheme sc = D.G->is_abelian() ? Scheme::Fiberwise : Scheme::Chebyshev;
    if (opt.weightK == 0.0 && sc == Scheme::Fiberwise) opt.weightK = K;
    u.w = apply_function(D, SpectralFunction::exp2pi(t), sc, 1e-13, opt);
    u.winv = adjoint(u.w);
    certify(u);
    return u;
}

TraceIndex pairing_trace_index(const IndexIdempotent& p) {
    const Elem e = p.p.G->identity();
    TraceIndex r;
    r.value = (p.p.component(e) - p.e11.component(e)).trace().real();
    r.index = std::lround(r.value);
    r.distance = std::abs(r.value - static_cast<double>(r.index));
    r.integral = r.distance <= 1e-6;
    return r;
}

DecayFit fit_log_vs_t2(const std::vector<double>& t, const std::vector<double>& values) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < t.size() && i < values.size(); ++i)
        if (values[i] > 0 && std::isfinite(values[i])) {
            x.push_back(t[i] * t[i]);
            y.push_back(std::log(values[i]));
        }
    DecayFit f;
    f.points = static_cast<int>(x.size());
    if (x.size() < 2) return f;
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i];
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        sse += r * r;
    }
    f.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
    return f;
}

VanishingReport vanishing_certificate(const Kernel& D, double K, const std::vector<double>& tGrid, double tau,
                                      double KGamma, CalcOptions opt) {
    if (!D.G->is_abelian()) throw StructuralError("vanishing_certificate: sgn(D) needs an abelian group");
    VanishingReport r;
    if (KGamma < 0) KGamma = exact_growth_rate(*D.G);
    r.gap = spectral_gap(D, opt.gridPoints);
    r.threshold = gap_threshold(r.gap.sigma, K, KGamma, tau);
    r.gapOk = r.threshold.pass;
    if (!r.gapOk) {
        std::ostringstream os;
        os << "refused: gap " << r.gap.sigma << " does not exceed threshold " << r.threshold.threshold;
        r.reason = os.str();
        return r;
    }
    CalcOptions o = opt;
    o.weightK = K;
    for (double t : tGrid) {
        const Kernel diff = apply_function(D, SpectralFunction::gt_minus_sign(t), Scheme::Fiberwise, 1e-14, o);
        r.t.push_back(t);
        r.distance.push_back(weighted_norm(diff, K));
    }
    r.fit = fit_log_vs_t2(r.t, r.distance);
    r.decayOk = r.fit.points >= 2 && r.fit.slope < 0;
    const Kernel s = sign_kernel(D, opt);
    const Kernel one = Kernel::identity(D.G, D.d).with_meta(D);
    r.signSquareDefect = weighted_norm(add(convolve(s, s, kExact), one, 1.0, -1.0), 0.0);
    r.signOk = r.signSquareDefect <= 1e-10;
    r.certified = r.gapOk && r.decayOk && r.signOk;
    if (!r.certified) r.reason = !r.decayOk ? "no decay in t²" : "sgn(D)² ≠ 1";
    return r;
}

}  // namespace l1
