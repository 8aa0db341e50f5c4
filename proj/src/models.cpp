#include "l1/models.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "l1/special.hpp"

namespace l1 {

namespace {

const cd I(0.0, 1.0);

Kernel dirac_from_x(GroupPtr G, const std::map<Elem, cd>& X, double h) {
    Kernel D(G, 2);
    for (const auto& [g, x] : X) {
        Mat m = Mat::Zero(2, 2);
        m(1, 0) = x;
        D.add_to(g, m);
        Mat mt = Mat::Zero(2, 2);
        mt(0, 1) = std::conj(x);
        D.add_to(G->inv(g), mt);
    }
    D.grading = {1, -1};
    D.h = h;
    return D;
}

}  // namespace

ModelGeometry pure_geometry(GroupPtr G, double h) {
    ModelGeometry g;
    g.G = std::move(G);
    g.h = h;
    g.tau = h;
    return g;
}

Kernel graded_tensor_sum(const Kernel& A, const Kernel& B) {
    if (!A.graded()) throw ArgumentError("graded tensor: left factor must be graded");
    Kernel L = tensor_left(A, B);
    Kernel R = tensor_right(A, B);
    Kernel S = L + R;
    S.grading = L.grading;
    S.h = A.h;
    return S;
}

Kernel rehome(const Kernel& a, GroupPtr target) {
    if (!a.G->is_abelian() || !target->is_abelian()) throw StructuralError("rehome: abelian groups only");
    if (a.G->dual_dim() != target->dual_dim()) throw StructuralError("rehome: coordinate count mismatch");
    Kernel out(target, a.d);
    out.with_meta(a);
    out.tag = a.tag;
    for (const auto& [x, m] : a.comps) out.add_to(target->from_coords(a.G->coords(x)), m);
    return out;
}

Kernel gapped_dirac(GroupPtr G, double m, double h) {
    if (!(m >= 0)) throw ArgumentError("gapped_dirac: m must be nonnegative");
    Kernel D;
    switch (G->kind()) {
        case GroupKind::FreeAbelian: {
            const int n = G->rank();
            if (n == 1) {
                D = dirac_from_x(G, {{G->identity(), I * (m + 1)}, {G->z(1), -I}}, h);
                break;
            }
            const double mi = m / std::sqrt(static_cast<double>(n));
            auto Z = Group::free_abelian(1);
            Kernel acc = gapped_dirac(Z, mi, h);
            for (int j = 1; j < n; ++j) acc = graded_tensor_sum(acc, gapped_dirac(Z, mi, h));
            D = rehome(acc, G);
            break;
        }
        case GroupKind::Cyclic:
            D = dirac_from_x(G, {{G->identity(), I * (m + 1)}, {G->z(1), -I}}, h);
            break;
        case GroupKind::Free: {
            const int k = G->rank();
            std::map<Elem, cd> X{{G->identity(), I * (m + 1)}};
            for (int j = 1; j <= k; ++j) X[G->word({j})] = -I / static_cast<double>(k);
            D = dirac_from_x(G, X, h);
            break;
        }
        case GroupKind::Product: {
            const double mi = m / std::sqrt(2.0);
            D = graded_tensor_sum(gapped_dirac(G->left(), mi, h), gapped_dirac(G->right(), mi, h));
            break;
        }
    }
    D.h = h;
    std::ostringstream os;
    os << "gapped_dirac(m=" << m << ")";
    D.tag = os.str();
    return D;
}

SuspendResult suspend(const Kernel& D, int NR) {
    if (!D.graded()) throw ArgumentError("suspend: D must be graded");
    auto Z = Group::free_abelian(1);
    const Kernel Dz = gapped_dirac(Z, 0.0, D.h);
    SuspendResult r;
    const Kernel L = tensor_left(D, Dz);
    const Kernel R = tensor_right(D, Dz);
    r.D = L + R;
    r.D.grading = L.grading;
    r.D.h = D.h;
    r.D.tag = "suspend(" + D.tag + ")";
    const Kernel anti = convolve(L, R, {0, 0}) + convolve(R, L, {0, 0});
    r.anticommutator = weighted_norm(restrict_radius(anti, NR), 0.0);
    const Kernel S2 = convolve(r.D, r.D, {0, 0});
    Kernel unitD = Kernel::identity(D.G, D.d).with_meta(D);
    const Kernel ref = plain_tensor(convolve(D, D, {0, 0}), Kernel::identity(Z, 2).with_meta(Dz)) +
                       plain_tensor(unitD, convolve(Dz, Dz, {0, 0}));
    r.squareDefect = weighted_norm(restrict_radius(add(S2, ref, 1.0, -1.0), NR), 0.0);
    return r;
}

Displacement displacement_tau(const ModelGeometry& g, int radius) {
    if (radius < 2) throw ArgumentError("displacement_tau: radius must be at least 2");
    Displacement d;
    d.tau = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, double>> pts;
    for (const auto& x : g.G->ball(radius)) {
        const int l = g.G->length(x);
        if (l == 0) continue;
        // Basepoint orbit metric: the word metric scaled by h; the spatial
        // coordinate of cylinder models is not moved by Γ.
        const double dist = g.h * l;
        pts.emplace_back(l, dist);
        d.tau = std::min(d.tau, dist / l);
        d.samples++;
    }
    for (const auto& [l, dist] : pts) d.C0 = std::max(d.C0, d.tau * l - dist);
    return d;
}

// ---------------------------------------------------------------- half-space

SpMat HalfKernel::fiber(const std::vector<double>& theta) const {
    SpMat S(dim(), dim());
    for (const auto& [g, m] : comps) {
        const auto c = G->coords(g);
        double ph = 0;
        for (std::size_t j = 0; j < c.size(); ++j) ph += theta[j] * static_cast<double>(c[j]);
        S += std::exp(I * ph) * m;
    }
    S.makeCompressed();
    return S;
}

Mat HalfKernel::dense_fiber(const std::vector<double>& theta) const { return Mat(fiber(theta)); }

Mat HalfKernel::dense_component(const Elem& g) const {
    auto it = comps.find(g);
    if (it == comps.end()) return Mat::Zero(dim(), dim());
    return Mat(it->second);
}

int HalfKernel::word_propagation() const {
    int p = 0;
    for (const auto& [g, m] : comps) p = std::max(p, G->length(g));
    return p;
}

HalfKernel cylinder_window(const Kernel& Db, long x0, long x1, const HalfBC& bc) {
    if (x1 < x0) throw ArgumentError("cylinder_window: empty window");
    if (!Db.G->is_abelian()) throw StructuralError("half-space models need an abelian boundary group");
    if (self_adjoint_defect(Db) > 1e-12) throw ArgumentError("half-space: boundary operator must be self-adjoint");
    const int dB = Db.d;
    HalfKernel H;
    H.G = Db.G;
    H.sites = static_cast<int>(x1 - x0 + 1);
    H.bc = bc;
    const int k = bc.winding;
    H.xprop = std::abs(k) + 1;
    H.boundaryGap = spectral_gap(Db).sigma;
    using Trip = Eigen::Triplet<cd, long>;
    std::map<Elem, std::vector<Trip>> trips;
    const Elem e = Db.G->identity();
    auto inside = [&](long y) { return y >= x0 && y <= x1; };

    if (bc.odd) {
        if (k != 0) throw ArgumentError("half-space: the odd product model carries no twist");
        if (!Db.graded()) throw ArgumentError("half-space: odd model needs a graded boundary operator");
        H.d = dB;
        for (long x = x0; x <= x1; ++x) {
            const long r = x - x0;
            for (const auto& [g, A] : Db.comps)
                for (int b = 0; b < dB; ++b)
                    for (int b2 = 0; b2 < dB; ++b2)
                        if (A(b, b2) != cd(0)) trips[g].emplace_back(r * dB + b, r * dB + b2, A(b, b2));
            // ε_∂ ⊗ D_x, D_x = (S - S*)/(2i)
            for (int b = 0; b < dB; ++b) {
                const double eps = Db.grading[b];
                if (inside(x - 1)) trips[e].emplace_back(r * dB + b, (r - 1) * dB + b, eps / (2.0 * I));
                if (inside(x + 1)) trips[e].emplace_back(r * dB + b, (r + 1) * dB + b, -eps / (2.0 * I));
            }
        }
    } else {
        H.d = 2 * dB;
        H.grading.assign(H.d, 1);
        for (int b = 0; b < dB; ++b) H.grading[dB + b] = -1;
        const int d = H.d;
        // D⁺ entries, rows in H- (fiber offset dB), columns in H+ (offset 0);
        // D⁺ = V(A⊗1 + i·1⊗D_x), (Vψ)_0(x) = ψ_0(x - k).
        std::map<Elem, std::vector<Trip>> plus;
        for (long x = x0; x <= x1; ++x) {
            const long r = x - x0;
            for (int b = 0; b < dB; ++b) {
                const long z = x - (b == 0 ? k : 0);
                const long row = r * d + dB + b;
                for (const auto& [g, A] : Db.comps)
                    for (int b2 = 0; b2 < dB; ++b2)
                        if (A(b, b2) != cd(0) && inside(z)) plus[g].emplace_back(row, (z - x0) * d + b2, A(b, b2));
                if (inside(z - 1)) plus[e].emplace_back(row, (z - 1 - x0) * d + b, 0.5);
                if (inside(z + 1)) plus[e].emplace_back(row, (z + 1 - x0) * d + b, -0.5);
            }
        }
        for (auto& [g, v] : plus) {
            auto& t = trips[g];
            t.insert(t.end(), v.begin(), v.end());
            // D⁻ = (D⁺)*: component at γ⁻¹ gets the conjugate transpose.
            auto& ta = trips[Db.G->inv(g)];
            for (const auto& tr : v) ta.emplace_back(tr.col(), tr.row(), std::conj(tr.value()));
        }
    }
    for (auto& [g, v] : trips) {
        SpMat M(H.dim(), H.dim());
        M.setFromTriplets(v.begin(), v.end());
        M.prune(cd(0.0));
        if (M.nonZeros() > 0) H.comps[g] = std::move(M);
    }
    return H;
}

HalfKernel half_space_model(const Kernel& Db, int interiorSize, int L, const HalfBC& bc) {
    if (interiorSize < 0) throw ArgumentError("half_space_model: interiorSize must be nonnegative");
    if (L < 4 * interiorSize || L < 1) throw ArgumentError("half_space_model: L must be at least 4·interiorSize");
    HalfKernel H = cylinder_window(Db, 0, L, bc);
    H.interior = interiorSize;
    if (interiorSize > 0 && bc.interiorStrength != 0.0) {
        const int dB = Db.d;
        const int d = H.d;
        std::mt19937_64 rng(bc.seed);
        std::normal_distribution<double> N(0.0, 1.0);
        const Eigen::Index n = static_cast<Eigen::Index>(interiorSize) * dB;
        Mat R(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) R(i, j) = cd(N(rng), N(rng));
        R *= bc.interiorStrength / mat_op_norm(R);
        if (bc.odd) R = 0.5 * (R + R.adjoint());
        using Trip = Eigen::Triplet<cd, long>;
        std::vector<Trip> t;
        for (int x = 0; x < interiorSize; ++x)
            for (int b = 0; b < dB; ++b)
                for (int y = 0; y < interiorSize; ++y)
                    for (int b2 = 0; b2 < dB; ++b2) {
                        const cd v = R(x * dB + b, y * dB + b2);
                        if (bc.odd) {
                            t.emplace_back(static_cast<long>(x) * d + b, static_cast<long>(y) * d + b2, v);
                        } else {
                            const long row = static_cast<long>(x) * d + dB + b, col = static_cast<long>(y) * d + b2;
                            t.emplace_back(row, col, v);
                            t.emplace_back(col, row, std::conj(v));
                        }
                    }
        SpMat P(H.dim(), H.dim());
        P.setFromTriplets(t.begin(), t.end());
        const Elem e = H.G->identity();
        if (H.comps.count(e))
            H.comps[e] += P;
        else
            H.comps[e] = P;
        H.xprop = std::max(H.xprop, interiorSize);
    }
    std::ostringstream os;
    os << "half(k=" << bc.winding << ",L=" << L << ",interior=" << interiorSize << (bc.odd ? ",odd" : "") << ")";
    H.tag = os.str();
    return H;
}

Mat half_plus_block(const HalfKernel& H, const std::vector<double>& theta) {
    if (H.grading.empty()) throw ArgumentError("half_plus_block: model is ungraded");
    const int dB = H.d / 2;
    const Mat F = H.dense_fiber(theta);
    const Eigen::Index n = static_cast<Eigen::Index>(H.sites) * dB;
    Mat M(n, n);
    for (int x = 0; x < H.sites; ++x)
        for (int b = 0; b < dB; ++b)
            for (int y = 0; y < H.sites; ++y)
                for (int b2 = 0; b2 < dB; ++b2)
                    M(x * dB + b, y * dB + b2) = F(static_cast<Eigen::Index>(x) * H.d + dB + b,
                                                   static_cast<Eigen::Index>(y) * H.d + b2);
    return M;
}

double half_self_adjoint_defect(const HalfKernel& H) {
    double s = 0;
    for (const auto& [g, m] : H.comps) {
        const Mat a = Mat(m);
        const Mat b = H.dense_component(H.G->inv(g)).adjoint();
        s += mat_op_norm(a - b);
    }
    return s;
}

Eigen::VectorXd CutoffMultiplier::diag(int d) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(psi.size()) * d);
    for (std::size_t x = 0; x < psi.size(); ++x)
        for (int c = 0; c < d; ++c) v(static_cast<Eigen::Index>(x) * d + c) = psi[x];
    return v;
}

CutoffMultiplier cutoff(double T, double width, int sites) {
    if (T < 0) throw ArgumentError("cutoff: T must be nonnegative");
    if (!(width > 0)) throw ArgumentError("cutoff: width must be positive");
    CutoffMultiplier c;
    c.T = T;
    c.width = width;
    c.psi.resize(sites);
    for (int x = 0; x < sites; ++x) c.psi[x] = x <= T ? 1.0 : chi_bump(1.0 + (x - T) / width);
    return c;
}

ToeplitzOracle toeplitz_index(const HalfKernel& H, const std::vector<double>& theta, double cut) {
    const Mat M = half_plus_block(H, theta);
    Eigen::BDCSVD<Mat> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const int dB = H.d / 2;
    ToeplitzOracle o;
    o.smallestGapped = std::numeric_limits<double>::infinity();
    auto nearWeight = [&](const Vec& v) {
        double w = 0;
        for (Eigen::Index i = 0; i < v.size(); ++i)
            if (i / dB < H.sites / 2) w += std::norm(v(i));
        return w;
    };
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) >= cut) {
            o.smallestGapped = std::min(o.smallestGapped, s(i));
            continue;
        }
        if (nearWeight(svd.matrixV().col(i)) > 0.5) o.kernelDim++;
        if (nearWeight(svd.matrixU().col(i)) > 0.5) o.cokernelDim++;
    }
    o.index = o.kernelDim - o.cokernelDim;
    return o;
}

}  // namespace l1
