// Boundary index pipeline on half-cylinders, computed fiber by fiber in the
// boundary momentum θ. Every operator that is needed is of the form X·Ψ_T, so
// only the columns where Ψ_T ≠ 0 are carried. Sparse Chebyshev recurrences on
// those column blocks keep entries outside the light cone exactly zero.

#include <fftw3.h>

#include <chrono>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>

#include "l1/index.hpp"
#include "l1/parallel.hpp"

namespace l1 {

namespace {

constexpr double kPi = std::numbers::pi;
const cd I(0.0, 1.0);

struct Grid {
    std::vector<int> periods;
    std::vector<bool> isZ;
    int total = 1;
    std::vector<double> theta(int lin) const {
        std::vector<double> th(periods.size());
        for (int j = static_cast<int>(periods.size()) - 1; j >= 0; --j) {
            const int k = lin % periods[j];
            lin /= periods[j];
            th[j] = 2 * kPi * k / periods[j];
        }
        return th;
    }
    std::vector<long> coords(int lin) const {
        std::vector<long> c(periods.size());
        for (int j = static_cast<int>(periods.size()) - 1; j >= 0; --j) {
            const long k = lin % periods[j];
            lin /= periods[j];
            c[j] = (isZ[j] && k >= periods[j] / 2) ? k - periods[j] : k;
        }
        return c;
    }
};

Grid make_grid(const GroupPtr& G, int zPoints) {
    Grid g;
    g.periods = G->dual_periods(zPoints);
    g.isZ = G->dual_is_z();
    for (int p : g.periods) g.total *= p;
    return g;
}

int default_points(const GroupPtr& G) { return G->dual_dim() <= 1 ? 128 : 16; }

// Σ_k c_k T_k(D/R)·B, skipping zero coefficients in the accumulation.
Mat cheb_block(const SpMat& D, const ChebSeries& s, const Mat& B) {
    const double invR = 1.0 / s.R;
    Mat acc = s.c[0] * B;
    if (s.c.size() == 1) return acc;
    Mat T0 = B;
    Mat T1 = invR * (D * B);
    if (s.c[1] != cd(0)) acc += s.c[1] * T1;
    for (std::size_t k = 2; k < s.c.size(); ++k) {
        Mat T2 = (2.0 * invR) * (D * T1) - T0;
        if (s.c[k] != cd(0)) acc += s.c[k] * T2;
        T0.swap(T1);
        T1.swap(T2);
    }
    return acc;
}

double op_norm_gram(const Mat& A) {
    if (A.size() == 0) return 0.0;
    const Mat G = A.cols() <= A.rows() ? Mat(A.adjoint() * A) : Mat(A * A.adjoint());
    if (G.cwiseAbs().maxCoeff() == 0.0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Mat> es(G, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

double sparse_norm_bound(const SpMat& M) {
    Eigen::VectorXd rs = Eigen::VectorXd::Zero(M.rows()), cs = Eigen::VectorXd::Zero(M.cols());
    for (Eigen::Index k = 0; k < M.outerSize(); ++k)
        for (SpMat::InnerIterator it(M, k); it; ++it) {
            rs(it.row()) += std::abs(it.value());
            cs(it.col()) += std::abs(it.value());
        }
    return std::sqrt(rs.maxCoeff() * cs.maxCoeff());
}

// Per-θ column blocks, stored entry-major so that the θ axis is contiguous.
struct ThetaBuffer {
    int rows = 0, cols = 0;
    Grid grid;
    std::vector<cd> data;
    void init(int r, int c, const Grid& g) {
        rows = r;
        cols = c;
        grid = g;
        data.assign(static_cast<std::size_t>(r) * c * g.total, cd(0));
    }
    void store(int lin, const Mat& B) {
        for (int j = 0; j < cols; ++j)
            for (int i = 0; i < rows; ++i)
                data[(static_cast<std::size_t>(j) * rows + i) * grid.total + lin] = B(i, j);
    }
};

struct ComponentNorms {
    double n0 = 0, nK = 0, nKCoarse = 0;
};

// Fourier components X_γ = (1/N)Σ_θ X(θ)e^{-iθ·γ}, then Σ_γ e^{Kℓ(γ)}‖X_γ‖. The
// coarse value uses the half grid on each ℤ axis (components folded mod N/2).
ComponentNorms component_norms(ThetaBuffer& buf, const GroupPtr& G, double K) {
    const Grid& g = buf.grid;
    const int rank = static_cast<int>(g.periods.size());
    const int howmany = buf.rows * buf.cols;
    {
        static std::mutex planMutex;
        fftw_plan plan;
        {
            std::lock_guard<std::mutex> lk(planMutex);
            plan = fftw_plan_many_dft(rank, g.periods.data(), howmany, reinterpret_cast<fftw_complex*>(buf.data.data()),
                                      nullptr, 1, g.total, reinterpret_cast<fftw_complex*>(buf.data.data()), nullptr,
                                      1, g.total, FFTW_FORWARD, FFTW_ESTIMATE);
        }
        fftw_execute(plan);
        std::lock_guard<std::mutex> lk(planMutex);
        fftw_destroy_plan(plan);
    }
    const double inv = 1.0 / g.total;
    auto gather = [&](int lin) {
        Mat A(buf.rows, buf.cols);
        for (int j = 0; j < buf.cols; ++j)
            for (int i = 0; i < buf.rows; ++i)
                A(i, j) = buf.data[(static_cast<std::size_t>(j) * buf.rows + i) * g.total + lin] * inv;
        return A;
    };
    ComponentNorms out;
    std::vector<double> n0(g.total), nK(g.total);
    parallel_for(g.total, [&](int lin) {
        const double nrm = op_norm_gram(gather(lin));
        const double w = std::exp(K * G->length(G->from_coords(g.coords(lin))));
        n0[lin] = nrm;
        nK[lin] = w * nrm;
    });
    for (int lin = 0; lin < g.total; ++lin) out.n0 += n0[lin], out.nK += nK[lin];

    // Coarse grid: periods halved on ℤ axes; coarse component = sum of its preimages.
    Grid c = g;
    c.total = 1;
    for (int j = 0; j < rank; ++j) {
        if (g.isZ[j]) c.periods[j] = g.periods[j] / 2;
        c.total *= c.periods[j];
    }
    std::vector<double> nc(c.total);
    parallel_for(c.total, [&](int clin) {
        std::vector<int> idx(rank);
        int t = clin;
        for (int j = rank - 1; j >= 0; --j) idx[j] = t % c.periods[j], t /= c.periods[j];
        Mat A = Mat::Zero(buf.rows, buf.cols);
        const int nPre = 1 << rank;
        for (int m = 0; m < nPre; ++m) {
            bool ok = true;
            int lin = 0;
            for (int j = 0; j < rank; ++j) {
                int k = idx[j];
                if (m >> j & 1) {
                    if (!g.isZ[j]) ok = false;
                    k += c.periods[j];
                }
                lin = lin * g.periods[j] + k;
            }
            if (ok) A += gather(lin);
        }
        nc[clin] = std::exp(K * G->length(G->from_coords(c.coords(clin)))) * op_norm_gram(A);
    });
    for (double v : nc) out.nKCoarse += v;
    return out;
}

std::vector<double> fiber_eps(const HalfKernel& H) {
    std::vector<double> e(H.dim());
    for (long i = 0; i < H.dim(); ++i) e[i] = H.grading.empty() ? 1.0 : H.grading[i % H.d];
    return e;
}

void check_hypotheses(const HalfKernel& H, double a, double K, const HalfOptions& opt, bool& met, std::string& warn,
                      double boundaryGap) {
    const double KG = opt.KGamma >= 0 ? opt.KGamma : exact_growth_rate(*H.G);
    std::ostringstream os;
    met = true;
    if (!(boundaryGap > 2 * (KG + K) / opt.tau)) {
        met = false;
        os << "boundary gap " << boundaryGap << " ≤ 2(K_Γ+K)/τ = " << 2 * (KG + K) / opt.tau << "; ";
    }
    if (!(a > 4 * (KG + K) / opt.tau)) {
        met = false;
        os << "a = " << a << " ≤ 4(K_Γ+K)/τ = " << 4 * (KG + K) / opt.tau << "; ";
    }
    warn = os.str();
}

int last_psi_site(double T, double width) { return static_cast<int>(std::ceil(T + width)) - 1; }

// Gap of the cylinder operator: the boundary gap (D_x contributes a positive square).
double boundary_gap_of(const HalfKernel& H, double fallback) { return H.boundaryGap > 0 ? H.boundaryGap : fallback; }

}  // namespace

double half_spectral_bound(const HalfKernel& H) {
    double s = 0;
    for (const auto& [g, m] : H.comps) s += sparse_norm_bound(m);
    return s;
}

ChebSeries normalizer_series(const HalfKernel& H, double a, double t, double tol) {
    const SpectralFunction F = SpectralFunction::fat(a, t);
    const double R = 1.01 * half_spectral_bound(H);
    ChebSeries s = chebyshev_series([&](double x) { return F(x); }, R, tol, 4000);
    for (std::size_t k = 0; k < s.c.size(); k += 2) s.c[k] = 0;  // F is odd
    while (s.c.size() > 1 && s.c.back() == cd(0)) s.c.pop_back();
    return s;
}

int even_reach(int degree, int xprop) { return 5 * degree * xprop; }
int odd_reach(int degree, int n, int xprop) { return n * degree * xprop; }

int half_sites_needed(double T, double width, int reach, double boundaryGap) {
    const int margin = boundaryGap > 0 ? static_cast<int>(std::ceil(10.0 / boundaryGap)) : 10;
    return last_psi_site(T, width) + reach + 1 + margin + 1;
}

BoundaryQuasi boundary_quasi_idempotent(const HalfKernel& H, double a, double t, double K, const HalfOptions& opt) {
    if (H.grading.empty()) throw StructuralError("boundary_quasi_idempotent: half-space model is ungraded");
    BoundaryQuasi q;
    q.a = a;
    q.t = t;
    q.K = K;
    q.T = 24 * a * t * t;
    q.width = opt.width;
    q.d = H.d;
    q.sites = H.sites;
    q.modelTag = H.tag;
    check_hypotheses(H, a, K, opt, q.hypothesisMet, q.warning, boundary_gap_of(H, 0.0));

    const ChebSeries F = normalizer_series(H, a, t, opt.chebTol);
    q.degree = static_cast<int>(F.c.size()) - 1;
    q.reach = even_reach(q.degree, H.xprop);
    const int cmax = last_psi_site(q.T, q.width);
    q.cols = cmax + 1;
    if (cmax + q.reach + 1 >= H.sites) {
        std::ostringstream os;
        os << "boundary_quasi_idempotent: " << H.sites << " sites cannot hold the light cone (need more than "
           << cmax + q.reach + 1 << "); rebuild with half_model_for";
        throw ResourceError(os.str());
    }
    const int d = H.d;
    const long N = H.dim();
    const int nc = q.cols * d;
    const int nr = (cmax + q.reach + 1) * d;
    const auto psi = cutoff(q.T, q.width, H.sites);
    const std::vector<double> eps = fiber_eps(H);
    Eigen::VectorXd pm(N), psiC(nc);
    for (long i = 0; i < N; ++i) pm(i) = 0.5 * (1.0 - eps[i]);
    for (int i = 0; i < nc; ++i) psiC(i) = psi.at(i / d);
    q.eps.assign(eps.begin(), eps.begin() + nc);

    const int pts = opt.thetaPoints > 0 ? opt.thetaPoints : default_points(H.G);
    const Grid full = make_grid(H.G, pts);
    Grid idxGrid = make_grid(H.G, std::min(opt.indexThetaPoints, pts));
    if (pts % std::min(opt.indexThetaPoints, pts) != 0) throw ArgumentError("indexThetaPoints must divide thetaPoints");
    const Grid& loop = opt.norms ? full : idxGrid;
    q.thetaPoints = opt.norms ? pts : idxGrid.periods[0];

    // Index-grid points inside the loop grid: every stride-th point on ℤ axes.
    std::vector<int> idxOfLoop(loop.total, -1);
    for (int il = 0; il < idxGrid.total; ++il) {
        const auto th = idxGrid.theta(il);
        int lin = 0;
        for (std::size_t j = 0; j < th.size(); ++j)
            lin = lin * loop.periods[j] + static_cast<int>(std::lround(th[j] / (2 * kPi) * loop.periods[j])) %
                                              loop.periods[j];
        idxOfLoop[lin] = il;
    }
    q.indexThetas.resize(idxGrid.total);
    q.qcc.resize(idxGrid.total);

    ThetaBuffer buf;
    if (opt.norms) buf.init(nr, nc, full);
    std::vector<double> opDef(loop.total, 0.0);
    std::vector<char> far(loop.total, 1);
    std::vector<int> lastRow(loop.total, -1);

    parallel_for(loop.total, [&](int lin) {
        const auto th = loop.theta(lin);
        const SpMat D = H.fiber(th);
        auto Fb = [&](const Mat& B) { return cheb_block(D, F, B); };
        Mat E = Mat::Zero(N, nc);
        E.topRows(nc).setIdentity();
        const Mat X1 = Fb(E);
        const Mat gE = E - Fb(X1);
        const Mat ggE = gE - Fb(Fb(gE));
        const Mat FgE = Fb(gE);
        const Mat gX1 = X1 - Fb(Fb(X1));
        const Mat ggX1 = gX1 - Fb(Fb(gX1));
        Mat Y = FgE;
        for (long i = 0; i < N; ++i) Y.row(i) += eps[i] * ggE.row(i) + pm(i) * ggX1.row(i);
        const Mat Z = Y * psiC.asDiagonal();
        Mat def = Z * Z.topRows(nc) - Z;
        for (long i = 0; i < N; ++i) def.row(i) += pm(i) * Z.row(i);
        for (int j = 0; j < nc; ++j) def.col(j) += Z.col(j) * pm(j);

        int lr = -1;
        for (long i = N - 1; i >= 0 && lr < 0; --i)
            if (def.row(i).cwiseAbs().maxCoeff() > 0.0 || Z.row(i).cwiseAbs().maxCoeff() > 0.0) lr = static_cast<int>(i);
        lastRow[lin] = lr;
        far[lin] = lr < nr;
        opDef[lin] = op_norm_gram(def);
        if (opt.norms) buf.store(lin, def.topRows(nr));
        if (idxOfLoop[lin] >= 0) {
            const int il = idxOfLoop[lin];
            Mat qcc = Z.topRows(nc);
            for (int i = 0; i < nc; ++i) qcc(i, i) += pm(i);
            q.qcc[il] = std::move(qcc);
            q.indexThetas[il] = th;
        }
    });

    q.farZero = true;
    for (int lin = 0; lin < loop.total; ++lin) {
        q.farZero = q.farZero && far[lin];
        q.lastNonzeroSite = std::max(q.lastNonzeroSite, lastRow[lin] / d);
        q.defectOp = std::max(q.defectOp, opDef[lin]);
    }
    if (opt.norms) {
        const ComponentNorms cn = component_norms(buf, H.G, K);
        q.defect10 = cn.n0;
        q.defectK = cn.nK;
        q.defectKCoarse = cn.nKCoarse;
        q.usable = q.defectK < 0.5;
    }
    return q;
}

HalfIndex riesz_idempotent(const BoundaryQuasi& q, double tol) {
    if (q.defectOp >= 0.25) {
        std::ostringstream os;
        os << "riesz_idempotent: ‖q² - q‖_op = " << q.defectOp << " ≥ 1/4; increase t";
        throw RefusedError(os.str(), q.defectOp, 0.25);
    }
    HalfIndex r;
    r.thetas = q.indexThetas;
    r.defectOp = q.defectOp;
    r.traces.assign(q.qcc.size(), 0.0);
    std::vector<double> res(q.qcc.size());
    std::vector<int> its(q.qcc.size());
    parallel_for(static_cast<int>(q.qcc.size()), [&](int i) {
        const Mat X = newton_schulz(q.qcc[i], tol, 200, &its[i]);
        double tr = 0;
        for (Eigen::Index k = 0; k < X.rows(); ++k) tr += X(k, k).real() - 0.5 * (1.0 - q.eps[k]);
        r.traces[i] = tr;
        res[i] = (X * X - X).norm();
    });
    for (std::size_t i = 0; i < q.qcc.size(); ++i) {
        r.trace += r.traces[i];
        r.idempotencyResidual = std::max(r.idempotencyResidual, res[i]);
        r.maxIterations = std::max(r.maxIterations, its[i]);
    }
    if (!q.qcc.empty()) r.trace /= static_cast<double>(q.qcc.size());
    return r;
}

TraceIndex pairing_trace_index(const HalfIndex& r) {
    TraceIndex t;
    t.value = r.trace;
    t.index = std::lround(r.trace);
    t.distance = std::abs(r.trace - static_cast<double>(t.index));
    t.integral = t.distance <= 1e-6;
    return t;
}

cd f_n(int n, cd x) {
    cd S = 0, c = 1, acc = 0, xp = 1;
    for (int k = 1; k <= n; ++k) {
        c *= 2 * kPi * I / static_cast<double>(k);
        xp *= x;
        S += c;
        acc += c * xp;
    }
    return acc - S * x;
}

OddBoundaryElement odd_index_element(const HalfKernel& H, double a, double t, int n, double K, const HalfOptions& opt,
                                     int sign) {
    if (n < 1) throw ArgumentError("odd_index_element: n must be positive");
    OddBoundaryElement w;
    w.a = a;
    w.t = t;
    w.n = n;
    w.K = K;
    w.sign = sign >= 0 ? 1 : -1;
    w.T = 4 * n * a * t * t;
    w.width = opt.width;
    w.sites = H.sites;
    check_hypotheses(H, a, K, opt, w.hypothesisMet, w.warning, boundary_gap_of(H, 0.0));

    const ChebSeries F = normalizer_series(H, a, t, opt.chebTol);
    w.degree = static_cast<int>(F.c.size()) - 1;
    w.reach = odd_reach(w.degree, n, H.xprop);
    const int cmax = last_psi_site(w.T, w.width);
    if (cmax + w.reach + 1 >= H.sites) {
        std::ostringstream os;
        os << "odd_index_element: " << H.sites << " sites cannot hold the light cone (need more than "
           << cmax + w.reach + 1 << "); rebuild with half_model_for";
        throw ResourceError(os.str());
    }
    const int d = H.d;
    const long N = H.dim();
    const int nc = (cmax + 1) * d;
    const int nr = (cmax + w.reach + 1) * d;
    const auto psi = cutoff(w.T, w.width, H.sites);
    Eigen::VectorXd psiC(nc);
    for (int i = 0; i < nc; ++i) psiC(i) = psi.at(i / d);

    std::vector<cd> c(n + 1);
    cd S = 0, ck = 1;
    for (int k = 1; k <= n; ++k) {
        ck *= 2 * kPi * I / static_cast<double>(k);
        c[k] = ck;
        S += ck;
    }

    const int pts = opt.thetaPoints > 0 ? opt.thetaPoints : default_points(H.G);
    const Grid grid = make_grid(H.G, pts);
    w.thetaPoints = pts;
    ThetaBuffer left, right;
    left.init(nr, nc, grid);
    right.init(nr, nc, grid);
    std::vector<char> far(grid.total, 1);
    std::vector<int> lastRow(grid.total, -1);

    parallel_for(grid.total, [&](int lin) {
        const SpMat D = H.fiber(grid.theta(lin));
        // y·B with y = s·P = s(F + 1)/2
        auto Yb = [&](const Mat& B, double s) { return Mat(0.5 * s * (cheb_block(D, F, B) + B)); };
        auto fn = [&](const Mat& B, double s) {
            Mat acc = c[n] * B;
            for (int k = n - 1; k >= 2; --k) acc = c[k] * B + Yb(acc, s);
            if (n >= 2) acc = (c[1] - S) * B + Yb(acc, s);
            else acc = (c[1] - S) * B;
            return Yb(acc, s);
        };
        Mat E = Mat::Zero(N, nc);
        E.topRows(nc).setIdentity();
        const double s = w.sign;
        const Mat Bp = fn(E, s);   // f_n(sP) on the Ψ columns
        const Mat Bm = fn(E, -s);  // f_n(-sP)
        const Mat BpPsi = Bp * psiC.asDiagonal(), BmPsi = Bm * psiC.asDiagonal();
        const Mat L = BpPsi + BmPsi + Bp * (psiC.asDiagonal() * BmPsi.topRows(nc));
        const Mat R = BmPsi + BpPsi + Bm * (psiC.asDiagonal() * BpPsi.topRows(nc));
        int lr = -1;
        for (long i = N - 1; i >= 0 && lr < 0; --i)
            if (L.row(i).cwiseAbs().maxCoeff() > 0.0 || R.row(i).cwiseAbs().maxCoeff() > 0.0) lr = static_cast<int>(i);
        lastRow[lin] = lr;
        far[lin] = lr < nr;
        left.store(lin, L.topRows(nr));
        right.store(lin, R.topRows(nr));
    });
    w.farZero = true;
    for (int lin = 0; lin < grid.total; ++lin) {
        w.farZero = w.farZero && far[lin];
        w.lastNonzeroSite = std::max(w.lastNonzeroSite, lastRow[lin] / d);
    }
    {
        const ComponentNorms cl = component_norms(left, H.G, K);
        w.certLeft = cl.nK;
        w.certLeftCoarse = cl.nKCoarse;
        left.data.clear();
        left.data.shrink_to_fit();
    }
    const ComponentNorms cr = component_norms(right, H.G, K);
    w.certRight = cr.nK;
    w.certRightCoarse = cr.nKCoarse;
    w.invertible = w.certLeft < 1.0 && w.certRight < 1.0;
    return w;
}

HalfKernel half_model_for(const Kernel& Db, int interior, const HalfBC& bc, double a, double t, int n,
                          const HalfOptions& opt) {
    HalfKernel probe = half_space_model(Db, interior, std::max(4 * interior, 8), bc);
    const ChebSeries F = normalizer_series(probe, a, t, opt.chebTol);
    const int deg = static_cast<int>(F.c.size()) - 1;
    const double T = n > 0 ? 4.0 * n * a * t * t : 24.0 * a * t * t;
    const int reach = n > 0 ? odd_reach(deg, n, probe.xprop) : even_reach(deg, probe.xprop);
    const int sites = half_sites_needed(T / Db.h, opt.width, reach, probe.boundaryGap);
    return half_space_model(Db, interior, std::max(sites - 1, 4 * interior), bc);
}

EvenSchedule quasi_idempotent_schedule(const Kernel& Db, int interior, const HalfBC& bc, double a, double K,
                                       const std::vector<double>& ts, HalfOptions opt) {
    EvenSchedule s;
    for (double t : ts) {
        const auto t0 = std::chrono::steady_clock::now();
        const HalfKernel H = half_model_for(Db, interior, bc, a, t, 0, opt);
        BoundaryQuasi q = boundary_quasi_idempotent(H, a, t, K, opt);
        ScheduleStep st;
        st.t = t;
        st.sites = H.sites;
        st.valueA = q.defectK;
        st.valueB = q.defectOp;
        st.pass = q.usable;
        st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        s.steps.push_back(st);
        if (q.usable) {
            s.result = std::move(q);
            break;
        }
    }
    return s;
}

OddSchedule odd_element_schedule(const Kernel& Db, int interior, const HalfBC& bc, double a, double K,
                                 const std::vector<double>& ts, const std::vector<int>& ns, HalfOptions opt) {
    OddSchedule s;
    for (double t : ts)
        for (int n : ns) {
            const auto t0 = std::chrono::steady_clock::now();
            HalfBC b = bc;
            b.odd = true;
            const HalfKernel H = half_model_for(Db, interior, b, a, t, n, opt);
            OddBoundaryElement w = odd_index_element(H, a, t, n, K, opt);
            ScheduleStep st;
            st.t = t;
            st.n = n;
            st.sites = H.sites;
            st.valueA = w.certLeft;
            st.valueB = w.certRight;
            st.pass = w.invertible;
            st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            s.steps.push_back(st);
            if (w.invertible) {
                s.result = std::move(w);
                return s;
            }
        }
    return s;
}

}  // namespace l1
