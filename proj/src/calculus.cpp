#include "l1/calculus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include <fftw3.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "l1/special.hpp"

namespace l1 {

namespace {

constexpr double kPi = std::numbers::pi;
const cd I(0.0, 1.0);

template <class F>
double gk_real(F f, double a, double b, double tol = 1e-14) {
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, tol);
}

// Simpson weights on an odd number of uniform samples.
std::vector<double> simpson_weights(std::size_t n, double h) {
    std::vector<double> w(n, 0.0);
    if (n < 3 || n % 2 == 0) throw ArgumentError("simpson: need an odd sample count >= 3");
    for (std::size_t i = 0; i < n; ++i) w[i] = (i == 0 || i + 1 == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    for (auto& x : w) x *= h / 3.0;
    return w;
}

}  // namespace

// ---------------------------------------------------------------- families

SpectralFunction SpectralFunction::gt(double t) {
    if (!(t > 0)) throw ArgumentError("G_t: t must be positive");
    SpectralFunction f;
    f.family = Family::Gt;
    f.t = t;
    f.affine = true;
    f.Chat = 1.0 / (4 * t * t);
    return f;
}

SpectralFunction SpectralFunction::fat(double a, double t) {
    if (!(a > 0 && t > 0)) throw ArgumentError("F_at: a and t must be positive");
    SpectralFunction f;
    f.family = Family::Fat;
    f.a = a;
    f.t = t;
    f.affine = true;
    f.N = 2 * a * t * t;
    return f;
}

SpectralFunction SpectralFunction::heat(double t, double scale) {
    if (t < 0) throw ArgumentError("heat: t must be nonnegative");
    SpectralFunction f;
    f.family = Family::Heat;
    f.t = t;
    f.scale = scale;
    f.C = t;
    f.Chat = t > 0 ? 1.0 / (4 * t) : 0.0;
    return f;
}

SpectralFunction SpectralFunction::gauss_sign(double t) {
    if (!(t > 0)) throw ArgumentError("gauss_sign: t must be positive");
    SpectralFunction f;
    f.family = Family::GaussSign;
    f.t = t;
    f.C = t * t / 2;  // any rate below t² works for x e^{-t²x²}
    f.Chat = 1.0 / (8 * t * t);
    return f;
}

SpectralFunction SpectralFunction::power_resolvent(double s, double b) {
    if (!(s > 0 && b > 0)) throw ArgumentError("power_resolvent: s and b must be positive");
    SpectralFunction f;
    f.family = Family::PowerResolvent;
    f.s = s;
    f.b = b;
    return f;
}

SpectralFunction SpectralFunction::cayley(double s) {
    if (!(s > 0)) throw ArgumentError("cayley: s must be positive");
    SpectralFunction f;
    f.family = Family::Cayley;
    f.s = s;
    return f;
}

SpectralFunction SpectralFunction::exp2pi(double t) {
    if (!(t > 0)) throw ArgumentError("exp2pi: t must be positive");
    SpectralFunction f;
    f.family = Family::Exp2pi;
    f.t = t;
    return f;
}

SpectralFunction SpectralFunction::sign() {
    SpectralFunction f;
    f.family = Family::Sign;
    f.affine = true;
    return f;
}

SpectralFunction SpectralFunction::gt_minus_sign(double t) {
    if (!(t > 0)) throw ArgumentError("G_t - sgn: t must be positive");
    SpectralFunction f;
    f.family = Family::GtMinusSign;
    f.t = t;
    return f;
}

SpectralFunction SpectralFunction::polynomial(std::vector<cd> c) {
    SpectralFunction f;
    f.family = Family::Polynomial;
    f.coeffs = std::move(c);
    return f;
}

SpectralFunction SpectralFunction::band_limited_normalizer(double N, const std::function<double(double)>& hatFp,
                                                           int samples) {
    if (!(N > 0)) throw ArgumentError("band_limited: N must be positive");
    if (samples % 2 == 0) ++samples;
    SpectralFunction f;
    f.family = Family::BandLimited;
    f.affine = true;
    f.N = N;
    for (int i = 0; i < samples; ++i) {
        const double x = -N + 2 * N * i / (samples - 1);
        f.xi.push_back(x);
        f.samples.emplace_back(hatFp(x), 0.0);
    }
    const double v0 = hatFp(0.0);
    if (std::abs(v0 - 2.0) > 1e-12) throw ArgumentError("band_limited normalizer: F̂'(0) must equal 2");
    for (int i = 0; i < samples; ++i)
        if (std::abs(hatFp(f.xi[i]) - hatFp(-f.xi[i])) > 1e-12)
            throw ArgumentError("band_limited normalizer: F̂' must be even (F odd)");
    return f;
}

SpectralFunction SpectralFunction::band_limited(double N, const std::function<cd(double)>& fhat, int samples) {
    if (!(N > 0)) throw ArgumentError("band_limited: N must be positive");
    if (samples % 2 == 0) ++samples;
    SpectralFunction f;
    f.family = Family::BandLimited;
    f.N = N;
    for (int i = 0; i < samples; ++i) {
        const double x = -N + 2 * N * i / (samples - 1);
        f.xi.push_back(x);
        f.samples.push_back(fhat(x));
    }
    return f;
}

SpectralFunction SpectralFunction::random_normalizer(double N, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::array<double, 4> c{};
    for (auto& x : c) x = 0.3 * U(rng);
    auto g = [c](double u) {
        double s = 0;
        for (int k = 0; k < 4; ++k) s += c[k] * std::cos((k + 1) * kPi * u);
        return s;
    };
    auto hat = [N, g](double xi) {
        const double u = xi / N;
        return 2.0 * chi_bump(2.0 * std::abs(u)) * (1.0 + u * u * g(u));
    };
    return band_limited_normalizer(N, hat);
}

SpectralFunction SpectralFunction::from_json(const nlohmann::json& j) {
    const std::string fam = j.at("family").get<std::string>();
    auto num = [&](const char* k, double dflt) { return j.contains(k) ? j[k].get<double>() : dflt; };
    if (fam == "G_t") return gt(num("t", 1.0));
    if (fam == "F_at") return fat(num("a", 1.0), num("t", 1.0));
    if (fam == "heat") return heat(num("t", 1.0), num("scale", 1.0));
    if (fam == "gaussian_sign") return gauss_sign(num("t", 1.0));
    if (fam == "power_resolvent") return power_resolvent(num("s", 1.0), num("b", 1.0));
    if (fam == "cayley") return cayley(num("s", 1.0));
    if (fam == "exp2pi") return exp2pi(num("t", 1.0));
    if (fam == "sign") return sign();
    if (fam == "band_limited") {
        const double N = num("N", 1.0);
        if (j.contains("samples")) {
            const auto s = j["samples"].get<std::vector<double>>();
            if (s.size() < 3) throw ArgumentError("band_limited: need at least 3 samples");
            SpectralFunction f;
            f.family = Family::BandLimited;
            f.N = N;
            f.affine = j.value("affine", true);
            std::size_t n = s.size();
            if (n % 2 == 0) throw ArgumentError("band_limited: sample count must be odd");
            for (std::size_t i = 0; i < n; ++i) {
                f.xi.push_back(-N + 2 * N * i / (n - 1));
                f.samples.emplace_back(s[i], 0.0);
            }
            return f;
        }
        std::mt19937_64 rng(j.value("seed", 1ULL));
        return random_normalizer(N, rng);
    }
    throw ArgumentError("unknown spectral function family '" + fam + "'");
}

nlohmann::json SpectralFunction::to_json() const {
    nlohmann::json j;
    switch (family) {
        case Family::Gt: return {{"family", "G_t"}, {"t", t}};
        case Family::Fat: return {{"family", "F_at"}, {"a", a}, {"t", t}};
        case Family::Heat: return {{"family", "heat"}, {"t", t}, {"scale", scale}};
        case Family::GaussSign: return {{"family", "gaussian_sign"}, {"t", t}};
        case Family::PowerResolvent: return {{"family", "power_resolvent"}, {"s", s}, {"b", b}};
        case Family::Cayley: return {{"family", "cayley"}, {"s", s}};
        case Family::Exp2pi: return {{"family", "exp2pi"}, {"t", t}};
        case Family::Sign: return {{"family", "sign"}};
        case Family::GtMinusSign: return {{"family", "G_t-sign"}, {"t", t}};
        case Family::Polynomial: return {{"family", "polynomial"}, {"degree", static_cast<int>(coeffs.size()) - 1}};
        case Family::BandLimited: {
            std::vector<double> re;
            for (const auto& v : samples) re.push_back(v.real());
            return {{"family", "band_limited"}, {"N", N}, {"affine", affine}, {"samples", re}};
        }
    }
    return j;
}

std::string SpectralFunction::name() const { return to_json().at("family").get<std::string>(); }

bool SpectralFunction::is_normalizer() const {
    return family == Family::Gt || family == Family::Fat || family == Family::Sign ||
           (family == Family::BandLimited && affine);
}

bool SpectralFunction::analytic() const { return family != Family::Sign; }

bool SpectralFunction::has_fourier() const {
    switch (family) {
        case Family::Gt:
        case Family::Fat:
        case Family::GaussSign:
        case Family::BandLimited: return true;
        case Family::Heat: return t > 0;
        default: return false;
    }
}

cd SpectralFunction::fhat(double x) const {
    switch (family) {
        case Family::Gt: return 2.0 * std::exp(-x * x / (4 * t * t));
        case Family::Fat: return 2.0 * std::exp(-x * x / (4 * t * t)) * chi_bump(x / (a * t * t));
        case Family::Heat: return scale * std::sqrt(kPi / t) * std::exp(-x * x / (4 * t));
        case Family::GaussSign: return -I * (x / (t * t)) * std::exp(-x * x / (4 * t * t));
        case Family::BandLimited: {
            if (std::abs(x) > N) return 0.0;
            const double h = xi[1] - xi[0];
            const double u = (x + N) / h;
            const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(u), xi.size() - 2);
            const double w = u - i;
            return (1 - w) * samples[i] + w * samples[i + 1];
        }
        default: throw ArgumentError("fhat: no closed-form Fourier transform for family " + name());
    }
}

double SpectralFunction::fourier_extent(double tol) const {
    const double L = std::log(1.0 / std::max(tol, 1e-300));
    switch (family) {
        case Family::Gt: return 2 * t * std::sqrt(L + 1);
        case Family::Fat: return 2 * a * t * t;
        case Family::Heat: return 2 * std::sqrt(t * (L + 1 + std::log(1 + scale * std::sqrt(kPi / t))));
        case Family::GaussSign: return 2 * t * std::sqrt(L + 4);
        case Family::BandLimited: return N;
        default: throw ArgumentError("fourier_extent: unsupported family " + name());
    }
}

double SpectralFunction::spatial_extent(double tol) const {
    const double L = std::log(1.0 / std::max(tol, 1e-300));
    switch (family) {
        case Family::Gt: return std::sqrt(L + 1) / t;
        case Family::Heat: return std::sqrt((L + 1) / t);
        case Family::GaussSign: return std::sqrt(L + 4) / t;
        // F' = G'*χ̂ for F_at and F' band-limited: smooth bumps in ξ give
        // super-algebraic decay on the scale 1/(band limit).
        case Family::Fat: return 4.0 / t + 12.0 * kPi / (a * t * t);
        case Family::BandLimited: return 60.0 / N;
        default: throw ArgumentError("spatial_extent: unsupported family " + name());
    }
}

double SpectralFunction::fourier_tail(double rho) const {
    rho = std::abs(rho);
    if (family == Family::Heat && t > 0) return std::abs(scale) * std::erfc(rho / (2 * std::sqrt(t)));
    if (!has_fourier()) throw ArgumentError("fourier_tail: no Fourier data for family " + name());
    const double ext = fourier_extent(1e-18);
    if (rho >= ext) return 0.0;
    // |f̂| is even for every supported family.
    const double v = gk_real([&](double x) { return std::abs(fhat(x)); }, rho, ext, 1e-13);
    return 2.0 * v / (2 * kPi);
}

cd SpectralFunction::operator()(double x) const { return eval(cd(x, 0.0)); }

cd SpectralFunction::eval(cd z) const {
    switch (family) {
        case Family::Gt: return erf_c(t * z);
        case Family::GtMinusSign: {
            const double sg = z.real() >= 0 ? 1.0 : -1.0;
            return -sg * erfc_c(sg * t * z);
        }
        case Family::Sign: {
            if (z.real() == 0.0) throw ArgumentError("sign: zero is not in the domain");
            return z.real() > 0 ? 1.0 : -1.0;
        }
        case Family::Heat: return scale * std::exp(-t * z * z);
        case Family::GaussSign: {
            const cd y = t * z;
            return 2.0 / std::sqrt(kPi) * y * std::exp(-y * y);
        }
        case Family::PowerResolvent: return std::pow(z * z / (s * s) + 1.0, -b);
        case Family::Cayley: return (z + s * I) / (z - s * I);
        case Family::Exp2pi: return std::exp(I * kPi * (erf_c(t * z) + 1.0));
        case Family::Polynomial: {
            cd r = 0;
            for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) r = r * z + *it;
            return r;
        }
        case Family::Fat: {
            const double top = 2 * a * t * t;
            auto ig = [&](double xi, bool imag) {
                const cd v = std::exp(-xi * xi / (4 * t * t)) * chi_bump(xi / (a * t * t)) * std::sin(z * xi) / xi;
                return imag ? v.imag() : v.real();
            };
            const double re = gk_real([&](double xi) { return ig(xi, false); }, 0.0, top);
            const double im = z.imag() == 0.0 ? 0.0 : gk_real([&](double xi) { return ig(xi, true); }, 0.0, top);
            return 2.0 / kPi * cd(re, im);
        }
        case Family::BandLimited: {
            const double h = xi[1] - xi[0];
            static thread_local std::vector<double> w;
            if (w.size() != xi.size()) w = simpson_weights(xi.size(), h);
            cd acc = 0;
            for (std::size_t k = 0; k < xi.size(); ++k) {
                const double x = xi[k];
                if (affine) {
                    const cd g = (std::abs(x) < 1e-300) ? z : (std::exp(I * z * x) - 1.0) / (I * x);
                    acc += w[k] * samples[k] * g;
                } else {
                    acc += w[k] * samples[k] * std::exp(I * z * x);
                }
            }
            return acc / (2 * kPi);
        }
    }
    return 0.0;
}

// ------------------------------------------------------------- utilities

double l1_bound(const Kernel& D) {
    double s = 0;
    for (const auto& [x, m] : D.comps) s += mat_op_norm(m);
    return s;
}

double self_adjoint_defect(const Kernel& D) { return weighted_norm(add(D, adjoint(D), 1.0, -1.0), 0.0); }

namespace {

Mat fiber_function_hermitian(const Mat& A, const SpectralFunction& f) {
    if (A.rows() == 1) return Mat::Constant(1, 1, f(A(0, 0).real()));
    Eigen::SelfAdjointEigenSolver<Mat> es(A);
    const auto& V = es.eigenvectors();
    Vec fl(A.rows());
    for (Eigen::Index i = 0; i < A.rows(); ++i) fl(i) = f(es.eigenvalues()(i));
    return V * fl.asDiagonal() * V.adjoint();
}

// Lagrange interpolation on clustered eigenvalues; valid for diagonalizable A.
Mat fiber_function_general(const Mat& A, const SpectralFunction& f) {
    const Eigen::Index n = A.rows();
    if (n == 1) return Mat::Constant(1, 1, f.eval(A(0, 0)));
    Eigen::ComplexEigenSolver<Mat> es(A, false);
    const auto& ev = es.eigenvalues();
    double scale = 0;
    for (Eigen::Index i = 0; i < n; ++i) scale = std::max(scale, std::abs(ev(i)));
    const double ctol = 1e-7 * (1.0 + scale);
    std::vector<cd> mu;
    std::vector<int> cnt;
    for (Eigen::Index i = 0; i < n; ++i) {
        bool merged = false;
        for (std::size_t k = 0; k < mu.size(); ++k)
            if (std::abs(ev(i) - mu[k]) < ctol) {
                mu[k] = (mu[k] * static_cast<double>(cnt[k]) + ev(i)) / static_cast<double>(cnt[k] + 1);
                cnt[k]++;
                merged = true;
                break;
            }
        if (!merged) {
            mu.push_back(ev(i));
            cnt.push_back(1);
        }
    }
    Mat R = Mat::Zero(n, n);
    const Mat Id = Mat::Identity(n, n);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        Mat L = Id;
        for (std::size_t j = 0; j < mu.size(); ++j)
            if (j != i) L = L * (A - mu[j] * Id) / (mu[i] - mu[j]);
        R += f.eval(mu[i]) * L;
    }
    return R;
}

struct Grid {
    std::vector<int> periods;
    std::vector<bool> isz;
    std::size_t total = 1;
};

Grid make_grid(const Group& G, int zPoints) {
    Grid g;
    g.periods = G.dual_periods(zPoints);
    g.isz = G.dual_is_z();
    for (int p : g.periods) g.total *= static_cast<std::size_t>(p);
    return g;
}

int default_points(const Group& G) {
    int nz = 0;
    for (bool b : G.dual_is_z()) nz += b;
    return nz <= 1 ? 2048 : 256;
}

// Forward FFT over the grid (row-major, last coordinate fastest), normalised.
void grid_fft(std::vector<cd>& data, const std::vector<int>& periods) {
    std::vector<int> n(periods.begin(), periods.end());
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan = fftw_plan_dft(static_cast<int>(n.size()), n.data(), p, p, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    const double inv = 1.0 / static_cast<double>(data.size());
    for (auto& v : data) v *= inv;
}

Kernel fiberwise(const Kernel& D, const SpectralFunction& f, const CalcOptions& opt) {
    const Group& G = *D.G;
    if (!G.is_abelian()) throw StructuralError("fiberwise scheme requires an abelian or finite parent group");
    const int zp = opt.gridPoints > 0 ? opt.gridPoints : default_points(G);
    const Grid grid = make_grid(G, zp);
    const int dim = static_cast<int>(grid.periods.size());
    const int d = D.d;
    const bool shifted = opt.weightK > 0;
    if (shifted && !f.analytic()) throw ArgumentError("fiberwise: contour shift needs an analytic function");

    struct Comp {
        std::vector<long> c;
        Mat m;
    };
    std::vector<Comp> dc;
    for (const auto& [x, m] : D.comps) dc.push_back({G.coords(x), m});

    std::vector<int> zidx;
    for (int j = 0; j < dim; ++j)
        if (grid.isz[j]) zidx.push_back(j);
    const int nOrth = shifted ? (1 << zidx.size()) : 1;

    Kernel out(D.G, d);
    out.with_meta(D);
    std::vector<std::vector<cd>> data(static_cast<std::size_t>(d * d), std::vector<cd>(grid.total));

    for (int orth = 0; orth < nOrth; ++orth) {
        std::vector<double> sgn(dim, 0.0), eta(dim, 0.0);
        for (std::size_t k = 0; k < zidx.size(); ++k) {
            sgn[zidx[k]] = ((orth >> k) & 1) ? -1.0 : 1.0;
            if (shifted) eta[zidx[k]] = -opt.weightK * sgn[zidx[k]];
        }
        std::vector<int> idx(dim, 0);
        for (std::size_t lin = 0; lin < grid.total; ++lin) {
            Mat S = Mat::Zero(d, d);
            for (const auto& comp : dc) {
                cd ph = 0;
                for (int j = 0; j < dim; ++j)
                    ph += cd(2 * kPi * idx[j] / grid.periods[j], eta[j]) * static_cast<double>(comp.c[j]);
                S += std::exp(I * ph) * comp.m;
            }
            Mat F = shifted ? fiber_function_general(S, f) : fiber_function_hermitian(0.5 * (S + S.adjoint()), f);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) data[a * d + b][lin] = F(a, b);
            for (int j = dim - 1; j >= 0; --j) {
                if (++idx[j] < grid.periods[j]) break;
                idx[j] = 0;
            }
        }
        for (auto& v : data) grid_fft(v, grid.periods);
        // Component at grid index k ↦ coordinate (k or k - N for ℤ; residue for ℤ/q).
        std::vector<int> k(dim, 0);
        for (std::size_t lin = 0; lin < grid.total; ++lin) {
            std::vector<long> c(dim);
            bool inOrthant = true;
            double wexp = 0;
            for (int j = 0; j < dim; ++j) {
                long v = k[j];
                if (grid.isz[j] && v >= grid.periods[j] / 2) v -= grid.periods[j];
                c[j] = v;
                if (grid.isz[j] && shifted) {
                    const double s = v >= 0 ? 1.0 : -1.0;
                    if (s != sgn[j]) inOrthant = false;
                    wexp -= opt.weightK * s * v;
                }
            }
            if (inOrthant) {
                Mat m(d, d);
                const double w = std::exp(wexp);
                for (int a = 0; a < d; ++a)
                    for (int b = 0; b < d; ++b) m(a, b) = w * data[a * d + b][lin];
                if (!m.isZero(0.0)) out.comps[G.from_coords(c)] = m;
            }
            for (int j = dim - 1; j >= 0; --j) {
                if (++k[j] < grid.periods[j]) break;
                k[j] = 0;
            }
        }
    }
    DropPolicy dp = opt.drop;
    if (shifted && dp.weightK == 0) dp.weightK = opt.weightK;
    return drop_small(out, dp);
}

Kernel expm_i(const Kernel& D, double dt, DropPolicy drop) {
    // e^{i dt D} by scaling and squaring with a Taylor core.
    const double nrm = std::abs(dt) * l1_bound(D);
    int sq = 0;
    while (nrm / std::ldexp(1.0, sq) > 0.25) ++sq;
    const cd h = I * dt / std::ldexp(1.0, sq);
    Kernel term = Kernel::identity(D.G, D.d).with_meta(D);
    Kernel acc = term;
    for (int k = 1; k <= 30; ++k) {
        term = (h / static_cast<double>(k)) * convolve(term, D, drop);
        acc = add(acc, term, 1.0, 1.0, drop);
        if (weighted_norm(term, 0.0) < 1e-18) break;
    }
    for (int i = 0; i < sq; ++i) acc = convolve(acc, acc, drop);
    return acc;
}

Kernel fourier_quadrature(const Kernel& D, const SpectralFunction& f, double tol, const CalcOptions& opt) {
    if (!f.has_fourier())
        throw ArgumentError("fourier-quadrature: family " + f.name() + " has no supported Fourier transform");
    const double R = opt.radius > 0 ? opt.radius : l1_bound(D);
    const double Xi = f.fourier_extent(tol * 1e-3);
    const double W = f.spatial_extent(tol * 1e-3);
    double dxi = 2 * kPi / (2 * R + 2 * W) * 0.9;
    // Refine the step until the same trapezoid sum reproduces f on [-R, R].
    auto scalar_sum = [&](double x, double h) {
        const int n = static_cast<int>(std::ceil(Xi / h));
        cd acc = 0;
        if (f.is_normalizer()) {
            acc = f.fhat(0.0) * 0.5 * x;
            for (int k = 1; k <= n; ++k) acc += f.fhat(k * h) * std::sin(k * h * x) / (k * h);
            return acc * h / kPi;
        }
        acc = f.fhat(0.0);
        for (int k = 1; k <= n; ++k)
            acc += f.fhat(k * h) * std::exp(I * (k * h * x)) + f.fhat(-k * h) * std::exp(-I * (k * h * x));
        return acc * h / (2 * kPi);
    };
    for (int it = 0; it < 10; ++it) {
        double err = 0;
        for (int j = 0; j <= 16; ++j) {
            const double x = -R + 2 * R * j / 16.0;
            err = std::max(err, std::abs(scalar_sum(x, dxi) - f(x)));
        }
        if (err < tol * 0.1) break;
        dxi *= 0.5;
    }
    const int K = static_cast<int>(std::ceil(Xi / dxi));
    DropPolicy fine{std::min(opt.drop.relTol, 1e-16), 0.0};
    const Kernel E1 = expm_i(D, dxi, fine);
    Kernel acc(D.G, D.d);
    acc.with_meta(D);
    Kernel Ek = Kernel::identity(D.G, D.d).with_meta(D);
    if (f.is_normalizer()) {
        // F(D) ≈ (Δ/π)[F̂'(0) D/2 + Σ_{k≥1} F̂'(kΔ) sin(kΔ D)/(kΔ)]
        acc = add(acc, D, 1.0, f.fhat(0.0) * 0.5, fine);
        for (int k = 1; k <= K; ++k) {
            Ek = convolve(Ek, E1, fine);
            const double x = k * dxi;
            const cd w = f.fhat(x) / x;
            if (w == cd(0)) continue;
            const Kernel sinK = add(Ek, adjoint(Ek), 1.0 / (2.0 * I), -1.0 / (2.0 * I), fine);
            acc = add(acc, sinK, 1.0, w, fine);
        }
        acc = (dxi / kPi) * acc;
    } else {
        // f(D) ≈ (Δ/2π) Σ_k f̂(kΔ) e^{ikΔD}, e^{-ikΔD} = (e^{ikΔD})*.
        acc = add(acc, Ek, 1.0, f.fhat(0.0), fine);
        for (int k = 1; k <= K; ++k) {
            Ek = convolve(Ek, E1, fine);
            const double x = k * dxi;
            acc = add(acc, Ek, 1.0, f.fhat(x), fine);
            acc = add(acc, adjoint(Ek), 1.0, f.fhat(-x), fine);
        }
        acc = (dxi / (2 * kPi)) * acc;
    }
    return drop_small(acc, opt.drop);
}

}  // namespace

ChebSeries chebyshev_series(const std::function<cd(double)>& f, double R, double tol, int degreeCap) {
    ChebSeries s;
    s.R = R;
    for (int n = 64;; n *= 2) {
        std::vector<cd> fv(n);
        for (int k = 0; k < n; ++k) fv[k] = f(R * std::cos(kPi * (k + 0.5) / n));
        std::vector<cd> c(n);
        for (int j = 0; j < n; ++j) {
            cd acc = 0;
            for (int k = 0; k < n; ++k) acc += fv[k] * std::cos(j * kPi * (k + 0.5) / n);
            c[j] = acc * (2.0 / n);
        }
        c[0] *= 0.5;
        // Smallest degree whose discarded tail is below tol.
        double tail = 0;
        int deg = n - 1;
        for (int j = n - 1; j >= 0; --j) {
            if (tail + std::abs(c[j]) >= tol) {
                deg = j;
                break;
            }
            tail += std::abs(c[j]);
            if (j == 0) deg = 0;
        }
        if (deg < n / 2) {
            s.c.assign(c.begin(), c.begin() + deg + 1);
            s.tail = tail;
            return s;
        }
        if (n > 2 * degreeCap) {
            std::ostringstream os;
            os << "chebyshev: tolerance " << tol << " needs degree > cap " << degreeCap;
            throw ConvergenceError(os.str(), tail);
        }
    }
}

Kernel chebyshev_apply(const Kernel& D, const ChebSeries& s, DropPolicy drop) {
    const Kernel X = (1.0 / s.R) * D;
    Kernel T0 = Kernel::identity(D.G, D.d).with_meta(D);
    Kernel acc = s.c[0] * T0;
    if (s.c.size() == 1) return acc;
    Kernel T1 = X;
    acc = add(acc, T1, 1.0, s.c[1], drop);
    for (std::size_t k = 2; k < s.c.size(); ++k) {
        Kernel T2 = add(convolve(X, T1, drop), T0, 2.0, -1.0, drop);
        acc = add(acc, T2, 1.0, s.c[k], drop);
        T0 = std::move(T1);
        T1 = std::move(T2);
    }
    return acc;
}

Kernel apply_function(const Kernel& D, const SpectralFunction& f, Scheme scheme, double tol, CalcOptions opt) {
    const double sad = self_adjoint_defect(D);
    if (sad > 1e-12) throw ArgumentError("apply_function: D is not self-adjoint (defect " + std::to_string(sad) + ")");
    if (f.family == Family::Heat && f.t == 0.0) return f.scale * Kernel::identity(D.G, D.d).with_meta(D);
    Kernel out;
    switch (scheme) {
        case Scheme::Fiberwise: out = fiberwise(D, f, opt); break;
        case Scheme::FourierQuadrature: out = fourier_quadrature(D, f, tol, opt); break;
        case Scheme::Chebyshev: {
            if (f.family == Family::Sign) throw ArgumentError("chebyshev: sgn is not approximable; use fiberwise");
            const double R = opt.radius > 0 ? opt.radius : l1_bound(D);
            auto s = chebyshev_series([&](double x) { return f(x); }, std::max(R, 1e-12), tol, opt.degreeCap);
            if (opt.degreeUsed) *opt.degreeUsed = static_cast<int>(s.c.size()) - 1;
            out = drop_small(chebyshev_apply(D, s, opt.drop), opt.drop);
            break;
        }
    }
    out.tag = f.name();
    return out;
}

Kernel heat(const Kernel& D, double t, double tol, CalcOptions opt) {
    const Scheme sc = D.G->is_abelian() ? Scheme::Fiberwise : Scheme::Chebyshev;
    return apply_function(D, SpectralFunction::heat(t), sc, tol, opt);
}

Kernel cayley(const Kernel& D, double s, double tol, CalcOptions opt) {
    const Scheme sc = D.G->is_abelian() ? Scheme::Fiberwise : Scheme::Chebyshev;
    return apply_function(D, SpectralFunction::cayley(s), sc, tol, opt);
}

Kernel power_resolvent(const Kernel& D, double s, double b, double tol, CalcOptions opt) {
    const Scheme sc = D.G->is_abelian() ? Scheme::Fiberwise : Scheme::Chebyshev;
    return apply_function(D, SpectralFunction::power_resolvent(s, b), sc, tol, opt);
}

Kernel sign_kernel(const Kernel& D, CalcOptions opt) {
    const auto gap = spectral_gap(D, opt.gridPoints);
    if (gap.sigma <= 1e-6) throw ArgumentError("sgn(D): spectral gap below 1e-6; refused");
    return apply_function(D, SpectralFunction::sign(), Scheme::Fiberwise, 0.0, opt);
}

ThresholdRecord gap_threshold(double sigma, double K, double KGamma, double tau) {
    ThresholdRecord r;
    r.K = K;
    r.KGamma = KGamma;
    r.tau = tau;
    r.threshold = 2 * (KGamma + K) / tau;
    r.pass = sigma > r.threshold;
    return r;
}

GapReport spectral_gap(const Kernel& D, int gridPoints, int truncRadius) {
    GapReport r;
    if (D.G->is_abelian()) {
        r.method = "fiberwise";
        const int zp = gridPoints > 0 ? gridPoints : default_points(*D.G);
        const Grid grid = make_grid(*D.G, zp);
        const int dim = static_cast<int>(grid.periods.size());
        std::vector<int> idx(dim, 0);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t lin = 0; lin < grid.total; ++lin) {
            std::vector<double> th(dim);
            for (int j = 0; j < dim; ++j) th[j] = 2 * kPi * idx[j] / grid.periods[j];
            Mat S = symbol(D, th);
            Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.adjoint()), Eigen::EigenvaluesOnly);
            best = std::min(best, es.eigenvalues().cwiseAbs().minCoeff());
            for (int j = dim - 1; j >= 0; --j) {
                if (++idx[j] < grid.periods[j]) break;
                idx[j] = 0;
            }
        }
        double lip = 0;
        for (const auto& [x, m] : D.comps) {
            const auto c = D.G->coords(x);
            double l = 0;
            for (int j = 0; j < dim; ++j)
                if (grid.isz[j]) l += std::abs(static_cast<double>(c[j]));
            lip += l * mat_op_norm(m);
        }
        if (D.comps.empty()) best = 0;
        r.sigma = best;
        r.lower = std::max(0.0, best - lip * kPi / zp);
    } else {
        r.method = "truncated";
        r.lowerBoundOnly = true;
        Mat M = truncated_matrix(D, truncRadius);
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.adjoint()), Eigen::EigenvaluesOnly);
        r.sigma = es.eigenvalues().cwiseAbs().minCoeff();
        r.lower = r.sigma;
    }
    return r;
}

TailReport tail_bound_check(const Kernel& D, const SpectralFunction& f, double mu, double tau, double C0,
                            double diamF, int gridPoints) {
    if (!(mu > 1)) throw ArgumentError("tail_bound_check: mu must exceed 1");
    TailReport rep;
    const double smu = std::sqrt(mu);
    rep.threshold = smu * (C0 + diamF) / (tau * (smu - 1));
    CalcOptions opt;
    opt.gridPoints = gridPoints;
    const Kernel fD = apply_function(D, f, Scheme::Fiberwise, 0.0, opt);
    rep.worstMargin = std::numeric_limits<double>::infinity();
    for (const auto& [x, m] : fD.comps) {
        const int l = D.G->length(x);
        if (l <= rep.threshold) continue;
        const double lhs = mat_op_norm(m);
        const double rhs = f.fourier_tail(tau * l / mu);
        rep.checked++;
        if (lhs > rhs) rep.violations++;
        if (rhs - lhs < rep.worstMargin) {
            rep.worstMargin = rhs - lhs;
            rep.worstLength = l;
        }
    }
    if (rep.checked == 0) rep.worstMargin = 0;
    return rep;
}

}  // namespace l1
