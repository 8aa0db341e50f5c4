#include "l1/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace l1 {

namespace {

void check_compatible(const Kernel& a, const Kernel& b, const char* op) {
    if (!a.G || !b.G || !a.G->same(*b.G)) throw StructuralError(std::string(op) + ": group mismatch");
    if (a.d != b.d) throw StructuralError(std::string(op) + ": fiber dimension mismatch");
}

std::vector<int> merged_grading(const Kernel& a, const Kernel& b) {
    if (a.graded()) return a.grading;
    return b.grading;
}

}  // namespace

double mat_op_norm(const Mat& m) {
    if (m.size() == 0) return 0.0;
    if (m.size() == 1) return std::abs(m(0, 0));
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()(0);
}

Kernel Kernel::zero(GroupPtr g, int d) { return Kernel(std::move(g), d); }

Kernel Kernel::identity(GroupPtr g, int d) {
    Kernel k(g, d);
    k.comps[g->identity()] = Mat::Identity(d, d);
    return k;
}

Kernel Kernel::delta(GroupPtr g, const Elem& x, const Mat& m) {
    Kernel k(std::move(g), static_cast<int>(m.rows()));
    if (!m.isZero(0.0)) k.comps[x] = m;
    return k;
}

Mat Kernel::component(const Elem& x) const {
    auto it = comps.find(x);
    if (it == comps.end()) return Mat::Zero(d, d);
    return it->second;
}

void Kernel::add_to(const Elem& x, const Mat& m) {
    auto it = comps.find(x);
    if (it == comps.end())
        comps.emplace(x, m);
    else
        it->second += m;
}

Kernel& Kernel::with_meta(const Kernel& like) {
    grading = like.grading;
    h = like.h;
    return *this;
}

int Kernel::parity(double tol) const {
    if (!graded()) return -1;
    bool even = true, odd = true;
    for (const auto& [x, m] : comps)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                if (std::abs(m(i, j)) <= tol) continue;
                if (grading[i] == grading[j])
                    odd = false;
                else
                    even = false;
            }
    if (even) return 0;
    if (odd) return 1;
    return -1;
}

Kernel drop_small(const Kernel& a, DropPolicy drop) {
    Kernel out(a.G, a.d);
    out.with_meta(a);
    out.tag = a.tag;
    std::vector<std::pair<const Elem*, double>> norms;
    norms.reserve(a.comps.size());
    double mx = 0;
    for (const auto& [x, m] : a.comps) {
        double n = m.cwiseAbs().maxCoeff();
        if (n == 0.0) continue;
        if (drop.weightK > 0) n *= std::exp(drop.weightK * a.G->length(x));
        norms.emplace_back(&x, n);
        mx = std::max(mx, n);
    }
    const double thr = drop.relTol * mx;
    for (const auto& [x, n] : norms)
        if (n > thr || (drop.relTol == 0.0 && n > 0.0)) out.comps.emplace(*x, a.comps.at(*x));
    return out;
}

Kernel add(const Kernel& a, const Kernel& b, cd alpha, cd beta, DropPolicy drop) {
    check_compatible(a, b, "add");
    Kernel out(a.G, a.d);
    out.grading = merged_grading(a, b);
    out.h = a.h;
    for (const auto& [x, m] : a.comps) out.comps.emplace(x, alpha * m);
    for (const auto& [x, m] : b.comps) out.add_to(x, beta * m);
    return drop_small(out, drop);
}

Kernel operator+(const Kernel& a, const Kernel& b) { return add(a, b, 1.0, 1.0); }
Kernel operator-(const Kernel& a, const Kernel& b) { return add(a, b, 1.0, -1.0); }

Kernel operator*(cd s, const Kernel& a) {
    Kernel out = a;
    if (s == cd(0)) {
        out.comps.clear();
        return out;
    }
    for (auto& [x, m] : out.comps) m *= s;
    return out;
}

Kernel convolve(const Kernel& a, const Kernel& b, DropPolicy drop) {
    check_compatible(a, b, "convolve");
    Kernel out(a.G, a.d);
    out.grading = merged_grading(a, b);
    out.h = a.h;
    const Group& G = *a.G;
    for (const auto& [x, A] : a.comps)
        for (const auto& [y, B] : b.comps) {
            Elem z = G.mul(x, y);
            auto it = out.comps.find(z);
            if (it == out.comps.end())
                out.comps.emplace(std::move(z), A * B);
            else
                it->second.noalias() += A * B;
        }
    return drop_small(out, drop);
}

Kernel adjoint(const Kernel& a) {
    Kernel out(a.G, a.d);
    out.with_meta(a);
    out.tag = a.tag;
    for (const auto& [x, m] : a.comps) out.comps.emplace(a.G->inv(x), m.adjoint());
    return out;
}

Kernel restrict_radius(const Kernel& a, int radius) {
    Kernel out(a.G, a.d);
    out.with_meta(a);
    for (const auto& [x, m] : a.comps)
        if (a.G->length(x) <= radius) out.comps.emplace(x, m);
    return out;
}

Kernel fiber_left(const Mat& f, const Kernel& a) {
    Kernel out(a.G, a.d);
    out.with_meta(a);
    for (const auto& [x, m] : a.comps) {
        Mat r = f * m;
        if (!r.isZero(0.0)) out.comps.emplace(x, std::move(r));
    }
    return out;
}

Kernel fiber_right(const Kernel& a, const Mat& f) {
    Kernel out(a.G, a.d);
    out.with_meta(a);
    for (const auto& [x, m] : a.comps) {
        Mat r = m * f;
        if (!r.isZero(0.0)) out.comps.emplace(x, std::move(r));
    }
    return out;
}

double weighted_norm(const Kernel& a, double K) {
    if (K < 0) throw ArgumentError("weighted_norm: K must be nonnegative");
    double s = 0;
    for (const auto& [x, m] : a.comps) s += std::exp(K * a.G->length(x)) * mat_op_norm(m);
    return s;
}

double l1_distance(const Kernel& a, const Kernel& b) { return weighted_norm(add(a, b, 1.0, -1.0), 0.0); }

int word_propagation(const Kernel& a) {
    int p = 0;
    for (const auto& [x, m] : a.comps)
        if (!m.isZero(0.0)) p = std::max(p, a.G->length(x));
    return p;
}

double propagation(const Kernel& a) { return a.h * word_propagation(a); }

Mat symbol(const Kernel& a, const std::vector<double>& theta) {
    return symbol_shifted(a, theta, std::vector<double>(theta.size(), 0.0));
}

Mat symbol_shifted(const Kernel& a, const std::vector<double>& theta, const std::vector<double>& eta) {
    if (!a.G->is_abelian()) throw StructuralError("symbol: parent group is not abelian");
    Mat s = Mat::Zero(a.d, a.d);
    for (const auto& [x, m] : a.comps) {
        const auto c = a.G->coords(x);
        cd ph = 0;
        for (std::size_t j = 0; j < c.size(); ++j) ph += cd(theta[j], eta[j]) * static_cast<double>(c[j]);
        s += std::exp(cd(0, 1) * ph) * m;
    }
    return s;
}

Mat truncated_matrix(const Kernel& a, int radius) {
    const auto ball = a.G->ball(radius);
    std::map<Elem, int> pos;
    for (std::size_t i = 0; i < ball.size(); ++i) pos[ball[i]] = static_cast<int>(i);
    const int n = static_cast<int>(ball.size());
    Mat M = Mat::Zero(n * a.d, n * a.d);
    // T(x,y) = T_{x⁻¹y}: for each x and component γ, y = xγ.
    for (int i = 0; i < n; ++i)
        for (const auto& [g, m] : a.comps) {
            auto it = pos.find(a.G->mul(ball[i], g));
            if (it == pos.end()) continue;
            M.block(i * a.d, it->second * a.d, a.d, a.d) += m;
        }
    return M;
}

NormReport op_norm(const Kernel& a, NormMethod method, NormOptions opt) {
    NormReport r;
    double l1 = 0;
    for (const auto& [x, m] : a.comps) l1 += mat_op_norm(m);
    switch (method) {
        case NormMethod::L1Bound:
            r.method = "l1-bound";
            r.lower = 0;
            r.upper = l1;
            return r;
        case NormMethod::Truncated: {
            r.method = "truncated";
            if (a.comps.empty()) return r;
            Mat M = truncated_matrix(a, opt.radius);
            Eigen::BDCSVD<Mat> svd(M);
            r.lower = svd.singularValues()(0);
            r.upper = l1;
            return r;
        }
        case NormMethod::Fiberwise: {
            r.method = "fiberwise";
            if (!a.G->is_abelian())
                throw StructuralError("op_norm: fiberwise method unsupported on a non-abelian group");
            if (a.comps.empty()) return r;
            const auto periods = a.G->dual_periods(opt.gridPoints);
            const auto isz = a.G->dual_is_z();
            const int dim = static_cast<int>(periods.size());
            std::vector<int> idx(dim, 0);
            double best = 0;
            while (true) {
                std::vector<double> th(dim);
                for (int j = 0; j < dim; ++j) th[j] = 2 * std::numbers::pi * idx[j] / periods[j];
                best = std::max(best, mat_op_norm(symbol(a, th)));
                int j = 0;
                while (j < dim && ++idx[j] == periods[j]) idx[j++] = 0;
                if (j == dim) break;
            }
            // Lipschitz bound in θ for the ℤ-coordinates.
            double lip = 0;
            for (const auto& [x, m] : a.comps) {
                const auto c = a.G->coords(x);
                double l = 0;
                for (int j = 0; j < dim; ++j)
                    if (isz[j]) l += std::abs(static_cast<double>(c[j]));
                lip += l * mat_op_norm(m);
            }
            r.lower = best;
            r.upper = std::min(l1, best + lip * std::numbers::pi / opt.gridPoints);
            return r;
        }
    }
    return r;
}

Mat grading_matrix(const Kernel& a) {
    Mat e = Mat::Identity(a.d, a.d);
    if (a.graded())
        for (int i = 0; i < a.d; ++i) e(i, i) = a.grading[i];
    return e;
}

namespace {

Mat kron(const Mat& A, const Mat& B) {
    Mat K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j) K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

std::vector<int> kron_grading(const Kernel& a, const Kernel& b) {
    if (!a.graded() && !b.graded()) return {};
    std::vector<int> g;
    for (int i = 0; i < a.d; ++i)
        for (int j = 0; j < b.d; ++j) g.push_back((a.graded() ? a.grading[i] : 1) * (b.graded() ? b.grading[j] : 1));
    return g;
}

}  // namespace

Kernel plain_tensor(const Kernel& a, const Kernel& b) {
    auto G = Group::product(a.G, b.G);
    Kernel out(G, a.d * b.d);
    out.grading = kron_grading(a, b);
    out.h = a.h;
    for (const auto& [x, A] : a.comps)
        for (const auto& [y, B] : b.comps) out.comps.emplace(G->pair(x, y), kron(A, B));
    return out;
}

Kernel tensor_left(const Kernel& a, const Kernel& bUnit) {
    return plain_tensor(a, Kernel::identity(bUnit.G, bUnit.d).with_meta(bUnit));
}

Kernel tensor_right(const Kernel& aUnit, const Kernel& b) {
    Kernel eps = Kernel::delta(aUnit.G, aUnit.G->identity(), grading_matrix(aUnit));
    eps.with_meta(aUnit);
    return plain_tensor(eps, b);
}

nlohmann::json kernel_to_json(const Kernel& a) {
    nlohmann::json j;
    j["group"] = a.G->to_json();
    j["d"] = a.d;
    j["grading"] = a.grading;
    j["h"] = a.h;
    j["tag"] = a.tag;
    std::vector<Elem> keys;
    for (const auto& [x, m] : a.comps) keys.push_back(x);
    std::sort(keys.begin(), keys.end(), [&](const Elem& x, const Elem& y) { return a.G->canonical_less(x, y); });
    auto arr = nlohmann::json::array();
    for (const auto& x : keys) {
        const Mat& m = a.comps.at(x);
        auto mm = nlohmann::json::array();
        for (int i = 0; i < a.d; ++i)
            for (int k = 0; k < a.d; ++k) mm.push_back({m(i, k).real(), m(i, k).imag()});
        arr.push_back({{"g", a.G->elem_to_json(x)}, {"m", mm}});
    }
    j["components"] = arr;
    return j;
}

Kernel kernel_from_json(const nlohmann::json& j) {
    auto G = Group::from_json(j.at("group"));
    Kernel k(G, j.at("d").get<int>());
    if (j.contains("grading")) k.grading = j["grading"].get<std::vector<int>>();
    if (j.contains("h")) k.h = j["h"].get<double>();
    if (j.contains("tag")) k.tag = j["tag"].get<std::string>();
    for (const auto& c : j.at("components")) {
        Mat m(k.d, k.d);
        const auto& mm = c.at("m");
        if (mm.size() != static_cast<std::size_t>(k.d * k.d)) throw StructuralError("kernel json: matrix size mismatch");
        for (int i = 0; i < k.d; ++i)
            for (int l = 0; l < k.d; ++l) m(i, l) = cd(mm[i * k.d + l][0].get<double>(), mm[i * k.d + l][1].get<double>());
        k.add_to(G->elem_from_json(c.at("g")), m);
    }
    return k;
}

}  // namespace l1
