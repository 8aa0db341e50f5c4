#include "l1/cocycles.hpp"

#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace l1 {

namespace {

const cd I(0.0, 1.0);

Elem product_of(const Group& G, const Tuple& t) {
    Elem p = G.identity();
    for (const auto& g : t) p = G.mul(p, g);
    return p;
}

std::string registry_list() { return "trace, delta:<element>, area_Z2, winding_Z"; }

Elem parse_element(const GroupPtr& G, const std::string& s) {
    std::vector<long> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            v.push_back(std::stol(tok));
        } catch (...) {
            throw ArgumentError("delta cocycle: cannot parse element '" + s + "'");
        }
    }
    if (G->kind() == GroupKind::Free) {
        std::vector<int> letters(v.begin(), v.end());
        return G->word(letters);
    }
    if (static_cast<int>(v.size()) != G->dual_dim()) throw ArgumentError("delta cocycle: element '" + s + "' has wrong rank");
    return G->from_coords(v);
}

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

using Node = std::function<cd(const Tuple&)>;

Node compile(const nlohmann::json& j, const GroupPtr& G, int degree) {
    if (j.contains("const")) {
        const double c = j.at("const").get<double>();
        return [c](const Tuple&) { return cd(c); };
    }
    if (j.contains("coord")) {
        const int slot = j.at("coord").at(0).get<int>(), axis = j.at("coord").at(1).get<int>();
        if (slot < 0 || slot > degree) throw ArgumentError("cocycle expr: slot out of range");
        if (!G->is_abelian() || axis < 0 || axis >= G->dual_dim()) throw ArgumentError("cocycle expr: bad coord axis");
        return [G, slot, axis](const Tuple& t) { return cd(static_cast<double>(G->coords(t[slot])[axis])); };
    }
    if (j.contains("length")) {
        const int slot = j.at("length").get<int>();
        if (slot < 0 || slot > degree) throw ArgumentError("cocycle expr: slot out of range");
        return [G, slot](const Tuple& t) { return cd(G->length(t[slot])); };
    }
    if (j.contains("is")) {
        const int slot = j.at("is").at(0).get<int>();
        if (slot < 0 || slot > degree) throw ArgumentError("cocycle expr: slot out of range");
        const Elem e = G->elem_from_json(j.at("is").at(1));
        return [slot, e](const Tuple& t) { return cd(t[slot] == e ? 1.0 : 0.0); };
    }
    if (j.contains("unit_product")) {
        return [G](const Tuple& t) { return cd(G->is_identity(product_of(*G, t)) ? 1.0 : 0.0); };
    }
    if (j.contains("op")) {
        const std::string op = j.at("op").get<std::string>();
        if (op == "add" || op == "mul") {
            std::vector<Node> args;
            for (const auto& a : j.at("args")) args.push_back(compile(a, G, degree));
            if (op == "add")
                return [args](const Tuple& t) {
                    cd s = 0;
                    for (const auto& f : args) s += f(t);
                    return s;
                };
            return [args](const Tuple& t) {
                cd s = 1;
                for (const auto& f : args) {
                    s *= f(t);
                    if (s == cd(0)) break;
                }
                return s;
            };
        }
        const Node a = compile(j.at("arg"), G, degree);
        if (op == "neg") return [a](const Tuple& t) { return -a(t); };
        if (op == "exp") return [a](const Tuple& t) { return std::exp(a(t)); };
        if (op == "abs") return [a](const Tuple& t) { return cd(std::abs(a(t))); };
        throw ArgumentError("cocycle expr: unknown op '" + op + "'");
    }
    throw ArgumentError("cocycle expr: unrecognized node " + j.dump());
}

void validate_node(const nlohmann::json& j, const std::string& path, std::vector<std::string>& out) {
    if (!j.is_object()) {
        out.push_back(path + ": node must be an object");
        return;
    }
    if (j.contains("const") || j.contains("coord") || j.contains("length") || j.contains("is") ||
        j.contains("unit_product"))
        return;
    if (!j.contains("op")) {
        out.push_back(path + ": unknown node");
        return;
    }
    const std::string op = j.at("op").is_string() ? j.at("op").get<std::string>() : "";
    if (op == "add" || op == "mul") {
        if (!j.contains("args") || !j.at("args").is_array()) {
            out.push_back(path + ": '" + op + "' needs args");
            return;
        }
        for (std::size_t i = 0; i < j.at("args").size(); ++i)
            validate_node(j.at("args")[i], path + ".args[" + std::to_string(i) + "]", out);
    } else if (op == "neg" || op == "exp" || op == "abs") {
        if (!j.contains("arg")) out.push_back(path + ": '" + op + "' needs arg");
        else validate_node(j.at("arg"), path + ".arg", out);
    } else {
        out.push_back(path + ": unknown op '" + op + "'");
    }
}

// Enumerate slot supports with running matrix and group products.
struct SlotData {
    std::vector<std::pair<Elem, Mat>> comps;
    std::map<Elem, std::size_t> where;
};

}  // namespace

std::vector<std::string> registry_names() { return {"trace", "delta:<element>", "area_Z2", "winding_Z"}; }

CyclicCocycle make_cocycle(const std::string& name, GroupPtr G) {
    CyclicCocycle c;
    c.G = G;
    c.name = name;
    const Elem e = G->identity();
    if (name == "trace") {
        c.degree = 0;
        c.eval = [e](const Tuple& t) { return cd(t[0] == e ? 1.0 : 0.0); };
        c.unitProductOnly = true;
        return c;
    }
    if (name.rfind("delta:", 0) == 0) {
        const Elem k = parse_element(G, name.substr(6));
        c.degree = 0;
        c.eval = [k](const Tuple& t) { return cd(t[0] == k ? 1.0 : 0.0); };
        c.delocalized = !G->is_identity(k);
        c.unitProductOnly = G->is_identity(k);
        return c;
    }
    if (name == "area_Z2") {
        if (G->kind() != GroupKind::FreeAbelian || G->rank() != 2) throw ArgumentError("area_Z2 needs the group ℤ²");
        c.degree = 2;
        c.eval = [G](const Tuple& t) {
            if (!G->is_identity(product_of(*G, t))) return cd(0);
            const auto a = G->coords(t[1]), b = G->coords(t[2]);
            return cd(static_cast<double>(a[0] * b[1] - a[1] * b[0]));
        };
        c.unitProductOnly = true;
        return c;
    }
    if (name == "winding_Z") {
        if (G->kind() != GroupKind::FreeAbelian || G->rank() != 1) throw ArgumentError("winding_Z needs the group ℤ");
        c.degree = 1;
        c.eval = [G](const Tuple& t) {
            if (!G->is_identity(G->mul(t[0], t[1]))) return cd(0);
            return cd(static_cast<double>(G->coords(t[0])[0]));
        };
        c.unitProductOnly = true;
        return c;
    }
    throw ArgumentError("unknown cocycle '" + name + "'; registry: " + registry_list());
}

CyclicCocycle cocycle_from_json(const nlohmann::json& j, GroupPtr G) {
    if (j.is_string()) return make_cocycle(j.get<std::string>(), G);
    if (!j.is_object() || !j.contains("degree") || !j.contains("expr"))
        throw ArgumentError("cocycle: expected a registry name or {degree, expr}");
    const auto errs = validate_cocycle_json(j);
    if (!errs.empty()) throw ArgumentError("cocycle: " + errs.front());
    CyclicCocycle c;
    c.G = G;
    c.degree = j.at("degree").get<int>();
    if (c.degree < 0) throw ArgumentError("cocycle: negative degree");
    c.eval = compile(j.at("expr"), G, c.degree);
    if (j.contains("growth")) {
        c.C = j.at("growth").value("C", 1.0);
        c.Kphi = j.at("growth").value("K", 0.0);
    }
    c.name = j.value("name", std::string("expr"));
    return c;
}

std::vector<std::string> validate_cocycle_json(const nlohmann::json& j) {
    std::vector<std::string> out;
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "trace" || s == "area_Z2" || s == "winding_Z" || (s.rfind("delta:", 0) == 0 && s.size() > 6)) return out;
        out.push_back("unknown cocycle '" + s + "'; registry: " + registry_list());
        return out;
    }
    if (!j.is_object()) {
        out.push_back("cocycle must be a registry name or an object");
        return out;
    }
    if (!j.contains("degree") || !j.at("degree").is_number_integer()) out.push_back("cocycle: missing integer 'degree'");
    if (!j.contains("expr")) out.push_back("cocycle: missing 'expr'");
    else validate_node(j.at("expr"), "expr", out);
    return out;
}

CocycleCheck check_cocycle(CyclicCocycle& phi, int radius, int samples, unsigned long long seed, long maxExhaustive,
                           double tol) {
    const Group& G = *phi.G;
    const auto ball = G.ball(radius);
    const int n = phi.degree;
    CocycleCheck r;
    const double big = std::pow(static_cast<double>(ball.size()), n + 2);
    r.exhaustive = big <= static_cast<double>(maxExhaustive);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, ball.size() - 1);

    auto visit = [&](int len, const std::function<void(const Tuple&)>& f) {
        Tuple t(len);
        if (r.exhaustive) {
            std::vector<std::size_t> idx(len, 0);
            while (true) {
                for (int i = 0; i < len; ++i) t[i] = ball[idx[i]];
                f(t);
                int k = len - 1;
                while (k >= 0 && ++idx[k] == ball.size()) idx[k--] = 0;
                if (k < 0) break;
            }
        } else {
            for (int s = 0; s < samples; ++s) {
                for (int i = 0; i < len; ++i) t[i] = ball[pick(rng)];
                f(t);
            }
        }
    };
    const double sgn = (n % 2 == 0) ? 1.0 : -1.0;
    visit(n + 1, [&](const Tuple& t) {
        ++r.tuples;
        Tuple rot(t.size());
        rot[0] = t[n];
        for (int i = 0; i < n; ++i) rot[i + 1] = t[i];
        const cd v = phi(t);
        r.cyclicViolation = std::max(r.cyclicViolation, std::abs(phi(rot) - sgn * v));
        if (G.is_identity(product_of(G, t))) r.delocalizedViolation = std::max(r.delocalizedViolation, std::abs(v));
    });
    visit(n + 2, [&](const Tuple& t) {
        ++r.tuples;
        cd s = 0;
        Tuple u(n + 1);
        for (int i = 0; i <= n; ++i) {
            int k = 0;
            for (int j = 0; j < n + 2; ++j) {
                if (j == i + 1) continue;
                u[k++] = (j == i) ? G.mul(t[i], t[i + 1]) : t[j];
            }
            s += ((i % 2 == 0) ? 1.0 : -1.0) * phi(u);
        }
        u[0] = G.mul(t[n + 1], t[0]);
        for (int j = 1; j <= n; ++j) u[j] = t[j];
        s += (((n + 1) % 2 == 0) ? 1.0 : -1.0) * phi(u);
        r.cocycleViolation = std::max(r.cocycleViolation, std::abs(s));
    });
    r.cyclic = r.cyclicViolation <= tol;
    r.closed = r.cocycleViolation <= tol;
    r.delocalized = r.delocalizedViolation == 0.0;
    phi.cyclicVerified = r.cyclic;
    phi.cocycleVerified = r.closed;
    phi.delocalized = r.delocalized;
    return r;
}

std::pair<CyclicCocycle, CyclicCocycle> delocalize(const CyclicCocycle& phi) {
    CyclicCocycle e = phi, d = phi;
    const GroupPtr G = phi.G;
    const auto f = phi.eval;
    e.eval = [G, f](const Tuple& t) { return G->is_identity(product_of(*G, t)) ? f(t) : cd(0); };
    d.eval = [G, f](const Tuple& t) { return G->is_identity(product_of(*G, t)) ? cd(0) : f(t); };
    e.name = phi.name + "_e";
    d.name = phi.name + "_d";
    e.delocalized = false;
    e.unitProductOnly = true;
    d.delocalized = true;
    d.unitProductOnly = false;
    return {e, d};
}

CocycleGrowth cocycle_growth(const CyclicCocycle& phi, int radius) {
    if (radius < 2) throw ArgumentError("cocycle_growth: radius must be at least 2");
    const Group& G = *phi.G;
    const auto ball = G.ball(radius);
    const int n = phi.degree;
    std::map<int, double> env;
    Tuple t(n + 1);
    std::vector<std::size_t> idx(n + 1, 0);
    const int free = phi.unitProductOnly ? n : n + 1;
    while (true) {
        Elem prod = G.identity();
        int L = 0;
        for (int i = 0; i < free; ++i) {
            t[i] = ball[idx[i]];
            prod = G.mul(prod, t[i]);
            L += G.length(t[i]);
        }
        bool ok = true;
        if (phi.unitProductOnly) {
            t[n] = G.inv(prod);
            const int l = G.length(t[n]);
            ok = l <= radius;
            L += l;
        }
        if (ok) {
            const double a = std::abs(phi(t));
            if (a > 0) {
                auto it = env.find(L);
                const double la = std::log(a);
                if (it == env.end() || la > it->second) env[L] = la;
            }
        }
        int k = free - 1;
        while (k >= 0 && ++idx[k] == ball.size()) idx[k--] = 0;
        if (k < 0 || free == 0) break;
    }
    CocycleGrowth g;
    std::vector<double> L, y;
    for (const auto& [l, v] : env)
        if (l >= 1) L.push_back(l), y.push_back(v);
    g.points = static_cast<int>(L.size());
    if (env.empty()) return g;
    double mx = -1e300;
    for (const auto& [l, v] : env) mx = std::max(mx, v);
    if (L.size() < 2) {
        g.C = std::exp(mx);
        return g;
    }
    const int cols = L.size() >= 4 ? 3 : 2;
    Eigen::MatrixXd A(L.size(), cols);
    Eigen::VectorXd b(L.size());
    for (std::size_t i = 0; i < L.size(); ++i) {
        A(i, 0) = 1.0;
        A(i, 1) = L[i];
        if (cols == 3) A(i, 2) = std::log(1.0 + L[i]);
        b(i) = y[i];
    }
    const Eigen::VectorXd x = A.colPivHouseholderQr().solve(b);
    g.K = std::max(0.0, x(1));
    g.C = std::exp(x(0));
    return g;
}

CyclicCocycle coboundary(const CyclicCocycle& psi) {
    CyclicCocycle c;
    c.G = psi.G;
    c.degree = psi.degree + 1;
    c.name = "b(" + psi.name + ")";
    const GroupPtr G = psi.G;
    const auto f = psi.eval;
    const int n = psi.degree;
    c.eval = [G, f, n](const Tuple& t) {
        cd s = 0;
        Tuple u(n + 1);
        for (int i = 0; i <= n; ++i) {
            int k = 0;
            for (int j = 0; j < n + 2; ++j) {
                if (j == i + 1) continue;
                u[k++] = (j == i) ? G->mul(t[i], t[i + 1]) : t[j];
            }
            s += ((i % 2 == 0) ? 1.0 : -1.0) * f(u);
        }
        u[0] = G->mul(t[n + 1], t[0]);
        for (int j = 1; j <= n; ++j) u[j] = t[j];
        s += (((n + 1) % 2 == 0) ? 1.0 : -1.0) * f(u);
        return s;
    };
    c.C = 2.0 * (n + 2) * psi.C;
    c.Kphi = psi.Kphi;
    return c;
}

CyclicCocycle random_cyclic_cochain(GroupPtr G, int degree, unsigned long long seed, double decay) {
    auto raw = [seed](const Tuple& t) {
        std::uint64_t h = splitmix(seed);
        for (const auto& g : t) {
            h = splitmix(h ^ 0x51ed27u);
            for (int v : g.w) h = splitmix(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(v)));
        }
        const double re = static_cast<double>(h >> 11) * 0x1.0p-53;
        const double im = static_cast<double>(splitmix(h) >> 11) * 0x1.0p-53;
        return cd(2 * re - 1, 2 * im - 1);
    };
    CyclicCocycle c;
    c.G = G;
    c.degree = degree;
    c.name = "random_cochain";
    const double sgn = (degree % 2 == 0) ? 1.0 : -1.0;
    c.eval = [raw, degree, sgn, decay, G](const Tuple& t) {
        // Σ_j ((-1)ⁿ)^j r(R^j t), R the cyclic rotation (γ₀..γₙ) ↦ (γₙ, γ₀, ..).
        cd s = 0;
        double w = 1;
        Tuple r = t;
        for (int j = 0; j <= degree; ++j) {
            s += w * raw(r);
            std::rotate(r.rbegin(), r.rbegin() + 1, r.rend());
            w *= sgn;
        }
        if (decay > 0) {
            int L = 0;
            for (const auto& g : t) L += G->length(g);
            s *= std::exp(-decay * L);
        }
        return s;
    };
    c.C = degree + 1.0;
    return c;
}

Pairing cocycle_trace(const CyclicCocycle& phi, const std::vector<Kernel>& slots, int radius) {
    const int n = phi.degree;
    if (static_cast<int>(slots.size()) != n + 1) throw ArgumentError("cocycle_trace: need degree + 1 slots");
    const Group& G = *phi.G;
    std::vector<SlotData> S(slots.size());
    for (std::size_t i = 0; i < slots.size(); ++i)
        for (const auto& [g, m] : slots[i].comps)
            if (G.length(g) <= radius) {
                S[i].where[g] = S[i].comps.size();
                S[i].comps.emplace_back(g, m);
            }
    Pairing out;
    out.radius = radius;
    // A ball that already exhausts a finite group has no tail.
    const bool complete = G.is_finite() && G.ball(radius + 1).size() == G.ball(radius).size();
    Tuple t(n + 1);
    std::vector<int> len(n + 1);
    const int free = phi.unitProductOnly ? n : n + 1;
    std::function<void(int, const Elem&, const Mat&)> rec = [&](int i, const Elem& prod, const Mat& M) {
        if (i == free) {
            Mat full = M;
            if (phi.unitProductOnly) {
                const Elem last = G.inv(prod);
                auto it = S[n].where.find(last);
                if (it == S[n].where.end()) return;
                t[n] = last;
                len[n] = G.length(last);
                full = n == 0 ? S[n].comps[it->second].second : Mat(M * S[n].comps[it->second].second);
            }
            const cd v = phi(t);
            if (v == cd(0)) return;
            const cd tr = full.trace();
            out.value += v * tr;
            ++out.terms;
            bool shell = false;
            for (int k = 0; k <= n && !complete; ++k) shell = shell || len[k] == radius;
            if (shell) out.tailMass += std::abs(v) * std::abs(tr);
            return;
        }
        for (const auto& [g, m] : S[i].comps) {
            t[i] = g;
            len[i] = G.length(g);
            rec(i + 1, G.mul(prod, g), i == 0 ? m : Mat(M * m));
        }
    };
    rec(0, G.identity(), Mat());
    return out;
}

namespace {
double factorial(int k) {
    double f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}
}  // namespace

Pairing pair_even(const CyclicCocycle& phi, const IndexIdempotent& p, int radius, double tol) {
    if (phi.degree % 2 != 0) throw ArgumentError("pair_even: cocycle degree must be even");
    const int m = phi.degree / 2;
    Pairing r = cocycle_trace(phi, std::vector<Kernel>(phi.degree + 1, p.p), radius);
    if (!p.e11.empty()) {
        const Pairing e = cocycle_trace(phi, std::vector<Kernel>(phi.degree + 1, p.e11), radius);
        r.value -= e.value;
        r.terms += e.terms;
    }
    r.value *= factorial(2 * m) / factorial(m);
    r.converged = r.tailMass <= tol;
    if (!r.converged) {
        std::ostringstream os;
        os << "pair_even: tail mass " << r.tailMass << " on shell " << radius << " exceeds " << tol;
        throw ConvergenceError(os.str(), r.tailMass);
    }
    return r;
}

Pairing pair_even(const CyclicCocycle& phi, const HalfIndex& h) {
    if (phi.degree != 0) throw ArgumentError("pair_even: half-space pairings are implemented in degree 0");
    const Group& G = *phi.G;
    const int rank = G.dual_dim();
    const std::size_t N = h.traces.size();
    const int per = rank == 1 ? static_cast<int>(N) : static_cast<int>(std::lround(std::pow(N, 1.0 / rank)));
    const auto isZ = G.dual_is_z();
    Pairing r;
    // Components γ of the trace function on the same grid.
    std::vector<long> c(rank, 0);
    std::function<void(int)> rec = [&](int j) {
        if (j == rank) {
            cd comp = 0;
            for (std::size_t i = 0; i < N; ++i) {
                double ph = 0;
                for (int a = 0; a < rank; ++a) ph += h.thetas[i][a] * static_cast<double>(c[a]);
                comp += h.traces[i] * std::exp(-I * ph);
            }
            comp /= static_cast<double>(N);
            const cd v = phi({G.from_coords(c)});
            if (v != cd(0)) {
                r.value += v * comp;
                ++r.terms;
            }
            return;
        }
        const long lo = isZ[j] ? -per / 2 : 0, hi = isZ[j] ? per / 2 - 1 : per - 1;
        for (long k = lo; k <= hi; ++k) {
            c[j] = k;
            rec(j + 1);
        }
    };
    rec(0);
    r.converged = true;
    return r;
}

Pairing pair_odd(const CyclicCocycle& phi, const IndexInvertible& u, int radius, double tol) {
    if (phi.degree % 2 != 1) throw ArgumentError("pair_odd: cocycle degree must be odd");
    const int m = (phi.degree - 1) / 2;
    const Kernel one = Kernel::identity(u.w.G, u.w.d).with_meta(u.w);
    const DropPolicy exact{0.0, 0.0};
    const Kernel a = add(u.winv, one, 1.0, -1.0, exact), b = add(u.w, one, 1.0, -1.0, exact);
    std::vector<Kernel> slots;
    for (int i = 0; i <= phi.degree; ++i) slots.push_back(i % 2 == 0 ? a : b);
    Pairing r = cocycle_trace(phi, slots, radius);
    r.value /= factorial(m);
    r.converged = r.tailMass <= tol;
    if (!r.converged) {
        std::ostringstream os;
        os << "pair_odd: tail mass " << r.tailMass << " on shell " << radius << " exceeds " << tol;
        throw ConvergenceError(os.str(), r.tailMass);
    }
    return r;
}

double winding_number(const Kernel& u, int gridPoints) {
    if (u.G->kind() != GroupKind::FreeAbelian || u.G->rank() != 1) throw ArgumentError("winding_number: needs ℤ");
    constexpr double twoPi = 6.283185307179586;
    double total = 0;
    cd prev = symbol(u, {0.0}).determinant();
    for (int j = 1; j <= gridPoints; ++j) {
        const cd cur = symbol(u, {twoPi * j / gridPoints}).determinant();
        total += std::arg(cur / prev);
        prev = cur;
    }
    return total / twoPi;
}

}  // namespace l1
