#include "l1/groups.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <Eigen/Dense>

namespace l1 {

GroupPtr Group::free_abelian(int rank) {
    if (rank < 1) throw ArgumentError("free_abelian: rank must be >= 1");
    return std::make_shared<Group>(GroupKind::FreeAbelian, rank, nullptr, nullptr);
}
GroupPtr Group::free(int rank) {
    if (rank < 1) throw ArgumentError("free: rank must be >= 1");
    return std::make_shared<Group>(GroupKind::Free, rank, nullptr, nullptr);
}
GroupPtr Group::cyclic(int order) {
    if (order < 1) throw ArgumentError("cyclic: order must be >= 1");
    return std::make_shared<Group>(GroupKind::Cyclic, order, nullptr, nullptr);
}
GroupPtr Group::product(GroupPtr left, GroupPtr right) {
    if (!left || !right) throw ArgumentError("product: null factor");
    return std::make_shared<Group>(GroupKind::Product, 0, std::move(left), std::move(right));
}

GroupPtr Group::from_json(const nlohmann::json& j) {
    const std::string k = j.at("kind").get<std::string>();
    if (k == "free_abelian") return free_abelian(j.at("rank").get<int>());
    if (k == "free") return free(j.at("rank").get<int>());
    if (k == "cyclic") return cyclic(j.at("order").get<int>());
    if (k == "product") return product(from_json(j.at("left")), from_json(j.at("right")));
    throw ArgumentError("unknown group kind '" + k + "'");
}

nlohmann::json Group::to_json() const {
    switch (kind_) {
        case GroupKind::FreeAbelian: return {{"kind", "free_abelian"}, {"rank", n_}};
        case GroupKind::Free: return {{"kind", "free"}, {"rank", n_}};
        case GroupKind::Cyclic: return {{"kind", "cyclic"}, {"order", n_}};
        case GroupKind::Product: return {{"kind", "product"}, {"left", left_->to_json()}, {"right", right_->to_json()}};
    }
    return {};
}

bool Group::same(const Group& o) const {
    if (this == &o) return true;
    if (kind_ != o.kind_ || n_ != o.n_) return false;
    if (kind_ == GroupKind::Product) return left_->same(*o.left_) && right_->same(*o.right_);
    return true;
}

Elem Group::identity() const {
    switch (kind_) {
        case GroupKind::FreeAbelian: return Elem{std::vector<int>(n_, 0)};
        case GroupKind::Free: return Elem{};
        case GroupKind::Cyclic: return Elem{{0}};
        case GroupKind::Product: return pair(left_->identity(), right_->identity());
    }
    return {};
}

Elem Group::pair(const Elem& a, const Elem& b) const {
    Elem r;
    r.w.reserve(1 + a.w.size() + b.w.size());
    r.w.push_back(static_cast<int>(a.w.size()));
    r.w.insert(r.w.end(), a.w.begin(), a.w.end());
    r.w.insert(r.w.end(), b.w.begin(), b.w.end());
    return r;
}

std::pair<Elem, Elem> Group::split(const Elem& a) const {
    if (kind_ != GroupKind::Product || a.w.empty()) throw StructuralError("split: not a product element");
    const int n = a.w[0];
    Elem l{std::vector<int>(a.w.begin() + 1, a.w.begin() + 1 + n)};
    Elem r{std::vector<int>(a.w.begin() + 1 + n, a.w.end())};
    return {l, r};
}

static void free_reduce_push(std::vector<int>& w, int letter) {
    if (!w.empty() && w.back() == -letter)
        w.pop_back();
    else
        w.push_back(letter);
}

Elem Group::mul(const Elem& a, const Elem& b) const {
    switch (kind_) {
        case GroupKind::FreeAbelian: {
            if (a.w.size() != static_cast<std::size_t>(n_) || b.w.size() != static_cast<std::size_t>(n_))
                throw StructuralError("mul: element does not belong to Z^n");
            Elem r{a.w};
            for (int i = 0; i < n_; ++i) r.w[i] += b.w[i];
            return r;
        }
        case GroupKind::Free: {
            Elem r{a.w};
            for (int l : b.w) {
                if (l == 0 || std::abs(l) > n_) throw StructuralError("mul: letter outside free group");
                free_reduce_push(r.w, l);
            }
            return r;
        }
        case GroupKind::Cyclic: {
            if (a.w.size() != 1 || b.w.size() != 1) throw StructuralError("mul: element does not belong to Z/q");
            return Elem{{(a.w[0] + b.w[0]) % n_}};
        }
        case GroupKind::Product: {
            auto [al, ar] = split(a);
            auto [bl, br] = split(b);
            return pair(left_->mul(al, bl), right_->mul(ar, br));
        }
    }
    return {};
}

Elem Group::inv(const Elem& a) const {
    switch (kind_) {
        case GroupKind::FreeAbelian: {
            Elem r{a.w};
            for (auto& x : r.w) x = -x;
            return r;
        }
        case GroupKind::Free: {
            Elem r;
            r.w.reserve(a.w.size());
            for (auto it = a.w.rbegin(); it != a.w.rend(); ++it) r.w.push_back(-*it);
            return r;
        }
        case GroupKind::Cyclic: return Elem{{(n_ - a.w.at(0)) % n_}};
        case GroupKind::Product: {
            auto [l, r] = split(a);
            return pair(left_->inv(l), right_->inv(r));
        }
    }
    return {};
}

int Group::length(const Elem& a) const {
    switch (kind_) {
        case GroupKind::FreeAbelian: {
            int s = 0;
            for (int x : a.w) s += std::abs(x);
            return s;
        }
        case GroupKind::Free: return static_cast<int>(a.w.size());
        case GroupKind::Cyclic: {
            const int r = a.w.at(0);
            return std::min(r, n_ - r);
        }
        case GroupKind::Product: {
            auto [l, r] = split(a);
            return left_->length(l) + right_->length(r);
        }
    }
    return 0;
}

bool Group::is_abelian() const {
    switch (kind_) {
        case GroupKind::FreeAbelian:
        case GroupKind::Cyclic: return true;
        case GroupKind::Free: return n_ == 1;
        case GroupKind::Product: return left_->is_abelian() && right_->is_abelian();
    }
    return false;
}

bool Group::is_finite() const {
    switch (kind_) {
        case GroupKind::Cyclic: return true;
        case GroupKind::Product: return left_->is_finite() && right_->is_finite();
        default: return false;
    }
}

std::vector<Elem> Group::generators() const {
    std::vector<Elem> g;
    switch (kind_) {
        case GroupKind::FreeAbelian:
            for (int i = 0; i < n_; ++i)
                for (int s : {1, -1}) {
                    Elem e = identity();
                    e.w[i] = s;
                    g.push_back(e);
                }
            break;
        case GroupKind::Free:
            for (int i = 1; i <= n_; ++i) {
                g.push_back(Elem{{i}});
                g.push_back(Elem{{-i}});
            }
            break;
        case GroupKind::Cyclic:
            if (n_ > 1) {
                g.push_back(Elem{{1 % n_}});
                if (n_ > 2) g.push_back(Elem{{n_ - 1}});
            }
            break;
        case GroupKind::Product:
            for (const auto& s : left_->generators()) g.push_back(pair(s, right_->identity()));
            for (const auto& t : right_->generators()) g.push_back(pair(left_->identity(), t));
            break;
    }
    return g;
}

bool Group::canonical_less(const Elem& a, const Elem& b) const {
    const int la = length(a), lb = length(b);
    if (la != lb) return la < lb;
    return a < b;
}

std::vector<Elem> Group::ball(int n, std::size_t cap) const {
    if (n < 0) throw ArgumentError("ball: negative radius");
    std::set<Elem> seen{identity()};
    std::vector<Elem> out{identity()};
    std::vector<Elem> frontier{identity()};
    const auto gens = generators();
    for (int r = 1; r <= n && !frontier.empty(); ++r) {
        std::vector<Elem> next;
        for (const auto& x : frontier)
            for (const auto& s : gens) {
                Elem y = mul(x, s);
                if (seen.insert(y).second) {
                    next.push_back(std::move(y));
                    if (seen.size() > cap)
                        throw ResourceError("ball: enumeration cap " + std::to_string(cap) + " exceeded at radius " +
                                            std::to_string(r));
                }
            }
        std::sort(next.begin(), next.end());
        out.insert(out.end(), next.begin(), next.end());
        frontier = std::move(next);
    }
    return out;
}

std::vector<std::size_t> Group::ball_counts(int n, std::size_t cap) const {
    auto b = ball(n, cap);
    std::vector<std::size_t> counts(n + 1, 0);
    for (const auto& e : b) counts[length(e)]++;
    std::partial_sum(counts.begin(), counts.end(), counts.begin());
    return counts;
}

int Group::dual_dim() const {
    switch (kind_) {
        case GroupKind::FreeAbelian: return n_;
        case GroupKind::Cyclic: return 1;
        case GroupKind::Free:
            if (n_ == 1) return 1;
            throw StructuralError("dual grid: free group of rank > 1 is not abelian");
        case GroupKind::Product: return left_->dual_dim() + right_->dual_dim();
    }
    return 0;
}

std::vector<bool> Group::dual_is_z() const {
    switch (kind_) {
        case GroupKind::FreeAbelian: return std::vector<bool>(n_, true);
        case GroupKind::Cyclic: return {false};
        case GroupKind::Free:
            if (n_ == 1) return {true};
            throw StructuralError("dual grid: free group of rank > 1 is not abelian");
        case GroupKind::Product: {
            auto a = left_->dual_is_z();
            auto b = right_->dual_is_z();
            a.insert(a.end(), b.begin(), b.end());
            return a;
        }
    }
    return {};
}

std::vector<int> Group::dual_periods(int zPoints) const {
    switch (kind_) {
        case GroupKind::FreeAbelian: return std::vector<int>(n_, zPoints);
        case GroupKind::Cyclic: return {n_};
        case GroupKind::Free:
            if (n_ == 1) return {zPoints};
            throw StructuralError("dual grid: free group of rank > 1 is not abelian");
        case GroupKind::Product: {
            auto a = left_->dual_periods(zPoints);
            auto b = right_->dual_periods(zPoints);
            a.insert(a.end(), b.begin(), b.end());
            return a;
        }
    }
    return {};
}

std::vector<long> Group::coords(const Elem& a) const {
    switch (kind_) {
        case GroupKind::FreeAbelian: return std::vector<long>(a.w.begin(), a.w.end());
        case GroupKind::Cyclic: return {a.w.at(0)};
        case GroupKind::Free: {
            if (n_ != 1) throw StructuralError("coords: non-abelian free group");
            long s = 0;
            for (int l : a.w) s += (l > 0 ? 1 : -1);
            return {s};
        }
        case GroupKind::Product: {
            auto [l, r] = split(a);
            auto x = left_->coords(l);
            auto y = right_->coords(r);
            x.insert(x.end(), y.begin(), y.end());
            return x;
        }
    }
    return {};
}

Elem Group::from_coords(const std::vector<long>& c) const {
    switch (kind_) {
        case GroupKind::FreeAbelian: return Elem{std::vector<int>(c.begin(), c.end())};
        case GroupKind::Cyclic: return Elem{{static_cast<int>(((c.at(0) % n_) + n_) % n_)}};
        case GroupKind::Free: {
            if (n_ != 1) throw StructuralError("from_coords: non-abelian free group");
            const long k = c.at(0);
            return Elem{std::vector<int>(static_cast<std::size_t>(std::labs(k)), k > 0 ? 1 : -1)};
        }
        case GroupKind::Product: {
            const int dl = left_->dual_dim();
            std::vector<long> a(c.begin(), c.begin() + dl), b(c.begin() + dl, c.end());
            return pair(left_->from_coords(a), right_->from_coords(b));
        }
    }
    return {};
}

Elem Group::z(long k) const { return from_coords({k}); }

Elem Group::zn(const std::vector<long>& v) const { return from_coords(v); }

Elem Group::word(const std::vector<int>& letters) const {
    if (kind_ != GroupKind::Free) throw StructuralError("word: not a free group");
    Elem r;
    for (int l : letters) {
        if (l == 0 || std::abs(l) > n_) throw StructuralError("word: letter outside generating set");
        free_reduce_push(r.w, l);
    }
    return r;
}

std::string Group::to_string(const Elem& a) const {
    std::ostringstream os;
    switch (kind_) {
        case GroupKind::FreeAbelian:
        case GroupKind::Cyclic: {
            os << "(";
            for (std::size_t i = 0; i < a.w.size(); ++i) os << (i ? "," : "") << a.w[i];
            os << ")";
            break;
        }
        case GroupKind::Free: {
            if (a.w.empty()) return "e";
            for (int l : a.w) {
                os << static_cast<char>('a' + std::abs(l) - 1);
                if (l < 0) os << "^-1";
            }
            break;
        }
        case GroupKind::Product: {
            auto [l, r] = split(a);
            os << "[" << left_->to_string(l) << "," << right_->to_string(r) << "]";
            break;
        }
    }
    return os.str();
}

nlohmann::json Group::elem_to_json(const Elem& a) const {
    if (kind_ == GroupKind::Product) {
        auto [l, r] = split(a);
        return nlohmann::json::array({left_->elem_to_json(l), right_->elem_to_json(r)});
    }
    return a.w;
}

Elem Group::elem_from_json(const nlohmann::json& j) const {
    if (kind_ == GroupKind::Product) return pair(left_->elem_from_json(j.at(0)), right_->elem_from_json(j.at(1)));
    Elem e{j.get<std::vector<int>>()};
    if (kind_ == GroupKind::Free) return word(e.w);
    if (kind_ == GroupKind::Cyclic) return from_coords({e.w.at(0)});
    if (e.w.size() != static_cast<std::size_t>(n_)) throw StructuralError("element arity mismatch");
    return e;
}

double exact_growth_rate(const Group& g) {
    switch (g.kind()) {
        case GroupKind::FreeAbelian:
        case GroupKind::Cyclic: return 0.0;
        case GroupKind::Free: return g.rank() == 1 ? 0.0 : std::log(2.0 * g.rank() - 1.0);
        case GroupKind::Product: return std::max(exact_growth_rate(*g.left()), exact_growth_rate(*g.right()));
    }
    return 0.0;
}

long long closed_form_ball_count(const Group& g, int n) {
    switch (g.kind()) {
        case GroupKind::FreeAbelian:
            if (g.rank() == 1) return 2LL * n + 1;
            if (g.rank() == 2) return 2LL * n * n + 2LL * n + 1;
            return -1;
        case GroupKind::Free: {
            const long long k = g.rank();
            if (k == 1) return 2LL * n + 1;
            long long p = 1;
            for (int i = 0; i < n; ++i) p *= (2 * k - 1);
            return 1 + 2 * k * (p - 1) / (2 * k - 2);
        }
        case GroupKind::Cyclic: return std::min<long long>(g.rank(), 2LL * n + 1);
        case GroupKind::Product: return -1;
    }
    return -1;
}

GrowthEstimate growth_rate(const Group& g, int maxRadius, std::size_t cap) {
    if (maxRadius < 3) throw ArgumentError("growth_rate: maxRadius must be >= 3");
    GrowthEstimate est;
    est.max_radius = maxRadius;
    est.counts = g.ball_counts(maxRadius, cap);
    const int lo = (maxRadius + 1) / 2;
    const int m = maxRadius - lo + 1;
    Eigen::MatrixXd A(m, 3);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) {
        const int n = lo + i;
        A(i, 0) = 1.0;
        A(i, 1) = n;
        A(i, 2) = std::log(1.0 + n);
        b(i) = std::log(static_cast<double>(est.counts[n]));
    }
    Eigen::VectorXd x = A.colPivHouseholderQr().solve(b);
    est.rate = std::max(0.0, x(1));
    est.constant = std::exp(x(0));
    est.residual = std::sqrt((A * x - b).squaredNorm() / m);
    return est;
}

}  // namespace l1
