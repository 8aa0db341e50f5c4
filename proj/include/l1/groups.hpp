#pragma once
// Marked finitely generated groups: normal forms, word length, balls, growth.

#include <compare>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace l1 {

struct StructuralError : std::logic_error {
    using std::logic_error::logic_error;
};
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Normal form. free_abelian: coordinates; free: reduced word with letters
// +-1..+-k; cyclic: residue; product: [size of left part] ++ left ++ right.
struct Elem {
    std::vector<int> w;
    auto operator<=>(const Elem&) const = default;
};

class Group;
using GroupPtr = std::shared_ptr<const Group>;

enum class GroupKind { FreeAbelian, Free, Cyclic, Product };

class Group : public std::enable_shared_from_this<Group> {
public:
    static GroupPtr free_abelian(int rank);
    static GroupPtr free(int rank);
    static GroupPtr cyclic(int order);
    static GroupPtr product(GroupPtr left, GroupPtr right);
    static GroupPtr from_json(const nlohmann::json& j);

    GroupKind kind() const { return kind_; }
    int rank() const { return n_; }  // rank, or order for cyclic
    const GroupPtr& left() const { return left_; }
    const GroupPtr& right() const { return right_; }

    Elem identity() const;
    Elem mul(const Elem& a, const Elem& b) const;
    Elem inv(const Elem& a) const;
    int length(const Elem& a) const;
    bool is_identity(const Elem& a) const { return a == identity(); }
    bool is_abelian() const;
    bool is_finite() const;
    std::vector<Elem> generators() const;  // symmetric

    // ℓ-ball in canonical (length, then lexicographic) order.
    std::vector<Elem> ball(int n, std::size_t cap = 5'000'000) const;
    std::vector<std::size_t> ball_counts(int n, std::size_t cap = 5'000'000) const;

    // Dual-grid support for abelian groups. Each coordinate is either a copy
    // of ℤ (period = grid size chosen by the caller) or ℤ/q (period q).
    int dual_dim() const;
    std::vector<int> dual_periods(int zPoints) const;
    std::vector<bool> dual_is_z() const;
    std::vector<long> coords(const Elem& a) const;
    Elem from_coords(const std::vector<long>& c) const;

    // Elementary constructors.
    Elem z(long k) const;  // rank-1 free abelian or cyclic
    Elem zn(const std::vector<long>& v) const;
    Elem word(const std::vector<int>& letters) const;  // free group, reduced on entry
    Elem pair(const Elem& a, const Elem& b) const;
    std::pair<Elem, Elem> split(const Elem& a) const;

    std::string to_string(const Elem& a) const;
    nlohmann::json to_json() const;
    nlohmann::json elem_to_json(const Elem& a) const;
    Elem elem_from_json(const nlohmann::json& j) const;
    bool same(const Group& o) const;

    // Canonical order: length first, then normal form.
    bool canonical_less(const Elem& a, const Elem& b) const;

    Group(GroupKind k, int n, GroupPtr l, GroupPtr r) : kind_(k), n_(n), left_(std::move(l)), right_(std::move(r)) {}

private:
    GroupKind kind_;
    int n_ = 0;
    GroupPtr left_, right_;
};

// Exact exponential growth rate of the marked groups supported here.
double exact_growth_rate(const Group& g);

struct GrowthEstimate {
    double rate = 0;       // K̂_Γ
    double constant = 0;   // Ĉ
    double residual = 0;   // rms of the fit in log space
    int max_radius = 0;
    std::vector<std::size_t> counts;
};

// Least-squares fit of log|ball(n)| on {1, n, log(1+n)} over the upper half of
// radii; K̂ is the (clamped) coefficient of n.
GrowthEstimate growth_rate(const Group& g, int maxRadius, std::size_t cap = 5'000'000);

// Closed-form ball counts where known (ℤⁿ for n ≤ 2, F_k, ℤ/q); -1 otherwise.
long long closed_form_ball_count(const Group& g, int n);

}  // namespace l1
