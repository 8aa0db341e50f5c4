// l1lab: configuration-driven experiments over the l1index library.
//   l1lab run <config.json>       exit 0 all checks pass, 1 a check failed or was refused
//   l1lab validate <config.json>  schema diagnostics only
//   l1lab registry                built-in groups, models, functions, cocycles
// Usage and configuration errors exit with 2.

#include <openssl/sha.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "l1/rho_eta.hpp"

using namespace l1;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const std::vector<std::string> kKinds = {"growth", "norms",        "vanishing",   "boundary-index",
                                         "eta",    "aps",          "product-check", "cocycle-check"};

std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string sha256_hex(const std::string& s) {
    unsigned char h[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(s.data()), s.size(), h);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned char c : h) out += hex[c >> 4], out += hex[c & 15];
    return out;
}

// CSV with a fixed header; numbers at 17 significant digits.
class Csv {
public:
    explicit Csv(std::vector<std::string> cols) : cols_(std::move(cols)) {}
    void row(const std::vector<double>& v) {
        if (v.size() != cols_.size()) throw std::logic_error("csv: column count mismatch");
        rows_.push_back(v);
    }
    void write(const fs::path& p) const {
        std::ofstream f(p);
        if (!f) throw std::runtime_error("cannot write " + p.string());
        for (std::size_t i = 0; i < cols_.size(); ++i) f << (i ? "," : "") << cols_[i];
        f << "\n";
        for (const auto& r : rows_) {
            for (std::size_t i = 0; i < r.size(); ++i) f << (i ? "," : "") << fmt17(r[i]);
            f << "\n";
        }
    }

private:
    std::vector<std::string> cols_;
    std::vector<std::vector<double>> rows_;
};

struct Report {
    json checks = json::array();
    json results = json::object();
    std::vector<std::pair<std::string, Csv>> csvs;
    std::string refusal;

    void check(const std::string& name, double measured, double threshold, bool pass) {
        checks.push_back({{"name", name}, {"measured", measured}, {"threshold", threshold}, {"pass", pass}});
    }
    void le(const std::string& name, double measured, double threshold) {
        check(name, measured, threshold, measured <= threshold);
    }
    bool passed() const {
        if (!refusal.empty()) return false;
        for (const auto& c : checks)
            if (!c["pass"].get<bool>()) return false;
        return true;
    }
};

// ---------------------------------------------------------------- config access

double num(const json& j, const char* k, double d) { return j.contains(k) ? j.at(k).get<double>() : d; }
int inum(const json& j, const char* k, int d) { return j.contains(k) ? j.at(k).get<int>() : d; }

GroupPtr group_of(const json& cfg) {
    const json& m = cfg.contains("model") ? cfg.at("model") : cfg;
    if (!m.contains("group")) throw ConfigError("missing field 'model.group'");
    return Group::from_json(m.at("group"));
}

// model: {"group": ..., "type": "dirac" (default) | "scalar", "m": .., "c": .., "h": ..}
Kernel model_of(const json& cfg) {
    const json& m = cfg.at("model");
    const GroupPtr G = group_of(cfg);
    const std::string type = m.value("type", std::string("dirac"));
    if (type == "dirac") return gapped_dirac(G, num(m, "m", 1.5), num(m, "h", 1.0));
    if (type == "scalar") {
        // c δ_e + δ_g + δ_g⁻¹ over the generators g: symbol c + 2Σcos θ_j.
        Kernel D(G, 1);
        D.add_to(G->identity(), Mat::Constant(1, 1, num(m, "c", 1.0)));
        for (const auto& g : G->generators()) D.add_to(g, Mat::Constant(1, 1, 1.0));
        D.tag = "scalar";
        return D;
    }
    throw ConfigError("unknown model type '" + type + "' (dirac, scalar)");
}

QuadOptions quad_of(const json& cfg) {
    QuadOptions q;
    if (cfg.contains("quad")) {
        const json& j = cfg.at("quad");
        q.tMax = num(j, "s_max", q.tMax);
        q.nodes = inum(j, "nodes", q.nodes);
        q.refine = j.value("refine", q.refine);
        q.radius = inum(j, "radius", q.radius);
        q.scale = num(j, "scale", q.scale);
    }
    return q;
}

HalfOptions half_of(const json& p) {
    HalfOptions o;
    o.width = num(p, "width", o.width);
    o.chebTol = num(p, "cheb_tol", o.chebTol);
    o.thetaPoints = inum(p, "theta_points", o.thetaPoints);
    o.indexThetaPoints = inum(p, "index_theta_points", o.indexThetaPoints);
    return o;
}

Scheme scheme_of(const std::string& s) {
    if (s == "fiberwise") return Scheme::Fiberwise;
    if (s == "chebyshev") return Scheme::Chebyshev;
    if (s == "fourier") return Scheme::FourierQuadrature;
    throw ConfigError("unknown scheme '" + s + "' (fiberwise, chebyshev, fourier)");
}

// ---------------------------------------------------------------- experiments

void run_growth(const json& cfg, Report& R) {
    const GroupPtr G = group_of(cfg);
    const json p = cfg.value("params", json::object());
    const int radius = inum(p, "radius", 8);
    const GrowthEstimate g = growth_rate(*G, radius);
    Csv csv({"radius", "count", "closed_form"});
    bool match = true;
    for (std::size_t n = 0; n < g.counts.size(); ++n) {
        const long long cf = closed_form_ball_count(*G, static_cast<int>(n));
        if (cf >= 0 && cf != static_cast<long long>(g.counts[n])) match = false;
        csv.row({static_cast<double>(n), static_cast<double>(g.counts[n]), static_cast<double>(cf)});
    }
    R.csvs.emplace_back("ball_counts.csv", csv);
    const double exact = exact_growth_rate(*G);
    R.results["rate"] = g.rate;
    R.results["constant"] = g.constant;
    R.results["exact_rate"] = exact;
    R.results["fit_residual"] = g.residual;
    R.check("closed_form_counts", match ? 0.0 : 1.0, 0.0, match);
    R.le("rate_error", std::abs(g.rate - exact), num(p, "tol", 0.05));
}

void run_norms(const json& cfg, Report& R) {
    const Kernel D = model_of(cfg);
    const json p = cfg.value("params", json::object());
    if (!cfg.contains("function")) throw ConfigError("missing field 'function'");
    const SpectralFunction f = SpectralFunction::from_json(cfg.at("function"));
    const double K = num(cfg, "K", 0.0);
    std::vector<std::string> schemes = p.value("schemes", std::vector<std::string>{"fiberwise", "chebyshev"});
    if (!D.G->is_abelian()) schemes = {"chebyshev"};
    const double tol = num(p, "tol", 1e-8);
    std::vector<Kernel> out;
    for (const auto& s : schemes) {
        CalcOptions o;
        Kernel k = apply_function(D, f, scheme_of(s), num(p, "calc_tol", 1e-13), o);
        R.results["norm_" + s] = weighted_norm(k, K);
        out.push_back(std::move(k));
    }
    for (std::size_t i = 1; i < out.size(); ++i)
        R.le("agreement_" + schemes[0] + "_" + schemes[i], l1_distance(out[0], out[i]), tol);
    Csv csv({"length", "max_op_norm"});
    std::map<int, double> byLen;
    for (const auto& [x, m] : out[0].comps) {
        double& v = byLen[D.G->length(x)];
        v = std::max(v, mat_op_norm(m));
    }
    for (const auto& [l, v] : byLen) csv.row({static_cast<double>(l), v});
    R.csvs.emplace_back("components.csv", csv);
    if (p.contains("tail")) {
        const json& t = p.at("tail");
        const TailReport tr = tail_bound_check(D, f, num(t, "mu", 2.0), num(t, "tau", 1.0), num(t, "C0", 0.0),
                                               num(t, "diamF", 0.0));
        R.results["tail_checked"] = tr.checked;
        R.results["tail_threshold"] = tr.threshold;
        R.check("tail_bound_violations", tr.violations, 0, tr.violations == 0);
    }
}

void run_vanishing(const json& cfg, Report& R) {
    const Kernel D = model_of(cfg);
    const json p = cfg.value("params", json::object());
    const double K = num(cfg, "K", 0.5);
    const std::vector<double> ts = p.value("t", std::vector<double>{1, 2, 3, 4, 5, 6});
    const VanishingReport v = vanishing_certificate(D, K, ts, num(p, "tau", 1.0));
    R.results["gap"] = v.gap.sigma;
    R.results["threshold"] = v.threshold.threshold;
    R.check("gap_condition", v.gap.sigma, v.threshold.threshold, v.gapOk);
    if (!v.gapOk) {
        R.refusal = v.reason;
        return;
    }
    Csv csv({"t", "distance", "log_distance"});
    for (std::size_t i = 0; i < v.t.size(); ++i) csv.row({v.t[i], v.distance[i], std::log(v.distance[i])});
    R.csvs.emplace_back("decay.csv", csv);
    R.results["fit_slope"] = v.fit.slope;
    R.results["fit_r2"] = v.fit.r2;
    R.check("decay_slope", v.fit.slope, 0.0, v.decayOk);
    R.le("final_distance", v.distance.back(), num(p, "final_tol", 1e-6));
    R.le("sign_square_defect", v.signSquareDefect, 1e-10);
}

void run_boundary_index(const json& cfg, Report& R) {
    const Kernel Db = model_of(cfg);
    const json p = cfg.value("params", json::object());
    const double a = num(p, "a", 1.5), t = num(p, "t", 1.0), K = num(cfg, "K", 0.3);
    const int interior = inum(p, "interior", 2);
    HalfOptions o = half_of(p);
    o.norms = p.value("norms", false);
    const std::vector<int> ks = p.value("windings", std::vector<int>{-2, -1, 0, 1, 2});
    Csv csv({"winding", "trace", "distance", "oracle", "sites", "defect_op"});
    for (int k : ks) {
        HalfBC bc;
        bc.winding = k;
        bc.interiorStrength = num(p, "interior_strength", 0.3);
        bc.seed = cfg.at("seed").get<unsigned long long>();
        const HalfKernel H = half_model_for(Db, interior, bc, a, t, 0, o);
        const BoundaryQuasi q = boundary_quasi_idempotent(H, a, t, K, o);
        const HalfIndex h = riesz_idempotent(q);
        const TraceIndex ti = pairing_trace_index(h);
        const ToeplitzOracle orc = toeplitz_index(H, {num(p, "oracle_theta", 0.3)});
        csv.row({static_cast<double>(k), ti.value, ti.distance, static_cast<double>(orc.index),
                 static_cast<double>(H.sites), q.defectOp});
        const std::string tag = "k=" + std::to_string(k);
        R.le("integrality_" + tag, ti.distance, 1e-6);
        R.le("oracle_" + tag, std::abs(ti.value - orc.index), 1e-6);
        R.le("minus_winding_" + tag, std::abs(ti.value + k), 1e-6);
    }
    R.csvs.emplace_back("boundary_index.csv", csv);
    if (p.value("certificates", false)) {
        const HalfBC bc;
        HalfOptions on = o;
        on.norms = true;
        const EvenSchedule es = quasi_idempotent_schedule(Db, 0, bc, a, K, p.value("ts", std::vector<double>{1, 2}), on);
        Csv sc({"t", "sites", "defect_K", "defect_op", "pass"});
        for (const auto& s : es.steps) sc.row({s.t, static_cast<double>(s.sites), s.valueA, s.valueB, s.pass ? 1.0 : 0.0});
        R.csvs.emplace_back("even_schedule.csv", sc);
        R.check("quasi_idempotent_defect", es.result ? es.result->defectK : 1.0, 0.5, es.result.has_value());
        if (es.result) R.check("even_far_zero", es.result->farZero ? 0 : 1, 0, es.result->farZero);
        const OddSchedule os = odd_element_schedule(Db, 0, bc, a, K, {t}, p.value("ns", std::vector<int>{4, 8, 16}), on);
        Csv oc({"t", "n", "sites", "cert_left", "cert_right", "pass"});
        for (const auto& s : os.steps)
            oc.row({s.t, static_cast<double>(s.n), static_cast<double>(s.sites), s.valueA, s.valueB, s.pass ? 1.0 : 0.0});
        R.csvs.emplace_back("odd_schedule.csv", oc);
        R.check("odd_invertible", os.result ? std::max(os.result->certLeft, os.result->certRight) : 1.0, 1.0,
                os.result.has_value());
        if (os.result) R.check("odd_far_zero", os.result->farZero ? 0 : 1, 0, os.result->farZero);
    }
}

CyclicCocycle cocycle_of(const json& cfg, GroupPtr G) {
    if (!cfg.contains("cocycle")) throw ConfigError("missing field 'cocycle'");
    return cocycle_from_json(cfg.at("cocycle"), std::move(G));
}

void eta_csv(const EtaResult& e, const std::string& name, Report& R) {
    Csv csv({e.variable, "integrand_re", "integrand_im", "integrand_norm"});
    for (std::size_t i = 0; i < e.grid.size(); ++i)
        csv.row({e.grid[i], e.integrand[i].real(), e.integrand[i].imag(), e.integrandNorm[i]});
    R.csvs.emplace_back(name, csv);
}

void run_eta(const json& cfg, Report& R) {
    const Kernel D = model_of(cfg);
    const CyclicCocycle phi = cocycle_of(cfg, D.G);
    const json p = cfg.value("params", json::object());
    const double K = num(cfg, "K", 0.0);
    const QuadOptions q = quad_of(cfg);
    const double tol = num(p, "tol", 1e-3);
    if (phi.degree % 2 == 1) {
        const EtaResult e = eta_even(phi, D, K, q);
        eta_csv(e, "eta_integrand.csv", R);
        R.results["eta"] = {e.value.real(), e.value.imag()};
        R.le("refine_delta", e.refineDelta, tol);
        R.check("tail_eps", e.fitEps, 0.0, e.fitEps > 0);
        return;
    }
    if (p.value("transgression", true)) {
        const TransgressionReport tr = transgression_check(phi, D, K, q);
        eta_csv(tr.u, "eta_u.csv", R);
        eta_csv(tr.v, "eta_v.csv", R);
        R.results["eta_u"] = {tr.u.value.real(), tr.u.value.imag()};
        R.results["eta_v"] = {tr.v.value.real(), tr.v.value.imag()};
        R.results["opposite_residual"] = tr.oppositeResidual;
        R.le("refine_delta_u", tr.u.refineDelta, tol);
        R.le("refine_delta_v", tr.v.refineDelta, tol);
        R.check("tail_eps", tr.u.fitEps, 0.0, tr.u.fitEps > 0);
        R.le("transgression_residual", tr.residual, tol);
    } else {
        const EtaResult e = eta(phi, D, K, q);
        eta_csv(e, "eta_u.csv", R);
        R.results["eta_u"] = {e.value.real(), e.value.imag()};
        R.le("refine_delta_u", e.refineDelta, tol);
        R.check("tail_eps", e.fitEps, 0.0, e.fitEps > 0);
    }
}

void run_aps(const json& cfg, Report& R) {
    const Kernel Db = model_of(cfg);
    const CyclicCocycle phi = cocycle_of(cfg, Db.G);
    const json p = cfg.value("params", json::object());
    const double a = num(p, "a", 1.5), K = num(cfg, "K", 0.0);
    HalfBC bc;
    bc.winding = inum(p, "winding", 1);
    bc.interiorStrength = num(p, "interior_strength", 0.3);
    bc.seed = cfg.at("seed").get<unsigned long long>();
    ApsOptions o;
    o.t = num(p, "t", 1.0);
    o.half = half_of(p);
    o.quad = quad_of(cfg);
    const ApsTrend tr = aps_refinement(phi, Db, inum(p, "interior", 2), bc, a, K, inum(p, "refine_steps", 0), o);
    Csv csv({"step", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "residual", "trace", "sites"});
    for (std::size_t i = 0; i < tr.steps.size(); ++i) {
        const auto& s = tr.steps[i];
        csv.row({static_cast<double>(i), s.lhs.real(), s.lhs.imag(), s.rhs.real(), s.rhs.imag(), s.residual, s.trace,
                 static_cast<double>(s.sites)});
    }
    R.csvs.emplace_back("aps.csv", csv);
    R.results["lhs"] = {tr.steps[0].lhs.real(), tr.steps[0].lhs.imag()};
    R.results["rhs"] = {tr.steps[0].rhs.real(), tr.steps[0].rhs.imag()};
    R.le("aps_residual", tr.steps[0].residual, num(p, "tol", 1e-2));
    if (tr.steps.size() > 1) R.check("refinement_trend", tr.decreasing ? 0 : 1, 0, tr.decreasing);
}

void run_product(const json& cfg, Report& R) {
    const json p = cfg.value("params", json::object());
    const auto reps = product_identity_random(inum(p, "samples", 100), inum(p, "n", 6), inum(p, "k", 3),
                                              cfg.at("seed").get<unsigned long long>());
    Csv csv({"sample", "inverse", "quotient", "factorization", "projections"});
    double worst = 0;
    for (std::size_t i = 0; i < reps.size(); ++i) {
        const auto& r = reps[i];
        csv.row({static_cast<double>(i), r.inverse, r.quotient, r.factorization, r.projections});
        worst = std::max(worst, r.worst());
    }
    R.csvs.emplace_back("product_identities.csv", csv);
    R.le("worst_identity_residual", worst, num(p, "tol", 1e-12));
}

void run_cocycle_check(const json& cfg, Report& R) {
    const GroupPtr G = group_of(cfg);
    CyclicCocycle phi = cocycle_of(cfg, G);
    const json p = cfg.value("params", json::object());
    const CocycleCheck c =
        check_cocycle(phi, inum(p, "radius", 3), inum(p, "samples", 20000), cfg.at("seed").get<unsigned long long>());
    R.results["tuples"] = c.tuples;
    R.results["exhaustive"] = c.exhaustive;
    R.results["delocalized"] = c.delocalized;
    R.results["delocalized_violation"] = c.delocalizedViolation;
    R.le("cyclic_violation", c.cyclicViolation, 1e-12);
    R.le("cocycle_violation", c.cocycleViolation, 1e-12);
    const CocycleGrowth g = cocycle_growth(phi, inum(p, "growth_radius", 4));
    R.results["growth_C"] = g.C;
    R.results["growth_K"] = g.K;
    Csv csv({"cyclic_violation", "cocycle_violation", "delocalized_violation", "growth_C", "growth_K"});
    csv.row({c.cyclicViolation, c.cocycleViolation, c.delocalizedViolation, g.C, g.K});
    R.csvs.emplace_back("cocycle_check.csv", csv);
}

// ---------------------------------------------------------------- validation

std::vector<std::string> validate(const json& cfg) {
    std::vector<std::string> d;
    if (!cfg.is_object()) return {"config must be a JSON object"};
    if (!cfg.contains("seed")) d.push_back("missing required field 'seed'");
    else if (!cfg.at("seed").is_number_unsigned() && !cfg.at("seed").is_number_integer())
        d.push_back("field 'seed' must be a nonnegative integer");
    if (!cfg.contains("kind")) {
        d.push_back("missing required field 'kind'");
        return d;
    }
    const std::string kind = cfg.at("kind").is_string() ? cfg.at("kind").get<std::string>() : "";
    if (std::find(kKinds.begin(), kKinds.end(), kind) == kKinds.end()) {
        std::string all;
        for (const auto& k : kKinds) all += (all.empty() ? "" : ", ") + k;
        d.push_back("unknown kind '" + kind + "'; expected one of: " + all);
        return d;
    }
    const bool needsModel = kind != "product-check";
    if (needsModel) {
        const json m = cfg.value("model", json::object());
        const json& gj = (kind == "growth" || kind == "cocycle-check") && cfg.contains("group") ? cfg : m;
        if (!gj.contains("group")) d.push_back("missing field 'model.group'");
        else {
            try {
                Group::from_json(gj.at("group"));
            } catch (const std::exception& e) {
                d.push_back(std::string("model.group: ") + e.what());
            }
        }
        if (m.contains("type") && m.at("type") != "dirac" && m.at("type") != "scalar")
            d.push_back("model.type must be 'dirac' or 'scalar'");
    }
    if (kind == "eta" || kind == "aps" || kind == "cocycle-check") {
        if (!cfg.contains("cocycle")) d.push_back("missing field 'cocycle'");
        else
            for (const auto& e : validate_cocycle_json(cfg.at("cocycle"))) d.push_back(e);
    }
    if (kind == "norms") {
        if (!cfg.contains("function")) d.push_back("missing field 'function'");
        else {
            try {
                SpectralFunction::from_json(cfg.at("function"));
            } catch (const std::exception& e) {
                d.push_back(std::string("function: ") + e.what());
            }
        }
    }
    if (cfg.contains("quad")) {
        const json& q = cfg.at("quad");
        if (q.contains("nodes") && (!q.at("nodes").is_number_integer() || q.at("nodes").get<int>() % 4 != 0))
            d.push_back("quad.nodes must be an integer multiple of 4");
    }
    return d;
}

json read_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path);
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("parse error: ") + e.what());
    }
}

int cmd_validate(const std::string& path) {
    try {
        const auto d = validate(read_json(path));
        for (const auto& s : d) std::cout << path << ": " << s << "\n";
        return d.empty() ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cout << path << ": " << e.what() << "\n";
        return 2;
    }
}

int cmd_run(const std::string& path, const std::string& outOverride) {
    json cfg;
    try {
        cfg = read_json(path);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    const auto diag = validate(cfg);
    if (!diag.empty()) {
        for (const auto& s : diag) std::cerr << path << ": " << s << "\n";
        return 2;
    }
    const std::string kind = cfg.at("kind").get<std::string>();
    fs::path out = outOverride.empty() ? fs::path(cfg.value("output", json::object()).value("dir", "l1lab_out/" + kind))
                                       : fs::path(outOverride);
    Report R;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (kind == "growth") run_growth(cfg, R);
        else if (kind == "norms") run_norms(cfg, R);
        else if (kind == "vanishing") run_vanishing(cfg, R);
        else if (kind == "boundary-index") run_boundary_index(cfg, R);
        else if (kind == "eta") run_eta(cfg, R);
        else if (kind == "aps") run_aps(cfg, R);
        else if (kind == "product-check") run_product(cfg, R);
        else if (kind == "cocycle-check") run_cocycle_check(cfg, R);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const RefusedError& e) {
        R.refusal = std::string(kind) + ": " + e.what();
        R.check("refusal", e.measured, e.threshold, false);
    } catch (const ConvergenceError& e) {
        R.refusal = std::string(kind) + ": " + e.what();
        R.check("convergence", e.residual, 0, false);
    } catch (const ArgumentError& e) {
        std::cerr << "config error (" << kind << "): " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        R.refusal = std::string(kind) + ": " + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::error_code ec;
    fs::create_directories(out, ec);
    json manifest = json::array();
    try {
        for (const auto& [name, csv] : R.csvs) {
            csv.write(out / name);
            manifest.push_back(name);
        }
        json rep;
        rep["config"] = cfg;
        rep["config_hash"] = sha256_hex(cfg.dump());
        rep["kind"] = kind;
        rep["checks"] = R.checks;
        rep["results"] = R.results;
        rep["pass"] = R.passed();
        if (!R.refusal.empty()) rep["refusal"] = R.refusal;
        manifest.push_back("report.json");
        manifest.push_back("timing.json");
        rep["files"] = manifest;
        std::ofstream(out / "report.json") << rep.dump(2) << "\n";
        // Timing lives apart from the report so reports stay byte-identical.
        std::ofstream(out / "timing.json") << json{{"seconds", secs}}.dump(2) << "\n";
    } catch (const std::exception& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 2;
    }
    for (const auto& c : R.checks)
        std::cout << (c["pass"].get<bool>() ? "PASS " : "FAIL ") << c["name"].get<std::string>()
                  << " measured=" << fmt17(c["measured"].get<double>())
                  << " threshold=" << fmt17(c["threshold"].get<double>()) << "\n";
    if (!R.refusal.empty()) std::cout << "REFUSED " << R.refusal << "\n";
    std::cout << "report: " << (out / "report.json").string() << "\n";
    return R.passed() ? 0 : 1;
}

int cmd_registry() {
    std::cout << "kinds:";
    for (const auto& k : kKinds) std::cout << " " << k;
    std::cout << "\ngroups: free_abelian(rank) free(rank) cyclic(order) product(left,right)\n";
    std::cout << "models: dirac(m, h) scalar(c)\n";
    std::cout << "functions: G_t F_at heat gaussian_sign power_resolvent cayley exp2pi sign band_limited\n";
    std::cout << "cocycles:";
    for (const auto& c : registry_names()) std::cout << " " << c;
    std::cout << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"l1lab: experiments on l1 higher index models"};
    app.require_subcommand(1);
    std::string cfgPath, outDir;
    auto* run = app.add_subcommand("run", "Run an experiment config");
    run->add_option("config", cfgPath, "Config JSON")->required();
    run->add_option("-o,--out", outDir, "Output directory (overrides output.dir)");
    auto* val = app.add_subcommand("validate", "Check a config without computing");
    val->add_option("config", cfgPath, "Config JSON")->required();
    app.add_subcommand("registry", "List built-in names");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    if (*run) return cmd_run(cfgPath, outDir);
    if (*val) return cmd_validate(cfgPath);
    return cmd_registry();
}
