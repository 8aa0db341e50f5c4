// Acceptance run: one PASS/FAIL line per criterion.
//   acceptance [--only N]... [--expect-fail N]...
// Exit status is 1 if a criterion fails that was not declared with
// --expect-fail; a declared criterion still prints FAIL when it fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <string>

#include "l1/rho_eta.hpp"

using namespace l1;

namespace {

int failures = 0, expectedFailures = 0;
std::set<int> only, expectFail;

void report(int n, bool pass, const std::string& detail, double seconds) {
    const bool expected = !pass && expectFail.count(n);
    std::printf("%s criterion %d: %s (%.1fs)%s\n", pass ? "PASS" : "FAIL", n, detail.c_str(), seconds,
                expected ? " [expected failure]" : "");
    std::fflush(stdout);
    if (expected) ++expectedFailures;
    else if (!pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

template <class F>
void criterion(int n, F&& body) {
    if (!only.empty() && !only.count(n)) return;
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool pass = false;
    try {
        pass = body(detail);
    } catch (const std::exception& e) {
        detail += std::string(" exception: ") + e.what();
    }
    report(n, pass, detail, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

}  // namespace

int main(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string a = argv[i];
        if (a == "--only") only.insert(std::atoi(argv[i + 1]));
        else if (a == "--expect-fail") expectFail.insert(std::atoi(argv[i + 1]));
        else {
            std::fprintf(stderr, "usage: acceptance [--only N]... [--expect-fail N]...\n");
            return 2;
        }
    }
    std::mt19937_64 rng(20261015);

    criterion(1, [&](std::string& d) {
        struct Case {
            GroupPtr G;
            int draws;
            Scheme scheme;
        };
        const std::vector<Case> cases = {{Group::free_abelian(1), 20, Scheme::Fiberwise},
                                         {Group::free_abelian(2), 15, Scheme::Fiberwise},
                                         {Group::free(2), 15, Scheme::Chebyshev}};
        // F₂: F(D) on the compression to ℓ²(ball(4)) by eigendecomposition;
        // the defect is the operator norm of p² - p there.
        std::uniform_real_distribution<double> U(0.0, 1.0);
        double worst = 0;
        int count = 0;
        for (const auto& c : cases)
            for (int i = 0; i < c.draws; ++i) {
                const double m = 0.5 + U(rng);
                const double N = 1.0 + 2.0 * U(rng);
                const SpectralFunction F = SpectralFunction::random_normalizer(N, rng);
                const Kernel D = gapped_dirac(c.G, m);
                if (c.scheme == Scheme::Chebyshev) {
                    const Mat M = truncated_matrix(D, 4);
                    Eigen::SelfAdjointEigenSolver<Mat> es(M);
                    Vec fl(M.rows());
                    for (long j = 0; j < M.rows(); ++j) fl(j) = F(es.eigenvalues()(j));
                    const Mat FM = es.eigenvectors() * fl.asDiagonal() * es.eigenvectors().adjoint();
                    Eigen::VectorXd eps(M.rows());
                    for (long j = 0; j < M.rows(); ++j) eps(j) = D.grading[j % D.d];
                    const Mat P = idempotent_matrix(FM, eps);
                    worst = std::max(worst, mat_op_norm(P * P - P));
                } else {
                    CalcOptions o;
                    o.gridPoints = c.G->rank() == 1 ? 512 : 64;
                    const auto p = index_idempotent(D, F, 0.0, c.scheme, 1e-10, o);
                    worst = std::max(worst, p.defect10);
                }
                ++count;
            }
        d = fmt("%.0f draws, max ||p^2 - p||_{1,0} = %.3g", count, worst);
        return count == 50 && worst <= 1e-12;
    });

    criterion(2, [&](std::string& d) {
        std::uniform_real_distribution<double> U(0.0, 1.0);
        int violations = 0, checked = 0;
        for (int i = 0; i < 100; ++i) {
            const GroupPtr G = i % 2 ? Group::free_abelian(2) : Group::free_abelian(1);
            const double m = 0.5 + 1.5 * U(rng);
            const SpectralFunction f = i % 4 < 2 ? SpectralFunction::heat(0.2 + 1.8 * U(rng), 0.5 + U(rng))
                                                 : SpectralFunction::gauss_sign(0.5 + 1.5 * U(rng));
            const auto r = tail_bound_check(gapped_dirac(G, m), f, 2.0, 1.0, 0.0, 0.0);
            violations += r.violations;
            checked += r.checked;
        }
        d = fmt("100 draws, %.0f components checked, %.0f violations", checked, violations);
        return checked > 0 && violations == 0;
    });

    criterion(3, [&](std::string& d) {
        const Kernel D = gapped_dirac(Group::free_abelian(1), 1.5);
        std::vector<double> ts, norms;
        for (double t = 1; t <= 6; t += 0.5) {
            CalcOptions o;
            o.weightK = 0.5;
            const Kernel h = apply_function(D, SpectralFunction::gauss_sign(t), Scheme::Fiberwise, 0.0, o);
            ts.push_back(t);
            norms.push_back(weighted_norm(h, 0.5));
        }
        const DecayFit f = fit_log_vs_t2(ts, norms);
        d = fmt("slope %.4g, R^2 %.6f", f.slope, f.r2);
        return f.slope <= -0.05 && f.r2 >= 0.98;
    });

    criterion(4, [&](std::string& d) {
        const auto ok = vanishing_certificate(gapped_dirac(Group::free_abelian(1), 1.5), 0.5, {1, 2, 3, 4, 5, 6});
        const auto no = vanishing_certificate(gapped_dirac(Group::free_abelian(1), 0.5), 0.5, {1, 2, 3});
        d = fmt("sigma %.3g > %.3g; ||G_6 - sgn||_{1,K} = %.3g", ok.gap.sigma, ok.threshold.threshold,
                ok.distance.back()) +
            fmt("; ||sgn^2 - 1|| = %.3g; m=0.5 refused: %.0f", ok.signSquareDefect, no.certified ? 0 : 1);
        return ok.certified && ok.gapOk && ok.distance.back() <= 1e-6 && ok.signSquareDefect <= 1e-10 && !no.gapOk &&
               !no.certified;
    });

    criterion(5, [&](std::string& d) {
        const auto z2 = growth_rate(*Group::free_abelian(2), 8);
        const auto f2 = growth_rate(*Group::free(2), 8);
        bool counts = true;
        for (int n = 0; n <= 8; ++n) {
            counts &= closed_form_ball_count(*Group::free_abelian(2), n) == static_cast<long long>(z2.counts[n]);
            counts &= closed_form_ball_count(*Group::free(2), n) == static_cast<long long>(f2.counts[n]);
        }
        d = fmt("K(Z^2) = %.4g, |K(F_2) - ln 3| = %.4g, closed forms match: %.0f", z2.rate,
                std::abs(f2.rate - std::log(3.0)), counts);
        return z2.rate <= 0.05 && std::abs(f2.rate - std::log(3.0)) <= 0.05 && counts;
    });

    criterion(6, [&](std::string& d) {
        const Kernel Db = gapped_dirac(Group::free_abelian(1), 2.0);
        HalfOptions o;
        o.norms = false;
        bool pass = true;
        double worst = 0, worstDoubling = 0;
        for (int k = -2; k <= 2; ++k) {
            HalfBC bc;
            bc.winding = k;
            bc.interiorStrength = 0.3;
            const HalfKernel H = half_model_for(Db, 2, bc, 1.5, 1.0, 0, o);
            const double tr = pairing_trace_index(riesz_idempotent(boundary_quasi_idempotent(H, 1.5, 1.0, 0.3, o))).value;
            const int oracle = toeplitz_index(H, {0.3}).index;
            const HalfKernel H2 = half_space_model(Db, 2, 2 * (H.sites - 1), bc);
            const double tr2 =
                pairing_trace_index(riesz_idempotent(boundary_quasi_idempotent(H2, 1.5, 1.0, 0.3, o))).value;
            worst = std::max(worst, std::abs(tr + k));
            worstDoubling = std::max(worstDoubling, std::abs(tr2 - tr));
            pass &= oracle == -k;
        }
        d = fmt("max |trace + k| = %.3g, max shift under doubling L = %.3g, oracle agrees: %.0f", worst, worstDoubling,
                pass);
        return pass && worst <= 1e-6 && worstDoubling <= 1e-6;
    });

    criterion(7, [&](std::string& d) {
        const Kernel Db = gapped_dirac(Group::free_abelian(1), 2.0);
        HalfOptions o;
        const auto es = quasi_idempotent_schedule(Db, 0, HalfBC{}, 1.5, 0.3, {1, 2, 4}, o);
        const auto os = odd_element_schedule(Db, 0, HalfBC{}, 1.5, 0.3, {1, 2}, {4, 8, 16}, o);
        bool pass = es.result && os.result;
        if (es.result) {
            d += fmt("||q^2 - q||_{1,K} = %.3g at t = %.3g, far zero %.0f", es.result->defectK, es.result->t,
                     es.result->farZero);
            pass &= es.result->defectK < 0.5 && es.result->farZero;
        } else {
            d += "even schedule exhausted";
        }
        if (os.result) {
            d += fmt("; odd n = %.0f: %.3g / %.3g", os.result->n, os.result->certLeft, os.result->certRight);
            d += fmt(", far zero %.0f", os.result->farZero);
            pass &= os.result->certLeft < 1 && os.result->certRight < 1 && os.result->farZero;
        } else {
            d += "; odd schedule exhausted";
        }
        return pass;
    });

    criterion(8, [&](std::string& d) {
        const Kernel D = gapped_dirac(Group::free_abelian(1), 1.5);
        const auto r = transgression_check(make_cocycle("delta:1", D.G), D, 0.5);
        d = fmt("halving |u| %.3g, |v| %.3g", r.u.refineDelta, r.v.refineDelta) +
            fmt(", tail eps %.3g, |eta_u - eta_v| = %.3g", r.u.fitEps, r.residual);
        return r.u.refineDelta <= 1e-3 && r.v.refineDelta <= 1e-3 && r.u.fitEps > 0 && r.residual <= 1e-3;
    });

    criterion(9, [&](std::string& d) {
        double worst = 0;
        for (const auto& r : product_identity_random(100, 6, 3, 9)) worst = std::max(worst, r.worst());
        d = fmt("worst relative residual %.3g over 100 samples", worst);
        return worst <= 1e-12;
    });

    criterion(10, [&](std::string& d) {
        const Kernel Db = gapped_dirac(Group::free_abelian(1), 1.5);
        const auto phi = make_cocycle("delta:1", Db.G);
        ApsOptions o;
        o.quad.nodes = 64;
        HalfBC flat;
        const ApsReport a0 = aps_residual(phi, Db, 2, flat, 1.5, 0.0, o);
        HalfBC tw;
        tw.winding = 1;
        tw.interiorStrength = 0.3;
        const ApsTrend tr = aps_refinement(phi, Db, 2, tw, 1.5, 0.0, 2, o);
        d = fmt("untwisted %.3g; twisted %.3g -> %.3g", a0.residual, tr.steps.front().residual,
                tr.steps.back().residual) +
            fmt(", trend ok %.0f", tr.decreasing);
        return a0.residual <= 1e-3 && tr.steps.front().residual <= 1e-2 && tr.decreasing;
    });

    criterion(11, [&](std::string& d) {
        const Kernel D = gapped_dirac(Group::free_abelian(1), 1.5);
        const auto p = index_idempotent(D, SpectralFunction::fat(1.5, 1.0), 0.0, Scheme::Fiberwise);
        const CyclicCocycle b = coboundary(delocalize(random_cyclic_cochain(D.G, 1, 7, 1.5)).second);
        const double cob = std::abs(pair_even(b, p, 12, 1e-8).value);
        IndexIdempotent triv;
        triv.e11 = Kernel::identity(D.G, 2);
        triv.e11.comps.begin()->second(0, 0) = 0;
        triv.p = triv.e11;
        const cd deloc = pair_even(make_cocycle("delta:1", D.G), triv, 4).value;
        auto Z = Group::free_abelian(1);
        IndexIdempotent rank1;
        rank1.p = Kernel::identity(Z, 1);
        rank1.e11 = Kernel::zero(Z, 1);
        const cd one = pair_even(make_cocycle("trace", Z), rank1, 2).value;
        d = fmt("coboundary %.3g, delocalized/trivial %.3g, rank-one trace %.17g", cob, std::abs(deloc), one.real());
        return cob <= 1e-8 && deloc == cd(0) && one == cd(1);
    });

    std::printf("%d unexpected and %d expected failures\n", failures, expectedFailures);
    return failures == 0 ? 0 : 1;
}
