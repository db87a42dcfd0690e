#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "dgt/analysis.hpp"
#include "dgt/engine.hpp"
#include "dgt/errors.hpp"
#include "dgt/graph.hpp"
#include "dgt/objectives.hpp"

using namespace dgt;
using doctest::Approx;

namespace {
Eigen::VectorXd vec1(double a) {
    Eigen::VectorXd v(1);
    v << a;
    return v;
}

// Small constants chosen by hand so the matrix machinery runs in a regime
// where every quantity is exactly representable and cheap.
LemmaConstants synthetic() {
    LemmaConstants c;
    c.n = 3;
    c.eta = 0.4;
    c.beta_bar = 1e-3;
    c.alpha_F = 2e-3;
    c.beta_F = 3e-3;
    c.Q_R = 1.5;
    c.Q_P = 2.0;
    c.log_Q_R = std::log(1.5);
    c.log_Q_P = std::log(2.0);
    c.r_R = 0.5;
    c.r_P = 0.6;
    c.N_R = c.N_P = c.N_bar = 4;
    c.N_R_exact = c.N_P_exact = true;
    return c;
}
}  // namespace

TEST_CASE("analysis: contraction constants at pinned parameter points") {
    // All reference values were computed with arbitrary-precision arithmetic
    // outside this code base and frozen here.
    LemmaConstants a = lemma_constants(3, 0.1, 1.0, 3.0, 3.0);
    CHECK(a.Q_R == Approx(612.121212121212).epsilon(1e-9));
    CHECK(a.N_R == 1278);
    CHECK(a.N_R_exact);
    CHECK(a.Q_P == Approx(54000012.0000012).epsilon(1e-9));
    CHECK(a.N_P == 320480891);
    CHECK(a.N_P_exact);
    CHECK(a.N_bar == 320480891);
    CHECK(!a.overflow);

    LemmaConstants b = lemma_constants(3, 0.4, 1.0, 3.0, 3.0);
    CHECK(b.Q_R == Approx(51.78571428571427).epsilon(1e-12));
    CHECK(b.N_R == 47);
    CHECK(b.r_R == Approx(0.9389307237773211).epsilon(1e-12));
    CHECK(b.Q_P == Approx(13195.599213819964).epsilon(1e-12));
    CHECK(b.N_P == 41686);
    CHECK(b.r_P == Approx(0.9998261736239168).epsilon(1e-12));

    LemmaConstants p = lemma_constants(2, 0.3, 1.0, 3.0, 3.0);
    CHECK(p.Q_R == Approx(24.761904761904770).epsilon(1e-12));
    CHECK(p.N_R == 10);
    CHECK(p.r_R == Approx(0.999232173333334).epsilon(1e-12));
    CHECK(p.Q_P == Approx(97.26585223967423).epsilon(1e-12));
    CHECK(p.N_P == 101);
    CHECK(p.r_P == Approx(0.9734139252601914).epsilon(1e-12));

    // Large n pushes the P threshold outside the integer range while the R
    // side stays representable.
    LemmaConstants w = lemma_constants(5, 0.1, 1.0, 3.0, 3.0);
    CHECK(w.Q_R == Approx(100020.00200019994).epsilon(1e-9));
    CHECK(w.N_R == 460503);
    CHECK(w.N_R_exact);
    CHECK(!w.N_P_exact);
    CHECK(w.N_P == -1);
    CHECK(w.N_bar == -1);
    CHECK(w.N_P_approx == Approx(1.3698e25).epsilon(1e-3));
    CHECK(!w.representable());

    // Extreme parameters overflow the doubles but the log forms survive.
    LemmaConstants x = lemma_constants(20, 0.01, 1.0, 3.0, 3.0);
    CHECK(x.overflow);
    CHECK(std::isinf(x.Q_P));
    CHECK(x.log_Q_P == Approx(1810.572463).epsilon(1e-6));

    CHECK_THROWS_AS(lemma_constants(1, 0.3, 1.0, 3.0, 3.0), TooSmall);
    CHECK_THROWS_AS(lemma_constants(3, 0.0, 1.0, 3.0, 3.0), ConfigError);
    CHECK_THROWS_AS(lemma_constants(3, 1.0, 1.0, 3.0, 3.0), ConfigError);
}

TEST_CASE("analysis: the frozen window lengths are minimal") {
    LemmaConstants b = lemma_constants(3, 0.4, 1.0, 3.0, 3.0);
    CHECK(contraction_factor(b, 'R', (double)b.N_R) < 1.0);
    CHECK(contraction_factor(b, 'R', (double)(b.N_R - 1)) >= 1.0);
    CHECK(contraction_factor(b, 'P', (double)b.N_P) < 1.0);
    CHECK(contraction_factor(b, 'P', (double)(b.N_P - 1)) >= 1.0);

    LemmaConstants p = lemma_constants(2, 0.3, 1.0, 3.0, 3.0);
    CHECK(contraction_factor(p, 'R', 10.0) < 1.0);
    CHECK(contraction_factor(p, 'R', 9.0) >= 1.0);
    CHECK(contraction_factor(p, 'P', 101.0) < 1.0);
    CHECK(contraction_factor(p, 'P', 100.0) >= 1.0);

    // The reported factors are the factors at the minimal window.
    CHECK(contraction_factor(p, 'R', (double)p.N_R) ==
          Approx(p.r_R).epsilon(1e-12));
    CHECK(contraction_factor(p, 'P', (double)p.N_P) ==
          Approx(p.r_P).epsilon(1e-12));

    CHECK_THROWS_AS(contraction_factor(p, 'X', 10.0), ConfigError);
}

TEST_CASE("analysis: dense and companion spectral radii agree") {
    const LemmaConstants c = synthetic();

    // Dense values frozen from an independent eigensolve of the assembled
    // 12x12 matrix.
    struct Pt {
        double lambda, rho;
    };
    const Pt pts[] = {
        {0.0, 1.0},
        {1e-8, 0.999999999998934},
        {0.05, 1.074367306735236},
        {1.0, 1.794221590205180},
        {40.0, 9.050952029511036},
    };
    for (const Pt& pt : pts) {
        ConvergenceMatrix M = build_M(c, 4, pt.lambda);
        CHECK(M.rho == Approx(pt.rho).epsilon(1e-10));
        CHECK(companion_rho(c, 4, pt.lambda) == Approx(M.rho).epsilon(1e-10));
        CHECK(M.M1.rows() == 12);
        CHECK(M.lambda == pt.lambda);
    }

    // The matrix is affine in lambda.
    ConvergenceMatrix Ma = build_M(c, 4, 0.0);
    ConvergenceMatrix Mb = build_M(c, 4, 1.0);
    CHECK((Mb.M1 - Ma.M1).cwiseAbs().maxCoeff() == 0.0);
    CHECK((Mb.M2 - Ma.M2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(dense_spectral_radius(Ma.M1 + 0.05 * Ma.M2) ==
          Approx(1.074367306735236).epsilon(1e-10));

    // Slope at zero equals the negative gap-contraction coefficient
    // -alpha_F * eta^{n-1} / n.
    const double eps = 1e-8;
    const double fd = (companion_rho(c, 4, eps) - companion_rho(c, 4, 0.0)) / eps;
    CHECK(fd == Approx(-2e-3 * 0.16 / 3.0).epsilon(1e-2));

    // The companion form works far beyond the dense cap.
    LemmaConstants big = lemma_constants(3, 0.4, 1.0, 3.0, 3.0);
    CHECK_THROWS_AS(build_M(big, big.N_bar, 1e-6), DimensionTooLarge);
    CHECK(companion_rho(big, big.N_bar, 0.0) == Approx(1.0).epsilon(1e-9));

    CHECK_THROWS_AS(build_M(c, 1, 0.0), TooSmall);
    CHECK_THROWS_AS(build_M(c, 4, -0.5), ConfigError);
}

TEST_CASE("analysis: certificate sweep on the synthetic constants") {
    CertificateSweep sw = find_certificate(synthetic(), 4);
    CHECK(sw.found);
    CHECK(sw.lambda_best == Approx(0.000118271).epsilon(1e-4));
    CHECK(sw.rho_min == Approx(0.999999993450).epsilon(1e-10));
    CHECK(sw.rho_min < 1.0);
    CHECK(sw.lambda_sup == Approx(0.000235982).epsilon(1e-4));
    CHECK(sw.lambda_sup >= sw.lambda_best);
}

TEST_CASE("analysis: trace diagnostics on a two-node run") {
    DirectedGraph g = pair_graph();
    ObjectiveSuite suite = rendezvous_suite({vec1(0.0), vec1(4.0)});
    LemmaConstants c =
        lemma_constants(2, 0.3, suite.beta_bar, suite.alpha_F, suite.beta_F);
    REQUIRE(c.N_bar == 101);
    REQUIRE(c.representable());

    ScheduleConfig sc;
    sc.K = 3;
    sc.eta = 0.3;
    sc.lambda = 0.05;
    sc.seed = 21;
    const long long T = c.N_bar + 420;
    ExecutionTrace t = run(suite, g, sc, T);
    REQUIRE(t.final_err < 1e-8);

    SUBCASE("tracker mass stays on the gradient mass") {
        for (long long k : {0LL, 1LL, 5LL, T / 2, T}) {
            CHECK(relative_conservation_residual(t, k) <= 1e-12);
            CHECK(conservation_residual(t, k) >= 0.0);
        }
        CHECK_THROWS_AS(conservation_residual(t, T + 1), IndexOutOfRange);
        CHECK_THROWS_AS(relative_conservation_residual(t, -1), IndexOutOfRange);
    }

    SUBCASE("forward probability products stay in their simplex") {
        auto v = absolute_probability_v(t, T);
        REQUIRE((long long)v.size() == T - sc.K + 1);
        CHECK((v[0].array() == 0.5).all());  // uniform start
        const double floor = std::pow(sc.eta, g.n() - 1) / g.n();
        for (const auto& vk : v) {
            CHECK(vk.sum() == Approx(1.0).epsilon(1e-12));
            CHECK(vk.minCoeff() >= floor);
            CHECK(vk.maxCoeff() <= 1.0);
        }
        CHECK_THROWS_AS(absolute_probability_v(t, sc.K - 1), ConfigError);
        CHECK_THROWS_AS(absolute_probability_v(t, T + 1), ConfigError);
    }

    SUBCASE("the reweighted mixing matrix is row stochastic") {
        for (long long k : {(long long)sc.K, (long long)sc.K + 5, T - 1}) {
            Eigen::MatrixXd P = p_matrix(t, k);
            for (int i = 0; i < g.n(); ++i) {
                CHECK(P.row(i).sum() == Approx(1.0).epsilon(1e-12));
                for (int j = 0; j < g.n(); ++j) CHECK(P(i, j) >= 0.0);
            }
        }
        CHECK_THROWS_AS(p_matrix(t, sc.K - 1), ConfigError);
        CHECK_THROWS_AS(p_matrix(t, T), ConfigError);
    }

    SUBCASE("the backward probability estimate converges") {
        PhiResult pf = approx_phi(t, sc.K + 2, 150);
        CHECK(pf.phi.sum() == Approx(1.0).epsilon(1e-12));
        CHECK(pf.phi.minCoeff() > 0.0);
        CHECK(pf.truncation_estimate <= 1e-12);
        CHECK_THROWS_AS(approx_phi(t, sc.K - 1, 150), ConfigError);
        CHECK_THROWS_AS(approx_phi(t, sc.K, 1), TooSmall);
        CHECK_THROWS_AS(approx_phi(t, T - 10, 150), BufferTooShort);
    }

    SUBCASE("the transformed series is populated and coupled") {
        DiagnosticsSeries diag = diagnostics(t, 150);
        CHECK(diag.k_from == sc.K);
        CHECK(diag.k_to == T - 150);
        const std::size_t count = (std::size_t)(diag.k_to - diag.k_from + 1);
        REQUIRE(diag.xi.size() == count);
        REQUIRE(diag.delta_k.size() == count - 1);
        for (double dk : diag.delta_k) {
            CHECK(dk > 0.0);
            CHECK(dk <= 1.0);
        }
        // The run converges, so the transformed residual norms shrink too.
        CHECK(diag.xi.back().norm() < 1e-3 * diag.xi.front().norm());
        for (double tr : diag.phi_truncation) CHECK(tr <= 1e-8);
    }

    SUBCASE("every one-step bound holds on the recorded run") {
        auto checks = lemma_inequality_checks(t, c, 150);
        REQUIRE(!checks.empty());
        long long gap = 0, consensus = 0, tracker = 0;
        for (const auto& ch : checks) {
            CHECK(ch.holds);
            if (ch.which == "gap") ++gap;
            if (ch.which == "consensus") ++consensus;
            if (ch.which == "tracker") ++tracker;
        }
        CHECK(gap > 300);
        CHECK(consensus > 200);
        CHECK(tracker == consensus);

        LemmaConstants vac = lemma_constants(20, 0.01, 1.0, 3.0, 3.0);
        CHECK_THROWS_AS(lemma_inequality_checks(t, vac, 150), ConfigError);
    }

    SUBCASE("diagnostics reject unusable traces") {
        RunOptions lean;
        lean.record_params = false;
        ExecutionTrace thin = run(suite, g, sc, 40, {}, {}, lean);
        CHECK_THROWS_AS(absolute_probability_v(thin, 20), MissingSidecar);

        ExecutionTrace brief = run(suite, g, sc, 40);
        CHECK_THROWS_AS(diagnostics(brief, 150), SeriesTooShort);

        Objective blind;
        blind.d = 1;
        blind.value = [](const Eigen::VectorXd& x) { return 0.5 * x.squaredNorm(); };
        blind.gradient = [](const Eigen::VectorXd& x) { return x; };
        blind.beta = 1.0;
        ObjectiveSuite noopt = custom_suite({blind, blind}, 2.0, {});
        ExecutionTrace t2 = run(noopt, g, sc, 200);
        CHECK_THROWS_AS(diagnostics(t2, 50), ConfigError);
    }
}

TEST_CASE("analysis: rate fits recover exact geometric decay") {
    std::vector<double> errs;
    for (int k = 0; k < 100; ++k) errs.push_back(3.0 * std::pow(0.9, k));

    RateFit fit = fit_linear_rate(errs, 10);
    CHECK(fit.rho_hat == Approx(0.9).epsilon(1e-12));
    CHECK(fit.intercept == Approx(3.0).epsilon(1e-9));
    CHECK(fit.goodness == Approx(1.0).epsilon(1e-12));
    CHECK(fit.used_points == 90);
    CHECK(!fit.truncated_at_floor);

    SUBCASE("the floor cuts the window after its first crossing") {
        std::vector<double> fast;
        for (int k = 0; k < 60; ++k)
            fast.push_back(3.0 * std::pow(0.25, k));
        RateFit f = fit_linear_rate(fast, 0, 1e-10);
        CHECK(f.truncated_at_floor);
        // 3 * 0.25^18 is the first value below 1e-10; it is kept as the
        // final point.
        CHECK(f.used_points == 19);
        CHECK(f.rho_hat == Approx(0.25).epsilon(1e-12));
    }

    SUBCASE("degenerate series are rejected") {
        CHECK_THROWS_AS(fit_linear_rate(errs, -1), ConfigError);
        CHECK_THROWS_AS(fit_linear_rate(std::vector<double>(19, 1.0), 0),
                        SeriesTooShort);
        CHECK_THROWS_AS(fit_linear_rate(std::vector<double>(25, 0.0), 0),
                        NonPositiveError);
        std::vector<double> one(25, 0.0);
        one[0] = 1.0;
        CHECK_THROWS_AS(fit_linear_rate(one, 0), SeriesTooShort);
    }
}
