// Acceptance gate. Each criterion is one self-contained scenario driven
// through the public headers only; the binary takes the criterion number as
// argv[1] (optionally the config directory as argv[2]) and prints a single
// PASS or FAIL line, so every criterion is its own ctest entry.
#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "dgt/analysis.hpp"
#include "dgt/config.hpp"
#include "dgt/engine.hpp"
#include "dgt/errors.hpp"
#include "dgt/graph.hpp"
#include "dgt/objectives.hpp"
#include "dgt/privacy.hpp"
#include "dgt/rng.hpp"
#include "dgt/trace_io.hpp"
#include "dgt/weights.hpp"

using namespace dgt;

namespace {

// Always-on requirement: never compiled out in Release.
#define REQUIRE(cond, msg)                                                     \
    do {                                                                       \
        if (!(cond)) {                                                         \
            std::cerr << "[FAIL] " << __FILE__ << ":" << __LINE__ << " "       \
                      << msg << "\n";                                          \
            std::exit(1);                                                      \
        }                                                                      \
    } while (0)

std::string g_configs = "configs";

struct Stopwatch {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             t0).count();
    }
};

// Prints the criterion's PASS line and enforces its runtime budget.
void finish(int crit, const char* what, const Stopwatch& sw, double limit,
            const std::string& detail) {
    double t = sw.elapsed();
    REQUIRE(t < limit, "criterion " << crit << " exceeded its " << limit
                                    << "s budget: " << t << "s");
    std::printf("[PASS] criterion %d (%s): %s, %.2fs\n", crit, what,
                detail.c_str(), t);
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

Eigen::VectorXd vec1(double a) {
    Eigen::VectorXd v(1);
    v << a;
    return v;
}

double max_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    if (a.size() == 0) return 0.0;
    return (a - b).cwiseAbs().maxCoeff();
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good(), "cannot read back " << p.string());
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

// The five-node benchmark run shared by criteria 1 and 2.
ExecutionTrace benchmark_run(long long T_override, ExperimentConfig* out_cfg) {
    ExperimentConfig cfg = load_config(g_configs + "/fig4.json");
    DirectedGraph g = make_graph(cfg.graph);
    ObjectiveSuite suite = make_suite(cfg.suite, cfg.seed);
    if (out_cfg) *out_cfg = cfg;
    return run(suite, g, cfg.schedule, T_override > 0 ? T_override : cfg.T,
               cfg.init);
}

void criterion_1() {
    Stopwatch sw;
    ExperimentConfig cfg;
    ExecutionTrace t = benchmark_run(0, &cfg);
    REQUIRE(t.final_err <= 1e-6,
            "final error " << t.final_err << " above 1e-6");
    auto errs = t.error_series();
    RateFit fit = fit_linear_rate(errs, cfg.schedule.K + 1, 1e-10);
    REQUIRE(fit.goodness >= 0.98, "log-error fit goodness " << fit.goodness);
    REQUIRE(fit.rho_hat < 1.0, "fitted rate " << fit.rho_hat << " not below 1");
    finish(1, "convergence on the five-node benchmark", sw, 1.0,
           fmt("final %.2e, rate %.4f, fit %.4f over %lld points", t.final_err,
               fit.rho_hat, fit.goodness, fit.used_points));
}

void criterion_2() {
    Stopwatch sw;
    ExecutionTrace t = benchmark_run(900, nullptr);
    auto errs = t.error_series();
    long long cross = -1;
    for (std::size_t k = 0; k < errs.size(); ++k)
        if (errs[k] < 1e-10) {
            cross = (long long)k;
            break;
        }
    REQUIRE(cross >= 0, "error never went below 1e-10");
    REQUIRE(t.final_err < 1e-10,
            "final error " << t.final_err << " bounced back above 1e-10");
    REQUIRE(t.final_err < errs[(std::size_t)cross] / 10.0,
            "error stalled after first crossing 1e-10: " << t.final_err);
    finish(2, "no accuracy floor at longer horizons", sw, 2.0,
           fmt("crossed 1e-10 at k=%lld, final %.2e", cross, t.final_err));
}

void criterion_3() {
    Stopwatch sw;
    double worst = 0.0;
    for (int s = 1; s <= 20; ++s) {
        DirectedGraph g;
        ObjectiveSuite suite;
        switch (s % 4) {
            case 0:
                g = fig1b_graph();
                suite = random_estimation_suite(5, 3, 2, 0.1, 100 + s);
                break;
            case 1:
                g = cycle3_graph();
                suite = rendezvous_suite({vec1(1), vec1(3), vec1(5)});
                break;
            case 2:
                g = pair_graph();
                suite = rendezvous_suite({vec1(0), vec1(4)});
                break;
            default:
                g = ring_graph(6);
                suite = random_estimation_suite(6, 2, 2, 0.1, 200 + s);
                break;
        }
        ScheduleConfig sc;
        sc.K = (s % 3 == 0) ? 1 : (s % 3 == 1 ? 3 : 10);
        sc.eta = 0.25;
        sc.lambda = 0.03;
        sc.seed = (std::uint64_t)s;
        ExecutionTrace t = run(suite, g, sc, 60);
        for (long long k = 0; k <= 60; ++k) {
            double r = relative_conservation_residual(t, k);
            REQUIRE(r <= 1e-10, "run " << s << " iteration " << k
                                       << " residual " << r);
            worst = std::max(worst, r);
        }
    }
    finish(3, "tracker mass conservation", sw, 5.0,
           fmt("20 runs, worst relative residual %.2e", worst));
}

void criterion_4() {
    Stopwatch sw;
    DirectedGraph g = fig1b_graph();
    const int d = 2;
    ScheduleConfig sc;
    sc.K = 500;  // half the sampled iterations in each regime
    sc.eta = 0.15;
    sc.lambda = 0.05;
    sc.seed = 555;
    for (long long k = 0; k < 1000; ++k) {
        IterationParameters P = sample_parameters(k, g, d, sc);
        ValidationReport rep = validate(P, P.phase, g, sc);
        REQUIRE(rep.ok(), "iteration " << k << " violates the schedule: "
                                       << rep.to_string());
    }

    // Locality: redrawing one node's blocks from a substituted stream must
    // leave every other node's blocks bit-identical.
    auto same_node_blocks = [&](const IterationParameters& a,
                                const IterationParameters& b, int j) {
        bool same = max_abs_diff(a.Lambda[j], b.Lambda[j]) == 0.0;
        for (std::size_t p = 0; p < a.Rrow[j].size(); ++p)
            same = same && max_abs_diff(a.Rrow[j][p], b.Rrow[j][p]) == 0.0 &&
                   max_abs_diff(a.Arow[j][p], b.Arow[j][p]) == 0.0;
        for (std::size_t p = 0; p < a.Ccol[j].size(); ++p)
            same = same && max_abs_diff(a.Ccol[j][p], b.Ccol[j][p]) == 0.0 &&
                   max_abs_diff(a.Bcol[j][p], b.Bcol[j][p]) == 0.0;
        return same;
    };
    for (long long k : {0LL, 4LL, 500LL, 999LL}) {
        IterationParameters base = sample_parameters(k, g, d, sc);
        for (int i = 0; i < g.n(); ++i) {
            IterationParameters mod = base;
            fill_node(mod, i, g, d, sc, sc.seed + 1000);
            REQUIRE(!same_node_blocks(mod, base, i),
                    "substituted stream left node " << i + 1 << " unchanged");
            for (int j = 0; j < g.n(); ++j)
                if (j != i)
                    REQUIRE(same_node_blocks(mod, base, j),
                            "redraw of node " << i + 1 << " leaked into node "
                                              << j + 1 << " at k=" << k);
        }
    }
    finish(4, "schedule validation and per-node locality", sw, 5.0,
           "1000 iterations, zero violations");
}

void criterion_5() {
    Stopwatch sw;
    DirectedGraph g = fig1b_graph();
    ObjectiveSuite suite = random_estimation_suite(5, 3, 2, 0.1, 31);
    const int n = 5, d = 2, T = 100;
    const double lam = 0.02;
    std::vector<NodeState> init = initialize(suite, g, {}, 31);

    // Direct matrix recursions, written independently of the engine's
    // per-node message loop. Rows of X/Y/G are nodes.
    auto grads_at = [&](const Eigen::MatrixXd& X) {
        Eigen::MatrixXd G(n, d);
        for (int i = 0; i < n; ++i)
            G.row(i) = suite.objectives[i].gradient(X.row(i).transpose())
                           .transpose();
        return G;
    };
    auto compare = [&](const ExecutionTrace& t, const char* name,
                       auto step_xy) {
        Eigen::MatrixXd X(n, d), Y(n, d);
        for (int i = 0; i < n; ++i) X.row(i) = init[i].x.transpose();
        Eigen::MatrixXd G = grads_at(X);
        Y = G;
        double worst = 0.0;
        for (long long k = 0; k <= T; ++k) {
            for (int i = 0; i < n; ++i) {
                const NodeState& s = k < T ? t.iters[(std::size_t)k].states[i]
                                           : t.final_states[i];
                worst = std::max(worst,
                                 max_abs_diff(X.row(i).transpose(), s.x));
                worst = std::max(worst,
                                 max_abs_diff(Y.row(i).transpose(), s.y));
            }
            if (k == T) break;
            step_xy(X, Y, G);
        }
        REQUIRE(worst <= 1e-12,
                name << " deviates from its direct recursion by " << worst);
        return worst;
    };

    Eigen::MatrixXd W = doubly_stochastic_weights(g);
    PresetWeights wd;
    wd.W = W;
    wd.lambda_per_node = Eigen::VectorXd::Constant(n, lam);
    ExecutionTrace diging = run_preset(suite, g, Preset::DIGing, wd, T, {}, 31);
    double worst_d = compare(diging, "diging",
                             [&](Eigen::MatrixXd& X, Eigen::MatrixXd& Y,
                                 Eigen::MatrixXd& G) {
                                 Eigen::MatrixXd Xn = W * X - lam * Y;
                                 Eigen::MatrixXd Gn = grads_at(Xn);
                                 Y = W * Y + Gn - G;
                                 X = Xn;
                                 G = Gn;
                             });

    // With constant (R, I, C, I) weights the x sequence also satisfies a
    // two-step recursion eliminating the tracker; the engine exposes the
    // residual of that identity.
    double extra = extra_equivalence_check(diging);
    REQUIRE(extra <= 1e-10, "two-step identity residual " << extra);

    Eigen::MatrixXd R = row_uniform_weights(g);
    Eigen::MatrixXd C = col_uniform_weights(g);
    PresetWeights wab;
    wab.R = R;
    wab.C = C;
    wab.lambda_per_node = Eigen::VectorXd::Constant(n, lam);
    ExecutionTrace ab = run_preset(suite, g, Preset::AB, wab, T, {}, 31);
    double worst_a = compare(ab, "ab",
                             [&](Eigen::MatrixXd& X, Eigen::MatrixXd& Y,
                                 Eigen::MatrixXd& G) {
                                 Eigen::MatrixXd Xn = R * X - lam * Y;
                                 Eigen::MatrixXd Gn = grads_at(Xn);
                                 Y = C * (Y + Gn - G);
                                 X = Xn;
                                 G = Gn;
                             });
    finish(5, "fixed-weight preset fidelity", sw, 1.0,
           fmt("diging %.1e, ab %.1e over %d iterations, identity residual "
               "%.1e", worst_d, worst_a, T, extra));
}

void criterion_6() {
    Stopwatch sw;
    ExperimentConfig cfg = load_config(g_configs + "/fig2.json");
    DirectedGraph g = make_graph(cfg.graph);
    ObjectiveSuite suite = make_suite(cfg.suite, cfg.seed);
    ExecutionTrace t = run(suite, g, cfg.schedule, cfg.T, cfg.init);
    InformationSet seen = collect_information(t, cfg.shift.coalition);

    RngStream deltas(404, RngDomain::Misc);
    RngStream probes(405, RngDomain::Misc);
    double worst_verify = 0.0, worst_step = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        GradientShift sh;
        sh.delta = vec1(deltas.uniform01() * 200.0 - 100.0);
        sh.target = cfg.shift.target;
        sh.counterpart = cfg.shift.counterpart;
        AlternativeExecution alt =
            construct_indistinguishable(t, suite, sh, cfg.shift.coalition);
        InformationSet other =
            collect_information(alt.trace, cfg.shift.coalition);
        double v = verify_indistinguishability(seen, other);
        REQUIRE(v <= 1e-12, "information sets differ by " << v << " at delta "
                                                          << sh.delta(0));
        worst_verify = std::max(worst_verify, v);
        for (std::size_t k = 1; k < t.iters.size(); ++k)
            for (int i = 0; i < g.n(); ++i) {
                double dx = max_abs_diff(alt.trace.iters[k].states[i].x,
                                         t.iters[k].states[i].x);
                double dy = max_abs_diff(alt.trace.iters[k].states[i].y,
                                         t.iters[k].states[i].y);
                REQUIRE(dx <= 1e-12 && dy <= 1e-12,
                        "states diverge at k=" << k << ": " << dx << "/" << dy);
                worst_step = std::max(worst_step, std::max(dx, dy));
            }
        for (int i = 0; i < g.n(); ++i) {
            worst_step = std::max(worst_step,
                                  max_abs_diff(alt.trace.final_states[i].x,
                                               t.final_states[i].x));
            worst_step = std::max(worst_step,
                                  max_abs_diff(alt.trace.final_states[i].y,
                                               t.final_states[i].y));
        }
        REQUIRE(worst_step <= 1e-12, "terminal states diverge " << worst_step);
        // The constructed objectives move the two gradients by exactly the
        // requested shift; both directions are a single rounded addition, so
        // the comparison is bit-exact.
        for (int p = 0; p < 10; ++p) {
            Eigen::VectorXd xp = vec1(probes.uniform01() * 10.0 - 5.0);
            Eigen::VectorXd want_t =
                suite.objectives[sh.target].gradient(xp) + sh.delta;
            Eigen::VectorXd want_c =
                suite.objectives[alt.counterpart].gradient(xp) - sh.delta;
            REQUIRE(max_abs_diff(alt.suite.objectives[sh.target].gradient(xp),
                                 want_t) == 0.0,
                    "target gradient probe " << p << " off");
            REQUIRE(max_abs_diff(
                        alt.suite.objectives[alt.counterpart].gradient(xp),
                        want_c) == 0.0,
                    "counterpart gradient probe " << p << " off");
        }
    }

    // A colluding coalition that still leaves one honest neighbor free.
    DirectedGraph g5 = fig1b_graph();
    ObjectiveSuite s5 =
        rendezvous_suite({vec1(1), vec1(2), vec1(3), vec1(4), vec1(5)});
    ScheduleConfig sc5;
    sc5.K = 3;
    sc5.eta = 0.3;
    sc5.lambda = 0.1;
    sc5.seed = 6;
    ExecutionTrace t5 = run(s5, g5, sc5, 100);
    GradientShift sh5;
    sh5.delta = vec1(7.5);
    sh5.target = 0;  // both out-neighbors collude; the in-neighbor is free
    std::vector<int> coalition{1, 2};
    AlternativeExecution alt5 = construct_indistinguishable(t5, s5, sh5,
                                                            coalition);
    REQUIRE(alt5.counterpart == 4, "expected the free in-neighbor, got "
                                       << alt5.counterpart + 1);
    double v5 = verify_indistinguishability(
        collect_information(t5, coalition),
        collect_information(alt5.trace, coalition));
    REQUIRE(v5 <= 1e-12, "colluding-case information sets differ by " << v5);

    finish(6, "indistinguishable alternative construction", sw, 10.0,
           fmt("100 shifts, worst verification gap %.1e, worst state gap "
               "%.1e, colluding case %.1e", worst_verify, worst_step, v5));
}

void criterion_7() {
    Stopwatch sw;
    ExperimentConfig cfg = load_config(g_configs + "/attack.json");
    DirectedGraph g = make_graph(cfg.graph);
    ObjectiveSuite suite = make_suite(cfg.suite, cfg.seed);
    ExecutionTrace t = run(suite, g, cfg.schedule, cfg.T, cfg.init);
    // attack_sole_neighbor only accepts the coalition's information set, so
    // the reconstruction below cannot read anything the adversary would not
    // have seen.
    InformationSet info = collect_information(t, cfg.attack.coalition);
    AttackResult res =
        attack_sole_neighbor(info, cfg.attack.target, cfg.attack.y_tol);
    REQUIRE(res.converged, "target tracker had not settled: "
                               << res.y_norm_estimate);
    REQUIRE(res.y_norm_estimate <= cfg.attack.y_tol,
            "tracker norm estimate " << res.y_norm_estimate);
    REQUIRE(res.estimate.size() == 1, "unexpected estimate dimension");
    double err = std::abs(res.estimate(0) - 2.0);
    REQUIRE(err <= 1e-6, "reconstructed gradient " << res.estimate(0)
                                                   << " misses 2 by " << err);
    finish(7, "sole-neighbor gradient reconstruction", sw, 1.0,
           fmt("estimate %.12f, error %.1e", res.estimate(0), err));
}

void criterion_8() {
    Stopwatch sw;
    ObjectiveSuite suite = random_estimation_suite(3, 3, 2, 0.1, 8);
    LemmaConstants c = lemma_constants(3, 0.4, suite.beta_bar, suite.alpha_F,
                                       suite.beta_F);
    REQUIRE(c.representable(), "window constants left the integer range");

    double rho0 = companion_rho(c, c.N_bar, 0.0);
    bool a = std::abs(rho0 - 1.0) <= 1e-9;
    std::printf("[%s] criterion 8a: spectral radius at zero stepsize, "
                "|rho-1| = %.2e\n", a ? "PASS" : "FAIL", std::abs(rho0 - 1.0));

    double expect = -c.alpha_F * std::pow(c.eta, c.n - 1) / c.n;
    double eps = 1e-8;
    double fd = (companion_rho(c, c.N_bar, eps) - rho0) / eps;
    bool b = std::abs(fd - expect) <= 1e-3 * std::abs(expect);
    std::printf("[%s] criterion 8b: radius slope at zero, measured %.6e vs "
                "predicted %.6e\n", b ? "PASS" : "FAIL", fd, expect);

    CertificateSweep sweep = find_certificate(c, c.N_bar);
    std::printf("[%s] criterion 8c: contracting stepsize exists, sweep "
                "minimum %.16f at lambda %.3e\n",
                sweep.found ? "PASS" : "FAIL", sweep.rho_min,
                sweep.lambda_best);

    if (!(a && b && sweep.found)) {
        std::printf(
            "note: at the measured curvature (beta_bar=%.3f, alpha_F=%.3f, "
            "beta_F=%.3f) the contraction window spans N_bar=%lld iterations "
            "with amplification Q_P=%.4e; the predicted slope %.3e is below "
            "the attainable resolution of the spectral radius near 1, so the "
            "finite-difference probe and the stepsize sweep drown in the "
            "quadratic term. The same machinery is verified against frozen "
            "references at synthetic constants in the unit suite.\n",
            c.beta_bar, c.alpha_F, c.beta_F, c.N_bar, c.Q_P, expect);
        std::fflush(stdout);
        std::fprintf(stderr,
                     "[FAIL] criterion 8 (stepsize certificate at measured "
                     "curvature): %d of 3 sub-checks hold, %.2fs\n",
                     (int)a + (int)b + (int)sweep.found, sw.elapsed());
        std::exit(1);
    }
    finish(8, "stepsize certificate at measured curvature", sw, 10.0,
           fmt("|rho(0)-1| = %.1e, slope %.3e, certified lambda %.3e",
               std::abs(rho0 - 1.0), fd, sweep.lambda_sup));
}

void criterion_9() {
    Stopwatch sw;
    DirectedGraph g = pair_graph();
    ObjectiveSuite suite = rendezvous_suite({vec1(0), vec1(4)});
    ScheduleConfig sc;
    sc.K = 3;
    sc.eta = 0.4;
    sc.lambda = 0.1;
    sc.seed = 13;
    const long long T = 353, upto = 203;  // 200 contracting-phase steps
    ExecutionTrace t = run(suite, g, sc, T);

    auto v = absolute_probability_v(t, upto);
    REQUIRE((long long)v.size() == upto - sc.K + 1,
            "unexpected probability sequence length " << v.size());
    const double floor = std::pow(sc.eta, g.n() - 1) / g.n();
    for (const auto& vk : v) {
        REQUIRE(std::abs(vk.sum() - 1.0) <= 1e-12, "sum " << vk.sum());
        REQUIRE(vk.minCoeff() >= floor,
                "entry " << vk.minCoeff() << " under the floor " << floor);
        REQUIRE(vk.maxCoeff() <= 1.0, "entry above 1");
    }
    double worst_rec = 0.0;
    for (long long k = sc.K; k < upto; ++k) {
        Eigen::MatrixXd P = p_matrix(t, k);
        for (int i = 0; i < g.n(); ++i)
            REQUIRE(std::abs(P.row(i).sum() - 1.0) <= 1e-12,
                    "row " << i + 1 << " of the reweighted matrix sums to "
                           << P.row(i).sum() << " at k=" << k);
        Eigen::RowVectorXd lhs = v[(std::size_t)(k - sc.K)].transpose();
        Eigen::RowVectorXd rhs =
            v[(std::size_t)(k + 1 - sc.K)].transpose() * P;
        double r = (lhs - rhs).cwiseAbs().maxCoeff();
        REQUIRE(r <= 1e-12, "chain rule residual " << r << " at k=" << k);
        worst_rec = std::max(worst_rec, r);
    }

    DiagnosticsSeries diag = diagnostics(t, 150);
    REQUIRE((long long)diag.delta_k.size() == 200,
            "expected 200 coupling scalars, got " << diag.delta_k.size());
    for (double dk : diag.delta_k)
        REQUIRE(dk >= floor && dk <= 1.0, "coupling scalar " << dk);
    finish(9, "absolute probability machinery", sw, 2.0,
           fmt("200 steps, floor %.2f respected, chain residual %.1e", floor,
               worst_rec));
}

void criterion_10() {
    Stopwatch sw;
    LemmaConstants c = lemma_constants(3, 0.1, 1.0, 3.0, 3.0);
    double rel = std::abs(c.Q_R - 612.121212121212) / 612.121212121212;
    REQUIRE(rel <= 1e-9, "Q_R " << c.Q_R << " off by " << rel);
    REQUIRE(c.N_R_exact, "minimal window not exactly representable");
    REQUIRE(contraction_factor(c, 'R', (double)c.N_R) < 1.0,
            "no contraction at the reported window " << c.N_R);
    REQUIRE(contraction_factor(c, 'R', (double)(c.N_R - 1)) >= 1.0,
            "window " << c.N_R << " is not minimal");
    finish(10, "contraction constants and window minimality", sw, 1.0,
           fmt("Q_R %.12f, window %lld minimal on both sides", c.Q_R, c.N_R));
}

void criterion_11() {
    Stopwatch sw;
    ExperimentConfig cfg = load_config(g_configs + "/fig7.json");
    DirectedGraph g = make_graph(cfg.graph);
    REQUIRE(g.n() == 100, "expected the hundred-node ring");
    ObjectiveSuite suite = make_suite(cfg.suite, cfg.seed);
    RunOptions lean;  // the error series is all this criterion consumes
    lean.record_params = false;
    lean.record_messages = false;
    lean.record_states = false;
    ExecutionTrace t = run(suite, g, cfg.schedule, cfg.T, cfg.init, {}, lean);
    auto errs = t.error_series();
    RateFit fit = fit_linear_rate(errs, 2000);
    REQUIRE(fit.goodness >= 0.95, "log-error tail goodness " << fit.goodness);
    REQUIRE(fit.rho_hat < 1.0, "fitted rate " << fit.rho_hat);
    REQUIRE(t.final_err < 0.5 * errs[2000],
            "error did not keep shrinking: " << t.final_err << " vs "
                                             << errs[2000]);
    finish(11, "hundred-node ring scalability", sw, 30.0,
           fmt("rate %.6f, fit %.4f, error %.1f -> %.1f over %lld iterations",
               fit.rho_hat, fit.goodness, errs[2000], t.final_err, cfg.T));
}

void criterion_12() {
    Stopwatch sw;
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "dgt_acceptance_rerun";
    fs::create_directories(dir);
    const char* names[] = {"fig4.json", "fig2.json", "attack.json"};
    for (const char* name : names) {
        ExperimentConfig cfg = load_config(g_configs + "/" + name);
        DirectedGraph g = make_graph(cfg.graph);
        ObjectiveSuite suite = make_suite(cfg.suite, cfg.seed);
        std::string first_trace, first_err;
        for (int rep = 0; rep < 2; ++rep) {
            ExecutionTrace t = run(suite, g, cfg.schedule, cfg.T, cfg.init);
            fs::path tp = dir / "trace.csv";
            fs::path ep = dir / "error.csv";
            write_trace_csv(t, tp.string());
            write_error_csv(t.error_series(), ep.string());
            if (rep == 0) {
                first_trace = slurp(tp);
                first_err = slurp(ep);
            } else {
                REQUIRE(slurp(tp) == first_trace,
                        name << ": trace CSV differs between reruns");
                REQUIRE(slurp(ep) == first_err,
                        name << ": error CSV differs between reruns");
            }
        }
        REQUIRE(!first_trace.empty() && !first_err.empty(),
                name << ": empty CSV output");
    }
    finish(12, "byte-identical reruns", sw, 10.0,
           "3 configurations, trace and error CSVs identical");
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance CRITERION [CONFIG_DIR]\n";
        return 2;
    }
    if (argc > 2) g_configs = argv[2];
    int crit = std::atoi(argv[1]);
    switch (crit) {
        case 1: criterion_1(); break;
        case 2: criterion_2(); break;
        case 3: criterion_3(); break;
        case 4: criterion_4(); break;
        case 5: criterion_5(); break;
        case 6: criterion_6(); break;
        case 7: criterion_7(); break;
        case 8: criterion_8(); break;
        case 9: criterion_9(); break;
        case 10: criterion_10(); break;
        case 11: criterion_11(); break;
        case 12: criterion_12(); break;
        default:
            std::cerr << "unknown criterion " << argv[1] << "\n";
            return 2;
    }
    return 0;
}
