#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "dgt/analysis.hpp"
#include "dgt/config.hpp"
#include "dgt/engine.hpp"
#include "dgt/errors.hpp"
#include "dgt/privacy.hpp"
#include "dgt/rng.hpp"
#include "dgt/svg.hpp"
#include "dgt/trace_io.hpp"

namespace fs = std::filesystem;
using namespace dgt;

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    bool quiet = false;
};

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Output paths resolve against --out; inputs resolve against the cwd.
std::string prepare(const CommonArgs& a, const std::string& rel) {
    fs::path p(rel);
    if (!p.is_absolute()) p = fs::path(a.out_dir) / p;
    if (!p.parent_path().empty()) fs::create_directories(p.parent_path());
    return p.string();
}

void note(const CommonArgs& a, const std::string& line) {
    if (!a.quiet) std::cout << line << "\n";
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("output: cannot open '" + path + "' for writing");
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
}

std::string vec_str(const Eigen::VectorXd& v) {
    std::string s = "[";
    for (int l = 0; l < v.size(); ++l) {
        if (l) s += ", ";
        s += format_double(v[l]);
    }
    return s + "]";
}

std::string nodes_str(std::vector<int> nodes) {
    std::sort(nodes.begin(), nodes.end());
    std::string s;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(nodes[i] + 1);
    }
    return s;
}

struct Experiment {
    DirectedGraph g;
    ObjectiveSuite suite;
    ExecutionTrace trace;
};

Experiment execute(const ExperimentConfig& cfg, RunOptions opts = {}) {
    Experiment e;
    e.g = make_graph(cfg.graph);
    e.suite = make_suite(cfg.suite, cfg.seed);
    e.trace = run(e.suite, e.g, cfg.schedule, cfg.T, cfg.init, cfg.seed, opts);
    e.trace.config_echo = cfg.echo;
    return e;
}

// Record only what the requested artifacts consume, so long horizons on
// large graphs stay in bounded memory when no sidecar is kept.
RunOptions options_for_outputs(const OutputSpec& o) {
    RunOptions opts;
    opts.record_params = o.sidecar;
    opts.record_messages = o.sidecar;
    opts.record_states = o.sidecar || !o.trace_csv.empty();
    return opts;
}

void write_run_artifacts(const ExecutionTrace& t, const ExperimentConfig& cfg,
                         const CommonArgs& a) {
    const OutputSpec& o = cfg.outputs;
    if (!o.trace_csv.empty()) {
        std::string p = prepare(a, o.trace_csv);
        write_trace_csv(t, p);
        note(a, "wrote " + p);
    }
    if (!o.error_csv.empty()) {
        std::string p = prepare(a, o.error_csv);
        write_error_csv(t.error_series(), p);
        note(a, "wrote " + p);
    }
    if (!o.svg.empty()) {
        std::string p = prepare(a, o.svg);
        write_log_chart_svg(p, "distance to optimum",
                            {{t.schedule_kind, t.error_series()}});
        note(a, "wrote " + p);
    }
    if (o.sidecar) {
        std::string p = prepare(a, o.sidecar_path);
        save_sidecar(t, p);
        note(a, "wrote " + p);
    }
}

int cmd_run(const ExperimentConfig& cfg, const CommonArgs& a) {
    Experiment e = execute(cfg, options_for_outputs(cfg.outputs));
    write_run_artifacts(e.trace, cfg, a);
    std::ostringstream s;
    s << "run: n=" << e.g.n() << " d=" << e.trace.d << " T=" << e.trace.T
      << " seed=" << e.trace.seed
      << " final_err=" << format_double(e.trace.final_err);
    note(a, s.str());
    return 0;
}

int cmd_attack(const ExperimentConfig& cfg, const CommonArgs& a) {
    ExecutionTrace trace;
    if (cfg.attack.input.empty()) {
        Experiment e = execute(cfg);
        write_run_artifacts(e.trace, cfg, a);
        trace = std::move(e.trace);
    } else {
        trace = load_sidecar(cfg.attack.input);
    }
    InformationSet info = collect_information(trace, cfg.attack.coalition);
    AttackResult r = attack_sole_neighbor(info, cfg.attack.target, cfg.attack.y_tol);

    if (!cfg.attack.estimate_csv.empty()) {
        std::ostringstream csv;
        csv << "l,estimate\n";
        for (int l = 0; l < r.estimate.size(); ++l)
            csv << l << "," << format_double(r.estimate[l]) << "\n";
        std::string p = prepare(a, cfg.attack.estimate_csv);
        write_text(p, csv.str());
        note(a, "wrote " + p);
    }
    note(a, "attack: coalition {" + nodes_str(cfg.attack.coalition) +
                "} target " + std::to_string(cfg.attack.target + 1));
    note(a, "estimated gradient at the limit: " + vec_str(r.estimate));
    note(a, "target tracker norm estimate: " +
                format_double(r.y_norm_estimate) +
                (r.converged ? " (settled)" : " (NOT settled; estimate is biased)"));
    return 0;
}

int cmd_replay(const ExperimentConfig& cfg, const CommonArgs& a) {
    if (cfg.shift.delta.size() == 0)
        throw ConfigError("shift.delta: required for replay");
    if (cfg.shift.coalition.empty())
        throw ConfigError("shift.coalition: required for replay");

    Experiment e = execute(cfg);
    write_run_artifacts(e.trace, cfg, a);

    GradientShift shift;
    shift.delta = cfg.shift.delta;
    shift.target = cfg.shift.target;
    shift.counterpart = cfg.shift.counterpart;
    AlternativeExecution alt =
        construct_indistinguishable(e.trace, e.suite, shift, cfg.shift.coalition);

    InformationSet seen = collect_information(e.trace, cfg.shift.coalition);
    InformationSet seen_alt = collect_information(alt.trace, cfg.shift.coalition);
    double maxdiff = verify_indistinguishability(seen, seen_alt);

    // States after the first iteration must coincide.
    const std::vector<NodeState>& s1 =
        e.trace.T >= 2 ? e.trace.iters[1].states : e.trace.final_states;
    const std::vector<NodeState>& s1_alt =
        alt.trace.T >= 2 ? alt.trace.iters[1].states : alt.trace.final_states;
    double dx = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < s1.size(); ++i) {
        dx = std::max(dx, (s1[i].x - s1_alt[i].x).cwiseAbs().maxCoeff());
        dy = std::max(dy, (s1[i].y - s1_alt[i].y).cwiseAbs().maxCoeff());
    }

    // The alternative objectives must differ by exactly +/- delta everywhere.
    RngStream rng(e.trace.seed, RngDomain::Misc, 0, 0);
    double probe_t = 0.0, probe_c = 0.0;
    for (int q = 0; q < 10; ++q) {
        Eigen::VectorXd x(e.trace.d);
        for (int l = 0; l < x.size(); ++l) x[l] = rng.uniform(cfg.init.lo, cfg.init.hi);
        Eigen::VectorXd dt = alt.suite.objectives[alt.target].gradient(x) -
                             e.suite.objectives[alt.target].gradient(x) -
                             shift.delta;
        Eigen::VectorXd dc = alt.suite.objectives[alt.counterpart].gradient(x) -
                             e.suite.objectives[alt.counterpart].gradient(x) +
                             shift.delta;
        probe_t = std::max(probe_t, dt.cwiseAbs().maxCoeff());
        probe_c = std::max(probe_c, dc.cwiseAbs().maxCoeff());
    }

    if (!cfg.shift.pairs_csv.empty()) {
        auto fa = seen.flatten();
        auto fb = seen_alt.flatten();
        std::ostringstream csv;
        csv << "k,field,value_original,value_alternative\n";
        for (std::size_t r = 0; r < fa.size(); ++r) {
            const auto& [k, name, v] = fa[r];
            const Eigen::VectorXd& w = std::get<2>(fb[r]);
            for (int l = 0; l < v.size(); ++l)
                csv << k << "," << name << "." << l << ","
                    << format_double(v[l]) << "," << format_double(w[l]) << "\n";
        }
        std::string p = prepare(a, cfg.shift.pairs_csv);
        write_text(p, csv.str());
        note(a, "wrote " + p);
    }

    std::ostringstream rep;
    rep << "indistinguishability report\n";
    rep << "coalition: {" << nodes_str(cfg.shift.coalition) << "}\n";
    rep << "target: " << alt.target + 1 << "  counterpart: " << alt.counterpart + 1
        << "\n";
    rep << "delta: " << vec_str(shift.delta) << "\n";
    rep << "T: " << e.trace.T << "  K: " << e.trace.schedule.K << "\n";
    rep << "max information-set difference: " << format_double(maxdiff) << "\n";
    rep << "one-step state agreement: max|dx^1| = " << format_double(dx)
        << "  max|dy^1| = " << format_double(dy) << "\n";
    rep << "gradient probes (10 points): max|shift(target) - delta| = "
        << format_double(probe_t) << "  max|shift(counterpart) + delta| = "
        << format_double(probe_c) << "\n";
    if (!cfg.shift.report.empty()) {
        std::string p = prepare(a, cfg.shift.report);
        write_text(p, rep.str());
        note(a, "wrote " + p);
    }
    if (!a.quiet) std::cout << rep.str();
    return 0;
}

int cmd_analyze(const ExperimentConfig& cfg, const CommonArgs& a) {
    ObjectiveSuite suite = make_suite(cfg.suite, cfg.seed);
    ExecutionTrace trace;
    if (cfg.analyze.input.empty()) {
        Experiment e = execute(cfg);
        write_run_artifacts(e.trace, cfg, a);
        trace = std::move(e.trace);
    } else {
        trace = load_sidecar(cfg.analyze.input);
    }
    const long long T = trace.T;
    const int n = trace.graph.n();
    const AnalyzeSpec& an = cfg.analyze;

    std::ostringstream rep;
    rep << "analysis summary\n";
    rep << "trace: n=" << n << " d=" << trace.d << " T=" << T
        << " K=" << trace.schedule.K << " eta=" << format_double(trace.schedule.eta)
        << " lambda=" << format_double(trace.schedule.lambda)
        << " seed=" << trace.seed << " schedule=" << trace.schedule_kind << "\n";
    if (trace.has_optimum)
        rep << "final stacked error: " << format_double(trace.final_err) << "\n";

    rep << "\n[conservation]\n";
    {
        double max_abs = 0.0, max_rel = 0.0;
        std::ostringstream csv;
        csv << "k,absolute,relative\n";
        for (long long k = 0; k <= T; ++k) {
            double ab = conservation_residual(trace, k);
            double rel = relative_conservation_residual(trace, k);
            max_abs = std::max(max_abs, ab);
            max_rel = std::max(max_rel, rel);
            csv << k << "," << format_double(ab) << "," << format_double(rel)
                << "\n";
        }
        if (!an.conservation_csv.empty()) {
            std::string p = prepare(a, an.conservation_csv);
            write_text(p, csv.str());
            note(a, "wrote " + p);
        }
        rep << "max absolute residual: " << format_double(max_abs) << "\n";
        rep << "max relative residual: " << format_double(max_rel) << "\n";
    }

    rep << "\n[rate fit]\n";
    if (!trace.has_optimum) {
        rep << "unavailable: the suite records no optimum\n";
    } else {
        long long burn = an.burn_in >= 0 ? an.burn_in : trace.schedule.K + 1;
        try {
            RateFit f = fit_linear_rate(trace.error_series(), burn, an.floor_value);
            rep << "burn_in=" << burn << " used_points=" << f.used_points
                << " rho_hat=" << format_double(f.rho_hat)
                << " intercept=" << format_double(f.intercept)
                << " goodness=" << format_double(f.goodness)
                << (f.truncated_at_floor ? " (stopped at the floor)" : "") << "\n";
        } catch (const Error& ex) {
            rep << "unavailable: " << ex.what() << "\n";
        }
    }

    rep << "\n[absolute probability]\n";
    try {
        std::vector<Eigen::VectorXd> v = absolute_probability_v(trace, T);
        const long long K = trace.schedule.K;
        double vmin = 1.0, vmax = 0.0, sum_dev = 0.0, rel_dev = 0.0, row_dev = 0.0;
        for (const auto& vk : v) {
            vmin = std::min(vmin, vk.minCoeff());
            vmax = std::max(vmax, vk.maxCoeff());
            sum_dev = std::max(sum_dev, std::abs(vk.sum() - 1.0));
        }
        for (long long k = K; k < T; ++k) {
            Eigen::MatrixXd P = p_matrix(trace, k);
            row_dev = std::max(row_dev,
                               (P.rowwise().sum().array() - 1.0).abs().maxCoeff());
            Eigen::VectorXd lhs = v[k - K];
            Eigen::VectorXd rhs = P.transpose() * v[k - K + 1];
            rel_dev = std::max(rel_dev, (lhs - rhs).cwiseAbs().maxCoeff());
        }
        double lower = std::pow(trace.schedule.eta, n - 1) / n;
        rep << "k range " << K << ".." << T << ": entries in ["
            << format_double(vmin) << ", " << format_double(vmax)
            << "], lower bound " << format_double(lower)
            << (vmin >= lower - 1e-15 && vmax <= 1.0 + 1e-15 ? " (holds)"
                                                             : " (VIOLATED)")
            << "\n";
        rep << "max |sum(v) - 1| = " << format_double(sum_dev) << "\n";
        rep << "max one-step relation residual = " << format_double(rel_dev)
            << ", max row-sum deviation = " << format_double(row_dev) << "\n";

        if (!an.vphi_csv.empty()) {
            std::ostringstream csv;
            csv << "k,v_min,v_max,v_sum,phi_truncation\n";
            for (long long k = K; k <= T; ++k) {
                const Eigen::VectorXd& vk = v[k - K];
                csv << k << "," << format_double(vk.minCoeff()) << ","
                    << format_double(vk.maxCoeff()) << ","
                    << format_double(vk.sum()) << ",";
                if (k + an.L <= T) {
                    PhiResult phi = approx_phi(trace, k, an.L, 1e300);
                    csv << format_double(phi.truncation_estimate);
                }
                csv << "\n";
            }
            std::string p = prepare(a, an.vphi_csv);
            write_text(p, csv.str());
            note(a, "wrote " + p);
        }
    } catch (const Error& ex) {
        rep << "unavailable: " << ex.what() << "\n";
    }

    rep << "\n[one-step bounds]\n";
    bool have_constants = false;
    LemmaConstants c;
    try {
        c = lemma_constants(n, trace.schedule.eta, suite.beta_bar, suite.alpha_F,
                            suite.beta_F);
        have_constants = true;
    } catch (const Error& ex) {
        rep << "constants unavailable: " << ex.what() << "\n";
    }
    if (have_constants) {
        try {
            std::vector<InequalityCheck> checks =
                lemma_inequality_checks(trace, c, an.L, an.phi_tol);
            std::ostringstream csv;
            csv << "which,k,lhs,rhs,holds\n";
            long long held[3] = {0, 0, 0}, total[3] = {0, 0, 0};
            for (const auto& ch : checks) {
                int idx = ch.which == "consensus" ? 0 : ch.which == "gap" ? 1 : 2;
                ++total[idx];
                if (ch.holds) ++held[idx];
                csv << ch.which << "," << ch.k << "," << format_double(ch.lhs)
                    << "," << format_double(ch.rhs) << "," << (ch.holds ? 1 : 0)
                    << "\n";
            }
            if (!an.inequalities_csv.empty()) {
                std::string p = prepare(a, an.inequalities_csv);
                write_text(p, csv.str());
                note(a, "wrote " + p);
            }
            if (checks.empty()) {
                rep << "no applicable iterations (window N_bar="
                    << (c.N_bar >= 0 ? std::to_string(c.N_bar) : "unrepresentable")
                    << " against T=" << T << ")\n";
            } else {
                const char* names[3] = {"consensus", "gap", "tracker"};
                for (int i = 0; i < 3; ++i)
                    rep << names[i] << ": " << held[i] << "/" << total[i]
                        << " hold\n";
            }
        } catch (const Error& ex) {
            rep << "unavailable: " << ex.what() << "\n";
        }
    }

    rep << "\n[stability certificate]\n";
    if (have_constants) {
        rep << "beta_bar=" << format_double(c.beta_bar)
            << " alpha_F=" << format_double(c.alpha_F)
            << " beta_F=" << format_double(c.beta_F) << "\n";
        rep << "log Q_R=" << format_double(c.log_Q_R)
            << " log Q_P=" << format_double(c.log_Q_P)
            << (c.overflow ? " (overflow)" : "") << "\n";
        if (!c.representable()) {
            rep << "vacuous: the minimal window is not representable at this "
                   "(n, eta); N_R ~ "
                << format_double(c.N_R_approx) << ", N_P ~ "
                << format_double(c.N_P_approx) << "\n";
        } else {
            rep << "N_R=" << c.N_R << " r_R=" << format_double(c.r_R)
                << "  N_P=" << c.N_P << " r_P=" << format_double(c.r_P)
                << "  N_bar=" << c.N_bar << "\n";
            double rho0 = companion_rho(c, c.N_bar, 0.0);
            rep << "rho(M(0)) = " << format_double(rho0) << "\n";
            CertificateSweep sw = find_certificate(c, c.N_bar);
            if (sw.found) {
                rep << "certified: rho < 1 up to lambda_sup="
                    << format_double(sw.lambda_sup)
                    << "; best rho=" << format_double(sw.rho_min)
                    << " at lambda=" << format_double(sw.lambda_best) << "\n";
            } else {
                rep << "no stepsize certified by the sweep (min rho = "
                    << format_double(sw.rho_min)
                    << " at lambda = " << format_double(sw.lambda_best) << ")\n";
            }
        }
    }

    if (!an.summary.empty()) {
        std::string p = prepare(a, an.summary);
        write_text(p, rep.str());
        note(a, "wrote " + p);
    }
    if (!a.quiet) std::cout << rep.str();
    return 0;
}

int cmd_compare(const ExperimentConfig& cfg, const CommonArgs& a) {
    DirectedGraph g = make_graph(cfg.graph);
    ObjectiveSuite suite = make_suite(cfg.suite, cfg.seed);
    std::optional<Eigen::MatrixXd> W, R, C;
    std::vector<SvgSeries> series;

    for (const std::string& name : cfg.compare.members) {
        ExecutionTrace t;
        if (name == "two-phase") {
            ScheduleConfig sc = cfg.schedule;
            sc.seed = cfg.seed ^ fnv1a64(name);
            t = run(suite, g, sc, cfg.T, cfg.init, cfg.seed);
        } else {
            Preset p = preset_from_string(name);
            bool wants_doubly = p == Preset::AugDGM || p == Preset::DIGing ||
                                p == Preset::ATCDIGing || p == Preset::AsynDGM;
            PresetWeights w;
            if (wants_doubly) {
                if (!W) W = doubly_stochastic_weights(g);
                w.W = W;
            } else {
                if (!R) R = row_uniform_weights(g);
                if (!C) C = col_uniform_weights(g);
                w.R = R;
                w.C = C;
            }
            w.lambda_per_node =
                Eigen::VectorXd::Constant(g.n(), cfg.schedule.lambda);
            t = run_preset(suite, g, p, w, cfg.T, cfg.init, cfg.seed);
        }
        std::ostringstream line;
        line << name << ": final_err=" << format_double(t.final_err);
        note(a, line.str());
        series.push_back({name, t.error_series()});
    }

    if (!cfg.compare.csv.empty()) {
        std::ostringstream csv;
        csv << "k";
        for (const auto& s : series) csv << "," << s.label;
        csv << "\n";
        for (long long k = 0; k <= cfg.T; ++k) {
            csv << k;
            for (const auto& s : series)
                csv << ","
                    << format_double(s.values[static_cast<std::size_t>(k)]);
            csv << "\n";
        }
        std::string p = prepare(a, cfg.compare.csv);
        write_text(p, csv.str());
        note(a, "wrote " + p);
    }
    if (!cfg.compare.svg.empty()) {
        std::string p = prepare(a, cfg.compare.svg);
        write_log_chart_svg(p, "distance to optimum", series);
        note(a, "wrote " + p);
    }
    return 0;
}

// 0 success, 2 bad configuration or inputs, 3 numeric failure,
// 4 privacy precondition violated.
int classify(const std::exception& e) {
    if (dynamic_cast<const NoCounterpart*>(&e) ||
        dynamic_cast<const TopologyMismatch*>(&e) ||
        dynamic_cast<const DenominatorNearZero*>(&e) ||
        dynamic_cast<const StructureMismatch*>(&e))
        return 4;
    if (dynamic_cast<const NonFiniteState*>(&e) ||
        dynamic_cast<const SingularGlobalHessian*>(&e) ||
        dynamic_cast<const DimensionTooLarge*>(&e) ||
        dynamic_cast<const SeriesTooShort*>(&e) ||
        dynamic_cast<const NonPositiveError*>(&e) ||
        dynamic_cast<const BufferTooShort*>(&e))
        return 3;
    if (dynamic_cast<const Error*>(&e)) return 2;
    return 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulator for decentralized gradient-tracking optimization "
                 "with randomized weight schedules"};
    app.require_subcommand(1);

    CommonArgs args;
    std::uint64_t seed_val = 0;
    std::vector<CLI::Option*> seed_opts;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", args.config_path, "JSON experiment config")
            ->required();
        seed_opts.push_back(
            cmd->add_option("--seed", seed_val, "override the config's base seed"));
        cmd->add_option("--out", args.out_dir, "directory for output artifacts");
        cmd->add_flag("--quiet", args.quiet, "suppress console output");
    };

    CLI::App* c_run =
        app.add_subcommand("run", "execute an experiment and write its artifacts");
    CLI::App* c_attack = app.add_subcommand(
        "attack", "sole-neighbor gradient inference from a coalition's view");
    CLI::App* c_replay = app.add_subcommand(
        "replay", "construct and verify an indistinguishable alternative run");
    CLI::App* c_analyze =
        app.add_subcommand("analyze", "post-hoc diagnostics over a trace");
    CLI::App* c_compare = app.add_subcommand(
        "compare", "error series of several algorithms on one problem");
    for (CLI::App* cmd : {c_run, c_attack, c_replay, c_analyze, c_compare})
        add_common(cmd);

    CLI::App* c_presets = app.add_subcommand("presets", "preset utilities");
    c_presets->require_subcommand(1);
    CLI::App* c_list =
        c_presets->add_subcommand("list", "list runnable algorithm presets");

    CLI11_PARSE(app, argc, argv);

    if (c_list->parsed()) {
        std::cout << "two-phase\n";
        for (const std::string& name : preset_names()) std::cout << name << "\n";
        return 0;
    }

    for (CLI::Option* o : seed_opts)
        if (o->count() > 0) args.seed = seed_val;

    try {
        ExperimentConfig cfg = load_config(args.config_path, args.seed);
        if (c_run->parsed()) return cmd_run(cfg, args);
        if (c_attack->parsed()) return cmd_attack(cfg, args);
        if (c_replay->parsed()) return cmd_replay(cfg, args);
        if (c_analyze->parsed()) return cmd_analyze(cfg, args);
        if (c_compare->parsed()) return cmd_compare(cfg, args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return classify(e);
    }
    return 0;
}
