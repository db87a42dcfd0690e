// Python bindings for the gradient-tracking simulator. Exposes the graph
// builders, objective suites, the two-phase and preset runners, the recorded
// trace, the eavesdropper attack and indistinguishability construction, and
// the convergence-analysis toolkit. Thin lambdas only; all logic lives in
// the C++ core.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dgt/analysis.hpp"
#include "dgt/engine.hpp"
#include "dgt/errors.hpp"
#include "dgt/graph.hpp"
#include "dgt/objectives.hpp"
#include "dgt/privacy.hpp"
#include "dgt/trace_io.hpp"
#include "dgt/weights.hpp"

namespace py = pybind11;
using namespace dgt;

namespace {

NoiseKind noise_kind_from(const std::string& s) {
    if (s == "gaussian") return NoiseKind::Gaussian;
    if (s == "laplace") return NoiseKind::Laplace;
    if (s == "uniform") return NoiseKind::Uniform;
    throw ConfigError("unknown noise kind: " + s);
}

std::string noise_kind_name(NoiseKind k) {
    switch (k) {
        case NoiseKind::Gaussian: return "gaussian";
        case NoiseKind::Laplace: return "laplace";
        case NoiseKind::Uniform: return "uniform";
    }
    return "gaussian";
}

void check_node(const ObjectiveSuite& s, int i) {
    if (i < 0 || i >= s.n())
        throw IndexOutOfRange("node index " + std::to_string(i) +
                              " out of range for n=" + std::to_string(s.n()));
}

// k in [0, T]; k == T resolves to the terminal snapshot.
const NodeState& state_at(const ExecutionTrace& t, long long k, int i) {
    if (k < 0 || k > t.T)
        throw IndexOutOfRange("iteration " + std::to_string(k) +
                              " out of range for T=" + std::to_string(t.T));
    const std::vector<NodeState>& states =
        (k == t.T) ? t.final_states : t.iters[static_cast<size_t>(k)].states;
    if (states.empty())
        throw Error("trace was recorded without per-node states");
    if (i < 0 || i >= static_cast<int>(states.size()))
        throw IndexOutOfRange("node index " + std::to_string(i) +
                              " out of range");
    return states[static_cast<size_t>(i)];
}

const Eigen::VectorXd& grad_at(const ExecutionTrace& t, long long k, int i) {
    if (k < 0 || k > t.T)
        throw IndexOutOfRange("iteration " + std::to_string(k) +
                              " out of range for T=" + std::to_string(t.T));
    const std::vector<Eigen::VectorXd>& grads =
        (k == t.T) ? t.final_grads : t.iters[static_cast<size_t>(k)].grads;
    if (grads.empty())
        throw Error("trace was recorded without per-node gradients");
    if (i < 0 || i >= static_cast<int>(grads.size()))
        throw IndexOutOfRange("node index " + std::to_string(i) +
                              " out of range");
    return grads[static_cast<size_t>(i)];
}

RunOptions make_options(bool record_params, bool record_messages,
                        bool record_states) {
    RunOptions o;
    o.record_params = record_params;
    o.record_messages = record_messages;
    o.record_states = record_states;
    return o;
}

PresetWeights make_preset_weights(const DirectedGraph& g,
                                  std::optional<Eigen::MatrixXd> W,
                                  std::optional<Eigen::MatrixXd> R,
                                  std::optional<Eigen::MatrixXd> C,
                                  double lam,
                                  std::optional<Eigen::VectorXd> lam_per_node) {
    PresetWeights w;
    w.W = std::move(W);
    w.R = std::move(R);
    w.C = std::move(C);
    w.lambda_per_node =
        lam_per_node ? *lam_per_node : Eigen::VectorXd::Constant(g.n(), lam);
    return w;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() =
        "Decentralized gradient tracking over directed graphs with randomized "
        "two-phase weight schedules: simulation, eavesdropper analysis, and "
        "convergence diagnostics.";

    py::register_exception<Error>(m, "Error");

    // ---- graphs ----
    py::class_<DirectedGraph>(m, "DirectedGraph")
        .def_property_readonly("n", &DirectedGraph::n)
        .def_property_readonly("edges",
                               [](const DirectedGraph& g) { return g.edges(); })
        .def("in_neighbors",
             [](const DirectedGraph& g, int i) { return g.in_neighbors(i); },
             py::arg("i"))
        .def("out_neighbors",
             [](const DirectedGraph& g, int j) { return g.out_neighbors(j); },
             py::arg("j"))
        .def("in_closure",
             [](const DirectedGraph& g, int i) { return g.in_closure(i); },
             py::arg("i"))
        .def("out_closure",
             [](const DirectedGraph& g, int j) { return g.out_closure(j); },
             py::arg("j"))
        .def("has_edge", &DirectedGraph::has_edge, py::arg("receiver"),
             py::arg("sender"))
        .def("hash", &DirectedGraph::hash)
        .def("__repr__", [](const DirectedGraph& g) {
            return "DirectedGraph(n=" + std::to_string(g.n()) + ", edges=" +
                   std::to_string(g.edges().size()) + ")";
        });

    m.def("build_graph", &build_graph, py::arg("n"), py::arg("edges"),
          "Directed graph from (receiver, sender) pairs; must be strongly "
          "connected, no self edges.");
    m.def("ring_graph", &ring_graph, py::arg("n"));
    m.def("fig1b_graph", &fig1b_graph);
    m.def("cycle3_graph", &cycle3_graph);
    m.def("pair_graph", &pair_graph);

    // ---- objective suites ----
    py::class_<ObjectiveSuite>(m, "ObjectiveSuite")
        .def_property_readonly("n", &ObjectiveSuite::n)
        .def_property_readonly("d", &ObjectiveSuite::d)
        .def_readonly("alpha_F", &ObjectiveSuite::alpha_F)
        .def_readonly("beta_F", &ObjectiveSuite::beta_F)
        .def_readonly("beta_bar", &ObjectiveSuite::beta_bar)
        .def_readonly("has_optimum", &ObjectiveSuite::has_optimum)
        .def_readonly("x_star", &ObjectiveSuite::x_star)
        .def("value",
             [](const ObjectiveSuite& s, int i, const Eigen::VectorXd& x) {
                 check_node(s, i);
                 return s.objectives[static_cast<size_t>(i)].value(x);
             },
             py::arg("i"), py::arg("x"), "Local objective value at node i.")
        .def("gradient",
             [](const ObjectiveSuite& s, int i, const Eigen::VectorXd& x) {
                 check_node(s, i);
                 return s.objectives[static_cast<size_t>(i)].gradient(x);
             },
             py::arg("i"), py::arg("x"), "Local gradient at node i.")
        .def("global_value", &ObjectiveSuite::global_value, py::arg("x"))
        .def("global_gradient", &ObjectiveSuite::global_gradient, py::arg("x"))
        .def("__repr__", [](const ObjectiveSuite& s) {
            return "ObjectiveSuite(n=" + std::to_string(s.n()) +
                   ", d=" + std::to_string(s.d()) + ")";
        });

    m.def("rendezvous_suite", &rendezvous_suite, py::arg("positions"),
          "f_i(x) = 1/2 ||x - p_i||^2; optimum is the centroid.");
    m.def("estimation_suite", &estimation_suite, py::arg("Q"), py::arg("z"),
          py::arg("sigma"),
          "f_i(x) = ||z_i - Q_i x||^2 + sigma_i ||x||^2 with exact optimum.");
    m.def("random_estimation_suite", &random_estimation_suite, py::arg("n"),
          py::arg("s"), py::arg("d"), py::arg("sigma"), py::arg("seed"),
          "Estimation suite with standard-normal Q_i, z_i from the seed.");

    // ---- schedules and per-iteration weights ----
    py::class_<ScheduleConfig>(m, "Schedule")
        .def(py::init([](int K, double eta, double lam, std::uint64_t seed,
                         const std::string& noise, double a, double b) {
                 ScheduleConfig c;
                 c.K = K;
                 c.eta = eta;
                 c.lambda = lam;
                 c.seed = seed;
                 c.private_distribution.kind = noise_kind_from(noise);
                 c.private_distribution.a = a;
                 c.private_distribution.b = b;
                 return c;
             }),
             py::arg("K") = 3, py::arg("eta") = 0.1, py::arg("lam") = 0.06,
             py::arg("seed") = 1, py::arg("noise") = "gaussian",
             py::arg("a") = 0.0, py::arg("b") = 1.0)
        .def_readwrite("K", &ScheduleConfig::K)
        .def_readwrite("eta", &ScheduleConfig::eta)
        .def_readwrite("lam", &ScheduleConfig::lambda)
        .def_readwrite("seed", &ScheduleConfig::seed)
        .def_property(
            "noise",
            [](const ScheduleConfig& c) {
                return noise_kind_name(c.private_distribution.kind);
            },
            [](ScheduleConfig& c, const std::string& s) {
                c.private_distribution.kind = noise_kind_from(s);
            })
        .def_property(
            "noise_a",
            [](const ScheduleConfig& c) { return c.private_distribution.a; },
            [](ScheduleConfig& c, double v) { c.private_distribution.a = v; })
        .def_property(
            "noise_b",
            [](const ScheduleConfig& c) { return c.private_distribution.b; },
            [](ScheduleConfig& c, double v) { c.private_distribution.b = v; })
        .def("__repr__", [](const ScheduleConfig& c) {
            return "Schedule(K=" + std::to_string(c.K) +
                   ", eta=" + std::to_string(c.eta) +
                   ", lam=" + std::to_string(c.lambda) +
                   ", seed=" + std::to_string(c.seed) + ")";
        });

    py::class_<IterationParameters>(m, "IterationParameters")
        .def_readonly("k", &IterationParameters::k)
        .def_property_readonly("phase", [](const IterationParameters& P) {
            return P.phase == Phase::Private ? std::string("private")
                                             : std::string("stochastic");
        });

    m.def("sample_parameters", &sample_parameters, py::arg("k"), py::arg("graph"),
          py::arg("d"), py::arg("schedule"),
          "Weights of iteration k; pure function of (seed, k, graph, d).");
    m.def("validate_parameters",
          [](const IterationParameters& P, const DirectedGraph& g,
             const ScheduleConfig& cfg, double tol) {
              return validate(P, P.phase, g, cfg, tol).to_string();
          },
          py::arg("params"), py::arg("graph"), py::arg("schedule"),
          py::arg("tol") = 1e-12,
          "Empty string when the draw satisfies its phase constraints; "
          "otherwise one line per violation.");
    m.def("scalar_matrix", &scalar_matrix, py::arg("params"), py::arg("graph"),
          py::arg("family"),
          "n x n matrix of the scalar parts of family 'R', 'A', 'C', 'B' or 'L'.");
    m.def("row_uniform_weights", &row_uniform_weights, py::arg("graph"));
    m.def("col_uniform_weights", &col_uniform_weights, py::arg("graph"));
    m.def("doubly_stochastic_weights", &doubly_stochastic_weights,
          py::arg("graph"), py::arg("tol") = 1e-13,
          py::arg("max_iters") = 200000);

    // ---- runs and traces ----
    py::class_<ExecutionTrace>(m, "Trace")
        .def_readonly("T", &ExecutionTrace::T)
        .def_readonly("d", &ExecutionTrace::d)
        .def_readonly("seed", &ExecutionTrace::seed)
        .def_readonly("schedule_kind", &ExecutionTrace::schedule_kind)
        .def_readonly("has_optimum", &ExecutionTrace::has_optimum)
        .def_readonly("x_star", &ExecutionTrace::x_star)
        .def_readonly("final_err", &ExecutionTrace::final_err)
        .def_readonly("full_record", &ExecutionTrace::full_record)
        .def_readonly("graph", &ExecutionTrace::graph)
        .def_readonly("schedule", &ExecutionTrace::schedule)
        .def_property_readonly(
            "n", [](const ExecutionTrace& t) { return t.graph.n(); })
        .def("error_series", &ExecutionTrace::error_series,
             "Stacked distance to the optimum for k = 0..T.")
        .def("x",
             [](const ExecutionTrace& t, long long k, int i) {
                 return state_at(t, k, i).x;
             },
             py::arg("k"), py::arg("i"), "Decision variable of node i at k.")
        .def("y",
             [](const ExecutionTrace& t, long long k, int i) {
                 return state_at(t, k, i).y;
             },
             py::arg("k"), py::arg("i"), "Gradient tracker of node i at k.")
        .def("gradient",
             [](const ExecutionTrace& t, long long k, int i) {
                 return grad_at(t, k, i);
             },
             py::arg("k"), py::arg("i"), "Local gradient of node i at x_i^k.")
        .def("params",
             [](const ExecutionTrace& t, long long k) {
                 if (k < 0 || k >= t.T)
                     throw IndexOutOfRange("iteration " + std::to_string(k) +
                                           " out of range");
                 if (!t.full_record)
                     throw Error("trace was recorded without parameters");
                 return t.iters[static_cast<size_t>(k)].params;
             },
             py::arg("k"))
        .def("__repr__", [](const ExecutionTrace& t) {
            return "Trace(" + t.schedule_kind + ", n=" +
                   std::to_string(t.graph.n()) + ", T=" + std::to_string(t.T) +
                   ")";
        });

    m.def(
        "run",
        [](const ObjectiveSuite& suite, const DirectedGraph& g,
           const ScheduleConfig& sched, long long T, double lo, double hi,
           std::optional<std::uint64_t> init_seed, bool record_params,
           bool record_messages, bool record_states) {
            InitBox box;
            box.lo = lo;
            box.hi = hi;
            return run(suite, g, sched, T, box, init_seed,
                       make_options(record_params, record_messages,
                                    record_states));
        },
        py::arg("suite"), py::arg("graph"), py::arg("schedule"), py::arg("T"),
        py::arg("lo") = -5.0, py::arg("hi") = 5.0,
        py::arg("init_seed") = py::none(), py::arg("record_params") = true,
        py::arg("record_messages") = true, py::arg("record_states") = true,
        "Run T iterations of the two-phase protocol. init_seed defaults to "
        "the schedule seed.");

    m.def("preset_names", &preset_names,
          "Names accepted by run_preset, in canonical order.");

    m.def(
        "run_preset",
        [](const ObjectiveSuite& suite, const DirectedGraph& g,
           const std::string& name, long long T,
           std::optional<Eigen::MatrixXd> W, std::optional<Eigen::MatrixXd> R,
           std::optional<Eigen::MatrixXd> C, double lam,
           std::optional<Eigen::VectorXd> lam_per_node, double lo, double hi,
           std::optional<std::uint64_t> init_seed) {
            PresetWeights w = make_preset_weights(g, std::move(W), std::move(R),
                                                  std::move(C), lam,
                                                  std::move(lam_per_node));
            InitBox box;
            box.lo = lo;
            box.hi = hi;
            return run_preset(suite, g, preset_from_string(name), w, T, box,
                              init_seed);
        },
        py::arg("suite"), py::arg("graph"), py::arg("name"), py::arg("T"),
        py::arg("W") = py::none(), py::arg("R") = py::none(),
        py::arg("C") = py::none(), py::arg("lam") = 0.01,
        py::arg("lam_per_node") = py::none(), py::arg("lo") = -5.0,
        py::arg("hi") = 5.0, py::arg("init_seed") = py::none(),
        "Fixed-weight instantiation of a known gradient-tracking method. "
        "Omitted W/R/C matrices fall back to the uniform/Sinkhorn weights of "
        "the graph.");

    m.def("replay", &replay, py::arg("trace"), py::arg("suite"),
          "Re-run a fully recorded trace through its stored parameters; "
          "matches the original bit for bit.");
    m.def("extra_equivalence_check", &extra_equivalence_check, py::arg("trace"),
          "Largest residual of the collapsed two-step recursion for constant "
          "(R, I, C, I) weights with a uniform stepsize.");

    m.def("save_sidecar", &save_sidecar, py::arg("trace"), py::arg("path"));
    m.def("load_sidecar", &load_sidecar, py::arg("path"));
    m.def("write_trace_csv", &write_trace_csv, py::arg("trace"),
          py::arg("path"));
    m.def("write_error_csv", &write_error_csv, py::arg("errs"), py::arg("path"));

    // ---- eavesdropper analysis ----
    py::class_<InformationSet>(m, "InformationSet")
        .def_readonly("members", &InformationSet::members)
        .def_readonly("T", &InformationSet::T)
        .def_readonly("K", &InformationSet::K)
        .def_readonly("d", &InformationSet::d)
        .def("flatten", &InformationSet::flatten,
             "Canonical (k, field, value) sequence of everything observed.");

    m.def("collect_information", &collect_information, py::arg("trace"),
          py::arg("members"),
          "Everything an honest-but-curious coalition observes in a fully "
          "recorded run.");

    py::class_<AttackResult>(m, "AttackResult")
        .def_readonly("estimate", &AttackResult::estimate)
        .def_readonly("converged", &AttackResult::converged)
        .def_readonly("y_norm_estimate", &AttackResult::y_norm_estimate);

    m.def("attack_sole_neighbor", &attack_sole_neighbor, py::arg("info"),
          py::arg("target"), py::arg("y_tol") = 1e-9,
          "Reconstruct the terminal gradient of a target whose only neighbor "
          "is a single coalition member.");

    py::class_<AlternativeExecution>(m, "AlternativeExecution")
        .def_readonly("trace", &AlternativeExecution::trace)
        .def_readonly("suite", &AlternativeExecution::suite)
        .def_readonly("target", &AlternativeExecution::target)
        .def_readonly("counterpart", &AlternativeExecution::counterpart);

    m.def(
        "construct_indistinguishable",
        [](const ExecutionTrace& trace, const ObjectiveSuite& suite,
           const Eigen::VectorXd& delta, int target,
           std::optional<int> counterpart, const std::vector<int>& adversaries) {
            GradientShift shift;
            shift.delta = delta;
            shift.target = target;
            shift.counterpart = counterpart;
            return construct_indistinguishable(trace, suite, shift, adversaries);
        },
        py::arg("trace"), py::arg("suite"), py::arg("delta"), py::arg("target"),
        py::arg("counterpart") = py::none(),
        py::arg("adversaries") = std::vector<int>{},
        "Alternative objectives (target shifted by +delta, counterpart by "
        "-delta) and first-iteration weights that reproduce every observed "
        "quantity.");

    m.def("verify_indistinguishability", &verify_indistinguishability,
          py::arg("a"), py::arg("b"),
          "Largest absolute difference across two flattened information sets.");

    // ---- convergence analysis ----
    py::class_<LemmaConstants>(m, "LemmaConstants")
        .def_readonly("n", &LemmaConstants::n)
        .def_readonly("eta", &LemmaConstants::eta)
        .def_readonly("beta_bar", &LemmaConstants::beta_bar)
        .def_readonly("alpha_F", &LemmaConstants::alpha_F)
        .def_readonly("beta_F", &LemmaConstants::beta_F)
        .def_readonly("Q_R", &LemmaConstants::Q_R)
        .def_readonly("Q_P", &LemmaConstants::Q_P)
        .def_readonly("log_Q_R", &LemmaConstants::log_Q_R)
        .def_readonly("log_Q_P", &LemmaConstants::log_Q_P)
        .def_readonly("N_R_approx", &LemmaConstants::N_R_approx)
        .def_readonly("N_P_approx", &LemmaConstants::N_P_approx)
        .def_readonly("N_R", &LemmaConstants::N_R)
        .def_readonly("N_P", &LemmaConstants::N_P)
        .def_readonly("N_bar", &LemmaConstants::N_bar)
        .def_readonly("N_R_exact", &LemmaConstants::N_R_exact)
        .def_readonly("N_P_exact", &LemmaConstants::N_P_exact)
        .def_readonly("r_R", &LemmaConstants::r_R)
        .def_readonly("r_P", &LemmaConstants::r_P)
        .def_readonly("overflow", &LemmaConstants::overflow)
        .def("representable", &LemmaConstants::representable);

    m.def("lemma_constants", &lemma_constants, py::arg("n"), py::arg("eta"),
          py::arg("beta_bar"), py::arg("alpha_F"), py::arg("beta_F"),
          "Worst-case contraction constants of the stochastic phase.");
    m.def(
        "contraction_factor",
        [](const LemmaConstants& c, const std::string& family, double N) {
            if (family.size() != 1)
                throw ConfigError("family must be 'R' or 'P'");
            return contraction_factor(c, family[0], N);
        },
        py::arg("constants"), py::arg("family"), py::arg("N"));
    m.def("companion_rho", &companion_rho, py::arg("constants"),
          py::arg("N_bar"), py::arg("lam"),
          "Spectral radius of the windowed stability matrix, computed from "
          "its block-companion structure.");

    py::class_<CertificateSweep>(m, "CertificateSweep")
        .def_readonly("found", &CertificateSweep::found)
        .def_readonly("lambda_best", &CertificateSweep::lambda_best)
        .def_readonly("rho_min", &CertificateSweep::rho_min)
        .def_readonly("lambda_sup", &CertificateSweep::lambda_sup);

    m.def("find_certificate", &find_certificate, py::arg("constants"),
          py::arg("N_bar"), py::arg("per_decade") = 20, py::arg("decades") = 12,
          "Logarithmic stepsize sweep for a spectral radius below one.");

    py::class_<RateFit>(m, "RateFit")
        .def_readonly("rho_hat", &RateFit::rho_hat)
        .def_readonly("intercept", &RateFit::intercept)
        .def_readonly("goodness", &RateFit::goodness)
        .def_readonly("used_points", &RateFit::used_points)
        .def_readonly("truncated_at_floor", &RateFit::truncated_at_floor);

    m.def("fit_linear_rate", &fit_linear_rate, py::arg("errs"),
          py::arg("burn_in"), py::arg("floor_value") = 0.0,
          "Least squares on (k, log err) for k >= burn_in.");

    m.def("conservation_residual", &conservation_residual, py::arg("trace"),
          py::arg("k"),
          "Norm of the summed tracker-minus-gradient defect at iteration k.");
    m.def("relative_conservation_residual", &relative_conservation_residual,
          py::arg("trace"), py::arg("k"));
    m.def("absolute_probability_v", &absolute_probability_v, py::arg("trace"),
          py::arg("upto"),
          "Forward products of the reweighted column matrices from the phase "
          "switch; returns v^K .. v^upto.");
    m.def("p_matrix", &p_matrix, py::arg("trace"), py::arg("k"),
          "Row-stochastic reweighted mixing matrix at stochastic-phase k.");

    py::class_<DiagnosticsSeries>(m, "DiagnosticsSeries")
        .def_readonly("k_from", &DiagnosticsSeries::k_from)
        .def_readonly("k_to", &DiagnosticsSeries::k_to)
        .def_readonly("xbar_w", &DiagnosticsSeries::xbar_w)
        .def_readonly("x_tilde", &DiagnosticsSeries::x_tilde)
        .def_readonly("s", &DiagnosticsSeries::s)
        .def_readonly("s_tilde", &DiagnosticsSeries::s_tilde)
        .def_readonly("phi_truncation", &DiagnosticsSeries::phi_truncation)
        .def_readonly("delta_k", &DiagnosticsSeries::delta_k);

    m.def("diagnostics", &diagnostics, py::arg("trace"), py::arg("L"),
          py::arg("tol") = 1e-8,
          "Transformed consensus/gap/tracker quantities over the "
          "stochastic-phase iterations that leave an L-step buffer.");
}
