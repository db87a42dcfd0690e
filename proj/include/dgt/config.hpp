#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dgt/engine.hpp"
#include "dgt/graph.hpp"
#include "dgt/objectives.hpp"
#include "dgt/weights.hpp"

namespace dgt {

// Topology block of a config file. Edges are written 1-based as
// [sender, receiver] pairs; named kinds need no edge list.
struct GraphSpec {
    std::string kind;  // "edges" | "ring" | "fig1b" | "cycle3" | "pair"
    int n = 0;
    std::vector<std::pair<int, int>> edges;  // 0-based (sender, receiver)
};

// Objective block. Exactly one kind; matrices are row-major nested arrays
// in the file.
struct SuiteSpec {
    std::string kind;  // "rendezvous" | "estimation" | "random-estimation"
    std::vector<Eigen::VectorXd> positions;  // rendezvous targets, one per node
    std::vector<Eigen::MatrixXd> Q;          // estimation: per-node s x d
    std::vector<Eigen::VectorXd> z;          // estimation: per-node s
    std::vector<double> sigma;               // per-node regularizers
    int n = 0, s = 0, d = 0;                 // random-estimation dimensions
    double noise_sigma = 0.1;                // random-estimation regularizer
    std::optional<std::uint64_t> seed;       // defaults to the base seed
};

struct OutputSpec {
    std::string trace_csv = "trace.csv";
    std::string error_csv = "error.csv";
    std::string svg = "error.svg";  // empty disables the chart
    bool sidecar = true;
    std::string sidecar_path = "trace.sidecar";
};

// Inputs for the gradient-inference attack. Node ids are 1-based in the
// file and 0-based here.
struct AttackSpec {
    std::vector<int> coalition;
    int target = 0;
    double y_tol = 1e-9;
    std::string input;  // sidecar to attack; empty = run the experiment
    std::string estimate_csv = "attack.csv";
};

// Inputs for the indistinguishable-alternative construction.
struct ShiftSpec {
    Eigen::VectorXd delta;
    int target = 0;
    std::optional<int> counterpart;  // auto-selected when unset
    std::vector<int> coalition;
    std::string pairs_csv = "information_pairs.csv";
    std::string report = "replay_report.txt";
};

struct AnalyzeSpec {
    std::string input;  // sidecar to analyze; empty = run the experiment
    long long L = 100;  // backward buffer for the weighting-vector estimate
    double phi_tol = 1e-8;
    long long burn_in = -1;  // rate-fit start; -1 means K + 1
    double floor_value = 0.0;
    std::string conservation_csv = "conservation.csv";
    std::string inequalities_csv = "inequalities.csv";
    std::string vphi_csv = "vphi.csv";
    std::string summary = "analysis_summary.txt";
};

struct CompareSpec {
    std::vector<std::string> members{"two-phase"};
    std::string csv = "compare.csv";
    std::string svg = "compare.svg";  // empty disables
};

// A fully resolved experiment description. Everything has a default except
// the graph and the suite; `echo` is the canonical JSON with all defaults
// and seed fallbacks filled in, and a run stores it in the trace metadata.
struct ExperimentConfig {
    std::string mode = "run";  // run | attack | replay | analyze | compare
    std::uint64_t seed = 1;    // base seed; per-block seeds default to it
    GraphSpec graph;
    SuiteSpec suite;
    ScheduleConfig schedule;
    long long T = 200;
    InitBox init;
    OutputSpec outputs;
    AttackSpec attack;
    ShiftSpec shift;
    AnalyzeSpec analyze;
    CompareSpec compare;
    std::string echo;
};

// Parses and validates a JSON config. Unknown keys, missing required
// blocks, and out-of-range values raise ConfigError naming the field path.
// The optional seed replaces the file's base seed before fallbacks resolve.
ExperimentConfig parse_config_text(const std::string& text,
                                   std::optional<std::uint64_t> seed_override = {});
ExperimentConfig load_config(const std::string& path,
                             std::optional<std::uint64_t> seed_override = {});

DirectedGraph make_graph(const GraphSpec& spec);
ObjectiveSuite make_suite(const SuiteSpec& spec, std::uint64_t base_seed);

}  // namespace dgt
