#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dgt/graph.hpp"
#include "dgt/objectives.hpp"
#include "dgt/weights.hpp"

namespace dgt {

struct NodeState {
    Eigen::VectorXd x;  // decision variable
    Eigen::VectorXd y;  // gradient tracker
};

enum class MessageKind { XLambdaY, TrackerUpdate };

// One wire transmission. The first exchange of an iteration carries the
// sender's x and the product Lambda_j y_j (never Lambda_j itself); the
// second carries the receiver-specific tracker combination.
struct Message {
    int sender = 0;
    int receiver = 0;
    long long k = 0;
    MessageKind kind = MessageKind::XLambdaY;
    Eigen::VectorXd x;         // XLambdaY only
    Eigen::VectorXd lambda_y;  // XLambdaY only
    Eigen::VectorXd tracker;   // TrackerUpdate only
};

struct IterationRecord {
    std::vector<NodeState> states;       // x^k, y^k entering iteration k
    std::vector<Eigen::VectorXd> grads;  // gradients at x^k
    IterationParameters params;          // weights applied during k
    std::vector<Message> messages;       // everything on the wire during k
    std::vector<Eigen::VectorXd> self_lambda_y;  // Lambda_i y_i kept locally
    std::vector<Eigen::VectorXd> self_tracker;   // node's own tracker term
    double err = std::numeric_limits<double>::quiet_NaN();
};

struct RunOptions {
    bool record_params = true;    // keep weights in the trace
    bool record_messages = true;  // keep wire content in the trace
    bool record_states = true;    // keep per-node states and gradients
};

struct InitBox {
    double lo = -5.0;
    double hi = 5.0;
};

struct ExecutionTrace {
    DirectedGraph graph;
    ScheduleConfig schedule;
    std::string schedule_kind = "two-phase";  // or a preset name
    int d = 0;
    long long T = 0;
    std::uint64_t seed = 0;
    bool has_optimum = false;
    Eigen::VectorXd x_star;
    std::vector<IterationRecord> iters;   // k = 0 .. T-1
    std::vector<NodeState> final_states;  // x^T, y^T
    std::vector<Eigen::VectorXd> final_grads;
    double final_err = std::numeric_limits<double>::quiet_NaN();
    std::string config_echo;  // JSON text, set by the CLI layer
    bool full_record = true;  // params and messages are present

    // Stacked distance to the optimum, indexed k = 0..T.
    std::vector<double> error_series() const;
};

// x uniform in the box per coordinate; y = local gradient at x.
std::vector<NodeState> initialize(const ObjectiveSuite& suite,
                                  const DirectedGraph& g, InitBox box,
                                  std::uint64_t seed);

// Advance one iteration in place: first everyone mixes x and applies the
// received stepsize products, then gradients are evaluated at the new x, and
// finally the trackers mix. Optionally materializes the wire messages and
// the per-node self terms into the supplied vectors.
void step(std::vector<NodeState>& states, std::vector<Eigen::VectorXd>& grads,
          const IterationParameters& P, const ObjectiveSuite& suite,
          const DirectedGraph& g, long long k,
          std::vector<Message>* messages = nullptr,
          std::vector<Eigen::VectorXd>* self_lambda_y = nullptr,
          std::vector<Eigen::VectorXd>* self_tracker = nullptr);

using ParamsProvider = std::function<IterationParameters(long long)>;

// Run T iterations from the given initial decision variables (trackers are
// always initialized to the local gradients). Single code path for fresh
// runs and replays, so identical inputs reproduce states bit for bit.
ExecutionTrace run_with_provider(const ObjectiveSuite& suite,
                                 const DirectedGraph& g,
                                 const ParamsProvider& provider, long long T,
                                 const std::vector<Eigen::VectorXd>& init_x,
                                 RunOptions opts = {});

// Two-phase schedule run. init_seed defaults to the schedule seed.
ExecutionTrace run(const ObjectiveSuite& suite, const DirectedGraph& g,
                   const ScheduleConfig& sched, long long T, InitBox box = {},
                   std::optional<std::uint64_t> init_seed = {},
                   RunOptions opts = {});

// Fixed-weight instantiations of known gradient-tracking algorithms.
enum class Preset {
    AugDGM,
    DIGing,
    ATCDIGing,
    AsynDGM,
    AB,
    PushPull_pu,
    PushPull_du,
    PushPull_zhang,
};

Preset preset_from_string(const std::string& name);
const char* preset_name(Preset p);
std::vector<std::string> preset_names();

struct PresetWeights {
    std::optional<Eigen::MatrixXd> W;  // doubly stochastic
    std::optional<Eigen::MatrixXd> R;  // row stochastic
    std::optional<Eigen::MatrixXd> C;  // column stochastic
    Eigen::VectorXd lambda_per_node;  // per-node stepsizes (scalar blocks)
};

// Time-invariant parameter set realizing the preset; throws
// StochasticityViolation naming the offending matrix when an input fails its
// stochasticity or sparsity requirement.
IterationParameters instantiate_preset(Preset p, const DirectedGraph& g, int d,
                                       const PresetWeights& w);

ExecutionTrace run_preset(const ObjectiveSuite& suite, const DirectedGraph& g,
                          Preset p, const PresetWeights& w, long long T,
                          InitBox box = {},
                          std::optional<std::uint64_t> init_seed = {},
                          RunOptions opts = {});

// For traces produced under constant weights (R, I, C, I, Lambda) with a
// node-uniform stepsize, the protocol collapses to a two-step recursion in x
// alone. Returns the largest residual of that identity over the trace;
// throws WrongPreset when the trace's weights do not have that shape.
double extra_equivalence_check(const ExecutionTrace& trace);

// Re-run a fully recorded trace through its stored parameters from its own
// initial states. The result matches the original bit for bit.
ExecutionTrace replay(const ExecutionTrace& trace, const ObjectiveSuite& suite);

}  // namespace dgt
