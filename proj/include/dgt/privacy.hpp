#pragma once
#include <Eigen/Dense>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "dgt/engine.hpp"
#include "dgt/objectives.hpp"

namespace dgt {

// Everything an honest-but-curious coalition observes. Built exclusively
// from a recorded trace; the attack below takes only this type, so it cannot
// touch state the coalition would not have.

struct StateRecord {
    int node = 0;  // coalition member, 0-based
    Eigen::VectorXd x, y, lambda_y, self_tracker;
};

struct WireRecord {
    int sender = 0, receiver = 0;
    MessageKind kind = MessageKind::XLambdaY;
    Eigen::VectorXd x, lambda_y, tracker;
};

// Private-phase weights a member drew itself: its stepsize, its incoming
// mixing rows, and the tracker columns it assigns to its out-closure.
struct OwnedParams {
    int node = 0;
    Eigen::VectorXd Lambda;
    std::vector<Eigen::VectorXd> Rrow, Arow;  // over in_closure(node)
    std::vector<Eigen::VectorXd> Ccol, Bcol;  // over out_closure(node)
};

struct IterationView {
    long long k = 0;
    std::vector<StateRecord> member_states;
    std::vector<WireRecord> wires;  // any message touching the coalition
    std::vector<OwnedParams> owned;  // private phase only
    bool params_public = false;      // stochastic phase: everything is known
    IterationParameters public_params;
};

struct InformationSet {
    std::vector<int> members;  // sorted, deduplicated
    DirectedGraph graph;       // topology is public knowledge
    long long T = 0;
    long long K = 0;
    int d = 0;
    std::vector<IterationView> iterations;
    std::vector<StateRecord> terminal;  // members' x^T, y^T

    // Canonical (k, field, value) sequence; two sets are comparable exactly
    // when their sequences align field by field.
    std::vector<std::tuple<long long, std::string, Eigen::VectorXd>> flatten()
        const;
};

// members are 0-based node ids. The trace must carry parameters and
// messages (full_record).
InformationSet collect_information(const ExecutionTrace& trace,
                                   const std::vector<int>& members);

struct AttackResult {
    Eigen::VectorXd estimate;  // reconstructed gradient of the target at x*
    bool converged = false;    // the target's tracker looked settled
    double y_norm_estimate = 0.0;
};

// Gradient reconstruction against a target whose only in- and out-neighbor
// is a single coalition member: telescoping the net tracker flow through
// that neighbor recovers the target's terminal gradient.
AttackResult attack_sole_neighbor(const InformationSet& info, int target,
                                  double y_tol = 1e-9);

struct GradientShift {
    Eigen::VectorXd delta;
    int target = 0;                  // node whose gradient moves by +delta
    std::optional<int> counterpart;  // node taking -delta; auto-picked if unset
};

struct AlternativeExecution {
    ExecutionTrace trace;
    ObjectiveSuite suite;
    int target = 0;
    int counterpart = 0;
};

// Builds a different objective pair and first-iteration weights that leave
// every quantity the coalition observes unchanged: the target's objective
// shifts by +delta'x, the counterpart's by -delta'x, and the stepsize and
// tracker columns of the two nodes are rescaled so all wire content and all
// states from iteration 1 on coincide with the original run.
AlternativeExecution construct_indistinguishable(
    const ExecutionTrace& trace, const ObjectiveSuite& suite,
    const GradientShift& shift, const std::vector<int>& adversaries);

// Largest absolute difference across the two flattened information sets;
// throws StructureMismatch when they do not align field by field.
double verify_indistinguishability(const InformationSet& a,
                                   const InformationSet& b);

}  // namespace dgt
