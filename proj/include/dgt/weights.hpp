#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dgt/graph.hpp"

namespace dgt {

// The schedule has two regimes: iterations k < K draw sign-unrestricted
// random diagonal weights (the masking phase), and k >= K draws stochastic
// scalar weights bounded below by eta (the contracting phase).
enum class Phase { Private, Stochastic };

enum class NoiseKind { Gaussian, Laplace, Uniform };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::Gaussian;
    double a = 0.0;  // mean | location | lower bound
    double b = 1.0;  // stddev | scale | upper bound
};

struct ScheduleConfig {
    int K = 3;            // masking-phase length
    double eta = 0.1;     // lower bound for contracting-phase weights
    double lambda = 0.06; // contracting-phase stepsize
    NoiseSpec private_distribution{};
    std::uint64_t seed = 1;
};

// Per-iteration weights, stored as dense diagonal blocks on the graph
// closures only (absent blocks are zero). Block layout:
//   Lambda[i]     : node i's stepsize diagonal, d entries.
//   Rrow[i][p]    : block applied by receiver i to sender in_closure(i)[p].
//   Arow[i][p]    : same indexing as Rrow.
//   Ccol[j][p]    : block scaling what j sends to out_closure(j)[p]
//                   (column j of the mixing matrix), and likewise Bcol.
// Closure order everywhere: neighbors ascending, self last.
struct IterationParameters {
    long long k = 0;
    Phase phase = Phase::Private;
    std::vector<Eigen::VectorXd> Lambda;
    std::vector<std::vector<Eigen::VectorXd>> Rrow, Arow;
    std::vector<std::vector<Eigen::VectorXd>> Ccol, Bcol;
};

enum class ViolationKind { Range, Stochasticity, Scalar, Stepsize, Shape };

struct Violation {
    ViolationKind kind;
    int node;       // 0-based
    int coord;      // coordinate l, or -1 when not coordinate-specific
    double magnitude;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string to_string() const;  // 1-based node labels
};

// Maps m values from [0,1] onto the simplex {c : c_i in [eta,1], sum c = 1}.
// Throws EmptySimplex when m*eta > 1 (the target set is empty).
std::vector<double> normalize_simplex(const std::vector<double>& p, double eta);

// Allocate a zeroed parameter set with the correct block shapes.
IterationParameters empty_parameters(long long k, Phase phase,
                                     const DirectedGraph& g, int d);

// Draw node i's owned blocks (Lambda/R/A rows, C/B columns) for iteration k
// from the stream keyed by (seed, k, i). The phase is taken from P.phase.
// Draw order is fixed; see the implementation notes.
void fill_node(IterationParameters& P, int i, const DirectedGraph& g, int d,
               const ScheduleConfig& cfg, std::uint64_t seed);

// Sample the complete parameter set for iteration k under the two-phase
// schedule. Pure function of (cfg.seed, k, graph, d).
IterationParameters sample_parameters(long long k, const DirectedGraph& g,
                                      int d, const ScheduleConfig& cfg);

// Check a parameter set against the constraints of the given phase.
ValidationReport validate(const IterationParameters& P, Phase phase,
                          const DirectedGraph& g, const ScheduleConfig& cfg,
                          double tol = 1e-12);

// Dense n*d x n*d global matrix for one family; analysis/test use only.
// family is one of 'R', 'A', 'C', 'B', 'L'.
Eigen::MatrixXd global_matrix(const IterationParameters& P,
                              const DirectedGraph& g, int d, char family);

// n x n matrix of the scalar parts (coordinate 0 of each block). Meaningful
// when blocks are scalar multiples of the identity, as in the contracting
// phase and in all presets.
Eigen::MatrixXd scalar_matrix(const IterationParameters& P,
                              const DirectedGraph& g, char family);

// Weight matrices conforming to a graph's sparsity pattern (closure support).
Eigen::MatrixXd row_uniform_weights(const DirectedGraph& g);
Eigen::MatrixXd col_uniform_weights(const DirectedGraph& g);
// Sinkhorn iteration on the closure support; returns a doubly stochastic
// matrix (row and column sums 1 within tol).
Eigen::MatrixXd doubly_stochastic_weights(const DirectedGraph& g,
                                          double tol = 1e-13,
                                          int max_iters = 200000);

}  // namespace dgt
