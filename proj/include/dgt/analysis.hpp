#pragma once
#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

#include "dgt/engine.hpp"

namespace dgt {

/*
 * Worst-case contraction constants for the randomized stochastic phase.
 * Both Q constants are kept in log space as well, because they overflow a
 * double for small eta and moderate n; the minimal window lengths N_R, N_P
 * can exceed the integer range entirely, in which case only the real-valued
 * approximations below are meaningful and the certificate is vacuous.
 */
struct LemmaConstants {
    int n = 0;
    double eta = 0.0;
    double beta_bar = 0.0, alpha_F = 0.0, beta_F = 0.0;

    double Q_R = 0.0, Q_P = 0.0;        // +inf when out of double range
    double log_Q_R = 0.0, log_Q_P = 0.0;
    double N_R_approx = 0.0, N_P_approx = 0.0;  // real threshold, may be inf
    long long N_R = -1, N_P = -1, N_bar = -1;   // -1: not representable
    bool N_R_exact = false, N_P_exact = false;
    double r_R = 0.0, r_P = 0.0;  // contraction factors at the minimal N
    bool overflow = false;        // some Q left the double range

    bool representable() const { return N_R_exact && N_P_exact; }
};

// n >= 2, eta in (0,1). Minimality of N_R and N_P is established in log
// space and then verified by evaluating both sides of the threshold.
LemmaConstants lemma_constants(int n, double eta, double beta_bar,
                               double alpha_F, double beta_F);

// r(N) for family 'R' or 'P' at a (possibly fractional) window length N,
// evaluated fully in log space.
double contraction_factor(const LemmaConstants& c, char family, double N);

/*
 * The stability matrix M(lambda) = M1 + lambda*M2 driving the coupled
 * recursion of consensus residual, optimality gap and tracker residual over
 * a sliding window of N_bar iterations. M1 carries the two contraction
 * factors and the identity sub-diagonal; M2 carries everything multiplied by
 * the stepsize.
 */
struct ConvergenceMatrix {
    Eigen::MatrixXd M1, M2;
    double lambda = 0.0;
    double rho = 0.0;  // spectral radius of M1 + lambda*M2
};

// Dense assembly; throws DimensionTooLarge when 3*N_bar exceeds cap.
ConvergenceMatrix build_M(const LemmaConstants& c, long long N_bar,
                          double lambda, long long cap = 3000);

double dense_spectral_radius(const Eigen::MatrixXd& M);

// Same spectral radius without materializing the matrix: the block-companion
// structure reduces the Perron root to the unique fixed point of
// z -> rho3(G(z)) with a 3x3 pencil G, solved by log-space bisection. Works
// at any N_bar >= 2.
double companion_rho(const LemmaConstants& c, long long N_bar, double lambda);

struct CertificateSweep {
    bool found = false;       // some lambda with rho < 1
    double lambda_best = 0.0; // argmin of rho over the sweep
    double rho_min = std::numeric_limits<double>::infinity();
    double lambda_sup = 0.0;  // largest certified lambda seen
};

// Logarithmic sweep of lambda in (0, lambda_cap] where lambda_cap enforces
// both lambda <= 1/beta_F and lambda*eta^{n-1}*alpha_F/n <= 1.
CertificateSweep find_certificate(const LemmaConstants& c, long long N_bar,
                                  int per_decade = 20, int decades = 12);

/* trace-level diagnostics */

// Norm of the summed tracker-minus-gradient defect at iteration k.
double conservation_residual(const ExecutionTrace& trace, long long k);
// Same, normalized by 1 + total gradient mass at k.
double relative_conservation_residual(const ExecutionTrace& trace,
                                      long long k);

// Forward products v^{k+1} = C^k v^k from the uniform vector at the phase
// switch; returns v^K .. v^upto.
std::vector<Eigen::VectorXd> absolute_probability_v(const ExecutionTrace& trace,
                                                    long long upto);

// Row-stochastic reweighted mixing matrix at stochastic-phase iteration k.
Eigen::MatrixXd p_matrix(const ExecutionTrace& trace, long long k);

struct PhiResult {
    Eigen::VectorXd phi;
    double truncation_estimate = 0.0;  // l1 gap between buffer L and L/2
};

// Absolute probability vector of the row-stochastic sequence at iteration k,
// estimated by backward iteration from a uniform vector at k+L.
PhiResult approx_phi(const ExecutionTrace& trace, long long k, long long L,
                     double tol = 1e-8);

struct DiagnosticsSeries {
    long long k_from = 0, k_to = 0;  // inclusive iteration range
    std::vector<Eigen::VectorXd> xbar_w;   // phi-weighted mean, length d
    std::vector<Eigen::VectorXd> x_tilde;  // stacked consensus residual, n*d
    std::vector<Eigen::VectorXd> s;        // rescaled trackers, n*d
    std::vector<Eigen::VectorXd> s_tilde;  // stacked tracker residual, n*d
    std::vector<Eigen::Vector3d> xi;       // (|x_tilde|, |r|, |s_tilde|)
    std::vector<double> phi_truncation;
    std::vector<double> delta_k;  // coupling scalars, k_from .. k_to-1
};

// Evaluates the transformed quantities over every stochastic-phase k that
// still leaves an L-iteration buffer for the phi estimate.
DiagnosticsSeries diagnostics(const ExecutionTrace& trace, long long L,
                              double tol = 1e-8);

struct InequalityCheck {
    std::string which;  // "consensus", "gap", "tracker"
    long long k = 0;
    double lhs = 0.0, rhs = 0.0;
    bool holds = false;
};

// Direction-only spot checks of the three one-step bounds on a recorded
// trace, at every iteration where the respective bound applies.
std::vector<InequalityCheck> lemma_inequality_checks(
    const ExecutionTrace& trace, const LemmaConstants& c, long long L,
    double phi_tol = 1e-8);

struct RateFit {
    double rho_hat = 0.0;
    double intercept = 0.0;  // err ~ intercept * rho_hat^k
    double goodness = 0.0;   // coefficient of determination on log points
    long long used_points = 0;
    bool truncated_at_floor = false;
};

// Least squares on (k, log err) for k >= burn_in. A value at or below
// floor_value is included as the last point; a non-positive value ends the
// fit window. Needs at least burn_in + 20 samples and two usable points.
RateFit fit_linear_rate(const std::vector<double>& errs, long long burn_in,
                        double floor_value = 0.0);

}  // namespace dgt
