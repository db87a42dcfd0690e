#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace dgt {

// One node's local objective: value, gradient, and a smoothness constant.
struct Objective {
    int d = 0;
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
    double beta = 0.0;  // gradient Lipschitz constant
};

// A full problem instance: n local objectives summing to the global target,
// with the curvature constants the convergence analysis consumes and, for
// the built-in quadratic families, the exact optimum.
struct ObjectiveSuite {
    std::vector<Objective> objectives;
    double alpha_F = 0.0;   // strong-convexity modulus of the sum
    double beta_F = 0.0;    // smoothness of the sum (= sum of beta_i)
    double beta_bar = 0.0;  // max_i beta_i
    bool has_optimum = false;
    Eigen::VectorXd x_star;

    int n() const { return static_cast<int>(objectives.size()); }
    int d() const { return objectives.empty() ? 0 : objectives[0].d; }
    double global_value(const Eigen::VectorXd& x) const;
    Eigen::VectorXd global_gradient(const Eigen::VectorXd& x) const;
};

// f_i(x) = 1/2 ||x - p_i||^2; optimum is the centroid of the positions.
ObjectiveSuite rendezvous_suite(const std::vector<Eigen::VectorXd>& positions);

// f_i(x) = ||z_i - Q_i x||^2 + sigma_i ||x||^2. The optimum solves the
// stacked normal equations; alpha_F comes from the exact smallest eigenvalue
// of the global quadratic term and beta_i from the largest eigenvalue of
// Q_i^T Q_i (power iteration to 1e-12).
ObjectiveSuite estimation_suite(const std::vector<Eigen::MatrixXd>& Q,
                                const std::vector<Eigen::VectorXd>& z,
                                const std::vector<double>& sigma);

// Estimation suite with Q_i, z_i entries drawn i.i.d. standard normal from
// the given seed and a shared regularizer sigma.
ObjectiveSuite random_estimation_suite(int n, int s, int d, double sigma,
                                       std::uint64_t seed);

// Arbitrary user objectives. No optimum oracle is derived; pass one if known,
// otherwise error-to-optimum diagnostics are unavailable.
ObjectiveSuite custom_suite(std::vector<Objective> objectives, double alpha_F,
                            std::optional<Eigen::VectorXd> x_star);

// Same objective with its gradient shifted by the constant delta (the value
// picks up the matching linear term delta . x).
Objective shifted(const Objective& o, const Eigen::VectorXd& delta);

}  // namespace dgt
