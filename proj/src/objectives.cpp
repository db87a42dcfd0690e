#include "dgt/objectives.hpp"

#include <cmath>
#include <string>

#include "dgt/errors.hpp"
#include "dgt/rng.hpp"

namespace dgt {

double ObjectiveSuite::global_value(const Eigen::VectorXd& x) const {
    double v = 0.0;
    for (const auto& o : objectives) v += o.value(x);
    return v;
}

Eigen::VectorXd ObjectiveSuite::global_gradient(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    for (const auto& o : objectives) g += o.gradient(x);
    return g;
}

ObjectiveSuite rendezvous_suite(const std::vector<Eigen::VectorXd>& positions) {
    if (positions.empty()) throw DimensionMismatch("rendezvous needs at least one position");
    const int d = static_cast<int>(positions[0].size());
    for (const auto& p : positions)
        if (p.size() != d)
            throw DimensionMismatch("positions have mixed dimensions (" +
                                    std::to_string(p.size()) + " vs " + std::to_string(d) + ")");
    ObjectiveSuite s;
    const int n = static_cast<int>(positions.size());
    s.objectives.reserve(n);
    for (int i = 0; i < n; ++i) {
        Objective o;
        o.d = d;
        Eigen::VectorXd p = positions[i];
        o.value = [p](const Eigen::VectorXd& x) { return 0.5 * (x - p).squaredNorm(); };
        o.gradient = [p](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x - p; };
        o.beta = 1.0;
        s.objectives.push_back(std::move(o));
    }
    s.beta_bar = 1.0;
    s.beta_F = static_cast<double>(n);
    s.alpha_F = static_cast<double>(n);
    s.has_optimum = true;
    s.x_star = Eigen::VectorXd::Zero(d);
    for (const auto& p : positions) s.x_star += p;
    s.x_star /= static_cast<double>(n);
    return s;
}

namespace {

// Largest eigenvalue of the PSD matrix H by power iteration, refined until
// the Rayleigh quotient is stable to 1e-12 relative.
double largest_eigenvalue(const Eigen::MatrixXd& H) {
    const int d = static_cast<int>(H.rows());
    double scale = H.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;
    Eigen::VectorXd v = Eigen::VectorXd::Ones(d).normalized();
    double lam = v.dot(H * v);
    for (int it = 0; it < 100000; ++it) {
        Eigen::VectorXd w = H * v;
        double nw = w.norm();
        if (nw == 0.0) return 0.0;
        v = w / nw;
        double lam_new = v.dot(H * v);
        if (std::fabs(lam_new - lam) <= 1e-12 * std::max(1.0, std::fabs(lam_new))) {
            return lam_new;
        }
        lam = lam_new;
    }
    return lam;
}

}  // namespace

ObjectiveSuite estimation_suite(const std::vector<Eigen::MatrixXd>& Q,
                                const std::vector<Eigen::VectorXd>& z,
                                const std::vector<double>& sigma) {
    const int n = static_cast<int>(Q.size());
    if (n == 0 || z.size() != Q.size() || sigma.size() != Q.size())
        throw DimensionMismatch("estimation suite needs matching Q, z, sigma lists");
    const int s_rows = static_cast<int>(Q[0].rows());
    const int d = static_cast<int>(Q[0].cols());
    for (int i = 0; i < n; ++i) {
        if (Q[i].rows() != s_rows || Q[i].cols() != d)
            throw DimensionMismatch("Q_" + std::to_string(i + 1) + " has inconsistent shape");
        if (z[i].size() != s_rows)
            throw DimensionMismatch("z_" + std::to_string(i + 1) + " length does not match Q rows");
        if (sigma[i] < 0.0)
            throw DimensionMismatch("sigma_" + std::to_string(i + 1) + " must be nonnegative");
    }

    ObjectiveSuite out;
    out.objectives.reserve(n);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(d, d);  // sum Q^T Q + sigma I
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < n; ++i) {
        Eigen::MatrixXd QtQ = Q[i].transpose() * Q[i];
        H += QtQ + sigma[i] * Eigen::MatrixXd::Identity(d, d);
        rhs += Q[i].transpose() * z[i];

        Objective o;
        o.d = d;
        Eigen::MatrixXd Qi = Q[i];
        Eigen::VectorXd zi = z[i];
        double si = sigma[i];
        o.value = [Qi, zi, si](const Eigen::VectorXd& x) {
            return (zi - Qi * x).squaredNorm() + si * x.squaredNorm();
        };
        o.gradient = [Qi, zi, si](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            return 2.0 * (Qi.transpose() * (Qi * x - zi)) + 2.0 * si * x;
        };
        o.beta = 2.0 * (largest_eigenvalue(QtQ) + si);
        out.objectives.push_back(std::move(o));
        out.beta_F += out.objectives.back().beta;
        out.beta_bar = std::max(out.beta_bar, out.objectives.back().beta);
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    double lam_min = es.eigenvalues().minCoeff();
    double lam_max = es.eigenvalues().maxCoeff();
    if (lam_min <= 1e-12 * std::max(1.0, lam_max))
        throw SingularGlobalHessian("global quadratic term is singular (min eigenvalue " +
                                    std::to_string(lam_min) + ")");
    out.alpha_F = 2.0 * lam_min;
    out.has_optimum = true;
    out.x_star = H.ldlt().solve(rhs);
    return out;
}

ObjectiveSuite random_estimation_suite(int n, int s, int d, double sigma,
                                       std::uint64_t seed) {
    std::vector<Eigen::MatrixXd> Q(n);
    std::vector<Eigen::VectorXd> z(n);
    std::vector<double> sig(n, sigma);
    for (int i = 0; i < n; ++i) {
        RngStream rs(seed, RngDomain::Suite, 0, static_cast<std::uint64_t>(i));
        Q[i].resize(s, d);
        for (int r = 0; r < s; ++r)
            for (int c = 0; c < d; ++c) Q[i](r, c) = rs.gaussian(0.0, 1.0);
        z[i].resize(s);
        for (int r = 0; r < s; ++r) z[i](r) = rs.gaussian(0.0, 1.0);
    }
    return estimation_suite(Q, z, sig);
}

ObjectiveSuite custom_suite(std::vector<Objective> objectives, double alpha_F,
                            std::optional<Eigen::VectorXd> x_star) {
    if (objectives.empty()) throw DimensionMismatch("custom suite needs at least one objective");
    const int d = objectives[0].d;
    ObjectiveSuite s;
    for (auto& o : objectives) {
        if (o.d != d) throw DimensionMismatch("custom objectives have mixed dimensions");
        s.beta_F += o.beta;
        s.beta_bar = std::max(s.beta_bar, o.beta);
    }
    s.objectives = std::move(objectives);
    s.alpha_F = alpha_F;
    if (x_star) {
        if (x_star->size() != d) throw DimensionMismatch("x_star dimension mismatch");
        s.has_optimum = true;
        s.x_star = *x_star;
    }
    return s;
}

Objective shifted(const Objective& o, const Eigen::VectorXd& delta) {
    if (delta.size() != o.d) throw DimensionMismatch("shift dimension mismatch");
    Objective out;
    out.d = o.d;
    out.beta = o.beta;
    auto value = o.value;
    auto gradient = o.gradient;
    Eigen::VectorXd dl = delta;
    out.value = [value, dl](const Eigen::VectorXd& x) { return value(x) + dl.dot(x); };
    out.gradient = [gradient, dl](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return gradient(x) + dl;
    };
    return out;
}

}  // namespace dgt
