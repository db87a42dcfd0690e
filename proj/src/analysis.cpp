#include "dgt/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "dgt/errors.hpp"
#include "dgt/weights.hpp"

namespace dgt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log of the shrink base 1 - eps for a family, where eps underflows to 0 for
// extreme (n, eta); a zero here means the family never contracts in double
// arithmetic.
double family_shrink(const LemmaConstants& c, char family) {
    const double n = (double)c.n;
    double log_eps;
    if (family == 'R') {
        log_eps = (n - 1.0) * std::log(c.eta);
    } else if (family == 'P') {
        log_eps = (n - 1.0) * (n * std::log(c.eta) - std::log(n));
    } else {
        throw ConfigError("unknown constant family");
    }
    return std::log1p(-std::exp(log_eps));
}

double family_log_Q(const LemmaConstants& c, char family) {
    return family == 'R' ? c.log_Q_R : c.log_Q_P;
}

void solve_family(const LemmaConstants& c, char family, double& N_approx,
                  long long& N, bool& exact, double& r) {
    const double log_Q = family_log_Q(c, family);
    const double shrink = family_shrink(c, family);  // <= 0
    auto log_r = [&](double Nd) {
        return log_Q + (Nd - 1.0) / (c.n - 1.0) * shrink;
    };
    if (shrink == 0.0) {
        N_approx = kInf;
        N = -1;
        exact = false;
        r = kInf;
        return;
    }
    N_approx = 1.0 + (c.n - 1.0) * log_Q / (-shrink);
    if (N_approx <= 9.0e15) {  // below 2^53: integer arithmetic is exact
        long long cand = (long long)std::floor(N_approx) + 1;
        if (cand < 1) cand = 1;
        while (log_r((double)cand) >= 0.0) ++cand;
        while (cand > 1 && log_r((double)(cand - 1)) < 0.0) --cand;
        N = cand;
        exact = true;
        r = std::exp(log_r((double)cand));
    } else {
        N = -1;
        exact = false;
        r = std::exp(std::min(log_r(N_approx), 700.0));
    }
}

}  // namespace

LemmaConstants lemma_constants(int n, double eta, double beta_bar,
                               double alpha_F, double beta_F) {
    if (n < 2) throw TooSmall("the constants need at least two nodes");
    if (!(eta > 0.0 && eta < 1.0))
        throw ConfigError("eta must lie strictly between 0 and 1");
    LemmaConstants c;
    c.n = n;
    c.eta = eta;
    c.beta_bar = beta_bar;
    c.alpha_F = alpha_F;
    c.beta_F = beta_F;

    const double nd = (double)n;
    const double a = -(nd - 1.0) * std::log(eta);  // -ln eps_R > 0
    const double eps_R = std::exp(-a);
    c.log_Q_R = std::log(2.0 * nd) + a + std::log1p(eps_R) - std::log1p(-eps_R);
    const double b = (nd - 1.0) * (std::log(nd) - nd * std::log(eta));
    const double eps_P = std::exp(-b);
    c.log_Q_P = std::log(2.0 * nd) + b + std::log1p(eps_P) - std::log1p(-eps_P);
    c.Q_R = c.log_Q_R > 709.0 ? kInf : std::exp(c.log_Q_R);
    c.Q_P = c.log_Q_P > 709.0 ? kInf : std::exp(c.log_Q_P);
    c.overflow = !(std::isfinite(c.Q_R) && std::isfinite(c.Q_P));

    solve_family(c, 'R', c.N_R_approx, c.N_R, c.N_R_exact, c.r_R);
    solve_family(c, 'P', c.N_P_approx, c.N_P, c.N_P_exact, c.r_P);
    c.N_bar = c.representable() ? std::max(c.N_R, c.N_P) : -1;
    return c;
}

double contraction_factor(const LemmaConstants& c, char family, double N) {
    return std::exp(std::min(
        family_log_Q(c, family) +
            (N - 1.0) / (c.n - 1.0) * family_shrink(c, family),
        700.0));
}

/* spectral machinery */

namespace {

// Parlett-Reinsch balancing with radix 2: every scale factor is a power of
// two, so the similarity transform is exact in floating point. Plain QR on
// the unbalanced stability matrices loses many digits of the unit eigenvalue
// once the coupling entries grow past 1e10.
void balance_in_place(Eigen::MatrixXd& M) {
    const Eigen::Index n = M.rows();
    bool again = true;
    int rounds = 0;
    while (again && rounds++ < 100) {
        again = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            double col = 0.0, row = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i) continue;
                col += std::abs(M(j, i));
                row += std::abs(M(i, j));
            }
            if (col == 0.0 || row == 0.0) continue;
            double f = 1.0;
            const double s = col + row;
            while (col < row / 2.0) {
                f *= 2.0;
                col *= 4.0;
            }
            while (col >= row * 2.0) {
                f /= 2.0;
                col /= 4.0;
            }
            if ((col + row) / f < 0.95 * s) {
                again = true;
                M.row(i) /= f;
                M.col(i) *= f;
            }
        }
    }
}

double spectral_radius_balanced(Eigen::MatrixXd M) {
    balance_in_place(M);
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

struct Blocks {
    Eigen::Matrix3d M1a, M1b, M1c, M2a, M2b, M2c;
};

Blocks stability_blocks(const LemmaConstants& c) {
    if (!(std::isfinite(c.Q_R) && std::isfinite(c.Q_P)))
        throw ConfigError(
            "the contraction constants overflow at this (n, eta); the "
            "certificate is vacuous");
    const double n = (double)c.n;
    const double eps_R = std::pow(c.eta, n - 1.0);
    const double t = n * n * c.beta_bar * c.Q_P / eps_R;
    const double q = c.Q_R * std::sqrt(n);
    const double m = c.alpha_F / n;
    const double nb = n * c.beta_bar;

    Blocks B;
    B.M1a << 0, 0, 0, 0, 1, 0, 2 * t, 0, 0;
    B.M1b << 0, 0, 0, 0, 0, 0, 2 * t, 0, 0;
    B.M1c << c.r_R, 0, 0, 0, 0, 0, 2 * t, 0, c.r_P;
    B.M2a << nb * q, nb * q, q, nb, -eps_R * m, n, nb * t, nb * t, t;
    B.M2b << nb * q, nb * q, q, 0, 0, 0, nb * t, nb * t, t;
    B.M2c = B.M2b;
    return B;
}

void check_lambda(const LemmaConstants& c, double lambda) {
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
    const double cap_term =
        lambda * std::pow(c.eta, (double)c.n - 1.0) * c.alpha_F / c.n;
    if (cap_term > 1.0)
        throw ConfigError(
            "lambda exceeds the admissible cap for the stability matrix");
}

}  // namespace

ConvergenceMatrix build_M(const LemmaConstants& c, long long N_bar,
                          double lambda, long long cap) {
    if (N_bar < 2) throw TooSmall("the window length must be at least 2");
    check_lambda(c, lambda);
    if (3 * N_bar > cap)
        throw DimensionTooLarge("stability matrix side 3*" +
                                std::to_string(N_bar) + " exceeds the cap " +
                                std::to_string(cap));
    const Blocks B = stability_blocks(c);
    const Eigen::Index side = (Eigen::Index)(3 * N_bar);
    ConvergenceMatrix out;
    out.lambda = lambda;
    out.M1 = Eigen::MatrixXd::Zero(side, side);
    out.M2 = Eigen::MatrixXd::Zero(side, side);
    for (long long blk = 0; blk < N_bar; ++blk) {
        const Eigen::Index col = (Eigen::Index)(3 * blk);
        const Eigen::Matrix3d* m1 =
            blk == 0 ? &B.M1a : (blk == N_bar - 1 ? &B.M1c : &B.M1b);
        const Eigen::Matrix3d* m2 =
            blk == 0 ? &B.M2a : (blk == N_bar - 1 ? &B.M2c : &B.M2b);
        out.M1.block<3, 3>(0, col) = *m1;
        out.M2.block<3, 3>(0, col) = *m2;
    }
    for (long long blk = 1; blk < N_bar; ++blk)
        out.M1.block<3, 3>((Eigen::Index)(3 * blk),
                           (Eigen::Index)(3 * (blk - 1))) =
            Eigen::Matrix3d::Identity();
    out.rho = dense_spectral_radius(out.M1 + lambda * out.M2);
    return out;
}

double dense_spectral_radius(const Eigen::MatrixXd& M) {
    return spectral_radius_balanced(M);
}

double companion_rho(const LemmaConstants& c, long long N_bar, double lambda) {
    if (N_bar < 2) throw TooSmall("the window length must be at least 2");
    check_lambda(c, lambda);
    const Blocks B = stability_blocks(c);
    const Eigen::Matrix3d Ma = B.M1a + lambda * B.M2a;
    const Eigen::Matrix3d Mb = B.M1b + lambda * B.M2b;
    const Eigen::Matrix3d Mc = B.M1c + lambda * B.M2c;
    const double S = (double)(N_bar - 2);

    // G(w) for w = ln z: the Perron root of the full matrix is the unique z
    // with rho3(G) = z, and every entry of G is nonincreasing in z, so a
    // sign bisection on w suffices. Exponents are clipped; an overflowing G
    // simply means z is far below the root.
    auto G_of = [&](double w) -> Eigen::Matrix3d {
        double sigma;
        if (w == 0.0) {
            sigma = S;
        } else {
            const double e1 = std::exp(std::min(-w, 700.0));
            const double num = std::expm1(std::min(-S * w, 700.0));
            const double den = std::expm1(std::min(-w, 700.0));
            sigma = e1 * num / den;
        }
        const double zc = std::exp(std::min((1.0 - (double)N_bar) * w, 700.0));
        return Ma + sigma * Mb + zc * Mc;
    };
    auto above_root = [&](double w) -> bool {  // rho3(G(z)) > z ?
        const Eigen::Matrix3d G = G_of(w);
        if (!G.allFinite() || G.maxCoeff() > 1e150) return true;
        return spectral_radius_balanced(G) > std::exp(w);
    };

    double whi;
    {
        const Eigen::Matrix3d G1 = G_of(0.0);
        const double rowmax = G1.cwiseAbs().rowwise().sum().maxCoeff();
        whi = std::log(std::max(1.0, rowmax) + 1.0);
    }
    for (int it = 0; it < 100 && above_root(whi); ++it) whi += 1.0;
    double wlo = std::log(1e-300);
    if (!above_root(wlo)) return std::exp(wlo);
    for (int it = 0; it < 200; ++it) {
        const double wm = 0.5 * (wlo + whi);
        if (above_root(wm))
            wlo = wm;
        else
            whi = wm;
    }
    return std::exp(0.5 * (wlo + whi));
}

CertificateSweep find_certificate(const LemmaConstants& c, long long N_bar,
                                  int per_decade, int decades) {
    const double eps_R = std::pow(c.eta, (double)c.n - 1.0);
    const double cap =
        std::min(c.n / (eps_R * c.alpha_F), 1.0 / c.beta_F);
    CertificateSweep sweep;
    const int steps = per_decade * decades;
    for (int s = steps; s >= 0; --s) {
        const double lambda = cap * std::pow(10.0, -(double)s / per_decade);
        const double rho = companion_rho(c, N_bar, lambda);
        if (rho < sweep.rho_min) {
            sweep.rho_min = rho;
            sweep.lambda_best = lambda;
        }
        if (rho < 1.0) {
            sweep.found = true;
            sweep.lambda_sup = std::max(sweep.lambda_sup, lambda);
        }
    }
    return sweep;
}

/* trace-level diagnostics */

namespace {

const std::vector<NodeState>& states_at(const ExecutionTrace& trace,
                                        long long k) {
    return k < trace.T ? trace.iters[(std::size_t)k].states
                       : trace.final_states;
}

const std::vector<Eigen::VectorXd>& grads_at(const ExecutionTrace& trace,
                                             long long k) {
    return k < trace.T ? trace.iters[(std::size_t)k].grads : trace.final_grads;
}

void require_params(const ExecutionTrace& trace) {
    if (!trace.full_record)
        throw MissingSidecar("this analysis needs the recorded parameters");
}

Eigen::MatrixXd stochastic_scalar(const ExecutionTrace& trace, long long k,
                                  char family) {
    const IterationParameters& P = trace.iters[(std::size_t)k].params;
    if (P.phase != Phase::Stochastic)
        throw ConfigError("iteration " + std::to_string(k) +
                          " is not in the stochastic phase");
    return scalar_matrix(P, trace.graph, family);
}

}  // namespace

double conservation_residual(const ExecutionTrace& trace, long long k) {
    if (k < 0 || k > trace.T)
        throw IndexOutOfRange("iteration beyond the horizon");
    const auto& st = states_at(trace, k);
    const auto& gr = grads_at(trace, k);
    Eigen::VectorXd defect = Eigen::VectorXd::Zero(trace.d);
    for (int i = 0; i < trace.graph.n(); ++i)
        defect += st[(std::size_t)i].y - gr[(std::size_t)i];
    return defect.norm();
}

double relative_conservation_residual(const ExecutionTrace& trace,
                                      long long k) {
    if (k < 0 || k > trace.T)
        throw IndexOutOfRange("iteration beyond the horizon");
    const auto& gr = grads_at(trace, k);
    double mass = 0.0;
    for (const auto& g : gr) mass += g.norm();
    return conservation_residual(trace, k) / (1.0 + mass);
}

std::vector<Eigen::VectorXd> absolute_probability_v(const ExecutionTrace& trace,
                                                    long long upto) {
    require_params(trace);
    const long long K = trace.schedule.K;
    if (upto < K || upto > trace.T)
        throw ConfigError("requested range is outside the stochastic phase");
    const int n = trace.graph.n();
    std::vector<Eigen::VectorXd> out;
    out.reserve((std::size_t)(upto - K + 1));
    Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / n);
    out.push_back(v);
    for (long long k = K; k < upto; ++k) {
        v = stochastic_scalar(trace, k, 'C') * v;
        out.push_back(v);
    }
    return out;
}

Eigen::MatrixXd p_matrix(const ExecutionTrace& trace, long long k) {
    const long long K = trace.schedule.K;
    if (k < K || k >= trace.T)
        throw ConfigError("k must be a stochastic-phase iteration");
    const auto v = absolute_probability_v(trace, k + 1);
    const Eigen::VectorXd& vk = v[(std::size_t)(k - K)];
    const Eigen::VectorXd& vk1 = v[(std::size_t)(k + 1 - K)];
    const Eigen::MatrixXd C = stochastic_scalar(trace, k, 'C');
    const int n = trace.graph.n();
    Eigen::MatrixXd P(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) P(i, j) = C(i, j) * vk[j] / vk1[i];
    return P;
}

PhiResult approx_phi(const ExecutionTrace& trace, long long k, long long L,
                     double tol) {
    require_params(trace);
    const long long K = trace.schedule.K;
    if (k < K) throw ConfigError("k must be a stochastic-phase iteration");
    if (L < 2) throw TooSmall("the buffer must cover at least two iterations");
    if (k + L > trace.T)
        throw BufferTooShort(
            kInf, "the trace does not extend to k + L; shorten the buffer or "
                  "extend the run");
    const int n = trace.graph.n();
    auto backward = [&](long long anchor) {
        Eigen::VectorXd u = Eigen::VectorXd::Constant(n, 1.0 / n);
        for (long long t = anchor - 1; t >= k; --t)
            u = stochastic_scalar(trace, t, 'R').transpose() * u;
        return u;
    };
    PhiResult res;
    res.phi = backward(k + L);
    const long long Lshort = L - (L + 1) / 2;
    const Eigen::VectorXd half = backward(k + Lshort);
    res.truncation_estimate = (res.phi - half).lpNorm<1>();
    if (res.truncation_estimate > tol)
        throw BufferTooShort(res.truncation_estimate,
                             "phi truncation estimate exceeds the tolerance");
    return res;
}

DiagnosticsSeries diagnostics(const ExecutionTrace& trace, long long L,
                              double tol) {
    require_params(trace);
    if (!trace.has_optimum)
        throw ConfigError("diagnostics need a trace with a known optimum");
    const long long K = trace.schedule.K;
    const long long k_to = trace.T - L;
    if (k_to < K)
        throw SeriesTooShort(
            "the trace leaves no stochastic-phase window after the buffer");
    const int n = trace.graph.n();
    const int d = trace.d;

    const auto v = absolute_probability_v(trace, k_to);

    DiagnosticsSeries out;
    out.k_from = K;
    out.k_to = k_to;
    std::vector<Eigen::VectorXd> phis;
    phis.reserve((std::size_t)(k_to - K + 1));
    for (long long k = K; k <= k_to; ++k) {
        PhiResult pr = approx_phi(trace, k, L, tol);
        out.phi_truncation.push_back(pr.truncation_estimate);
        phis.push_back(std::move(pr.phi));
    }

    for (long long k = K; k <= k_to; ++k) {
        const auto& st = states_at(trace, k);
        const Eigen::VectorXd& phi = phis[(std::size_t)(k - K)];
        const Eigen::VectorXd& vk = v[(std::size_t)(k - K)];

        Eigen::VectorXd xbar = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < n; ++i) xbar += phi[i] * st[(std::size_t)i].x;

        Eigen::VectorXd xt(n * d), sv(n * d), stl(n * d);
        Eigen::VectorXd ysum = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < n; ++i) ysum += st[(std::size_t)i].y;
        for (int i = 0; i < n; ++i) {
            xt.segment(i * d, d) = st[(std::size_t)i].x - xbar;
            sv.segment(i * d, d) = st[(std::size_t)i].y / vk[i];
            stl.segment(i * d, d) = sv.segment(i * d, d) - ysum;
        }
        const double r_norm =
            std::sqrt((double)n) * (xbar - trace.x_star).norm();
        out.xbar_w.push_back(std::move(xbar));
        out.xi.emplace_back(xt.norm(), r_norm, stl.norm());
        out.x_tilde.push_back(std::move(xt));
        out.s.push_back(std::move(sv));
        out.s_tilde.push_back(std::move(stl));
    }

    for (long long k = K; k < k_to; ++k) {
        const Eigen::MatrixXd A = stochastic_scalar(trace, k, 'A');
        const Eigen::VectorXd& phi1 = phis[(std::size_t)(k + 1 - K)];
        const Eigen::VectorXd& vk = v[(std::size_t)(k - K)];
        out.delta_k.push_back(phi1.dot(A * vk));
    }
    return out;
}

std::vector<InequalityCheck> lemma_inequality_checks(
    const ExecutionTrace& trace, const LemmaConstants& c, long long L,
    double phi_tol) {
    if (!c.representable())
        throw ConfigError(
            "the window length is not representable; the bounds are vacuous "
            "at this (n, eta)");
    const DiagnosticsSeries diag = diagnostics(trace, L, phi_tol);
    const long long K = diag.k_from;
    const long long N = c.N_bar;
    const double lambda = trace.schedule.lambda;
    const double n = (double)c.n;
    const double eps_R = std::pow(c.eta, n - 1.0);
    const double t = n * n * c.beta_bar * c.Q_P / eps_R;
    const double q = c.Q_R * std::sqrt(n);
    const double nb = n * c.beta_bar;
    const double slack = 1.0 + 1e-9;

    auto xi = [&](long long k) -> const Eigen::Vector3d& {
        return diag.xi[(std::size_t)(k - K)];
    };

    std::vector<InequalityCheck> checks;
    for (long long k = K; k < diag.k_to; ++k) {
        if (lambda <= 1.0 / c.beta_F) {
            InequalityCheck chk;
            chk.which = "gap";
            chk.k = k;
            chk.lhs = xi(k + 1)[1];
            chk.rhs = lambda * nb * xi(k)[0] +
                      (1.0 - lambda * eps_R * c.alpha_F / n) * xi(k)[1] +
                      lambda * n * xi(k)[2];
            chk.holds = chk.lhs <= chk.rhs * slack + 1e-300;
            checks.push_back(std::move(chk));
        }
        if (k - N + 1 >= K) {
            double win_x = 0.0, win_r = 0.0, win_s = 0.0;
            for (long long u = k - N + 1; u <= k; ++u) {
                win_x += xi(u)[0];
                win_r += xi(u)[1];
                win_s += xi(u)[2];
            }
            InequalityCheck c11;
            c11.which = "consensus";
            c11.k = k;
            c11.lhs = xi(k + 1)[0];
            c11.rhs = c.r_R * xi(k - N + 1)[0] +
                      lambda * (nb * q * win_x + nb * q * win_r + q * win_s);
            c11.holds = c11.lhs <= c11.rhs * slack + 1e-300;
            checks.push_back(std::move(c11));

            InequalityCheck c13;
            c13.which = "tracker";
            c13.k = k;
            c13.lhs = xi(k + 1)[2];
            c13.rhs = c.r_P * xi(k - N + 1)[2] + 2.0 * t * win_x +
                      lambda * (nb * t * win_x + nb * t * win_r + t * win_s);
            c13.holds = c13.lhs <= c13.rhs * slack + 1e-300;
            checks.push_back(std::move(c13));
        }
    }
    return checks;
}

RateFit fit_linear_rate(const std::vector<double>& errs, long long burn_in,
                        double floor_value) {
    if (burn_in < 0) throw ConfigError("burn-in must be nonnegative");
    if ((long long)errs.size() < burn_in + 20)
        throw SeriesTooShort("the series must extend 20 points past burn-in");

    std::vector<std::pair<double, double>> pts;  // (k, log err)
    bool floored = false;
    for (long long k = burn_in; k < (long long)errs.size(); ++k) {
        const double e = errs[(std::size_t)k];
        if (!(e > 0.0)) break;
        pts.emplace_back((double)k, std::log(e));
        if (e < floor_value) {
            floored = true;
            break;
        }
    }
    if (pts.empty())
        throw NonPositiveError("no positive values after burn-in");
    if (pts.size() < 2)
        throw SeriesTooShort("need at least two positive points to fit");

    double xm = 0.0, ym = 0.0;
    for (const auto& [x, y] : pts) {
        xm += x;
        ym += y;
    }
    xm /= (double)pts.size();
    ym /= (double)pts.size();
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : pts) {
        sxx += (x - xm) * (x - xm);
        sxy += (x - xm) * (y - ym);
    }
    const double slope = sxy / sxx;
    double ss_res = 0.0, ss_tot = 0.0;
    for (const auto& [x, y] : pts) {
        const double fit = ym + slope * (x - xm);
        ss_res += (y - fit) * (y - fit);
        ss_tot += (y - ym) * (y - ym);
    }
    RateFit out;
    out.rho_hat = std::exp(slope);
    out.intercept = std::exp(ym - slope * xm);
    out.goodness = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
    out.used_points = (long long)pts.size();
    out.truncated_at_floor = floored;
    return out;
}

}  // namespace dgt
