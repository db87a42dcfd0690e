#include "dgt/weights.hpp"

#include <cmath>
#include <sstream>

#include "dgt/errors.hpp"
#include "dgt/rng.hpp"

namespace dgt {

std::string ValidationReport::to_string() const {
    std::ostringstream os;
    for (const auto& v : violations) {
        const char* kind = nullptr;
        switch (v.kind) {
            case ViolationKind::Range: kind = "range"; break;
            case ViolationKind::Stochasticity: kind = "stochasticity"; break;
            case ViolationKind::Scalar: kind = "scalar"; break;
            case ViolationKind::Stepsize: kind = "stepsize"; break;
            case ViolationKind::Shape: kind = "shape"; break;
        }
        os << kind << " violation at node " << (v.node + 1);
        if (v.coord >= 0) os << " coord " << v.coord;
        os << " magnitude " << v.magnitude << ": " << v.detail << "\n";
    }
    return os.str();
}

std::vector<double> normalize_simplex(const std::vector<double>& p, double eta) {
    if (!(eta > 0.0 && eta < 1.0))
        throw Error("simplex lower bound must lie in (0,1), got " + std::to_string(eta));
    const int m = static_cast<int>(p.size());
    if (m == 0) throw Error("simplex normalization needs at least one value");
    if (static_cast<double>(m) * eta > 1.0)
        throw EmptySimplex("no point of [" + std::to_string(eta) + ",1]^" + std::to_string(m) +
                           " sums to 1 (m*eta = " + std::to_string(m * eta) + " > 1)");
    double den = 0.0;
    for (double v : p) {
        if (!(v >= 0.0 && v <= 1.0))
            throw Error("simplex input outside [0,1]: " + std::to_string(v));
        den += (1.0 - eta) * v + eta;
    }
    std::vector<double> c(p.size());
    const double span = 1.0 - static_cast<double>(m) * eta;
    for (std::size_t i = 0; i < p.size(); ++i)
        c[i] = span * ((1.0 - eta) * p[i] + eta) / den + eta;
    return c;
}

IterationParameters empty_parameters(long long k, Phase phase,
                                     const DirectedGraph& g, int d) {
    IterationParameters P;
    P.k = k;
    P.phase = phase;
    const int n = g.n();
    P.Lambda.assign(n, Eigen::VectorXd::Zero(d));
    P.Rrow.resize(n);
    P.Arow.resize(n);
    P.Ccol.resize(n);
    P.Bcol.resize(n);
    for (int i = 0; i < n; ++i) {
        P.Rrow[i].assign(g.in_closure(i).size(), Eigen::VectorXd::Zero(d));
        P.Arow[i].assign(g.in_closure(i).size(), Eigen::VectorXd::Zero(d));
        P.Ccol[i].assign(g.out_closure(i).size(), Eigen::VectorXd::Zero(d));
        P.Bcol[i].assign(g.out_closure(i).size(), Eigen::VectorXd::Zero(d));
    }
    return P;
}

namespace {

double draw_noise(RngStream& rs, const NoiseSpec& spec) {
    switch (spec.kind) {
        case NoiseKind::Gaussian: return rs.gaussian(spec.a, spec.b);
        case NoiseKind::Laplace: return rs.laplace(spec.a, spec.b);
        case NoiseKind::Uniform: return rs.uniform(spec.a, spec.b);
    }
    return 0.0;
}

// Masking phase: free diagonal draws for Lambda and the R/A row; the C/B
// column is drawn only at the out-neighbor positions and the self block is
// the complement, so every column sums to the identity by construction.
void fill_node_private(IterationParameters& P, int i, const DirectedGraph& g,
                       int d, const ScheduleConfig& cfg, RngStream& rs) {
    for (int l = 0; l < d; ++l) P.Lambda[i](l) = draw_noise(rs, cfg.private_distribution);
    const int m_in = static_cast<int>(g.in_closure(i).size());
    for (int p = 0; p < m_in; ++p)
        for (int l = 0; l < d; ++l) P.Rrow[i][p](l) = draw_noise(rs, cfg.private_distribution);
    for (int p = 0; p < m_in; ++p)
        for (int l = 0; l < d; ++l) P.Arow[i][p](l) = draw_noise(rs, cfg.private_distribution);
    const int deg_out = static_cast<int>(g.out_neighbors(i).size());
    for (int p = 0; p < deg_out; ++p)
        for (int l = 0; l < d; ++l) P.Ccol[i][p](l) = draw_noise(rs, cfg.private_distribution);
    for (int p = 0; p < deg_out; ++p)
        for (int l = 0; l < d; ++l) P.Bcol[i][p](l) = draw_noise(rs, cfg.private_distribution);
    // self blocks sit at the last closure position
    Eigen::VectorXd cs = Eigen::VectorXd::Ones(d);
    Eigen::VectorXd bs = Eigen::VectorXd::Ones(d);
    for (int p = 0; p < deg_out; ++p) {
        cs -= P.Ccol[i][p];
        bs -= P.Bcol[i][p];
    }
    P.Ccol[i][deg_out] = cs;
    P.Bcol[i][deg_out] = bs;
}

// Contracting phase: uniform draws pushed onto the [eta,1] simplex; every
// block is a scalar multiple of the identity.
void fill_node_stochastic(IterationParameters& P, int i, const DirectedGraph& g,
                          int d, const ScheduleConfig& cfg, RngStream& rs) {
    auto draw_simplex = [&](int m) {
        std::vector<double> u(m);
        for (int p = 0; p < m; ++p) u[p] = rs.uniform01();
        return normalize_simplex(u, cfg.eta);
    };
    const int m_in = static_cast<int>(g.in_closure(i).size());
    const int m_out = static_cast<int>(g.out_closure(i).size());
    std::vector<double> r = draw_simplex(m_in);
    std::vector<double> a = draw_simplex(m_in);
    std::vector<double> c = draw_simplex(m_out);
    std::vector<double> b = draw_simplex(m_out);
    for (int p = 0; p < m_in; ++p) {
        P.Rrow[i][p].setConstant(r[p]);
        P.Arow[i][p].setConstant(a[p]);
    }
    for (int p = 0; p < m_out; ++p) {
        P.Ccol[i][p].setConstant(c[p]);
        P.Bcol[i][p].setConstant(b[p]);
    }
    P.Lambda[i].setConstant(cfg.lambda);
}

}  // namespace

void fill_node(IterationParameters& P, int i, const DirectedGraph& g, int d,
               const ScheduleConfig& cfg, std::uint64_t seed) {
    RngStream rs(seed, RngDomain::Weights, static_cast<std::uint64_t>(P.k),
                 static_cast<std::uint64_t>(i));
    if (P.phase == Phase::Private)
        fill_node_private(P, i, g, d, cfg, rs);
    else
        fill_node_stochastic(P, i, g, d, cfg, rs);
}

IterationParameters sample_parameters(long long k, const DirectedGraph& g,
                                      int d, const ScheduleConfig& cfg) {
    Phase phase = k < cfg.K ? Phase::Private : Phase::Stochastic;
    IterationParameters P = empty_parameters(k, phase, g, d);
    for (int i = 0; i < g.n(); ++i) fill_node(P, i, g, d, cfg, cfg.seed);
    return P;
}

namespace {

bool shapes_ok(const IterationParameters& P, const DirectedGraph& g, int d,
               ValidationReport& rep) {
    const int n = g.n();
    auto bad = [&](int node, const std::string& what) {
        rep.violations.push_back({ViolationKind::Shape, node, -1, 0.0, what});
    };
    if (static_cast<int>(P.Lambda.size()) != n || static_cast<int>(P.Rrow.size()) != n ||
        static_cast<int>(P.Arow.size()) != n || static_cast<int>(P.Ccol.size()) != n ||
        static_cast<int>(P.Bcol.size()) != n) {
        bad(0, "node count mismatch");
        return false;
    }
    bool ok = true;
    for (int i = 0; i < n; ++i) {
        if (P.Lambda[i].size() != d) { bad(i, "Lambda block size"); ok = false; }
        if (P.Rrow[i].size() != g.in_closure(i).size()) { bad(i, "R row block count"); ok = false; }
        if (P.Arow[i].size() != g.in_closure(i).size()) { bad(i, "A row block count"); ok = false; }
        if (P.Ccol[i].size() != g.out_closure(i).size()) { bad(i, "C column block count"); ok = false; }
        if (P.Bcol[i].size() != g.out_closure(i).size()) { bad(i, "B column block count"); ok = false; }
        if (!ok) continue;
        for (const auto& v : P.Rrow[i]) if (v.size() != d) { bad(i, "R block size"); ok = false; }
        for (const auto& v : P.Arow[i]) if (v.size() != d) { bad(i, "A block size"); ok = false; }
        for (const auto& v : P.Ccol[i]) if (v.size() != d) { bad(i, "C block size"); ok = false; }
        for (const auto& v : P.Bcol[i]) if (v.size() != d) { bad(i, "B block size"); ok = false; }
    }
    return ok;
}

}  // namespace

ValidationReport validate(const IterationParameters& P, Phase phase,
                          const DirectedGraph& g, const ScheduleConfig& cfg,
                          double tol) {
    ValidationReport rep;
    const int n = g.n();
    const int d = P.Lambda.empty() ? 0 : static_cast<int>(P.Lambda[0].size());
    if (!shapes_ok(P, g, d, rep)) return rep;

    auto check_column_sums = [&](const std::vector<std::vector<Eigen::VectorXd>>& col,
                                 const char* name) {
        for (int i = 0; i < n; ++i) {
            for (int l = 0; l < d; ++l) {
                double sum = 0.0;
                for (const auto& blk : col[i]) sum += blk(l);
                if (std::fabs(sum - 1.0) > tol)
                    rep.violations.push_back({ViolationKind::Stochasticity, i, l,
                                              std::fabs(sum - 1.0),
                                              std::string(name) + " column sum != 1"});
            }
        }
    };

    if (phase == Phase::Private) {
        // R, A, Lambda are unconstrained; only the column sums matter.
        check_column_sums(P.Ccol, "C");
        check_column_sums(P.Bcol, "B");
        return rep;
    }

    auto check_scalar = [&](const Eigen::VectorXd& blk, int node, const char* name) {
        double dev = 0.0;
        for (int l = 1; l < d; ++l) dev = std::max(dev, std::fabs(blk(l) - blk(0)));
        if (dev > tol)
            rep.violations.push_back({ViolationKind::Scalar, node, -1, dev,
                                      std::string(name) + " block is not scalar x identity"});
        return dev <= tol;
    };
    auto check_simplex_row = [&](const std::vector<Eigen::VectorXd>& row, int node,
                                 const char* name) {
        double sum = 0.0;
        for (const auto& blk : row) {
            check_scalar(blk, node, name);
            double w = blk(0);
            sum += w;
            if (w < cfg.eta - tol || w > 1.0 + tol)
                rep.violations.push_back({ViolationKind::Range, node, -1, w,
                                          std::string(name) + " weight outside [eta,1]"});
        }
        if (std::fabs(sum - 1.0) > tol)
            rep.violations.push_back({ViolationKind::Stochasticity, node, -1,
                                      std::fabs(sum - 1.0),
                                      std::string(name) + " weights do not sum to 1"});
    };

    for (int i = 0; i < n; ++i) {
        check_simplex_row(P.Rrow[i], i, "R");
        check_simplex_row(P.Arow[i], i, "A");
        check_simplex_row(P.Ccol[i], i, "C");
        check_simplex_row(P.Bcol[i], i, "B");
        check_scalar(P.Lambda[i], i, "Lambda");
        for (int l = 0; l < d; ++l)
            if (std::fabs(P.Lambda[i](l) - cfg.lambda) > tol)
                rep.violations.push_back({ViolationKind::Stepsize, i, l,
                                          std::fabs(P.Lambda[i](l) - cfg.lambda),
                                          "Lambda != lambda"});
    }
    return rep;
}

Eigen::MatrixXd global_matrix(const IterationParameters& P,
                              const DirectedGraph& g, int d, char family) {
    const int n = g.n();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n * d, n * d);
    auto put = [&](int i, int j, const Eigen::VectorXd& blk) {
        for (int l = 0; l < d; ++l) M(i * d + l, j * d + l) = blk(l);
    };
    switch (family) {
        case 'R':
            for (int i = 0; i < n; ++i)
                for (std::size_t p = 0; p < P.Rrow[i].size(); ++p)
                    put(i, g.in_closure(i)[p], P.Rrow[i][p]);
            break;
        case 'A':
            for (int i = 0; i < n; ++i)
                for (std::size_t p = 0; p < P.Arow[i].size(); ++p)
                    put(i, g.in_closure(i)[p], P.Arow[i][p]);
            break;
        case 'C':
            for (int j = 0; j < n; ++j)
                for (std::size_t p = 0; p < P.Ccol[j].size(); ++p)
                    put(g.out_closure(j)[p], j, P.Ccol[j][p]);
            break;
        case 'B':
            for (int j = 0; j < n; ++j)
                for (std::size_t p = 0; p < P.Bcol[j].size(); ++p)
                    put(g.out_closure(j)[p], j, P.Bcol[j][p]);
            break;
        case 'L':
            for (int i = 0; i < n; ++i) put(i, i, P.Lambda[i]);
            break;
        default:
            throw Error(std::string("unknown weight family '") + family + "'");
    }
    return M;
}

Eigen::MatrixXd scalar_matrix(const IterationParameters& P,
                              const DirectedGraph& g, char family) {
    const int n = g.n();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    switch (family) {
        case 'R':
            for (int i = 0; i < n; ++i)
                for (std::size_t p = 0; p < P.Rrow[i].size(); ++p)
                    M(i, g.in_closure(i)[p]) = P.Rrow[i][p](0);
            break;
        case 'A':
            for (int i = 0; i < n; ++i)
                for (std::size_t p = 0; p < P.Arow[i].size(); ++p)
                    M(i, g.in_closure(i)[p]) = P.Arow[i][p](0);
            break;
        case 'C':
            for (int j = 0; j < n; ++j)
                for (std::size_t p = 0; p < P.Ccol[j].size(); ++p)
                    M(g.out_closure(j)[p], j) = P.Ccol[j][p](0);
            break;
        case 'B':
            for (int j = 0; j < n; ++j)
                for (std::size_t p = 0; p < P.Bcol[j].size(); ++p)
                    M(g.out_closure(j)[p], j) = P.Bcol[j][p](0);
            break;
        case 'L':
            for (int i = 0; i < n; ++i) M(i, i) = P.Lambda[i](0);
            break;
        default:
            throw Error(std::string("unknown weight family '") + family + "'");
    }
    return M;
}

Eigen::MatrixXd row_uniform_weights(const DirectedGraph& g) {
    const int n = g.n();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const auto& c = g.in_closure(i);
        for (int j : c) M(i, j) = 1.0 / static_cast<double>(c.size());
    }
    return M;
}

Eigen::MatrixXd col_uniform_weights(const DirectedGraph& g) {
    const int n = g.n();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        const auto& c = g.out_closure(j);
        for (int i : c) M(i, j) = 1.0 / static_cast<double>(c.size());
    }
    return M;
}

Eigen::MatrixXd doubly_stochastic_weights(const DirectedGraph& g, double tol,
                                          int max_iters) {
    const int n = g.n();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j : g.in_closure(i)) M(i, j) = 1.0;
    for (int it = 0; it < max_iters; ++it) {
        for (int i = 0; i < n; ++i) M.row(i) /= M.row(i).sum();
        for (int j = 0; j < n; ++j) M.col(j) /= M.col(j).sum();
        double dev = 0.0;
        for (int i = 0; i < n; ++i) dev = std::max(dev, std::fabs(M.row(i).sum() - 1.0));
        for (int j = 0; j < n; ++j) dev = std::max(dev, std::fabs(M.col(j).sum() - 1.0));
        if (dev <= tol) return M;
    }
    throw Error("balancing iteration did not converge on this support pattern");
}

}  // namespace dgt
