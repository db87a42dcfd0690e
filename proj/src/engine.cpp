#include "dgt/engine.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "dgt/errors.hpp"
#include "dgt/rng.hpp"

namespace dgt {
namespace {

double stacked_error(const std::vector<NodeState>& states, bool has_optimum,
                     const Eigen::VectorXd& x_star) {
    if (!has_optimum) return std::numeric_limits<double>::quiet_NaN();
    double sq = 0.0;
    for (const auto& s : states) sq += (s.x - x_star).squaredNorm();
    return std::sqrt(sq);
}

void check_shapes(const IterationParameters& P, const DirectedGraph& g,
                  int d) {
    const int n = g.n();
    if ((int)P.Lambda.size() != n || (int)P.Rrow.size() != n ||
        (int)P.Arow.size() != n || (int)P.Ccol.size() != n ||
        (int)P.Bcol.size() != n)
        throw DimensionMismatch("parameter set does not cover every node");
    for (int i = 0; i < n; ++i) {
        const std::size_t m_in = g.in_closure(i).size();
        const std::size_t m_out = g.out_closure(i).size();
        if (P.Rrow[i].size() != m_in || P.Arow[i].size() != m_in ||
            P.Ccol[i].size() != m_out || P.Bcol[i].size() != m_out)
            throw DimensionMismatch(
                "parameter blocks do not match the graph's neighborhoods");
        if (P.Lambda[i].size() != d)
            throw DimensionMismatch("stepsize block has wrong dimension");
    }
}

}  // namespace

std::vector<double> ExecutionTrace::error_series() const {
    std::vector<double> out;
    out.reserve(iters.size() + 1);
    for (const auto& it : iters) out.push_back(it.err);
    out.push_back(final_err);
    return out;
}

std::vector<NodeState> initialize(const ObjectiveSuite& suite,
                                  const DirectedGraph& g, InitBox box,
                                  std::uint64_t seed) {
    if (suite.n() != g.n())
        throw DimensionMismatch("suite size does not match graph size");
    if (!(box.lo <= box.hi))
        throw ConfigError("initialization box is empty");
    const int d = suite.d();
    std::vector<NodeState> states((std::size_t)g.n());
    for (int i = 0; i < g.n(); ++i) {
        RngStream rng(seed, RngDomain::Init, 0,
                      (std::uint64_t)i);
        Eigen::VectorXd x(d);
        for (int l = 0; l < d; ++l)
            x[l] = box.lo + (box.hi - box.lo) * rng.uniform01();
        states[(std::size_t)i].y = suite.objectives[(std::size_t)i].gradient(x);
        states[(std::size_t)i].x = std::move(x);
    }
    return states;
}

void step(std::vector<NodeState>& states, std::vector<Eigen::VectorXd>& grads,
          const IterationParameters& P, const ObjectiveSuite& suite,
          const DirectedGraph& g, long long k, std::vector<Message>* messages,
          std::vector<Eigen::VectorXd>* self_lambda_y,
          std::vector<Eigen::VectorXd>* self_tracker) {
    const int n = g.n();
    const int d = suite.d();
    check_shapes(P, g, d);

    // First exchange: every node forms Lambda_j y_j once and sends it with
    // x_j to each out-neighbor. Receivers accumulate in neighborhood order,
    // self last, matching the stored block order exactly.
    std::vector<Eigen::VectorXd> lambda_y((std::size_t)n);
    for (int j = 0; j < n; ++j)
        lambda_y[(std::size_t)j] =
            P.Lambda[(std::size_t)j].cwiseProduct(states[(std::size_t)j].y);

    std::vector<Eigen::VectorXd> x_new((std::size_t)n);
    for (int i = 0; i < n; ++i) {
        const auto& ic = g.in_closure(i);
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
        for (std::size_t p = 0; p < ic.size(); ++p) {
            const int j = ic[p];
            acc += P.Rrow[(std::size_t)i][p].cwiseProduct(
                states[(std::size_t)j].x);
            acc -= P.Arow[(std::size_t)i][p].cwiseProduct(
                lambda_y[(std::size_t)j]);
        }
        x_new[(std::size_t)i] = std::move(acc);
    }
    for (int i = 0; i < n; ++i)
        if (!x_new[(std::size_t)i].allFinite())
            throw NonFiniteState(k, "decision variable");

    if (messages) {
        for (int j = 0; j < n; ++j)
            for (int i : g.out_neighbors(j)) {
                Message m;
                m.sender = j;
                m.receiver = i;
                m.k = k;
                m.kind = MessageKind::XLambdaY;
                m.x = states[(std::size_t)j].x;
                m.lambda_y = lambda_y[(std::size_t)j];
                messages->push_back(std::move(m));
            }
    }
    if (self_lambda_y) *self_lambda_y = lambda_y;

    // Gradients at the new x, then the second exchange: each sender forms
    // one tracker combination per out-closure position and the matching
    // receiver adds it verbatim, so wire content and update agree bit for
    // bit.
    std::vector<Eigen::VectorXd> grad_new((std::size_t)n);
    std::vector<Eigen::VectorXd> dgrad((std::size_t)n);
    for (int j = 0; j < n; ++j) {
        grad_new[(std::size_t)j] =
            suite.objectives[(std::size_t)j].gradient(x_new[(std::size_t)j]);
        if (!grad_new[(std::size_t)j].allFinite())
            throw NonFiniteState(k, "gradient");
        dgrad[(std::size_t)j] = grad_new[(std::size_t)j] - grads[(std::size_t)j];
    }

    std::vector<std::vector<Eigen::VectorXd>> tracker((std::size_t)n);
    for (int j = 0; j < n; ++j) {
        const auto& oc = g.out_closure(j);
        tracker[(std::size_t)j].resize(oc.size());
        for (std::size_t p = 0; p < oc.size(); ++p)
            tracker[(std::size_t)j][p] =
                P.Ccol[(std::size_t)j][p].cwiseProduct(
                    states[(std::size_t)j].y) +
                P.Bcol[(std::size_t)j][p].cwiseProduct(dgrad[(std::size_t)j]);
    }

    std::vector<Eigen::VectorXd> y_new((std::size_t)n);
    for (int i = 0; i < n; ++i) {
        const auto& ic = g.in_closure(i);
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
        for (std::size_t p = 0; p < ic.size(); ++p) {
            const int j = ic[p];
            const int q = g.out_pos(j, i);
            acc += tracker[(std::size_t)j][(std::size_t)q];
        }
        y_new[(std::size_t)i] = std::move(acc);
    }
    for (int i = 0; i < n; ++i)
        if (!y_new[(std::size_t)i].allFinite())
            throw NonFiniteState(k, "tracker");

    if (messages) {
        for (int j = 0; j < n; ++j) {
            const auto& oc = g.out_closure(j);
            for (std::size_t p = 0; p < oc.size(); ++p) {
                const int i = oc[p];
                if (i == j) continue;
                Message m;
                m.sender = j;
                m.receiver = i;
                m.k = k;
                m.kind = MessageKind::TrackerUpdate;
                m.tracker = tracker[(std::size_t)j][p];
                messages->push_back(std::move(m));
            }
        }
    }
    if (self_tracker) {
        self_tracker->resize((std::size_t)n);
        for (int j = 0; j < n; ++j) {
            const int q = g.out_pos(j, j);
            (*self_tracker)[(std::size_t)j] = tracker[(std::size_t)j][(std::size_t)q];
        }
    }

    for (int i = 0; i < n; ++i) {
        states[(std::size_t)i].x = std::move(x_new[(std::size_t)i]);
        states[(std::size_t)i].y = std::move(y_new[(std::size_t)i]);
        grads[(std::size_t)i] = std::move(grad_new[(std::size_t)i]);
    }
}

ExecutionTrace run_with_provider(const ObjectiveSuite& suite,
                                 const DirectedGraph& g,
                                 const ParamsProvider& provider, long long T,
                                 const std::vector<Eigen::VectorXd>& init_x,
                                 RunOptions opts) {
    if (suite.n() != g.n())
        throw DimensionMismatch("suite size does not match graph size");
    if ((int)init_x.size() != g.n())
        throw DimensionMismatch("initial states do not cover every node");
    if (T < 0) throw ConfigError("negative horizon");
    const int d = suite.d();

    std::vector<NodeState> states((std::size_t)g.n());
    std::vector<Eigen::VectorXd> grads((std::size_t)g.n());
    for (int i = 0; i < g.n(); ++i) {
        if (init_x[(std::size_t)i].size() != d)
            throw DimensionMismatch("initial state has wrong dimension");
        states[(std::size_t)i].x = init_x[(std::size_t)i];
        states[(std::size_t)i].y =
            suite.objectives[(std::size_t)i].gradient(init_x[(std::size_t)i]);
        if (!states[(std::size_t)i].y.allFinite())
            throw NonFiniteState(0, "gradient");
        grads[(std::size_t)i] = states[(std::size_t)i].y;
    }

    ExecutionTrace trace;
    trace.graph = g;
    trace.d = d;
    trace.T = T;
    trace.has_optimum = suite.has_optimum;
    if (suite.has_optimum) trace.x_star = suite.x_star;
    trace.full_record = opts.record_params && opts.record_messages;
    trace.iters.reserve((std::size_t)T);

    for (long long k = 0; k < T; ++k) {
        IterationRecord rec;
        if (opts.record_states) {
            rec.states = states;
            rec.grads = grads;
        }
        rec.err = stacked_error(states, trace.has_optimum, trace.x_star);
        IterationParameters P = provider(k);
        step(states, grads, P, suite, g, k,
             opts.record_messages ? &rec.messages : nullptr,
             opts.record_messages ? &rec.self_lambda_y : nullptr,
             opts.record_messages ? &rec.self_tracker : nullptr);
        if (opts.record_params) rec.params = std::move(P);
        trace.iters.push_back(std::move(rec));
    }

    trace.final_states = std::move(states);
    trace.final_grads = std::move(grads);
    trace.final_err =
        stacked_error(trace.final_states, trace.has_optimum, trace.x_star);
    return trace;
}

ExecutionTrace run(const ObjectiveSuite& suite, const DirectedGraph& g,
                   const ScheduleConfig& sched, long long T, InitBox box,
                   std::optional<std::uint64_t> init_seed, RunOptions opts) {
    const std::uint64_t iseed = init_seed.value_or(sched.seed);
    std::vector<NodeState> init = initialize(suite, g, box, iseed);
    std::vector<Eigen::VectorXd> init_x;
    init_x.reserve(init.size());
    for (auto& s : init) init_x.push_back(std::move(s.x));
    const int d = suite.d();
    ExecutionTrace trace = run_with_provider(
        suite, g,
        [&](long long k) { return sample_parameters(k, g, d, sched); }, T,
        init_x, opts);
    trace.schedule = sched;
    trace.schedule_kind = "two-phase";
    trace.seed = sched.seed;
    return trace;
}

Preset preset_from_string(const std::string& name) {
    for (int p = 0; p <= (int)Preset::PushPull_zhang; ++p)
        if (name == preset_name((Preset)p)) return (Preset)p;
    throw ConfigError("unknown preset: " + name);
}

const char* preset_name(Preset p) {
    switch (p) {
        case Preset::AugDGM: return "aug-dgm";
        case Preset::DIGing: return "diging";
        case Preset::ATCDIGing: return "atc-diging";
        case Preset::AsynDGM: return "asyn-dgm";
        case Preset::AB: return "ab";
        case Preset::PushPull_pu: return "push-pull-pu";
        case Preset::PushPull_du: return "push-pull-du";
        case Preset::PushPull_zhang: return "push-pull-zhang";
    }
    throw ConfigError("unknown preset id");
}

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (int p = 0; p <= (int)Preset::PushPull_zhang; ++p)
        out.emplace_back(preset_name((Preset)p));
    return out;
}

namespace {

enum class Stochasticity { Row, Column, Doubly };

void check_matrix(const Eigen::MatrixXd& M, const DirectedGraph& g,
                  Stochasticity kind, const std::string& label) {
    const int n = g.n();
    const double tol = 1e-12;
    if (M.rows() != n || M.cols() != n)
        throw DimensionMismatch(label + " matrix has wrong size");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double v = M(i, j);
            if (!std::isfinite(v))
                throw StochasticityViolation(label, "non-finite entry");
            if (v < -tol)
                throw StochasticityViolation(label, "negative entry");
            if (v != 0.0 && i != j && !g.has_edge(i, j))
                throw StochasticityViolation(
                    label, "nonzero weight off the communication pattern");
        }
    if (kind == Stochasticity::Row || kind == Stochasticity::Doubly)
        for (int i = 0; i < n; ++i)
            if (std::abs(M.row(i).sum() - 1.0) > 1e-10)
                throw StochasticityViolation(label, "row sums are not 1");
    if (kind == Stochasticity::Column || kind == Stochasticity::Doubly)
        for (int j = 0; j < n; ++j)
            if (std::abs(M.col(j).sum() - 1.0) > 1e-10)
                throw StochasticityViolation(label, "column sums are not 1");
}

// Decompose scalar matrices into the per-node diagonal block layout used by
// the engine. Rows follow each node's in-closure, columns its out-closure.
void fill_from_matrices(IterationParameters& P, const DirectedGraph& g, int d,
                        const Eigen::MatrixXd& R, const Eigen::MatrixXd& A,
                        const Eigen::MatrixXd& C, const Eigen::MatrixXd& B,
                        const Eigen::VectorXd& lambda) {
    const int n = g.n();
    P.Lambda.resize((std::size_t)n);
    P.Rrow.resize((std::size_t)n);
    P.Arow.resize((std::size_t)n);
    P.Ccol.resize((std::size_t)n);
    P.Bcol.resize((std::size_t)n);
    for (int i = 0; i < n; ++i) {
        P.Lambda[(std::size_t)i] = Eigen::VectorXd::Constant(d, lambda[i]);
        const auto& ic = g.in_closure(i);
        P.Rrow[(std::size_t)i].resize(ic.size());
        P.Arow[(std::size_t)i].resize(ic.size());
        for (std::size_t p = 0; p < ic.size(); ++p) {
            P.Rrow[(std::size_t)i][p] =
                Eigen::VectorXd::Constant(d, R(i, ic[p]));
            P.Arow[(std::size_t)i][p] =
                Eigen::VectorXd::Constant(d, A(i, ic[p]));
        }
        const auto& oc = g.out_closure(i);
        P.Ccol[(std::size_t)i].resize(oc.size());
        P.Bcol[(std::size_t)i].resize(oc.size());
        for (std::size_t p = 0; p < oc.size(); ++p) {
            P.Ccol[(std::size_t)i][p] =
                Eigen::VectorXd::Constant(d, C(oc[p], i));
            P.Bcol[(std::size_t)i][p] =
                Eigen::VectorXd::Constant(d, B(oc[p], i));
        }
    }
}

}  // namespace

IterationParameters instantiate_preset(Preset p, const DirectedGraph& g, int d,
                                       const PresetWeights& w) {
    const int n = g.n();
    if (d < 1) throw TooSmall("dimension must be at least 1");
    if (w.lambda_per_node.size() != n)
        throw DimensionMismatch("stepsize vector does not cover every node");
    for (int i = 0; i < n; ++i)
        if (!(w.lambda_per_node[i] > 0.0))
            throw ConfigError("stepsizes must be positive");

    const bool needs_W = (p == Preset::AugDGM || p == Preset::DIGing ||
                          p == Preset::ATCDIGing || p == Preset::AsynDGM);
    if (needs_W && !w.W)
        throw ConfigError("preset needs a doubly stochastic matrix W");
    if (!needs_W && (!w.R || !w.C))
        throw ConfigError("preset needs matrices R and C");

    // Homogeneous-stepsize presets reject per-node variation.
    const bool uniform_lambda =
        (p == Preset::DIGing || p == Preset::AB || p == Preset::PushPull_pu ||
         p == Preset::PushPull_du || p == Preset::PushPull_zhang);
    if (uniform_lambda)
        for (int i = 1; i < n; ++i)
            if (w.lambda_per_node[i] != w.lambda_per_node[0])
                throw ConfigError(
                    "this preset uses one shared stepsize for all nodes");

    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd R, A, C, B;
    switch (p) {
        case Preset::AugDGM:
        case Preset::ATCDIGing:
            check_matrix(*w.W, g, Stochasticity::Doubly, "W");
            R = *w.W; A = *w.W; C = *w.W; B = *w.W;
            break;
        case Preset::DIGing:
            check_matrix(*w.W, g, Stochasticity::Doubly, "W");
            R = *w.W; A = I; C = *w.W; B = I;
            break;
        case Preset::AsynDGM:
            check_matrix(*w.W, g, Stochasticity::Doubly, "W");
            R = *w.W; A = *w.W; C = *w.W; B = I;
            break;
        case Preset::AB:
            check_matrix(*w.R, g, Stochasticity::Row, "R");
            check_matrix(*w.C, g, Stochasticity::Column, "C");
            R = *w.R; A = I; C = *w.C; B = *w.C;
            break;
        case Preset::PushPull_pu:
            check_matrix(*w.R, g, Stochasticity::Row, "R");
            check_matrix(*w.C, g, Stochasticity::Column, "C");
            R = *w.R; A = *w.R; C = *w.C; B = *w.C;
            break;
        case Preset::PushPull_du:
            check_matrix(*w.R, g, Stochasticity::Row, "R");
            check_matrix(*w.C, g, Stochasticity::Column, "C");
            R = *w.R; A = I; C = *w.C; B = I;
            break;
        case Preset::PushPull_zhang:
            check_matrix(*w.R, g, Stochasticity::Row, "R");
            check_matrix(*w.C, g, Stochasticity::Column, "C");
            R = *w.R; A = *w.R; C = *w.C; B = I;
            break;
    }

    IterationParameters P;
    P.k = 0;
    P.phase = Phase::Stochastic;
    fill_from_matrices(P, g, d, R, A, C, B, w.lambda_per_node);
    return P;
}

ExecutionTrace run_preset(const ObjectiveSuite& suite, const DirectedGraph& g,
                          Preset p, const PresetWeights& w, long long T,
                          InitBox box, std::optional<std::uint64_t> init_seed,
                          RunOptions opts) {
    IterationParameters P = instantiate_preset(p, g, suite.d(), w);
    ScheduleConfig sched;
    sched.K = 0;
    sched.lambda = w.lambda_per_node.size() > 0 ? w.lambda_per_node[0] : 0.0;
    sched.seed = init_seed.value_or(1);
    std::vector<NodeState> init = initialize(suite, g, box, sched.seed);
    std::vector<Eigen::VectorXd> init_x;
    init_x.reserve(init.size());
    for (auto& s : init) init_x.push_back(std::move(s.x));
    ExecutionTrace trace = run_with_provider(
        suite, g,
        [&](long long k) {
            IterationParameters Pk = P;
            Pk.k = k;
            return Pk;
        },
        T, init_x, opts);
    trace.schedule = sched;
    trace.schedule_kind = preset_name(p);
    trace.seed = sched.seed;
    return trace;
}

namespace {

bool same_vec(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) return false;
    for (Eigen::Index l = 0; l < a.size(); ++l)
        if (a[l] != b[l]) return false;
    return true;
}

bool blocks_equal(const std::vector<std::vector<Eigen::VectorXd>>& a,
                  const std::vector<std::vector<Eigen::VectorXd>>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != b[i].size()) return false;
        for (std::size_t p = 0; p < a[i].size(); ++p)
            if (!same_vec(a[i][p], b[i][p])) return false;
    }
    return true;
}

bool is_identity_blocks(const std::vector<std::vector<Eigen::VectorXd>>& blocks,
                        const DirectedGraph& g, bool row_layout) {
    for (int i = 0; i < g.n(); ++i) {
        const auto& closure = row_layout ? g.in_closure(i) : g.out_closure(i);
        for (std::size_t p = 0; p < closure.size(); ++p) {
            const bool self = closure[p] == i;
            const Eigen::VectorXd& blk = blocks[(std::size_t)i][p];
            for (int l = 0; l < blk.size(); ++l)
                if (blk[l] != (self ? 1.0 : 0.0)) return false;
        }
    }
    return true;
}

}  // namespace

double extra_equivalence_check(const ExecutionTrace& trace) {
    if (!trace.full_record)
        throw MissingSidecar(
            "the identity check needs the recorded parameters");
    if (trace.T < 3)
        throw SeriesTooShort(
            "the two-step identity needs at least three iterations");
    const DirectedGraph& g = trace.graph;
    const int n = g.n();
    const int d = trace.d;

    const IterationParameters& P0 = trace.iters[0].params;
    for (const auto& it : trace.iters) {
        if (!blocks_equal(it.params.Rrow, P0.Rrow) ||
            !blocks_equal(it.params.Arow, P0.Arow) ||
            !blocks_equal(it.params.Ccol, P0.Ccol) ||
            !blocks_equal(it.params.Bcol, P0.Bcol))
            throw WrongPreset("weights vary over iterations");
        for (int i = 0; i < n; ++i)
            if (!same_vec(it.params.Lambda[(std::size_t)i], P0.Lambda[0]))
                throw WrongPreset(
                    "the two-step reduction needs one constant stepsize "
                    "shared by all nodes");
    }
    if (!is_identity_blocks(P0.Arow, g, true))
        throw WrongPreset("the reduction needs A = I");
    if (!is_identity_blocks(P0.Bcol, g, false))
        throw WrongPreset("the reduction needs B = I");

    const Eigen::MatrixXd Rg = global_matrix(P0, g, d, 'R');
    const Eigen::MatrixXd Cg = global_matrix(P0, g, d, 'C');
    Eigen::VectorXd lambda_diag(n * d);
    for (int i = 0; i < n; ++i)
        lambda_diag.segment(i * d, d) = P0.Lambda[(std::size_t)i];

    auto stack_x = [&](long long k) {
        Eigen::VectorXd v(n * d);
        const std::vector<NodeState>& st =
            k < trace.T ? trace.iters[(std::size_t)k].states
                        : trace.final_states;
        for (int i = 0; i < n; ++i) v.segment(i * d, d) = st[(std::size_t)i].x;
        return v;
    };
    auto stack_g = [&](long long k) {
        Eigen::VectorXd v(n * d);
        const std::vector<Eigen::VectorXd>& gr =
            k < trace.T ? trace.iters[(std::size_t)k].grads : trace.final_grads;
        for (int i = 0; i < n; ++i) v.segment(i * d, d) = gr[(std::size_t)i];
        return v;
    };

    double worst = 0.0;
    Eigen::VectorXd x_prev = stack_x(0), x_cur = stack_x(1);
    Eigen::VectorXd g_prev = stack_g(0), g_cur = stack_g(1);
    for (long long k = 1; k + 1 <= trace.T; ++k) {
        const Eigen::VectorXd x_next = stack_x(k + 1);
        const Eigen::VectorXd resid = x_next - Rg * x_cur - Cg * x_cur +
                                      Cg * (Rg * x_prev) +
                                      lambda_diag.cwiseProduct(g_cur - g_prev);
        worst = std::max(worst, resid.lpNorm<Eigen::Infinity>());
        x_prev = x_cur;
        x_cur = x_next;
        g_prev = g_cur;
        g_cur = stack_g(k + 1);
    }
    return worst;
}

ExecutionTrace replay(const ExecutionTrace& trace, const ObjectiveSuite& suite) {
    if (!trace.full_record)
        throw MissingSidecar("replay needs the recorded parameters");
    if (suite.n() != trace.graph.n() || suite.d() != trace.d)
        throw DimensionMismatch("suite does not match the trace");
    std::vector<Eigen::VectorXd> init_x;
    init_x.reserve((std::size_t)trace.graph.n());
    if (trace.T > 0) {
        for (const auto& s : trace.iters[0].states) init_x.push_back(s.x);
    } else {
        for (const auto& s : trace.final_states) init_x.push_back(s.x);
    }
    ExecutionTrace out = run_with_provider(
        suite, trace.graph,
        [&](long long k) { return trace.iters[(std::size_t)k].params; },
        trace.T, init_x, RunOptions{});
    out.schedule = trace.schedule;
    out.schedule_kind = trace.schedule_kind;
    out.seed = trace.seed;
    out.config_echo = trace.config_echo;
    return out;
}

}  // namespace dgt
