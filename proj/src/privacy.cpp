#include "dgt/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dgt/errors.hpp"

namespace dgt {
namespace {

std::string node_tag(int i) { return std::to_string(i + 1); }

std::string edge_tag(int receiver, int sender) {
    return node_tag(receiver) + "<-" + node_tag(sender);
}

}  // namespace

std::vector<std::tuple<long long, std::string, Eigen::VectorXd>>
InformationSet::flatten() const {
    std::vector<std::tuple<long long, std::string, Eigen::VectorXd>> out;
    for (const auto& view : iterations) {
        const long long k = view.k;
        for (const auto& s : view.member_states) {
            out.emplace_back(k, "x[" + node_tag(s.node) + "]", s.x);
            out.emplace_back(k, "y[" + node_tag(s.node) + "]", s.y);
            out.emplace_back(k, "ly[" + node_tag(s.node) + "]", s.lambda_y);
            out.emplace_back(k, "tr[" + node_tag(s.node) + "]",
                             s.self_tracker);
        }
        for (const auto& w : view.wires) {
            const std::string tag = edge_tag(w.receiver, w.sender);
            if (w.kind == MessageKind::XLambdaY) {
                out.emplace_back(k, "wx[" + tag + "]", w.x);
                out.emplace_back(k, "wly[" + tag + "]", w.lambda_y);
            } else {
                out.emplace_back(k, "wtr[" + tag + "]", w.tracker);
            }
        }
        for (const auto& o : view.owned) {
            out.emplace_back(k, "oL[" + node_tag(o.node) + "]", o.Lambda);
            const auto& ic = graph.in_closure(o.node);
            for (std::size_t p = 0; p < ic.size(); ++p) {
                out.emplace_back(k, "oR[" + edge_tag(o.node, ic[p]) + "]",
                                 o.Rrow[p]);
                out.emplace_back(k, "oA[" + edge_tag(o.node, ic[p]) + "]",
                                 o.Arow[p]);
            }
            const auto& oc = graph.out_closure(o.node);
            for (std::size_t p = 0; p < oc.size(); ++p) {
                out.emplace_back(k, "oC[" + edge_tag(oc[p], o.node) + "]",
                                 o.Ccol[p]);
                out.emplace_back(k, "oB[" + edge_tag(oc[p], o.node) + "]",
                                 o.Bcol[p]);
            }
        }
        if (view.params_public) {
            const IterationParameters& P = view.public_params;
            for (int i = 0; i < graph.n(); ++i)
                out.emplace_back(k, "pL[" + node_tag(i) + "]",
                                 P.Lambda[(std::size_t)i]);
            for (int i = 0; i < graph.n(); ++i) {
                const auto& ic = graph.in_closure(i);
                for (std::size_t p = 0; p < ic.size(); ++p) {
                    out.emplace_back(k, "pR[" + edge_tag(i, ic[p]) + "]",
                                     P.Rrow[(std::size_t)i][p]);
                    out.emplace_back(k, "pA[" + edge_tag(i, ic[p]) + "]",
                                     P.Arow[(std::size_t)i][p]);
                }
            }
            for (int j = 0; j < graph.n(); ++j) {
                const auto& oc = graph.out_closure(j);
                for (std::size_t p = 0; p < oc.size(); ++p) {
                    out.emplace_back(k, "pC[" + edge_tag(oc[p], j) + "]",
                                     P.Ccol[(std::size_t)j][p]);
                    out.emplace_back(k, "pB[" + edge_tag(oc[p], j) + "]",
                                     P.Bcol[(std::size_t)j][p]);
                }
            }
        }
    }
    for (const auto& s : terminal) {
        out.emplace_back(T, "x[" + node_tag(s.node) + "]", s.x);
        out.emplace_back(T, "y[" + node_tag(s.node) + "]", s.y);
    }
    return out;
}

InformationSet collect_information(const ExecutionTrace& trace,
                                   const std::vector<int>& members) {
    if (!trace.full_record)
        throw MissingSidecar(
            "information collection needs parameters and messages in the "
            "trace");
    if (members.empty())
        throw ConfigError("the coalition must contain at least one node");
    std::set<int> mset;
    for (int m : members) {
        if (m < 0 || m >= trace.graph.n())
            throw IndexOutOfRange("coalition node " + std::to_string(m + 1) +
                                  " is out of range");
        mset.insert(m);
    }

    InformationSet info;
    info.members.assign(mset.begin(), mset.end());
    info.graph = trace.graph;
    info.T = trace.T;
    info.K = trace.schedule.K;
    info.d = trace.d;
    info.iterations.reserve((std::size_t)trace.T);

    for (long long k = 0; k < trace.T; ++k) {
        const IterationRecord& rec = trace.iters[(std::size_t)k];
        IterationView view;
        view.k = k;
        for (int a : info.members) {
            StateRecord s;
            s.node = a;
            s.x = rec.states[(std::size_t)a].x;
            s.y = rec.states[(std::size_t)a].y;
            s.lambda_y = rec.self_lambda_y[(std::size_t)a];
            s.self_tracker = rec.self_tracker[(std::size_t)a];
            view.member_states.push_back(std::move(s));
        }
        for (const Message& m : rec.messages) {
            if (!mset.count(m.sender) && !mset.count(m.receiver)) continue;
            WireRecord w;
            w.sender = m.sender;
            w.receiver = m.receiver;
            w.kind = m.kind;
            w.x = m.x;
            w.lambda_y = m.lambda_y;
            w.tracker = m.tracker;
            view.wires.push_back(std::move(w));
        }
        if (rec.params.phase == Phase::Private) {
            for (int a : info.members) {
                OwnedParams o;
                o.node = a;
                o.Lambda = rec.params.Lambda[(std::size_t)a];
                o.Rrow = rec.params.Rrow[(std::size_t)a];
                o.Arow = rec.params.Arow[(std::size_t)a];
                o.Ccol = rec.params.Ccol[(std::size_t)a];
                o.Bcol = rec.params.Bcol[(std::size_t)a];
                view.owned.push_back(std::move(o));
            }
        } else {
            view.params_public = true;
            view.public_params = rec.params;
        }
        info.iterations.push_back(std::move(view));
    }

    for (int a : info.members) {
        StateRecord s;
        s.node = a;
        s.x = trace.final_states[(std::size_t)a].x;
        s.y = trace.final_states[(std::size_t)a].y;
        info.terminal.push_back(std::move(s));
    }
    return info;
}

AttackResult attack_sole_neighbor(const InformationSet& info, int target,
                                  double y_tol) {
    const DirectedGraph& g = info.graph;
    if (target < 0 || target >= g.n())
        throw IndexOutOfRange("target node " + std::to_string(target + 1) +
                              " is out of range");
    if (std::binary_search(info.members.begin(), info.members.end(), target))
        throw ConfigError("the target is itself a coalition member");
    if (info.T < 1) throw SeriesTooShort("the trace has no iterations");

    const auto& outs = g.out_neighbors(target);
    const auto& ins = g.in_neighbors(target);
    if (outs.size() != 1 || ins.size() != 1 || outs[0] != ins[0])
        throw TopologyMismatch(
            "the reconstruction needs a target with exactly one neighbor "
            "serving as both its in- and out-neighbor");
    const int j = outs[0];
    if (!std::binary_search(info.members.begin(), info.members.end(), j))
        throw TopologyMismatch(
            "the target's sole neighbor is not in the coalition");

    Eigen::VectorXd estimate = Eigen::VectorXd::Zero(info.d);
    for (const auto& view : info.iterations) {
        const Eigen::VectorXd* to_j = nullptr;
        const Eigen::VectorXd* from_j = nullptr;
        for (const auto& w : view.wires) {
            if (w.kind != MessageKind::TrackerUpdate) continue;
            if (w.sender == target && w.receiver == j) to_j = &w.tracker;
            if (w.sender == j && w.receiver == target) from_j = &w.tracker;
        }
        if (!to_j || !from_j)
            throw TopologyMismatch(
                "expected tracker traffic between the target and its "
                "neighbor is missing");
        estimate += *to_j - *from_j;
    }

    // Gauge how settled the target is from its last stepsize-scaled tracker
    // transmission; the stepsize is public once the stochastic phase starts.
    AttackResult result;
    result.estimate = std::move(estimate);
    result.y_norm_estimate = std::numeric_limits<double>::quiet_NaN();
    result.converged = false;
    const IterationView& last = info.iterations.back();
    if (last.params_public) {
        const Eigen::VectorXd& lam =
            last.public_params.Lambda[(std::size_t)target];
        for (const auto& w : last.wires) {
            if (w.kind == MessageKind::XLambdaY && w.sender == target &&
                w.receiver == j) {
                Eigen::VectorXd y_est(info.d);
                bool ok = true;
                for (int l = 0; l < info.d; ++l) {
                    if (lam[l] == 0.0) { ok = false; break; }
                    y_est[l] = w.lambda_y[l] / lam[l];
                }
                if (ok) {
                    result.y_norm_estimate = y_est.norm();
                    result.converged = result.y_norm_estimate <= y_tol;
                }
                break;
            }
        }
    }
    return result;
}

AlternativeExecution construct_indistinguishable(
    const ExecutionTrace& trace, const ObjectiveSuite& suite,
    const GradientShift& shift, const std::vector<int>& adversaries) {
    if (!trace.full_record)
        throw MissingSidecar(
            "constructing an alternative needs parameters and messages in "
            "the trace");
    if (trace.T < 1) throw SeriesTooShort("the trace has no iterations");
    if (suite.n() != trace.graph.n() || suite.d() != trace.d)
        throw DimensionMismatch("suite does not match the trace");
    if (trace.schedule.K < 1 ||
        trace.iters[0].params.phase != Phase::Private)
        throw ConfigError(
            "the alternative construction needs a private first iteration");
    if (shift.delta.size() != trace.d)
        throw DimensionMismatch("shift has wrong dimension");

    const DirectedGraph& g = trace.graph;
    const int i = shift.target;
    if (i < 0 || i >= g.n())
        throw IndexOutOfRange("target node " + std::to_string(i + 1) +
                              " is out of range");
    std::set<int> aset(adversaries.begin(), adversaries.end());
    if (aset.count(i))
        throw ConfigError("the target is itself a coalition member");

    // Pick the counterpart: a neighbor of the target outside the coalition,
    // preferring out-neighbors (they receive the target's rescaled tracker
    // column directly).
    int m = -1;
    if (shift.counterpart) {
        m = *shift.counterpart;
        if (m < 0 || m >= g.n())
            throw IndexOutOfRange("counterpart node " + std::to_string(m + 1) +
                                  " is out of range");
        if (m == i || aset.count(m))
            throw NoCounterpart(
                "the chosen counterpart must be a non-coalition node other "
                "than the target");
        const auto& outs = g.out_neighbors(i);
        const auto& ins = g.in_neighbors(i);
        if (!std::binary_search(outs.begin(), outs.end(), m) &&
            !std::binary_search(ins.begin(), ins.end(), m))
            throw NoCounterpart(
                "the chosen counterpart is not adjacent to the target");
    } else {
        for (int cand : g.out_neighbors(i))
            if (!aset.count(cand) && cand != i) { m = cand; break; }
        if (m < 0)
            for (int cand : g.in_neighbors(i))
                if (!aset.count(cand) && cand != i) { m = cand; break; }
        if (m < 0)
            throw NoCounterpart(
                "every neighbor of the target is in the coalition");
    }
    const auto& outs_i = g.out_neighbors(i);
    const bool case_out =
        std::binary_search(outs_i.begin(), outs_i.end(), m);

    // Tracker states entering iteration 0 equal the initial gradients.
    const Eigen::VectorXd y_i = trace.iters[0].states[(std::size_t)i].y;
    const Eigen::VectorXd y_m = trace.iters[0].states[(std::size_t)m].y;
    double ymax = 0.0;
    for (const auto& s : trace.iters[0].states)
        ymax = std::max(ymax, s.y.lpNorm<Eigen::Infinity>());
    const double eps_den = 1e-6 * (1.0 + ymax);

    const Eigen::VectorXd& delta = shift.delta;
    Eigen::VectorXd den_i(trace.d), den_m(trace.d);
    for (int l = 0; l < trace.d; ++l) {
        den_i[l] = y_i[l] + delta[l];
        den_m[l] = y_m[l] - delta[l];
        if (std::abs(den_i[l]) < eps_den || std::abs(den_m[l]) < eps_den)
            throw DenominatorNearZero(
                l, "the rescaling denominator is too close to zero");
    }

    // Alternative objectives: +delta'x on the target, -delta'x on the
    // counterpart. Optimum, curvature and convexity bounds are unchanged.
    ObjectiveSuite alt = suite;
    alt.objectives[(std::size_t)i] =
        shifted(suite.objectives[(std::size_t)i], delta);
    alt.objectives[(std::size_t)m] =
        shifted(suite.objectives[(std::size_t)m], -delta);

    // Alternative first-iteration weights. scale factors are applied first
    // so that a zero shift reproduces every original weight bit for bit.
    IterationParameters P0 = trace.iters[0].params;
    Eigen::VectorXd scale_i(trace.d), scale_m(trace.d);
    for (int l = 0; l < trace.d; ++l) {
        scale_i[l] = y_i[l] / den_i[l];
        scale_m[l] = y_m[l] / den_m[l];
    }
    for (int l = 0; l < trace.d; ++l) {
        P0.Lambda[(std::size_t)i][l] *= scale_i[l];
        P0.Lambda[(std::size_t)m][l] *= scale_m[l];
    }
    const int special_i = case_out ? m : i;  // receiver absorbing +delta
    const int special_m = case_out ? m : i;  // receiver absorbing -delta
    {
        const auto& oc = g.out_closure(i);
        for (std::size_t p = 0; p < oc.size(); ++p) {
            Eigen::VectorXd& c = P0.Ccol[(std::size_t)i][p];
            for (int l = 0; l < trace.d; ++l) {
                c[l] *= scale_i[l];
                if (oc[p] == special_i) c[l] += delta[l] / den_i[l];
            }
        }
    }
    {
        const auto& oc = g.out_closure(m);
        for (std::size_t p = 0; p < oc.size(); ++p) {
            Eigen::VectorXd& c = P0.Ccol[(std::size_t)m][p];
            for (int l = 0; l < trace.d; ++l) {
                c[l] *= scale_m[l];
                if (oc[p] == special_m) c[l] -= delta[l] / den_m[l];
            }
        }
    }

    std::vector<Eigen::VectorXd> init_x;
    init_x.reserve((std::size_t)g.n());
    for (const auto& s : trace.iters[0].states) init_x.push_back(s.x);

    ExecutionTrace alt_trace = run_with_provider(
        alt, g,
        [&](long long k) {
            if (k == 0) return P0;
            return trace.iters[(std::size_t)k].params;
        },
        trace.T, init_x, RunOptions{});
    alt_trace.schedule = trace.schedule;
    alt_trace.schedule_kind = trace.schedule_kind;
    alt_trace.seed = trace.seed;
    alt_trace.config_echo = trace.config_echo;

    AlternativeExecution out;
    out.trace = std::move(alt_trace);
    out.suite = std::move(alt);
    out.target = i;
    out.counterpart = m;
    return out;
}

double verify_indistinguishability(const InformationSet& a,
                                   const InformationSet& b) {
    if (a.members != b.members)
        throw StructureMismatch("coalitions differ");
    if (a.graph.hash() != b.graph.hash())
        throw StructureMismatch("topologies differ");
    if (a.T != b.T || a.K != b.K || a.d != b.d)
        throw StructureMismatch("run shapes differ");
    const auto fa = a.flatten();
    const auto fb = b.flatten();
    if (fa.size() != fb.size())
        throw StructureMismatch("information sets have different field counts");
    double worst = 0.0;
    for (std::size_t r = 0; r < fa.size(); ++r) {
        const auto& [ka, name_a, va] = fa[r];
        const auto& [kb, name_b, vb] = fb[r];
        if (ka != kb || name_a != name_b || va.size() != vb.size())
            throw StructureMismatch("information sets do not align at field " +
                                    name_a);
        for (Eigen::Index l = 0; l < va.size(); ++l)
            worst = std::max(worst, std::abs(va[l] - vb[l]));
    }
    return worst;
}

}  // namespace dgt
