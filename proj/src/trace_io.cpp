#include "dgt/trace_io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dgt/errors.hpp"

namespace dgt {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::string hex_u64(std::uint64_t v) {
    char buf[19] = "0x";
    const auto res = std::to_chars(buf + 2, buf + sizeof(buf), v, 16);
    return std::string(buf, res.ptr);
}

double node_err(const NodeState& s, bool has_optimum,
                const Eigen::VectorXd& x_star) {
    if (!has_optimum) return std::numeric_limits<double>::quiet_NaN();
    return (s.x - x_star).norm();
}

void write_state_row(std::ostream& os, long long k, int node_1based,
                     const NodeState& s, double err) {
    os << k << ',' << node_1based;
    for (Eigen::Index l = 0; l < s.x.size(); ++l)
        os << ',' << format_double(s.x[l]);
    for (Eigen::Index l = 0; l < s.y.size(); ++l)
        os << ',' << format_double(s.y[l]);
    os << ',' << format_double(err) << '\n';
}

}  // namespace

void write_trace_csv(const ExecutionTrace& trace, const std::string& path) {
    std::ostringstream os;
    os << "# schema=trace.v1\n";
    os << "# seed=" << trace.seed << '\n';
    os << "# graph_hash=" << hex_u64(trace.graph.hash()) << '\n';
    os << "# schedule=" << trace.schedule_kind << '\n';
    os << "# n=" << trace.graph.n() << '\n';
    os << "# d=" << trace.d << '\n';
    os << "# T=" << trace.T << '\n';
    if (!trace.config_echo.empty()) os << "# config=" << trace.config_echo << '\n';
    os << "k,node";
    for (int l = 0; l < trace.d; ++l) os << ",x" << l;
    for (int l = 0; l < trace.d; ++l) os << ",y" << l;
    os << ",err\n";
    for (long long k = 0; k < trace.T; ++k) {
        const auto& st = trace.iters[(std::size_t)k].states;
        for (int i = 0; i < trace.graph.n(); ++i)
            write_state_row(os, k, i + 1, st[(std::size_t)i],
                            node_err(st[(std::size_t)i], trace.has_optimum,
                                     trace.x_star));
    }
    for (int i = 0; i < trace.graph.n(); ++i)
        write_state_row(os, trace.T, i + 1, trace.final_states[(std::size_t)i],
                        node_err(trace.final_states[(std::size_t)i],
                                 trace.has_optimum, trace.x_star));
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open for writing: " + path);
    const std::string body = os.str();
    f.write(body.data(), (std::streamsize)body.size());
    if (!f) throw ConfigError("write failed: " + path);
}

void write_error_csv(const std::vector<double>& errs, const std::string& path) {
    std::ostringstream os;
    os << "k,err\n";
    for (std::size_t k = 0; k < errs.size(); ++k)
        os << k << ',' << format_double(errs[k]) << '\n';
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open for writing: " + path);
    const std::string body = os.str();
    f.write(body.data(), (std::streamsize)body.size());
    if (!f) throw ConfigError("write failed: " + path);
}

/* binary sidecar */

namespace {

constexpr char kMagic[8] = {'D', 'G', 'T', 'S', 'I', 'D', 'E', '1'};

struct Writer {
    std::ofstream f;
    explicit Writer(const std::string& path) : f(path, std::ios::binary) {
        if (!f) throw ConfigError("cannot open for writing: " + path);
    }
    void raw(const void* p, std::size_t len) {
        f.write(static_cast<const char*>(p), (std::streamsize)len);
    }
    void u64(std::uint64_t v) { raw(&v, 8); }
    void i64(long long v) { u64(std::bit_cast<std::uint64_t>((std::int64_t)v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void u8(std::uint8_t v) { raw(&v, 1); }
    void str(const std::string& s) {
        u64(s.size());
        raw(s.data(), s.size());
    }
    void vec(const Eigen::VectorXd& v) {
        u64((std::uint64_t)v.size());
        for (Eigen::Index l = 0; l < v.size(); ++l) f64(v[l]);
    }
};

struct Reader {
    std::ifstream f;
    explicit Reader(const std::string& path) : f(path, std::ios::binary) {
        if (!f) throw MissingSidecar("sidecar not found: " + path);
    }
    void raw(void* p, std::size_t len) {
        f.read(static_cast<char*>(p), (std::streamsize)len);
        if ((std::size_t)f.gcount() != len)
            throw MissingSidecar("truncated sidecar");
    }
    std::uint64_t u64() {
        std::uint64_t v;
        raw(&v, 8);
        return v;
    }
    long long i64() { return (long long)std::bit_cast<std::int64_t>(u64()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::uint8_t u8() {
        std::uint8_t v;
        raw(&v, 1);
        return v;
    }
    std::string str() {
        const std::uint64_t len = u64();
        if (len > (1ull << 32)) throw MissingSidecar("corrupt sidecar");
        std::string s(len, '\0');
        if (len) raw(s.data(), len);
        return s;
    }
    Eigen::VectorXd vec() {
        const std::uint64_t len = u64();
        if (len > (1ull << 28)) throw MissingSidecar("corrupt sidecar");
        Eigen::VectorXd v((Eigen::Index)len);
        for (std::uint64_t l = 0; l < len; ++l) v[(Eigen::Index)l] = f64();
        return v;
    }
};

void write_params(Writer& w, const IterationParameters& P) {
    w.i64(P.k);
    w.u8(P.phase == Phase::Private ? 0 : 1);
    auto blocks = [&](const std::vector<std::vector<Eigen::VectorXd>>& bb) {
        w.u64(bb.size());
        for (const auto& row : bb) {
            w.u64(row.size());
            for (const auto& v : row) w.vec(v);
        }
    };
    w.u64(P.Lambda.size());
    for (const auto& v : P.Lambda) w.vec(v);
    blocks(P.Rrow);
    blocks(P.Arow);
    blocks(P.Ccol);
    blocks(P.Bcol);
}

IterationParameters read_params(Reader& r) {
    IterationParameters P;
    P.k = r.i64();
    P.phase = r.u8() == 0 ? Phase::Private : Phase::Stochastic;
    auto blocks = [&](std::vector<std::vector<Eigen::VectorXd>>& bb) {
        bb.resize(r.u64());
        for (auto& row : bb) {
            row.resize(r.u64());
            for (auto& v : row) v = r.vec();
        }
    };
    P.Lambda.resize(r.u64());
    for (auto& v : P.Lambda) v = r.vec();
    blocks(P.Rrow);
    blocks(P.Arow);
    blocks(P.Ccol);
    blocks(P.Bcol);
    return P;
}

// Reconstruct the wire content of one iteration from states, gradients and
// parameters, evaluating exactly the expressions the engine evaluates.
void rebuild_wire(IterationRecord& rec,
                  const std::vector<Eigen::VectorXd>& next_grads,
                  const DirectedGraph& g, long long k) {
    const int n = g.n();
    std::vector<Eigen::VectorXd> lambda_y((std::size_t)n);
    for (int j = 0; j < n; ++j)
        lambda_y[(std::size_t)j] = rec.params.Lambda[(std::size_t)j]
                                       .cwiseProduct(rec.states[(std::size_t)j].y);
    rec.messages.clear();
    for (int j = 0; j < n; ++j)
        for (int i : g.out_neighbors(j)) {
            Message m;
            m.sender = j;
            m.receiver = i;
            m.k = k;
            m.kind = MessageKind::XLambdaY;
            m.x = rec.states[(std::size_t)j].x;
            m.lambda_y = lambda_y[(std::size_t)j];
            rec.messages.push_back(std::move(m));
        }
    rec.self_lambda_y = std::move(lambda_y);
    rec.self_tracker.resize((std::size_t)n);
    for (int j = 0; j < n; ++j) {
        const auto& oc = g.out_closure(j);
        const Eigen::VectorXd dgrad =
            next_grads[(std::size_t)j] - rec.grads[(std::size_t)j];
        for (std::size_t p = 0; p < oc.size(); ++p) {
            Eigen::VectorXd t =
                rec.params.Ccol[(std::size_t)j][p].cwiseProduct(
                    rec.states[(std::size_t)j].y) +
                rec.params.Bcol[(std::size_t)j][p].cwiseProduct(dgrad);
            if (oc[p] == j) {
                rec.self_tracker[(std::size_t)j] = std::move(t);
            } else {
                Message m;
                m.sender = j;
                m.receiver = oc[p];
                m.k = k;
                m.kind = MessageKind::TrackerUpdate;
                m.tracker = std::move(t);
                rec.messages.push_back(std::move(m));
            }
        }
    }
}

}  // namespace

void save_sidecar(const ExecutionTrace& trace, const std::string& path) {
    Writer w(path);
    w.raw(kMagic, sizeof(kMagic));
    w.u64(trace.seed);
    w.i64(trace.schedule.K);
    w.f64(trace.schedule.eta);
    w.f64(trace.schedule.lambda);
    w.u8((std::uint8_t)trace.schedule.private_distribution.kind);
    w.f64(trace.schedule.private_distribution.a);
    w.f64(trace.schedule.private_distribution.b);
    w.u64(trace.schedule.seed);
    w.str(trace.schedule_kind);
    w.i64(trace.graph.n());
    w.u64(trace.graph.edges().size());
    for (const auto& [recv, send] : trace.graph.edges()) {
        w.i64(recv);
        w.i64(send);
    }
    w.i64(trace.d);
    w.i64(trace.T);
    w.u8(trace.has_optimum ? 1 : 0);
    if (trace.has_optimum) w.vec(trace.x_star);
    w.u8(trace.full_record ? 1 : 0);
    w.str(trace.config_echo);
    for (const auto& it : trace.iters) {
        for (const auto& s : it.states) {
            w.vec(s.x);
            w.vec(s.y);
        }
        for (const auto& gr : it.grads) w.vec(gr);
        w.f64(it.err);
        if (trace.full_record) write_params(w, it.params);
    }
    for (const auto& s : trace.final_states) {
        w.vec(s.x);
        w.vec(s.y);
    }
    for (const auto& gr : trace.final_grads) w.vec(gr);
    w.f64(trace.final_err);
    if (!w.f) throw ConfigError("write failed: " + path);
}

ExecutionTrace load_sidecar(const std::string& path) {
    Reader r(path);
    char magic[8];
    r.raw(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw MissingSidecar("not a sidecar file: " + path);
    ExecutionTrace trace;
    trace.seed = r.u64();
    trace.schedule.K = r.i64();
    trace.schedule.eta = r.f64();
    trace.schedule.lambda = r.f64();
    trace.schedule.private_distribution.kind = (NoiseKind)r.u8();
    trace.schedule.private_distribution.a = r.f64();
    trace.schedule.private_distribution.b = r.f64();
    trace.schedule.seed = r.u64();
    trace.schedule_kind = r.str();
    const int n = (int)r.i64();
    const std::uint64_t ecount = r.u64();
    if (ecount > (1ull << 32)) throw MissingSidecar("corrupt sidecar");
    std::vector<std::pair<int, int>> edges;
    edges.reserve(ecount);
    for (std::uint64_t e = 0; e < ecount; ++e) {
        const int recv = (int)r.i64();
        const int send = (int)r.i64();
        edges.emplace_back(recv, send);
    }
    trace.graph = build_graph(n, std::move(edges));
    trace.d = (int)r.i64();
    trace.T = r.i64();
    if (trace.T < 0 || trace.T > (1ll << 40))
        throw MissingSidecar("corrupt sidecar");
    trace.has_optimum = r.u8() != 0;
    if (trace.has_optimum) trace.x_star = r.vec();
    trace.full_record = r.u8() != 0;
    trace.config_echo = r.str();
    trace.iters.resize((std::size_t)trace.T);
    for (auto& it : trace.iters) {
        it.states.resize((std::size_t)n);
        for (auto& s : it.states) {
            s.x = r.vec();
            s.y = r.vec();
        }
        it.grads.resize((std::size_t)n);
        for (auto& gr : it.grads) gr = r.vec();
        it.err = r.f64();
        if (trace.full_record) it.params = read_params(r);
    }
    trace.final_states.resize((std::size_t)n);
    for (auto& s : trace.final_states) {
        s.x = r.vec();
        s.y = r.vec();
    }
    trace.final_grads.resize((std::size_t)n);
    for (auto& gr : trace.final_grads) gr = r.vec();
    trace.final_err = r.f64();

    if (trace.full_record) {
        for (long long k = 0; k < trace.T; ++k) {
            const std::vector<Eigen::VectorXd>& next_grads =
                k + 1 < trace.T ? trace.iters[(std::size_t)k + 1].grads
                                : trace.final_grads;
            rebuild_wire(trace.iters[(std::size_t)k], next_grads, trace.graph,
                         k);
        }
    }
    return trace;
}

}  // namespace dgt
