#include "dgt/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include "dgt/errors.hpp"
#include "json.hpp"

namespace dgt {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError(path + ": " + msg);
}

const json* find(const json& j, const char* key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

void check_object(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* a : allowed)
            if (it.key() == a) { known = true; break; }
        if (!known)
            fail(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
    }
}

std::string get_str(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

bool get_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) fail(path, "expected true or false");
    return j.get<bool>();
}

double get_num(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

long long get_int(const json& j, const std::string& path) {
    if (!j.is_number_integer() && !j.is_number_unsigned())
        fail(path, "expected an integer");
    return j.get<long long>();
}

std::uint64_t get_seed(const json& j, const std::string& path) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<long long>() >= 0)
        return static_cast<std::uint64_t>(j.get<long long>());
    fail(path, "expected a nonnegative integer");
}

// 1-based node id from the file.
int get_node(const json& j, const std::string& path) {
    long long v = get_int(j, path);
    if (v < 1) fail(path, "node ids are 1-based");
    return static_cast<int>(v - 1);
}

// A number is accepted as a 1-dimensional vector.
Eigen::VectorXd get_vec(const json& j, const std::string& path) {
    if (j.is_number()) {
        Eigen::VectorXd v(1);
        v[0] = j.get<double>();
        return v;
    }
    if (!j.is_array()) fail(path, "expected a number or an array of numbers");
    Eigen::VectorXd v(static_cast<int>(j.size()));
    for (int l = 0; l < v.size(); ++l)
        v[l] = get_num(j[l], path + "[" + std::to_string(l) + "]");
    return v;
}

Eigen::MatrixXd get_mat(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected an array of rows");
    int rows = static_cast<int>(j.size());
    Eigen::VectorXd first = get_vec(j[0], path + "[0]");
    Eigen::MatrixXd m(rows, first.size());
    m.row(0) = first.transpose();
    for (int r = 1; r < rows; ++r) {
        Eigen::VectorXd row = get_vec(j[r], path + "[" + std::to_string(r) + "]");
        if (row.size() != m.cols())
            fail(path + "[" + std::to_string(r) + "]", "ragged row length");
        m.row(r) = row.transpose();
    }
    return m;
}

GraphSpec parse_graph(const json& j) {
    check_object(j, "graph");
    check_keys(j, "graph", {"kind", "n", "edges"});
    GraphSpec s;
    const json* k = find(j, "kind");
    if (!k) fail("graph.kind", "required");
    s.kind = get_str(*k, "graph.kind");

    bool named = s.kind == "fig1b" || s.kind == "cycle3" || s.kind == "pair";
    if (s.kind != "ring" && s.kind != "edges" && !named)
        fail("graph.kind", "unknown kind '" + s.kind +
                               "' (expected edges, ring, fig1b, cycle3, pair)");
    if (named) {
        if (find(j, "n")) fail("graph.n", "not used for kind '" + s.kind + "'");
        if (find(j, "edges"))
            fail("graph.edges", "not used for kind '" + s.kind + "'");
        return s;
    }

    const json* n = find(j, "n");
    if (!n) fail("graph.n", "required for kind '" + s.kind + "'");
    long long nv = get_int(*n, "graph.n");
    if (nv < 2) fail("graph.n", "need at least 2 nodes");
    s.n = static_cast<int>(nv);

    if (s.kind == "ring") {
        if (find(j, "edges")) fail("graph.edges", "not used for kind 'ring'");
        return s;
    }

    const json* e = find(j, "edges");
    if (!e || !e->is_array() || e->empty())
        fail("graph.edges", "required non-empty array of [sender, receiver]");
    for (int i = 0; i < static_cast<int>(e->size()); ++i) {
        const json& pair = (*e)[i];
        std::string path = "graph.edges[" + std::to_string(i) + "]";
        if (!pair.is_array() || pair.size() != 2)
            fail(path, "expected [sender, receiver]");
        int snd = get_node(pair[0], path + "[0]");
        int rcv = get_node(pair[1], path + "[1]");
        if (snd >= s.n || rcv >= s.n) fail(path, "node id exceeds graph.n");
        s.edges.emplace_back(snd, rcv);
    }
    return s;
}

SuiteSpec parse_suite(const json& j) {
    check_object(j, "suite");
    check_keys(j, "suite",
               {"kind", "positions", "Q", "z", "sigma", "n", "s", "d", "seed"});
    SuiteSpec s;
    const json* k = find(j, "kind");
    if (!k) fail("suite.kind", "required");
    s.kind = get_str(*k, "suite.kind");

    if (s.kind == "rendezvous") {
        const json* p = find(j, "positions");
        if (!p || !p->is_array() || p->empty())
            fail("suite.positions", "required non-empty array");
        for (int i = 0; i < static_cast<int>(p->size()); ++i) {
            s.positions.push_back(
                get_vec((*p)[i], "suite.positions[" + std::to_string(i) + "]"));
            if (s.positions.back().size() != s.positions[0].size())
                fail("suite.positions[" + std::to_string(i) + "]",
                     "dimension differs from node 1");
        }
        s.n = static_cast<int>(s.positions.size());
        s.d = static_cast<int>(s.positions[0].size());
        return s;
    }

    if (s.kind == "estimation") {
        const json* Q = find(j, "Q");
        const json* z = find(j, "z");
        if (!Q || !Q->is_array() || Q->empty())
            fail("suite.Q", "required non-empty array of matrices");
        if (!z || !z->is_array() || z->size() != Q->size())
            fail("suite.z", "required array, one vector per node");
        for (int i = 0; i < static_cast<int>(Q->size()); ++i) {
            std::string qi = "suite.Q[" + std::to_string(i) + "]";
            s.Q.push_back(get_mat((*Q)[i], qi));
            if (s.Q.back().cols() != s.Q[0].cols())
                fail(qi, "decision dimension differs from node 1");
            s.z.push_back(get_vec((*z)[i], "suite.z[" + std::to_string(i) + "]"));
            if (s.z.back().size() != s.Q.back().rows())
                fail("suite.z[" + std::to_string(i) + "]",
                     "length must match the matrix row count");
        }
        s.n = static_cast<int>(s.Q.size());
        s.d = static_cast<int>(s.Q[0].cols());
        if (const json* sg = find(j, "sigma")) {
            if (sg->is_number()) {
                s.sigma.assign(s.n, sg->get<double>());
            } else if (sg->is_array()) {
                if (static_cast<int>(sg->size()) != s.n)
                    fail("suite.sigma", "need one value per node");
                for (int i = 0; i < s.n; ++i)
                    s.sigma.push_back(
                        get_num((*sg)[i], "suite.sigma[" + std::to_string(i) + "]"));
            } else {
                fail("suite.sigma", "expected a number or an array");
            }
            for (int i = 0; i < s.n; ++i)
                if (s.sigma[i] < 0.0)
                    fail("suite.sigma[" + std::to_string(i) + "]",
                         "must be nonnegative");
        } else {
            s.sigma.assign(s.n, 0.0);
        }
        return s;
    }

    if (s.kind == "random-estimation") {
        for (const char* key : {"n", "s", "d"}) {
            const json* v = find(j, key);
            std::string path = std::string("suite.") + key;
            if (!v) fail(path, "required");
            long long iv = get_int(*v, path);
            if (iv < 1) fail(path, "must be at least 1");
            int& slot = key[0] == 'n' ? s.n : key[0] == 's' ? s.s : s.d;
            slot = static_cast<int>(iv);
        }
        if (const json* sg = find(j, "sigma")) {
            s.noise_sigma = get_num(*sg, "suite.sigma");
            if (s.noise_sigma < 0.0) fail("suite.sigma", "must be nonnegative");
        }
        if (const json* sd = find(j, "seed")) s.seed = get_seed(*sd, "suite.seed");
        return s;
    }

    fail("suite.kind", "unknown kind '" + s.kind +
                           "' (expected rendezvous, estimation, random-estimation)");
}

const char* noise_kind_name(NoiseKind k) {
    switch (k) {
        case NoiseKind::Gaussian: return "gaussian";
        case NoiseKind::Laplace: return "laplace";
        case NoiseKind::Uniform: return "uniform";
    }
    return "gaussian";
}

void parse_schedule(const json& j, ScheduleConfig& s, bool& seed_given) {
    check_object(j, "schedule");
    check_keys(j, "schedule", {"K", "eta", "lambda", "seed", "distribution"});
    if (const json* v = find(j, "K")) {
        long long k = get_int(*v, "schedule.K");
        if (k < 0) fail("schedule.K", "must be nonnegative");
        s.K = static_cast<int>(k);
    }
    if (const json* v = find(j, "eta")) {
        s.eta = get_num(*v, "schedule.eta");
        if (!(s.eta > 0.0 && s.eta < 1.0))
            fail("schedule.eta", "must lie strictly between 0 and 1");
    }
    if (const json* v = find(j, "lambda")) {
        s.lambda = get_num(*v, "schedule.lambda");
        if (!(s.lambda > 0.0)) fail("schedule.lambda", "must be positive");
    }
    if (const json* v = find(j, "seed")) {
        s.seed = get_seed(*v, "schedule.seed");
        seed_given = true;
    }
    if (const json* v = find(j, "distribution")) {
        check_object(*v, "schedule.distribution");
        check_keys(*v, "schedule.distribution", {"kind", "a", "b"});
        if (const json* kk = find(*v, "kind")) {
            std::string name = get_str(*kk, "schedule.distribution.kind");
            if (name == "gaussian")
                s.private_distribution.kind = NoiseKind::Gaussian;
            else if (name == "laplace")
                s.private_distribution.kind = NoiseKind::Laplace;
            else if (name == "uniform")
                s.private_distribution.kind = NoiseKind::Uniform;
            else
                fail("schedule.distribution.kind",
                     "unknown kind '" + name +
                         "' (expected gaussian, laplace, uniform)");
        }
        if (const json* a = find(*v, "a"))
            s.private_distribution.a = get_num(*a, "schedule.distribution.a");
        if (const json* b = find(*v, "b"))
            s.private_distribution.b = get_num(*b, "schedule.distribution.b");
        NoiseSpec& ns = s.private_distribution;
        if (ns.kind == NoiseKind::Uniform && !(ns.a < ns.b))
            fail("schedule.distribution", "uniform needs a < b");
        if (ns.kind == NoiseKind::Laplace && !(ns.b > 0.0))
            fail("schedule.distribution.b", "laplace scale must be positive");
        if (ns.kind == NoiseKind::Gaussian && ns.b < 0.0)
            fail("schedule.distribution.b", "stddev must be nonnegative");
    }
}

void parse_outputs(const json& j, OutputSpec& o) {
    check_object(j, "outputs");
    check_keys(j, "outputs",
               {"trace_csv", "error_csv", "svg", "sidecar", "sidecar_path"});
    if (const json* v = find(j, "trace_csv"))
        o.trace_csv = get_str(*v, "outputs.trace_csv");
    if (const json* v = find(j, "error_csv"))
        o.error_csv = get_str(*v, "outputs.error_csv");
    if (const json* v = find(j, "svg")) o.svg = get_str(*v, "outputs.svg");
    if (const json* v = find(j, "sidecar"))
        o.sidecar = get_bool(*v, "outputs.sidecar");
    if (const json* v = find(j, "sidecar_path"))
        o.sidecar_path = get_str(*v, "outputs.sidecar_path");
    if (o.sidecar && o.sidecar_path.empty())
        fail("outputs.sidecar_path", "must be non-empty while sidecar is on");
}

std::vector<int> parse_nodes(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of node ids");
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(j.size()); ++i)
        out.push_back(get_node(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

void parse_attack(const json& j, AttackSpec& a) {
    check_object(j, "attack");
    check_keys(j, "attack",
               {"coalition", "target", "y_tol", "input", "estimate_csv"});
    if (const json* v = find(j, "coalition"))
        a.coalition = parse_nodes(*v, "attack.coalition");
    if (const json* v = find(j, "target")) a.target = get_node(*v, "attack.target");
    if (const json* v = find(j, "y_tol")) {
        a.y_tol = get_num(*v, "attack.y_tol");
        if (!(a.y_tol > 0.0)) fail("attack.y_tol", "must be positive");
    }
    if (const json* v = find(j, "input")) a.input = get_str(*v, "attack.input");
    if (const json* v = find(j, "estimate_csv"))
        a.estimate_csv = get_str(*v, "attack.estimate_csv");
}

void parse_shift(const json& j, ShiftSpec& s) {
    check_object(j, "shift");
    check_keys(j, "shift",
               {"delta", "target", "counterpart", "coalition", "pairs_csv",
                "report"});
    if (const json* v = find(j, "delta")) s.delta = get_vec(*v, "shift.delta");
    if (const json* v = find(j, "target")) s.target = get_node(*v, "shift.target");
    if (const json* v = find(j, "counterpart"))
        s.counterpart = get_node(*v, "shift.counterpart");
    if (const json* v = find(j, "coalition"))
        s.coalition = parse_nodes(*v, "shift.coalition");
    if (const json* v = find(j, "pairs_csv"))
        s.pairs_csv = get_str(*v, "shift.pairs_csv");
    if (const json* v = find(j, "report")) s.report = get_str(*v, "shift.report");
}

void parse_analyze(const json& j, AnalyzeSpec& a) {
    check_object(j, "analyze");
    check_keys(j, "analyze",
               {"input", "L", "phi_tol", "burn_in", "floor", "conservation_csv",
                "inequalities_csv", "vphi_csv", "summary"});
    if (const json* v = find(j, "input")) a.input = get_str(*v, "analyze.input");
    if (const json* v = find(j, "L")) {
        a.L = get_int(*v, "analyze.L");
        if (a.L < 2) fail("analyze.L", "must be at least 2");
    }
    if (const json* v = find(j, "phi_tol")) {
        a.phi_tol = get_num(*v, "analyze.phi_tol");
        if (!(a.phi_tol > 0.0)) fail("analyze.phi_tol", "must be positive");
    }
    if (const json* v = find(j, "burn_in")) {
        a.burn_in = get_int(*v, "analyze.burn_in");
        if (a.burn_in < -1) fail("analyze.burn_in", "must be -1 or nonnegative");
    }
    if (const json* v = find(j, "floor")) {
        a.floor_value = get_num(*v, "analyze.floor");
        if (a.floor_value < 0.0) fail("analyze.floor", "must be nonnegative");
    }
    if (const json* v = find(j, "conservation_csv"))
        a.conservation_csv = get_str(*v, "analyze.conservation_csv");
    if (const json* v = find(j, "inequalities_csv"))
        a.inequalities_csv = get_str(*v, "analyze.inequalities_csv");
    if (const json* v = find(j, "vphi_csv"))
        a.vphi_csv = get_str(*v, "analyze.vphi_csv");
    if (const json* v = find(j, "summary"))
        a.summary = get_str(*v, "analyze.summary");
}

void parse_compare(const json& j, CompareSpec& c) {
    check_object(j, "compare");
    check_keys(j, "compare", {"members", "csv", "svg"});
    if (const json* v = find(j, "members")) {
        if (!v->is_array() || v->empty())
            fail("compare.members", "expected a non-empty array of names");
        c.members.clear();
        for (int i = 0; i < static_cast<int>(v->size()); ++i) {
            std::string path = "compare.members[" + std::to_string(i) + "]";
            std::string name = get_str((*v)[i], path);
            if (name != "two-phase") {
                try {
                    preset_from_string(name);
                } catch (const ConfigError&) {
                    fail(path, "unknown member '" + name + "'");
                }
            }
            c.members.push_back(name);
        }
    }
    if (const json* v = find(j, "csv")) c.csv = get_str(*v, "compare.csv");
    if (const json* v = find(j, "svg")) c.svg = get_str(*v, "compare.svg");
}

json echo_graph(const GraphSpec& s) {
    json j;
    j["kind"] = s.kind;
    if (s.kind == "ring") j["n"] = s.n;
    if (s.kind == "edges") {
        j["n"] = s.n;
        json edges = json::array();
        for (const auto& [snd, rcv] : s.edges)
            edges.push_back(json::array({snd + 1, rcv + 1}));
        j["edges"] = edges;
    }
    return j;
}

json echo_vec(const Eigen::VectorXd& v) {
    json j = json::array();
    for (int l = 0; l < v.size(); ++l) j.push_back(v[l]);
    return j;
}

json echo_suite(const SuiteSpec& s, std::uint64_t base_seed) {
    json j;
    j["kind"] = s.kind;
    if (s.kind == "rendezvous") {
        json p = json::array();
        for (const auto& v : s.positions) p.push_back(echo_vec(v));
        j["positions"] = p;
    } else if (s.kind == "estimation") {
        json Q = json::array(), z = json::array(), sg = json::array();
        for (int i = 0; i < s.n; ++i) {
            json rows = json::array();
            for (int r = 0; r < s.Q[i].rows(); ++r)
                rows.push_back(echo_vec(s.Q[i].row(r).transpose()));
            Q.push_back(rows);
            z.push_back(echo_vec(s.z[i]));
            sg.push_back(s.sigma[i]);
        }
        j["Q"] = Q;
        j["z"] = z;
        j["sigma"] = sg;
    } else {
        j["n"] = s.n;
        j["s"] = s.s;
        j["d"] = s.d;
        j["sigma"] = s.noise_sigma;
        j["seed"] = s.seed.value_or(base_seed);
    }
    return j;
}

json build_echo(const ExperimentConfig& c) {
    json j;
    j["mode"] = c.mode;
    j["seed"] = c.seed;
    j["graph"] = echo_graph(c.graph);
    j["suite"] = echo_suite(c.suite, c.seed);
    j["schedule"] = {
        {"K", c.schedule.K},
        {"eta", c.schedule.eta},
        {"lambda", c.schedule.lambda},
        {"seed", c.schedule.seed},
        {"distribution",
         {{"kind", noise_kind_name(c.schedule.private_distribution.kind)},
          {"a", c.schedule.private_distribution.a},
          {"b", c.schedule.private_distribution.b}}},
    };
    j["T"] = c.T;
    j["init"] = {{"lo", c.init.lo}, {"hi", c.init.hi}};
    j["outputs"] = {{"trace_csv", c.outputs.trace_csv},
                    {"error_csv", c.outputs.error_csv},
                    {"svg", c.outputs.svg},
                    {"sidecar", c.outputs.sidecar},
                    {"sidecar_path", c.outputs.sidecar_path}};
    json coalition = json::array();
    for (int m : c.attack.coalition) coalition.push_back(m + 1);
    j["attack"] = {{"coalition", coalition},
                   {"target", c.attack.target + 1},
                   {"y_tol", c.attack.y_tol},
                   {"input", c.attack.input},
                   {"estimate_csv", c.attack.estimate_csv}};
    json shift = {{"delta", echo_vec(c.shift.delta)},
                  {"target", c.shift.target + 1},
                  {"coalition", json::array()},
                  {"pairs_csv", c.shift.pairs_csv},
                  {"report", c.shift.report}};
    for (int m : c.shift.coalition) shift["coalition"].push_back(m + 1);
    if (c.shift.counterpart) shift["counterpart"] = *c.shift.counterpart + 1;
    j["shift"] = shift;
    j["analyze"] = {{"input", c.analyze.input},
                    {"L", c.analyze.L},
                    {"phi_tol", c.analyze.phi_tol},
                    {"burn_in", c.analyze.burn_in},
                    {"floor", c.analyze.floor_value},
                    {"conservation_csv", c.analyze.conservation_csv},
                    {"inequalities_csv", c.analyze.inequalities_csv},
                    {"vphi_csv", c.analyze.vphi_csv},
                    {"summary", c.analyze.summary}};
    j["compare"] = {{"members", c.compare.members},
                    {"csv", c.compare.csv},
                    {"svg", c.compare.svg}};
    return j;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text,
                                   std::optional<std::uint64_t> seed_override) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    check_object(root, "config");
    check_keys(root, "",
               {"mode", "seed", "graph", "suite", "schedule", "T", "init",
                "outputs", "attack", "shift", "analyze", "compare"});

    ExperimentConfig c;
    if (const json* v = find(root, "mode")) {
        c.mode = get_str(*v, "mode");
        if (c.mode == "preset-compare") c.mode = "compare";
        if (c.mode != "run" && c.mode != "attack" && c.mode != "replay" &&
            c.mode != "analyze" && c.mode != "compare")
            fail("mode", "unknown mode '" + c.mode + "'");
    }
    if (const json* v = find(root, "seed")) c.seed = get_seed(*v, "seed");
    if (seed_override) c.seed = *seed_override;

    const json* g = find(root, "graph");
    if (!g) fail("graph", "required");
    c.graph = parse_graph(*g);

    const json* s = find(root, "suite");
    if (!s) fail("suite", "required");
    c.suite = parse_suite(*s);

    bool sched_seed_given = false;
    if (const json* v = find(root, "schedule"))
        parse_schedule(*v, c.schedule, sched_seed_given);
    if (!sched_seed_given) c.schedule.seed = c.seed;

    if (const json* v = find(root, "T")) {
        c.T = get_int(*v, "T");
        if (c.T < 1) fail("T", "must be at least 1");
    }
    if (const json* v = find(root, "init")) {
        check_object(*v, "init");
        check_keys(*v, "init", {"lo", "hi"});
        if (const json* lo = find(*v, "lo")) c.init.lo = get_num(*lo, "init.lo");
        if (const json* hi = find(*v, "hi")) c.init.hi = get_num(*hi, "init.hi");
        if (!(c.init.lo < c.init.hi)) fail("init", "need lo < hi");
    }
    if (const json* v = find(root, "outputs")) parse_outputs(*v, c.outputs);
    if (const json* v = find(root, "attack")) parse_attack(*v, c.attack);
    if (const json* v = find(root, "shift")) parse_shift(*v, c.shift);
    if (const json* v = find(root, "analyze")) parse_analyze(*v, c.analyze);
    if (const json* v = find(root, "compare")) parse_compare(*v, c.compare);

    if (!c.suite.seed) c.suite.seed = c.seed;
    c.echo = build_echo(c).dump();
    return c;
}

ExperimentConfig load_config(const std::string& path,
                             std::optional<std::uint64_t> seed_override) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), seed_override);
}

DirectedGraph make_graph(const GraphSpec& spec) {
    if (spec.kind == "ring") return ring_graph(spec.n);
    if (spec.kind == "fig1b") return fig1b_graph();
    if (spec.kind == "cycle3") return cycle3_graph();
    if (spec.kind == "pair") return pair_graph();
    std::vector<std::pair<int, int>> edges;
    edges.reserve(spec.edges.size());
    for (const auto& [snd, rcv] : spec.edges) edges.emplace_back(rcv, snd);
    return build_graph(spec.n, std::move(edges));
}

ObjectiveSuite make_suite(const SuiteSpec& spec, std::uint64_t base_seed) {
    if (spec.kind == "rendezvous") return rendezvous_suite(spec.positions);
    if (spec.kind == "estimation")
        return estimation_suite(spec.Q, spec.z, spec.sigma);
    return random_estimation_suite(spec.n, spec.s, spec.d, spec.noise_sigma,
                                   spec.seed.value_or(base_seed));
}

}  // namespace dgt
