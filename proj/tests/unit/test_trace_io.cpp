#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "dgt/engine.hpp"
#include "dgt/errors.hpp"
#include "dgt/graph.hpp"
#include "dgt/objectives.hpp"
#include "dgt/trace_io.hpp"

using namespace dgt;
using Eigen::VectorXd;

namespace {
VectorXd vec1(double a) {
    VectorXd v(1);
    v << a;
    return v;
}

bool same_vec(const VectorXd& a, const VectorXd& b) {
    if (a.size() != b.size()) return false;
    return a.size() == 0 || (a - b).cwiseAbs().maxCoeff() == 0.0;
}

ScheduleConfig sched(int K, double eta, double lambda, std::uint64_t seed) {
    ScheduleConfig c;
    c.K = K;
    c.eta = eta;
    c.lambda = lambda;
    c.seed = seed;
    return c;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) {
        path = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") +
               "/" + name;
    }
    ~TempFile() { std::remove(path.c_str()); }
};
}  // namespace

TEST_CASE("trace_io: format_double round-trips exactly") {
    // Normal-range values only: stod reports ERANGE for subnormal results,
    // so those are exercised through strtod-compatible spot values instead.
    for (double v : {0.0, -0.0, 1.0, 0.1, -2.0 / 3.0, 1e-300, 1.7976931348623157e308,
                     3.141592653589793, -1e-15}) {
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(-4.0) == "-4");
}

TEST_CASE("trace_io: trace CSV layout") {
    DirectedGraph g = cycle3_graph();
    ObjectiveSuite suite = rendezvous_suite({vec1(1.0), vec1(3.0), vec1(5.0)});
    ExecutionTrace t = run(suite, g, sched(1, 0.4, 0.1, 11), 2);
    t.config_echo = "{\"T\":2}";

    TempFile tmp("dgt_trace_test.csv");
    write_trace_csv(t, tmp.path);
    std::string text = slurp(tmp.path);

    CHECK(text.find("# schema=trace.v1") == 0);
    CHECK(text.find("# seed=11") != std::string::npos);
    CHECK(text.find("# n=3") != std::string::npos);
    CHECK(text.find("# config={\"T\":2}") != std::string::npos);
    CHECK(text.find("k,node,x0,y0,err") != std::string::npos);

    // Rows for k = 0..T inclusive, nodes 1-based.
    int rows = 0;
    std::istringstream lines(text);
    std::string line;
    bool saw_node3 = false;
    while (std::getline(lines, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'k') continue;
        ++rows;
        if (line.rfind("2,3,", 0) == 0) saw_node3 = true;
        // Node labels are 1-based.
        std::size_t c1 = line.find(',');
        int node = std::stoi(line.substr(c1 + 1));
        CHECK(node >= 1);
        CHECK(node <= 3);
    }
    CHECK(rows == 3 * 3);
    CHECK(saw_node3);

    // Same trace, same bytes.
    TempFile tmp2("dgt_trace_test2.csv");
    write_trace_csv(t, tmp2.path);
    CHECK(slurp(tmp.path) == slurp(tmp2.path));
}

TEST_CASE("trace_io: error CSV holds the full series") {
    TempFile tmp("dgt_err_test.csv");
    write_error_csv({3.0, 1.5, 0.25}, tmp.path);
    std::string text = slurp(tmp.path);
    CHECK(text.find("k,err") != std::string::npos);
    CHECK(text.find("0,3") != std::string::npos);
    CHECK(text.find("2,0.25") != std::string::npos);
}

TEST_CASE("trace_io: sidecar round-trips the execution exactly") {
    DirectedGraph g = fig1b_graph();
    ObjectiveSuite suite = random_estimation_suite(5, 3, 2, 0.1, 7);
    ExecutionTrace t = run(suite, g, sched(3, 0.3, 0.06, 7), 12);

    TempFile tmp("dgt_sidecar_test.bin");
    save_sidecar(t, tmp.path);
    ExecutionTrace r = load_sidecar(tmp.path);

    CHECK(r.T == t.T);
    CHECK(r.d == t.d);
    CHECK(r.seed == t.seed);
    CHECK(r.schedule.K == t.schedule.K);
    CHECK(r.schedule.eta == t.schedule.eta);
    CHECK(r.graph.hash() == t.graph.hash());
    CHECK(r.full_record);
    REQUIRE(r.iters.size() == t.iters.size());
    for (std::size_t k = 0; k < t.iters.size(); ++k) {
        for (int i = 0; i < 5; ++i) {
            CHECK(same_vec(r.iters[k].states[i].x, t.iters[k].states[i].x));
            CHECK(same_vec(r.iters[k].states[i].y, t.iters[k].states[i].y));
            CHECK(same_vec(r.iters[k].grads[i], t.iters[k].grads[i]));
        }
        CHECK(r.iters[k].err == t.iters[k].err);
        // Wire content is reconstructed, not stored; it must still match.
        REQUIRE(r.iters[k].messages.size() == t.iters[k].messages.size());
        for (std::size_t m = 0; m < t.iters[k].messages.size(); ++m) {
            const Message& a = t.iters[k].messages[m];
            const Message& b = r.iters[k].messages[m];
            CHECK(a.sender == b.sender);
            CHECK(a.receiver == b.receiver);
            CHECK(a.kind == b.kind);
            CHECK(same_vec(a.x, b.x));
            CHECK(same_vec(a.lambda_y, b.lambda_y));
            CHECK(same_vec(a.tracker, b.tracker));
        }
        // Parameters round-trip bitwise.
        for (int i = 0; i < 5; ++i) {
            CHECK(same_vec(r.iters[k].params.Lambda[i], t.iters[k].params.Lambda[i]));
            for (std::size_t p = 0; p < t.iters[k].params.Ccol[i].size(); ++p)
                CHECK(same_vec(r.iters[k].params.Ccol[i][p],
                               t.iters[k].params.Ccol[i][p]));
        }
    }
    for (int i = 0; i < 5; ++i)
        CHECK(same_vec(r.final_states[i].x, t.final_states[i].x));
    CHECK(r.final_err == t.final_err);

    // Saving the loaded trace writes identical bytes.
    TempFile tmp2("dgt_sidecar_test2.bin");
    save_sidecar(r, tmp2.path);
    CHECK(slurp(tmp.path) == slurp(tmp2.path));
}

TEST_CASE("trace_io: sidecar loader rejects junk") {
    CHECK_THROWS_AS(load_sidecar("/nonexistent/nowhere.bin"), MissingSidecar);

    TempFile tmp("dgt_sidecar_junk.bin");
    std::ofstream(tmp.path, std::ios::binary) << "not a sidecar at all";
    CHECK_THROWS_AS(load_sidecar(tmp.path), MissingSidecar);

    // A truncated but correctly prefixed file must also fail cleanly.
    DirectedGraph g = pair_graph();
    ObjectiveSuite suite = rendezvous_suite({vec1(0.0), vec1(4.0)});
    ExecutionTrace t = run(suite, g, sched(1, 0.4, 0.3, 5), 3);
    TempFile tmp2("dgt_sidecar_trunc.bin");
    save_sidecar(t, tmp2.path);
    std::string bytes = slurp(tmp2.path);
    std::ofstream(tmp2.path, std::ios::binary)
        << bytes.substr(0, bytes.size() / 2);
    CHECK_THROWS_AS(load_sidecar(tmp2.path), MissingSidecar);
}
