#pragma once
#include <string>
#include <vector>

#include "dgt/engine.hpp"

namespace dgt {

// Shortest representation that round-trips the exact double (to_chars).
std::string format_double(double v);

// Per-iteration, per-node CSV with commented metadata lines, a header row
// `k,node,x0..,y0..,err`, 1-based node labels, and rows for k = 0..T
// inclusive. err is the node's own distance to the optimum.
void write_trace_csv(const ExecutionTrace& trace, const std::string& path);

// Two-column `k,err` series.
void write_error_csv(const std::vector<double>& errs, const std::string& path);

// Compact binary companion holding everything needed to reconstruct the
// trace exactly: graph, schedule, per-iteration states, gradients and (when
// recorded) parameters. Wire messages are not stored; they are recomputed on
// load with the same expressions the engine used, so they match bit for bit.
void save_sidecar(const ExecutionTrace& trace, const std::string& path);
ExecutionTrace load_sidecar(const std::string& path);

}  // namespace dgt
