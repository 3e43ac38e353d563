#pragma once

#include "exlab/criteria.hpp"
#include "exlab/dynamics.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace exlab {

struct TraceConfig {
    double lambda = 0.0;   // inf of mu H over boundary invariant measures
    double h_tilde = 1.0;  // truncation level, H~ = min(H, h_tilde)
    double T0 = 1.0;
    int n0 = 3;            // ceil(h_tilde + 2)
    int windows = 20;
    double T = 0.0;        // path horizon; 0 means windows * T2
    int restarts = 100;
    double dt = 1e-2;
    double restart_dt = 2e-2;
    Scheme scheme = Scheme::LogEuler;
    std::uint64_t seed = 1;
    unsigned threads = 1;

    double T1() const { return (n0 - 1) * T0; }
    double T2() const { return n0 * T0; }
};

int trace_n0(double h_tilde);

struct TraceWindow {
    int replicate = 0;
    int window = 0;
    double xi = 0.0;
    double G = 0.0;
    double Delta = 0.0;
    std::string label;  // no_entry, excluded, early_entry, late_entry
    bool ok = true;
};

struct TraceResult {
    std::vector<TraceWindow> windows;
    bool truncated = false;
    int falsifying = 0;
};

// Decomposes one path into windows [n T2, (n+1) T2). Requires spec.ell and
// spec.u_tilde to be set.
TraceResult trace_decomposition(const LyapunovSpec& spec, const TraceConfig& cfg, const Vec& x0, int alpha0,
                                std::uint64_t path_seed, int replicate = 0);

TraceResult trace_ensemble(const LyapunovSpec& spec, const TraceConfig& cfg, const Vec& x0, int alpha0, int reps);

void write_trace_csv(std::ostream& os, const std::vector<TraceWindow>& rows);

}  // namespace exlab
