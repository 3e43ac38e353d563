#include "exlab/trace.hpp"
#include "exlab/config.hpp"
#include "exlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace exlab {

int trace_n0(double h_tilde) { return static_cast<int>(std::ceil(h_tilde + 2.0)); }

namespace {

struct PathRecord {
    std::vector<double> t, h, Ht;
    std::vector<int> alpha;
    std::vector<double> x;  // row-major
};

double restart_integral(const LyapunovSpec& spec, const TraceConfig& cfg, const Vec& x, int alpha, double horizon,
                        std::uint64_t seed) {
    const double dt = std::min(cfg.restart_dt, horizon);
    double acc = 0.0;
    simulate_visit(spec.model, x, alpha, horizon, dt, seed, cfg.scheme, [&](double, double h, const Vec& z, int a) {
        if (h > 0.0) acc += std::min(spec.H(z, a), cfg.h_tilde) * h;
    });
    return acc;
}

}  // namespace

TraceResult trace_decomposition(const LyapunovSpec& spec, const TraceConfig& cfg, const Vec& x0, int alpha0,
                                std::uint64_t path_seed, int replicate) {
    if (!(cfg.T0 > 0.0) || cfg.n0 < 1 || cfg.windows < 1) throw PreconditionError("invalid trace configuration");
    if (cfg.restarts < 100) throw PreconditionError("trace needs at least 100 restarts per window");
    const double T2 = cfg.T2(), T1 = cfg.T1();
    const double full = cfg.windows * T2;
    const double horizon = cfg.T > 0.0 ? std::min(cfg.T, full) : full;

    TraceResult res;
    int windows = cfg.windows;
    if (horizon < full - 1e-9 * full) {
        res.truncated = true;
        windows = static_cast<int>(std::floor(horizon / T2 + 1e-9));
    }
    if (windows < 1) {
        res.truncated = true;
        return res;
    }

    PathRecord path;
    const std::size_t expected = static_cast<std::size_t>(windows * T2 / cfg.dt) + 8;
    path.t.reserve(expected);
    path.h.reserve(expected);
    path.Ht.reserve(expected);
    path.alpha.reserve(expected);
    path.x.reserve(expected * spec.model.n);
    simulate_visit(spec.model, x0, alpha0, windows * T2, cfg.dt, path_seed, cfg.scheme,
                   [&](double t, double h, const Vec& x, int a) {
                       path.t.push_back(t);
                       path.h.push_back(h);
                       path.Ht.push_back(std::min(spec.H(x, a), cfg.h_tilde));
                       path.alpha.push_back(a);
                       path.x.insert(path.x.end(), x.data(), x.data() + x.size());
                   });
    const int n = spec.model.n;
    auto state = [&](std::size_t k) { return Vec(Eigen::Map<const Vec>(path.x.data() + k * n, n)); };

    std::size_t k = 0;
    const double tol = 1e-9 * T2;
    for (int w = 0; w < windows; ++w) {
        const double start = w * T2, end = (w + 1) * T2;
        while (k < path.t.size() && path.t[k] < start - tol) ++k;
        std::size_t kx = k;
        while (kx < path.t.size() && path.t[kx] < end - tol && !spec.in_C_U(state(kx))) ++kx;
        bool entered = kx < path.t.size() && path.t[kx] < end - tol;
        if (!entered) {
            while (kx < path.t.size() && path.t[kx] < end - tol) ++kx;
        }
        const double xi = entered ? path.t[kx] : end;
        double before = 0.0, after = 0.0;
        std::size_t j = k;
        for (; j < kx; ++j) before += path.Ht[j] * path.h[j];
        for (; j < path.t.size() && path.t[j] < end - tol; ++j) after += path.Ht[j] * path.h[j];

        TraceWindow tw;
        tw.replicate = replicate;
        tw.window = w;
        tw.xi = xi;
        double expected_after = 0.0;
        if (entered) {
            const Vec xs = state(kx);
            const int as = path.alpha[kx];
            const double rest = end - xi;
            std::vector<double> vals(cfg.restarts, 0.0);
            parallel_for(static_cast<std::size_t>(cfg.restarts), cfg.threads, [&](std::size_t r) {
                vals[r] = restart_integral(spec, cfg, xs, as, rest, mix(mix(path_seed, 1000 + w), r));
            });
            for (double v : vals) expected_after += v;
            expected_after /= cfg.restarts;
            const double u = spec.U_extended(xs);
            if (u < spec.u_tilde) tw.label = "excluded";
            else if (xi <= start + T1 + tol) tw.label = "early_entry";
            else tw.label = "late_entry";
        } else {
            tw.label = "no_entry";
        }
        tw.G = before + expected_after;
        tw.Delta = after - expected_after;
        tw.ok = tw.label == "excluded" || tw.G >= 0.7 * cfg.lambda * cfg.T0;
        if (!tw.ok) ++res.falsifying;
        res.windows.push_back(tw);
        k = j;
    }
    return res;
}

TraceResult trace_ensemble(const LyapunovSpec& spec, const TraceConfig& cfg, const Vec& x0, int alpha0, int reps) {
    TraceResult all;
    for (int r = 0; r < reps; ++r) {
        TraceResult one = trace_decomposition(spec, cfg, x0, alpha0, mix(cfg.seed, r), r);
        all.truncated = all.truncated || one.truncated;
        all.falsifying += one.falsifying;
        all.windows.insert(all.windows.end(), one.windows.begin(), one.windows.end());
    }
    return all;
}

void write_trace_csv(std::ostream& os, const std::vector<TraceWindow>& rows) {
    os << "replicate,window,xi_n,G_n,Delta_n,case,ok\n";
    for (const auto& r : rows)
        os << r.replicate << "," << r.window + 1 << "," << format_double(r.xi) << "," << format_double(r.G) << ","
           << format_double(r.Delta) << "," << r.label << "," << (r.ok ? "true" : "false") << "\n";
}

}  // namespace exlab
