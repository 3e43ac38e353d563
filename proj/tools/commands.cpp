#include "commands.hpp"

#include "exlab/certify.hpp"
#include "exlab/concentration.hpp"
#include "exlab/criteria.hpp"
#include "exlab/dynamics.hpp"
#include "exlab/families.hpp"
#include "exlab/measures.hpp"
#include "exlab/presets.hpp"
#include "exlab/trace.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace exlab::cli {

namespace {

// ---------------------------------------------------------------------------
// Option tables
// ---------------------------------------------------------------------------

const std::vector<OptionSpec> kPipelineOptions = {
    {"measure_T", "10000", "horizon for boundary measure estimation"},
    {"burn_in", "1000", "burn-in for boundary measure estimation"},
    {"dt", "0.01", "time step"},
    {"C0", "4", "weight of -ln W0 in U"},
    {"p0", "0.05", "W = W0^(1 + 2 p0)"},
};

std::vector<OptionSpec> with_pipeline(std::vector<OptionSpec> v) {
    v.insert(v.end(), kPipelineOptions.begin(), kPipelineOptions.end());
    return v;
}

std::vector<CommandSpec> build_specs() {
    std::vector<CommandSpec> s;
    s.push_back({"simulate",
                 "simulate a trajectory (reps = 1) or an ensemble",
                 {{"preset", "lotka", "lotka | sirs | kolmogorov | boundary_sde (ignored with --config)"},
                  {"T", "100", "horizon"},
                  {"dt", "0.01", "time step in (0, 1]"},
                  {"reps", "1", "replicates"},
                  {"scheme", "log_euler", "euler | log_euler"},
                  {"x0", "", "initial state, comma separated (default: preset start)"},
                  {"alpha0", "1", "initial regime (1-based)"},
                  {"record_every", "1", "keep every k-th grid point"},
                  {"burn_in", "", "burn-in for time averages (default 10% of T)"}},
                 ""});
    s.push_back({"measure",
                 "estimate boundary invariant measures and their first moments",
                 {{"preset", "lotka", "lotka | sirs | kolmogorov | boundary_sde (ignored with --config)"},
                  {"T", "10000", "horizon"},
                  {"burn_in", "1000", "burn-in"},
                  {"dt", "0.01", "time step in (0, 1]"},
                  {"thin", "10", "steps merged per stored sample"},
                  {"x0", "", "start on the boundary for --config models"}},
                 ""});
    s.push_back({"rates",
                 "invasion rates against boundary measures, empirical and closed form",
                 with_pipeline({{"preset", "lotka", "lotka | sirs | kolmogorov"},
                                {"measure", "all", "all or one measure name (delta0, mu1, mu12, disease_free)"}}),
                 ""});
    s.push_back({"certify",
                 "fit and check the Lyapunov inequalities on a sampled domain",
                 with_pipeline({{"preset", "lotka", "lotka | kolmogorov"},
                                {"assumption", "all", "4 | lower | tight | muH | core (all but tight) | all"},
                                {"count", "100000", "sample points for fitting and, separately, for checking"}}),
                 ""});
    s.push_back({"trace",
                 "stopping-time decomposition of U along extinction paths",
                 with_pipeline({{"preset", "lotka", "lotka | kolmogorov"},
                                {"reps", "50", "paths"},
                                {"windows", "20", "windows of length T2 per path"},
                                {"restarts", "100", "restart sub-ensemble size"},
                                {"restart_dt", "0.02", "time step of the restarts"}}),
                 ""});
    s.push_back({"concentration",
                 "Monte Carlo checks of the appendix concentration bounds",
                 {{"check", "prop1", "prop1 | lemma_a2 | lemma_events | tail_sum"},
                  {"kind", "pareto", "uniform | pareto | scaled_rademacher | martingale"},
                  {"p", "1.5", "moment exponent"},
                  {"shape", "3", "Pareto tail index"},
                  {"claimed_mp", "1", "claimed moment bound for scaled_rademacher"},
                  {"eps", "0.05", "epsilon"},
                  {"delta", "0.2", "delta"},
                  {"reps", "2000", "replicates"},
                  {"n_max", "10000", "sequence length"},
                  {"n0", "", "start index for lemma_events (default: smallest admissible)"},
                  {"count", "1000", "sequences for lemma_a2"},
                  {"k", "1", "shift for tail_sum"}},
                 ""});
    s.push_back({"reproduce",
                 "full pipeline for one application: lotka | sirs | kolmogorov",
                 with_pipeline({{"section", "lotka", "lotka | sirs | kolmogorov"},
                                {"reps", "200", "extinction ensemble size"},
                                {"T", "", "extinction horizon (default 2000 lotka, 200 sirs, 500 kolmogorov)"},
                                {"count", "100000", "certification sample points"}}),
                 "section"});
    return s;
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

struct Verdict {
    std::string check;
    double value = 0.0;
    double reference = 0.0;
    double tolerance = 0.0;
    bool pass = true;
    std::string note;
};

class Output {
public:
    Output(const Params& p, const RunContext& ctx) : p_(p), ctx_(ctx) {
        std::error_code ec;
        std::filesystem::create_directories(ctx.out_dir, ec);
        if (ec) throw Error("cannot create output directory " + ctx.out_dir + ": " + ec.message());
    }

    std::ofstream open(const std::string& name) const {
        std::ofstream f(path(name));
        if (!f) throw Error("cannot write " + path(name));
        f.precision(17);
        return f;
    }
    std::string path(const std::string& name) const { return (std::filesystem::path(ctx_.out_dir) / name).string(); }

    void add(Verdict v) { verdicts_.push_back(std::move(v)); }
    std::ostream& log() const { return ctx_.log ? *ctx_.log : std::cout; }

    int finish() const {
        {
            auto f = open("manifest.txt");
            f << to_manifest(p_).dump();
        }
        bool all = true;
        if (!verdicts_.empty()) {
            auto f = open("verdicts.csv");
            f << "check,value,reference,tolerance,pass\n";
            for (const auto& v : verdicts_) {
                f << v.check << "," << format_double(v.value) << "," << format_double(v.reference) << ","
                  << format_double(v.tolerance) << "," << (v.pass ? "true" : "false") << "\n";
                log() << (v.pass ? "PASS " : "FAIL ") << v.check << ": value " << format_double(v.value)
                      << ", reference " << format_double(v.reference) << ", tolerance " << format_double(v.tolerance);
                if (!v.note.empty()) log() << " (" << v.note << ")";
                log() << "\n";
                all = all && v.pass;
            }
        }
        return all ? 0 : 1;
    }

private:
    const Params& p_;
    const RunContext& ctx_;
    std::vector<Verdict> verdicts_;
};

Verdict relative(const std::string& check, double value, double reference, double tol) {
    Verdict v{check, value, reference, tol, false, ""};
    v.pass = std::abs(value - reference) <= tol * std::abs(reference);
    return v;
}

// ---------------------------------------------------------------------------
// Models and presets
// ---------------------------------------------------------------------------

void check_dt(const Params& p) { p.in_range("dt", 0.0, 1.0); }

void check_horizon(const Params& p, const std::string& key, double dt) {
    const double T = p.positive(key);
    if (T < 10.0 * dt) throw ConfigError(key, "--" + key + " must be at least 10 dt = " + format_double(10.0 * dt));
}

std::string preset_of(const Params& p) {
    const std::string name = p.str("preset");
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), name) == names.end())
        throw ConfigError("preset", "unknown preset '" + name + "' (lotka, sirs, kolmogorov, boundary_sde)");
    return name;
}

// Loads a model file and checks the preconditions of its family.
HybridModel gated_model(const KeyValueFile& file) {
    LoadedModel lm = load_model(file);
    if (lm.family == "lotka_volterra" && lm.model.m0 == 1) check_lotka(lv_params_from(lm.params));
    if (lm.family == "sirs") check_sirs(sirs_params_from(lm.params, lm.model.Q));
    return lm.model;
}

HybridModel resolve_model(const Params& p) {
    if (p.model) return gated_model(*p.model);
    return preset_model(preset_of(p));
}

Vec preset_start(const std::string& name) {
    Vec x(3);
    if (name == "lotka") {
        const Mu12Moments m = mu12_closed_moments(lotka_params());
        x << m.ex1, m.ex2_corrected, 1e-4;
    } else if (name == "sirs") {
        x << 1.0, 0.5, 0.5;
    } else if (name == "kolmogorov") {
        x << 1.0, 1.5, 1e-4;
    } else {
        x << 1.0, 0.0, 0.0;
    }
    return x;
}

Vec start_state(const Params& p, const HybridModel& model) {
    std::vector<double> v = p.list("x0");
    if (v.empty()) {
        if (p.model) return Vec::Ones(model.n);
        return preset_start(preset_of(p));
    }
    if (static_cast<int>(v.size()) != model.n)
        throw ConfigError("x0", "--x0 needs " + std::to_string(model.n) + " entries");
    Vec x = Eigen::Map<const Vec>(v.data(), model.n);
    if ((x.array() < 0.0).any()) throw ConfigError("x0", "--x0 must be nonnegative");
    return x;
}

PipelineOptions pipeline_options(const Params& p, const RunContext& ctx) {
    check_dt(p);
    PipelineOptions o;
    o.dt = p.num("dt");
    o.T = p.positive("measure_T");
    check_horizon(p, "measure_T", o.dt);
    o.burn_in = p.num("burn_in");
    if (!(o.burn_in >= 0.0 && o.burn_in < o.T)) throw ConfigError("burn_in", "--burn_in must lie in [0, measure_T)");
    o.C0 = p.positive("C0");
    o.p0 = p.positive("p0");
    o.seed = p.u64("seed");
    o.threads = ctx.threads;
    return o;
}

Pipeline pipeline_for(const std::string& name, const PipelineOptions& o) {
    if (name == "lotka") return lotka_pipeline(lotka_params(), o);
    if (name == "kolmogorov") return kolmogorov_pipeline(o);
    throw ConfigError("preset", "the Lyapunov pipeline exists for lotka and kolmogorov, not '" + name + "'");
}

OccupationMeasure disease_free_measure(const SirsParams& sp, const Params& p, double T, double burn_in, double dt,
                                       int thin) {
    MeasureOptions mo;
    mo.thin = thin;
    Vec z0(3);
    z0 << sp.regimes[0].b / sp.regimes[0].c1, 0.0, 0.0;
    return estimate_ergodic_measure(make_sirs(sp), ExtinctionSpec::make(3, {1, 2}), z0, 0, T, dt, burn_in,
                                    mix(p.u64("seed"), 1), mo);
}

// ---------------------------------------------------------------------------
// Rates
// ---------------------------------------------------------------------------

double closed_rate(const std::string& measure, int i, const LvParams& lv) {
    const double s1 = 0.5 * lv.sigma1 * lv.sigma1, s2 = 0.5 * lv.sigma2 * lv.sigma2, s3 = 0.5 * lv.sigma3 * lv.sigma3;
    if (measure == "delta0") return i == 0 ? lv.r1 - s1 : i == 1 ? -lv.r2 - s2 : -lv.r3 - s3;
    if (measure == "mu1") {
        const double m = mu1_mean(lv);
        return i == 0 ? 0.0 : i == 1 ? -lv.r2 - s2 + lv.a21 * m : -lv.r3 - s3 + lv.a31 * m;
    }
    return i == 2 ? lambda_3_lv(lv) : 0.0;
}

void rate_rows(const Pipeline& pl, const std::string& which, bool closed, std::vector<RateReportRow>& rows,
               Output& out) {
    const LvParams lv = lotka_params();
    bool any = false;
    for (const auto& m : pl.measures) {
        if (which != "all" && which != m.name) continue;
        any = true;
        for (int i = 0; i < pl.model.n; ++i) {
            RateReportRow r;
            r.measure = m.name;
            r.species = i + 1;
            r.lambda = invasion_rate(m.mu, pl.model, i);
            r.closed_form = closed ? closed_rate(m.name, i, lv) : std::numeric_limits<double>::quiet_NaN();
            const bool surviving = std::find(m.surviving.begin(), m.surviving.end(), i) != m.surviving.end();
            if (surviving) {
                const bool ok = std::abs(r.lambda.value) <= 3.0 * r.lambda.se;
                r.verdict = ok ? "zero_average_ok" : "zero_average_fail";
                out.add({m.name + ":zero_average:x" + std::to_string(i + 1), r.lambda.value, 0.0, 3.0 * r.lambda.se,
                         ok, ""});
            } else if (closed) {
                const double tol = std::max(3.0 * r.lambda.se, 0.05 * std::abs(r.closed_form));
                const bool ok = std::abs(r.lambda.value - r.closed_form) <= tol;
                r.verdict = ok ? "closed_form_ok" : "closed_form_fail";
                out.add({m.name + ":lambda:x" + std::to_string(i + 1), r.lambda.value, r.closed_form, tol, ok, ""});
            } else {
                r.verdict = r.lambda.value < 0.0 ? "negative" : "positive";
            }
            rows.push_back(r);
        }
    }
    if (!any) throw ConfigError("measure", "unknown measure '" + which + "'");
}

void sirs_rates(const Params& p, const std::string& which, double T, double burn_in, double dt,
                std::vector<RateReportRow>& rows, Output& out) {
    if (which != "all" && which != "disease_free") throw ConfigError("measure", "sirs has the measure disease_free");
    const SirsParams sp = sirs_params();
    check_sirs(sp);
    const OccupationMeasure pi = disease_free_measure(sp, p, T, burn_in, dt, 10);
    const Estimate li = lambda_I_sirs(sp, pi);
    const double li_closed = lambda_I_sirs_closed(sp);
    const double lr = lambda_R_sirs(sp, stationary_distribution(sp.Q));
    const double tol = std::max(3.0 * li.se, 0.05 * li_closed);
    const bool ok = std::abs(li.value - li_closed) <= tol;
    rows.push_back({"disease_free", 2, {-li.value, li.se}, -li_closed, ok ? "closed_form_ok" : "closed_form_fail"});
    rows.push_back({"disease_free", 3, {-lr, 0.0}, -lr, "closed_form"});
    out.add({"lambda_I", li.value, li_closed, tol, ok, ""});
    out.add({"lambda_R", lr, lr, 0.0, true, "closed form"});
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_simulate(const Params& p, const RunContext& ctx) {
    check_dt(p);
    const double dt = p.num("dt");
    check_horizon(p, "T", dt);
    const double T = p.num("T");
    const long long reps = p.at_least("reps", 1);
    const Scheme scheme = parse_scheme(p.str("scheme"));
    const HybridModel model = resolve_model(p);
    const Vec x0 = start_state(p, model);
    const long long alpha0 = p.at_least("alpha0", 1);
    if (alpha0 > model.m0) throw ConfigError("alpha0", "--alpha0 exceeds the number of regimes");
    const long long every = p.at_least("record_every", 1);
    const double burn_in = p.has("burn_in") ? p.num("burn_in") : 0.1 * T;
    if (!(burn_in >= 0.0 && burn_in < T)) throw ConfigError("burn_in", "--burn_in must lie in [0, T)");
    const std::uint64_t seed = p.u64("seed");

    Output out(p, ctx);
    SimOptions sim;
    sim.record_every = static_cast<int>(every);
    if (reps == 1) {
        Trajectory tr = simulate(model, x0, static_cast<int>(alpha0 - 1), T, dt, seed, scheme, sim);
        auto f = out.open("trajectory.csv");
        write_trajectory_csv(f, tr);
        out.log() << "wrote " << tr.size() << " grid points to " << out.path("trajectory.csv") << "\n";
        return out.finish();
    }
    std::vector<PathFunctional> fns;
    for (int i = 0; i < model.n; ++i) fns.push_back(terminal_coordinate(i));
    for (int i = 0; i < model.n; ++i) fns.push_back(time_average(i, burn_in));
    EnsembleOptions eo;
    eo.scheme = scheme;
    eo.threads = ctx.threads;
    eo.sim = sim;
    EnsembleStats st = ensemble(model, x0, static_cast<int>(alpha0 - 1), T, dt, static_cast<int>(reps), seed, fns, eo);
    auto f = out.open("ensemble.csv");
    write_ensemble_csv(f, st);
    out.add({"replicates_without_divergence", static_cast<double>(st.count() - st.failures()),
             static_cast<double>(st.count()), 0.0, st.failures() == 0, ""});
    return out.finish();
}

int cmd_measure(const Params& p, const RunContext& ctx) {
    check_dt(p);
    const double dt = p.num("dt");
    check_horizon(p, "T", dt);
    const double T = p.num("T");
    const double burn_in = p.num("burn_in");
    if (!(burn_in >= 0.0 && burn_in < T)) throw ConfigError("burn_in", "--burn_in must lie in [0, T)");
    const int thin = static_cast<int>(p.at_least("thin", 1));
    Output out(p, ctx);
    std::vector<MomentRow> moments;
    auto moment = [&](const std::string& name, const OccupationMeasure& mu, int i) {
        Estimate e = mu.integrate_with_se([i](const Vec& x, int) { return x(i); });
        moments.push_back({name + ":E[x" + std::to_string(i + 1) + "]", e});
        return e;
    };
    auto save = [&](const std::string& name, const OccupationMeasure& mu) {
        auto f = out.open("measure_" + name + ".csv");
        write_measure_csv(f, mu);
    };

    if (p.model) {
        const HybridModel model = gated_model(*p.model);
        Vec z0 = start_state(p, model);
        for (int j : model.extinct_set) z0(j) = 0.0;
        MeasureOptions mo;
        mo.thin = thin;
        OccupationMeasure mu = estimate_ergodic_measure(model, model.extinction(), z0, 0, T, dt, burn_in,
                                                        mix(p.u64("seed"), 1), mo);
        save("boundary", mu);
        for (int i = 0; i < model.n; ++i) moment("boundary", mu, i);
    } else {
        const std::string name = preset_of(p);
        if (name == "lotka" || name == "kolmogorov") {
            PipelineOptions o;
            o.T = T;
            o.burn_in = burn_in;
            o.dt = dt;
            o.thin = thin;
            o.seed = p.u64("seed");
            o.threads = ctx.threads;
            const HybridModel model = preset_model(name);
            Vec prey(3), face(3);
            if (name == "lotka") {
                const LvParams lv = lotka_params();
                const Mu12Moments m = mu12_closed_moments(lv);
                prey << mu1_mean(lv), 0.0, 0.0;
                face << m.ex1, m.ex2_corrected, 0.0;
            } else {
                prey << 4.0, 0.0, 0.0;
                face << 1.0, 1.5, 0.0;
            }
            const auto hier = boundary_hierarchy(model, prey, face, o);
            for (const auto& m : hier) {
                if (m.name == "delta0") continue;
                save(m.name, m.mu);
                for (int i : m.surviving) moment(m.name, m.mu, i);
            }
            if (name == "lotka") {
                const LvParams lv = lotka_params();
                const Mu12Moments cm = mu12_closed_moments(lv);
                const Estimate e1 = moments[0].estimate;
                const Estimate ex1 = moments[1].estimate;
                const Estimate ex2 = moments[2].estimate;
                out.add(relative("mu1:E[x1]", e1.value, mu1_mean(lv), 0.05));
                out.add(relative("mu12:E[x1]", ex1.value, cm.ex1, 0.05));
                const Ex2Arbitration arb = arbitrate_ex2(cm, ex2);
                Verdict v = relative("mu12:E[x2]:" + arb.winner, ex2.value,
                                     arb.winner == "corrected" ? cm.ex2_corrected : cm.ex2_printed, 0.05);
                v.note = "printed formula " + format_double(cm.ex2_printed) + " is off by " +
                         format_double(100.0 * arb.printed_rel_error) + "%, corrected " +
                         format_double(cm.ex2_corrected) + " by " + format_double(100.0 * arb.corrected_rel_error) +
                         "%";
                out.add(v);
            }
        } else {
            const SirsParams sp = name == "sirs" ? sirs_params() : boundary_sde_params(1.0, 1.0, 0.5);
            const OccupationMeasure pi = disease_free_measure(sp, p, T, burn_in, dt, thin);
            save("disease_free", pi);
            const Estimate es = moment("disease_free", pi, 0);
            Vec b(sp.regimes.size()), c1(sp.regimes.size());
            for (std::size_t a = 0; a < sp.regimes.size(); ++a) {
                b(a) = sp.regimes[a].b;
                c1(a) = sp.regimes[a].c1;
            }
            out.add(relative("disease_free:E[S]", es.value, stationary_first_moments(sp.Q, b, c1).sum(), 0.05));
        }
    }
    auto f = out.open("moments.csv");
    write_moment_csv(f, moments);
    return out.finish();
}

int cmd_rates(const Params& p, const RunContext& ctx) {
    const PipelineOptions o = pipeline_options(p, ctx);
    const std::string name = preset_of(p);
    const std::string which = p.str("measure");
    Output out(p, ctx);
    std::vector<RateReportRow> rows;
    if (name == "sirs") {
        sirs_rates(p, which, o.T, o.burn_in, o.dt, rows, out);
    } else if (name == "lotka" || name == "kolmogorov") {
        const HybridModel model = preset_model(name);
        Vec prey(3), face(3);
        if (name == "lotka") {
            const LvParams lv = lotka_params();
            const Mu12Moments m = mu12_closed_moments(lv);
            prey << mu1_mean(lv), 0.0, 0.0;
            face << m.ex1, m.ex2_corrected, 0.0;
        } else {
            prey << 4.0, 0.0, 0.0;
            face << 1.0, 1.5, 0.0;
        }
        Pipeline pl;
        pl.model = model;
        pl.measures = boundary_hierarchy(model, prey, face, o);
        rate_rows(pl, which, name == "lotka", rows, out);
    } else {
        throw ConfigError("preset", "rates are defined for lotka, sirs and kolmogorov");
    }
    auto f = out.open("rates.csv");
    write_rate_csv(f, rows);
    return out.finish();
}

void write_constants(Output& out, const std::vector<CertificateReport>& reports) {
    auto f = out.open("constants.csv");
    f << "inequality,constant,value\n";
    for (const auto& r : reports)
        for (const auto& [k, v] : r.constants) f << r.id << "," << k << "," << format_double(v) << "\n";
}

std::vector<CertificateReport> certify_reports(const Pipeline& pl, const std::string& which, long long count,
                                               std::uint64_t seed, const PipelineOptions& o, Output& out) {
    // "core" is everything except the tightness condition
    if (which != "all" && which != "core" && which != "4" && which != "lower" && which != "tight" && which != "muH")
        throw ConfigError("assumption", "--assumption must be 4, lower, tight, muH, core or all");
    const bool core = which == "all" || which == "core";
    Domain dom;
    dom.n = pl.model.n;
    dom.m0 = pl.model.m0;
    const auto fit = sample_domain(dom, static_cast<int>(count), mix(seed, 10));
    const auto check = sample_domain(dom, static_cast<int>(count), mix(seed, 11));
    std::vector<CertificateReport> reports;
    if (core || which == "4") {
        Assumption4Bundle b = check_assumption4(pl.spec, fit, check, dom.describe());
        reports.insert(reports.end(), b.reports.begin(), b.reports.end());
    }
    if (core || which == "lower") reports.push_back(check_lower_bound(pl.spec, fit, check, dom.describe()));
    if (which == "all" || which == "tight")
        reports.push_back(check_a_tight(pl.model, log_W(pl.b0, o.tight_C), o.delta0, pl.tight.ell, pl.tight.K, check,
                                        dom));
    for (const auto& r : reports)
        out.add({r.id, static_cast<double>(r.violations.size()), 0.0, 0.0, r.pass, r.note});
    if (core || which == "muH") {
        std::vector<std::pair<std::string, const OccupationMeasure*>> ms;
        for (const auto& m : pl.measures) ms.push_back({m.name, &m.mu});
        const LyapunovSpec& spec = pl.spec;
        MuHReport mh = check_mu_H(ms, [&spec](const Vec& x, int a) { return spec.H(x, a); }, spec.lambda);
        for (const auto& row : mh.rows)
            out.add({"mu_H:" + row.measure, row.value.value, spec.lambda, 2.0 * row.value.se,
                     row.value.value - 2.0 * row.value.se >= spec.lambda, ""});
    }
    return reports;
}

int cmd_certify(const Params& p, const RunContext& ctx) {
    const PipelineOptions o = pipeline_options(p, ctx);
    const long long count = p.at_least("count", 10);
    const Pipeline pl = pipeline_for(preset_of(p), o);
    Output out(p, ctx);
    const auto reports = certify_reports(pl, p.str("assumption"), count, o.seed, o, out);
    {
        auto f = out.open("certificate.csv");
        write_certificate_csv(f, reports, pl.model.n);
    }
    write_constants(out, reports);
    {
        auto f = out.open("summary.txt");
        f << certificate_summary(reports);
    }
    out.log() << certificate_summary(reports);
    return out.finish();
}

int cmd_trace(const Params& p, const RunContext& ctx) {
    const PipelineOptions o = pipeline_options(p, ctx);
    const long long reps = p.at_least("reps", 1);
    const Pipeline pl = pipeline_for(preset_of(p), o);
    TraceConfig c = trace_config(pl, mix(o.seed, 20), ctx.threads);
    c.windows = static_cast<int>(p.at_least("windows", 1));
    c.restarts = static_cast<int>(p.at_least("restarts", 100));
    c.dt = o.dt;
    c.restart_dt = p.in_range("restart_dt", 0.0, 1.0);
    Output out(p, ctx);
    const TraceResult tr = trace_ensemble(pl.spec, c, pl.start, 0, static_cast<int>(reps));
    {
        auto f = out.open("trace.csv");
        write_trace_csv(f, tr.windows);
    }
    out.log() << "lambda " << format_double(c.lambda) << ", h_tilde " << format_double(c.h_tilde) << ", T0 "
              << format_double(c.T0) << ", n0 " << c.n0 << ", windows " << tr.windows.size() << "\n";
    out.add({"falsifying_windows", static_cast<double>(tr.falsifying), 0.0, 0.0, tr.falsifying == 0 && !tr.truncated,
             "threshold 0.7 lambda T0 = " + format_double(0.7 * c.lambda * c.T0)});
    return out.finish();
}

AdaptedSequence sequence_from(const Params& p) {
    const SequenceKind kind = parse_sequence_kind(p.str("kind"));
    const double pp = p.num("p");
    switch (kind) {
        case SequenceKind::Uniform: return AdaptedSequence::uniform();
        case SequenceKind::CenteredPareto: return AdaptedSequence::centered_pareto(p.positive("shape"), pp);
        case SequenceKind::ScaledRademacher: return AdaptedSequence::scaled_rademacher(pp, p.positive("claimed_mp"));
        case SequenceKind::MartingaleDifference: return AdaptedSequence::martingale_difference(pp);
    }
    throw ConfigError("kind", "unknown sequence kind");
}

long long admissible_n0(const AdaptedSequence& seq, double eps, double delta) {
    const double target = std::min(eps * delta * delta, 0.5 * eps * delta);
    long long n0 = 1;
    while (seq.Mp * zeta_tail(n0, seq.p) > target) n0 *= 2;
    long long lo = n0 / 2 + 1, hi = n0;
    while (lo < hi) {
        long long mid = lo + (hi - lo) / 2;
        if (seq.Mp * zeta_tail(mid, seq.p) <= target) hi = mid;
        else lo = mid + 1;
    }
    return std::max(1LL, hi);
}

int cmd_concentration(const Params& p, const RunContext& ctx) {
    const std::string check = p.str("check");
    const std::uint64_t seed = p.u64("seed");
    Output out(p, ctx);
    std::vector<FrequencyReport> rows;
    if (check == "prop1") {
        const AdaptedSequence seq = sequence_from(p);
        const Prop1Report r = prop1_monte_carlo(seq, p.in_range("eps", 0.0, 1.0), p.positive("delta"),
                                                p.at_least("n_max", 1), static_cast<int>(p.at_least("reps", 1)), seed,
                                                ctx.threads);
        rows.push_back(r.freq);
        out.log() << "n0 " << r.constants.n0 << ", m " << format_double(r.constants.m) << "\n";
    } else if (check == "lemma_a2") {
        rows.push_back(lemma_a2_check(static_cast<int>(p.at_least("count", 1)), p.at_least("n_max", 1),
                                      p.positive("eps"), seed, ctx.threads));
    } else if (check == "lemma_events") {
        const AdaptedSequence seq = sequence_from(p);
        const double eps = p.in_range("eps", 0.0, 1.0), delta = p.positive("delta");
        const long long n0 = p.has("n0") ? p.at_least("n0", 1) : admissible_n0(seq, eps, delta);
        const LemmaEventsReport r = lemma_events_check(seq, n0, delta, eps, p.at_least("n_max", 1),
                                                       static_cast<int>(p.at_least("reps", 1)), seed, ctx.threads);
        rows.push_back(r.a3);
        rows.push_back(r.a4);
    } else if (check == "tail_sum") {
        const TailSum t = tail_sum(p.positive("k"), p.num("p"));
        FrequencyReport r;
        r.check = "tail_sum";
        r.params = "k=" + p.str("k") + ";p=" + p.str("p");
        r.frequency = t.value;
        r.threshold = t.bound;
        r.pass = t.value <= t.bound;
        rows.push_back(r);
    } else {
        throw ConfigError("check", "--check must be prop1, lemma_a2, lemma_events or tail_sum");
    }
    {
        auto f = out.open("frequency.csv");
        write_frequency_csv(f, rows);
    }
    for (const auto& r : rows) out.add({r.check, r.frequency, r.threshold, 2.0 * r.se, r.pass, r.params});
    return out.finish();
}

// ---------------------------------------------------------------------------
// reproduce
// ---------------------------------------------------------------------------

double median(std::vector<double> v) { return v.empty() ? std::numeric_limits<double>::quiet_NaN() : sample_quantile(v, 0.5); }

void write_extinction(Output& out, const ExtinctionReport& rep) {
    auto f = out.open("extinction.csv");
    f << "replicate,ok,U_rate,dist,slope\n";
    for (std::size_t r = 0; r < rep.replicates.size(); ++r) {
        const auto& x = rep.replicates[r];
        f << r << "," << (x.ok ? "true" : "false") << "," << format_double(x.U_rate) << "," << format_double(x.dist)
          << "," << format_double(x.slopes.empty() ? std::nan("") : x.slopes[0]) << "\n";
    }
}

int reproduce_lyapunov(const Params& p, const RunContext& ctx, const std::string& section) {
    const PipelineOptions o = pipeline_options(p, ctx);
    const long long reps = p.at_least("reps", 1);
    const double T = p.has("T") ? p.positive("T") : (section == "lotka" ? 2000.0 : 500.0);
    if (T < 10.0 * o.dt) throw ConfigError("T", "--T must be at least 10 dt");
    Output out(p, ctx);
    const Pipeline pl = pipeline_for(section, o);

    out.add({"weights_margin", pl.weights.margin, 0.0, 0.0, pl.weights.margin > 0.0, ""});
    std::vector<RateReportRow> rows;
    rate_rows(pl, "all", section == "lotka", rows, out);
    {
        auto f = out.open("rates.csv");
        write_rate_csv(f, rows);
    }
    const auto reports = certify_reports(pl, section == "lotka" ? "core" : "muH", p.at_least("count", 10), o.seed, o, out);
    {
        auto f = out.open("certificate.csv");
        write_certificate_csv(f, reports, pl.model.n);
    }
    write_constants(out, reports);

    ExtinctionOptions eo;
    eo.dt = o.dt;
    eo.threads = ctx.threads;
    eo.lambda0 = 0.7 * pl.spec.lambda / trace_n0(pl.spec.h_tilde);
    const ExtinctionReport rep =
        extinction_probability(pl.spec, {{pl.start, 0}}, T, static_cast<int>(reps), mix(o.seed, 30), eo);
    write_extinction(out, rep);
    std::vector<double> slopes;
    int negative = 0, implication_failures = 0;
    for (const auto& r : rep.replicates) {
        if (!r.ok) continue;
        slopes.push_back(r.slopes[0]);
        if (r.slopes[0] < 0.0) ++negative;
        if (r.U_rate >= 0.5 * eo.lambda0 && !(r.slopes[0] < 0.0)) ++implication_failures;
    }
    const double med = median(slopes);
    if (section == "lotka") {
        out.add(relative("median_slope_ln_x3", med, lambda_3_lv(lotka_params()), 0.20));
    } else {
        out.add({"median_slope_ln_x3", med, 0.0, 0.0, med < 0.0, "negative"});
    }
    out.add({"fraction_negative_slope", static_cast<double>(negative) / reps, 0.95, 0.0,
             static_cast<double>(negative) / reps >= 0.95, ""});
    out.add({"fraction_U_proxy", rep.freq_u, 0.9, 0.0, rep.freq_u >= 0.9,
             "U(X(T))/T >= lambda0/2 with lambda0 = " + format_double(eo.lambda0)});
    out.add({"U_proxy_implies_negative_slopes", static_cast<double>(implication_failures), 0.0, 0.0,
             implication_failures == 0, ""});
    return out.finish();
}

int reproduce_sirs(const Params& p, const RunContext& ctx) {
    check_dt(p);
    const double dt = p.num("dt");
    const double measure_T = p.positive("measure_T");
    const double burn_in = p.num("burn_in");
    const long long reps = p.at_least("reps", 1);
    const double T = p.has("T") ? p.positive("T") : 200.0;
    if (T < 10.0 * dt) throw ConfigError("T", "--T must be at least 10 dt");
    Output out(p, ctx);
    std::vector<RateReportRow> rows;
    sirs_rates(p, "all", measure_T, burn_in, dt, rows, out);
    {
        auto f = out.open("rates.csv");
        write_rate_csv(f, rows);
    }
    const SirsParams sp = sirs_params();
    const double li = lambda_I_sirs_closed(sp);
    const double lr = lambda_R_sirs(sp, stationary_distribution(sp.Q));
    std::vector<PathFunctional> fns = {
        {"slope_ln_I", [](const Trajectory& t) { return empirical_exponent(t, 1, 0.5).value; }},
        {"slope_ln_R", [](const Trajectory& t) { return empirical_exponent(t, 2, 0.5).value; }},
    };
    EnsembleOptions eo;
    eo.threads = ctx.threads;
    eo.sim.record_every = std::max(1, static_cast<int>(std::lround(0.1 / dt)));
    const EnsembleStats st = ensemble(make_sirs(sp), preset_start("sirs"), 0, T, dt, static_cast<int>(reps),
                                      mix(p.u64("seed"), 30), fns, eo);
    {
        auto f = out.open("ensemble.csv");
        write_ensemble_csv(f, st);
    }
    out.add(relative("median_slope_ln_I", st.quantile(0, 0.5), -li, 0.20));
    out.add(relative("median_slope_ln_R", st.quantile(1, 0.5), -std::min(lr, li), 0.25));
    out.add({"replicates_without_error", static_cast<double>(st.count() - st.failures()),
             static_cast<double>(st.count()), 0.0, st.failures() == 0, ""});
    return out.finish();
}

int cmd_reproduce(const Params& p, const RunContext& ctx) {
    const std::string section = p.str("section");
    if (section == "lotka" || section == "kolmogorov") return reproduce_lyapunov(p, ctx, section);
    if (section == "sirs") return reproduce_sirs(p, ctx);
    throw ConfigError("section", "section must be lotka, sirs or kolmogorov");
}

}  // namespace

const std::vector<CommandSpec>& command_specs() {
    static const std::vector<CommandSpec> specs = build_specs();
    return specs;
}

const CommandSpec& command_spec(const std::string& name) {
    for (const auto& s : command_specs())
        if (s.name == name) return s;
    throw ConfigError("command", "unknown command '" + name + "'");
}

int run_command(const Params& p, const RunContext& ctx) {
    if (p.command == "simulate") return cmd_simulate(p, ctx);
    if (p.command == "measure") return cmd_measure(p, ctx);
    if (p.command == "rates") return cmd_rates(p, ctx);
    if (p.command == "certify") return cmd_certify(p, ctx);
    if (p.command == "trace") return cmd_trace(p, ctx);
    if (p.command == "concentration") return cmd_concentration(p, ctx);
    if (p.command == "reproduce") return cmd_reproduce(p, ctx);
    throw ConfigError("command", "unknown command '" + p.command + "'");
}

}  // namespace exlab::cli
