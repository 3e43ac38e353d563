#include "exlab/concentration.hpp"
#include "exlab/config.hpp"
#include "exlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace exlab {

namespace {

constexpr long long kDirectTerms = 1000;

// sum_{n >= 1} (k + n)^{-p} for k >= 0: direct terms followed by an
// Euler-Maclaurin remainder.
double shifted_zeta(double k, double p) {
    double direct = 0.0;
    for (long long n = kDirectTerms - 1; n >= 1; --n) direct += std::pow(k + static_cast<double>(n), -p);
    const double u = k + static_cast<double>(kDirectTerms);
    const double f = std::pow(u, -p);
    double tail = u * f / (p - 1.0) + 0.5 * f;
    tail += p * f / u / 12.0;
    tail -= p * (p + 1.0) * (p + 2.0) * f / (u * u * u) / 720.0;
    tail += p * (p + 1.0) * (p + 2.0) * (p + 3.0) * (p + 4.0) * f / std::pow(u, 5) / 30240.0;
    return direct + tail;
}

std::string params_string(const std::vector<std::pair<std::string, double>>& kv) {
    std::ostringstream os;
    for (std::size_t i = 0; i < kv.size(); ++i) os << (i ? ";" : "") << kv[i].first << "=" << format_double(kv[i].second);
    return os.str();
}

double binomial_se(double f, int reps) { return std::sqrt(std::max(0.0, f * (1.0 - f)) / reps); }

}  // namespace

TailSum tail_sum(double k, double p) {
    if (!(p > 1.0)) throw PreconditionError("tail sum diverges for p <= 1");
    if (!(k > 0.0)) throw PreconditionError("tail sum needs k > 0");
    TailSum t;
    t.value = shifted_zeta(k, p);
    t.bound = 1.0 / ((p - 1.0) * std::pow(k, p - 1.0));
    return t;
}

double zeta_tail(long long n0, double p) {
    if (!(p > 1.0)) throw PreconditionError("tail sum diverges for p <= 1");
    if (n0 < 1) throw PreconditionError("tail index must be at least 1");
    return shifted_zeta(static_cast<double>(n0 - 1), p);
}

WeightedSumResult weighted_sum_bound(const std::vector<double>& a, long long n0, double eps) {
    if (n0 < 1) throw PreconditionError("n0 must be at least 1");
    const long long N = static_cast<long long>(a.size());
    const double slack = eps * (1.0 + 1e-12);
    double partial = 0.0;
    for (long long k = n0; k <= N; ++k) {
        partial += a[k - 1];
        if (std::abs(partial) > slack)
            throw PreconditionError("partial sum exceeds eps at k = " + std::to_string(k));
    }
    WeightedSumResult r;
    double weighted = 0.0;
    for (long long n = n0; n <= N; ++n) {
        weighted += static_cast<double>(n) * a[n - 1];
        double ratio = std::abs(weighted) / static_cast<double>(n);
        if (ratio > r.worst_ratio) {
            r.worst_ratio = ratio;
            r.worst_n = n;
        }
    }
    r.pass = r.worst_ratio <= 2.0 * eps * (1.0 + 1e-9);
    return r;
}

std::vector<double> lemma_a2_sequence(long long len, long long n0, double eps, int style, Rng& rng) {
    if (len < 1 || n0 < 1 || n0 > len) throw PreconditionError("need 1 <= n0 <= len");
    if (!(eps > 0.0)) throw PreconditionError("eps must be positive");
    std::vector<double> a(len);
    for (long long i = 0; i + 1 < n0; ++i) a[i] = rng.normal();
    double prev = 0.0;  // partial sum before index n0
    for (long long k = n0; k <= len; ++k) {
        double A = 0.0;
        switch (style) {
            case 0: A = rng.uniform(-eps, eps); break;
            case 1: {
                A = prev + rng.uniform(-0.2 * eps, 0.2 * eps);
                if (A > eps) A = 2.0 * eps - A;
                if (A < -eps) A = -2.0 * eps - A;
                break;
            }
            default: A = ((k - n0) % 2 == 0 ? eps : -eps) * (1.0 - 1e-9); break;
        }
        a[k - 1] = A - prev;
        prev = A;
    }
    return a;
}

FrequencyReport lemma_a2_check(int count, long long len, double eps, std::uint64_t seed, unsigned threads) {
    if (count < 1) throw PreconditionError("lemma A.2 check needs count >= 1");
    std::vector<char> bad(count, 0);
    parallel_for(static_cast<std::size_t>(count), threads, [&](std::size_t r) {
        Rng rng(mix(seed, r));
        const long long n0 = 1 + static_cast<long long>(rng.uniform() * std::min<long long>(len, 100));
        const int style = static_cast<int>(r % 3);
        bad[r] = weighted_sum_bound(lemma_a2_sequence(len, n0, eps, style, rng), n0, eps).pass ? 0 : 1;
    });
    int violations = 0;
    for (char b : bad) violations += b;
    FrequencyReport rep;
    rep.check = "lemma_a2";
    rep.params = "count=" + std::to_string(count) + ";len=" + std::to_string(len) + ";eps=" + format_double(eps);
    rep.frequency = static_cast<double>(violations) / count;
    rep.threshold = 0.0;
    rep.pass = violations == 0;
    return rep;
}

Truncation truncate(const std::vector<double>& x) {
    Truncation t;
    t.y.resize(x.size());
    t.z.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double n = static_cast<double>(i + 1);
        t.y[i] = std::abs(x[i]) <= n ? x[i] : 0.0;
        t.z[i] = x[i] - t.y[i];
    }
    return t;
}

Prop1Constants prop1_constants(double p, double Mp, double eps, double delta) {
    if (!(p > 1.0)) throw PreconditionError("p must exceed 1");
    if (!(Mp > 0.0 && eps > 0.0 && delta > 0.0)) throw PreconditionError("Mp, eps and delta must be positive");
    Prop1Constants c;
    c.tail_target = std::min({eps * delta * delta, 0.5 * eps * delta, eps});
    auto ok = [&](long long n0) { return Mp * zeta_tail(n0, p) <= c.tail_target; };
    long long hi = 1;
    while (!ok(hi)) {
        if (hi > (1LL << 60)) throw PreconditionError("tail condition unreachable");
        hi *= 2;
    }
    long long lo = hi / 2;  // ok(lo) is false unless hi == 1
    if (hi == 1) {
        c.n0 = 1;
    } else {
        while (hi - lo > 1) {
            long long mid = lo + (hi - lo) / 2;
            if (ok(mid)) hi = mid;
            else lo = mid;
        }
        c.n0 = hi;
    }
    c.m = 2.0 * static_cast<double>(c.n0) * std::pow(Mp, 1.0 / p) / eps;
    c.K = c.m;
    return c;
}

// ---------------------------------------------------------------------------

std::string to_string(SequenceKind k) {
    switch (k) {
        case SequenceKind::Uniform: return "uniform";
        case SequenceKind::CenteredPareto: return "pareto";
        case SequenceKind::ScaledRademacher: return "scaled_rademacher";
        case SequenceKind::MartingaleDifference: return "martingale";
    }
    return "unknown";
}

SequenceKind parse_sequence_kind(const std::string& s) {
    if (s == "uniform") return SequenceKind::Uniform;
    if (s == "pareto") return SequenceKind::CenteredPareto;
    if (s == "scaled_rademacher") return SequenceKind::ScaledRademacher;
    if (s == "martingale") return SequenceKind::MartingaleDifference;
    throw ConfigError("generator", "unsupported generator '" + s +
                                       "' (uniform, pareto, scaled_rademacher, martingale)");
}

double AdaptedSequence::draw(Rng& rng, long long n, double prev) const {
    switch (kind) {
        case SequenceKind::Uniform: return rng.uniform(-1.0, 1.0);
        case SequenceKind::CenteredPareto: {
            const double mean = shape / (shape - 1.0);
            return std::pow(1.0 - rng.uniform(), -1.0 / shape) - mean;
        }
        case SequenceKind::ScaledRademacher:
            return (rng.uniform() < 0.5 ? -1.0 : 1.0) * static_cast<double>(n);
        case SequenceKind::MartingaleDifference:
            return (rng.uniform() < 0.5 ? -1.0 : 1.0) * (prev >= 0.0 ? 1.0 : 0.5);
    }
    return 0.0;
}

double AdaptedSequence::tail_mean(double level, long long /*n*/, double /*prev*/) const {
    if (kind != SequenceKind::CenteredPareto) return 0.0;  // symmetric laws
    const double a = shape;
    const double mu = a / (a - 1.0);
    const double c = mu + level;
    double upper = a / (a - 1.0) * std::pow(c, 1.0 - a) - mu * std::pow(c, -a);
    double lower = 0.0;
    const double d = mu - level;
    if (d > 1.0) lower = a / (a - 1.0) * (1.0 - std::pow(d, 1.0 - a)) - mu * (1.0 - std::pow(d, -a));
    return upper + lower;
}

AdaptedSequence AdaptedSequence::uniform() {
    AdaptedSequence s;
    s.kind = SequenceKind::Uniform;
    s.p = 2.0;
    s.Mp = 1.0 / 3.0;
    return s;
}

AdaptedSequence AdaptedSequence::centered_pareto(double shape, double p) {
    if (!(shape > p)) throw PreconditionError("Pareto tail index must exceed p for a finite p-th moment");
    AdaptedSequence s;
    s.kind = SequenceKind::CenteredPareto;
    s.shape = shape;
    s.p = p;
    s.Mp = centered_pareto_moment(shape, p);
    return s;
}

AdaptedSequence AdaptedSequence::scaled_rademacher(double p, double claimed_Mp) {
    AdaptedSequence s;
    s.kind = SequenceKind::ScaledRademacher;
    s.p = p;
    s.Mp = claimed_Mp;
    return s;
}

AdaptedSequence AdaptedSequence::martingale_difference(double p) {
    AdaptedSequence s;
    s.kind = SequenceKind::MartingaleDifference;
    s.p = p;
    s.Mp = 1.0;
    return s;
}

double centered_pareto_moment(double a, double p) {
    if (!(a > p) || !(a > 1.0)) throw PreconditionError("moment is infinite unless the tail index exceeds p and 1");
    const double mu = a / (a - 1.0);
    // above the mean: x = mu / t turns the integral into a Beta function
    const double upper = a * std::pow(mu, p - a) * std::beta(a - p, p + 1.0);
    // below the mean: composite Simpson on [1, mu]
    const int N = 20000;
    const double h = (mu - 1.0) / N;
    auto f = [&](double x) { return std::pow(mu - x, p) * a * std::pow(x, -a - 1.0); };
    double s = f(1.0) + f(mu);
    for (int i = 1; i < N; ++i) s += (i % 2 ? 4.0 : 2.0) * f(1.0 + i * h);
    return upper + s * h / 3.0;
}

MomentSanity moment_sanity(const AdaptedSequence& seq, long long N, std::uint64_t seed) {
    Rng rng(seed);
    double acc = 0.0, prev = 0.0;
    for (long long n = 1; n <= N; ++n) {
        double x = seq.draw(rng, n, prev);
        acc += std::pow(std::abs(x), seq.p);
        prev = x;
    }
    MomentSanity m;
    m.empirical = acc / static_cast<double>(N);
    m.claimed = seq.Mp;
    m.pass = m.empirical <= 1.1 * seq.Mp;
    return m;
}

Prop1Report prop1_monte_carlo(const AdaptedSequence& seq, double eps, double delta, long long n_max, int reps,
                              std::uint64_t seed, unsigned threads) {
    if (reps < 1 || n_max < 1) throw PreconditionError("prop1 Monte Carlo needs reps >= 1 and n_max >= 1");
    Prop1Report rep;
    rep.constants = prop1_constants(seq.p, seq.Mp, eps, delta);
    const double m = rep.constants.m;
    std::vector<char> violated(reps, 0);
    parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
        Rng rng(mix(seed, r));
        double S = 0.0, prev = 0.0;
        for (long long n = 1; n <= n_max; ++n) {
            double x = seq.draw(rng, n, prev);
            S += x - seq.conditional_mean();
            prev = x;
            if (std::abs(S) > m + 4.0 * static_cast<double>(n) * delta) {
                violated[r] = 1;
                return;
            }
        }
    });
    int count = 0;
    for (char v : violated) count += v;
    FrequencyReport& f = rep.freq;
    f.check = "prop1";
    f.params = params_string({{"generator_p", seq.p},
                              {"Mp", seq.Mp},
                              {"eps", eps},
                              {"delta", delta},
                              {"n0", static_cast<double>(rep.constants.n0)},
                              {"m", m},
                              {"n_max", static_cast<double>(n_max)},
                              {"reps", static_cast<double>(reps)}});
    f.params = "generator=" + to_string(seq.kind) + ";" + f.params;
    f.frequency = static_cast<double>(count) / reps;
    f.se = binomial_se(f.frequency, reps);
    f.threshold = 3.0 * eps;
    f.pass = f.frequency <= f.threshold + 2.0 * f.se;
    return rep;
}

LemmaEventsReport lemma_events_check(const AdaptedSequence& seq, long long n0, double delta, double eps,
                                     long long n_max, int reps, std::uint64_t seed, unsigned threads) {
    if (reps < 1) throw PreconditionError("lemma check needs reps >= 1");
    const double tail = seq.Mp * zeta_tail(std::max<long long>(n0, 1), seq.p);
    if (!(tail <= eps * delta * delta))
        throw PreconditionError("n0 = " + std::to_string(n0) + " violates the truncated-sum condition Mp sum n^-p <= eps delta^2");
    if (!(2.0 * tail <= eps * delta))
        throw PreconditionError("n0 = " + std::to_string(n0) + " violates the tail-excess condition 2 Mp sum n^-p <= eps delta");
    std::vector<char> a3(reps, 1), a4(reps, 1);
    parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
        Rng rng(mix(seed, r));
        double prev = 0.0, sy = 0.0, sz = 0.0;
        for (long long n = 1; n <= n_max; ++n) {
            double x = seq.draw(rng, n, prev);
            const double level = static_cast<double>(n);
            const double tm = seq.tail_mean(level, n, prev);
            prev = x;
            if (n < n0) continue;
            const bool small = std::abs(x) <= level;
            const double y = small ? x : 0.0;
            const double z = x - y;
            sy += y - (seq.conditional_mean() - tm);
            sz += std::abs(z - tm);
            if (std::abs(sy) > 2.0 * level * delta) a3[r] = 0;
            if (sz > 2.0 * level * delta) a4[r] = 0;
        }
    });
    auto freq = [&](const std::vector<char>& v, const std::string& name) {
        FrequencyReport f;
        int count = 0;
        for (char c : v) count += c;
        f.check = name;
        f.params = "generator=" + to_string(seq.kind) + ";" +
                   params_string({{"p", seq.p},
                                  {"Mp", seq.Mp},
                                  {"n0", static_cast<double>(n0)},
                                  {"delta", delta},
                                  {"eps", eps},
                                  {"n_max", static_cast<double>(n_max)},
                                  {"reps", static_cast<double>(reps)}});
        f.frequency = static_cast<double>(count) / reps;
        f.se = binomial_se(f.frequency, reps);
        f.threshold = 1.0 - eps;
        f.pass = f.frequency >= f.threshold - 2.0 * f.se;
        return f;
    };
    return {freq(a3, "lemma_a3"), freq(a4, "lemma_a4")};
}

void write_frequency_csv(std::ostream& os, const std::vector<FrequencyReport>& rows) {
    os << "check,params,frequency,threshold,pass\n";
    for (const auto& r : rows)
        os << r.check << "," << r.params << "," << format_double(r.frequency) << "," << format_double(r.threshold)
           << "," << (r.pass ? "true" : "false") << "\n";
}

}  // namespace exlab
