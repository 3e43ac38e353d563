#pragma once

#include "exlab/rng.hpp"
#include "exlab/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace exlab {

struct TailSum {
    double value = 0.0;
    double bound = 0.0;
};

// sum_{n >= 1} (k + n)^{-p} and the integral bound 1 / ((p - 1) k^{p-1}).
TailSum tail_sum(double k, double p);

// sum_{n >= n0} n^{-p}.
double zeta_tail(long long n0, double p);

struct WeightedSumResult {
    double worst_ratio = 0.0;  // max_n |sum_{i=n0}^n i a_i| / n
    long long worst_n = 0;
    bool pass = true;
};

// `a` holds a_1, a_2, ...; sums start at index n0 (1-based).
WeightedSumResult weighted_sum_bound(const std::vector<double>& a, long long n0, double eps);

// Random sequence of length `len` whose partial sums from n0 on stay in
// [-eps, eps]. `style` picks the partial-sum path: 0 iid uniform, 1 reflected
// walk, 2 alternating extremes.
std::vector<double> lemma_a2_sequence(long long len, long long n0, double eps, int style, Rng& rng);

struct FrequencyReport;
// Runs weighted_sum_bound on `count` random sequences with random n0 and style;
// passes iff no sequence violates the bound.
FrequencyReport lemma_a2_check(int count, long long len, double eps, std::uint64_t seed, unsigned threads = 1);

struct Truncation {
    std::vector<double> y, z;
};

// y_n = x_n 1{|x_n| <= n}, z_n = x_n - y_n with n counted from 1.
Truncation truncate(const std::vector<double>& x);

struct Prop1Constants {
    long long n0 = 1;
    double m = 0.0;
    double K = 0.0;
    double tail_target = 0.0;
};

Prop1Constants prop1_constants(double p, double Mp, double eps, double delta);

// ---------------------------------------------------------------------------
// Adapted sequences with exact conditional means
// ---------------------------------------------------------------------------

enum class SequenceKind {
    Uniform,               // iid Uniform(-1, 1)
    CenteredPareto,        // iid P - E P, P Pareto with scale 1 and tail index `shape`
    ScaledRademacher,      // X_n = n * R_n
    MartingaleDifference,  // X_n = R_n (1 if X_{n-1} >= 0 else 1/2)
};

std::string to_string(SequenceKind k);
SequenceKind parse_sequence_kind(const std::string& s);

struct AdaptedSequence {
    SequenceKind kind = SequenceKind::Uniform;
    double p = 2.0;
    double Mp = 1.0 / 3.0;   // claimed sup_n E|X_n|^p
    double shape = 3.0;      // Pareto tail index

    double draw(Rng& rng, long long n, double prev) const;
    // E[X_n | F_{n-1}].
    double conditional_mean() const { return 0.0; }
    // E[X_n 1{|X_n| > level} | F_{n-1}].
    double tail_mean(double level, long long n, double prev) const;

    static AdaptedSequence uniform();
    static AdaptedSequence centered_pareto(double shape, double p);
    static AdaptedSequence scaled_rademacher(double p, double claimed_Mp);
    static AdaptedSequence martingale_difference(double p);
};

// E|P - E P|^p for the Pareto law with scale 1 and tail index `shape`.
double centered_pareto_moment(double shape, double p);

struct MomentSanity {
    double empirical = 0.0;
    double claimed = 0.0;
    bool pass = true;
};

// (1/N) sum |X_n|^p over one path of length N against 1.1 * Mp.
MomentSanity moment_sanity(const AdaptedSequence& seq, long long N, std::uint64_t seed);

struct FrequencyReport {
    std::string check;
    std::string params;
    double frequency = 0.0;
    double se = 0.0;
    double threshold = 0.0;
    bool pass = true;
};

struct Prop1Report {
    FrequencyReport freq;
    Prop1Constants constants;
};

Prop1Report prop1_monte_carlo(const AdaptedSequence& seq, double eps, double delta, long long n_max, int reps,
                              std::uint64_t seed, unsigned threads = 1);

struct LemmaEventsReport {
    FrequencyReport a3;
    FrequencyReport a4;
};

// Throws PreconditionError naming the failing tail condition when n0 is too small.
LemmaEventsReport lemma_events_check(const AdaptedSequence& seq, long long n0, double delta, double eps,
                                     long long n_max, int reps, std::uint64_t seed, unsigned threads = 1);

void write_frequency_csv(std::ostream& os, const std::vector<FrequencyReport>& rows);

}  // namespace exlab
