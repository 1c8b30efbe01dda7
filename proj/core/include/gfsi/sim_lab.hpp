#pragma once

#include "gfsi/inference.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gfsi {

enum class ScenarioKind { MiddleMutation1D, ThreeSegment2D, Alternating1D };

struct Scenario {
    std::string name = "middle_mutation_1d";
    ScenarioKind kind = ScenarioKind::MiddleMutation1D;
    int n = 200;                 // 1D length
    int rows = 8, cols = 8;      // 2D grid
    std::vector<int> changepoints;  // alternating_1d; first index of each new segment (0-based)
    double delta = 0.0;
    double sigma = 1.0;
    Conditioning cond = Conditioning::FixedK;
    int K_or_L = 2;
    int reps = 100;
    std::uint64_t master_seed = 1;
    double alpha = 0.05;
    EarlyStop early;              // used for the reported selective p-value
    bool also_early_stop = false; // additionally compute the auto-delta early-stopped p-value
    bool with_ci = false;
    int threads = 1;
};

/// Defaults: middle_mutation_1d (n=200, K=2), three_segment_2d (8x8, K=15),
/// alternating_1d (n=500, 10 evenly spaced changepoints, K=10).
Scenario scenario_preset(const std::string& name);

/// The fixed 8x8 three-segment layout, row-major, labels 0..2 for means
/// delta, 0, -delta.
const std::vector<int>& three_segment_mask();

std::shared_ptr<const Graph> scenario_graph(const Scenario& s);

struct Generated {
    Vector y;
    Vector beta;
    Partition truth;  // constant pieces of beta (one block when delta = 0)
};

/// Seed for replicate `rep`, a splitmix64 mix of the master seed and rep id.
std::uint64_t rep_seed(std::uint64_t master_seed, int rep);

Generated generate(const Scenario& s, std::uint64_t seed);

struct RepOutcome {
    int rep = 0;
    bool skipped = false;
    std::string error;
    NodeSet c1, c2;
    double true_effect = 0.0;  // nu^T beta
    double stat = 0.0;
    double sigma_used = 0.0;
    double p_naive = 1.0;
    double p_hyun = 1.0;
    double p_selective = 1.0;
    std::optional<double> p_selective_early;
    std::optional<CI> ci_selective;
    std::optional<CI> ci_hyun;
    std::optional<CI> ci_naive;
    bool detected = false;
    int n_intervals = 0;
    int n_instances = 0;
    int total_halvings = 0;
    int max_halvings = 0;
    double runtime_ms = 0.0;
    bool early_stopped = false;
};

/// Runs one replicate end to end: generate, fit, pick a random pair of
/// estimated components, test it.
RepOutcome run_rep(const Scenario& s, int rep, std::optional<double> sigma_override = std::nullopt);

/// All replicates, in rep order; identical output for any thread count.
std::vector<RepOutcome> run_null_study(const Scenario& s);
std::vector<RepOutcome> run_reps(const Scenario& s);

struct PowerCell {
    double delta = 0.0;
    double sigma = 0.0;
    std::vector<RepOutcome> outcomes;
};

std::vector<PowerCell> run_power_study(const Scenario& base, const std::vector<double>& deltas,
                                       const std::vector<double>& sigmas);

struct PowerBin {
    double lo = 0.0, hi = 0.0;
    int count = 0;
    double power_naive = 0.0, power_hyun = 0.0, power_selective = 0.0;
};

/// Rejection rates grouped into evenly spaced bins of |nu^T beta|.
std::vector<PowerBin> bin_power(const std::vector<RepOutcome>& outcomes, double alpha, int n_bins = 7);

struct DetectionRow {
    double delta = 0.0;
    double sigma = 0.0;
    int tested = 0;
    int detected = 0;
    double detection_probability = 0.0;
    double conditional_power_hyun = 0.0;
    double conditional_power_selective = 0.0;
};

std::vector<DetectionRow> run_detection_study(const Scenario& base, const std::vector<double>& deltas,
                                              const std::vector<double>& sigmas);

struct VarianceRow {
    int rep = 0;
    std::string method;  // known, residual, sample, mad
    double sigma_hat = 0.0;
    double p_naive = 1.0, p_hyun = 1.0, p_selective = 1.0;
};

std::vector<VarianceRow> run_variance_study(const Scenario& s);

struct HalvingSummary {
    std::map<int, int> histogram;  // max halvings per test -> count
    int max_halvings = 0;
    int tests = 0;
};

HalvingSummary run_halving_study(const Scenario& s);

struct TimingSummary {
    int tests = 0;
    double mean_ms = 0.0;
    double max_ms = 0.0;
    double mean_instances = 0.0;
};

TimingSummary run_timing_study(const Scenario& s);
TimingSummary summarize_timing(const std::vector<RepOutcome>& outcomes);

/// Kolmogorov-Smirnov distance between the sample and Uniform(0, 1).
double ks_uniform(std::vector<double> p);
/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace gfsi
