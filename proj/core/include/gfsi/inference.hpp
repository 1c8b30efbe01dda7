#pragma once

#include "gfsi/dual_path.hpp"
#include "gfsi/line_search.hpp"
#include "gfsi/truncated_gaussian.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gfsi {

/// Difference-in-means contrast between two node sets.
struct Contrast {
    NodeSet c1;
    NodeSet c2;
    Vector nu;
    double nu_norm = 0.0;
    double stat = 0.0;  // nu^T y, zero until data is supplied
};

/// Throws InputError for empty, overlapping or out-of-range sets.
Contrast make_contrast(const NodeSet& C1, const NodeSet& C2, int n);
Contrast make_contrast(const NodeSet& C1, const NodeSet& C2, const Vector& y);

double p_naive(const Contrast& c, double sigma);

struct HyunResult {
    double p = 1.0;
    Interval interval;
};

/// Conditions on the full selection polyhedron of the first K steps
/// (all steps when K < 0).
HyunResult p_hyun(const Vector& y, const DualPath& path, const Contrast& c, double sigma, int K = -1);

enum class Conditioning { FixedK, FixedL };

/// How the early-stopping margin is chosen.
struct EarlyStop {
    enum class Mode { Off, Auto, Fixed } mode = Mode::Off;
    double delta = 0.0;  // used with Mode::Fixed
};

/// delta = max(0, 10 sigma |nu| - |nu^T y|).
double recommended_delta(const Contrast& c, double sigma);

struct CI {
    double lower = 0.0;
    double upper = 0.0;
};

struct TestResult {
    Contrast contrast;
    double sigma = 0.0;
    std::string sigma_method = "known";
    double p_naive = 1.0;
    double p_hyun = 1.0;
    double p_selective = 1.0;
    IntervalUnion hyun_set;
    IntervalUnion selective_set;
    std::optional<CI> ci_naive;
    std::optional<CI> ci_hyun;
    std::optional<CI> ci_selective;
    int n_intervals = 0;
    int n_instances = 0;
    int total_halvings = 0;
    int max_halvings = 0;
    double runtime_ms = 0.0;
    bool early_stopped = false;
    double delta = 0.0;
    std::vector<std::string> notes;
};

/// Selective p-value conditioning only on C1 and C2 being estimated
/// components. Fills the selective fields of the result.
TestResult p_selective(const Vector& y, std::shared_ptr<const Graph> g, Conditioning cond, int K_or_L,
                       const NodeSet& C1, const NodeSet& C2, double sigma, const SearchConfig& cfg = {},
                       EarlyStop early = {});

/// (theta_l, theta_u): the means at which the truncated cdf of the observed
/// statistic equals 1 - alpha/2 and alpha/2.
CI selective_ci(const IntervalUnion& S, double stat, double sigma_total, double alpha);

struct TestOptions {
    Conditioning cond = Conditioning::FixedK;
    int K_or_L = 1;
    SearchConfig search;
    EarlyStop early;
    double alpha = 0.05;
    bool with_ci = true;
};

/// Naive, Hyun and selective p-values with their intervals for one pair.
TestResult test_pair(const Vector& y, std::shared_ptr<const Graph> g, const NodeSet& C1, const NodeSet& C2,
                     double sigma, const TestOptions& opts);

enum class SigmaMethod { Residual, Sample, Mad };

/// Residual needs the fitted partition (denominator n - L); Mad uses first
/// differences and assumes chain-ordered data. Returns sigma, not sigma^2.
double estimate_sigma(const Vector& y, SigmaMethod method, const Partition* partition = nullptr);

SigmaMethod parse_sigma_method(const std::string& name);
std::string to_string(SigmaMethod m);

}  // namespace gfsi
