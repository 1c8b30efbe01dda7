#pragma once

#include <limits>
#include <string>
#include <vector>

namespace gfsi {

struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Sorted, disjoint closed intervals; endpoints may be infinite.
class IntervalUnion {
public:
    IntervalUnion() = default;
    /// Sorts and merges pieces that overlap or lie within merge_tol of each
    /// other. Throws InputError for NaN endpoints or lo > hi.
    explicit IntervalUnion(std::vector<Interval> pieces, double merge_tol = 0.0);

    static IntervalUnion real_line();
    /// (-inf, -t] u [t, inf) for t >= 0.
    static IntervalUnion two_sided_tail(double t);

    const std::vector<Interval>& intervals() const noexcept { return pieces_; }
    std::size_t size() const noexcept { return pieces_.size(); }
    bool empty() const noexcept { return pieces_.empty(); }
    bool contains(double x) const;
    /// Distance from x to the nearest finite endpoint (inf if none).
    double distance_to_endpoint(double x) const;

    IntervalUnion intersect(const IntervalUnion& other) const;
    IntervalUnion unite(const IntervalUnion& other, double merge_tol = 0.0) const;

    std::string to_string() const;

    friend bool operator==(const IntervalUnion&, const IntervalUnion&) = default;

private:
    std::vector<Interval> pieces_;
};

struct TruncatedGaussian {
    double mu = 0.0;
    double sigma = 1.0;  // sigma * |nu| for a contrast statistic
    IntervalUnion support;
};

/// log P(Z >= z) for Z ~ N(0, 1), accurate far into the upper tail.
double log_upper_tail(double z);

/// log P(mu + sigma Z in S). Returns -inf for an empty set.
double log_mass(const IntervalUnion& S, double mu, double sigma);

/// The same probability summed directly in probability space, for
/// cross-checks when nothing underflows.
double mass_direct(const IntervalUnion& S, double mu, double sigma);

/// P(|phi| >= t | phi in S) for phi ~ N(mu, sigma^2). Throws
/// DegenerateTruncation if S carries no mass.
double two_sided_survival(double t, const TruncatedGaussian& tg);

/// P(phi <= t | phi in S).
double cdf(double t, const TruncatedGaussian& tg);

/// mu such that cdf(t; mu, sigma, S) = target. cdf decreases in mu, so the
/// root is bracketed by geometric expansion and refined by bisection.
/// Throws NoRoot if no bracket is found within 200 doublings.
double solve_mean(double t, double target, double sigma, const IntervalUnion& S);

}  // namespace gfsi
