#include "gfsi/truncated_gaussian.hpp"

#include "gfsi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace gfsi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTailSwitch = 8.0;

double log_add(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

/// log P(za <= Z <= zb), za <= zb.
double log_std_mass(double za, double zb) {
    if (!(zb > za)) return -kInf;
    if (za >= 0.0) {
        const double la = log_upper_tail(za);
        const double lb = log_upper_tail(zb);
        return la + std::log1p(-std::exp(lb - la));
    }
    if (zb <= 0.0) return log_std_mass(-zb, -za);
    // Straddles zero: add the two half masses via erf to avoid 1 - Q - Q.
    const double left = za == -kInf ? 1.0 : std::erf(-za / std::numbers::sqrt2);
    const double right = zb == kInf ? 1.0 : std::erf(zb / std::numbers::sqrt2);
    return std::log(0.5 * (left + right));
}

double log_mass_checked(const IntervalUnion& S, double mu, double sigma) {
    const double lm = log_mass(S, mu, sigma);
    if (lm == -kInf || std::isnan(lm)) throw DegenerateTruncation("truncation set has no probability mass");
    return lm;
}

}  // namespace

IntervalUnion::IntervalUnion(std::vector<Interval> pieces, double merge_tol) {
    for (const auto& p : pieces) {
        if (std::isnan(p.lo) || std::isnan(p.hi)) throw InputError("interval endpoint is NaN");
        if (p.lo > p.hi) throw InputError("interval has lo > hi");
    }
    std::sort(pieces.begin(), pieces.end(), [](const Interval& a, const Interval& b) {
        return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi);
    });
    for (const auto& p : pieces) {
        if (!pieces_.empty() && p.lo <= pieces_.back().hi + merge_tol) {
            pieces_.back().hi = std::max(pieces_.back().hi, p.hi);
        } else {
            pieces_.push_back(p);
        }
    }
}

IntervalUnion IntervalUnion::real_line() { return IntervalUnion({Interval{}}); }

IntervalUnion IntervalUnion::two_sided_tail(double t) {
    if (!(t >= 0.0)) throw InputError("two_sided_tail: t must be nonnegative");
    if (t == 0.0) return real_line();
    return IntervalUnion({{-kInf, -t}, {t, kInf}});
}

bool IntervalUnion::contains(double x) const {
    return std::any_of(pieces_.begin(), pieces_.end(), [x](const Interval& p) { return p.lo <= x && x <= p.hi; });
}

double IntervalUnion::distance_to_endpoint(double x) const {
    double best = kInf;
    for (const auto& p : pieces_) {
        if (std::isfinite(p.lo)) best = std::min(best, std::abs(x - p.lo));
        if (std::isfinite(p.hi)) best = std::min(best, std::abs(x - p.hi));
    }
    return best;
}

IntervalUnion IntervalUnion::intersect(const IntervalUnion& other) const {
    std::vector<Interval> out;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < pieces_.size() && j < other.pieces_.size()) {
        const Interval& a = pieces_[i];
        const Interval& b = other.pieces_[j];
        const double lo = std::max(a.lo, b.lo);
        const double hi = std::min(a.hi, b.hi);
        if (lo <= hi) out.push_back({lo, hi});
        (a.hi < b.hi) ? ++i : ++j;
    }
    return IntervalUnion(std::move(out));
}

IntervalUnion IntervalUnion::unite(const IntervalUnion& other, double merge_tol) const {
    std::vector<Interval> all = pieces_;
    all.insert(all.end(), other.pieces_.begin(), other.pieces_.end());
    return IntervalUnion(std::move(all), merge_tol);
}

std::string IntervalUnion::to_string() const {
    if (pieces_.empty()) return "{}";
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        if (i) os << " u ";
        os << '[' << pieces_[i].lo << ", " << pieces_[i].hi << ']';
    }
    return os.str();
}

double log_upper_tail(double z) {
    if (std::isnan(z)) return z;
    if (z == kInf) return -kInf;
    if (z < kTailSwitch) return std::log(0.5 * std::erfc(z / std::numbers::sqrt2));
    // Mills ratio continued fraction Q(z) = phi(z) / (z + 1/(z + 2/(z + 3/(z + ...)))),
    // evaluated backwards; 60 terms are ample for z >= 8.
    double frac = z;
    for (int k = 60; k >= 1; --k) frac = z + k / frac;
    return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(frac);
}

double log_mass(const IntervalUnion& S, double mu, double sigma) {
    if (!(sigma > 0.0)) throw InputError("log_mass: sigma must be positive");
    double acc = -kInf;
    for (const auto& p : S.intervals()) acc = log_add(acc, log_std_mass((p.lo - mu) / sigma, (p.hi - mu) / sigma));
    return acc;
}

double mass_direct(const IntervalUnion& S, double mu, double sigma) {
    if (!(sigma > 0.0)) throw InputError("mass_direct: sigma must be positive");
    auto Phi = [](double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); };
    double acc = 0.0;
    for (const auto& p : S.intervals()) acc += Phi((p.hi - mu) / sigma) - Phi((p.lo - mu) / sigma);
    return acc;
}

double two_sided_survival(double t, const TruncatedGaussian& tg) {
    if (!(t >= 0.0)) throw InputError("two_sided_survival: t must be nonnegative");
    const double total = log_mass_checked(tg.support, tg.mu, tg.sigma);
    const double tail = log_mass(tg.support.intersect(IntervalUnion::two_sided_tail(t)), tg.mu, tg.sigma);
    return std::clamp(std::exp(tail - total), 0.0, 1.0);
}

double cdf(double t, const TruncatedGaussian& tg) {
    const double lower = log_mass(tg.support.intersect(IntervalUnion({{-kInf, t}})), tg.mu, tg.sigma);
    const double upper = log_mass(tg.support.intersect(IntervalUnion({{t, kInf}})), tg.mu, tg.sigma);
    const double total = log_add(lower, upper);
    if (total == -kInf || std::isnan(total)) throw DegenerateTruncation("truncation set has no probability mass");
    // Report the smaller side directly so values near 0 and 1 keep their precision.
    if (lower <= upper) return std::clamp(std::exp(lower - total), 0.0, 1.0);
    return std::clamp(-std::expm1(upper - total), 0.0, 1.0);
}

double solve_mean(double t, double target, double sigma, const IntervalUnion& S) {
    if (!(target > 0.0 && target < 1.0)) throw InputError("solve_mean: target must lie in (0, 1)");
    if (!(sigma > 0.0)) throw InputError("solve_mean: sigma must be positive");
    if (!std::isfinite(t)) throw InputError("solve_mean: t must be finite");
    auto f = [&](double mu) { return cdf(t, {mu, sigma, S}) - target; };

    double lo = t - sigma;
    double hi = t + sigma;
    double step = sigma;
    int doublings = 0;
    while (f(lo) < 0.0) {
        if (++doublings > 200) throw NoRoot("solve_mean: no lower bracket");
        step *= 2.0;
        lo = t - step;
    }
    step = sigma;
    doublings = 0;
    while (f(hi) > 0.0) {
        if (++doublings > 200) throw NoRoot("solve_mean: no upper bracket");
        step *= 2.0;
        hi = t + step;
    }
    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace gfsi
