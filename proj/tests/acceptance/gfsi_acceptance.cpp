// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include "oracles.hpp"

#include "gfsi/dual_path.hpp"
#include "gfsi/errors.hpp"
#include "gfsi/inference.hpp"
#include "gfsi/line_search.hpp"
#include "gfsi/polyhedron.hpp"
#include "gfsi/sim_lab.hpp"
#include "gfsi/truncated_gaussian.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

using namespace gfsi;
using Clock = std::chrono::steady_clock;

constexpr double kInf = std::numeric_limits<double>::infinity();

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

Vector randn(int n, std::mt19937_64& rng, double sd = 1.0) {
    std::normal_distribution<double> N(0.0, sd);
    Vector v(n);
    for (auto& x : v) x = N(rng);
    return v;
}

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// 1. Path correctness against a coordinate-descent minimizer.
Verdict path_correctness() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1001);
    double worst_cd = 0.0, worst_proj = 0.0;
    int checks = 0;
    for (int inst = 0; inst < 100; ++inst) {
        const int n = 2 + static_cast<int>(rng() % 19);
        const auto g = std::make_shared<const Graph>(chain_graph(n));
        const Vector y = randn(n, rng);
        const DualPath p = run_dual_path(y, g, 10 * g->n_edges() + 10);
        const auto knots = p.knots();
        std::vector<std::pair<double, double>> segments;
        for (std::size_t k = 0; k < knots.size(); ++k)
            segments.emplace_back(knots[k], k == 0 ? 1.5 * knots[0] : knots[k - 1]);
        if (p.terminated_early() && !knots.empty() && knots.back() > 0.0) segments.emplace_back(0.0, knots.back());
        for (const auto& [lo, hi] : segments) {
            for (int j = 1; j <= 5; ++j) {
                const double lambda = lo + (hi - lo) * j / 6.0;
                const Vector beta = solution_at(p, lambda);
                const Vector ref = oracle::fused_lasso_cd(y, *g, lambda);
                worst_cd = std::max(worst_cd, (beta - ref).lpNorm<Eigen::Infinity>());
                worst_proj = std::max(worst_proj, (solution_at_projection(p, lambda) - beta).lpNorm<Eigen::Infinity>());
                ++checks;
            }
        }
    }
    const double secs = seconds_since(t0);
    return {worst_cd <= 1e-6 && worst_proj <= 1e-8 && secs < 60.0,
            fmt("%d lambda checks, max |beta - cd| = %.2e, max |projection - dual| = %.2e, %.1f s", checks, worst_cd,
                worst_proj, secs)};
}

struct Base {
    std::shared_ptr<const Graph> g;
    int K;
};

std::vector<Base> criterion2_bases() {
    std::vector<Base> out;
    for (int i = 0; i < 20; ++i) {
        if (i % 2 == 0) out.push_back({std::make_shared<const Graph>(chain_graph(20)), 4});
        else out.push_back({std::make_shared<const Graph>(grid_graph(4, 4)), 4});
    }
    return out;
}

// Jitter scales cycle from well inside the selection event to far outside.
constexpr double kJitter[] = {0.003, 0.01, 0.03, 0.1, 0.3, 1.0};

struct PolyInstance {
    Vector y;
    std::shared_ptr<const Graph> g;
    int K;
};

// 2. Polyhedron membership equals exact reproduction of the path outputs.
Verdict polyhedron_oracle(std::vector<PolyInstance>& instances) {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2002);
    int disagreements = 0, inside = 0, total = 0;
    for (const Base& b : criterion2_bases()) {
        const Vector y = randn(b.g->n_nodes(), rng);
        const DualPath p = run_dual_path(y, b.g, b.K);
        const Polyhedron P = build_polyhedron(p);
        const PathSignature sig = p.signature();
        instances.push_back({y, b.g, b.K});
        for (int r = 0; r < 200; ++r) {
            const Vector Y = y + randn(b.g->n_nodes(), rng, kJitter[r % 6]);
            const bool same = oracle::same_selection(Y, b.g, b.K, sig);
            const bool in_p = P.apply(Y).maxCoeff() <= 0.0;
            ++total;
            inside += same;
            disagreements += same != in_p;
            if (same) instances.push_back({Y, b.g, b.K});
        }
    }
    const double secs = seconds_since(t0);
    return {disagreements == 0 && inside > 0 && secs < 300.0,
            fmt("%d jittered Y (%d reproduce the path), %d disagreements, %.1f s", total, inside, disagreements, secs)};
}

// 3. phi-interval endpoints are sharp.
Verdict phi_sharpness(const std::vector<PolyInstance>& instances) {
    int endpoints = 0, failures = 0, contrasts = 0;
    for (const auto& in : instances) {
        const DualPath p = run_dual_path(in.y, in.g, in.K);
        const Partition& cc = p.steps().back().components;
        if (cc.size() < 2) continue;
        const Contrast c = make_contrast(cc.block(0), cc.block(1), in.y);
        const PhiInterval iv = phi_interval(build_polyhedron(p), in.y, c.nu);
        ++contrasts;
        const double nsq = c.nu.squaredNorm();
        auto same = [&](double phi) {
            return oracle::same_selection(in.y + ((phi - c.stat) / nsq) * c.nu, in.g, in.K, p.signature());
        };
        if (std::isfinite(iv.lo)) {
            ++endpoints;
            failures += !same(iv.lo + 1e-6) || same(iv.lo - 1e-3);
        }
        if (std::isfinite(iv.hi)) {
            ++endpoints;
            failures += !same(iv.hi - 1e-6) || same(iv.hi + 1e-3);
        }
    }
    return {failures == 0 && endpoints > 0,
            fmt("%d instances, %d finite endpoints, %d not sharp", contrasts, endpoints, failures)};
}

struct ScanCase {
    std::string label;
    Vector y;
    std::shared_ptr<const Graph> g;
    int K;
    bool chain;
};

bool same_sets(const IntervalUnion& a, const IntervalUnion& b, double& worst) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (auto [x, y] : {std::pair{a.intervals()[i].lo, b.intervals()[i].lo},
                            std::pair{a.intervals()[i].hi, b.intervals()[i].hi}}) {
            if (x == y) continue;
            if (!std::isfinite(x) || !std::isfinite(y)) return false;
            worst = std::max(worst, std::abs(x - y) / std::max(1.0, std::abs(x)));
        }
    }
    return worst <= 1e-9;
}

// 4. Truncation sets against a dense grid of direct reruns.
Verdict truncation_oracle() {
    const auto t0 = Clock::now();
    // Draws with fewer than two estimated components have nothing to test.
    std::vector<ScanCase> cases;
    auto draw = [&cases](const char* name, int count, int K, int levels, std::uint64_t master) {
        for (int i = 0, kept = 0; kept < count; ++i) {
            Scenario s = scenario_preset(name);
            s.delta = (kept % levels) * 1.0;
            const auto g = scenario_graph(s);
            const Vector y = generate(s, rep_seed(master, i)).y;
            if (run_dual_path(y, g, K).steps().back().components.size() < 2) continue;
            cases.push_back({name, y, g, K, s.kind != ScenarioKind::ThreeSegment2D});
            ++kept;
        }
    };
    draw("middle_mutation_1d", 35, 2, 4, 4004);
    draw("three_segment_2d", 15, 15, 3, 4005);
    std::mt19937_64 rng(4006);
    int points = 0, disagree_k = 0, disagree_l = 0, tested = 0, fixed_l_tested = 0, identical = 0, chains = 0;
    double worst_gap = 0.0;
    std::string first_bad;
    for (std::size_t ci = 0; ci < cases.size(); ++ci) {
        const ScanCase& sc = cases[ci];
        const DualPath p = run_dual_path(sc.y, sc.g, sc.K);
        const Partition& cc = p.steps().back().components;
        if (cc.size() < 2) continue;
        const std::size_t a = rng() % cc.size();
        std::size_t b = rng() % (cc.size() - 1);
        if (b >= a) ++b;
        const Contrast c = make_contrast(cc.block(a), cc.block(b), sc.y);
        const double B = 20.0 * c.nu_norm;
        const SearchResult rk = compute_S(sc.y, sc.g, sc.K, c.c1, c.c2, c.nu);
        const auto scan_k = oracle::grid_scan(sc.y, sc.g, sc.K, false, c, rk.S, B, 1e-3, 2e-3);
        ++tested;
        points += scan_k.points;
        disagree_k += scan_k.disagreements;
        if (scan_k.disagreements && first_bad.empty())
            first_bad = fmt(" first mismatch: case %zu fixed-K phi=%.6f", ci, scan_k.worst_phi);

        // Fixed L: the component count at step K, with C1 and C2 taken from
        // the first step reaching that count.
        const int L = static_cast<int>(cc.size());
        const int kstar = first_step_with_components(p, L);
        const Partition& ccl = cc_at_step(p, kstar);
        const bool same_pair = ccl.has_block(c.c1) && ccl.has_block(c.c2);
        const Contrast cl = same_pair ? c : make_contrast(ccl.block(0), ccl.block(1), sc.y);
        const SearchResult rl = compute_S_fixed_L(sc.y, sc.g, L, cl.c1, cl.c2, cl.nu);
        const auto scan_l = oracle::grid_scan(sc.y, sc.g, L, true, cl, rl.S, 20.0 * cl.nu_norm, 1e-3, 2e-3);
        ++fixed_l_tested;
        points += scan_l.points;
        disagree_l += scan_l.disagreements;
        if (scan_l.disagreements && first_bad.empty())
            first_bad = fmt(" first mismatch: case %zu fixed-L phi=%.6f", ci, scan_l.worst_phi);
        if (sc.chain) {
            ++chains;
            identical += same_pair && same_sets(rk.S, rl.S, worst_gap);
        }
    }
    const double secs = seconds_since(t0);
    return {disagree_k == 0 && disagree_l == 0 && identical == chains && tested == static_cast<int>(cases.size()),
            fmt("%d fixed-K and %d fixed-L sets, %d scan points, disagreements %d / %d, 1D fixed-L == fixed-K on %d/%d "
                "(max rel gap %.1e), %.0f s",
                tested, fixed_l_tested, points, disagree_k, disagree_l, identical, chains, worst_gap, secs) +
                first_bad};
}

std::vector<double> collect(const std::vector<RepOutcome>& v, double RepOutcome::*f) {
    std::vector<double> out;
    for (const auto& o : v)
        if (!o.skipped) out.push_back(o.*f);
    return out;
}

double rejection_rate(const std::vector<double>& p, double alpha) {
    if (p.empty()) return 0.0;
    return static_cast<double>(std::count_if(p.begin(), p.end(), [alpha](double x) { return x <= alpha; })) /
           static_cast<double>(p.size());
}

int skipped(const std::vector<RepOutcome>& v) {
    return static_cast<int>(std::count_if(v.begin(), v.end(), [](const RepOutcome& o) { return o.skipped; }));
}

// Reps that selected no pair are skipped by design; anything else is an error.
int failed(const std::vector<RepOutcome>& v) {
    return static_cast<int>(std::count_if(v.begin(), v.end(), [](const RepOutcome& o) {
        return o.skipped && o.error != "fewer than two estimated components";
    }));
}

struct NullRuns {
    std::vector<RepOutcome> oned, twod;
    double secs_1d = 0.0, secs_2d = 0.0;
};

// 5. Calibration under the global null.
Verdict null_calibration(NullRuns& runs) {
    Scenario s1 = scenario_preset("middle_mutation_1d");
    s1.delta = 0.0;
    s1.reps = 1000;
    s1.master_seed = 5005;
    s1.also_early_stop = true;
    s1.threads = worker_count();
    auto t0 = Clock::now();
    runs.oned = run_null_study(s1);
    runs.secs_1d = seconds_since(t0);

    Scenario s2 = scenario_preset("three_segment_2d");
    s2.delta = 0.0;
    s2.reps = 300;
    s2.master_seed = 5006;
    s2.also_early_stop = true;
    s2.threads = worker_count();
    t0 = Clock::now();
    runs.twod = run_null_study(s2);
    runs.secs_2d = seconds_since(t0);

    const double ks_sel = ks_uniform(collect(runs.oned, &RepOutcome::p_selective));
    const double ks_hyun = ks_uniform(collect(runs.oned, &RepOutcome::p_hyun));
    const double naive_size = rejection_rate(collect(runs.oned, &RepOutcome::p_naive), 0.05);
    const double size_2d = rejection_rate(collect(runs.twod, &RepOutcome::p_selective), 0.05);
    const bool ok = ks_sel < 0.06 && ks_hyun < 0.06 && naive_size > 0.07 && size_2d >= 0.02 && size_2d <= 0.08 &&
                    failed(runs.oned) == 0 && failed(runs.twod) == 0;
    return {ok, fmt("1D: KS selective %.4f, KS Hyun %.4f, naive size %.3f (%d reps, %d without a pair, %d errors, "
                    "%.0f s); 2D: selective size %.3f (%d reps, %d without a pair, %d errors, %.0f s)",
                    ks_sel, ks_hyun, naive_size, static_cast<int>(runs.oned.size()), skipped(runs.oned) - failed(runs.oned),
                    failed(runs.oned), runs.secs_1d, size_2d, static_cast<int>(runs.twod.size()),
                    skipped(runs.twod) - failed(runs.twod), failed(runs.twod), runs.secs_2d)};
}

// 6. Power of the selective test over the Hyun test.
Verdict power_dominance() {
    Scenario s = scenario_preset("middle_mutation_1d");
    s.delta = 3.0;
    s.reps = 300;
    s.master_seed = 6006;
    s.threads = worker_count();
    const auto out = run_reps(s);
    const double pw_sel = rejection_rate(collect(out, &RepOutcome::p_selective), s.alpha);
    const double pw_hyun = rejection_rate(collect(out, &RepOutcome::p_hyun), s.alpha);
    std::vector<double> centers, power;
    for (const auto& b : bin_power(out, s.alpha)) {
        if (b.count == 0) continue;
        centers.push_back(0.5 * (b.lo + b.hi));
        power.push_back(b.power_selective);
    }
    const double rho = centers.size() >= 2 ? spearman(centers, power) : 0.0;
    return {pw_sel - pw_hyun >= 0.10 && rho > 0.0,
            fmt("rejection rate selective %.3f vs Hyun %.3f (gap %.3f, need >= 0.10), Spearman over %zu bins %.3f, "
                "%d skipped",
                pw_sel, pw_hyun, pw_sel - pw_hyun, centers.size(), rho, skipped(out))};
}

// 7. Early stopping is conservative and close to the full p-value.
Verdict early_stopping(const NullRuns& runs) {
    int checked = 0, below = 0;
    double worst_deficit = 0.0;
    for (const auto* set : {&runs.oned, &runs.twod})
        for (const auto& o : *set)
            if (o.p_selective_early) worst_deficit = std::max(worst_deficit, o.p_selective - *o.p_selective_early);
    for (const auto* set : {&runs.oned, &runs.twod}) {
        for (const auto& o : *set) {
            if (o.skipped || !o.p_selective_early) continue;
            ++checked;
            // Both p-values are sums of tail masses; allow their rounding.
            if (*o.p_selective_early < o.p_selective - 1e-12) {
                ++below;
            }
        }
    }
    double max_diff = 0.0;
    int n200 = 0;
    for (const auto& o : runs.oned) {
        if (n200 == 200) break;
        if (o.skipped || !o.p_selective_early) continue;
        ++n200;
        max_diff = std::max(max_diff, std::abs(*o.p_selective_early - o.p_selective));
    }
    return {below == 0 && checked > 0 && n200 == 200 && max_diff < 0.01,
            fmt("p(delta) >= p on %d/%d instances (worst deficit %.1e); max |p(delta) - p| over %d null reps = %.2e",
                checked - below, checked, worst_deficit, n200, max_diff)};
}

// 8. Coverage of the selective interval among detected pairs.
Verdict ci_coverage() {
    Scenario s = scenario_preset("middle_mutation_1d");
    s.delta = 4.0;
    s.reps = 500;
    s.master_seed = 8008;
    s.with_ci = true;
    s.threads = worker_count();
    const auto out = run_reps(s);
    int detected = 0, covered = 0;
    for (const auto& o : out) {
        if (o.skipped || !o.detected || !o.ci_selective) continue;
        ++detected;
        covered += o.ci_selective->lower <= o.true_effect && o.true_effect <= o.ci_selective->upper;
    }
    const double cov = detected ? static_cast<double>(covered) / detected : 0.0;
    return {detected > 0 && cov >= 0.92 && cov <= 0.98,
            fmt("coverage %.3f over %d detected reps of %d (%d skipped)", cov, detected, static_cast<int>(out.size()),
                skipped(out))};
}

IntervalUnion random_support(std::mt19937_64& rng, double mu, double sigma, bool far) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<Interval> pieces;
    const int k = 1 + static_cast<int>(rng() % 4);
    if (far) {
        // Every point at least 10 sigma from mu, on one or both sides.
        const int side = static_cast<int>(rng() % 3);
        double at = mu + (10.0 + 30.0 * U(rng)) * sigma;
        double neg = mu - (10.0 + 30.0 * U(rng)) * sigma;
        for (int i = 0; i < k; ++i) {
            const double w = (0.05 + 3.0 * U(rng)) * sigma;
            const bool right = side == 0 || (side == 2 && i % 2 == 0);
            if (right) {
                pieces.push_back({at, i == k - 1 && U(rng) < 0.3 ? kInf : at + w});
                at += w + (0.1 + 2.0 * U(rng)) * sigma;
            } else {
                pieces.push_back({i == k - 1 && U(rng) < 0.3 ? -kInf : neg - w, neg});
                neg -= w + (0.1 + 2.0 * U(rng)) * sigma;
            }
        }
    } else {
        double at = mu - (6.0 * U(rng)) * sigma;
        for (int i = 0; i < k; ++i) {
            const double w = (0.05 + 3.0 * U(rng)) * sigma;
            pieces.push_back({at, at + w});
            at += w + (0.1 + 2.0 * U(rng)) * sigma;
        }
        if (U(rng) < 0.3) pieces.front().lo = -kInf;
        if (U(rng) < 0.3) pieces.back().hi = kInf;
    }
    return IntervalUnion(std::move(pieces));
}

// 9. Truncated-Gaussian survival and cdf against quadrature.
Verdict truncated_gaussian_numerics() {
    std::mt19937_64 rng(9009);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst_surv = 0.0, worst_cdf = 0.0;
    int far_cases = 0, errors = 0;
    std::string first_error;
    for (int i = 0; i < 1000; ++i) {
        const double mu = -5.0 + 10.0 * U(rng);
        const double sigma = 0.05 + 5.0 * U(rng);
        const bool far = i % 3 == 0;
        far_cases += far;
        const IntervalUnion S = random_support(rng, mu, sigma, far);
        const TruncatedGaussian tg{mu, sigma, S};
        // Query points inside the support or near its ends.
        const auto& iv = S.intervals()[rng() % S.size()];
        const double lo = std::isfinite(iv.lo) ? iv.lo : (std::isfinite(iv.hi) ? iv.hi : mu) - 5.0 * sigma;
        const double hi = std::isfinite(iv.hi) ? iv.hi : (std::isfinite(iv.lo) ? iv.lo : mu) + 5.0 * sigma;
        const double t = lo + (hi - lo) * U(rng);
        const oracle::TruncatedQuadrature q(S, mu, sigma);
        try {
            worst_surv = std::max(worst_surv, std::abs(two_sided_survival(std::abs(t), tg) - static_cast<double>(q.survival(t))));
            worst_cdf = std::max(worst_cdf, std::abs(cdf(t, tg) - static_cast<double>(q.cdf(t))));
        } catch (const std::exception& e) {
            if (errors++ == 0) first_error = fmt(", first: %s", e.what());
        }
    }
    return {worst_surv <= 1e-9 && worst_cdf <= 1e-9 && errors == 0,
            fmt("1000 cases (%d with support beyond 10 sigma): max error survival %.2e, cdf %.2e, %d exceptions",
                far_cases, worst_surv, worst_cdf, errors) +
                first_error};
}

// 10. Timing and halving counts on the 1D null runs.
Verdict timing(const NullRuns& runs) {
    const TimingSummary t = summarize_timing(runs.oned);
    int max_h = 0;
    for (const auto& o : runs.oned)
        if (!o.skipped) max_h = std::max(max_h, o.max_halvings);
    const int budget = SearchConfig{}.max_halvings;
    return {t.tests > 0 && t.mean_ms < 10000.0 && max_h <= budget,
            fmt("mean %.1f ms, max %.1f ms over %d tests; max halvings %d (%s 7, budget %d)", t.mean_ms, t.max_ms,
                t.tests, max_h, max_h <= 7 ? "within" : "above", budget)};
}

}  // namespace

// With arguments, only the listed criteria run (3 needs 2; 7 and 10 need 5).
int main(int argc, char** argv) {
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
    int failures = 0;
    auto report = [&failures, &only](int n, const std::function<Verdict()>& f) {
        if (!only.empty() && std::find(only.begin(), only.end(), n) == only.end()) return;
        Verdict v;
        try {
            v = f();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failures += !v.pass;
        std::cout << "Criterion " << n << ": " << (v.pass ? "PASS" : "FAIL") << " " << v.detail << std::endl;
    };

    std::vector<PolyInstance> poly;
    NullRuns nulls;
    report(1, path_correctness);
    report(2, [&] { return polyhedron_oracle(poly); });
    report(3, [&] { return phi_sharpness(poly); });
    report(4, truncation_oracle);
    report(5, [&] { return null_calibration(nulls); });
    report(6, power_dominance);
    report(7, [&] { return early_stopping(nulls); });
    report(8, ci_coverage);
    report(9, truncated_gaussian_numerics);
    report(10, [&] { return timing(nulls); });
    std::cout << (failures ? "ACCEPTANCE: " + std::to_string(failures) + " criteria failed" : std::string("ACCEPTANCE: all criteria passed"))
              << std::endl;
    return failures ? EXIT_FAILURE : EXIT_SUCCESS;
}
