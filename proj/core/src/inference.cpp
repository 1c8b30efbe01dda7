#include "gfsi/inference.hpp"

#include "gfsi/errors.hpp"
#include "gfsi/polyhedron.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

namespace gfsi {

namespace {

constexpr double kInvPhi34 = 0.674489750196081743;  // Phi^{-1}(3/4)

double median(std::vector<double> v) {
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

NodeSet sorted_unique(const NodeSet& s) {
    NodeSet out = s;
    std::sort(out.begin(), out.end());
    if (std::adjacent_find(out.begin(), out.end()) != out.end()) throw InputError("contrast: repeated node");
    return out;
}

void require_sigma(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InputError("sigma must be positive and finite");
}

DualPath path_for(const Vector& y, const std::shared_ptr<const Graph>& g, Conditioning cond, int K_or_L, int& k_used) {
    if (cond == Conditioning::FixedK) {
        DualPath path = run_dual_path(y, g, K_or_L);
        k_used = path.n_steps();
        return path;
    }
    const int cap = 10 * g->n_edges() + 10;
    DualPath path =
        run_dual_path(y, g, cap, [K_or_L](const PathStep& s) { return static_cast<int>(s.components.size()) == K_or_L; });
    k_used = first_step_with_components(path, K_or_L);
    if (k_used < 0) throw InputError("the path never has the requested number of components");
    return path;
}

}  // namespace

Contrast make_contrast(const NodeSet& C1, const NodeSet& C2, int n) {
    if (C1.empty() || C2.empty()) throw InputError("contrast: components must be nonempty");
    Contrast c;
    c.c1 = sorted_unique(C1);
    c.c2 = sorted_unique(C2);
    c.nu = Vector::Zero(n);
    for (int j : c.c1) {
        if (j < 0 || j >= n) throw InputError("contrast: node out of range");
        c.nu(j) = 1.0 / static_cast<double>(c.c1.size());
    }
    for (int j : c.c2) {
        if (j < 0 || j >= n) throw InputError("contrast: node out of range");
        if (c.nu(j) != 0.0) throw InputError("contrast: components overlap");
        c.nu(j) = -1.0 / static_cast<double>(c.c2.size());
    }
    c.nu_norm = c.nu.norm();
    return c;
}

Contrast make_contrast(const NodeSet& C1, const NodeSet& C2, const Vector& y) {
    Contrast c = make_contrast(C1, C2, static_cast<int>(y.size()));
    c.stat = c.nu.dot(y);
    return c;
}

double p_naive(const Contrast& c, double sigma) {
    require_sigma(sigma);
    return std::erfc(std::abs(c.stat) / (sigma * c.nu_norm) / std::numbers::sqrt2);
}

HyunResult p_hyun(const Vector& y, const DualPath& path, const Contrast& c, double sigma, int K) {
    require_sigma(sigma);
    const Polyhedron P = build_polyhedron(path, K);
    const PhiInterval iv = phi_interval(P, y, c.nu);
    HyunResult out;
    out.interval = {iv.lo, iv.hi};
    out.p = two_sided_survival(std::abs(c.stat), {0.0, sigma * c.nu_norm, IntervalUnion({out.interval})});
    return out;
}

double recommended_delta(const Contrast& c, double sigma) {
    return std::max(0.0, 10.0 * sigma * c.nu_norm - std::abs(c.stat));
}

TestResult p_selective(const Vector& y, std::shared_ptr<const Graph> g, Conditioning cond, int K_or_L,
                       const NodeSet& C1, const NodeSet& C2, double sigma, const SearchConfig& cfg, EarlyStop early) {
    require_sigma(sigma);
    const auto start = std::chrono::steady_clock::now();
    TestResult r;
    r.contrast = make_contrast(C1, C2, y);
    r.sigma = sigma;
    r.p_naive = p_naive(r.contrast, sigma);

    SearchConfig search = cfg;
    switch (early.mode) {
        case EarlyStop::Mode::Off: search.early_stop_delta.reset(); break;
        case EarlyStop::Mode::Auto: search.early_stop_delta = recommended_delta(r.contrast, sigma); break;
        case EarlyStop::Mode::Fixed: search.early_stop_delta = early.delta; break;
    }
    r.delta = search.early_stop_delta.value_or(0.0);

    SearchResult sr = cond == Conditioning::FixedK
                          ? compute_S(y, g, K_or_L, r.contrast.c1, r.contrast.c2, r.contrast.nu, search)
                          : compute_S_fixed_L(y, g, K_or_L, r.contrast.c1, r.contrast.c2, r.contrast.nu, search);
    r.selective_set = std::move(sr.S);
    r.p_selective =
        two_sided_survival(std::abs(r.contrast.stat), {0.0, sigma * r.contrast.nu_norm, r.selective_set});
    r.n_intervals = static_cast<int>(r.selective_set.size());
    r.n_instances = sr.trace.n_instances;
    r.total_halvings = sr.trace.total_halvings;
    r.max_halvings = sr.trace.max_halvings;
    r.early_stopped = sr.trace.early_stopped;
    r.notes = std::move(sr.trace.notes);
    r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

CI selective_ci(const IntervalUnion& S, double stat, double sigma_total, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
    CI ci;
    ci.lower = solve_mean(stat, 1.0 - alpha / 2.0, sigma_total, S);
    ci.upper = solve_mean(stat, alpha / 2.0, sigma_total, S);
    return ci;
}

TestResult test_pair(const Vector& y, std::shared_ptr<const Graph> g, const NodeSet& C1, const NodeSet& C2,
                     double sigma, const TestOptions& opts) {
    TestResult r = p_selective(y, g, opts.cond, opts.K_or_L, C1, C2, sigma, opts.search, opts.early);
    int k_used = 0;
    const DualPath path = path_for(y, g, opts.cond, opts.K_or_L, k_used);
    const HyunResult h = p_hyun(y, path, r.contrast, sigma, k_used);
    r.p_hyun = h.p;
    r.hyun_set = IntervalUnion({h.interval});
    if (opts.with_ci) {
        const double st = sigma * r.contrast.nu_norm;
        r.ci_naive = selective_ci(IntervalUnion::real_line(), r.contrast.stat, st, opts.alpha);
        r.ci_hyun = selective_ci(r.hyun_set, r.contrast.stat, st, opts.alpha);
        r.ci_selective = selective_ci(r.selective_set, r.contrast.stat, st, opts.alpha);
    }
    return r;
}

double estimate_sigma(const Vector& y, SigmaMethod method, const Partition* partition) {
    const auto n = y.size();
    switch (method) {
        case SigmaMethod::Residual: {
            if (!partition) throw InputError("residual sigma estimate needs a partition");
            if (partition->n_nodes() != n) throw InputError("partition does not match the data");
            const auto L = static_cast<Eigen::Index>(partition->size());
            if (n <= L) throw InputError("residual sigma estimate needs more observations than components");
            double rss = 0.0;
            for (const auto& block : partition->blocks()) {
                double mean = 0.0;
                for (int j : block) mean += y(j);
                mean /= static_cast<double>(block.size());
                for (int j : block) rss += (y(j) - mean) * (y(j) - mean);
            }
            return std::sqrt(rss / static_cast<double>(n - L));
        }
        case SigmaMethod::Sample: {
            if (n < 2) throw InputError("sample sigma estimate needs at least two observations");
            const double mean = y.mean();
            return std::sqrt((y.array() - mean).square().sum() / static_cast<double>(n - 1));
        }
        case SigmaMethod::Mad: {
            if (n < 2) throw InputError("MAD sigma estimate needs at least two observations");
            std::vector<double> z(static_cast<std::size_t>(n - 1));
            for (Eigen::Index i = 1; i < n; ++i) z[static_cast<std::size_t>(i - 1)] = y(i) - y(i - 1);
            const double mz = median(z);
            for (double& v : z) v = std::abs(v - mz);
            return median(z) / (std::numbers::sqrt2 * kInvPhi34);
        }
    }
    throw InputError("unknown sigma method");
}

SigmaMethod parse_sigma_method(const std::string& name) {
    if (name == "residual") return SigmaMethod::Residual;
    if (name == "sample") return SigmaMethod::Sample;
    if (name == "mad") return SigmaMethod::Mad;
    throw InputError("unknown sigma estimator '" + name + "'");
}

std::string to_string(SigmaMethod m) {
    switch (m) {
        case SigmaMethod::Residual: return "residual";
        case SigmaMethod::Sample: return "sample";
        case SigmaMethod::Mad: return "mad";
    }
    return "unknown";
}

}  // namespace gfsi
