#include "gfsi/sim_lab.hpp"

#include "gfsi/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

namespace gfsi {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// 1 = mean delta (21 nodes), 2 = mean 0 (22 nodes), 3 = mean -delta (21 nodes).
constexpr const char* kMask[8] = {
    "11111122",
    "11111122",
    "11111222",
    "11112222",
    "33332222",
    "33333222",
    "33333322",
    "33333322",
};

void validate(const Scenario& s) {
    if (s.reps < 1) throw InputError("scenario: reps must be positive");
    if (!(s.sigma > 0.0)) throw InputError("scenario: sigma must be positive");
    if (s.K_or_L < 1) throw InputError("scenario: K or L must be positive");
    if (s.threads < 1) throw InputError("scenario: threads must be positive");
}

/// Everything a replicate needs before the tests run.
struct Prepared {
    std::shared_ptr<const Graph> graph;
    Generated data;
    Partition fitted;
    NodeSet c1, c2;
    bool usable = false;
};

Prepared prepare(const Scenario& s, int rep) {
    Prepared p;
    p.graph = scenario_graph(s);
    const std::uint64_t seed = rep_seed(s.master_seed, rep);
    p.data = generate(s, seed);

    if (s.cond == Conditioning::FixedK) {
        const DualPath path = run_dual_path(p.data.y, p.graph, s.K_or_L);
        if (path.n_steps() == 0) return p;
        p.fitted = path.steps().back().components;
    } else {
        const int L = s.K_or_L;
        const DualPath path = run_dual_path(p.data.y, p.graph, 10 * p.graph->n_edges() + 10,
                                            [L](const PathStep& st) { return static_cast<int>(st.components.size()) == L; });
        const int k = first_step_with_components(path, L);
        if (k < 0) return p;
        p.fitted = cc_at_step(path, k);
    }
    const auto L = static_cast<int>(p.fitted.size());
    if (L < 2) return p;

    std::mt19937_64 pick(splitmix64(seed ^ 0xA5A5A5A5A5A5A5A5ULL));
    const int i = std::uniform_int_distribution<int>(0, L - 1)(pick);
    int j = std::uniform_int_distribution<int>(0, L - 2)(pick);
    if (j >= i) ++j;
    p.c1 = p.fitted.block(static_cast<std::size_t>(std::min(i, j)));
    p.c2 = p.fitted.block(static_cast<std::size_t>(std::max(i, j)));
    p.usable = true;
    return p;
}

TestOptions options_for(const Scenario& s) {
    TestOptions o;
    o.cond = s.cond;
    o.K_or_L = s.K_or_L;
    o.early = s.early;
    o.alpha = s.alpha;
    o.with_ci = s.with_ci;
    return o;
}

template <class T, class F>
std::vector<T> parallel_map(int count, int threads, F&& fn) {
    std::vector<T> out(static_cast<std::size_t>(count));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < count; i = next++) out[static_cast<std::size_t>(i)] = fn(i);
    };
    const int n_threads = std::min(threads, count);
    if (n_threads <= 1) {
        worker();
        return out;
    }
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return out;
}

std::vector<double> average_ranks(const std::vector<double>& x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> rank(x.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
        i = j + 1;
    }
    return rank;
}

}  // namespace

Scenario scenario_preset(const std::string& name) {
    Scenario s;
    s.name = name;
    if (name == "middle_mutation_1d") {
        s.kind = ScenarioKind::MiddleMutation1D;
        s.n = 200;
        s.K_or_L = 2;
    } else if (name == "three_segment_2d") {
        s.kind = ScenarioKind::ThreeSegment2D;
        s.rows = 8;
        s.cols = 8;
        s.n = 64;
        s.K_or_L = 15;
    } else if (name == "alternating_1d") {
        s.kind = ScenarioKind::Alternating1D;
        s.n = 500;
        s.K_or_L = 10;
        for (int i = 1; i <= 10; ++i) s.changepoints.push_back(static_cast<int>(std::lround(i * 500.0 / 11.0)));
    } else {
        throw InputError("unknown scenario '" + name + "'");
    }
    return s;
}

const std::vector<int>& three_segment_mask() {
    static const std::vector<int> mask = [] {
        std::vector<int> m;
        for (const char* row : kMask) {
            for (int c = 0; c < 8; ++c) m.push_back(row[c] - '1');
        }
        return m;
    }();
    return mask;
}

std::shared_ptr<const Graph> scenario_graph(const Scenario& s) {
    if (s.kind == ScenarioKind::ThreeSegment2D) {
        if (s.rows != 8 || s.cols != 8) throw InputError("three_segment_2d uses an 8x8 grid");
        return std::make_shared<const Graph>(grid_graph(8, 8));
    }
    return std::make_shared<const Graph>(chain_graph(s.n));
}

std::uint64_t rep_seed(std::uint64_t master_seed, int rep) {
    return splitmix64(splitmix64(master_seed) + static_cast<std::uint64_t>(rep));
}

Generated generate(const Scenario& s, std::uint64_t seed) {
    validate(s);
    const auto g = scenario_graph(s);
    const int n = g->n_nodes();
    Generated out;
    out.beta = Vector::Zero(n);
    switch (s.kind) {
        case ScenarioKind::MiddleMutation1D:
            if (n < 140) throw InputError("middle_mutation_1d needs n >= 140");
            out.beta.segment(100, 40).setConstant(s.delta);
            break;
        case ScenarioKind::ThreeSegment2D: {
            const auto& mask = three_segment_mask();
            const double level[3] = {s.delta, 0.0, -s.delta};
            for (int j = 0; j < n; ++j) out.beta(j) = level[mask[static_cast<std::size_t>(j)]];
            break;
        }
        case ScenarioKind::Alternating1D: {
            std::vector<int> cps = s.changepoints;
            std::sort(cps.begin(), cps.end());
            int segment = 0;
            std::size_t next = 0;
            for (int j = 0; j < n; ++j) {
                while (next < cps.size() && cps[next] == j) {
                    ++segment;
                    ++next;
                }
                out.beta(j) = (segment % 2 == 1) ? s.delta : 0.0;
            }
            break;
        }
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, s.sigma);
    out.y.resize(n);
    for (int j = 0; j < n; ++j) out.y(j) = out.beta(j) + noise(rng);

    std::vector<int> cut;
    for (int e = 0; e < g->n_edges(); ++e) {
        const auto [u, v] = g->edge(e);
        if (out.beta(u) != out.beta(v)) cut.push_back(e);
    }
    out.truth = components_after_removal(*g, cut);
    return out;
}

RepOutcome run_rep(const Scenario& s, int rep, std::optional<double> sigma_override) {
    RepOutcome o;
    o.rep = rep;
    try {
        const Prepared p = prepare(s, rep);
        if (!p.usable) {
            o.skipped = true;
            o.error = "fewer than two estimated components";
            return o;
        }
        o.c1 = p.c1;
        o.c2 = p.c2;
        o.sigma_used = sigma_override.value_or(s.sigma);
        const TestResult r = test_pair(p.data.y, p.graph, p.c1, p.c2, o.sigma_used, options_for(s));
        o.true_effect = r.contrast.nu.dot(p.data.beta);
        o.stat = r.contrast.stat;
        o.p_naive = r.p_naive;
        o.p_hyun = r.p_hyun;
        o.p_selective = r.p_selective;
        o.ci_naive = r.ci_naive;
        o.ci_hyun = r.ci_hyun;
        o.ci_selective = r.ci_selective;
        o.detected = p.data.truth.has_block(p.c1) && p.data.truth.has_block(p.c2);
        o.n_intervals = r.n_intervals;
        o.n_instances = r.n_instances;
        o.total_halvings = r.total_halvings;
        o.max_halvings = r.max_halvings;
        o.runtime_ms = r.runtime_ms;
        o.early_stopped = r.early_stopped;
        if (s.also_early_stop) {
            const TestResult es = p_selective(p.data.y, p.graph, s.cond, s.K_or_L, p.c1, p.c2, o.sigma_used, {},
                                              {EarlyStop::Mode::Auto, 0.0});
            o.p_selective_early = es.p_selective;
        }
    } catch (const std::exception& e) {
        o.skipped = true;
        o.error = e.what();
    }
    return o;
}

std::vector<RepOutcome> run_reps(const Scenario& s) {
    validate(s);
    return parallel_map<RepOutcome>(s.reps, s.threads, [&s](int rep) { return run_rep(s, rep); });
}

std::vector<RepOutcome> run_null_study(const Scenario& s) {
    if (s.delta != 0.0) throw InputError("null study needs delta = 0");
    return run_reps(s);
}

std::vector<PowerCell> run_power_study(const Scenario& base, const std::vector<double>& deltas,
                                       const std::vector<double>& sigmas) {
    std::vector<PowerCell> cells;
    for (double sg : sigmas) {
        for (double d : deltas) {
            Scenario s = base;
            s.delta = d;
            s.sigma = sg;
            cells.push_back({d, sg, run_reps(s)});
        }
    }
    return cells;
}

std::vector<PowerBin> bin_power(const std::vector<RepOutcome>& outcomes, double alpha, int n_bins) {
    if (n_bins < 1) throw InputError("bin_power: need at least one bin");
    std::vector<const RepOutcome*> used;
    for (const auto& o : outcomes) {
        if (!o.skipped) used.push_back(&o);
    }
    std::vector<PowerBin> bins(static_cast<std::size_t>(n_bins));
    if (used.empty()) return bins;
    double lo = std::abs(used.front()->true_effect);
    double hi = lo;
    for (const auto* o : used) {
        lo = std::min(lo, std::abs(o->true_effect));
        hi = std::max(hi, std::abs(o->true_effect));
    }
    const double width = (hi - lo) / n_bins;
    for (int b = 0; b < n_bins; ++b) {
        bins[b].lo = lo + b * width;
        bins[b].hi = lo + (b + 1) * width;
    }
    for (const auto* o : used) {
        int b = width > 0.0 ? static_cast<int>((std::abs(o->true_effect) - lo) / width) : 0;
        b = std::clamp(b, 0, n_bins - 1);
        auto& bin = bins[b];
        ++bin.count;
        bin.power_naive += o->p_naive <= alpha;
        bin.power_hyun += o->p_hyun <= alpha;
        bin.power_selective += o->p_selective <= alpha;
    }
    for (auto& bin : bins) {
        if (bin.count == 0) continue;
        bin.power_naive /= bin.count;
        bin.power_hyun /= bin.count;
        bin.power_selective /= bin.count;
    }
    return bins;
}

std::vector<DetectionRow> run_detection_study(const Scenario& base, const std::vector<double>& deltas,
                                              const std::vector<double>& sigmas) {
    std::vector<DetectionRow> rows;
    for (const auto& cell : run_power_study(base, deltas, sigmas)) {
        DetectionRow r;
        r.delta = cell.delta;
        r.sigma = cell.sigma;
        int rej_h = 0;
        int rej_s = 0;
        for (const auto& o : cell.outcomes) {
            if (o.skipped) continue;
            ++r.tested;
            if (!o.detected) continue;
            ++r.detected;
            rej_h += o.p_hyun <= base.alpha;
            rej_s += o.p_selective <= base.alpha;
        }
        r.detection_probability = r.tested ? static_cast<double>(r.detected) / r.tested : 0.0;
        r.conditional_power_hyun = r.detected ? static_cast<double>(rej_h) / r.detected : 0.0;
        r.conditional_power_selective = r.detected ? static_cast<double>(rej_s) / r.detected : 0.0;
        rows.push_back(r);
    }
    return rows;
}

std::vector<VarianceRow> run_variance_study(const Scenario& s) {
    validate(s);
    const bool chain = s.kind != ScenarioKind::ThreeSegment2D;
    auto per_rep = parallel_map<std::vector<VarianceRow>>(s.reps, s.threads, [&](int rep) {
        std::vector<VarianceRow> rows;
        Prepared p;
        try {
            p = prepare(s, rep);
        } catch (const std::exception&) {
            return rows;
        }
        if (!p.usable) return rows;
        std::vector<std::pair<std::string, double>> sigmas = {{"known", s.sigma}};
        try {
            sigmas.emplace_back("residual", estimate_sigma(p.data.y, SigmaMethod::Residual, &p.fitted));
            sigmas.emplace_back("sample", estimate_sigma(p.data.y, SigmaMethod::Sample));
            if (chain) sigmas.emplace_back("mad", estimate_sigma(p.data.y, SigmaMethod::Mad));
        } catch (const InputError&) {
        }
        TestOptions opts = options_for(s);
        opts.with_ci = false;
        for (const auto& [name, sg] : sigmas) {
            if (!(sg > 0.0)) continue;
            try {
                const TestResult r = test_pair(p.data.y, p.graph, p.c1, p.c2, sg, opts);
                rows.push_back({rep, name, sg, r.p_naive, r.p_hyun, r.p_selective});
            } catch (const NumericalError&) {
            }
        }
        return rows;
    });
    std::vector<VarianceRow> out;
    for (auto& v : per_rep) out.insert(out.end(), v.begin(), v.end());
    return out;
}

HalvingSummary run_halving_study(const Scenario& s) {
    HalvingSummary h;
    for (const auto& o : run_reps(s)) {
        if (o.skipped) continue;
        ++h.tests;
        ++h.histogram[o.max_halvings];
        h.max_halvings = std::max(h.max_halvings, o.max_halvings);
    }
    return h;
}

TimingSummary summarize_timing(const std::vector<RepOutcome>& outcomes) {
    TimingSummary t;
    for (const auto& o : outcomes) {
        if (o.skipped) continue;
        ++t.tests;
        t.mean_ms += o.runtime_ms;
        t.max_ms = std::max(t.max_ms, o.runtime_ms);
        t.mean_instances += o.n_instances;
    }
    if (t.tests) {
        t.mean_ms /= t.tests;
        t.mean_instances /= t.tests;
    }
    return t;
}

TimingSummary run_timing_study(const Scenario& s) { return summarize_timing(run_reps(s)); }

double ks_uniform(std::vector<double> p) {
    if (p.empty()) throw InputError("ks_uniform: empty sample");
    std::sort(p.begin(), p.end());
    const double n = static_cast<double>(p.size());
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double u = std::clamp(p[i], 0.0, 1.0);
        d = std::max({d, (i + 1) / n - u, u - i / n});
    }
    return d;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InputError("spearman: need two equal-length samples");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace gfsi
