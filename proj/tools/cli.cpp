#include "cli.hpp"

#include "gfsi/errors.hpp"
#include "gfsi/inference.hpp"
#include "gfsi/sim_lab.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace gfsi::cli {

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

struct Request {
    std::string graph;
    std::string data;
    bool log_transform = false;
    std::optional<int> k;
    std::optional<int> components;
    std::string sigma = "residual";
    double alpha = 0.05;
    std::string pairs = "all";
    std::string early = "off";
    std::string out;
    std::string format = "json";
    std::uint64_t seed = 1;
    int threads = 1;
};

struct SimRequest {
    std::string scenario = "middle_mutation_1d";
    std::string study = "reps";
    std::optional<double> delta;
    std::vector<double> deltas;
    std::vector<double> sigmas;
    double sigma = 1.0;
    int reps = 100;
    std::optional<int> k;
    std::optional<int> components;
    double alpha = 0.05;
    std::string early = "off";
    bool also_early = false;
    bool with_ci = false;
    bool timing = false;
    int bins = 7;
    std::string out;
    std::string summary;
    std::string format = "csv";
    std::uint64_t seed = 1;
    int threads = 1;
};

// Non-finite values are written as strings so the output stays valid JSON.
json num(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

json set_json(const IntervalUnion& S) {
    json a = json::array();
    for (const auto& iv : S.intervals()) a.push_back(json::array({num(iv.lo), num(iv.hi)}));
    return a;
}

json ci_json(const std::optional<CI>& ci) {
    if (!ci) return nullptr;
    return json::array({num(ci->lower), num(ci->upper)});
}

std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

std::string join_nodes(const NodeSet& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ' ';
        out += std::to_string(s[i]);
    }
    return out;
}

double parse_double(const std::string& text, const std::string& what) {
    double v = 0.0;
    const char* b = text.data();
    const char* e = b + text.size();
    while (b < e && std::isspace(static_cast<unsigned char>(*b))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(e[-1]))) --e;
    const auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e || b == e) throw InputError(what + ": cannot parse '" + text + "'");
    return v;
}

int parse_int(const std::string& text, const std::string& what) {
    int v = 0;
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size() || text.empty())
        throw InputError(what + ": cannot parse '" + text + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

Vector load_data(const std::string& path, bool log_transform) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open data file '" + path + "'");
    std::vector<double> v;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const double x = parse_double(line, path + ":" + std::to_string(line_no));
        if (!std::isfinite(x)) throw InputError(path + ":" + std::to_string(line_no) + ": value is not finite");
        if (log_transform) {
            if (!(x > 0.0)) throw InputError(path + ":" + std::to_string(line_no) + ": log transform needs positive data");
            v.push_back(std::log(x));
        } else {
            v.push_back(x);
        }
    }
    if (v.empty()) throw InputError("data file '" + path + "' has no observations");
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::shared_ptr<const Graph> load_graph(const Request& r, int n) {
    if (r.graph.empty()) return std::make_shared<const Graph>(chain_graph(n));
    Graph g = load_edge_list(r.graph, n);
    if (g.n_nodes() != n) throw InputError("graph and data sizes differ");
    return std::make_shared<const Graph>(std::move(g));
}

struct Fit {
    Vector y;
    std::shared_ptr<const Graph> g;
    DualPath path;
    int k = 0;  // steps whose boundary set defines the components
    Conditioning cond = Conditioning::FixedK;
    int K_or_L = 0;
};

Fit fit(const Request& r) {
    if (r.k.has_value() == r.components.has_value()) throw InputError("give exactly one of --k and --components");
    Fit f;
    f.y = load_data(r.data, r.log_transform);
    f.g = load_graph(r, static_cast<int>(f.y.size()));
    if (r.k) {
        if (*r.k < 1) throw InputError("--k must be positive");
        f.cond = Conditioning::FixedK;
        f.K_or_L = *r.k;
        f.path = run_dual_path(f.y, f.g, *r.k);
        f.k = f.path.n_steps();
        if (f.k < *r.k) throw InputError("the path reaches lambda = 0 after " + std::to_string(f.k) + " steps");
    } else {
        const int L = *r.components;
        if (L < 1) throw InputError("--components must be positive");
        f.cond = Conditioning::FixedL;
        f.K_or_L = L;
        f.path = run_dual_path(f.y, f.g, 10 * f.g->n_edges() + 10,
                               [L](const PathStep& s) { return static_cast<int>(s.components.size()) == L; });
        f.k = first_step_with_components(f.path, L);
        if (f.k < 0) throw InputError("the path never has " + std::to_string(L) + " components");
    }
    return f;
}

const Partition& fitted_partition(const Fit& f) { return cc_at_step(f.path, f.k); }

json fit_json(const Fit& f) {
    const PathStep& last = f.path.step(f.k);
    const Partition& cc = fitted_partition(f);
    const Vector beta = solution_at(f.path, last.lambda);
    json j;
    j["n_nodes"] = f.g->n_nodes();
    j["n_edges"] = f.g->n_edges();
    j["steps"] = f.k;
    j["n_components"] = cc.size();
    j["lambda"] = num(last.lambda);
    json knots = json::array();
    for (int k = 1; k <= f.k; ++k) knots.push_back(num(f.path.step(k).lambda));
    j["knots"] = knots;
    json boundary = json::array();
    for (std::size_t i = 0; i < last.boundary.size(); ++i) {
        const int e = last.boundary[i];
        const auto [u, v] = f.g->edge(e);
        boundary.push_back({{"edge", e}, {"u", u}, {"v", v}, {"sign", last.signs[i]}});
    }
    j["boundary"] = boundary;
    json comps = json::array();
    for (std::size_t b = 0; b < cc.size(); ++b) {
        const NodeSet& nodes = cc.block(b);
        double mean = 0.0, fitted = 0.0;
        for (int v : nodes) {
            mean += f.y(v);
            fitted += beta(v);
        }
        mean /= static_cast<double>(nodes.size());
        fitted /= static_cast<double>(nodes.size());
        comps.push_back({{"index", b}, {"size", nodes.size()}, {"mean", num(mean)}, {"fitted", num(fitted)}, {"nodes", nodes}});
    }
    j["components"] = comps;
    j["warnings"] = f.path.warnings();
    return j;
}

void write_fit_csv(const Fit& f, std::ostream& os) {
    const Partition& cc = fitted_partition(f);
    const Vector beta = solution_at(f.path, f.path.step(f.k).lambda);
    os << "component,size,mean,fitted,nodes\n";
    for (std::size_t b = 0; b < cc.size(); ++b) {
        const NodeSet& nodes = cc.block(b);
        double mean = 0.0, fitted = 0.0;
        for (int v : nodes) {
            mean += f.y(v);
            fitted += beta(v);
        }
        mean /= static_cast<double>(nodes.size());
        fitted /= static_cast<double>(nodes.size());
        os << b << ',' << nodes.size() << ',' << fmt(mean) << ',' << fmt(fitted) << ',' << join_nodes(nodes) << '\n';
    }
}

struct PairRequest {
    int i = 0, j = 0;
};

int component_of(const Partition& cc, NodeSet nodes, const std::string& text) {
    std::sort(nodes.begin(), nodes.end());
    for (std::size_t b = 0; b < cc.size(); ++b) {
        if (cc.block(b) == nodes) return static_cast<int>(b);
    }
    throw InputError("node list '" + text + "' is not an estimated component");
}

// "all", "i-j,k-l" by component index, or "nodes:0,1,2/5,6;7/8" by node lists.
std::vector<PairRequest> parse_pairs(const std::string& spec, const Partition& cc) {
    const int L = static_cast<int>(cc.size());
    std::vector<PairRequest> out;
    if (spec.empty() || spec == "all") {
        for (int i = 0; i < L; ++i)
            for (int j = i + 1; j < L; ++j) out.push_back({i, j});
    } else if (spec.rfind("nodes:", 0) == 0) {
        for (const auto& item : split(spec.substr(6), ';')) {
            const auto sides = split(item, '/');
            if (sides.size() != 2) throw InputError("pair '" + item + "' must be C1/C2");
            int idx[2];
            for (int s = 0; s < 2; ++s) {
                NodeSet nodes;
                for (const auto& tok : split(sides[static_cast<std::size_t>(s)], ','))
                    nodes.push_back(parse_int(tok, "--pairs"));
                idx[s] = component_of(cc, nodes, sides[static_cast<std::size_t>(s)]);
            }
            out.push_back({idx[0], idx[1]});
        }
    } else {
        for (const auto& item : split(spec, ',')) {
            const auto ends = split(item, '-');
            if (ends.size() != 2) throw InputError("pair '" + item + "' must be i-j");
            out.push_back({parse_int(ends[0], "--pairs"), parse_int(ends[1], "--pairs")});
        }
    }
    for (const auto& p : out) {
        if (p.i < 0 || p.i >= L || p.j < 0 || p.j >= L)
            throw InputError("component index out of range (there are " + std::to_string(L) + " components)");
        if (p.i == p.j) throw InputError("a pair needs two different components");
    }
    std::sort(out.begin(), out.end(), [](const PairRequest& a, const PairRequest& b) {
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    out.erase(std::unique(out.begin(), out.end(), [](const PairRequest& a, const PairRequest& b) {
                  return a.i == b.i && a.j == b.j;
              }),
              out.end());
    return out;
}

EarlyStop parse_early(const std::string& text) {
    if (text == "off") return {};
    if (text == "auto") return {EarlyStop::Mode::Auto, 0.0};
    const double d = parse_double(text, "--delta-early-stop");
    if (!(d >= 0.0)) throw InputError("--delta-early-stop must be nonnegative");
    return {EarlyStop::Mode::Fixed, d};
}

std::pair<double, std::string> resolve_sigma(const Request& r, const Fit& f) {
    const std::string& s = r.sigma;
    if (s == "residual" || s == "sample" || s == "mad") {
        const SigmaMethod m = parse_sigma_method(s);
        const Partition& cc = fitted_partition(f);
        return {estimate_sigma(f.y, m, &cc), s};
    }
    const double v = parse_double(s, "--sigma");
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError("--sigma must be positive");
    return {v, "known"};
}

template <typename T, typename F>
std::vector<T> parallel_map(int count, int threads, F&& fn) {
    std::vector<T> out(static_cast<std::size_t>(count));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < count; i = next++) {
            try {
                out[static_cast<std::size_t>(i)] = fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    };
    const int n_threads = std::max(1, std::min(threads, count));
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

json result_json(const PairRequest& p, const TestResult& r) {
    json j;
    j["pair"] = json::array({p.i, p.j});
    j["c1"] = r.contrast.c1;
    j["c2"] = r.contrast.c2;
    j["stat"] = num(r.contrast.stat);
    j["sigma"] = num(r.sigma);
    j["sigma_method"] = r.sigma_method;
    j["p_naive"] = num(r.p_naive);
    j["p_hyun"] = num(r.p_hyun);
    j["p_selective"] = num(r.p_selective);
    j["ci_naive"] = ci_json(r.ci_naive);
    j["ci_hyun"] = ci_json(r.ci_hyun);
    j["ci_selective"] = ci_json(r.ci_selective);
    j["hyun_set"] = set_json(r.hyun_set);
    j["selective_set"] = set_json(r.selective_set);
    j["n_intervals"] = r.n_intervals;
    j["n_instances"] = r.n_instances;
    j["halvings"] = r.total_halvings;
    j["max_halvings"] = r.max_halvings;
    j["runtime_ms"] = num(r.runtime_ms);
    j["early_stopped"] = r.early_stopped;
    j["delta"] = num(r.delta);
    j["notes"] = r.notes;
    return j;
}

void write_tests_csv(const std::vector<PairRequest>& pairs, const std::vector<TestResult>& rs, std::ostream& os) {
    os << "pair_i,pair_j,stat,sigma,sigma_method,p_naive,p_hyun,p_selective,ci_naive_lower,ci_naive_upper,"
          "ci_hyun_lower,ci_hyun_upper,ci_selective_lower,ci_selective_upper,n_intervals,n_instances,halvings,"
          "runtime_ms,early_stopped\n";
    auto ci = [&os](const std::optional<CI>& c) {
        if (c) {
            os << ',' << fmt(c->lower) << ',' << fmt(c->upper);
        } else {
            os << ",,";
        }
    };
    for (std::size_t i = 0; i < rs.size(); ++i) {
        const TestResult& r = rs[i];
        os << pairs[i].i << ',' << pairs[i].j << ',' << fmt(r.contrast.stat) << ',' << fmt(r.sigma) << ','
           << r.sigma_method << ',' << fmt(r.p_naive) << ',' << fmt(r.p_hyun) << ',' << fmt(r.p_selective);
        ci(r.ci_naive);
        ci(r.ci_hyun);
        ci(r.ci_selective);
        os << ',' << r.n_intervals << ',' << r.n_instances << ',' << r.total_halvings << ',' << fmt(r.runtime_ms)
           << ',' << (r.early_stopped ? 1 : 0) << '\n';
    }
}

class Output {
public:
    Output(const std::string& path, std::ostream& fallback) : fallback_(fallback) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw InputError("cannot write '" + path + "'");
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : fallback_; }

private:
    std::ofstream file_;
    std::ostream& fallback_;
};

void check_format(const std::string& f) {
    if (f != "json" && f != "csv") throw InputError("--format must be json or csv");
}

void cmd_fit(const Request& r, std::ostream& out) {
    check_format(r.format);
    const Fit f = fit(r);
    Output o(r.out, out);
    if (r.format == "csv") {
        write_fit_csv(f, o.stream());
    } else {
        o.stream() << fit_json(f).dump(2) << '\n';
    }
}

void cmd_test(const Request& r, std::ostream& out) {
    check_format(r.format);
    if (!(r.alpha > 0.0 && r.alpha < 1.0)) throw InputError("--alpha must lie in (0, 1)");
    if (r.threads < 1) throw InputError("--threads must be positive");
    const Fit f = fit(r);
    const Partition& cc = fitted_partition(f);
    const auto pairs = parse_pairs(r.pairs, cc);
    const auto [sigma, method] = resolve_sigma(r, f);

    TestOptions opts;
    opts.cond = f.cond;
    opts.K_or_L = f.K_or_L;
    opts.early = parse_early(r.early);
    opts.alpha = r.alpha;
    opts.with_ci = true;

    auto results = parallel_map<TestResult>(static_cast<int>(pairs.size()), r.threads, [&](int i) {
        const auto& p = pairs[static_cast<std::size_t>(i)];
        TestResult t = test_pair(f.y, f.g, cc.block(static_cast<std::size_t>(p.i)), cc.block(static_cast<std::size_t>(p.j)),
                                 sigma, opts);
        t.sigma_method = method;
        return t;
    });

    Output o(r.out, out);
    if (r.format == "csv") {
        write_tests_csv(pairs, results, o.stream());
        return;
    }
    json j;
    j["fit"] = fit_json(f);
    j["alpha"] = r.alpha;
    json recs = json::array();
    for (std::size_t i = 0; i < results.size(); ++i) recs.push_back(result_json(pairs[i], results[i]));
    j["tests"] = recs;
    o.stream() << j.dump(2) << '\n';
}

// ---- simulate ----

Scenario build_scenario(const SimRequest& r) {
    Scenario s = scenario_preset(r.scenario);
    if (r.k && r.components) throw InputError("give at most one of --k and --components");
    if (r.k) {
        s.cond = Conditioning::FixedK;
        s.K_or_L = *r.k;
    } else if (r.components) {
        s.cond = Conditioning::FixedL;
        s.K_or_L = *r.components;
    }
    if (s.K_or_L < 1) throw InputError("K or L must be positive");
    s.delta = r.delta.value_or(0.0);
    s.sigma = r.sigma;
    s.reps = r.reps;
    s.master_seed = r.seed;
    s.alpha = r.alpha;
    s.early = parse_early(r.early);
    s.also_early_stop = r.also_early;
    s.with_ci = r.with_ci;
    s.threads = r.threads;
    if (s.reps < 1) throw InputError("--reps must be positive");
    if (!(s.sigma > 0.0)) throw InputError("--sigma must be positive");
    if (!(s.alpha > 0.0 && s.alpha < 1.0)) throw InputError("--alpha must lie in (0, 1)");
    if (s.threads < 1) throw InputError("--threads must be positive");
    return s;
}

void write_reps_csv(const std::vector<RepOutcome>& outs, double alpha, bool timing, std::ostream& os) {
    os << "rep,method,skipped,c1_size,c2_size,true_effect,stat,sigma,p_value,reject,detected,ci_lower,ci_upper,"
          "n_intervals,n_instances,halvings,max_halvings";
    if (timing) os << ",runtime_ms";
    os << '\n';
    for (const auto& o : outs) {
        struct Row {
            const char* method;
            std::optional<double> p;
            const std::optional<CI>* ci;
        };
        const Row rows[] = {{"naive", o.p_naive, &o.ci_naive},
                            {"hyun", o.p_hyun, &o.ci_hyun},
                            {"selective", o.p_selective, &o.ci_selective},
                            {"selective_early", o.p_selective_early, nullptr}};
        for (const auto& row : rows) {
            if (!row.p && !o.skipped) continue;
            if (o.skipped && std::string(row.method) == "selective_early") continue;
            os << o.rep << ',' << row.method << ',' << (o.skipped ? 1 : 0) << ',';
            if (o.skipped) {
                os << ",,,,,,,,,,,,,";
                if (timing) os << ',';
                os << '\n';
                continue;
            }
            os << o.c1.size() << ',' << o.c2.size() << ',' << fmt(o.true_effect) << ',' << fmt(o.stat) << ','
               << fmt(o.sigma_used) << ',' << fmt(*row.p) << ',' << (*row.p <= alpha ? 1 : 0) << ','
               << (o.detected ? 1 : 0) << ',';
            if (row.ci && row.ci->has_value()) {
                os << fmt((*row.ci)->lower) << ',' << fmt((*row.ci)->upper);
            } else {
                os << ',';
            }
            os << ',' << o.n_intervals << ',' << o.n_instances << ',' << o.total_halvings << ',' << o.max_halvings;
            if (timing) os << ',' << fmt(o.runtime_ms);
            os << '\n';
        }
    }
}

json reps_summary(const Scenario& s, const std::vector<RepOutcome>& outs, bool timing) {
    std::vector<double> pn, ph, ps, pe;
    int skipped = 0, detected = 0, covered = 0, max_h = 0;
    for (const auto& o : outs) {
        if (o.skipped) {
            ++skipped;
            continue;
        }
        pn.push_back(o.p_naive);
        ph.push_back(o.p_hyun);
        ps.push_back(o.p_selective);
        if (o.p_selective_early) pe.push_back(*o.p_selective_early);
        max_h = std::max(max_h, o.max_halvings);
        if (o.detected) {
            ++detected;
            if (o.ci_selective && o.ci_selective->lower <= o.true_effect && o.true_effect <= o.ci_selective->upper)
                ++covered;
        }
    }
    auto method = [&](const std::vector<double>& p) {
        json m;
        if (p.empty()) return m;
        const auto rejections = std::count_if(p.begin(), p.end(), [&](double v) { return v <= s.alpha; });
        m["tests"] = p.size();
        m["rejection_rate"] = static_cast<double>(rejections) / static_cast<double>(p.size());
        m["ks_uniform"] = ks_uniform(p);
        return m;
    };
    json j;
    j["scenario"] = s.name;
    j["delta"] = s.delta;
    j["sigma"] = s.sigma;
    j["conditioning"] = s.cond == Conditioning::FixedK ? "K" : "L";
    j["K_or_L"] = s.K_or_L;
    j["reps"] = s.reps;
    j["seed"] = s.master_seed;
    j["alpha"] = s.alpha;
    j["tested"] = pn.size();
    j["skipped"] = skipped;
    j["detected"] = detected;
    if (s.with_ci && detected > 0) j["ci_selective_coverage_detected"] = static_cast<double>(covered) / detected;
    j["max_halvings"] = max_h;
    j["methods"] = {{"naive", method(pn)}, {"hyun", method(ph)}, {"selective", method(ps)}};
    if (!pe.empty()) j["methods"]["selective_early"] = method(pe);
    if (timing) {
        const TimingSummary t = summarize_timing(outs);
        j["timing"] = {{"tests", t.tests}, {"mean_ms", t.mean_ms}, {"max_ms", t.max_ms}, {"mean_instances", t.mean_instances}};
    }
    return j;
}

std::vector<double> grid_or(const std::vector<double>& v, std::optional<double> one, double fallback) {
    if (!v.empty()) return v;
    return {one.value_or(fallback)};
}

void cmd_simulate(const SimRequest& r, std::ostream& out) {
    check_format(r.format);
    const Scenario s = build_scenario(r);
    Output o(r.out, out);
    std::ostream& os = o.stream();
    json summary;

    if (r.study == "reps") {
        const auto outs = run_reps(s);
        summary = reps_summary(s, outs, r.timing);
        if (r.format == "csv") {
            write_reps_csv(outs, s.alpha, r.timing, os);
        } else {
            os << summary.dump(2) << '\n';
        }
    } else if (r.study == "power") {
        if (r.bins < 1) throw InputError("--bins must be positive");
        const auto cells = run_power_study(s, grid_or(r.deltas, r.delta, 1.0), grid_or(r.sigmas, {}, s.sigma));
        json rows = json::array();
        if (r.format == "csv")
            os << "delta,sigma,bin,bin_lo,bin_hi,count,power_naive,power_hyun,power_selective\n";
        for (const auto& c : cells) {
            const auto bins = bin_power(c.outcomes, s.alpha, r.bins);
            for (std::size_t b = 0; b < bins.size(); ++b) {
                const auto& x = bins[b];
                if (r.format == "csv") {
                    os << fmt(c.delta) << ',' << fmt(c.sigma) << ',' << b << ',' << fmt(x.lo) << ',' << fmt(x.hi) << ','
                       << x.count << ',' << fmt(x.power_naive) << ',' << fmt(x.power_hyun) << ','
                       << fmt(x.power_selective) << '\n';
                }
                rows.push_back({{"delta", c.delta}, {"sigma", c.sigma}, {"bin", b}, {"lo", x.lo}, {"hi", x.hi},
                                {"count", x.count}, {"power_naive", x.power_naive}, {"power_hyun", x.power_hyun},
                                {"power_selective", x.power_selective}});
            }
        }
        summary = {{"scenario", s.name}, {"bins", rows}};
        if (r.format == "json") os << summary.dump(2) << '\n';
    } else if (r.study == "detection") {
        const auto table = run_detection_study(s, grid_or(r.deltas, r.delta, 1.0), grid_or(r.sigmas, {}, s.sigma));
        json rows = json::array();
        if (r.format == "csv")
            os << "delta,sigma,tested,detected,detection_probability,conditional_power_hyun,"
                  "conditional_power_selective\n";
        for (const auto& x : table) {
            if (r.format == "csv") {
                os << fmt(x.delta) << ',' << fmt(x.sigma) << ',' << x.tested << ',' << x.detected << ','
                   << fmt(x.detection_probability) << ',' << fmt(x.conditional_power_hyun) << ','
                   << fmt(x.conditional_power_selective) << '\n';
            }
            rows.push_back({{"delta", x.delta}, {"sigma", x.sigma}, {"tested", x.tested}, {"detected", x.detected},
                            {"detection_probability", x.detection_probability},
                            {"conditional_power_hyun", x.conditional_power_hyun},
                            {"conditional_power_selective", x.conditional_power_selective}});
        }
        summary = {{"scenario", s.name}, {"rows", rows}};
        if (r.format == "json") os << summary.dump(2) << '\n';
    } else if (r.study == "variance") {
        const auto rows = run_variance_study(s);
        json arr = json::array();
        if (r.format == "csv") os << "rep,method,sigma_hat,p_naive,p_hyun,p_selective\n";
        for (const auto& x : rows) {
            if (r.format == "csv") {
                os << x.rep << ',' << x.method << ',' << fmt(x.sigma_hat) << ',' << fmt(x.p_naive) << ','
                   << fmt(x.p_hyun) << ',' << fmt(x.p_selective) << '\n';
            }
            arr.push_back({{"rep", x.rep}, {"method", x.method}, {"sigma_hat", x.sigma_hat}, {"p_naive", x.p_naive},
                           {"p_hyun", x.p_hyun}, {"p_selective", x.p_selective}});
        }
        summary = {{"scenario", s.name}, {"rows", arr}};
        if (r.format == "json") os << summary.dump(2) << '\n';
    } else if (r.study == "halving") {
        const HalvingSummary h = run_halving_study(s);
        if (r.format == "csv") {
            os << "max_halvings,count\n";
            for (const auto& [k, c] : h.histogram) os << k << ',' << c << '\n';
        }
        json hist = json::object();
        for (const auto& [k, c] : h.histogram) hist[std::to_string(k)] = c;
        summary = {{"scenario", s.name}, {"tests", h.tests}, {"max_halvings", h.max_halvings}, {"histogram", hist}};
        if (r.format == "json") os << summary.dump(2) << '\n';
    } else if (r.study == "timing") {
        const TimingSummary t = run_timing_study(s);
        if (r.format == "csv") {
            os << "tests,mean_ms,max_ms,mean_instances\n"
               << t.tests << ',' << fmt(t.mean_ms) << ',' << fmt(t.max_ms) << ',' << fmt(t.mean_instances) << '\n';
        }
        summary = {{"scenario", s.name}, {"tests", t.tests}, {"mean_ms", t.mean_ms}, {"max_ms", t.max_ms},
                   {"mean_instances", t.mean_instances}};
        if (r.format == "json") os << summary.dump(2) << '\n';
    } else {
        throw InputError("unknown study '" + r.study + "'");
    }

    if (!r.summary.empty()) {
        std::ofstream f(r.summary);
        if (!f) throw InputError("cannot write '" + r.summary + "'");
        f << summary.dump(2) << '\n';
    }
}

void add_analysis_options(CLI::App* sub, Request& r) {
    sub->add_option("--graph", r.graph, "Edge list file (\"u,v\" per line); a chain when omitted");
    sub->add_option("--data", r.data, "Observations, one per line, aligned to node ids")->required();
    sub->add_flag("--log-transform", r.log_transform, "Take logs of the data first");
    auto* k = sub->add_option("--k", r.k, "Number of dual path steps");
    auto* c = sub->add_option("--components", r.components, "Number of fitted components");
    k->excludes(c);
    sub->add_option("--out", r.out, "Output file (default stdout)");
    sub->add_option("--format", r.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Selective inference for the graph fused lasso"};
    app.require_subcommand(1);

    Request fit_req;
    auto* fit_cmd = app.add_subcommand("fit", "Fit the dual path and list the components");
    add_analysis_options(fit_cmd, fit_req);

    Request test_req;
    auto* test_cmd = app.add_subcommand("test", "Test pairs of fitted components");
    add_analysis_options(test_cmd, test_req);
    test_cmd->add_option("--sigma", test_req.sigma, "Noise level: a number, residual, sample or mad");
    test_cmd->add_option("--alpha", test_req.alpha, "Level for the confidence intervals");
    test_cmd->add_option("--pairs", test_req.pairs, "all, i-j[,k-l...] or nodes:C1/C2[;C1/C2...]");
    test_cmd->add_option("--delta-early-stop", test_req.early, "off, auto or a nonnegative margin");
    test_cmd->add_option("--seed", test_req.seed, "Accepted for a uniform interface; tests are deterministic");
    test_cmd->add_option("--threads", test_req.threads, "Worker threads for the pair tests");

    SimRequest sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Run a simulation study");
    sim_cmd->add_option("--scenario", sim.scenario, "middle_mutation_1d, three_segment_2d or alternating_1d");
    sim_cmd->add_option("--study", sim.study, "reps, power, detection, variance, halving or timing");
    sim_cmd->add_option("--delta", sim.delta, "Signal size");
    sim_cmd->add_option("--deltas", sim.deltas, "Signal sizes for power and detection studies")->delimiter(',');
    sim_cmd->add_option("--sigmas", sim.sigmas, "Noise levels for power and detection studies")->delimiter(',');
    sim_cmd->add_option("--sigma", sim.sigma, "Noise standard deviation");
    sim_cmd->add_option("--reps", sim.reps, "Replicates per cell");
    auto* sk = sim_cmd->add_option("--k", sim.k, "Number of dual path steps");
    auto* sc = sim_cmd->add_option("--components", sim.components, "Number of fitted components");
    sk->excludes(sc);
    sim_cmd->add_option("--alpha", sim.alpha, "Test level");
    sim_cmd->add_option("--delta-early-stop", sim.early, "off, auto or a nonnegative margin");
    sim_cmd->add_flag("--also-early-stop", sim.also_early, "Also report the auto early-stopped p-value");
    sim_cmd->add_flag("--ci", sim.with_ci, "Compute confidence intervals");
    sim_cmd->add_flag("--timing", sim.timing, "Include wall-clock columns (not reproducible)");
    sim_cmd->add_option("--bins", sim.bins, "Bins of |nu^T beta| for the power study");
    sim_cmd->add_option("--out", sim.out, "Output file (default stdout)");
    sim_cmd->add_option("--summary", sim.summary, "Also write a JSON summary here");
    sim_cmd->add_option("--format", sim.format, "csv or json")->check(CLI::IsMember({"json", "csv"}));
    sim_cmd->add_option("--seed", sim.seed, "Master seed");
    sim_cmd->add_option("--threads", sim.threads, "Worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }

    try {
        if (*fit_cmd) cmd_fit(fit_req, out);
        if (*test_cmd) cmd_test(test_req, out);
        if (*sim_cmd) cmd_simulate(sim, out);
    } catch (const InputError& e) {
        err << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitOk;
}

}  // namespace gfsi::cli
