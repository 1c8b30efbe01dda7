#include "gfsi/line_search.hpp"

#include "gfsi/errors.hpp"
#include "gfsi/polyhedron.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gfsi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Probe {
    PhiInterval range;
    bool member = false;
    int steps_used = 0;
    bool terminated_early = false;
    bool components_missing = false;
    bool near_tie = false;
    PathSignature signature;
};

class Sweep {
public:
    Sweep(const Vector& y, std::shared_ptr<const Graph> g, int K_or_L, bool fixed_L, const NodeSet& C1,
          const NodeSet& C2, const Vector& nu, const SearchConfig& cfg)
        : y_(y), g_(std::move(g)), target_(K_or_L), fixed_L_(fixed_L), c1_(C1), c2_(C2), nu_(nu), cfg_(cfg) {
        if (!g_) throw InputError("line search: null graph");
        if (y.size() != g_->n_nodes() || nu.size() != y.size()) throw InputError("line search: dimension mismatch");
        if (K_or_L < 1) throw InputError("line search: K or L must be positive");
        if (C1.empty() || C2.empty()) throw InputError("line search: components must be nonempty");
        if (!(cfg.eta0 > 0.0) || !(cfg.endpoint_tol > 0.0)) throw InputError("line search: eta0 and endpoint_tol must be positive");
        if (cfg.early_stop_delta && !(*cfg.early_stop_delta >= 0.0)) throw InputError("line search: delta must be nonnegative");
        nu_sq_ = nu.squaredNorm();
        if (!(nu_sq_ > 0.0)) throw InputError("line search: contrast is zero");
        stat_ = nu.dot(y);
    }

    Probe evaluate(double phi) {
        ++trace_.n_instances;
        const Vector yp = y_ + ((phi - stat_) / nu_sq_) * nu_;
        Probe out;
        DualPath path = fixed_L_ ? run_to_L(yp) : run_dual_path(yp, g_, target_);
        out.terminated_early = path.terminated_early();
        out.near_tie = !path.warnings().empty();
        if (path.n_steps() == 0) throw NumericalError("line search: probe data has no fused lasso path");

        int k = path.n_steps();
        if (fixed_L_) {
            const int kstar = first_step_with_components(path, target_);
            if (kstar > 0) {
                k = kstar;
            } else {
                out.components_missing = true;
            }
        } else if (path.n_steps() < target_) {
            note("probe at phi=" + fmt(phi) + " reached lambda=0 after " + std::to_string(path.n_steps()) + " steps");
        }
        out.steps_used = k;
        const Polyhedron P = build_polyhedron(path, k);
        out.range = phi_interval(P.apply(yp), P.apply(nu_), phi, nu_sq_);
        if (!out.components_missing) {
            const Partition& cc = cc_at_step(path, k);
            out.member = cc.has_block(c1_) && cc.has_block(c2_);
        }
        PathSignature sig = path.signature();
        sig.resize(static_cast<std::size_t>(k));
        out.signature = std::move(sig);
        return out;
    }

    SearchResult run() {
        const double thr = cfg_.early_stop_delta ? std::abs(stat_) + *cfg_.early_stop_delta : kInf;

        Probe seed = evaluate(stat_);
        record(seed, stat_, 0);
        double right = seed.range.hi;
        double left = seed.range.lo;

        double eta = cfg_.eta0;
        while (right < kInf && right < thr) {
            int halvings = 0;
            int retries = 0;
            for (;;) {
                const double probe = right + eta;
                Probe p = evaluate(probe);
                const double gap = p.range.lo - right;
                if (std::abs(gap) <= tol_at(right)) {
                    p.range.lo = right;
                    record(p, probe, halvings);
                    right = p.range.hi;
                    break;
                }
                // A tile was skipped: shrink the step. The probe fell back into the
                // previous tile (roundoff at large |phi|): grow it.
                if (gap > 0.0) {
                    eta *= 0.5;
                    ++halvings;
                } else {
                    eta *= 2.0;
                }
                if (++retries > cfg_.max_halvings) throw StalledSearch("line search stalled moving right", right);
            }
        }
        while (left > -kInf && left > -thr) {
            int halvings = 0;
            int retries = 0;
            for (;;) {
                const double probe = left - eta;
                Probe p = evaluate(probe);
                const double gap = left - p.range.hi;
                if (std::abs(gap) <= tol_at(left)) {
                    p.range.hi = left;
                    record(p, probe, halvings);
                    left = p.range.lo;
                    break;
                }
                if (gap > 0.0) {
                    eta *= 0.5;
                    ++halvings;
                } else {
                    eta *= 2.0;
                }
                if (++retries > cfg_.max_halvings) throw StalledSearch("line search stalled moving left", left);
            }
        }

        std::vector<Interval> pieces;
        for (const auto& v : trace_.visited) {
            if (v.member) pieces.push_back(v.range);
        }
        IntervalUnion S(std::move(pieces), cfg_.endpoint_tol);
        if (cfg_.early_stop_delta && (right < kInf || left > -kInf)) {
            trace_.early_stopped = true;
            S = apply_early_stop(S, stat_, *cfg_.early_stop_delta);
        }
        return {std::move(S), std::move(trace_)};
    }

private:
    DualPath run_to_L(const Vector& yp) {
        const int L = target_;
        const int cap = 10 * g_->n_edges() + 10;
        return run_dual_path(yp, g_, cap, [L](const PathStep& s) { return static_cast<int>(s.components.size()) == L; });
    }

    void record(Probe& p, double probe, int halvings) {
        VisitedInterval v;
        v.range = {p.range.lo, p.range.hi};
        v.probe = probe;
        v.member = p.member;
        v.halvings = halvings;
        v.steps_used = p.steps_used;
        v.terminated_early = p.terminated_early;
        v.components_missing = p.components_missing;
        v.near_tie = p.near_tie;
        v.signature = std::move(p.signature);
        if (v.components_missing) note("tile around phi=" + fmt(probe) + " never reaches the requested component count");
        if (v.near_tie) note("near-tie in path at phi=" + fmt(probe));
        trace_.total_halvings += halvings;
        trace_.max_halvings = std::max(trace_.max_halvings, halvings);
        trace_.visited.push_back(std::move(v));
    }

    // Endpoints far from the origin carry roundoff proportional to |phi|.
    double tol_at(double phi) const { return cfg_.endpoint_tol * std::max(1.0, std::abs(phi)); }

    void note(std::string msg) { trace_.notes.push_back(std::move(msg)); }

    static std::string fmt(double x) {
        std::ostringstream os;
        os.precision(10);
        os << x;
        return os.str();
    }

    const Vector& y_;
    std::shared_ptr<const Graph> g_;
    int target_;
    bool fixed_L_;
    const NodeSet& c1_;
    const NodeSet& c2_;
    const Vector& nu_;
    const SearchConfig& cfg_;
    double nu_sq_ = 0.0;
    double stat_ = 0.0;
    SearchTrace trace_;
};

}  // namespace

SearchResult compute_S(const Vector& y, std::shared_ptr<const Graph> g, int K, const NodeSet& C1, const NodeSet& C2,
                       const Vector& nu, const SearchConfig& cfg) {
    return Sweep(y, std::move(g), K, false, C1, C2, nu, cfg).run();
}

SearchResult compute_S_fixed_L(const Vector& y, std::shared_ptr<const Graph> g, int L, const NodeSet& C1,
                               const NodeSet& C2, const Vector& nu, const SearchConfig& cfg) {
    return Sweep(y, std::move(g), L, true, C1, C2, nu, cfg).run();
}

IntervalUnion apply_early_stop(const IntervalUnion& S_partial, double t, double delta) {
    if (!(delta >= 0.0)) throw InputError("apply_early_stop: delta must be nonnegative");
    const double edge = std::abs(t) + delta;
    return S_partial.unite(IntervalUnion::two_sided_tail(edge));
}

bool member_at(const Vector& y, std::shared_ptr<const Graph> g, int K_or_L, bool fixed_L, const NodeSet& C1,
               const NodeSet& C2, const Vector& nu, double phi) {
    const Vector yp = y + ((phi - nu.dot(y)) / nu.squaredNorm()) * nu;
    if (!fixed_L) {
        const DualPath path = run_dual_path(yp, g, K_or_L);
        if (path.n_steps() == 0) return false;
        const Partition& cc = path.steps().back().components;
        return cc.has_block(C1) && cc.has_block(C2);
    }
    const int cap = 10 * g->n_edges() + 10;
    const DualPath path =
        run_dual_path(yp, g, cap, [K_or_L](const PathStep& s) { return static_cast<int>(s.components.size()) == K_or_L; });
    const int k = first_step_with_components(path, K_or_L);
    if (k < 0) return false;
    const Partition& cc = cc_at_step(path, k);
    return cc.has_block(C1) && cc.has_block(C2);
}

}  // namespace gfsi
