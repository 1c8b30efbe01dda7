#pragma once

#include "gfsi/dual_path.hpp"
#include "gfsi/truncated_gaussian.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gfsi {

struct SearchConfig {
    double eta0 = 1e-4;
    double endpoint_tol = 1.5e-8;
    std::optional<double> early_stop_delta;
    int max_halvings = 30;
    std::optional<double> scan_bound;  // only read by grid-scan oracles
};

/// One tile of the sweep: the phi-range on which the probe's path outputs
/// stay fixed.
struct VisitedInterval {
    Interval range;
    double probe = 0.0;
    bool member = false;
    int halvings = 0;           // halvings needed to land this tile
    int steps_used = 0;         // K, or K* for the fixed-L search
    bool terminated_early = false;
    bool components_missing = false;  // fixed-L: L components never reached
    bool near_tie = false;
    PathSignature signature;
};

struct SearchTrace {
    std::vector<VisitedInterval> visited;  // in sweep order: seed, right, left
    int n_instances = 0;
    int total_halvings = 0;
    int max_halvings = 0;
    bool early_stopped = false;
    std::vector<std::string> notes;
};

struct SearchResult {
    IntervalUnion S;
    SearchTrace trace;
};

/// Sweeps phi along y'(phi) = y + (phi - nu^T y) nu / |nu|^2, rerunning the
/// K-step path at each tile and keeping the tiles on which C1 and C2 are both
/// components. With cfg.early_stop_delta set, the sweep stops past
/// |nu^T y| + delta in each direction and the unexplored tails are added.
SearchResult compute_S(const Vector& y, std::shared_ptr<const Graph> g, int K, const NodeSet& C1, const NodeSet& C2,
                       const Vector& nu, const SearchConfig& cfg = {});

/// As compute_S, but each probe runs the path to the first step with exactly
/// L components.
SearchResult compute_S_fixed_L(const Vector& y, std::shared_ptr<const Graph> g, int L, const NodeSet& C1,
                               const NodeSet& C2, const Vector& nu, const SearchConfig& cfg = {});

/// (-inf, -t - delta] u S u [t + delta, inf), t taken in absolute value.
IntervalUnion apply_early_stop(const IntervalUnion& S_partial, double t, double delta);

/// True if C1 and C2 are both components of the K-step path at y'(phi)
/// (or at the first step with L components when fixed_L is set).
bool member_at(const Vector& y, std::shared_ptr<const Graph> g, int K_or_L, bool fixed_L, const NodeSet& C1,
               const NodeSet& C2, const Vector& nu, double phi);

}  // namespace gfsi
