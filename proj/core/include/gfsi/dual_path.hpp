#pragma once

#include "gfsi/graph.hpp"
#include "gfsi/linalg.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace gfsi {

enum class EventKind { Init, Hit, Leave };

struct PathEvent {
    EventKind kind = EventKind::Init;
    int coordinate = -1;  // edge index
    int sign = 0;         // sign attached to the coordinate on entry; 0 for Leave
};

/// One knot of the dual path together with the quantities that produced it.
///
/// The vectors a, b are computed at the previous boundary set B_{k-1} and are
/// indexed by `prev_interior` ([m] minus B_{k-1}); c, d are indexed by
/// `prev_boundary`. On the segment [lambda_k, lambda_{k-1}] the dual solution
/// is u(lambda) = a - lambda * b off B_{k-1} and lambda * s on B_{k-1}.
struct PathStep {
    int k = 0;
    double lambda = 0.0;
    std::vector<int> boundary;  // B_k, increasing edge index
    std::vector<int> signs;     // aligned with boundary
    PathEvent event;
    Partition components;       // components of G with B_k removed

    std::vector<int> prev_interior;
    Vector a, b;
    std::vector<int> prev_boundary;
    std::vector<int> prev_signs;
    Vector c, d;
    std::vector<int> r_record;  // sign(a_i), aligned with prev_interior; empty at k = 1
    std::vector<int> l_record;  // edges of B_{k-1} with c < 0 and d < 0

    /// Solver for B_{k-1}, reused when the selection polyhedron is evaluated.
    std::shared_ptr<const ReducedIncidenceSolver> solver;
    bool near_tie = false;
};

/// (B_k, s_k, R_k, L_k) for k = 1..K; two data vectors lie in the same
/// selection event iff their signatures compare equal.
struct StepSignature {
    std::vector<int> boundary;
    std::vector<int> signs;
    std::vector<int> r_record;
    std::vector<int> l_record;
    friend bool operator==(const StepSignature&, const StepSignature&) = default;
};
using PathSignature = std::vector<StepSignature>;

class DualPath {
public:
    const Vector& y() const noexcept { return y_; }
    const Graph& graph() const noexcept { return *graph_; }
    const std::shared_ptr<const Graph>& graph_ptr() const noexcept { return graph_; }
    const std::vector<PathStep>& steps() const noexcept { return steps_; }
    const PathStep& step(int k) const;  // 1-based
    int n_steps() const noexcept { return static_cast<int>(steps_.size()); }
    bool terminated_early() const noexcept { return terminated_early_; }
    /// Messages about near-ties met while tracing (probability-zero events).
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }
    std::vector<double> knots() const;
    PathSignature signature() const;

private:
    friend class DualPathBuilder;
    Vector y_;
    std::shared_ptr<const Graph> graph_;
    std::vector<PathStep> steps_;
    bool terminated_early_ = false;
    std::vector<std::string> warnings_;
};

/// Called after each new step; return true to stop tracing.
using StopRule = std::function<bool(const PathStep&)>;

/// Dual path algorithm for the graph fused lasso with identity design.
/// Produces steps 1..K (fewer if lambda reaches 0 first, in which case
/// terminated_early() is set). Throws InputError if y has the wrong length
/// or K < 1.
DualPath run_dual_path(const Vector& y, std::shared_ptr<const Graph> g, int K);

/// Traces until `stop` returns true or `max_steps` is reached.
DualPath run_dual_path(const Vector& y, std::shared_ptr<const Graph> g, int max_steps, const StopRule& stop);

/// Primal solution beta(lambda) = y - D^T u(lambda) from the dual segments.
/// Requires lambda >= the last knot unless the path terminated early.
Vector solution_at(const DualPath& path, double lambda);

/// The same solution written as P_{Null(D_{-B_k})}(y - lambda D_{B_k}^T s_{B_k})
/// for the segment containing lambda.
Vector solution_at_projection(const DualPath& path, double lambda);

/// Components of G_{-B_k}; k is 1-based.
const Partition& cc_at_step(const DualPath& path, int k);

/// Smallest k whose components number exactly L, or -1.
int first_step_with_components(const DualPath& path, int L);

}  // namespace gfsi
