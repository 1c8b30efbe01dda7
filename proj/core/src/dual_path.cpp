#include "gfsi/dual_path.hpp"

#include "gfsi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gfsi {

namespace {

constexpr double kTieTol = 1e-9;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

/// D_B^T s as a node vector.
Vector boundary_load(const Graph& g, const std::vector<int>& boundary, const std::vector<int>& signs) {
    Vector out = Vector::Zero(g.n_nodes());
    for (std::size_t i = 0; i < boundary.size(); ++i) {
        const auto [u, v] = g.edge(boundary[i]);
        out(u) += signs[i];
        out(v) -= signs[i];
    }
    return out;
}

/// Best candidate; lowest index wins exact ties. Also reports the runner-up
/// value so near-ties can be flagged.
struct Best {
    int pos = -1;
    double value = kNegInf;
    double runner_up = kNegInf;
};

void offer(Best& best, int pos, double value) {
    if (value > best.value) {
        best.runner_up = best.value;
        best.value = value;
        best.pos = pos;
    } else if (value > best.runner_up) {
        best.runner_up = value;
    }
}

}  // namespace

class DualPathBuilder {
public:
    static DualPath run(const Vector& y, std::shared_ptr<const Graph> g, int max_steps, const StopRule& stop) {
        if (!g) throw InputError("run_dual_path: null graph");
        if (y.size() != g->n_nodes()) throw InputError("run_dual_path: data length does not match the graph");
        if (max_steps < 1) throw InputError("run_dual_path: number of steps must be positive");
        if (!y.allFinite()) throw InputError("run_dual_path: non-finite data");

        DualPath path;
        path.y_ = y;
        path.graph_ = g;
        const Graph& graph = *g;
        const int m = graph.n_edges();
        if (m == 0) {
            path.terminated_early_ = true;
            return path;
        }

        std::vector<char> removed(static_cast<std::size_t>(m), 0);
        auto solver0 = std::make_shared<const ReducedIncidenceSolver>(graph, removed);
        const Vector u = solver0->dual_solve(y);

        Best best;
        for (int i = 0; i < m; ++i) offer(best, i, std::abs(u(i)));
        if (!(best.value > 0.0)) {
            path.terminated_early_ = true;
            return path;
        }

        PathStep first;
        first.k = 1;
        first.lambda = best.value;
        first.boundary = {best.pos};
        first.signs = {sign_of(u(best.pos))};
        first.event = {EventKind::Init, best.pos, first.signs.front()};
        first.components = components_after_removal(graph, first.boundary);
        first.prev_interior = solver0->interior();
        first.a = u;
        first.b = Vector::Zero(m);
        first.c = Vector::Zero(0);
        first.d = Vector::Zero(0);
        first.solver = solver0;
        flag_tie(path, first, best);
        path.steps_.push_back(std::move(first));
        if (stop && stop(path.steps_.back())) return path;

        while (path.n_steps() < max_steps) {
            const PathStep& prev = path.steps_.back();
            std::fill(removed.begin(), removed.end(), 0);
            for (int e : prev.boundary) removed[e] = 1;
            auto solver = std::make_shared<const ReducedIncidenceSolver>(graph, removed);

            PathStep next;
            next.k = prev.k + 1;
            next.prev_interior = solver->interior();
            next.prev_boundary = prev.boundary;
            next.prev_signs = prev.signs;

            const Vector load = boundary_load(graph, prev.boundary, prev.signs);
            next.a = solver->dual_solve(y);
            next.b = solver->dual_solve(load);
            const Vector py = solver->project_null(y);
            const Vector pload = solver->project_null(load);

            const auto nb = static_cast<Eigen::Index>(prev.boundary.size());
            next.c.resize(nb);
            next.d.resize(nb);
            for (Eigen::Index j = 0; j < nb; ++j) {
                const auto [p, q] = graph.edge(prev.boundary[j]);
                const double s = prev.signs[j];
                next.c(j) = s * (py(p) - py(q));
                next.d(j) = s * (pload(p) - pload(q));
            }

            Best hit;
            next.r_record.resize(next.prev_interior.size());
            for (std::size_t i = 0; i < next.prev_interior.size(); ++i) {
                const double ai = next.a(static_cast<Eigen::Index>(i));
                const int r = sign_of(ai);
                next.r_record[i] = r;
                const double den = next.b(static_cast<Eigen::Index>(i)) + r;
                const double t = (r != 0 && sign_of(den) == r) ? ai / den : kNegInf;
                offer(hit, static_cast<int>(i), t);
            }
            Best leave;
            for (Eigen::Index j = 0; j < nb; ++j) {
                const bool leaving = next.c(j) < 0.0 && next.d(j) < 0.0;
                if (leaving) next.l_record.push_back(prev.boundary[j]);
                offer(leave, static_cast<int>(j), leaving ? next.c(j) / next.d(j) : 0.0);
            }

            const double lambda = std::max(hit.value, leave.value);
            if (!(lambda > 0.0)) {
                path.terminated_early_ = true;
                break;
            }
            next.lambda = lambda;
            next.boundary = prev.boundary;
            next.signs = prev.signs;
            if (hit.value >= leave.value) {
                const int e = next.prev_interior[hit.pos];
                const int s = next.r_record[hit.pos];
                const auto at = std::lower_bound(next.boundary.begin(), next.boundary.end(), e);
                const auto off = at - next.boundary.begin();
                next.boundary.insert(at, e);
                next.signs.insert(next.signs.begin() + off, s);
                next.event = {EventKind::Hit, e, s};
            } else {
                const auto off = static_cast<std::ptrdiff_t>(leave.pos);
                const int e = next.boundary[leave.pos];
                next.boundary.erase(next.boundary.begin() + off);
                next.signs.erase(next.signs.begin() + off);
                next.event = {EventKind::Leave, e, 0};
            }
            next.components = components_after_removal(graph, next.boundary);
            next.solver = std::move(solver);

            Best overall;
            offer(overall, 0, hit.value);
            offer(overall, 1, leave.value);
            overall.runner_up = std::max({overall.runner_up, hit.runner_up, leave.runner_up});
            flag_tie(path, next, overall);

            path.steps_.push_back(std::move(next));
            if (stop && stop(path.steps_.back())) break;
        }
        return path;
    }

private:
    static void flag_tie(DualPath& path, PathStep& step, const Best& best) {
        if (std::isfinite(best.runner_up) && best.runner_up > 0.0 && best.value - best.runner_up <= kTieTol) {
            step.near_tie = true;
            std::ostringstream msg;
            msg << "step " << step.k << ": competing event times within " << kTieTol << " (" << best.value << ")";
            path.warnings_.push_back(msg.str());
        }
    }
};

const PathStep& DualPath::step(int k) const {
    if (k < 1 || k > n_steps()) throw InputError("step index out of range");
    return steps_[static_cast<std::size_t>(k - 1)];
}

std::vector<double> DualPath::knots() const {
    std::vector<double> out;
    out.reserve(steps_.size());
    for (const auto& s : steps_) out.push_back(s.lambda);
    return out;
}

PathSignature DualPath::signature() const {
    PathSignature sig;
    sig.reserve(steps_.size());
    for (const auto& s : steps_) sig.push_back({s.boundary, s.signs, s.r_record, s.l_record});
    return sig;
}

DualPath run_dual_path(const Vector& y, std::shared_ptr<const Graph> g, int K) {
    return DualPathBuilder::run(y, std::move(g), K, StopRule{});
}

DualPath run_dual_path(const Vector& y, std::shared_ptr<const Graph> g, int max_steps, const StopRule& stop) {
    return DualPathBuilder::run(y, std::move(g), max_steps, stop);
}

namespace {

void check_lambda(const DualPath& path, double lambda) {
    if (!(lambda >= 0.0)) throw InputError("solution_at: lambda must be nonnegative");
    if (path.n_steps() > 0 && lambda < path.steps().back().lambda && !path.terminated_early()) {
        throw InputError("solution_at: lambda below the computed part of the path");
    }
}

}  // namespace

Vector solution_at(const DualPath& path, double lambda) {
    check_lambda(path, lambda);
    if (path.n_steps() == 0) return path.y();
    const auto& steps = path.steps();
    auto it = std::find_if(steps.begin(), steps.end(), [&](const PathStep& s) { return lambda >= s.lambda; });
    if (it == steps.end()) return solution_at_projection(path, lambda);

    const Graph& g = path.graph();
    Vector dual_load = Vector::Zero(g.n_nodes());  // D^T u
    for (std::size_t i = 0; i < it->prev_interior.size(); ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        const double ui = it->a(idx) - lambda * it->b(idx);
        const auto [p, q] = g.edge(it->prev_interior[i]);
        dual_load(p) += ui;
        dual_load(q) -= ui;
    }
    for (std::size_t j = 0; j < it->prev_boundary.size(); ++j) {
        const double uj = lambda * it->prev_signs[j];
        const auto [p, q] = g.edge(it->prev_boundary[j]);
        dual_load(p) += uj;
        dual_load(q) -= uj;
    }
    return path.y() - dual_load;
}

Vector solution_at_projection(const DualPath& path, double lambda) {
    check_lambda(path, lambda);
    const Graph& g = path.graph();
    std::vector<int> boundary;
    std::vector<int> signs;
    for (const auto& s : path.steps()) {
        if (lambda > s.lambda) break;
        boundary = s.boundary;
        signs = s.signs;
    }
    Vector shifted = path.y();
    for (std::size_t i = 0; i < boundary.size(); ++i) {
        const auto [p, q] = g.edge(boundary[i]);
        shifted(p) -= lambda * signs[i];
        shifted(q) += lambda * signs[i];
    }
    return project_null(components_after_removal(g, boundary), shifted);
}

const Partition& cc_at_step(const DualPath& path, int k) { return path.step(k).components; }

int first_step_with_components(const DualPath& path, int L) {
    for (const auto& s : path.steps()) {
        if (static_cast<int>(s.components.size()) == L) return s.k;
    }
    return -1;
}

}  // namespace gfsi
