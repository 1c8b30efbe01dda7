#include "gfsi/polyhedron.hpp"

#include "gfsi/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace gfsi {

namespace {

constexpr double kDenTol = 1e-12;

using Term = Polyhedron::Term;
using Atom = Polyhedron::Atom;

/// lhs - rhs for two single-term forms.
std::array<Term, 2> minus(Term lhs, Term rhs) {
    rhs.coef = -rhs.coef;
    return {lhs, rhs};
}

}  // namespace

Polyhedron build_polyhedron(const DualPath& path, int K) {
    if (K < 0) K = path.n_steps();
    if (K > path.n_steps()) throw InputError("build_polyhedron: path has fewer steps than requested");

    Polyhedron P;
    P.n_ = path.graph().n_nodes();
    P.graph_ = path.graph_ptr();
    auto emit = [&P](std::span<const Term> row, int step, ConstraintFamily fam) {
        const std::size_t before = P.terms_.size();
        for (const Term& t : row) {
            if (t.coef != 0.0) P.terms_.push_back(t);
        }
        if (P.terms_.size() == before) return;
        P.offsets_.push_back(P.terms_.size());
        P.tags_.push_back({step, fam});
    };
    auto emit1 = [&emit](Term t, int step, ConstraintFamily fam) { emit(std::span<const Term>(&t, 1), step, fam); };

    Term prev_lambda{};  // lambda_{k-1}(Y) as a single-term linear form
    for (int k = 1; k <= K; ++k) {
        const PathStep& st = path.step(k);
        P.steps_.push_back({st.solver, st.prev_boundary, st.prev_signs});

        if (k == 1) {
            const int star = st.event.coordinate;
            const double s = st.signs.front();
            const Term top{1, Atom::A, star, s};
            for (int j = 0; j < static_cast<int>(st.prev_interior.size()); ++j) {
                if (j == star) continue;
                emit(minus({1, Atom::A, j, 1.0}, top), 1, ConstraintFamily::Init);
                emit(minus({1, Atom::A, j, -1.0}, top), 1, ConstraintFamily::Init);
            }
            emit1({1, Atom::A, star, -s}, 1, ConstraintFamily::Init);
            prev_lambda = top;
            continue;
        }

        // (i) signs of a_i
        std::vector<double> hit_coef(st.prev_interior.size(), 0.0);
        for (std::size_t i = 0; i < st.prev_interior.size(); ++i) {
            const int r = st.r_record[i];
            if (r == 0) continue;
            emit1({k, Atom::A, static_cast<int>(i), -static_cast<double>(r)}, k, ConstraintFamily::Sign);
            const double den = st.b(static_cast<Eigen::Index>(i)) + r;
            if (std::abs(den) >= kDenTol && (den > 0) == (r > 0)) hit_coef[i] = 1.0 / den;
        }

        // (ii) signs of c_j where d_j < 0
        std::vector<double> leave_coef(st.prev_boundary.size(), 0.0);
        for (std::size_t j = 0; j < st.prev_boundary.size(); ++j) {
            const double d = st.d(static_cast<Eigen::Index>(j));
            if (!(d < 0.0)) continue;
            const bool in_l = std::binary_search(st.l_record.begin(), st.l_record.end(), st.prev_boundary[j]);
            emit1({k, Atom::C, static_cast<int>(j), in_l ? 1.0 : -1.0}, k, ConstraintFamily::Leave);
            if (in_l && std::abs(d) >= kDenTol) leave_coef[j] = 1.0 / d;
        }

        // (iii) ordering
        Term win{};
        if (st.event.kind == EventKind::Hit) {
            const auto pos = std::lower_bound(st.prev_interior.begin(), st.prev_interior.end(), st.event.coordinate) -
                             st.prev_interior.begin();
            win = {k, Atom::A, static_cast<int>(pos), hit_coef[pos]};
        } else {
            const auto pos = std::lower_bound(st.prev_boundary.begin(), st.prev_boundary.end(), st.event.coordinate) -
                             st.prev_boundary.begin();
            win = {k, Atom::C, static_cast<int>(pos), leave_coef[pos]};
        }
        for (std::size_t i = 0; i < hit_coef.size(); ++i) {
            if (hit_coef[i] == 0.0 || (win.atom == Atom::A && win.index == static_cast<int>(i))) continue;
            emit(minus({k, Atom::A, static_cast<int>(i), hit_coef[i]}, win), k, ConstraintFamily::Order);
        }
        for (std::size_t j = 0; j < leave_coef.size(); ++j) {
            if (leave_coef[j] == 0.0 || (win.atom == Atom::C && win.index == static_cast<int>(j))) continue;
            emit(minus({k, Atom::C, static_cast<int>(j), leave_coef[j]}, win), k, ConstraintFamily::Order);
        }
        if (win.coef != 0.0) {
            emit(minus(win, prev_lambda), k, ConstraintFamily::Order);
            prev_lambda = win;
        }
    }
    return P;
}

Vector Polyhedron::apply(const Vector& v) const {
    if (v.size() != n_) throw InputError("Polyhedron::apply: dimension mismatch");
    std::vector<Vector> a_atoms(steps_.size());
    std::vector<Vector> c_atoms(steps_.size());
    std::vector<char> need_a(steps_.size(), 0);
    std::vector<char> need_c(steps_.size(), 0);
    for (const Term& t : terms_) (t.atom == Atom::A ? need_a : need_c)[t.step - 1] = 1;
    for (std::size_t s = 0; s < steps_.size(); ++s) {
        const StepAtoms& st = steps_[s];
        if (need_a[s]) a_atoms[s] = st.solver->dual_solve(v);
        if (need_c[s]) {
            const Vector pv = st.solver->project_null(v);
            Vector c(static_cast<Eigen::Index>(st.boundary.size()));
            for (std::size_t j = 0; j < st.boundary.size(); ++j) {
                const auto [p, q] = graph_->edge(st.boundary[j]);
                c(static_cast<Eigen::Index>(j)) = st.signs[j] * (pv(p) - pv(q));
            }
            c_atoms[s] = std::move(c);
        }
    }
    Vector out(n_rows());
    for (int r = 0; r < n_rows(); ++r) {
        double acc = 0.0;
        for (const Term& t : row(r)) {
            const Vector& src = (t.atom == Atom::A ? a_atoms : c_atoms)[t.step - 1];
            acc += t.coef * src(t.index);
        }
        out(r) = acc;
    }
    return out;
}

DenseMatrix Polyhedron::dense() const {
    DenseMatrix A(n_rows(), n_);
    Vector e = Vector::Zero(n_);
    for (int j = 0; j < n_; ++j) {
        e(j) = 1.0;
        A.col(j) = apply(e);
        e(j) = 0.0;
    }
    return A;
}

PhiInterval phi_interval(const Vector& Ay, const Vector& Anu, double stat, double nu_sq) {
    if (!(nu_sq > 0.0)) throw InputError("phi_interval: contrast must be nonzero");
    if (Ay.size() != Anu.size()) throw InputError("phi_interval: dimension mismatch");
    const double scale = 1.0 + (Ay.size() > 0 ? Ay.cwiseAbs().maxCoeff() : 0.0);
    const double slack = 1e-8 * scale;
    // Rows parallel to nu come out with roundoff-sized A nu; treat those as exactly parallel.
    const double flat = 1e-11 * (Anu.size() > 0 ? Anu.cwiseAbs().maxCoeff() : 0.0);
    PhiInterval out;
    for (Eigen::Index i = 0; i < Ay.size(); ++i) {
        double ay = Ay(i);
        if (ay > 0.0) {
            if (ay > slack) throw InconsistentInterval("phi_interval: data violates its own selection event");
            ay = 0.0;
        }
        const double an = Anu(i);
        if (std::abs(an) <= flat) continue;
        const double bound = (stat * an - nu_sq * ay) / an;
        if (an > 0.0) {
            out.hi = std::min(out.hi, bound);
        } else {
            out.lo = std::max(out.lo, bound);
        }
    }
    if (out.hi < out.lo) {
        const double gap = out.lo - out.hi;
        if (gap > 1e-8 * (1.0 + std::abs(stat))) throw InconsistentInterval("phi_interval: empty slice");
        out.lo = out.hi = stat;
    }
    return out;
}

PhiInterval phi_interval(const Polyhedron& P, const Vector& y, const Vector& nu) {
    if (nu.size() != y.size() || y.size() != P.n_cols()) throw InputError("phi_interval: dimension mismatch");
    return phi_interval(P.apply(y), P.apply(nu), nu.dot(y), nu.squaredNorm());
}

}  // namespace gfsi
