#pragma once

#include "gfsi/dual_path.hpp"

#include <limits>
#include <memory>
#include <span>
#include <vector>

namespace gfsi {

enum class ConstraintFamily {
    Init,   // step 1: the selected coordinate has the largest |u|
    Sign,   // sign of a_i(Y) off the boundary
    Leave,  // sign of c_j(Y) on the boundary when d_j < 0
    Order,  // the winning event time beats competitors and stays below the previous knot
};

struct RowTag {
    int step = 0;
    ConstraintFamily family = ConstraintFamily::Sign;
};

/// The selection event {Y : A Y <= 0} of the first K steps of a dual path.
///
/// Each row of A is a short linear combination of the step quantities
/// a_{k,i}(Y) and c_{k,j}(Y), which are linear in Y. Rows are kept in this
/// factored form; apply() evaluates A v with one reduced solve per step and
/// dense() materializes A.
class Polyhedron {
public:
    enum class Atom { A, C };
    struct Term {
        int step;    // 1-based
        Atom atom;
        int index;   // position in prev_interior (A) or prev_boundary (C)
        double coef;
    };

    int n_rows() const noexcept { return static_cast<int>(tags_.size()); }
    int n_cols() const noexcept { return n_; }
    const std::vector<RowTag>& provenance() const noexcept { return tags_; }
    std::span<const Term> row(int r) const {
        return {terms_.data() + offsets_[static_cast<std::size_t>(r)],
                offsets_[static_cast<std::size_t>(r) + 1] - offsets_[static_cast<std::size_t>(r)]};
    }

    Vector apply(const Vector& v) const;
    DenseMatrix dense() const;

private:
    friend Polyhedron build_polyhedron(const DualPath& path, int K);

    struct StepAtoms {
        std::shared_ptr<const ReducedIncidenceSolver> solver;
        std::vector<int> boundary;
        std::vector<int> signs;
    };

    int n_ = 0;
    std::shared_ptr<const Graph> graph_;
    std::vector<StepAtoms> steps_;
    std::vector<Term> terms_;
    std::vector<std::size_t> offsets_{0};
    std::vector<RowTag> tags_;
};

/// Constraints reproducing (B_k, s_k, R_k, L_k) for k = 1..K. K < 0 uses
/// every step of the path.
Polyhedron build_polyhedron(const DualPath& path, int K = -1);

struct PhiInterval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
};

/// {phi : A y'(phi) <= 0} for y'(phi) = y + (phi - nu^T y) nu / |nu|^2.
/// Throws InputError if nu = 0 and InconsistentInterval if y is clearly
/// outside the polyhedron.
PhiInterval phi_interval(const Polyhedron& P, const Vector& y, const Vector& nu);

/// Same, with A y and A nu already evaluated.
PhiInterval phi_interval(const Vector& Ay, const Vector& Anu, double stat, double nu_sq);

}  // namespace gfsi
