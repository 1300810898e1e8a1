#pragma once

#include "koopmatch/keig.hpp"

namespace koop {

// An evaluable change of coordinates with optional inverse. `forward` throws
// ValidationError/NumericalError outside the per-point domain; `in_domain`
// probes membership without propagating.
struct TransformMap {
    std::function<Vec(const Vec&)> forward;
    std::function<Vec(const Vec&)> inverse;  // may be empty
    std::string label;
    int dim_in = 0;
    int dim_out = 0;

    Vec operator()(const Vec& x) const { return forward(x); }
    bool in_domain(const Vec& x) const;
    bool has_inverse() const { return static_cast<bool>(inverse); }
    // Central finite-difference Jacobian of forward.
    Mat jacobian(const Vec& x) const;
};

TransformMap identity_map(int dim);
TransformMap make_transform(int dim, std::function<Vec(const Vec&)> forward,
                            std::function<Vec(const Vec&)> inverse, std::string label);

struct MatchOptions {
    double eig_tol = 1e-9;      // eigenvalue pairing tolerance
    double imag_tol = 1e-9;     // max imaginary part accepted in G1 values
    double accept_tol = 1e-9;   // domain honesty: ||G2(h(x)) - G1(x)||
    double newton_tol = 1e-12;
    int newton_max_iter = 50;
    Vec guess;                  // initial guess for Newton inversion
    Vec grid_lo, grid_hi;       // multistart box when no guess is supplied
    int grid_per_dim = 21;
};

// h = G2^{-1} o G1 for componentwise matched stacks with equal eigenvalues.
TransformMap build_match(const EigenStack& g1, const EigenStack& g2,
                         const MatchOptions& opts = {});

// Newton inversion of a stack: solve G(y) = z for real y.
Vec invert_stack(const EigenStack& g, const CVec& z, const MatchOptions& opts);

struct DefectResult {
    double defect = 0.0;
    int retained = 0;
    int skipped = 0;
};

// max over retained (x, t_j) of ||h(S1_{t_j}(x)) - S2_{t_j}(h(x))||.
DefectResult conjugacy_defect(const TransformMap& h, const SystemSpec& sys1,
                              const SystemSpec& sys2, const std::vector<Vec>& samples,
                              double horizon, int steps);

// Dh(h^{-1}(y)) . F1(h^{-1}(y)).
Vec pushforward_field(const TransformMap& h, const SystemSpec& sys1, const Vec& y);

TransformMap compose(const TransformMap& outer, const TransformMap& inner,
                     const std::vector<Vec>& check_samples = {});

}  // namespace koop
