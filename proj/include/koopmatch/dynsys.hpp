#pragma once

#include "koopmatch/core.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>

namespace koop {

// A vector field F: R^d -> R^d with metadata. `analytic_flow`, when present,
// evaluates S_t(x0) in closed form; `polynomial` carries the exact sparse
// polynomial representation of each component when the field is polynomial.
struct SystemSpec {
    std::string id;
    int dim = 0;
    std::map<std::string, double> params;
    std::function<Vec(const Vec&)> field;
    std::function<Vec(const Vec&, double)> analytic_flow;  // may be empty
    Domain domain = Domain::all();
    std::vector<Poly> polynomial;  // empty if the field is not polynomial
};

Vec evaluate_field(const SystemSpec& sys, const Vec& x);

struct IntegrateOptions {
    double tol = 1e-10;        // absolute and relative per-step tolerance
    double blowup_cap = 1e8;   // ||x||_inf above this terminates the trajectory
    double h_init = 1e-3;
    int max_steps = 2000000;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    bool terminated_early = false;
    std::string reason;

    const Vec& final_state() const { return states.back(); }
    double final_time() const { return times.back(); }
};

// Adaptive Dormand-Prince 5(4). Negative t_end integrates backward.
Trajectory integrate(const SystemSpec& sys, const Vec& x0, double t_end,
                     const IntegrateOptions& opts = {});
Trajectory integrate(const SystemSpec& sys, const Vec& x0, double t_end, double tol);

// Final state only; throws NumericalError if the trajectory terminates early.
Vec flow(const SystemSpec& sys, const Vec& x0, double t, double tol = 1e-10);

struct SamplePairs {
    Mat x;       // d x n states at time t
    Mat x_next;  // d x n states at time t + dt
    double dt = 0;
    std::uint64_t seed = 0;
    int discarded = 0;  // pairs dropped due to blow-up within dt

    int count() const { return static_cast<int>(x.cols()); }
};

SamplePairs sample_pairs(const SystemSpec& sys, const Vec& lo, const Vec& hi, int n,
                         double dt, std::uint64_t seed,
                         const IntegrateOptions& opts = {});

// CSV with header t,x1,...,xd.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace koop
