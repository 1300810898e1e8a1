#pragma once

#include "koopmatch/keig.hpp"

namespace koop {

// Time-averaged truncated Laplace average
//   f*(x) = (1/T) int_0^T f(S_t x) exp(-lambda t) dt,
// an eigenfunction evaluation for matched lambda; `backward` integrates the
// reversed-time flow.
struct LaplaceConfig {
    std::function<double(const Vec&)> observable;
    Complex lambda;
    double horizon = 100.0;
    enum class Direction { forward, backward } direction = Direction::forward;
    double step = 0.02;  // quadrature grid spacing
};

Complex laplace_average(const LaplaceConfig& cfg, const SystemSpec& sys, const Vec& x);

struct LevelSet {
    std::vector<Vec> points;
    double level = 0.0;
    bool closed = false;
};

// Predictor-corrector continuation of {x : |f*(x)| = c} through x0 (2D).
LevelSet levelset_continuation(const LaplaceConfig& cfg, const SystemSpec& sys,
                               const Vec& x0, double step, int max_points);

// Signed distance to the polyline as the implicit function; g0 data by
// arc-length interpolation of the per-vertex values.
InitialSurface surface_from_levelset(const LevelSet& ls,
                                     const std::vector<Complex>& g0_values);

}  // namespace koop
