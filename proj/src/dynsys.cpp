#include "koopmatch/dynsys.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

namespace koop {

Vec evaluate_field(const SystemSpec& sys, const Vec& x) {
    if (x.size() != sys.dim)
        throw ValidationError("evaluate_field: dimension mismatch for system '" + sys.id +
                              "': got " + std::to_string(x.size()) + ", expected " +
                              std::to_string(sys.dim));
    if (!sys.domain(x))
        throw ValidationError("evaluate_field: point outside domain of system '" + sys.id +
                              "' (" + sys.domain.description + ")");
    return sys.field(x);
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                 e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                 e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

}  // namespace

Trajectory integrate(const SystemSpec& sys, const Vec& x0, double t_end,
                     const IntegrateOptions& opts) {
    if (x0.size() != sys.dim) throw ValidationError("integrate: dimension mismatch");
    if (opts.tol <= 0) throw ValidationError("integrate: tol must be positive");
    if (!std::isfinite(t_end)) throw ValidationError("integrate: t_end must be finite");
    if (x0.lpNorm<Eigen::Infinity>() > opts.blowup_cap)
        throw ValidationError("integrate: initial state already beyond blow-up cap");

    Trajectory traj;
    traj.times.push_back(0.0);
    traj.states.push_back(x0);
    if (t_end == 0.0) return traj;

    const double dir = t_end > 0 ? 1.0 : -1.0;
    double t = 0.0;
    Vec y = x0;
    Vec k1 = sys.field(y);
    if (!finite(k1)) throw NumericalError("integrate: non-finite field at initial state");

    double h = dir * std::min(opts.h_init, std::abs(t_end));
    Vec k2, k3, k4, k5, k6, k7, y5, err;

    for (int step = 0; step < opts.max_steps; ++step) {
        if (dir * (t + h - t_end) > 0) h = t_end - t;

        k2 = sys.field(y + h * (a21 * k1));
        k3 = sys.field(y + h * (a31 * k1 + a32 * k2));
        k4 = sys.field(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        k5 = sys.field(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        k6 = sys.field(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        k7 = sys.field(y5);
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        if (!finite(y5) || !finite(err)) {
            // Treat overflow inside a step as blow-up; shrink first to be sure.
            if (std::abs(h) > 1e-14 * (1 + std::abs(t))) {
                h *= 0.25;
                continue;
            }
            traj.terminated_early = true;
            traj.reason = "non-finite step near t=" + std::to_string(t);
            return traj;
        }

        double scale = 0.0;
        for (int i = 0; i < y.size(); ++i) {
            double s = opts.tol + opts.tol * std::max(std::abs(y[i]), std::abs(y5[i]));
            scale = std::max(scale, std::abs(err[i]) / s);
        }

        if (scale <= 1.0) {
            t += h;
            y = y5;
            k1 = k7;  // FSAL
            traj.times.push_back(t);
            traj.states.push_back(y);

            if (y.lpNorm<Eigen::Infinity>() > opts.blowup_cap) {
                traj.terminated_early = true;
                traj.reason = "blow-up: |x| exceeded cap near t=" + std::to_string(t);
                return traj;
            }
            if (t == t_end || dir * (t - t_end) >= 0) return traj;
        }

        double fac = 0.9 * std::pow(std::max(scale, 1e-10), -0.2);
        fac = std::clamp(fac, 0.2, 5.0);
        h *= fac;

        if (std::abs(h) < 1e-14 * (1 + std::abs(t))) {
            traj.terminated_early = true;
            traj.reason = "step size underflow near t=" + std::to_string(t) +
                          " (movable singularity?)";
            return traj;
        }
    }
    traj.terminated_early = true;
    traj.reason = "max step count exceeded";
    return traj;
}

Trajectory integrate(const SystemSpec& sys, const Vec& x0, double t_end, double tol) {
    IntegrateOptions opts;
    opts.tol = tol;
    return integrate(sys, x0, t_end, opts);
}

Vec flow(const SystemSpec& sys, const Vec& x0, double t, double tol) {
    Trajectory traj = integrate(sys, x0, t, tol);
    if (traj.terminated_early)
        throw NumericalError("flow: trajectory of '" + sys.id + "' terminated early: " +
                             traj.reason);
    return traj.final_state();
}

SamplePairs sample_pairs(const SystemSpec& sys, const Vec& lo, const Vec& hi, int n,
                         double dt, std::uint64_t seed, const IntegrateOptions& opts) {
    if (n < 0) throw ValidationError("sample_pairs: n must be >= 0");
    if (dt < 0) throw ValidationError("sample_pairs: dt must be >= 0");
    if (lo.size() != sys.dim || hi.size() != sys.dim)
        throw ValidationError("sample_pairs: box dimension mismatch");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    SamplePairs out;
    out.dt = dt;
    out.seed = seed;
    out.x.resize(sys.dim, n);
    out.x_next.resize(sys.dim, n);

    int kept = 0;
    for (int i = 0; i < n; ++i) {
        Vec x0(sys.dim);
        for (int k = 0; k < sys.dim; ++k) x0[k] = lo[k] + (hi[k] - lo[k]) * unit(rng);
        if (!sys.domain(x0))
            throw ValidationError("sample_pairs: box outside domain of '" + sys.id + "'");
        if (dt == 0.0) {
            out.x.col(kept) = x0;
            out.x_next.col(kept) = x0;
            ++kept;
            continue;
        }
        Trajectory traj = integrate(sys, x0, dt, opts);
        if (traj.terminated_early) {
            ++out.discarded;
            continue;
        }
        out.x.col(kept) = x0;
        out.x_next.col(kept) = traj.final_state();
        ++kept;
    }
    out.x.conservativeResize(sys.dim, kept);
    out.x_next.conservativeResize(sys.dim, kept);
    return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    const int d = traj.states.empty() ? 0 : static_cast<int>(traj.states.front().size());
    os << "t";
    for (int i = 1; i <= d; ++i) os << ",x" << i;
    os << "\n";
    char buf[32];
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", traj.times[k]);
        os << buf;
        for (int i = 0; i < d; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", traj.states[k][i]);
            os << "," << buf;
        }
        os << "\n";
    }
}

}  // namespace koop
