#include "koopmatch/matching.hpp"

#include <cmath>

namespace koop {

bool TransformMap::in_domain(const Vec& x) const {
    try {
        Vec y = forward(x);
        return finite(y);
    } catch (const ValidationError&) {
        return false;
    } catch (const NumericalError&) {
        return false;
    }
}

Mat TransformMap::jacobian(const Vec& x) const {
    const double h = 1e-6 * std::max(1.0, x.norm());
    Mat J(dim_out, dim_in);
    Vec xp = x, xm = x;
    for (int j = 0; j < dim_in; ++j) {
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        J.col(j) = (forward(xp) - forward(xm)) / (2 * h);
        xp[j] = x[j];
        xm[j] = x[j];
    }
    return J;
}

TransformMap identity_map(int dim) {
    TransformMap t;
    t.dim_in = t.dim_out = dim;
    t.forward = [](const Vec& x) { return x; };
    t.inverse = [](const Vec& y) { return y; };
    t.label = "identity";
    return t;
}

TransformMap make_transform(int dim, std::function<Vec(const Vec&)> forward,
                            std::function<Vec(const Vec&)> inverse, std::string label) {
    TransformMap t;
    t.dim_in = t.dim_out = dim;
    t.forward = std::move(forward);
    t.inverse = std::move(inverse);
    t.label = std::move(label);
    return t;
}

namespace {

double stack_residual(const EigenStack& g, const Vec& y, const CVec& z) {
    return (g.value(y) - z).norm();
}

Mat stack_re_jacobian(const EigenStack& g, const Vec& y) {
    const int d = g.dim();
    const double h = 1e-7 * std::max(1.0, y.norm());
    Mat J(d, d);
    Vec yp = y, ym = y;
    for (int j = 0; j < d; ++j) {
        yp[j] = y[j] + h;
        ym[j] = y[j] - h;
        CVec zp = g.value(yp), zm = g.value(ym);
        for (int i = 0; i < d; ++i) J(i, j) = (zp[i].real() - zm[i].real()) / (2 * h);
        yp[j] = y[j];
        ym[j] = y[j];
    }
    return J;
}

Vec newton_refine(const EigenStack& g, const CVec& z, Vec y, const MatchOptions& opts) {
    double res = stack_residual(g, y, z);
    for (int it = 0; it < opts.newton_max_iter; ++it) {
        if (res <= opts.newton_tol) return y;
        Mat J = stack_re_jacobian(g, y);
        Eigen::FullPivLU<Mat> lu(J);
        if (!lu.isInvertible())
            throw NumericalError("invert_stack: singular Jacobian at requested point");
        Vec r(g.dim());
        CVec gy = g.value(y);
        for (int i = 0; i < g.dim(); ++i) r[i] = gy[i].real() - z[i].real();
        Vec step = lu.solve(r);
        // Backtracking keeps the iterate inside the stack domain and the
        // residual decreasing.
        double alpha = 1.0;
        for (int bt = 0; bt < 25; ++bt) {
            Vec cand = y - alpha * step;
            if (g.domain(cand)) {
                try {
                    double cres = stack_residual(g, cand, z);
                    if (cres < res || cres <= opts.newton_tol) {
                        y = cand;
                        res = cres;
                        alpha = -1;
                        break;
                    }
                } catch (const std::exception&) {
                    // fall through to halving
                }
            }
            alpha *= 0.5;
        }
        if (alpha > 0)
            throw NumericalError("invert_stack: Newton stalled (point outside D(h,X))");
    }
    if (res <= opts.newton_tol * 10) return y;
    throw NumericalError("invert_stack: Newton did not converge (point outside D(h,X))");
}

}  // namespace

Vec invert_stack(const EigenStack& g, const CVec& z, const MatchOptions& opts) {
    if (g.closed_inverse) {
        Vec y = g.closed_inverse(z);
        if (!finite(y)) throw NumericalError("invert_stack: closed inverse non-finite");
        return y;
    }
    const int d = g.dim();
    Vec best;
    if (opts.guess.size() == d) {
        best = opts.guess;
    } else {
        Vec lo = opts.grid_lo.size() == d ? opts.grid_lo : Vec::Constant(d, -3.0);
        Vec hi = opts.grid_hi.size() == d ? opts.grid_hi : Vec::Constant(d, 3.0);
        const int m = std::max(2, opts.grid_per_dim);
        double best_res = std::numeric_limits<double>::infinity();
        std::vector<int> idx(d, 0);
        const long total = static_cast<long>(std::pow(m, d));
        for (long flat = 0; flat < total; ++flat) {
            long rem = flat;
            Vec y(d);
            for (int k = 0; k < d; ++k) {
                y[k] = lo[k] + (hi[k] - lo[k]) * (rem % m) / (m - 1);
                rem /= m;
            }
            if (!g.domain(y)) continue;
            try {
                double r = stack_residual(g, y, z);
                if (r < best_res) {
                    best_res = r;
                    best = y;
                }
            } catch (const std::exception&) {
            }
        }
        if (best.size() != d)
            throw NumericalError("invert_stack: no feasible multistart point in grid box");
    }
    return newton_refine(g, z, best, opts);
}

TransformMap build_match(const EigenStack& g1, const EigenStack& g2,
                         const MatchOptions& opts) {
    if (g1.dim() != g2.dim())
        throw ValidationError("build_match: stacks have different dimensions");
    const int d = g1.dim();
    for (int i = 0; i < d; ++i) {
        const Complex l1 = g1.entries[i].lambda, l2 = g2.entries[i].lambda;
        if (std::abs(l1 - l2) > opts.eig_tol)
            throw ValidationError("build_match: eigenvalue mismatch at entry " +
                                  std::to_string(i));
        if (std::abs(l1) == 0.0)
            throw ValidationError("build_match: zero eigenvalue at entry " + std::to_string(i));
    }

    TransformMap h;
    h.dim_in = h.dim_out = d;
    h.label = "match";
    h.forward = [g1, g2, opts, d](const Vec& x) {
        if (!g1.domain(x))
            throw ValidationError("match: point outside domain of G1");
        CVec z = g1.value(x);
        for (int i = 0; i < d; ++i)
            if (std::abs(z[i].imag()) > opts.imag_tol * (1 + std::abs(z[i].real())))
                throw ValidationError("match: G1 value leaves the real section (rejected)");
        Vec y = invert_stack(g2, z, opts);
        if ((g2.value(y) - z).norm() > opts.accept_tol)
            throw NumericalError("match: inversion residual violates domain honesty");
        return y;
    };
    h.inverse = [g1, g2, opts](const Vec& y) {
        if (!g2.domain(y))
            throw ValidationError("match inverse: point outside domain of G2");
        CVec z = g2.value(y);
        Vec x = invert_stack(g1, z, opts);
        if ((g1.value(x) - z).norm() > opts.accept_tol)
            throw NumericalError("match inverse: inversion residual too large");
        return x;
    };
    return h;
}

DefectResult conjugacy_defect(const TransformMap& h, const SystemSpec& sys1,
                              const SystemSpec& sys2, const std::vector<Vec>& samples,
                              double horizon, int steps) {
    if (steps < 1) throw ValidationError("conjugacy_defect: steps must be >= 1");
    DefectResult out;
    const double dt = horizon / steps;
    for (const Vec& x0 : samples) {
        if (!h.in_domain(x0)) {
            out.skipped += steps;
            continue;
        }
        Vec x = x0;
        Vec y = h.forward(x0);
        bool alive = true;
        for (int j = 1; j <= steps && alive; ++j) {
            try {
                x = flow(sys1, x, dt);
                y = flow(sys2, y, dt);
                if (!h.in_domain(x)) {
                    out.skipped += steps - j + 1;
                    alive = false;
                    break;
                }
                out.defect = std::max(out.defect, (h.forward(x) - y).norm());
                ++out.retained;
            } catch (const std::exception&) {
                out.skipped += steps - j + 1;
                alive = false;
            }
        }
    }
    if (out.retained == 0)
        throw NumericalError("conjugacy_defect: all samples exited the domain");
    return out;
}

Vec pushforward_field(const TransformMap& h, const SystemSpec& sys1, const Vec& y) {
    if (!h.has_inverse())
        throw ValidationError("pushforward_field: transform has no inverse");
    Vec x = h.inverse(y);
    Mat J = h.jacobian(x);
    return J * sys1.field(x);
}

TransformMap compose(const TransformMap& outer, const TransformMap& inner,
                     const std::vector<Vec>& check_samples) {
    if (!check_samples.empty()) {
        int hits = 0;
        for (const Vec& x : check_samples) {
            if (!inner.in_domain(x)) continue;
            Vec mid = inner.forward(x);
            if (outer.in_domain(mid)) ++hits;
        }
        if (hits == 0)
            throw ValidationError("compose: sampled intersection of range and domain is empty");
    }
    TransformMap t;
    t.dim_in = inner.dim_in;
    t.dim_out = outer.dim_out;
    t.label = outer.label + "." + inner.label;
    auto of = outer.forward, inf = inner.forward;
    t.forward = [of, inf](const Vec& x) { return of(inf(x)); };
    if (outer.has_inverse() && inner.has_inverse()) {
        auto oi = outer.inverse, ii = inner.inverse;
        t.inverse = [oi, ii](const Vec& y) { return ii(oi(y)); };
    }
    return t;
}

}  // namespace koop
