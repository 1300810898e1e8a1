#include "koopmatch/laplace.hpp"

#include <cmath>

namespace koop {

namespace {

Vec rk4_step(const std::function<Vec(const Vec&)>& f, const Vec& y, double h) {
    Vec k1 = f(y);
    Vec k2 = f(y + 0.5 * h * k1);
    Vec k3 = f(y + 0.5 * h * k2);
    Vec k4 = f(y + h * k3);
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
}

}  // namespace

Complex laplace_average(const LaplaceConfig& cfg, const SystemSpec& sys, const Vec& x) {
    if (!(cfg.horizon > 0) || !std::isfinite(cfg.horizon))
        throw ValidationError("laplace_average: horizon must be positive and finite");
    if (!(cfg.step > 0) || cfg.step >= cfg.horizon / 10)
        throw ValidationError("laplace_average: step must satisfy 0 < step < T/10");
    if (std::abs(cfg.lambda.real()) * cfg.horizon > 600.0)
        throw ValidationError("laplace_average: exp(-lambda t) would overflow on [0,T]");

    const double sign = cfg.direction == LaplaceConfig::Direction::backward ? -1.0 : 1.0;
    auto rhs = [&sys, sign](const Vec& y) { return Vec(sign * sys.field(y)); };

    int n = static_cast<int>(std::ceil(cfg.horizon / cfg.step));
    if (n % 2 == 1) ++n;  // composite Simpson needs an even interval count
    const double h = cfg.horizon / n;

    Vec y = x;
    Complex acc = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double t = k * h;
        const double fv = cfg.observable(y);
        if (!std::isfinite(fv) || y.lpNorm<Eigen::Infinity>() > 1e8)
            throw NumericalError("laplace_average: trajectory blow-up before T");
        const double weight = (k == 0 || k == n) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        acc += weight * fv * std::exp(-cfg.lambda * t);
        if (k < n) y = rk4_step(rhs, y, h);
    }
    return acc * (h / 3.0) / cfg.horizon;
}

namespace {

double abs_average(const LaplaceConfig& cfg, const SystemSpec& sys, const Vec& x) {
    return std::abs(laplace_average(cfg, sys, x));
}

Vec fd_grad2(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
    Vec g(2);
    g[0] = (f(vec2(x[0] + h, x[1])) - f(vec2(x[0] - h, x[1]))) / (2 * h);
    g[1] = (f(vec2(x[0], x[1] + h)) - f(vec2(x[0], x[1] - h))) / (2 * h);
    return g;
}

}  // namespace

LevelSet levelset_continuation(const LaplaceConfig& cfg, const SystemSpec& sys,
                               const Vec& x0, double step, int max_points) {
    if (sys.dim != 2) throw ValidationError("levelset_continuation: dimension must be 2");
    if (!(step > 0)) throw ValidationError("levelset_continuation: step must be positive");

    auto value = [&](const Vec& p) { return abs_average(cfg, sys, p); };
    const double c = value(x0);
    if (c <= 1e-12)
        throw ValidationError("levelset_continuation: |f*(x0)| vanishes (zero level)");
    const double grad_h = 1e-4 * std::max(1.0, x0.norm());

    LevelSet ls;
    ls.level = c;
    ls.points.push_back(x0);

    Vec prev_tangent = Vec::Zero(2);
    Vec p = x0;
    double h_step = step;
    while (static_cast<int>(ls.points.size()) < max_points) {
        Vec g = fd_grad2(value, p, grad_h);
        if (g.norm() < 1e-10)
            throw NumericalError("levelset_continuation: vanishing gradient of |f*|");
        Vec tangent = vec2(-g[1], g[0]) / g.norm();
        if (prev_tangent.norm() > 0 && tangent.dot(prev_tangent) < 0) tangent = -tangent;

        bool accepted = false;
        Vec next;
        while (!accepted) {
            next = p + h_step * tangent;
            bool ok = false;
            for (int it = 0; it < 25; ++it) {
                const double e = value(next) - c;
                if (std::abs(e) <= 1e-3 * c) {
                    ok = true;
                    break;
                }
                Vec gn = fd_grad2(value, next, grad_h);
                const double gn2 = gn.squaredNorm();
                if (gn2 < 1e-20) break;
                next -= (e / gn2) * gn;
            }
            if (ok) {
                accepted = true;
            } else {
                h_step *= 0.5;  // adapt on corrector failure
                if (h_step < 1e-5)
                    throw NumericalError("levelset_continuation: corrector divergence");
            }
        }
        prev_tangent = (next - p).normalized();
        p = next;
        ls.points.push_back(p);
        if (static_cast<int>(ls.points.size()) >= 10 && (p - x0).norm() < h_step / 2) {
            ls.closed = true;
            break;
        }
        h_step = std::min(step, h_step * 1.5);
    }
    return ls;
}

namespace {

struct NearestHit {
    double dist2;
    double arc;   // arc length of the projection point
    int segment;  // segment index
    Vec point;
    double side;  // sign of the cross product against the segment direction
};

NearestHit nearest_on_polyline(const std::vector<Vec>& pts, const std::vector<double>& arc,
                               const Vec& q) {
    NearestHit best{std::numeric_limits<double>::infinity(), 0.0, -1, Vec(), 0.0};
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const Vec& a = pts[i];
        const Vec& b = pts[i + 1];
        Vec ab = b - a;
        const double len2 = ab.squaredNorm();
        double t = len2 > 0 ? (q - a).dot(ab) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        Vec proj = a + t * ab;
        const double d2 = (q - proj).squaredNorm();
        if (d2 < best.dist2) {
            best.dist2 = d2;
            best.arc = arc[i] + t * std::sqrt(len2);
            best.segment = static_cast<int>(i);
            best.point = proj;
            best.side = ab[0] * (q[1] - a[1]) - ab[1] * (q[0] - a[0]);
        }
    }
    return best;
}

bool segments_intersect(const Vec& a, const Vec& b, const Vec& c, const Vec& d) {
    auto cross = [](const Vec& u, const Vec& v) { return u[0] * v[1] - u[1] * v[0]; };
    const double d1 = cross(Vec(b - a), Vec(c - a));
    const double d2 = cross(Vec(b - a), Vec(d - a));
    const double d3 = cross(Vec(d - c), Vec(a - c));
    const double d4 = cross(Vec(d - c), Vec(b - c));
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

bool point_in_polygon(const std::vector<Vec>& pts, const Vec& q) {
    bool inside = false;
    const std::size_t n = pts.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec& pi = pts[i];
        const Vec& pj = pts[j];
        if ((pi[1] > q[1]) != (pj[1] > q[1]) &&
            q[0] < (pj[0] - pi[0]) * (q[1] - pi[1]) / (pj[1] - pi[1]) + pi[0])
            inside = !inside;
    }
    return inside;
}

}  // namespace

InitialSurface surface_from_levelset(const LevelSet& ls,
                                     const std::vector<Complex>& g0_values) {
    if (ls.points.size() < 3)
        throw ValidationError("surface_from_levelset: degenerate polyline (< 3 vertices)");
    if (g0_values.size() != ls.points.size())
        throw ValidationError("surface_from_levelset: one g0 value per vertex required");

    std::vector<Vec> pts = ls.points;
    std::vector<Complex> vals = g0_values;
    if (ls.closed && (pts.front() - pts.back()).norm() > 1e-12) {
        pts.push_back(pts.front());
        vals.push_back(vals.front());
    }

    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        for (std::size_t j = i + 2; j + 1 < pts.size(); ++j) {
            if (ls.closed && i == 0 && j + 2 == pts.size()) continue;  // shared endpoint
            if (segments_intersect(pts[i], pts[i + 1], pts[j], pts[j + 1]))
                throw ValidationError("surface_from_levelset: polyline self-intersects");
        }

    std::vector<double> arc(pts.size(), 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i)
        arc[i] = arc[i - 1] + (pts[i] - pts[i - 1]).norm();
    const double total = arc.back();
    if (total <= 0)
        throw ValidationError("surface_from_levelset: zero-length polyline");

    const bool closed = ls.closed;
    InitialSurface surf;
    surf.dim = 2;
    surf.implicit = [pts, arc, closed](const Vec& q) {
        NearestHit hit = nearest_on_polyline(pts, arc, q);
        double d = std::sqrt(hit.dist2);
        if (closed) return point_in_polygon(pts, q) ? -d : d;
        return hit.side >= 0 ? d : -d;
    };
    surf.data = [pts, arc, vals](const Vec& q) {
        NearestHit hit = nearest_on_polyline(pts, arc, q);
        const int i = hit.segment;
        const double seg_len = arc[i + 1] - arc[i];
        const double t = seg_len > 0 ? (hit.arc - arc[i]) / seg_len : 0.0;
        return (1.0 - t) * vals[i] + t * vals[i + 1];
    };
    return surf;
}

}  // namespace koop
