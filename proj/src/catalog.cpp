#include "koopmatch/catalog.hpp"

#include <cmath>

namespace koop {
namespace catalog {

namespace {

double param(const nlohmann::json& p, const std::string& key, double fallback) {
    if (p.contains(key)) return p.at(key).get<double>();
    return fallback;
}

Poly mono(std::vector<int> exps, double c) { return Poly{{std::move(exps), c}}; }

}  // namespace

double quad2d_g1(const Vec& x) { return x[0] - x[1] * x[1]; }

double quad2d_g2(const Vec& x) {
    const double x1 = x[0], x2 = x[1];
    return -x1 * x1 + x2 + 2 * x1 * x2 * x2 - x2 * x2 * x2 * x2;
}

Vec quad2d_hinv(const Vec& y) {
    const double y1 = y[0], y2 = y[1];
    return vec2(y1 + y1 * y1 * y1 * y1 + 2 * y1 * y1 * y2 + y2 * y2, y1 * y1 + y2);
}

double vdp_h1(double a, double b, double u) { return std::log(a + std::exp(b * u)); }

double vdp_h1_inv(double a, double b, double v) {
    const double w = std::exp(v) - a;
    if (w <= 0) throw ValidationError("vdp_h1_inv: exp(v) - a must be positive");
    return std::log(w) / b;
}

double vdp_h1_prime(double a, double b, double u) {
    const double e = std::exp(b * u);
    return b * e / (a + e);
}

Vec vdp_h(double a, double b, const Vec& x) {
    Vec y(x.size());
    for (int i = 0; i < x.size(); ++i) y[i] = vdp_h1(a, b, x[i]);
    return y;
}

Vec vdp_h_inv(double a, double b, const Vec& y) {
    Vec x(y.size());
    for (int i = 0; i < y.size(); ++i) x[i] = vdp_h1_inv(a, b, y[i]);
    return x;
}

SystemSpec quad1d() {
    SystemSpec s;
    s.id = "quad1d";
    s.dim = 1;
    s.field = [](const Vec& x) { return vec1(x[0] * x[0]); };
    // Flow has a movable singularity at t* = 1/x0.
    s.analytic_flow = [](const Vec& x0, double t) { return vec1(x0[0] / (1 - x0[0] * t)); };
    s.domain = Domain::predicate([](const Vec& x) { return x[0] != 0.0; }, "R \\ {0}");
    s.polynomial = {mono({2}, 1.0)};
    return s;
}

SystemSpec lin1d(double a) {
    SystemSpec s;
    s.id = "lin1d";
    s.dim = 1;
    s.params = {{"a", a}};
    s.field = [a](const Vec& x) { return vec1(a * x[0]); };
    s.analytic_flow = [a](const Vec& x0, double t) { return vec1(std::exp(a * t) * x0[0]); };
    s.polynomial = {mono({1}, a)};
    return s;
}

SystemSpec linswap() {
    SystemSpec s;
    s.id = "linswap";
    s.dim = 2;
    s.field = [](const Vec& x) { return vec2(x[1], x[0]); };
    s.analytic_flow = [](const Vec& x0, double t) {
        const double c = std::cosh(t), sh = std::sinh(t);
        return vec2(c * x0[0] + sh * x0[1], sh * x0[0] + c * x0[1]);
    };
    s.polynomial = {mono({0, 1}, 1.0), mono({1, 0}, 1.0)};
    return s;
}

SystemSpec lindiag(double a1, double a2) {
    SystemSpec s;
    s.id = "lindiag";
    s.dim = 2;
    s.params = {{"a1", a1}, {"a2", a2}};
    s.field = [a1, a2](const Vec& x) { return vec2(a1 * x[0], a2 * x[1]); };
    s.analytic_flow = [a1, a2](const Vec& x0, double t) {
        return vec2(std::exp(a1 * t) * x0[0], std::exp(a2 * t) * x0[1]);
    };
    s.polynomial = {mono({1, 0}, a1), mono({0, 1}, a2)};
    return s;
}

SystemSpec quad2d(double a1, double a2) {
    SystemSpec s;
    s.id = "quad2d";
    s.dim = 2;
    s.params = {{"a1", a1}, {"a2", a2}};
    s.field = [a1, a2](const Vec& x) {
        const double x1 = x[0], x2 = x[1];
        const double p = x1 * x1 - x2 - 2 * x1 * x2 * x2 + x2 * x2 * x2 * x2;
        const double f1 = -2 * a2 * x2 * p +
                          a1 * (x1 + 4 * x1 * x1 * x2 - x2 * x2 -
                                8 * x1 * x2 * x2 * x2 + 4 * std::pow(x2, 5));
        const double f2 = 2 * a1 * (x1 - x2 * x2) * (x1 - x2 * x2) - a2 * p;
        return vec2(f1, f2);
    };
    // Conjugate to diag(a1,a2) through (g1,g2); the flow transports through it.
    s.analytic_flow = [a1, a2](const Vec& x0, double t) {
        const double y1 = std::exp(a1 * t) * quad2d_g1(x0);
        const double y2 = std::exp(a2 * t) * quad2d_g2(x0);
        return quad2d_hinv(vec2(y1, y2));
    };
    // f1 = a1*(x1 + 4 x1^2 x2 - x2^2 - 8 x1 x2^3 + 4 x2^5)
    //      + a2*(-2 x1^2 x2 + 2 x2^2 + 4 x1 x2^3 - 2 x2^5)
    Poly f1 = {{{1, 0}, a1},
               {{2, 1}, 4 * a1 - 2 * a2},
               {{0, 2}, -a1 + 2 * a2},
               {{1, 3}, -8 * a1 + 4 * a2},
               {{0, 5}, 4 * a1 - 2 * a2}};
    // f2 = 2 a1 (x1 - x2^2)^2 - a2 (x1^2 - x2 - 2 x1 x2^2 + x2^4)
    Poly f2 = {{{2, 0}, 2 * a1 - a2},
               {{1, 2}, -4 * a1 + 2 * a2},
               {{0, 4}, 2 * a1 - a2},
               {{0, 1}, a2}};
    s.polynomial = {f1, f2};
    return s;
}

SystemSpec rect1d() {
    SystemSpec s;
    s.id = "rect1d";
    s.dim = 1;
    s.field = [](const Vec&) { return vec1(1.0); };
    s.analytic_flow = [](const Vec& x0, double t) { return vec1(x0[0] + t); };
    s.polynomial = {mono({0}, 1.0)};
    return s;
}

SystemSpec rect2d() {
    SystemSpec s;
    s.id = "rect2d";
    s.dim = 2;
    s.field = [](const Vec&) { return vec2(1.0, 0.0); };
    s.analytic_flow = [](const Vec& x0, double t) { return vec2(x0[0] + t, x0[1]); };
    s.polynomial = {mono({0, 0}, 1.0), Poly{}};
    return s;
}

SystemSpec vdp(double mu) {
    SystemSpec s;
    s.id = "vdp";
    s.dim = 2;
    s.params = {{"mu", mu}};
    // Inverted-stability oscillator: attracting steady state at the origin,
    // repelling limit cycle.
    s.field = [mu](const Vec& x) {
        return vec2(-x[1], x[0] - mu * (1 - x[0] * x[0]) * x[1]);
    };
    s.polynomial = {mono({0, 1}, -1.0),
                    Poly{{{1, 0}, 1.0}, {{0, 1}, -mu}, {{2, 1}, mu}}};
    return s;
}

SystemSpec vdp_transformed(double mu, double a, double b) {
    if (a <= 0 || b == 0)
        throw ValidationError("vdp_transformed: requires a > 0 and b != 0");
    SystemSpec s;
    s.id = "vdp_transformed";
    s.dim = 2;
    s.params = {{"mu", mu}, {"a", a}, {"b", b}};
    SystemSpec base = vdp(mu);
    // Pushforward of the vdp field under the componentwise map h:
    // ydot = Dh(h^{-1}(y)) F(h^{-1}(y)).
    s.field = [base, a, b](const Vec& y) {
        Vec x = vdp_h_inv(a, b, y);
        Vec f = base.field(x);
        Vec out(2);
        for (int i = 0; i < 2; ++i) out[i] = vdp_h1_prime(a, b, x[i]) * f[i];
        return out;
    };
    s.domain = Domain::predicate(
        [a](const Vec& y) {
            return std::exp(y[0]) > a && std::exp(y[1]) > a;
        },
        "componentwise exp(y_i) > a");
    return s;
}

SystemSpec appb1() {
    SystemSpec s;
    s.id = "appb1";
    s.dim = 2;
    s.field = [](const Vec& z) { return vec2(z[1], 2 * z[1] * z[1] / z[0]); };
    s.analytic_flow = [](const Vec& z0, double t) {
        const double x0 = z0[0], y0 = z0[1];
        const double den = x0 - t * y0;
        return vec2(x0 * x0 / den, x0 * x0 * y0 / (den * den));
    };
    s.domain = Domain::predicate([](const Vec& z) { return z[0] != 0.0; }, "x != 0");
    return s;
}

SystemSpec appb2(double a, double b) {
    SystemSpec s;
    s.id = "appb2";
    s.dim = 2;
    s.params = {{"a", a}, {"b", b}};
    s.field = [a, b](const Vec& z) { return vec2(a * z[0], b * z[1]); };
    s.analytic_flow = [a, b](const Vec& z0, double t) {
        return vec2(std::exp(a * t) * z0[0], std::exp(b * t) * z0[1]);
    };
    s.polynomial = {mono({1, 0}, a), mono({0, 1}, b)};
    return s;
}

SystemSpec make_system(const std::string& id, const nlohmann::json& params) {
    if (id == "quad1d") return quad1d();
    if (id == "lin1d") return lin1d(param(params, "a", 1.0));
    if (id == "linswap") return linswap();
    if (id == "lindiag") return lindiag(param(params, "a1", 1.0), param(params, "a2", -0.5));
    if (id == "quad2d") return quad2d(param(params, "a1", 1.0), param(params, "a2", -0.5));
    if (id == "rect1d") return rect1d();
    if (id == "rect2d") return rect2d();
    if (id == "vdp") return vdp(param(params, "mu", 1.0));
    if (id == "vdp_transformed")
        return vdp_transformed(param(params, "mu", 1.0), param(params, "a", 1.2),
                               param(params, "b", -1.5));
    if (id == "appb1") return appb1();
    if (id == "appb2") return appb2(param(params, "a", 1.0), param(params, "b", 2.0));
    throw ValidationError("make_system: unknown catalog id '" + id + "'");
}

}  // namespace catalog
}  // namespace koop
