#include "koopmatch/keig.hpp"

#include "koopmatch/catalog.hpp"

#include <cmath>

namespace koop {

namespace {

// Adaptive Simpson for a real integrand.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
    const double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
    const double diff = left + right - whole;
    if (depth <= 0) throw NumericalError("adaptive quadrature: max depth reached");
    if (std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1);
}

double integrate_1d(const std::function<double(double)>& f, double a, double b, double tol) {
    if (a == b) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return adaptive_simpson(f, a, b, fa, fm, fb, tol, 48);
}

}  // namespace

Complex keig_1d_quadrature(const SystemSpec& sys, Complex lambda, double x_ref, double x) {
    if (sys.dim != 1) throw ValidationError("keig_1d_quadrature: system must be 1-dimensional");
    if (!sys.domain(vec1(x_ref)))
        throw ValidationError("keig_1d_quadrature: x_ref outside system domain");

    const double lo = std::min(x_ref, x), hi = std::max(x_ref, x);
    // F must not vanish or change sign on the closed path.
    const double f_ref = sys.field(vec1(x_ref))[0];
    const int scan = 64;
    for (int i = 0; i <= scan; ++i) {
        const double s = lo + (hi - lo) * i / scan;
        const double fs = sys.field(vec1(s))[0];
        if (std::abs(fs) < 1e-12 || fs * f_ref < 0)
            throw ValidationError("keig_1d_quadrature: F vanishes on the integration path");
    }
    auto inv_f = [&sys](double s) { return 1.0 / sys.field(vec1(s))[0]; };
    const double integral = integrate_1d(inv_f, x_ref, x, 1e-13);
    return std::exp(lambda * integral);
}

Eigenfunction make_quadrature_keig(const SystemSpec& sys, Complex lambda, double x_ref) {
    Eigenfunction g;
    g.lambda = lambda;
    g.provenance = Provenance::quadrature_1d;
    g.domain = sys.domain;
    g.eval = [sys, lambda, x_ref](const Vec& x) {
        return keig_1d_quadrature(sys, lambda, x_ref, x[0]);
    };
    return g;
}

namespace {

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x) {
    const double h = 1e-6 * std::max(1.0, x.norm());
    Vec g(x.size());
    Vec xp = x, xm = x;
    for (int i = 0; i < x.size(); ++i) {
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        g[i] = (f(xp) - f(xm)) / (2 * h);
        xp[i] = x[i];
        xm[i] = x[i];
    }
    return g;
}

// Locate the first sign change of surface.implicit along the trajectory of
// dz/dt = dir*F starting at x, refine by bisection to |implicit| <= 1e-10.
struct Crossing {
    bool found = false;
    double travel = 0.0;  // time traveled from x (nonnegative)
    Vec point;
};

Crossing march_to_surface(const SystemSpec& sys, const InitialSurface& surface,
                          const Vec& x, double t_max, double dir) {
    SystemSpec marched = sys;
    if (dir < 0) {
        auto base = sys.field;
        marched.field = [base](const Vec& z) { return Vec(-base(z)); };
    }
    Crossing result;
    const double phi0 = surface.implicit(x);
    Trajectory traj = integrate(marched, x, t_max, 1e-11);
    double prev_phi = phi0;
    for (std::size_t k = 1; k < traj.states.size(); ++k) {
        const double phi = surface.implicit(traj.states[k]);
        if (prev_phi * phi <= 0.0 && (prev_phi != 0.0 || phi != 0.0)) {
            // Bisect inside [t_{k-1}, t_k].
            double ta = traj.times[k - 1], tb = traj.times[k];
            Vec za = traj.states[k - 1];
            double fa = prev_phi;
            for (int it = 0; it < 200; ++it) {
                const double tm = 0.5 * (ta + tb);
                Vec zm = flow(marched, za, tm - ta, 1e-12);
                const double fm = surface.implicit(zm);
                if (std::abs(fm) <= 1e-10 || tb - ta < 1e-14 * (1 + std::abs(tb))) {
                    result.found = true;
                    result.travel = tm;
                    result.point = zm;
                    return result;
                }
                if (fa * fm <= 0) {
                    tb = tm;
                } else {
                    ta = tm;
                    za = zm;
                    fa = fm;
                }
            }
            throw NumericalError("keig_characteristics: bisection failed to converge");
        }
        prev_phi = phi;
    }
    return result;
}

}  // namespace

CharacteristicsResult keig_characteristics(const SystemSpec& sys, Complex lambda,
                                           const InitialSurface& surface, const Vec& x,
                                           double t_max) {
    if (x.size() != sys.dim) throw ValidationError("keig_characteristics: dimension mismatch");

    CharacteristicsResult res;
    const double phi_x = surface.implicit(x);
    if (std::abs(phi_x) <= 1e-10) {
        res.sigma = x;
        res.s = 0.0;
        res.value = surface.data(x);
        return res;
    }

    // Travel backward first (the common case: x downstream of Sigma), then
    // forward. s is the time from Sigma to x, so a forward travel of tau
    // yields s = -tau.
    Crossing back = march_to_surface(sys, surface, x, t_max, -1.0);
    Crossing fwd;
    if (!back.found) fwd = march_to_surface(sys, surface, x, t_max, +1.0);
    const Crossing& hit = back.found ? back : fwd;
    if (!hit.found)
        throw NumericalError("keig_characteristics: no crossing of Sigma within t_max=" +
                             std::to_string(t_max));
    const double s = back.found ? hit.travel : -hit.travel;

    if (surface.transversality_check) {
        Vec grad = fd_gradient(surface.implicit, hit.point);
        const double trans = std::abs(grad.dot(sys.field(hit.point)));
        if (trans < 1e-8 * (1 + grad.norm()))
            throw NumericalError("keig_characteristics: tangential crossing of Sigma");
    }

    res.sigma = hit.point;
    res.s = s;
    res.value = surface.data(hit.point) * std::exp(lambda * s);
    return res;
}

Eigenfunction make_characteristics_keig(const SystemSpec& sys, Complex lambda,
                                        const InitialSurface& surface, double t_max) {
    Eigenfunction g;
    g.lambda = lambda;
    g.provenance = Provenance::characteristics;
    g.domain = sys.domain;
    g.eval = [sys, lambda, surface, t_max](const Vec& x) {
        return keig_characteristics(sys, lambda, surface, x, t_max).value;
    };
    return g;
}

double keig_residual(const SystemSpec& sys, const Eigenfunction& g,
                     const std::vector<Vec>& points) {
    double worst = 0.0;
    for (const Vec& x : points) {
        if (!sys.domain(x) || !g.domain(x))
            throw ValidationError("keig_residual: point outside domain");
        const double h = 1e-6 * std::max(1.0, x.norm());
        Vec xp = x, xm = x;
        for (int i = 0; i < x.size(); ++i) {
            xp[i] = x[i] + h;
            xm[i] = x[i] - h;
            if (!sys.domain(xp) || !g.domain(xp) || !sys.domain(xm) || !g.domain(xm))
                throw ValidationError("keig_residual: FD stencil leaves the domain");
            xp[i] = x[i];
            xm[i] = x[i];
        }
        CVec grad(x.size());
        for (int i = 0; i < x.size(); ++i) {
            xp[i] = x[i] + h;
            xm[i] = x[i] - h;
            grad[i] = (g.eval(xp) - g.eval(xm)) / (2 * h);
            xp[i] = x[i];
            xm[i] = x[i];
        }
        const Vec f = sys.field(x);
        Complex dot = 0.0;
        for (int i = 0; i < x.size(); ++i) dot += grad[i] * f[i];
        worst = std::max(worst, std::abs(dot - g.lambda * g.eval(x)));
    }
    return worst;
}

CVec EigenStack::eigenvalues() const {
    CVec v(dim());
    for (int i = 0; i < dim(); ++i) v[i] = entries[i].lambda;
    return v;
}

CVec EigenStack::value(const Vec& x) const {
    CVec v(dim());
    for (int i = 0; i < dim(); ++i) v[i] = entries[i].eval(x);
    return v;
}

namespace {

double jparam(const nlohmann::json& p, const std::string& key, double fallback) {
    if (p.contains(key)) return p.at(key).get<double>();
    return fallback;
}

Eigenfunction closed(Complex lambda, std::function<Complex(const Vec&)> f, Domain dom) {
    Eigenfunction g;
    g.lambda = lambda;
    g.eval = std::move(f);
    g.domain = std::move(dom);
    g.provenance = Provenance::closed_form;
    return g;
}

double real_or_throw(Complex z, const char* what) {
    if (std::abs(z.imag()) > 1e-9 * (1 + std::abs(z.real())))
        throw ValidationError(std::string("inverse: ") + what + " has nonzero imaginary part");
    return z.real();
}

// q choices for the rect2d stack; different invertible q give different
// rectifying homeomorphisms.
struct QFunction {
    std::function<double(double)> q;      // q(y2)
    std::function<double(double)> q_inv;  // q^{-1}(u)
    std::function<bool(double)> q_domain;
};

QFunction make_q(const std::string& name) {
    if (name == "identity")
        return {[](double v) { return v; }, [](double u) { return u; },
                [](double) { return true; }};
    if (name == "log10exp")
        // q^{-1}(u) = ln(10 + exp(-u)); hence q(v) = -ln(exp(v) - 10), v > ln 10.
        return {[](double v) {
                    if (std::exp(v) <= 10.0)
                        throw ValidationError("rect2d q: exp(y2) must exceed 10");
                    return -std::log(std::exp(v) - 10.0);
                },
                [](double u) { return std::log(10.0 + std::exp(-u)); },
                [](double v) { return std::exp(v) > 10.0; }};
    throw ValidationError("catalog_eigenstack: unknown q function '" + name + "'");
}

EigenStack appb2_stack(double a, double b, Complex l1, Complex l2, const std::string& g0) {
    auto rho2 = [a, b](const Vec& z) {
        return z[0] * z[0] + std::pow(std::abs(z[1]), 2 * a / b);
    };
    auto entry = [&](Complex lam) {
        return closed(
            lam,
            [a, b, lam, g0, rho2](const Vec& z) -> Complex {
                const double r2 = rho2(z);
                Complex base = std::pow(Complex(r2, 0), lam / (2 * a));
                if (g0 == "one") return base;
                // g0(x,y) = x evaluated at the Sigma point of the characteristic.
                return base * (z[0] / std::sqrt(r2));
            },
            Domain::predicate([rho2](const Vec& z) { return rho2(z) > 0; }, "R^2 \\ {0}"));
    };
    EigenStack st;
    st.entries = {entry(l1), entry(l2)};
    st.domain = st.entries[0].domain;
    if (g0 == "x") {
        // z_i = x * rho^{lambda_i/a - 1}; invert on the y >= 0 branch.
        const double lr1 = l1.real(), lr2 = l2.real();
        st.closed_inverse = [a, b, lr1, lr2](const CVec& z) {
            const double z1 = real_or_throw(z[0], "z1");
            const double z2 = real_or_throw(z[1], "z2");
            if (z1 == 0.0) throw ValidationError("appb2 inverse: z1 must be nonzero");
            const double ratio = z2 / z1;
            if (ratio <= 0.0) throw ValidationError("appb2 inverse: z2/z1 must be positive");
            const double rho = std::pow(ratio, a / (lr2 - lr1));
            const double x = z1 / std::pow(rho, lr1 / a - 1.0);
            double rem = rho * rho - x * x;
            if (rem < -1e-9) throw ValidationError("appb2 inverse: point outside range");
            rem = std::max(rem, 0.0);
            const double y = std::pow(rem, b / (2 * a));
            return vec2(x, y);
        };
    }
    return st;
}

}  // namespace

EigenStack catalog_eigenstack(const std::string& system_id, const nlohmann::json& params) {
    if (system_id == "quad2d") {
        const double a1 = jparam(params, "a1", 1.0), a2 = jparam(params, "a2", -0.5);
        EigenStack st;
        st.entries = {
            closed(a1, [](const Vec& x) { return Complex(catalog::quad2d_g1(x), 0); },
                   Domain::all("R^2")),
            closed(a2, [](const Vec& x) { return Complex(catalog::quad2d_g2(x), 0); },
                   Domain::all("R^2"))};
        st.closed_inverse = [](const CVec& z) {
            return catalog::quad2d_hinv(
                vec2(real_or_throw(z[0], "z1"), real_or_throw(z[1], "z2")));
        };
        return st;
    }
    if (system_id == "lindiag") {
        const double a1 = jparam(params, "a1", 1.0), a2 = jparam(params, "a2", -0.5);
        EigenStack st;
        st.entries = {closed(a1, [](const Vec& y) { return Complex(y[0], 0); }, Domain::all()),
                      closed(a2, [](const Vec& y) { return Complex(y[1], 0); }, Domain::all())};
        st.closed_inverse = [](const CVec& z) {
            return vec2(real_or_throw(z[0], "z1"), real_or_throw(z[1], "z2"));
        };
        return st;
    }
    if (system_id == "rect2d") {
        const double l1 = jparam(params, "lambda1", 1.0);
        const double l2 = jparam(params, "lambda2", 2.0);
        if (l1 == l2)
            throw ValidationError("rect2d stack requires lambda1 != lambda2");
        QFunction qf = make_q(params.value("q", "identity"));
        EigenStack st;
        auto dom = Domain::predicate([qf](const Vec& y) { return qf.q_domain(y[1]); },
                                     "q domain in y2");
        auto entry = [&](double lam) {
            return closed(
                lam,
                [lam, qf](const Vec& y) {
                    return Complex(std::exp(lam * y[0] + qf.q(y[1])), 0);
                },
                dom);
        };
        st.entries = {entry(l1), entry(l2)};
        st.domain = dom;
        st.closed_inverse = [l1, l2, qf](const CVec& z) {
            const double z1 = real_or_throw(z[0], "z1");
            const double z2 = real_or_throw(z[1], "z2");
            if (z1 <= 0 || z2 <= 0)
                throw ValidationError("rect2d inverse: requires positive components");
            const double y1 = (std::log(z1) - std::log(z2)) / (l1 - l2);
            const double arg = (l1 * std::log(z2) - l2 * std::log(z1)) / (l1 - l2);
            return vec2(y1, qf.q_inv(arg));
        };
        return st;
    }
    if (system_id == "quad1d") {
        const double lam = jparam(params, "lambda", 1.0);
        EigenStack st;
        st.entries = {closed(
            lam, [lam](const Vec& x) { return std::exp(Complex(-lam / x[0], 0)); },
            Domain::predicate([](const Vec& x) { return x[0] > 0; }, "R+"))};
        st.domain = st.entries[0].domain;
        st.closed_inverse = [lam](const CVec& z) {
            const double zr = real_or_throw(z[0], "z");
            if (zr <= 0 || zr >= 1)
                throw ValidationError("quad1d inverse: z must lie in (0,1) on the R+ branch");
            return vec1(-lam / std::log(zr));
        };
        return st;
    }
    if (system_id == "lin1d") {
        const double a = jparam(params, "a", 1.0);
        const double lam = jparam(params, "lambda", a);
        EigenStack st;
        if (lam == a) {
            st.entries = {closed(lam, [](const Vec& y) { return Complex(y[0], 0); },
                                 Domain::all("R"))};
            st.closed_inverse = [](const CVec& z) { return vec1(real_or_throw(z[0], "z")); };
        } else {
            const double c = lam / a;
            st.entries = {closed(
                lam, [c](const Vec& y) { return std::pow(Complex(y[0], 0), c); },
                Domain::predicate([](const Vec& y) { return y[0] > 0; }, "R+"))};
            st.domain = st.entries[0].domain;
            st.closed_inverse = [c](const CVec& z) {
                const double zr = real_or_throw(z[0], "z");
                if (zr <= 0) throw ValidationError("lin1d inverse: z must be positive");
                return vec1(std::pow(zr, 1.0 / c));
            };
        }
        return st;
    }
    if (system_id == "rect1d") {
        const double lam = jparam(params, "lambda", 1.0);
        EigenStack st;
        st.entries = {closed(
            lam, [lam](const Vec& y) { return std::exp(Complex(lam * y[0], 0)); },
            Domain::all("R"))};
        st.closed_inverse = [lam](const CVec& z) {
            const double zr = real_or_throw(z[0], "z");
            if (zr <= 0) throw ValidationError("rect1d inverse: z must be positive");
            return vec1(std::log(zr) / lam);
        };
        return st;
    }
    if (system_id == "appb1") {
        const double lam = jparam(params, "lambda", 1.0);
        EigenStack st;
        st.entries = {closed(
            lam,
            [lam](const Vec& z) {
                // e^{G0(x^2/y) + lambda (y-x)/y} with G0 = 0.
                return std::exp(Complex(lam * (z[1] - z[0]) / z[1], 0));
            },
            Domain::predicate([](const Vec& z) { return z[0] != 0 && z[1] != 0; },
                              "x,y != 0"))};
        st.domain = st.entries[0].domain;
        return st;
    }
    if (system_id == "appb2") {
        const double a = jparam(params, "a", 1.0), b = jparam(params, "b", 2.0);
        return appb2_stack(a, b, jparam(params, "lambda1", 1.0),
                           jparam(params, "lambda2", 2.0), params.value("g0", "one"));
    }
    throw ValidationError("catalog_eigenstack: unknown id '" + system_id + "'");
}

}  // namespace koop
