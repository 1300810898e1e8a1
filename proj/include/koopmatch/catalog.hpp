#pragma once

#include "koopmatch/dynsys.hpp"

#include <json.hpp>

namespace koop {
namespace catalog {

// Catalog ids: quad1d, lin1d, lindiag, quad2d, rect1d, rect2d, vdp,
// vdp_transformed, appb1, appb2. Systems are addressable by string id plus a
// JSON parameter object.
SystemSpec make_system(const std::string& id, const nlohmann::json& params = {});

SystemSpec quad1d();
SystemSpec lin1d(double a);
SystemSpec linswap();  // F(x) = (x2, x1)
SystemSpec lindiag(double a1, double a2);
SystemSpec quad2d(double a1, double a2);
SystemSpec rect1d();
SystemSpec rect2d();
SystemSpec vdp(double mu);
SystemSpec vdp_transformed(double mu, double a, double b);
SystemSpec appb1();
SystemSpec appb2(double a, double b);

// The quadratic factorization pair of closed-form eigenfunctions and the
// inverse of the stacked map (x -> (g1, g2), y -> h^{-1}(y)).
double quad2d_g1(const Vec& x);
double quad2d_g2(const Vec& x);
Vec quad2d_hinv(const Vec& y);

// Componentwise coordinate change used by the transformed Van der Pol system:
// h_i(u) = ln(a + exp(b u)).
double vdp_h1(double a, double b, double u);
double vdp_h1_inv(double a, double b, double v);
double vdp_h1_prime(double a, double b, double u);
Vec vdp_h(double a, double b, const Vec& x);
Vec vdp_h_inv(double a, double b, const Vec& y);

}  // namespace catalog
}  // namespace koop
