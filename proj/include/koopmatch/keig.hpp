#pragma once

#include "koopmatch/dynsys.hpp"

#include <json.hpp>

namespace koop {

enum class Provenance { closed_form, quadrature_1d, characteristics, edmd_reconstructed };

// A Koopman eigenpair (lambda, g) with grad g . F = lambda g on its domain.
struct Eigenfunction {
    Complex lambda;
    std::function<Complex(const Vec&)> eval;
    Domain domain = Domain::all();
    Provenance provenance = Provenance::closed_form;

    Complex operator()(const Vec& x) const { return eval(x); }
};

// Codimension-one initial set Sigma = {implicit == 0} carrying initial data
// g0 for the method of characteristics.
struct InitialSurface {
    int dim = 2;
    std::function<double(const Vec&)> implicit;
    std::function<Complex(const Vec&)> data;  // g0 on Sigma
    bool transversality_check = true;
};

// exp(int_{x_ref}^{x} lambda/F(s) ds), normalized so g(x_ref) = 1. Throws if F
// vanishes or changes sign on the path.
Complex keig_1d_quadrature(const SystemSpec& sys, Complex lambda, double x_ref, double x);
Eigenfunction make_quadrature_keig(const SystemSpec& sys, Complex lambda, double x_ref);

struct CharacteristicsResult {
    Complex value;
    Vec sigma;  // crossing point on Sigma
    double s;   // time from Sigma to the query point along the flow
};

CharacteristicsResult keig_characteristics(const SystemSpec& sys, Complex lambda,
                                           const InitialSurface& surface, const Vec& x,
                                           double t_max = 50.0);
Eigenfunction make_characteristics_keig(const SystemSpec& sys, Complex lambda,
                                        const InitialSurface& surface, double t_max = 50.0);

// max over points of |grad g . F - lambda g| with central finite differences.
double keig_residual(const SystemSpec& sys, const Eigenfunction& g,
                     const std::vector<Vec>& points);

// A d-vector of eigenfunctions with an optional closed-form inverse of the
// stacked map z = G(y).
struct EigenStack {
    std::vector<Eigenfunction> entries;
    std::function<Vec(const CVec&)> closed_inverse;  // may be empty
    Domain domain = Domain::all();

    int dim() const { return static_cast<int>(entries.size()); }
    CVec eigenvalues() const;
    CVec value(const Vec& x) const;
};

// Closed-form stacks for the catalog systems. Recognized ids: quad1d, lin1d,
// rect1d, quad2d, lindiag, rect2d, appb1, appb2.
EigenStack catalog_eigenstack(const std::string& system_id,
                              const nlohmann::json& params = {});

}  // namespace koop
