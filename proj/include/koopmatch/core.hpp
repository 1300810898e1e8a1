#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace koop {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Complex = std::complex<double>;

// Bad input, configuration, or point outside a declared domain.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A numerical procedure failed to converge or produced non-finite values.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Per-point membership predicate; geometric sets are represented by the
// predicate only, no closed form is kept.
struct Domain {
    std::function<bool(const Vec&)> contains;
    std::string description;

    bool operator()(const Vec& x) const { return !contains || contains(x); }

    static Domain all(const std::string& desc = "R^d") {
        return Domain{nullptr, desc};
    }
    static Domain box(const Vec& lo, const Vec& hi) {
        return Domain{[lo, hi](const Vec& x) {
                          for (int i = 0; i < x.size(); ++i)
                              if (x[i] < lo[i] || x[i] > hi[i]) return false;
                          return true;
                      },
                      "box"};
    }
    static Domain predicate(std::function<bool(const Vec&)> p, const std::string& desc) {
        return Domain{std::move(p), desc};
    }
};

// Sparse polynomial in d variables: exponent tuple -> coefficient.
using Monomial = std::vector<int>;
using Poly = std::map<Monomial, double>;

inline Vec vec1(double x) {
    Vec v(1);
    v[0] = x;
    return v;
}
inline Vec vec2(double x, double y) {
    Vec v(2);
    v << x, y;
    return v;
}

inline bool finite(const Vec& v) { return v.allFinite(); }

}  // namespace koop
