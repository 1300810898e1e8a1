#include <doctest.h>

#include "koopmatch/catalog.hpp"
#include "koopmatch/dynsys.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace koop;

TEST_CASE("evaluate_field on catalog systems") {
    CHECK(evaluate_field(catalog::quad1d(), vec1(2.0))[0] == doctest::Approx(4.0));

    Vec f = evaluate_field(catalog::lindiag(3.0, -2.0), vec2(1.0, 1.0));
    CHECK(f[0] == doctest::Approx(3.0));
    CHECK(f[1] == doctest::Approx(-2.0));

    Vec v = evaluate_field(catalog::vdp(1.0), vec2(0.0, 0.0));
    CHECK(v.norm() == doctest::Approx(0.0));

    CHECK_THROWS_AS(evaluate_field(catalog::quad1d(), vec2(1.0, 2.0)), ValidationError);
    CHECK_THROWS_AS(evaluate_field(catalog::quad1d(), vec1(0.0)), ValidationError);
}

TEST_CASE("integrate matches closed-form flows") {
    const double tol = 1e-10;

    Trajectory t1 = integrate(catalog::quad1d(), vec1(1.0), 0.5, tol);
    CHECK(!t1.terminated_early);
    CHECK(t1.final_state()[0] == doctest::Approx(2.0).epsilon(1e-8));

    Trajectory t2 = integrate(catalog::lin1d(1.0), vec1(1.0), 1.0, tol);
    CHECK(t2.final_state()[0] == doctest::Approx(std::exp(1.0)).epsilon(1e-9));
}

TEST_CASE("integrate detects finite-time blow-up") {
    Trajectory t = integrate(catalog::quad1d(), vec1(1.0), 2.0, 1e-10);
    CHECK(t.terminated_early);
    CHECK(t.final_time() < 1.0);
    CHECK(t.final_time() > 0.9);
}

TEST_CASE("integrate validates inputs") {
    CHECK_THROWS_AS(integrate(catalog::lin1d(1.0), vec1(1.0), 1.0, -1.0), ValidationError);
    CHECK_THROWS_AS(integrate(catalog::lin1d(1.0), vec1(1e12), 1.0, 1e-10), ValidationError);
}

TEST_CASE("backward integration") {
    Vec x = flow(catalog::lin1d(1.0), vec1(1.0), -1.0);
    CHECK(x[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
}

TEST_CASE("semigroup property on catalog systems") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    for (const auto& sys : {catalog::vdp(1.0), catalog::lindiag(1.0, -0.5)}) {
        for (int i = 0; i < 10; ++i) {
            Vec x0 = vec2(u(rng), u(rng));
            Vec a = flow(sys, flow(sys, x0, 0.3), 0.4);
            Vec b = flow(sys, x0, 0.7);
            CHECK((a - b).norm() <= 1e-9);
        }
    }
}

TEST_CASE("analytic flows satisfy the field (central differences)") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    std::uniform_real_distribution<double> ut(0.01, 0.2);
    auto check_sys = [&](const SystemSpec& sys, auto make_point) {
        for (int i = 0; i < 100; ++i) {
            Vec x0 = make_point(rng);
            double t = ut(rng);
            const double h = 1e-5;
            Vec fwd = sys.analytic_flow(x0, t + h);
            Vec bwd = sys.analytic_flow(x0, t - h);
            Vec dot = (fwd - bwd) / (2 * h);
            Vec f = sys.field(sys.analytic_flow(x0, t));
            CHECK((dot - f).lpNorm<Eigen::Infinity>() <= 1e-6);
        }
    };
    check_sys(catalog::lindiag(1.0, -0.5),
              [&](auto& g) { return vec2(u(g), u(g)); });
    check_sys(catalog::quad2d(1.0, -0.5),
              [&](auto& g) { return vec2(0.5 * u(g), 0.5 * u(g)); });
    check_sys(catalog::appb1(),
              [&](auto& g) { return vec2(1.0 + 0.3 * u(g), 0.3 * u(g)); });
    check_sys(catalog::appb2(1.0, 2.0),
              [&](auto& g) { return vec2(1.0 + u(g), 1.0 + u(g)); });
    check_sys(catalog::quad1d(), [&](auto& g) { return vec1(0.5 + 0.4 * u(g)); });
}

TEST_CASE("vdp_transformed is the pushforward of vdp") {
    const double mu = 1.0, a = 1.2, b = -1.5;
    SystemSpec sys1 = catalog::vdp(mu);
    SystemSpec sys2 = catalog::vdp_transformed(mu, a, b);
    // Trajectories must commute with the componentwise transform h.
    Vec x0 = vec2(0.2, -0.3);
    Vec y0 = catalog::vdp_h(a, b, x0);
    Vec lhs = catalog::vdp_h(a, b, flow(sys1, x0, 0.8));
    Vec rhs = flow(sys2, y0, 0.8);
    CHECK((lhs - rhs).norm() <= 1e-7);
}

TEST_CASE("sample_pairs basics") {
    SystemSpec sys = catalog::vdp(1.0);
    Vec lo = vec2(-0.5, -0.5), hi = vec2(0.5, 0.5);

    SamplePairs zero_dt = sample_pairs(sys, lo, hi, 5, 0.0, 42);
    CHECK(zero_dt.count() == 5);
    CHECK((zero_dt.x - zero_dt.x_next).norm() == 0.0);

    SamplePairs empty = sample_pairs(sys, lo, hi, 0, 0.1, 42);
    CHECK(empty.count() == 0);
}

TEST_CASE("sample_pairs re-integration oracle") {
    SystemSpec sys = catalog::vdp(1.0);
    Vec lo = vec2(-0.5, -0.5), hi = vec2(0.5, 0.5);
    SamplePairs pairs = sample_pairs(sys, lo, hi, 100, 0.1, 3);
    REQUIRE(pairs.count() == 100);
    for (int i = 0; i < pairs.count(); ++i) {
        Vec xi = pairs.x.col(i);
        Vec re = flow(sys, xi, 0.1);
        CHECK((re - pairs.x_next.col(i)).norm() <= 1e-8);
    }
}

TEST_CASE("sample_pairs deterministic under fixed seed") {
    SystemSpec sys = catalog::lindiag(1.0, -1.0);
    Vec lo = vec2(-1, -1), hi = vec2(1, 1);
    SamplePairs a = sample_pairs(sys, lo, hi, 50, 0.05, 123);
    SamplePairs b = sample_pairs(sys, lo, hi, 50, 0.05, 123);
    CHECK((a.x - b.x).norm() == 0.0);
    CHECK((a.x_next - b.x_next).norm() == 0.0);
}

TEST_CASE("trajectory CSV export") {
    Trajectory t = integrate(catalog::lindiag(1.0, -1.0), vec2(1.0, 1.0), 0.1, 1e-10);
    std::ostringstream os;
    write_trajectory_csv(os, t);
    CHECK(os.str().substr(0, 8) == "t,x1,x2\n");
}
