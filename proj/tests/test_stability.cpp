#include <doctest.h>

#include <cmath>

#include "lyam/errors.hpp"
#include "lyam/stability.hpp"

using namespace lyam;

TEST_CASE("lyapunov_drift") {
    const auto p = make_problem(problem::ScaledSphere{}, 1);
    const Vector a{1.0}, b{0.5}, z{0.0};
    CHECK(lyapunov_drift(p, a, a) == 0.0);
    CHECK(lyapunov_drift(p, a, b) == doctest::Approx(-0.375).epsilon(1e-15));
    CHECK(lyapunov_drift(p, z, a) == doctest::Approx(0.5).epsilon(1e-15));
    const Vector huge{1e300};
    CHECK_THROWS_AS(lyapunov_drift(p, a, huge), NonFiniteValue);
}

TEST_CASE("drift_bound examples") {
    const Vector two{2.0}, eta{0.02};
    auto r = drift_bound(two, two, eta, 1.0);
    CHECK(r.descent_term == doctest::Approx(-0.08).epsilon(1e-14));
    CHECK(r.quad_term == doctest::Approx(0.0008).epsilon(1e-14));
    CHECK(r.bound == doctest::Approx(-0.0792).epsilon(1e-14));

    const Vector zero{0.0};
    r = drift_bound(two, zero, eta, 1.0);
    CHECK(r.descent_term == 0.0);
    CHECK(r.quad_term == 0.0);
    CHECK(r.bound == 0.0);

    const Vector g{1.0}, m{-1.0}, e{0.1};
    r = drift_bound(g, m, e, 2.0);
    CHECK(r.descent_term == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(r.quad_term == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(r.bound == doctest::Approx(0.11).epsilon(1e-14));

    const Vector g2{1.0, 2.0};
    CHECK_THROWS_AS(drift_bound(g2, m, e, 1.0), InvalidArgument);

    const auto full = complete_report(r, 0.11 + 5e-10);
    CHECK(full.bound_satisfied);
    CHECK_FALSE(complete_report(r, 0.11 + 2e-9).bound_satisfied);

    SUBCASE("displacement form agrees with the rescaled form") {
        const Vector gg{0.4, -1.2}, mh{1.0, -2.0}, et{0.1, 0.05};
        const Vector d{-0.1, 0.1};
        const auto a = drift_bound(gg, mh, et, 3.0);
        const auto b = drift_bound_for_displacement(gg, d, 3.0);
        CHECK(a.bound == doctest::Approx(b.bound).epsilon(1e-14));
        CHECK(a.quad_term == doctest::Approx(b.quad_term).epsilon(1e-14));
    }
}

TEST_CASE("estimate_lipschitz") {
    const auto unit = make_problem(problem::ScaledSphere{1.0}, 2);
    const auto five = make_problem(problem::ScaledSphere{5.0}, 1);
    for (std::uint64_t seed : {0u, 1u, 17u}) {
        CHECK(std::abs(estimate_lipschitz(unit, 16, Box::cube(2, -1, 1), seed) - 1.0) < 1e-9);
        CHECK(std::abs(estimate_lipschitz(five, 16, Box::cube(1, -1, 1), seed) - 5.0) < 1e-9);
    }
    const auto rosen = make_problem(problem::Rosenbrock{}, 2);
    CHECK(estimate_lipschitz(rosen, 10000, Box::cube(2, -2, 2), 3) >= 1000.0);

    CHECK_THROWS_AS(estimate_lipschitz(unit, 1, Box::cube(2, -1, 1), 0), InvalidArgument);
    Box flat = Box::cube(2, -1, 1);
    flat.upper[1] = flat.lower[1];
    CHECK_THROWS_AS(estimate_lipschitz(unit, 8, flat, 0), InvalidArgument);

    SUBCASE("nested sampling never shrinks") {
        const auto rast = make_problem(problem::Rastrigin{}, 3);
        double prev = 0.0;
        for (std::size_t n : {2u, 4u, 8u, 32u, 128u}) {
            const double l = estimate_lipschitz(rast, n, Box::cube(3, -1, 1), 9);
            CHECK(l >= prev);
            prev = l;
        }
    }
    SUBCASE("Hessian-free path on a hidden quadratic") {
        Problem hidden = make_problem(problem::ScaledSphere{2.0}, 4);
        hidden.hessian = nullptr;
        const double l = estimate_lipschitz(hidden, 8, Box::cube(4, -1, 1), 0);
        CHECK(l == doctest::Approx(2.0).epsilon(1e-6));
    }
}

TEST_CASE("check_lr_bound") {
    const Vector v0{0.0};
    CHECK(check_lr_bound(0.003, v0, 1.0, 0.5)[0]);
    CHECK_FALSE(check_lr_bound(3.0, v0, 4.0, 0.5)[0]);
    const Vector big{1e12};
    CHECK(check_lr_bound(1e6, big, 1.0, 0.5)[0]);
    const Vector mixed{0.0, 100.0};
    const auto r = check_lr_bound(2.0, mixed, 1.0, 0.5);
    CHECK_FALSE(r[0]);
    CHECK(r[1]);
    CHECK_FALSE(lr_bound_holds(2.0, mixed, 1.0));
    CHECK_THROWS_AS(check_lr_bound(1.0, v0, 0.0, 0.5), InvalidArgument);
    CHECK_THROWS_AS(check_lr_bound(1.0, v0, 1.0, 1.5), InvalidArgument);
}

TEST_CASE("classify_critical_point") {
    CHECK(classify_critical_point(Matrix::Identity(2, 2)).classification ==
          CriticalPointKind::Minimum);
    CHECK(classify_critical_point(Matrix{{1.0, 0.0}, {0.0, -1.0}}).classification ==
          CriticalPointKind::Saddle);
    CHECK(classify_critical_point(-Matrix::Identity(3, 3)).classification ==
          CriticalPointKind::Maximum);
    CHECK(classify_critical_point(Matrix{{1.0, 0.0}, {0.0, 0.0}}).classification ==
          CriticalPointKind::Degenerate);
    CHECK(classify_critical_point(Matrix{{1.0, 0.0}, {0.0, 1e-12}}).classification ==
          CriticalPointKind::Degenerate);

    const auto saddle = make_problem(problem::SaddleXY{}, 2);
    const Vector origin{0.0, 0.0};
    const auto c = classify_critical_point(saddle.hessian(origin));
    CHECK(c.classification == CriticalPointKind::Saddle);
    CHECK(c.eigenvalues == std::vector<double>{-2.0, 2.0});

    const auto rast = make_problem(problem::Rastrigin{}, 2);
    CHECK(classify_critical_point(rast.hessian(origin)).classification ==
          CriticalPointKind::Minimum);

    CHECK_THROWS_AS(classify_critical_point(Matrix{{1.0, 2.0}, {0.0, 1.0}}), InvalidArgument);
    CHECK_THROWS_AS(classify_critical_point(Matrix(2, 3)), InvalidArgument);
    CHECK(to_string(CriticalPointKind::Saddle) == "saddle");
}

TEST_CASE("drift bound holds on quadratics for every optimizer") {
    Philox rng(4);
    const std::vector<double> eig = {0.0, 0.3, 1.0, 2.0};
    problem::Quadratic q;
    q.a = random_symmetric(eig, rng);
    const auto prob = make_problem(q, 4);
    const double ls = prob.smoothness.value();
    for (OptimizerKind kind : all_optimizer_kinds()) {
        CAPTURE(to_string(kind));
        HyperParams h;
        h.eta0 = 0.1;
        Vector theta{1.0, -2.0, 0.5, 1.5};
        MomentState s = init_state(4);
        for (int t = 0; t < 200; ++t) {
            const Vector g = prob.gradient(theta);
            const auto out = optimizer_step(kind, theta, s, g, h);
            Vector d(4);
            for (std::size_t i = 0; i < 4; ++i) d[i] = out.new_params[i] - theta[i];
            const auto partial = out.decay_factor == 1.0
                                     ? drift_bound(g, out.m_hat, out.eta, ls)
                                     : drift_bound_for_displacement(g, d, ls);
            const auto r = complete_report(partial, lyapunov_drift(prob, theta, out.new_params));
            CHECK(r.bound_satisfied);
            theta = out.new_params;
            s = out.new_state;
        }
    }
}
