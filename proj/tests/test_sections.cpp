#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cbp/sections.hpp"

using namespace cbp;

namespace {

Direction direction_from(std::initializer_list<double> seed) {
    std::vector<double> v(seed);
    double len = norm2(v);
    for (auto& c : v) c /= len;
    return make_direction(v);
}

SphereRule section_rule(const Direction& xi, size_t count = size_t{1} << 13,
                        uint64_t seed = 424242) {
    return make_subsphere_rule(xi.h_basis, count, seed);
}

}  // namespace

TEST_CASE("section measure of the ball recovers disk and 4-ball slices") {
    const auto xi = direction_from({1.0, 0.0, 0.0, 0.0});
    const auto rule = section_rule(xi);

    const auto ball = make_ball(2);
    const auto one = make_constant_density(2);
    // constant integrand over directions: only fp noise survives
    CHECK(section_measure_direct(ball, one, xi, rule) == Catch::Approx(pi).epsilon(1e-10));

    const double R = 1.3;
    const auto ballR = make_ball(2, R);
    const auto gauss = make_gaussian_density(2, 0.5);  // exp(-|x|^2)
    const double expect = pi * (1.0 - std::exp(-R * R));
    CHECK(section_measure_direct(ballR, gauss, xi, rule) == Catch::Approx(expect).epsilon(1e-8));
}

TEST_CASE("section measure of the 6-dim ball matches the 4-ball volume") {
    const auto xi = direction_from({0.0, 1.0, 0.0, 0.0, 0.0, 0.0});
    const auto rule = section_rule(xi);
    const auto v = section_measure_direct(make_ball(3), make_constant_density(3), xi, rule);
    CHECK(v == Catch::Approx(0.5 * pi * pi).epsilon(1e-10));
}

TEST_CASE("body measure matches closed forms on balls") {
    const auto rule = make_moduli_rule(2, size_t{1} << 13, 99421);

    const auto est = body_measure_estimate(make_ball(2), make_constant_density(2), rule);
    const double vol4 = 0.5 * pi * pi;
    CHECK(std::abs(est.value - vol4) < 6.0 * est.sigma + 2e-3 * vol4);

    const double R = 1.1;
    const auto gauss = make_gaussian_density(2, 0.5);
    const auto estg = body_measure_estimate(make_ball(2, R), gauss, rule);
    const double expg = pi * pi * (1.0 - std::exp(-R * R) * (1.0 + R * R));
    CHECK(std::abs(estg.value - expg) < 6.0 * estg.sigma + 2e-3 * expg);
}

TEST_CASE("body measure is monotone under inclusion") {
    const auto rule = make_moduli_rule(2, 4096, 7);
    const auto f = make_gaussian_density(2);
    // the l4 ball contains the euclidean ball: radial 1 vs (sum sigma^4)^{-1/4} >= 1
    const double inner = body_measure(make_ball(2), f, rule);
    const double outer = body_measure(make_lq_body(2, 4.0), f, rule);
    CHECK(inner < outer);
}

TEST_CASE("moduli-rule body measure rejects densities with orbit variation") {
    const auto rule = make_moduli_rule(2, 1024, 7);
    CHECK_THROWS_AS(body_measure(make_ball(2), make_phase_coupling_density(2), rule),
                    std::invalid_argument);
}

TEST_CASE("sphere-rule body measure handles orbit-varying densities") {
    const auto rule = make_sphere_rule(4, size_t{1} << 13, 3311);
    const auto est = body_measure_estimate(make_ball(2), make_phase_coupling_density(2), rule);
    // int over S^3 of (x0 x2 + x1 x3)^2 is |S^3|/12; radial factor 1/8
    const double expect = pi * pi / 48.0;
    CHECK(std::abs(est.value - expect) < 6.0 * est.sigma + 2e-3 * expect);
}

TEST_CASE("measures agree with the circle-averaged density on invariant bodies") {
    const auto body = make_lq_body(2, 4.0);
    const auto raw = Density(2, "abs_first", [](std::span<const double> x) {
        return std::abs(x[0]);
    });
    const auto avg = circle_average(raw, 256);
    const auto avg_closed = make_moduli_density(2, "abs_first_avg",
                                                [](std::span<const double> r) {
        return (2.0 / pi) * r[0];
    });

    const auto sr = make_sphere_rule(4, size_t{1} << 13, 515);
    const auto a = body_measure_estimate(body, raw, sr);
    const auto b = body_measure_estimate(body, avg, sr);
    CHECK(std::abs(a.value - b.value) < 6.0 * (a.sigma + b.sigma) + 1e-3 * b.value);

    // closed-form average through the moduli route ties all three paths
    const auto mr = make_moduli_rule(2, size_t{1} << 13, 515);
    const auto c = body_measure_estimate(body, avg_closed, mr);
    CHECK(std::abs(a.value - c.value) < 6.0 * (a.sigma + c.sigma) + 5e-3 * c.value);

    // same statement for a section: the section subspace is orbit-invariant
    const auto xi = direction_from({1.0, 2.0, -1.0, 0.5});
    const auto rule = section_rule(xi);
    const auto sa = section_measure_estimate(body, raw, xi, rule);
    const auto sb = section_measure_estimate(body, avg, xi, rule);
    CHECK(std::abs(sa.value - sb.value) < 6.0 * (sa.sigma + sb.sigma) + 1e-3 * sb.value);
}

TEST_CASE("section measure is invariant under orbit rotation of the direction") {
    const auto body = make_lq_body(2, 4.0);
    const auto f = make_moduli_density(2, "bump", [](std::span<const double> r) {
        return 1.0 + 0.5 * r[0] * r[0];
    });
    const auto xi = direction_from({0.3, -1.0, 0.7, 0.4});
    std::vector<double> rotated = xi.xi;
    rotate_diagonal(rotated, 0.7);
    const auto xi2 = make_direction(rotated);

    const auto a = section_measure_estimate(body, f, xi, section_rule(xi));
    const auto b = section_measure_estimate(body, f, xi2, section_rule(xi2));
    CHECK(std::abs(a.value - b.value) < 3.0 * (a.sigma + b.sigma) + 1e-9 * a.value);
}

TEST_CASE("parallel sections of the ball are disks of the reduced radius") {
    const auto xi = direction_from({0.0, 0.0, 1.0, 0.0});
    const auto rule = section_rule(xi);
    const auto ball = make_ball(2);
    const auto one = make_constant_density(2);

    CHECK(parallel_section_function(ball, one, xi, {0.6, 0.0}, rule) ==
          Catch::Approx(pi * (1.0 - 0.36)).epsilon(1e-8));
    CHECK(parallel_section_function(ball, one, xi, {0.3, -0.4}, rule) ==
          Catch::Approx(pi * 0.75).epsilon(1e-8));
    CHECK(parallel_section_function(ball, one, xi, {2.0, 0.0}, rule) == 0.0);
    CHECK(parallel_section_function(make_lq_body(2, 4.0), one, xi, {1.5, 1.3}, rule) == 0.0);
}

TEST_CASE("parallel section at zero offset equals the direct section measure") {
    const auto body = make_lq_body(2, 4.0);
    const auto f = make_gaussian_density(2);
    const auto xi = direction_from({0.8, 0.1, -0.4, 0.6});
    const auto rule = section_rule(xi);
    const double at0 = parallel_section_function(body, f, xi, {0.0, 0.0}, rule);
    const double direct = section_measure_direct(body, f, xi, rule);
    CHECK(at0 == Catch::Approx(direct).epsilon(1e-6));
}

TEST_CASE("parallel sections are dominated by the circumscribed ball") {
    const auto body = make_lq_body(2, 4.0);
    const double rmax = max_radius(body);
    CHECK(rmax == Catch::Approx(std::pow(2.0, 0.25)).epsilon(1e-12));
    const auto cap = make_ball(2, rmax);
    const auto f = make_gaussian_density(2);
    const auto xi = direction_from({1.0, -0.5, 0.25, 0.9});
    const auto rule = section_rule(xi, size_t{1} << 12);

    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0, 1.15}) {
        for (auto u : {std::pair{t, 0.0}, std::pair{t * 0.6, -t * 0.8}}) {
            const double a = parallel_section_function(body, f, xi, {u.first, u.second}, rule);
            const double b = parallel_section_function(cap, f, xi, {u.first, u.second}, rule);
            CHECK(a <= b + 1e-8 * (1.0 + b));
        }
    }
}

TEST_CASE("max radius is exact on grid-aligned extrema") {
    CHECK(max_radius(make_ball(2)) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(max_radius(make_ball(3, 0.7)) == Catch::Approx(0.7).epsilon(1e-14));
    CHECK(max_radius(make_lq_body(2, 1.0)) == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(max_radius(make_lq_body(3, 4.0)) == Catch::Approx(std::pow(3.0, 0.25)).epsilon(1e-12));
}

namespace {

FtContext& section_ctx42() {
    static FtOptions opts = [] {
        FtOptions o;
        o.npsi = 96;
        o.slice_points = 2048;
        o.seed = 0x5ec42;
        return o;
    }();
    static FtContext ctx(4, 2.0, opts);
    return ctx;
}

}  // namespace

TEST_CASE("fourier section measure recovers the disk area") {
    const auto xi = direction_from({1.0, 0.0, 0.0, 0.0});
    const auto r = section_measure_fourier(make_ball(2), make_constant_density(2), xi,
                                           section_ctx42());
    CHECK(r.converged);
    CHECK(std::abs(r.value - pi) < 6.0 * (r.batch_sigma + r.tail_resid) + 1e-6 * pi);
}

TEST_CASE("fourier section measure recovers the 4-ball volume in six dimensions") {
    FtOptions opts;
    opts.npsi = 96;
    opts.slice_points = 2048;
    opts.seed = 0x5ec64;
    FtContext ctx(6, 4.0, opts);
    const auto xi = direction_from({0.0, 0.0, 1.0, 0.0, 0.0, 0.0});
    const auto r = section_measure_fourier(make_ball(3), make_constant_density(3), xi, ctx);
    CHECK(r.converged);
    const double expect = 0.5 * pi * pi;
    CHECK(std::abs(r.value - expect) < 6.0 * (r.batch_sigma + r.tail_resid) + 1e-5 * expect);
}

TEST_CASE("fourier and direct section measures agree across random scenes") {
    uint64_t rng = 0xfaceb00c;
    auto unit = [&](int N) {
        std::vector<double> v(static_cast<size_t>(N));
        for (auto& c : v) c = normal_quantile(uniform01(rng));
        double len = norm2(v);
        for (auto& c : v) c /= len;
        return v;
    };

    int worst_idx = -1;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        StarBody body;
        switch (trial % 4) {
            case 0: body = make_ball(2, 0.8 + 0.5 * uniform01(rng)); break;
            case 1: body = make_lq_body(2, 4.0); break;
            case 2: body = make_lq_body(2, 6.0); break;
            default: body = make_lq_body(2, 2.0); break;
        }
        Density f;
        switch (trial % 3) {
            case 0: f = make_constant_density(2); break;
            case 1: f = make_gaussian_density(2, 0.5 + 1.5 * uniform01(rng)); break;
            default:
                f = make_moduli_density(2, "quad", [](std::span<const double> r) {
                    return 1.0 + 0.5 * r[0] * r[0];
                });
                break;
        }
        const auto xi = make_direction(unit(4));
        const auto direct = section_measure_direct(body, f, xi, section_rule(xi, 4096));
        const auto four = section_measure_fourier(body, f, xi, section_ctx42());
        const double rel = std::abs(four.value - direct) / direct;
        if (rel > worst) {
            worst = rel;
            worst_idx = trial;
        }
    }
    INFO("worst trial " << worst_idx << " rel " << worst);
    CHECK(worst <= 1e-2);
}

TEST_CASE("fourier section measure validates the context degree") {
    FtOptions opts;
    opts.npsi = 16;
    opts.slice_points = 512;
    FtContext ctx43(4, 3.0, opts);
    const auto xi = direction_from({1.0, 0.0, 0.0, 0.0});
    CHECK_THROWS_AS(
        section_measure_fourier(make_ball(2), make_constant_density(2), xi, ctx43),
        std::invalid_argument);
}

TEST_CASE("section measure rejects mismatched rules") {
    const auto xi = direction_from({1.0, 0.0, 0.0, 0.0});
    const auto one = make_constant_density(2);
    const auto full = make_sphere_rule(4, 1024, 1);
    CHECK_THROWS_AS(section_measure_direct(make_ball(2), one, xi, full),
                    std::invalid_argument);
    const auto other = direction_from({0.0, 1.0, 1.0, 0.0});
    CHECK_THROWS_AS(section_measure_direct(make_ball(2), one, xi, section_rule(other)),
                    std::invalid_argument);
    CHECK_THROWS_AS(radial_moment(make_ball(2), one, 0, std::vector<double>{1, 0, 0, 0}),
                    std::invalid_argument);
}

TEST_CASE("radial comparison inequality matches its frozen example") {
    const StepFunction flat({2.0}, {1.0});
    const auto [lhs, rhs] = elementary_inequality_gap(1.0, 2.0, flat, 2);
    CHECK(lhs == Catch::Approx(-0.25).margin(1e-14));
    CHECK(rhs == Catch::Approx(2.0).margin(1e-14));

    const auto [l2, r2] = elementary_inequality_gap(1.3, 1.3, flat, 3);
    CHECK(l2 == r2);

    // mass supported strictly between a and b leaves the left side at zero
    const StepFunction window({1.0, 2.0}, {0.0, 1.7});
    const auto [l3, r3] = elementary_inequality_gap(1.0, 2.0, window, 2);
    CHECK(l3 == 0.0);
    CHECK(r3 >= 0.0);
}

TEST_CASE("radial comparison inequality holds on randomized step functions") {
    uint64_t rng = 0xabcdef12;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + static_cast<int>(splitmix64(rng) % 4);
        const double a = 0.05 + 2.45 * uniform01(rng);
        const double b = 0.05 + 2.45 * uniform01(rng);
        const int pieces = 1 + static_cast<int>(splitmix64(rng) % 6);
        std::vector<double> knots, values;
        double t = 0.0;
        for (int i = 0; i < pieces; ++i) {
            t += 0.05 + uniform01(rng);
            knots.push_back(t);
            values.push_back(2.0 * uniform01(rng));
        }
        const auto [lhs, rhs] = elementary_inequality_gap(a, b, StepFunction(knots, values), n);
        REQUIRE(lhs <= rhs + 1e-12 * std::max(1.0, std::abs(lhs) + std::abs(rhs)));
    }
}

TEST_CASE("step functions and inequality inputs are validated") {
    CHECK_THROWS_AS(StepFunction({1.0}, {-0.5}), std::invalid_argument);
    CHECK_THROWS_AS(StepFunction({1.0, 0.5}, {1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(StepFunction({}, {}), std::invalid_argument);
    const StepFunction ok({1.0}, {1.0});
    CHECK_THROWS_AS(elementary_inequality_gap(0.0, 1.0, ok, 2), std::invalid_argument);
    CHECK_THROWS_AS(elementary_inequality_gap(1.0, 1.0, ok, 1), std::invalid_argument);
}
