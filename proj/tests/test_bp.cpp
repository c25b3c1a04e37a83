#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cbp/busemann_petty.hpp"

using namespace cbp;

namespace {

const FtContext& bp_ctx42() {
    static FtContext ctx(4, 2.0, FtOptions{96, size_t{1} << 11, 8, 0x5ecbb442});
    return ctx;
}

const FtContext& bp_ctx82() {
    static FtContext ctx(8, 2.0, FtOptions{128, size_t{1} << 12, 8, 0x5ecbb482});
    return ctx;
}

// scan report assembled by hand to pin down the filtering rules
PdReport synthetic_negative_report() {
    PdReport rep;
    rep.verdict = PdVerdict::negative;
    rep.complete = true;
    auto add = [&](std::vector<double> t, double v, double s, double r) {
        PdPoint p;
        p.t = std::move(t);
        p.value = v;
        p.sigma = s;
        p.resid = r;
        p.converged = true;
        rep.points.push_back(std::move(p));
    };
    add({1.0, 0.0}, -10.0, 0.1, 0.1);
    add({0.5, 0.5}, 3.0, 0.1, 0.0);
    add({0.75, 0.25}, -0.5, 0.2, 0.0);
    rep.min_t = {0.9, 0.1};  // refinement winner, absent from the base list
    rep.min_value = -12.0;
    rep.min_sigma = 0.1;
    rep.min_resid = 0.0;
    rep.evaluated = 4;
    return rep;
}

// constant g equal to the transform of the constant profile 1 on |x|^{-2}
// in dimension four, so every downstream identity has a closed form
HomogeneousFunction flat_transform(double c) {
    HomogeneousFunction g;
    g.N = 4;
    g.p = 2.0;
    g.name = "flat";
    g.sphere = [c](std::span<const double>) { return 4.0 * pi * pi * c; };
    return g;
}

}  // namespace

TEST_CASE("bump stays nonnegative, peaks at its center, and vanishes off support") {
    const BumpFunction bump(ModuliPoint({1.0, 0.0}), 0.3, 1.0);

    CHECK(bump.value_at_moduli(std::vector<double>{1.0, 0.0}) == 1.0);
    CHECK(bump.value_at_moduli(std::vector<double>{0.0, 1.0}) == 0.0);

    uint64_t rng = 20260821;
    double max_seen = 0.0;
    for (int i = 0; i < 10000; ++i) {
        std::vector<double> x(4);
        double len = 0.0;
        while (len == 0.0) {
            for (auto& v : x) v = normal_quantile(uniform01(rng));
            len = norm2(x);
        }
        for (auto& v : x) v /= len;
        const double val = bump(x);
        REQUIRE(val >= 0.0);
        REQUIRE(val <= 1.0);
        max_seen = std::max(max_seen, val);
    }
    CHECK(max_seen > 0.1);

    // the value reads the moduli only, so phases never matter
    const auto x0 = canonical_lift(std::vector<double>{0.96, 0.28});
    auto spun = x0;
    rotate_diagonal(spun, 0.9);
    CHECK(bump(spun) == Catch::Approx(bump(x0)).margin(1e-12));
}

TEST_CASE("bump is smooth through the support boundary") {
    const BumpFunction bump(ModuliPoint({1.0, 0.0}), 0.3, 1.0);
    const auto e1 = canonical_lift(std::vector<double>{1.0, 0.0});
    const auto e2 = canonical_lift(std::vector<double>{0.0, 1.0});

    // fourth differences along a great circle crossing the support edge
    const double s = 0.015;
    auto h = [&](double phi) {
        std::vector<double> x(4);
        for (size_t k = 0; k < 4; ++k) x[k] = std::cos(phi) * e1[k] + std::sin(phi) * e2[k];
        return bump(x);
    };
    double worst = 0.0;
    for (double phi = -0.6; phi <= 0.6; phi += 0.01) {
        const double d4 = (h(phi - 2 * s) - 4 * h(phi - s) + 6 * h(phi) - 4 * h(phi + s) +
                           h(phi + 2 * s)) /
                          (s * s * s * s);
        worst = std::max(worst, std::abs(d4));
    }
    CHECK(worst < 5e5);   // bounded through the edge: no jump in low derivatives
    CHECK(worst > 1e-3);  // and the probe actually crossed the bump
}

TEST_CASE("bump construction rejects widths touching a vanishing modulus") {
    CHECK_THROWS_AS(BumpFunction(ModuliPoint({0.6, 0.8}), 0.7, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(BumpFunction(ModuliPoint({1.0, 0.0}), 0.0, 1.0), std::invalid_argument);
    CHECK_NOTHROW(BumpFunction(ModuliPoint({1.0, 0.0}), 0.3, 0.0));
}

TEST_CASE("negative region filters certified points and keeps the refinement witness") {
    const auto rep = synthetic_negative_report();
    const auto region = find_negative_region(rep);

    REQUIRE(region.scanned.size() == 4);  // witness appended to the base scan
    CHECK(region.n == 2);
    CHECK(region.negative_count() == 2);
    CHECK(region.negative[0] == 1);   // -10 beats -5 * 0.2
    CHECK(region.negative[1] == 0);   // positive value
    CHECK(region.negative[2] == 0);   // -0.5 inside the noise band
    CHECK(region.negative[3] == 1);   // appended witness
    CHECK(region.witness == 3);
    CHECK(region.moduli_of(3)[0] == Catch::Approx(std::sqrt(0.9)));
    CHECK_FALSE(region.resolution_failure);

    // a wider margin can empty the region even when the verdict is negative
    const auto none = find_negative_region(rep, 1000.0);
    CHECK(none.resolution_failure);
    CHECK(none.negative_count() == 0);

    PdReport pos = rep;
    pos.verdict = PdVerdict::nonnegative;
    CHECK_THROWS_AS(find_negative_region(pos), std::domain_error);
}

TEST_CASE("bump construction shrinks the width until the support clears the grid") {
    const auto region = find_negative_region(synthetic_negative_report());
    const auto bump = build_bump(region);

    // nearest nonnegative point sits 0.20 away, so one shrink step suffices
    CHECK(bump.width == Catch::Approx(0.125));
    CHECK(bump.center.r[0] == Catch::Approx(std::sqrt(0.9)));
    CHECK(bump.center.r[1] == Catch::Approx(std::sqrt(0.1)));
    CHECK(bump.value_at_moduli(region.moduli_of(1)) == 0.0);
    CHECK(bump.value_at_moduli(region.moduli_of(2)) == 0.0);
    CHECK(bump.value_at_moduli(bump.center.r) == 1.0);

    BumpWidthPolicy stubborn;
    stubborn.initial = 0.25;
    stubborn.shrink = 0.95;
    stubborn.max_tries = 3;
    CHECK_THROWS_AS(build_bump(region, stubborn), std::runtime_error);

    NegativeRegion empty;
    empty.n = 2;
    CHECK_THROWS_AS(build_bump(empty), std::invalid_argument);
}

TEST_CASE("bump transform tabulates an invariant even function of the right degree") {
    const BumpFunction bump(ModuliPoint({1.0, 0.0}), 0.3, 1.0);
    const auto gt = bump_transform(bp_ctx42(), bump, 33);

    CHECK(gt.g.N == 4);
    CHECK(gt.g.p == Catch::Approx(2.0));
    CHECK(gt.converged);
    CHECK(gt.scale > 0.0);
    CHECK(gt.nodes == 33);

    const auto x = canonical_lift(std::vector<double>{0.8, 0.6});
    std::vector<double> neg(4);
    for (size_t k = 0; k < 4; ++k) neg[k] = -x[k];
    CHECK(gt.g.sphere(neg) == Catch::Approx(gt.g.sphere(x)).margin(1e-14));
    auto spun = x;
    rotate_diagonal(spun, 1.3);
    CHECK(gt.g.sphere(spun) ==
          Catch::Approx(gt.g.sphere(x)).margin(5.0 * gt.node_error + 1e-10));

    // transforming back lands on (2 pi)^4 times the bump at its peak
    const double back = bp_ctx42().transform(gt.g, canonical_lift(bump.center.r)).value;
    const double expect = detail::ipow(2.0 * pi, 4);
    CHECK(back == Catch::Approx(expect).epsilon(0.05));
}

TEST_CASE("transform of the zero bump is zero within engine noise") {
    const BumpFunction zero(ModuliPoint({1.0, 0.0}), 0.3, 0.0);
    const auto gt = bump_transform(bp_ctx42(), zero, 17);
    CHECK(gt.scale <= 5.0 * gt.node_error + 1e-12);
    const auto x = canonical_lift(std::vector<double>{0.6, 0.8});
    CHECK(std::abs(gt.g.sphere(x)) <= 5.0 * gt.node_error + 1e-12);
}

TEST_CASE("perturbed body solves the defining equation in closed form") {
    const auto L = make_ball(2);
    const auto one = make_constant_density(2);
    const double eps = 1e-3;
    const auto P = perturb_body(L, one, flat_transform(1.0), eps);

    // rho_K^2 / 2 = 1/2 - eps * 4 pi^2 everywhere
    const double rho = std::sqrt(1.0 - 8.0 * pi * pi * eps);
    for (double a : {0.0, 0.3, 0.7, 1.2}) {
        const std::vector<double> sigma{std::cos(a), std::sin(a)};
        std::vector<double> s(sigma);
        for (auto& v : s) v = std::abs(v);
        const double len = norm2(s);
        for (auto& v : s) v /= len;
        CHECK(P.K.radial_sigma(s) == Catch::Approx(rho).margin(1e-9));
    }
    CHECK(P.rhs_min == Catch::Approx(0.5 - 4.0 * pi * pi * eps).margin(1e-12));
    CHECK(P.convexity.convex);

    // the section gap equals (2 pi)^3 eps exactly for the flat profile
    const auto xi = make_direction(canonical_lift(std::vector<double>{1.0, 0.0}));
    const auto rule = make_subsphere_rule(xi.h_basis, size_t{1} << 10, 77001);
    const double gap = section_measure_direct(L, one, xi, rule) -
                       section_measure_direct(P.K, one, xi, rule);
    CHECK(gap == Catch::Approx(detail::ipow(2.0 * pi, 3) * eps).margin(1e-8));
}

TEST_CASE("zero perturbation returns the body unchanged") {
    const auto L = make_lq_body(2, 4.0);
    const auto one = make_constant_density(2);
    const auto P = perturb_body(L, one, flat_transform(1.0), 0.0);
    for (double a : {0.1, 0.5, 0.9, 1.4}) {
        std::vector<double> s{std::cos(a), std::sin(a)};
        CHECK(P.K.radial_sigma(s) == Catch::Approx(L.radial_sigma(s)).margin(1e-9));
    }
}

TEST_CASE("larger epsilon shrinks the body where g is positive") {
    const auto L = make_ball(2);
    const auto one = make_constant_density(2);
    const auto g = flat_transform(1.0);
    const auto P1 = perturb_body(L, one, g, 1e-3);
    const auto P2 = perturb_body(L, one, g, 2e-3);
    for (double a : {0.2, 0.8, 1.3}) {
        std::vector<double> s{std::cos(a), std::sin(a)};
        CHECK(P2.K.radial_sigma(s) < P1.K.radial_sigma(s));
    }
}

TEST_CASE("negative g grows the body and exercises the expanding bracket") {
    const auto L = make_ball(2);
    const auto one = make_constant_density(2);
    const double eps = 1e-3;
    const auto P = perturb_body(L, one, flat_transform(-1.0), eps);
    const double rho = std::sqrt(1.0 + 8.0 * pi * pi * eps);
    std::vector<double> s{1.0, 0.0};
    CHECK(P.K.radial_sigma(s) == Catch::Approx(rho).margin(1e-8));
}

TEST_CASE("oversized epsilon is rejected at the defining equation") {
    const auto L = make_ball(2);
    const auto one = make_constant_density(2);
    CHECK_THROWS_AS(perturb_body(L, one, flat_transform(1.0), 0.02), std::domain_error);
}

TEST_CASE("perturbation validates dimensions and the density representation") {
    const auto L = make_ball(2);
    const auto phases = make_phase_coupling_density(2);
    CHECK_THROWS_AS(perturb_body(L, phases, flat_transform(1.0), 1e-3), std::invalid_argument);

    auto wrong_degree = flat_transform(1.0);
    wrong_degree.p = 3.0;
    CHECK_THROWS_AS(perturb_body(L, make_constant_density(2), wrong_degree, 1e-3),
                    std::invalid_argument);
}

TEST_CASE("convexity margins are exact on the ball and positive on lq bodies") {
    const auto ball_rep = convexity_check(make_ball(2), 16, 1234);
    CHECK(ball_rep.convex);
    CHECK(ball_rep.worst_margin == Catch::Approx(1.0).margin(1e-10));

    const auto lq_rep = convexity_check(make_lq_body(2, 4.0), 16, 1234);
    CHECK(lq_rep.convex);
    CHECK(lq_rep.worst_margin > 0.05);

    const auto lq3_rep = convexity_check(make_lq_body(3, 4.0), 24, 99);
    CHECK(lq3_rep.convex);
}

TEST_CASE("convexity check flags an oscillating radial profile") {
    // amplitude 0.8 on the paired-axis plane leaves margin -0.6 at the valley
    const StarBody wiggle(
        2, "wiggle",
        [](std::span<const double> s) {
            const double m = s[0] * s[1];
            return 1.0 + 0.8 * m * m;
        },
        true);
    const auto rep = convexity_check(wiggle, 8, 777);
    CHECK_FALSE(rep.convex);
    CHECK(rep.worst_margin < -0.3);
    CHECK(rep.worst_plane == 0);  // the deterministic paired-axis plane catches it

    const auto lax = convexity_check(wiggle, 8, 777, 1.0);
    CHECK(lax.convex);  // same margins, wider tolerance
}

TEST_CASE("epsilon selection halves into the feasible range and probes back") {
    const auto L = make_ball(2);
    const auto one = make_constant_density(2);

    // feasibility boundary: eps < 1/(8 pi^2) ~ 0.01267
    const auto choice = select_epsilon(L, one, flat_transform(1.0));
    CHECK(choice.epsilon == Catch::Approx(0.0125));
    CHECK(choice.halvings == 2);
    CHECK(choice.trials == 4);  // two failures, the success, one failed probe
    CHECK(choice.result.rhs_min ==
          Catch::Approx(0.5 - 4.0 * pi * pi * 0.0125).margin(1e-12));
    CHECK(choice.result.convexity.convex);

    // zero g never fails, so the initial value is kept and K stays L
    HomogeneousFunction zero;
    zero.N = 4;
    zero.p = 2.0;
    zero.sphere = [](std::span<const double>) { return 0.0; };
    const auto flat = select_epsilon(L, one, zero);
    CHECK(flat.epsilon == Catch::Approx(0.05));
    CHECK(flat.trials == 1);
    CHECK(flat.halvings == 0);
    std::vector<double> s{0.6, 0.8};
    CHECK(flat.result.K.radial_sigma(s) == Catch::Approx(1.0).margin(1e-9));

    // a hopeless g runs into the floor
    CHECK_THROWS_AS(select_epsilon(L, one, flat_transform(1e9)), std::runtime_error);
}

TEST_CASE("counterexample run rejects dimensions and exponents off the negative regime") {
    const CounterexampleOptions cfg;
    CHECK_THROWS_AS(run_counterexample(2, 4.0, make_constant_density(2), cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(run_counterexample(3, 4.0, make_constant_density(3), cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(run_counterexample(4, 2.0, make_constant_density(4), cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(run_counterexample(4, 4.0, make_phase_coupling_density(4), cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(run_counterexample(4, 4.0, make_constant_density(3), cfg),
                    std::invalid_argument);
}

TEST_CASE("affirmative scan validates its regime") {
    CHECK_THROWS_AS(run_affirmative_scan(4, {make_ball(4)}, {make_constant_density(4)}, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(run_affirmative_scan(2, {}, {make_constant_density(2)}, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        run_affirmative_scan(2, {make_ball(2)}, {make_phase_coupling_density(2)}, 1),
        std::invalid_argument);
}

TEST_CASE("affirmative scan finds consistent scaling on planar bodies") {
    AffirmativeOptions cfg;
    cfg.ft = FtOptions{96, size_t{1} << 11, 8, 0x5ecaff01};
    cfg.pd.grid = 8;
    cfg.pd.refine_rounds = 2;
    cfg.section_nodes = size_t{1} << 12;
    cfg.measure_nodes = size_t{1} << 12;
    cfg.directions = 4;
    cfg.seed = 0x5eedaff1;

    const std::vector<StarBody> bodies{make_ball(2), make_lq_body(2, 4.0)};
    const std::vector<Density> densities{make_constant_density(2)};
    const auto rep = run_affirmative_scan(2, bodies, densities, 3, cfg);

    CHECK(rep.all_nonnegative);
    CHECK_FALSE(rep.contradiction);
    for (const auto v : rep.pd_verdicts) CHECK(v == PdVerdict::nonnegative);
    REQUIRE(rep.pairs.size() == 3);
    for (const auto& pr : rep.pairs) {
        CHECK(pr.sections_dominated);
        CHECK(pr.worst_section_slack > 0.0);
        CHECK(pr.measure_ok);
        CHECK(pr.scale > 0.5);
        CHECK(pr.scale < 1.5);
    }
    CHECK(rep.consistent);
    CHECK(rep.verdict == BpVerdict::affirmative_consistent);
    CHECK(rep.verdict != BpVerdict::counterexample_confirmed);
}

TEST_CASE("affirmative scan scales a body against itself to near unity") {
    AffirmativeOptions cfg;
    cfg.ft = FtOptions{96, size_t{1} << 11, 8, 0x5ecaff02};
    cfg.pd.grid = 6;
    cfg.pd.refine_rounds = 1;
    cfg.section_nodes = size_t{1} << 12;
    cfg.measure_nodes = size_t{1} << 12;
    cfg.directions = 3;
    cfg.seed = 77;

    const auto rep = run_affirmative_scan(2, {make_ball(2)}, {make_constant_density(2)}, 1, cfg);
    REQUIRE(rep.pairs.size() == 1);
    CHECK(rep.pairs[0].scale == Catch::Approx(1.0).margin(0.05));
    CHECK(rep.pairs[0].measure_ok);
    CHECK(rep.verdict == BpVerdict::affirmative_consistent);
}

TEST_CASE("negative-direction pipeline confirms a counterexample for n = 4") {
    const auto one = make_constant_density(4);
    CounterexampleOptions cfg;
    cfg.ft = FtOptions{128, size_t{1} << 12, 8, 0x5ecbb9a1};
    cfg.g_ft = FtOptions{96, size_t{1} << 11, 8, 0x5ecbb9a2};
    cfg.pd.grid = 6;
    cfg.pd.refine_rounds = 2;
    cfg.g_nodes = 11;
    cfg.section_nodes = size_t{1} << 12;
    cfg.measure_nodes = size_t{1} << 12;
    cfg.directions = 6;
    cfg.support_probes = 3;
    cfg.seed = 0x5eedb904;

    const auto rep = run_counterexample(4, 4.0, one, cfg);
    INFO("stage: " << rep.stage << "  diagnostics: " << rep.diagnostics);
    CHECK(rep.diagnostics.empty());
    REQUIRE(rep.verdict == BpVerdict::counterexample_confirmed);

    CHECK(rep.pd_verdict == PdVerdict::negative);
    CHECK(rep.pd_min < -1000.0);
    CHECK(rep.bump_width > 0.0);
    CHECK(rep.epsilon > 0.0);
    CHECK(rep.rhs_min > 0.0);
    CHECK(rep.convexity.convex);

    REQUIRE(rep.section_gap.size() == 6);
    double min_gap = rep.section_gap[0];
    for (double gp : rep.section_gap) min_gap = std::min(min_gap, gp);
    CHECK(min_gap >= -rep.error_budget);
    CHECK(rep.measure_gap >= 3.0 * rep.error_budget);
    CHECK(rep.measure_K > rep.measure_L);

    // where the bump is strong the measured gap tracks the predicted one
    for (size_t i = 0; i < rep.section_gap.size(); ++i) {
        if (rep.h_at_xi[i] < 0.1) continue;
        CHECK(rep.section_gap[i] ==
              Catch::Approx(rep.predicted_gap[i]).epsilon(0.25));
    }
}
