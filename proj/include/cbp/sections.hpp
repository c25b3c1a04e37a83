// Measures of invariant bodies and of their complex-hyperplane sections.
//
// Everything here reduces to radial moments of the density: a section
// measure integrates r^{2n-3} f over the section subspace in polar form, a
// full-space measure integrates r^{2n-1}, and the Fourier route pushes the
// section profile through the homogeneous-transform engine. The comparison
// inequality at the bottom is the exact piecewise-polynomial fact that makes
// measure comparisons follow from section comparisons.
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cbp/bodies.hpp"
#include "cbp/core.hpp"
#include "cbp/fourier.hpp"
#include "cbp/integrate.hpp"
#include "cbp/quadrature.hpp"

namespace cbp {

namespace detail {

inline double ipow(double x, int p) {
    double r = 1.0;
    for (int i = 0; i < p; ++i) r *= x;
    return r;
}

// integral of r^p f(foot + r theta) dr over [0, len]
template <class F>
double ray_moment(const F& f, std::span<const double> foot,
                  std::span<const double> theta, int p, double len) {
    if (!(len > 0.0)) return 0.0;
    const size_t N = theta.size();
    std::vector<double> x(N);
    auto g = [&](double r) {
        for (size_t k = 0; k < N; ++k) x[k] = foot[k] + r * theta[k];
        return ipow(r, p) * f(std::span<const double>(x));
    };
    return integrate_adaptive(g, 0.0, len, 1e-9, 1e-300);
}

inline void require_section_rule(const Direction& xi, const SphereRule& rule) {
    if (rule.ambient != 2 * xi.n || rule.sphere_dim != 2 * xi.n - 3)
        throw std::invalid_argument("section rule has wrong dimensions");
    for (size_t i = 0; i < rule.count(); i += 1024) {
        const auto pt = rule.point(i);
        if (std::abs(dot(pt, xi.xi)) > 1e-8 || std::abs(dot(pt, xi.xi_perp)) > 1e-8)
            throw std::invalid_argument("section rule does not lie in the section subspace");
    }
}

}  // namespace detail

// integral of r^p f(r theta) dr from 0 to the body boundary along a unit
// direction theta in R^{2n}; p = 2n-3 for sections, 2n-1 for full measures
inline double radial_moment(const StarBody& body, const Density& f, int p,
                            std::span<const double> theta) {
    if (body.n() != f.n()) throw std::invalid_argument("radial_moment: dimension mismatch");
    if (static_cast<int>(theta.size()) != body.N())
        throw std::invalid_argument("radial_moment: direction has wrong dimension");
    if (p < 1) throw std::invalid_argument("radial_moment: exponent must be >= 1");
    const std::vector<double> origin(theta.size(), 0.0);
    return detail::ray_moment(f, origin, theta, p, body.radial(theta));
}

// measure of the section K cap H_xi, integrated in polar coordinates on the
// section subspace; the rule must be a subsphere rule built on xi's frame
inline BatchEstimate section_measure_estimate(const StarBody& body, const Density& f,
                                              const Direction& xi, const SphereRule& rule) {
    if (body.n() != xi.n || f.n() != xi.n)
        throw std::invalid_argument("section_measure: dimension mismatch");
    detail::require_section_rule(xi, rule);
    const int p = body.N() - 3;
    return batched_integral(rule, [&](std::span<const double> theta) {
        return radial_moment(body, f, p, theta);
    });
}

inline double section_measure_direct(const StarBody& body, const Density& f,
                                     const Direction& xi, const SphereRule& rule) {
    return section_measure_estimate(body, f, xi, rule).value;
}

// measure of the whole body, radial exponent 2n-1. The moduli-rule route
// reads the density at canonical lifts, which loses orbit variation unless
// the density is a moduli function; such inputs are rejected up front.
inline BatchEstimate body_measure_estimate(const StarBody& body, const Density& f,
                                           const ModuliRule& rule) {
    if (body.n() != f.n() || rule.n != body.n())
        throw std::invalid_argument("body_measure: dimension mismatch");
    if (!f.moduli())
        throw std::invalid_argument(
            "body_measure: moduli rule needs a moduli density; "
            "use circle averaging or the sphere-rule overload");
    const int p = body.N() - 1;
    const std::vector<double> origin(static_cast<size_t>(body.N()), 0.0);
    return batched_integral(rule, [&](std::span<const double> r) {
        const auto lift = canonical_lift(r);
        return detail::ray_moment(f, origin, lift, p, body.radial(lift));
    });
}

// full-sphere route for densities with orbit variation
inline BatchEstimate body_measure_estimate(const StarBody& body, const Density& f,
                                           const SphereRule& rule) {
    if (body.n() != f.n()) throw std::invalid_argument("body_measure: dimension mismatch");
    if (rule.ambient != body.N() || rule.sphere_dim != body.N() - 1)
        throw std::invalid_argument("body_measure: rule has wrong dimensions");
    const int p = body.N() - 1;
    const std::vector<double> origin(static_cast<size_t>(body.N()), 0.0);
    return batched_integral(rule, [&](std::span<const double> theta) {
        return detail::ray_moment(f, origin, theta, p, body.radial(theta));
    });
}

inline double body_measure(const StarBody& body, const Density& f, const ModuliRule& rule) {
    return body_measure_estimate(body, f, rule).value;
}
inline double body_measure(const StarBody& body, const Density& f, const SphereRule& rule) {
    return body_measure_estimate(body, f, rule).value;
}

// sup of the radial function over the moduli simplex: coarse angle grid to
// land in the right basin, then coordinate hill climbing with a shrinking
// step, which pins smooth profiles to near machine precision
inline double max_radius(const StarBody& body, int grid_per_axis = 33) {
    if (grid_per_axis < 3) throw std::invalid_argument("max_radius: grid too coarse");
    const int n = body.n();
    const size_t axes = static_cast<size_t>(n - 1);
    std::vector<double> a(axes, 0.0), best_a(axes, 0.0);
    std::vector<double> sigma(static_cast<size_t>(n));
    std::vector<int> idx(axes, 0);
    double best = 0.0;
    for (;;) {
        for (size_t k = 0; k < axes; ++k)
            a[k] = 0.5 * pi * idx[k] / (grid_per_axis - 1);
        angles_to_sigma(a, sigma);
        const double v = body.radial_sigma(sigma);
        if (v > best) {
            best = v;
            best_a = a;
        }
        size_t k = 0;
        while (k < axes && ++idx[k] == grid_per_axis) idx[k++] = 0;
        if (k == axes) break;
    }
    double w = 0.5 * pi / (grid_per_axis - 1);
    for (int sweep = 0; sweep < 80 && w > 1e-13; ++sweep, w *= 0.7) {
        for (size_t k = 0; k < axes; ++k) {
            const double keep = best_a[k];
            for (double cand : {keep - w, keep + w}) {
                best_a[k] = std::clamp(cand, 0.0, 0.5 * pi);
                angles_to_sigma(best_a, sigma);
                const double v = body.radial_sigma(sigma);
                if (v > best) {
                    best = v;
                    break;
                }
                best_a[k] = keep;
            }
        }
    }
    return best;
}

// measure of the slice by the affine translate of H_xi with foot point
// u1 xi + u2 xi_perp, integrated in polar form about the foot. The slice of
// a convex invariant body is star-shaped about the foot and empty exactly
// when the foot leaves the body, which is the only geometry exercised here.
inline double parallel_section_function(const StarBody& body, const Density& f,
                                        const Direction& xi, std::span<const double> u,
                                        const SphereRule& rule) {
    if (body.n() != xi.n || f.n() != xi.n)
        throw std::invalid_argument("parallel_section_function: dimension mismatch");
    if (u.size() != 2)
        throw std::invalid_argument("parallel_section_function: offset must be 2-dim");
    detail::require_section_rule(xi, rule);

    const size_t N = static_cast<size_t>(body.N());
    std::vector<double> foot(N);
    for (size_t k = 0; k < N; ++k) foot[k] = u[0] * xi.xi[k] + u[1] * xi.xi_perp[k];
    if (body.gauge(foot) > 1.0) return 0.0;

    const int p = body.N() - 3;
    std::vector<double> x(N);
    auto chord = [&](std::span<const double> theta) {
        auto gauge_at = [&](double t) {
            for (size_t k = 0; k < N; ++k) x[k] = foot[k] + t * theta[k];
            return body.gauge(x);
        };
        double hi = 1.0;
        int grow = 0;
        while (gauge_at(hi) <= 1.0) {
            hi *= 2.0;
            if (++grow > 60) throw std::domain_error("parallel_section_function: unbounded ray");
        }
        double lo = 0.0;
        while (hi - lo > 1e-10) {
            const double mid = 0.5 * (lo + hi);
            (gauge_at(mid) <= 1.0 ? lo : hi) = mid;
        }
        return lo;
    };
    return batched_integral(rule, [&](std::span<const double> theta) {
        return detail::ray_moment(f, foot, theta, p, chord(theta));
    }).value;
}

inline double parallel_section_function(const StarBody& body, const Density& f,
                                        const Direction& xi, std::span<const double> u) {
    const auto rule = make_subsphere_rule(xi.h_basis, size_t{1} << 13, 0x5eed0002ull);
    return parallel_section_function(body, f, xi, u, rule);
}

inline double parallel_section_function(const StarBody& body, const Density& f,
                                        const Direction& xi, std::initializer_list<double> u,
                                        const SphereRule& rule) {
    return parallel_section_function(body, f, xi,
                                     std::span<const double>(u.begin(), u.size()), rule);
}
inline double parallel_section_function(const StarBody& body, const Density& f,
                                        const Direction& xi, std::initializer_list<double> u) {
    return parallel_section_function(body, f, xi,
                                     std::span<const double>(u.begin(), u.size()));
}

// Section measure through the transform engine:
//   mu(K cap H_xi) = (1/2pi) * FT[ |x|^{-(2n-2)} m(x/|x|) ](xi),
// where m(theta) is the section radial moment of the density. For a moduli
// density the profile m is tabulated once on the angle chart; otherwise it
// is evaluated pointwise (slow path, exercised only as a diagnostic). All
// fields of the returned estimate carry the 1/(2pi) scale.
inline FtResult section_measure_fourier(const StarBody& body, const Density& f,
                                        const Direction& xi, FtContext& ctx) {
    if (body.n() != xi.n || f.n() != xi.n)
        throw std::invalid_argument("section_measure_fourier: dimension mismatch");
    if (ctx.N() != body.N() || std::abs(ctx.p() - (body.N() - 2)) > 1e-12)
        throw std::invalid_argument("section_measure_fourier: context degree must be 2n-2");

    const int n = body.n();
    const int p = body.N() - 3;
    HomogeneousFunction g;
    g.N = body.N();
    g.p = static_cast<double>(body.N() - 2);
    g.name = "section_profile[" + body.name() + "," + f.name() + "]";
    if (f.moduli() && n <= 4) {
        const int nodes = n == 2 ? 65 : n == 3 ? 33 : 17;
        auto tab = tabulate_moduli_function(n, nodes, [&](std::span<const double> sigma) {
            const auto lift = canonical_lift(sigma);
            return radial_moment(body, f, p, lift);
        });
        g.sphere = [tab, n](std::span<const double> xpt) {
            double r[4];
            auto rs = std::span<double>(r, static_cast<size_t>(n));
            moduli(xpt, rs);
            const double len = norm2(rs);
            for (auto& v : rs) v /= len;
            return tab(rs);
        };
    } else {
        g.sphere = [&body, &f, p](std::span<const double> xpt) {
            return radial_moment(body, f, p, xpt);
        };
    }

    FtResult r = ctx.transform(g, xi.xi);
    const double scale = 1.0 / (2.0 * pi);
    r.value *= scale;
    r.batch_sigma *= scale;
    r.tail_resid *= scale;
    r.error_estimate *= scale;
    return r;
}

// nonnegative step function: values[i] on (knots[i-1], knots[i]] with an
// implicit leading knot at 0, identically 0 beyond knots.back()
struct StepFunction {
    std::vector<double> knots;
    std::vector<double> values;

    StepFunction(std::vector<double> k, std::vector<double> v)
        : knots(std::move(k)), values(std::move(v)) {
        if (knots.empty() || knots.size() != values.size())
            throw std::invalid_argument("StepFunction: knots and values must match");
        double prev = 0.0;
        for (double t : knots) {
            if (!(t > prev) || !std::isfinite(t))
                throw std::invalid_argument("StepFunction: knots must increase from 0");
            prev = t;
        }
        for (double v : values)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::invalid_argument("StepFunction: negative piece");
    }

    // integral of t^m alpha(t) dt over [0, x], exact power-rule arithmetic
    double moment(int m, double x) const {
        long double acc = 0.0L;
        long double lo = 0.0L;
        for (size_t i = 0; i < knots.size() && lo < x; ++i) {
            const long double hi = std::min<long double>(knots[i], x);
            acc += static_cast<long double>(values[i]) *
                   (std::pow(hi, m + 1) - std::pow(lo, m + 1)) / (m + 1);
            lo = knots[i];
        }
        return static_cast<double>(acc);
    }
};

// Both sides of the radial comparison inequality
//   G(a) <= G(b),  G(x) = int_0^x t^{2n-1} alpha - a^2 int_0^x t^{2n-3} alpha,
// for any a, b > 0 and nonnegative alpha; returns (G(a), G(b)). Closed-form
// piecewise integration keeps the property test free of quadrature noise.
inline std::pair<double, double> elementary_inequality_gap(double a, double b,
                                                           const StepFunction& alpha, int n) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
        throw std::invalid_argument("elementary_inequality_gap: a, b must be positive");
    if (n < 2) throw std::invalid_argument("elementary_inequality_gap: n must be >= 2");
    const double a2 = a * a;
    auto side = [&](double x) {
        return alpha.moment(2 * n - 1, x) - a2 * alpha.moment(2 * n - 3, x);
    };
    return {side(a), side(b)};
}

}  // namespace cbp
