#pragma once

// Fourier transforms of homogeneous functions on R^N, evaluated on the unit
// sphere, with the convention g^(xi) = integral of g(x) e^{-i<x,xi>} dx.
//
// For g(x) = |x|^{-p} g0(x/|x|) with continuous even g0 and 0 < p < N, the
// transform is again homogeneous, of degree -(N-p), and on the sphere it is
// the zero-damping limit of
//   J(eps) = integral over theta in S^{N-1} of g0(theta) I_s(<theta,xi>; eps),
//   s = N - p.
// The integral is taken in latitude bands around xi: the band profile
//   S(psi) = integral of g0(cos psi xi + sin psi eta) over eta in S^{N-2}
// is sampled by a quasi-Monte Carlo rule shared across calls, and the
// latitude integral with the kernel folds into precomputed weights
// (see SliceWeights).  The damping is removed by Neville extrapolation;
// batching the rule gives a spread estimate that survives the whole linear
// pipeline untouched.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbp/bodies.hpp"
#include "cbp/core.hpp"
#include "cbp/oscillatory.hpp"
#include "cbp/quadrature.hpp"

namespace cbp {

// |x|^{-p} times an even continuous function of x/|x|
struct HomogeneousFunction {
    int N = 0;
    double p = 0.0;
    std::function<double(std::span<const double>)> sphere;
    std::string name;
};

inline HomogeneousFunction make_gauge_power(const StarBody& K, double p) {
    if (K.n() > 8) throw std::invalid_argument("make_gauge_power: n too large");
    HomogeneousFunction f;
    f.N = K.N();
    f.p = p;
    f.name = K.name() + "^-" + std::to_string(p);
    f.sphere = [K, p](std::span<const double> x) {
        double r[8];
        const size_t n = x.size() / 2;
        double len2 = 0.0;
        for (size_t j = 0; j < n; ++j) {
            const double a = x[2 * j], b = x[2 * j + 1];
            const double m2 = a * a + b * b;
            r[j] = std::sqrt(m2);
            len2 += m2;
        }
        const double inv = 1.0 / std::sqrt(len2);
        for (size_t j = 0; j < n; ++j) r[j] *= inv;
        // ||x||_K^{-p} on the sphere is rho_K^p
        const double rho = K.radial_sigma(std::span<const double>(r, n));
        return p == 2.0 ? rho * rho : std::pow(rho, p);
    };
    return f;
}

struct FtOptions {
    int npsi = 160;
    size_t slice_points = size_t{1} << 13;  // eta points on the latitude sphere
    int batches = 8;
    uint64_t seed = 0x5eed0001;
    EpsSchedule schedule = EpsSchedule::standard();
};

struct FtResult {
    double value = 0.0;
    double batch_sigma = 0.0;  // standard error across rule batches
    double tail_resid = 0.0;   // |last two extrapolants|
    double error_estimate = 0.0;
    bool converged = false;
    std::vector<double> damped;  // J(eps_j), largest eps first
};

// Holds everything reusable across directions for a fixed (N, p): the folded
// kernel weights and a canonical rule on S^{N-2} that gets rotated into the
// orthocomplement of each direction.
class FtContext {
  public:
    FtContext(int N, double p, FtOptions opts = {})
        : N_(N), p_(p), opts_(std::move(opts)) {
        if (N_ < 4 || N_ % 2 != 0)
            throw std::invalid_argument("FtContext: N must be even and >= 4");
        if (!(p_ > 0.0) || !(p_ < N_))
            throw std::invalid_argument("FtContext: need 0 < p < N");
        sw_ = make_slice_weights(N_, static_cast<double>(N_) - p_, opts_.npsi,
                                 opts_.schedule);
        canon_ = make_sphere_rule(N_ - 1, opts_.slice_points, opts_.seed, opts_.batches);
        cospsi_.reserve(sw_.psi.size());
        sinpsi_.reserve(sw_.psi.size());
        for (double ps : sw_.psi) {
            cospsi_.push_back(std::cos(ps));
            sinpsi_.push_back(std::sin(ps));
        }
    }

    int N() const { return N_; }
    double p() const { return p_; }
    const FtOptions& options() const { return opts_; }
    const SliceWeights& weights() const { return sw_; }

    FtResult transform(const HomogeneousFunction& f, std::span<const double> xi) const {
        if (f.N != N_) throw std::invalid_argument("FtContext: dimension mismatch");
        if (std::abs(f.p - p_) > 1e-12)
            throw std::invalid_argument("FtContext: homogeneity degree mismatch");
        if (static_cast<int>(xi.size()) != N_ || std::abs(norm2(xi) - 1.0) > 1e-10)
            throw std::invalid_argument("FtContext: direction must be a unit vector");

        std::vector<double> xiv(xi.begin(), xi.end());
        const auto basis = orthonormal_complement({xiv}, N_, static_cast<size_t>(N_ - 1));
        if (basis.size() != static_cast<size_t>(N_ - 1))
            throw std::runtime_error("FtContext: failed to complete a frame");

        const size_t cols = sw_.psi.size();
        const size_t neps = sw_.eps.size();
        const int B = canon_.batches;
        const double band_area = sphere_area(N_ - 1);

        std::vector<double> S(cols), J(neps, 0.0), Jb(neps);
        std::vector<double> value_b(static_cast<size_t>(B));
        double x[8], eta[8];
        for (int b = 0; b < B; ++b) {
            auto [lo, hi] = canon_.batch_range(b);
            std::fill(S.begin(), S.end(), 0.0);
            for (size_t m = lo; m < hi; ++m) {
                const auto z = canon_.point(m);
                for (int j = 0; j < N_; ++j) eta[j] = 0.0;
                for (int k = 0; k < N_ - 1; ++k) {
                    const double zk = z[k];
                    const double* bk = basis[static_cast<size_t>(k)].data();
                    for (int j = 0; j < N_; ++j) eta[j] += zk * bk[j];
                }
                for (size_t i = 0; i < cols; ++i) {
                    const double c = cospsi_[i], s = sinpsi_[i];
                    for (int j = 0; j < N_; ++j) x[j] = c * xi[j] + s * eta[j];
                    S[i] += f.sphere(std::span<const double>(x, static_cast<size_t>(N_)));
                }
            }
            const double scale = band_area / static_cast<double>(hi - lo);
            for (auto& v : S) v *= scale;
            for (size_t j = 0; j < neps; ++j) {
                const auto w = sw_.row(j);
                double acc = 0.0;
                for (size_t i = 0; i < cols; ++i) acc += w[i] * S[i];
                Jb[j] = acc;
                J[j] += acc;
            }
            value_b[static_cast<size_t>(b)] = extrapolate_to_zero(sw_.eps, Jb);
        }
        for (auto& v : J) v /= static_cast<double>(B);

        FtResult out;
        out.damped = J;
        out.value = extrapolate_to_zero(sw_.eps, J);
        const double prev = extrapolate_to_zero(
            std::span<const double>(sw_.eps.data(), neps - 1),
            std::span<const double>(J.data(), neps - 1));
        out.tail_resid = std::abs(out.value - prev);
        double mean = 0.0;
        for (double v : value_b) mean += v;
        mean /= static_cast<double>(B);
        double ss = 0.0;
        for (double v : value_b) ss += (v - mean) * (v - mean);
        out.batch_sigma = std::sqrt(ss / (static_cast<double>(B) * (B - 1)));
        out.error_estimate = out.tail_resid + out.batch_sigma;
        const double floor = std::max({std::abs(out.value), 10.0 * out.batch_sigma, 1e-12});
        out.converged = out.tail_resid < 1e-4 * floor;
        return out;
    }

  private:
    int N_;
    double p_;
    FtOptions opts_;
    SliceWeights sw_;
    SphereRule canon_;
    std::vector<double> cospsi_, sinpsi_;
};

// --- positive-definiteness scan ----------------------------------------------
//
// A body passes the order-2 embedding test exactly when the transform of
// ||.||_K^{-2} is nonnegative.  For circle-invariant bodies the transform is
// constant on orbits and even, so scanning moduli directions covers the
// sphere; the scan walks the simplex {t : t_j >= 0, sum t_j = 1} of squared
// moduli on a composition grid, then pattern-refines around the minimizer.

enum class PdVerdict { nonnegative, negative, indeterminate };

struct PdPoint {
    std::vector<double> t;  // squared moduli, sums to 1
    double value = 0.0;
    double sigma = 0.0;
    double resid = 0.0;
    bool converged = false;
};

struct PdOptions {
    int grid = 12;
    bool symmetric_dedup = true;  // scan sorted compositions only
    int refine_rounds = 3;
    double margin = 5.0;
};

struct PdReport {
    PdVerdict verdict = PdVerdict::indeterminate;
    bool complete = false;
    double min_value = 0.0;
    double min_sigma = 0.0;
    double min_resid = 0.0;
    std::vector<double> min_t;
    size_t evaluated = 0;
    std::vector<PdPoint> points;  // base grid, enumeration order
};

namespace detail {

inline void enumerate_compositions(int parts, int total, bool sorted,
                                   std::vector<std::vector<int>>& out) {
    std::vector<int> cur(static_cast<size_t>(parts), 0);
    // lexicographic recursion; `sorted` confines to non-increasing tuples
    std::function<void(int, int, int)> rec = [&](int pos, int left, int cap) {
        if (pos == parts - 1) {
            if (!sorted || left <= cap) {
                cur[static_cast<size_t>(pos)] = left;
                out.push_back(cur);
            }
            return;
        }
        const int hi = sorted ? std::min(left, cap) : left;
        for (int c = hi; c >= 0; --c) {
            cur[static_cast<size_t>(pos)] = c;
            // remaining parts can never exceed c in the sorted walk
            if (sorted && c * (parts - pos - 1) < left - c) continue;
            rec(pos + 1, left - c, c);
        }
    };
    rec(0, total, total);
}

}  // namespace detail

inline PdPoint pd_eval_point(const FtContext& ctx, const HomogeneousFunction& g,
                             std::span<const double> t) {
    PdPoint pt;
    pt.t.assign(t.begin(), t.end());
    std::vector<double> sigma(t.size());
    for (size_t i = 0; i < t.size(); ++i) sigma[i] = std::sqrt(std::max(t[i], 0.0));
    const auto xi = canonical_lift(sigma);
    const auto r = ctx.transform(g, xi);
    pt.value = r.value;
    pt.sigma = r.batch_sigma;
    pt.resid = r.tail_resid;
    pt.converged = r.converged;
    return pt;
}

inline PdReport pd_test(const FtContext& ctx, const StarBody& K, PdOptions opts = {}) {
    if (std::abs(ctx.p() - 2.0) > 1e-12)
        throw std::invalid_argument("pd_test: context must carry p = 2");
    if (ctx.N() != K.N()) throw std::invalid_argument("pd_test: dimension mismatch");
    if (opts.grid < 2) throw std::invalid_argument("pd_test: grid too coarse");
    const auto g = make_gauge_power(K, 2.0);

    std::vector<std::vector<int>> comps;
    detail::enumerate_compositions(K.n(), opts.grid, opts.symmetric_dedup, comps);

    PdReport rep;
    rep.complete = true;
    std::vector<double> t(static_cast<size_t>(K.n()));
    for (const auto& c : comps) {
        for (size_t i = 0; i < t.size(); ++i)
            t[i] = static_cast<double>(c[i]) / opts.grid;
        auto pt = pd_eval_point(ctx, g, t);
        rep.complete = rep.complete && pt.converged;
        if (rep.points.empty() || pt.value < rep.min_value) {
            rep.min_value = pt.value;
            rep.min_sigma = pt.sigma;
            rep.min_resid = pt.resid;
            rep.min_t = pt.t;
        }
        rep.points.push_back(std::move(pt));
    }
    rep.evaluated = rep.points.size();

    // pattern refinement around the grid minimizer
    double step = 0.5 / opts.grid;
    for (int round = 0; round < opts.refine_rounds; ++round) {
        bool improved = false;
        const auto base = rep.min_t;
        for (size_t i = 0; i < base.size(); ++i) {
            if (base[i] < step) continue;
            for (size_t j = 0; j < base.size(); ++j) {
                if (j == i) continue;
                auto cand = base;
                cand[i] -= step;
                cand[j] += step;
                auto pt = pd_eval_point(ctx, g, cand);
                ++rep.evaluated;
                rep.complete = rep.complete && pt.converged;
                if (pt.value < rep.min_value) {
                    rep.min_value = pt.value;
                    rep.min_sigma = pt.sigma;
                    rep.min_resid = pt.resid;
                    rep.min_t = pt.t;
                    improved = true;
                }
            }
        }
        if (!improved) step *= 0.5;
    }

    const double err = opts.margin * (rep.min_sigma + rep.min_resid);
    if (rep.min_value < -err)
        rep.verdict = PdVerdict::negative;
    else if (rep.complete)
        rep.verdict = PdVerdict::nonnegative;
    else
        rep.verdict = PdVerdict::indeterminate;
    return rep;
}

// --- spherical Parseval calibration ------------------------------------------
//
// For degrees p + q = N the transforms pair as
//   integral over S^{N-1} of f^ g^  =  (2 pi)^N integral over S^{N-1} of f g.
// Both sides are computed with the same moduli direction rule (valid because
// every factor is circle-invariant), so the identity checks the global
// normalization of the transform pipeline end to end.

struct ParsevalReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
    double lhs_sigma = 0.0;      // batch spread of the direction rule on lhs
    double point_error = 0.0;    // accumulated per-direction transform error
    double rel_gap = 0.0;
};

inline ParsevalReport parseval_check(const FtContext& ctx_f, const FtContext& ctx_g,
                                     const HomogeneousFunction& f,
                                     const HomogeneousFunction& g,
                                     const ModuliRule& directions) {
    const int N = ctx_f.N();
    if (ctx_g.N() != N || f.N != N || g.N != N)
        throw std::invalid_argument("parseval_check: dimension mismatch");
    if (std::abs(f.p + g.p - N) > 1e-10)
        throw std::invalid_argument("parseval_check: degrees must sum to N");
    if (2 * directions.n != N)
        throw std::invalid_argument("parseval_check: direction rule dimension mismatch");

    ParsevalReport rep;
    const size_t M = directions.count();
    std::vector<double> fh(M), gh(M), fv(M), gv(M);
    for (size_t i = 0; i < M; ++i) {
        const auto r = directions.point(i);
        const auto xi = canonical_lift(r);
        const auto rf = ctx_f.transform(f, xi);
        const auto rg = ctx_g.transform(g, xi);
        fh[i] = rf.value;
        gh[i] = rg.value;
        fv[i] = f.sphere(xi);
        gv[i] = g.sphere(xi);
        rep.point_error += directions.weights[i] *
                           (std::abs(rf.value) * rg.error_estimate +
                            std::abs(rg.value) * rf.error_estimate);
    }
    // batched combination of the precomputed per-direction values
    const int B = directions.batches;
    std::vector<double> est(static_cast<size_t>(B));
    for (int b = 0; b < B; ++b) {
        auto [lo, hi] = directions.batch_range(b);
        double acc = 0.0;
        for (size_t i = lo; i < hi; ++i) acc += directions.weights[i] * fh[i] * gh[i];
        est[static_cast<size_t>(b)] = acc * B;
    }
    double mean = 0.0;
    for (double e : est) mean += e;
    mean /= B;
    double ss = 0.0;
    for (double e : est) ss += (e - mean) * (e - mean);
    rep.lhs = mean;
    rep.lhs_sigma = std::sqrt(ss / (static_cast<double>(B) * (B - 1)));

    double rhs_raw = 0.0;
    for (size_t i = 0; i < M; ++i) rhs_raw += directions.weights[i] * fv[i] * gv[i];
    rep.rhs = std::pow(2.0 * pi, N) * rhs_raw;
    rep.ratio = rep.lhs / rep.rhs;
    rep.rel_gap = std::abs(rep.lhs - rep.rhs) / std::max(std::abs(rep.rhs), 1e-300);
    return rep;
}

}  // namespace cbp
