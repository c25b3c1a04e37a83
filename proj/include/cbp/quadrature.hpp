#pragma once

// Deterministic quasi-Monte Carlo rules on spheres.
//
// All rules are built from a scrambled Halton stream mapped to the sphere by
// the Gaussian trick (componentwise normal quantile, then normalize).  Points
// are split into batches that carry independent Cranley-Patterson shifts, so
// the spread of per-batch estimates gives an honest error bar rather than a
// wishful one.  Everything is a pure function of (dimension, count, seed).

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cbp/core.hpp"

namespace cbp {

inline constexpr int halton_primes[8] = {2, 3, 5, 7, 11, 13, 17, 19};
inline constexpr int halton_digit_levels = 48;

// count x dim points in [0,1)^dim; every digit level of every axis gets its
// own seeded permutation, so projections do not inherit the raw Halton
// stripe artifacts.
inline std::vector<double> halton_scrambled(size_t count, int dim, uint64_t seed) {
    if (dim < 1 || dim > 8)
        throw std::invalid_argument("halton_scrambled: dim must be 1..8");
    std::vector<double> out(count * static_cast<size_t>(dim));
    std::vector<int> perm(halton_digit_levels * 19);
    for (int d = 0; d < dim; ++d) {
        const int b = halton_primes[d];
        uint64_t state = seed ^ (0x9e3779b97f4a7c15ull * (static_cast<uint64_t>(d) + 1));
        splitmix64(state);
        for (int level = 0; level < halton_digit_levels; ++level) {
            int* p = perm.data() + level * 19;
            for (int j = 0; j < b; ++j) p[j] = j;
            for (int j = b - 1; j > 0; --j) {
                const int k = static_cast<int>(splitmix64(state) % static_cast<uint64_t>(j + 1));
                std::swap(p[j], p[k]);
            }
        }
        for (size_t i = 0; i < count; ++i) {
            uint64_t idx = i + 1;
            double x = 0.0, f = 1.0;
            for (int level = 0; level < halton_digit_levels; ++level) {
                f /= b;
                x += f * perm[level * 19 + static_cast<int>(idx % static_cast<uint64_t>(b))];
                idx /= static_cast<uint64_t>(b);
            }
            out[i * dim + d] = x;
        }
    }
    return out;
}

// map a uniform [0,1)^dim sample to S^{dim-1}
inline void gaussian_to_sphere(std::span<const double> u, std::span<double> z) {
    const size_t d = z.size();
    double n2 = 0.0;
    for (size_t k = 0; k < d; ++k) {
        double uk = u[k];
        if (uk < 1e-15) uk = 1e-15;
        if (uk > 1.0 - 1e-15) uk = 1.0 - 1e-15;
        z[k] = normal_quantile(uk);
        n2 += z[k] * z[k];
    }
    const double inv = 1.0 / std::sqrt(std::max(n2, 1e-300));
    for (size_t k = 0; k < d; ++k) z[k] *= inv;
}

// Equal-weight point set in R^ambient whose weighted sums approximate
// integrals over a sphere (full S^{ambient-1}, or the unit sphere of a
// subspace).  `batches` consecutive blocks of equal size are independently
// shifted; each block is antipodally closed.
struct SphereRule {
    int ambient = 0;
    int sphere_dim = 0;  // intrinsic: points lie on an S^{sphere_dim}
    int batches = 1;
    std::vector<double> points;   // count * ambient, row-major
    std::vector<double> weights;  // count entries, all equal

    size_t count() const { return weights.size(); }
    size_t batch_size() const { return count() / static_cast<size_t>(batches); }
    std::pair<size_t, size_t> batch_range(int b) const {
        const size_t m = batch_size();
        return {static_cast<size_t>(b) * m, static_cast<size_t>(b + 1) * m};
    }
    std::span<const double> point(size_t i) const {
        return {points.data() + i * static_cast<size_t>(ambient),
                static_cast<size_t>(ambient)};
    }
};

namespace detail {

// shared builder: points on S^{K-1} pushed through K orthonormal frame
// vectors living in R^ambient (identity frame for the full sphere)
inline SphereRule build_sphere_rule(int ambient, std::span<const std::vector<double>> frame,
                                    size_t count, uint64_t seed, int batches) {
    const int K = static_cast<int>(frame.size());
    if (count < 100) throw std::invalid_argument("sphere rule: need at least 100 points");
    if (batches < 2) throw std::invalid_argument("sphere rule: need at least 2 batches");
    for (int a = 0; a < K; ++a) {
        if (static_cast<int>(frame[a].size()) != ambient)
            throw std::invalid_argument("sphere rule: frame vector has wrong length");
        for (int b = 0; b <= a; ++b) {
            const double d = dot(frame[a], frame[b]) - (a == b ? 1.0 : 0.0);
            if (std::abs(d) > 1e-8)
                throw std::invalid_argument("sphere rule: frame is not orthonormal");
        }
    }
    const size_t per_batch_half = (count + 2 * static_cast<size_t>(batches) - 1) /
                                  (2 * static_cast<size_t>(batches));
    const size_t half = per_batch_half * static_cast<size_t>(batches);
    const size_t total = 2 * half;

    SphereRule rule;
    rule.ambient = ambient;
    rule.sphere_dim = K - 1;
    rule.batches = batches;
    rule.points.assign(total * static_cast<size_t>(ambient), 0.0);
    rule.weights.assign(total, sphere_area(K) / static_cast<double>(total));

    const auto u = halton_scrambled(half, K, seed);
    uint64_t shift_state = seed ^ 0xbf58476d1ce4e5b9ull;
    splitmix64(shift_state);
    std::vector<double> shift(static_cast<size_t>(K));
    std::vector<double> us(static_cast<size_t>(K)), z(static_cast<size_t>(K));
    size_t row = 0;
    for (int b = 0; b < batches; ++b) {
        for (int k = 0; k < K; ++k) shift[k] = uniform01(shift_state);
        for (size_t i = 0; i < per_batch_half; ++i) {
            const double* ui = u.data() + (static_cast<size_t>(b) * per_batch_half + i) * K;
            for (int k = 0; k < K; ++k) {
                double v = ui[k] + shift[k];
                us[k] = v - std::floor(v);
            }
            gaussian_to_sphere(us, z);
            double* plus = rule.points.data() + row * static_cast<size_t>(ambient);
            double* minus = plus + static_cast<size_t>(ambient);
            for (int k = 0; k < K; ++k) {
                const double* fk = frame[k].data();
                for (int j = 0; j < ambient; ++j) plus[j] += z[k] * fk[j];
            }
            for (int j = 0; j < ambient; ++j) minus[j] = -plus[j];
            row += 2;
        }
    }
    return rule;
}

inline std::vector<std::vector<double>> identity_frame(int n) {
    std::vector<std::vector<double>> frame(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) frame[i][i] = 1.0;
    return frame;
}

}  // namespace detail

inline SphereRule make_sphere_rule(int dim, size_t count, uint64_t seed, int batches = 8) {
    if (dim < 2) throw std::invalid_argument("make_sphere_rule: dim must be >= 2");
    const auto frame = detail::identity_frame(dim);
    return detail::build_sphere_rule(dim, frame, count, seed, batches);
}

// rule on the unit sphere of span(basis), basis vectors in R^ambient
inline SphereRule make_subsphere_rule(std::span<const std::vector<double>> basis,
                                      size_t count, uint64_t seed, int batches = 8) {
    if (basis.size() < 2)
        throw std::invalid_argument("make_subsphere_rule: need at least a 2-dim subspace");
    const int ambient = static_cast<int>(basis[0].size());
    return detail::build_sphere_rule(ambient, basis, count, seed, batches);
}

// Rule over moduli vectors for integrating rotation-invariant functions on
// S^{2n-1}.  Points r_i are unit vectors with nonnegative entries; weights
// absorb the orbit volume factor (2 pi)^n prod_j r_j, so
//   sum_i w_i f(r_i)  ~=  integral over S^{2n-1} of the invariant extension.
struct ModuliRule {
    int n = 0;
    int batches = 1;
    std::vector<double> points;   // count * n
    std::vector<double> weights;  // count
    size_t count() const { return weights.size(); }
    size_t batch_size() const { return count() / static_cast<size_t>(batches); }
    std::pair<size_t, size_t> batch_range(int b) const {
        const size_t m = batch_size();
        return {static_cast<size_t>(b) * m, static_cast<size_t>(b + 1) * m};
    }
    std::span<const double> point(size_t i) const {
        return {points.data() + i * static_cast<size_t>(n), static_cast<size_t>(n)};
    }
};

inline ModuliRule make_moduli_rule(int n, size_t count, uint64_t seed, int batches = 8) {
    if (n < 2) throw std::invalid_argument("make_moduli_rule: n must be >= 2");
    if (count < 100) throw std::invalid_argument("make_moduli_rule: need at least 100 points");
    if (batches < 2) throw std::invalid_argument("make_moduli_rule: need at least 2 batches");
    const size_t per_batch = (count + static_cast<size_t>(batches) - 1) /
                             static_cast<size_t>(batches);
    const size_t total = per_batch * static_cast<size_t>(batches);

    ModuliRule rule;
    rule.n = n;
    rule.batches = batches;
    rule.points.assign(total * static_cast<size_t>(n), 0.0);
    rule.weights.assign(total, 0.0);

    // base weight: |S^{n-1}| / (2^n M) times the orbit factor per point
    double base = sphere_area(n) / static_cast<double>(total);
    for (int j = 0; j < n; ++j) base *= (2.0 * pi) / 2.0;

    const auto u = halton_scrambled(total, n, seed);
    uint64_t shift_state = seed ^ 0x94d049bb133111ebull;
    splitmix64(shift_state);
    std::vector<double> shift(static_cast<size_t>(n));
    std::vector<double> us(static_cast<size_t>(n)), z(static_cast<size_t>(n));
    size_t row = 0;
    for (int b = 0; b < batches; ++b) {
        for (int k = 0; k < n; ++k) shift[k] = uniform01(shift_state);
        for (size_t i = 0; i < per_batch; ++i, ++row) {
            const double* ui = u.data() + row * static_cast<size_t>(n);
            for (int k = 0; k < n; ++k) {
                double v = ui[k] + shift[k];
                us[k] = v - std::floor(v);
            }
            gaussian_to_sphere(us, z);
            double w = base;
            double* r = rule.points.data() + row * static_cast<size_t>(n);
            for (int k = 0; k < n; ++k) {
                r[k] = std::abs(z[k]);
                w *= r[k];
            }
            rule.weights[row] = w;
        }
    }
    return rule;
}

// weighted sum with a per-batch spread estimate; sigma is the standard error
// of the mean of batch estimates
struct BatchEstimate {
    double value = 0.0;
    double sigma = 0.0;
};

template <class Rule, class F>
BatchEstimate batched_integral(const Rule& rule, F&& f) {
    const int B = rule.batches;
    std::vector<double> est(static_cast<size_t>(B), 0.0);
    std::vector<double> terms(rule.batch_size());
    for (int b = 0; b < B; ++b) {
        auto [lo, hi] = rule.batch_range(b);
        for (size_t i = lo; i < hi; ++i)
            terms[i - lo] = rule.weights[i] * f(rule.point(i));
        est[static_cast<size_t>(b)] = static_cast<double>(B) * pairwise_sum(terms);
    }
    BatchEstimate out;
    out.value = pairwise_sum(est) / static_cast<double>(B);
    double ss = 0.0;
    for (double e : est) ss += (e - out.value) * (e - out.value);
    out.sigma = std::sqrt(ss / (static_cast<double>(B) * (B - 1)));
    return out;
}

}  // namespace cbp
