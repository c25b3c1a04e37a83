#pragma once

// Core geometry for R^{2n} viewed as C^n with the diagonal circle action
// R_theta (z_1,...,z_n) = (e^{i theta} z_1, ..., e^{i theta} z_n).
// Coordinates are interleaved: x = (x_{11}, x_{12}, ..., x_{n1}, x_{n2}),
// z_j = x_{j1} + i x_{j2}.

#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cbp {

inline constexpr double pi = std::numbers::pi;

struct ComplexDimension {
    int n;  // complex dimension, ambient real dimension is 2n

    explicit ComplexDimension(int n_) : n(n_) {
        if (n < 2) throw std::invalid_argument("complex dimension must be >= 2");
    }
    int N() const { return 2 * n; }
};

// |S^{N-1}| = 2 pi^{N/2} / Gamma(N/2)
inline double sphere_area(int N) {
    assert(N >= 1);
    return 2.0 * std::pow(pi, 0.5 * N) / std::tgamma(0.5 * N);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Fixed-order pairwise (tree) summation. Deterministic for a given element
// order regardless of chunking, and O(eps log n) error instead of O(eps n).
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

// moduli(x) = (|z_1|, ..., |z_n|); preserves the Euclidean norm.
inline void moduli(std::span<const double> x, std::span<double> r) {
    assert(x.size() == 2 * r.size());
    for (size_t j = 0; j < r.size(); ++j)
        r[j] = std::hypot(x[2 * j], x[2 * j + 1]);
}

inline std::vector<double> moduli(std::span<const double> x) {
    std::vector<double> r(x.size() / 2);
    moduli(x, r);
    return r;
}

// Canonical lift: the orbit representative with all phases zero.
inline std::vector<double> canonical_lift(std::span<const double> r) {
    std::vector<double> x(2 * r.size(), 0.0);
    for (size_t j = 0; j < r.size(); ++j) x[2 * j] = r[j];
    return x;
}

// Multiplication by i in each complex coordinate: (x,y) -> (-y,x).
// Always orthogonal to x, same norm; spans the orbit tangent together with x.
inline std::vector<double> quarter_turn(std::span<const double> x) {
    assert(x.size() % 2 == 0);
    std::vector<double> y(x.size());
    for (size_t j = 0; j + 1 < x.size(); j += 2) {
        y[j] = -x[j + 1];
        y[j + 1] = x[j];
    }
    return y;
}

// Apply R_theta in place.
inline void rotate_diagonal(std::span<double> x, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    for (size_t j = 0; j + 1 < x.size(); j += 2) {
        const double a = x[j], b = x[j + 1];
        x[j] = c * a - s * b;
        x[j + 1] = s * a + c * b;
    }
}

struct ModuliPoint {
    std::vector<double> r;  // nonnegative, |r|_2 = 1

    explicit ModuliPoint(std::vector<double> r_) : r(std::move(r_)) {
        for (double v : r)
            if (!(v >= 0.0)) throw std::invalid_argument("moduli must be nonnegative");
        double len = norm2(r);
        if (std::abs(len - 1.0) > 1e-12)
            throw std::invalid_argument("moduli vector must have unit norm");
    }
};

// A direction xi on S^{2n-1} together with i*xi and an orthonormal basis of
// the (2n-2)-dimensional subspace H_xi orthogonal to both.  H_xi depends on
// xi only through the complex line spanned by it: H_{R_theta xi} = H_xi.
struct Direction {
    int n = 0;
    std::vector<double> xi;
    std::vector<double> xi_perp;
    std::vector<std::vector<double>> h_basis;  // 2n-2 orthonormal vectors
};

// Deterministic Gram-Schmidt completion against the standard basis.
// `seeds` are the vectors already fixed; candidates with residual below the
// threshold are skipped so the result never depends on rounding direction.
inline std::vector<std::vector<double>> orthonormal_complement(
    const std::vector<std::vector<double>>& seeds, int N, size_t want,
    double skip_threshold = 1e-6) {
    std::vector<std::vector<double>> basis = seeds;
    std::vector<std::vector<double>> out;
    for (int e = 0; e < N && out.size() < want; ++e) {
        std::vector<double> v(N, 0.0);
        v[e] = 1.0;
        for (const auto& b : basis) {
            double c = dot(v, b);
            for (int i = 0; i < N; ++i) v[i] -= c * b[i];
        }
        double len = norm2(v);
        if (len < skip_threshold) continue;
        for (auto& c : v) c /= len;
        // second orthogonalization pass keeps the basis orthonormal to ~1e-15
        for (const auto& b : basis) {
            double c = dot(v, b);
            for (int i = 0; i < N; ++i) v[i] -= c * b[i];
        }
        len = norm2(v);
        for (auto& c : v) c /= len;
        basis.push_back(v);
        out.push_back(std::move(v));
    }
    if (out.size() != want) throw std::runtime_error("basis completion failed");
    return out;
}

inline Direction make_direction(std::vector<double> xi) {
    if (xi.size() % 2 != 0 || xi.size() < 4)
        throw std::invalid_argument("direction must live in R^{2n}, n >= 2");
    if (std::abs(norm2(xi) - 1.0) > 1e-12)
        throw std::invalid_argument("direction must be a unit vector");
    Direction d;
    d.n = static_cast<int>(xi.size() / 2);
    d.xi_perp = quarter_turn(xi);
    d.xi = std::move(xi);
    d.h_basis = orthonormal_complement({d.xi, d.xi_perp}, 2 * d.n, 2 * d.n - 2);
    return d;
}

/// SplitMix64: tiny deterministic stream for seeding and scrambling.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline double uniform01(uint64_t& state) {
    return (splitmix64(state) >> 11) * 0x1.0p-53;
}

// Inverse normal CDF, Wichura's AS241 (PPND16).  Relative error ~1e-15 on
// (0,1); the rational tail branch covers p down to ~1e-300.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p in (0,1)");
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                  3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -val : val;
}

// FNV-1a, used for config hashes embedded in outputs.
inline uint64_t fnv1a(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace cbp
