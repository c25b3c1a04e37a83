#pragma once

// Star bodies in R^{2n} invariant under the diagonal circle action, and the
// measure densities paired with them.
//
// Every body constructed here has a radial function that depends only on the
// moduli vector (|z_1|, ..., |z_n|), so it is stored as a function on unit
// moduli vectors.  Invariant densities are a strictly larger class (relative
// phases survive the circle action), so Density keeps a full pointwise
// evaluator and never assumes a moduli representation.

#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cbp/core.hpp"
#include "cbp/interp.hpp"

namespace cbp {

using ModuliFunction = std::function<double(std::span<const double>)>;

class StarBody {
  public:
    StarBody() = default;
    StarBody(int n, std::string name, ModuliFunction rho, bool smooth)
        : n_(n), name_(std::move(name)), rho_(std::move(rho)), smooth_(smooth) {
        if (n_ < 2) throw std::invalid_argument("StarBody: n must be >= 2");
        if (!rho_) throw std::invalid_argument("StarBody: missing radial function");
    }

    int n() const { return n_; }
    int N() const { return 2 * n_; }
    const std::string& name() const { return name_; }
    bool smooth() const { return smooth_; }

    // radial function at a unit moduli vector
    double radial_sigma(std::span<const double> sigma) const {
        const double v = rho_(sigma);
        if (!(v > 0.0)) throw std::domain_error("StarBody: radial function must be positive");
        return v;
    }

    // radial function at any nonzero x in R^{2n}
    double radial(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != N())
            throw std::invalid_argument("StarBody: point has wrong dimension");
        std::vector<double> r(static_cast<size_t>(n_));
        moduli(x, r);
        const double len = norm2(r);
        if (!(len > 0.0)) throw std::domain_error("StarBody: radial undefined at 0");
        for (auto& v : r) v /= len;
        return radial_sigma(r);
    }

    // Minkowski functional: ||x||_K = |x| / rho(x/|x|), 0 at the origin
    double gauge(std::span<const double> x) const {
        std::vector<double> r(static_cast<size_t>(n_));
        moduli(x, r);
        const double len = norm2(r);
        if (len == 0.0) return 0.0;
        std::vector<double> sigma(r);
        for (auto& v : sigma) v /= len;
        return len / radial_sigma(sigma);
    }

    bool contains(std::span<const double> x) const { return gauge(x) <= 1.0; }

    double radial(std::initializer_list<double> x) const {
        return radial(std::span<const double>(x.begin(), x.size()));
    }
    double gauge(std::initializer_list<double> x) const {
        return gauge(std::span<const double>(x.begin(), x.size()));
    }
    bool contains(std::initializer_list<double> x) const {
        return contains(std::span<const double>(x.begin(), x.size()));
    }

  private:
    int n_ = 0;
    std::string name_;
    ModuliFunction rho_;
    bool smooth_ = false;
};

inline StarBody make_ball(int n, double radius = 1.0) {
    if (!(radius > 0.0)) throw std::invalid_argument("make_ball: radius must be positive");
    return StarBody(n, "ball", [radius](std::span<const double>) { return radius; }, true);
}

// unit ball of (sum_j |z_j|^q)^{1/q}; smooth body for even q >= 2
inline StarBody make_lq_body(int n, double q) {
    if (!(q > 0.0)) throw std::invalid_argument("make_lq_body: q must be positive");
    auto rho = [q](std::span<const double> sigma) {
        double s = 0.0;
        if (q == 4.0) {
            for (double v : sigma) {
                const double v2 = v * v;
                s += v2 * v2;
            }
            return 1.0 / std::sqrt(std::sqrt(s));
        }
        if (q == 2.0) {
            for (double v : sigma) s += v * v;
            return 1.0 / std::sqrt(s);
        }
        if (q == 1.0) {
            for (double v : sigma) s += v;
            return 1.0 / s;
        }
        for (double v : sigma) s += std::pow(v, q);
        return std::pow(s, -1.0 / q);
    };
    const bool even_q = std::abs(q - 2.0 * std::round(0.5 * q)) < 1e-12;
    return StarBody(n, "lq" + std::to_string(q), rho, even_q && q >= 2.0);
}

// --- stick-breaking chart on unit moduli vectors -----------------------------
//
// sigma_1 = cos a_1, sigma_2 = sin a_1 cos a_2, ...,
// sigma_n = sin a_1 ... sin a_{n-1}, with every a_i in [0, pi/2].
// Functions even in each sigma coordinate pull back to functions even about
// every face of the angle box, which is exactly the boundary model of the
// spline tables.

inline void angles_to_sigma(std::span<const double> a, std::span<double> sigma) {
    double tail = 1.0;
    for (size_t i = 0; i < a.size(); ++i) {
        sigma[i] = tail * std::cos(a[i]);
        tail *= std::sin(a[i]);
    }
    sigma[a.size()] = tail;
}

inline std::vector<double> angles_to_sigma(std::span<const double> a) {
    std::vector<double> sigma(a.size() + 1);
    angles_to_sigma(a, sigma);
    return sigma;
}

inline void sigma_to_angles(std::span<const double> sigma, std::span<double> a) {
    if (sigma.size() < 2) throw std::invalid_argument("sigma_to_angles: need n >= 2");
    double tail2 = 0.0;
    for (double v : sigma) tail2 += v * v;
    for (size_t i = 0; i + 1 < sigma.size(); ++i) {
        tail2 = std::max(tail2 - sigma[i] * sigma[i], 0.0);
        a[i] = std::atan2(std::sqrt(tail2), sigma[i]);
    }
}

inline std::vector<double> sigma_to_angles(std::span<const double> sigma) {
    std::vector<double> a(sigma.size() - 1);
    sigma_to_angles(sigma, a);
    return a;
}

// Sample a moduli function on the angle box and wrap the prefiltered spline
// as a new moduli function.  nodes_per_axis >= 8.
inline ModuliFunction tabulate_moduli_function(int n, int nodes_per_axis,
                                               const ModuliFunction& f) {
    if (n < 2 || n > 4)
        throw std::invalid_argument("tabulate_moduli_function: n must be 2..4");
    if (nodes_per_axis < 8)
        throw std::invalid_argument("tabulate_moduli_function: grid too coarse");
    const int d = n - 1;
    std::vector<int> dims(static_cast<size_t>(d), nodes_per_axis);
    size_t total = 1;
    for (int i = 0; i < d; ++i) total *= static_cast<size_t>(nodes_per_axis);
    std::vector<double> samples(total);
    std::vector<double> alphas(static_cast<size_t>(d));
    for (size_t flat = 0; flat < total; ++flat) {
        size_t rem = flat;
        for (int i = d - 1; i >= 0; --i) {
            const size_t idx = rem % static_cast<size_t>(nodes_per_axis);
            rem /= static_cast<size_t>(nodes_per_axis);
            alphas[static_cast<size_t>(i)] =
                0.5 * pi * static_cast<double>(idx) / (nodes_per_axis - 1);
        }
        const auto sigma = angles_to_sigma(alphas);
        samples[flat] = f(sigma);
    }
    auto table = std::make_shared<SplineTable>(dims, std::move(samples));
    return [table, d](std::span<const double> sigma) {
        double u[3];
        std::span<double> us(u, static_cast<size_t>(d));
        sigma_to_angles(sigma, us);
        for (int i = 0; i < d; ++i) u[i] /= 0.5 * pi;
        return (*table)(us);
    };
}

inline StarBody tabulate_body(const StarBody& src, int nodes_per_axis) {
    auto rho = tabulate_moduli_function(
        src.n(), nodes_per_axis,
        [&src](std::span<const double> sigma) { return src.radial_sigma(sigma); });
    return StarBody(src.n(), src.name() + "_tab", std::move(rho), src.smooth());
}

// --- densities ---------------------------------------------------------------

// Continuous density on R^{2n}; eval takes a full point, no invariance is
// assumed by the type itself.
class Density {
  public:
    Density() = default;
    Density(int n, std::string name, std::function<double(std::span<const double>)> f,
            bool moduli = false)
        : n_(n), name_(std::move(name)), f_(std::move(f)), moduli_(moduli) {
        if (n_ < 2) throw std::invalid_argument("Density: n must be >= 2");
        if (!f_) throw std::invalid_argument("Density: missing evaluator");
    }

    int n() const { return n_; }
    int N() const { return 2 * n_; }
    const std::string& name() const { return name_; }
    // true when the value depends on x only through the moduli vector; such
    // densities may be sampled at canonical lifts without losing mass
    bool moduli() const { return moduli_; }

    double operator()(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != N())
            throw std::invalid_argument("Density: point has wrong dimension");
        return f_(x);
    }
    double operator()(std::initializer_list<double> x) const {
        return (*this)(std::span<const double>(x.begin(), x.size()));
    }

  private:
    int n_ = 0;
    std::string name_;
    std::function<double(std::span<const double>)> f_;
    bool moduli_ = false;
};

inline Density make_constant_density(int n, double c = 1.0) {
    return Density(n, "constant", [c](std::span<const double>) { return c; }, true);
}

inline Density make_gaussian_density(int n, double variance = 1.0) {
    if (!(variance > 0.0))
        throw std::invalid_argument("make_gaussian_density: variance must be positive");
    const double inv2v = 0.5 / variance;
    return Density(n, "gaussian", [inv2v](std::span<const double> x) {
        return std::exp(-inv2v * dot(x, x));
    }, true);
}

// density depending on moduli only, e.g. for perturbed-measure experiments
inline Density make_moduli_density(int n, std::string name, ModuliFunction f) {
    auto g = std::move(f);
    return Density(n, std::move(name), [g, n](std::span<const double> x) {
        std::vector<double> r(static_cast<size_t>(n));
        moduli(x, r);
        return g(r);
    }, true);
}

// Orbit average over the circle action:
//   f~(x) = (1/2pi) integral of f(R_theta x) d theta.
// Trapezoid on a uniform theta grid, which is exact whenever f is a
// trigonometric polynomial of degree < points in theta along the orbit; for
// an invariant f the integrand is constant, so f~ = f holds exactly at every
// point and any grid size.
inline Density circle_average(const Density& f, int points = 64) {
    if (points < 4) throw std::invalid_argument("circle_average: need >= 4 points");
    const int n = f.n();
    // the average is circle-invariant but need not be a moduli function
    // (phase couplings survive averaging), so the flag only carries over
    return Density(n, f.name() + "_avg", [f, points](std::span<const double> x) {
        std::vector<double> y(x.begin(), x.end());
        double acc = 0.0;
        for (int k = 0; k < points; ++k) {
            std::copy(x.begin(), x.end(), y.begin());
            rotate_diagonal(y, 2.0 * pi * k / points);
            acc += f(y);
        }
        return acc / points;
    }, f.moduli());
}

// Re(z_1 conj(z_2))^2: invariant under the circle action but not a function
// of the moduli, the simplest witness that the two classes differ.
inline Density make_phase_coupling_density(int n) {
    if (n < 2) throw std::invalid_argument("make_phase_coupling_density: n must be >= 2");
    return Density(n, "phase_coupling", [](std::span<const double> x) {
        const double re = x[0] * x[2] + x[1] * x[3];
        return re * re;
    });
}

}  // namespace cbp
