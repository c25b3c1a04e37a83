#pragma once

// 1-D quadrature building blocks: a 15-point Gauss-Kronrod pair for adaptive
// integration and a 31-point Gauss-Legendre rule for fixed analytic panels.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace cbp {

namespace detail {

// G7-K15 nodes/weights on [-1,1] (symmetric half listed, node 0 last).
inline constexpr double gk15_nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr double gk15_wk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double gk15_wg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct GkResult {
    double value;
    double error;
};

template <class F>
GkResult gk15(const F& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double vk = 0.0, vg = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double x = h * gk15_nodes[i];
        const double fv = (i == 7) ? f(c) : f(c - x) + f(c + x);
        vk += gk15_wk[i] * fv;
        if (i % 2 == 1) vg += gk15_wg[i / 2] * fv;
    }
    vk *= h;
    vg *= h;
    double err = std::abs(vk - vg);
    // standard Kronrod error sharpening
    err = std::pow(200.0 * err, 1.5);
    if (err > std::abs(vk) * 1e-14) err = std::min(err, std::abs(vk - vg));
    return {vk, std::max(err, std::abs(vk) * 2e-16)};
}

}  // namespace detail

// Adaptive Gauss-Kronrod on [a,b].  Interval-splitting recursion with a
// global accuracy target: abs_tol + rel_tol * |estimate|.
template <class F>
double integrate_adaptive(const F& f, double a, double b, double rel_tol = 1e-8,
                          double abs_tol = 0.0, int max_depth = 40) {
    if (a == b) return 0.0;
    struct Seg {
        double a, b, value, error;
        int depth;
    };
    auto first = detail::gk15(f, a, b);
    std::vector<Seg> segs{{a, b, first.value, first.error, 0}};
    double total = first.value, total_err = first.error;
    for (int rounds = 0; rounds < 20000; ++rounds) {
        double tol = abs_tol + rel_tol * std::abs(total);
        if (total_err <= tol) break;
        // split the worst segment
        size_t worst = 0;
        for (size_t i = 1; i < segs.size(); ++i)
            if (segs[i].error > segs[worst].error) worst = i;
        Seg s = segs[worst];
        if (s.depth >= max_depth) break;
        const double m = 0.5 * (s.a + s.b);
        auto l = detail::gk15(f, s.a, m);
        auto r = detail::gk15(f, m, s.b);
        total += l.value + r.value - s.value;
        total_err += l.error + r.error - s.error;
        segs[worst] = {s.a, m, l.value, l.error, s.depth + 1};
        segs.push_back({m, s.b, r.value, r.error, s.depth + 1});
    }
    return total;
}

// Fixed-node Gauss-Legendre panel rule; nodes generated once by Newton
// iteration on Legendre polynomials.
class GaussLegendre {
  public:
    explicit GaussLegendre(int npoints) : x_(npoints), w_(npoints) {
        const int n = npoints;
        for (int i = 0; i < (n + 1) / 2; ++i) {
            // Chebyshev initial guess, then Newton on P_n
            double x = std::cos(pi_ * (i + 0.75) / (n + 0.5));
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                double dp = n * (x * p1 - p0) / (x * x - 1.0);
                double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (x * p1 - p0) / (x * x - 1.0);
            x_[i] = -x;
            x_[n - 1 - i] = x;
            w_[i] = w_[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
    }

    template <class F>
    double integrate(const F& f, double a, double b) const {
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        double s = 0.0;
        for (size_t i = 0; i < x_.size(); ++i) s += w_[i] * f(c + h * x_[i]);
        return h * s;
    }

    const std::vector<double>& nodes() const { return x_; }
    const std::vector<double>& weights() const { return w_; }

  private:
    static constexpr double pi_ = 3.14159265358979323846;
    std::vector<double> x_, w_;
};

}  // namespace cbp
