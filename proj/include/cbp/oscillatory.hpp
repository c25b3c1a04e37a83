#pragma once

// Gaussian-damped oscillatory radial integrals and their zero-damping limit.
//
// The basic object is
//   I_s(a; eps) = integral over r in (0, inf) of r^{s-1} cos(ar) e^{-eps r^2}
// which regularizes the Fourier transform of |x|^{-(N-s)} along one ray.
// Everything downstream samples I_s against latitude profiles and then
// removes the damping by polynomial extrapolation in eps.
//
// Two independent evaluation routes are kept on purpose: a slow adaptive
// quadrature straight off the definition, and the fast route used in
// production.  Tests hold them against each other.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbp/core.hpp"
#include "cbp/integrate.hpp"

namespace cbp {

// Fast route.  Near the spike (|a| <~ 12 sqrt(eps)) use the confluent
// hypergeometric form
//   I_s = (1/2) Gamma(s/2) eps^{-s/2} e^{-x^2} 1F1((1-s)/2; 1/2; x^2),
//   x = |a| / (2 sqrt(eps)),
// whose Kummer-transformed series has eventually one-signed terms.  In the
// tail use the eps-expansion
//   I_s ~ [Gamma(s) cos(pi s/2) / |a|^s] * sum_j eps^j Gamma(s+2j) / (j! Gamma(s) a^{2j})
// where the sign flips of cos and of (-eps)^j cancel, so the terms are again
// one-signed; truncate at the smallest term.  Both branches avoid the
// catastrophic cancellation that sinks the naive recurrence in s.
inline double oscillatory_radial(double s, double a, double eps) {
    if (!(s > 0.0)) throw std::invalid_argument("oscillatory_radial: s must be > 0");
    if (!(eps > 0.0)) throw std::invalid_argument("oscillatory_radial: eps must be > 0");
    const double x = std::abs(a) / (2.0 * std::sqrt(eps));
    if (x <= 6.0) {
        const double t = x * x;
        const double alpha = 0.5 * (1.0 - s);
        double term = 1.0, tot = 1.0;
        for (int m = 0; m < 500; ++m) {
            term *= t * (alpha + m) / ((0.5 + m) * (m + 1));
            tot += term;
            if (std::abs(term) < 1e-18 * std::abs(tot) + 1e-300) break;
        }
        return 0.5 * std::tgamma(0.5 * s) * std::pow(eps, -0.5 * s) * std::exp(-t) * tot;
    }
    const double aa = std::abs(a);
    const double lead = std::tgamma(s) * std::cos(0.5 * pi * s) / std::pow(aa, s);
    const double r = eps / (aa * aa);
    double term = 1.0, tot = 1.0, prev = 1.0;
    for (int j = 0; j < 200; ++j) {
        term *= r * (s + 2 * j) * (s + 2 * j + 1) / (j + 1);
        if (std::abs(term) > prev || std::abs(term) < 1e-18 * std::abs(tot)) break;
        tot += term;
        prev = std::abs(term);
    }
    return lead * tot;
}

// Reference route: adaptive quadrature on the definition, truncated where the
// Gaussian factor is below 1e-26 relative.  Slow, used to cross-check.
inline double oscillatory_radial_reference(double s, double a, double eps) {
    if (!(s > 0.0)) throw std::invalid_argument("oscillatory_radial: s must be > 0");
    if (!(eps > 0.0)) throw std::invalid_argument("oscillatory_radial: eps must be > 0");
    const double R = std::sqrt((60.0 + 10.0 * s) / eps);
    const double aa = std::abs(a);
    auto f = [&](double r) {
        return std::pow(r, s - 1.0) * std::cos(aa * r) * std::exp(-eps * r * r);
    };
    // one block per oscillation period keeps the adaptive splitter honest
    size_t nseg = 1 + static_cast<size_t>(aa * R / pi);
    if (nseg > 4096) nseg = 4096;
    double tot = 0.0;
    for (size_t i = 0; i < nseg; ++i) {
        const double lo = R * static_cast<double>(i) / static_cast<double>(nseg);
        const double hi = R * static_cast<double>(i + 1) / static_cast<double>(nseg);
        tot += integrate_adaptive(f, lo, hi, 1e-12, 0.0, 40);
    }
    return tot;
}

// damping schedule eps_j = eps0 * 2^{-j}; geometric halving keeps the Neville
// tableau well conditioned while reaching small eps quickly
struct EpsSchedule {
    std::vector<double> eps;
    static EpsSchedule standard() {
        EpsSchedule s;
        for (int j = 0; j < 8; ++j) s.eps.push_back(0.02 * std::pow(2.0, -j));
        return s;
    }
};

// polynomial extrapolation of (x_i, y_i) to x = 0 (Neville tableau)
inline double extrapolate_to_zero(std::span<const double> xs, std::span<const double> ys) {
    const size_t n = xs.size();
    if (n == 0 || ys.size() != n)
        throw std::invalid_argument("extrapolate_to_zero: bad table");
    std::vector<double> cur(ys.begin(), ys.end());
    for (size_t m = 1; m < n; ++m)
        for (size_t i = 0; i + m < n; ++i)
            cur[i] = (xs[i] * cur[i + 1] - xs[i + m] * cur[i]) / (xs[i] - xs[i + m]);
    return cur[0];
}

// Latitude moment of the damped kernel on the sphere,
//   M_k(eps) = integral over psi in [0, pi] of sin^{N-2}(psi) cos(k psi) I_s(cos psi; eps),
// reduced to [0, pi/2] (odd k vanishes; even k picks up 2*(-1)^{k/2}).
// Panels are geometric from the spike scale sqrt(eps) outward, subdivided so
// no panel spans more than ~1 radian of the cos(k psi) phase.
inline double latitude_moment(int N, double s, int k, double eps) {
    if (k % 2 != 0) return 0.0;
    static const GaussLegendre gl(31);
    const double half = 0.5 * pi;
    std::vector<double> edges{0.0};
    for (double x = 0.25 * std::sqrt(eps); edges.back() < half; x *= 1.5)
        edges.push_back(std::min(x, half));
    const double wmax = 6.0 / std::max(k, 1);
    std::vector<double> fine{0.0};
    for (size_t e = 0; e + 1 < edges.size(); ++e) {
        const double a = edges[e], b = edges[e + 1];
        const int nsub = std::max(1, static_cast<int>(std::ceil((b - a) / wmax)));
        for (int j = 1; j <= nsub; ++j)
            fine.push_back(a + (b - a) * j / nsub);
    }
    auto f = [&](double u) {
        return std::pow(std::cos(u), N - 2) * std::cos(k * u) *
               oscillatory_radial(s, std::sin(u), eps);
    };
    double tot = 0.0;
    for (size_t e = 0; e + 1 < fine.size(); ++e) tot += gl.integrate(f, fine[e], fine[e + 1]);
    return 2.0 * ((k / 2) % 2 == 0 ? 1.0 : -1.0) * tot;
}

// Per-(N, s) weight table for the latitude-profile pipeline.  Row j turns
// profile samples S(psi_i) on the uniform grid psi_i = i pi / npsi into the
// damped sphere integral at eps_j:
//   J(eps_j) = sum_i w[j][i] S(psi_i)
// via the cosine expansion of S (endpoints half-weighted) contracted with the
// moments M_k(eps_j).  The table depends only on (N, s, npsi, schedule), so
// it is cached on disk when CBP_CACHE_DIR is set.
struct SliceWeights {
    int N = 0;
    double s = 0.0;
    int npsi = 0;
    std::vector<double> psi;      // npsi + 1 nodes on [0, pi]
    std::vector<double> eps;      // schedule, largest first
    std::vector<double> w;        // eps.size() x (npsi + 1), row-major
    std::span<const double> row(size_t j) const {
        return {w.data() + j * (static_cast<size_t>(npsi) + 1),
                static_cast<size_t>(npsi) + 1};
    }
};

namespace detail {

inline uint64_t moment_table_key(int N, double s, int npsi,
                                 std::span<const double> eps) {
    std::string tag = "moments1|" + std::to_string(N) + "|";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g|%d|", s, npsi);
    tag += buf;
    for (double e : eps) {
        std::snprintf(buf, sizeof buf, "%.17g,", e);
        tag += buf;
    }
    return fnv1a(tag);
}

inline std::filesystem::path moment_cache_path(uint64_t key) {
    const char* dir = std::getenv("CBP_CACHE_DIR");
    if (dir == nullptr || *dir == '\0') return {};
    char name[64];
    std::snprintf(name, sizeof name, "moments_%016llx.txt",
                  static_cast<unsigned long long>(key));
    return std::filesystem::path(dir) / name;
}

inline bool load_moment_table(const std::filesystem::path& p, size_t rows, size_t cols,
                              std::vector<double>& mk) {
    std::ifstream in(p);
    if (!in) return false;
    std::string magic;
    size_t r = 0, c = 0;
    in >> magic >> r >> c;
    if (!in || magic != "cbpmoments" || r != rows || c != cols) return false;
    mk.assign(rows * cols, 0.0);
    for (auto& v : mk) {
        std::string tok;
        in >> tok;
        if (!in) return false;
        char* end = nullptr;
        v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || !std::isfinite(v)) return false;
    }
    return true;
}

inline void store_moment_table(const std::filesystem::path& p, size_t rows, size_t cols,
                               const std::vector<double>& mk) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) return;
    std::ostringstream out;
    out << "cbpmoments " << rows << " " << cols << "\n";
    char buf[48];
    for (size_t i = 0; i < mk.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%a\n", mk[i]);
        out << buf;
    }
    // write to a temp name and rename, so a crash never leaves a torn file
    const auto tmp = p.string() + ".tmp";
    {
        std::ofstream f(tmp);
        if (!f) return;
        f << out.str();
        if (!f) return;
    }
    std::filesystem::rename(tmp, p, ec);
}

}  // namespace detail

inline SliceWeights make_slice_weights(int N, double s, int npsi,
                                       const EpsSchedule& schedule) {
    if (N < 2 || npsi < 8 || npsi % 2 != 0)
        throw std::invalid_argument("make_slice_weights: bad N or npsi");
    if (schedule.eps.empty())
        throw std::invalid_argument("make_slice_weights: empty schedule");
    SliceWeights sw;
    sw.N = N;
    sw.s = s;
    sw.npsi = npsi;
    sw.eps = schedule.eps;
    const size_t cols = static_cast<size_t>(npsi) + 1;
    const size_t rows = sw.eps.size();
    for (size_t i = 0; i < cols; ++i)
        sw.psi.push_back(pi * static_cast<double>(i) / npsi);

    std::vector<double> mk;  // rows x cols moment table
    const auto key = detail::moment_table_key(N, s, npsi, sw.eps);
    const auto cache = detail::moment_cache_path(key);
    bool have = !cache.empty() && detail::load_moment_table(cache, rows, cols, mk);
    if (!have) {
        mk.assign(rows * cols, 0.0);
        for (size_t j = 0; j < rows; ++j)
            for (int k = 0; k <= npsi; k += 2)
                mk[j * cols + k] = latitude_moment(N, s, k, sw.eps[j]);
        if (!cache.empty()) detail::store_moment_table(cache, rows, cols, mk);
    }

    // fold the cosine transform into the weights:
    //   w[j][i] = (2/npsi) d_i sum_k d_k M_k(eps_j) cos(i k pi / npsi)
    sw.w.assign(rows * cols, 0.0);
    for (size_t j = 0; j < rows; ++j) {
        for (size_t i = 0; i < cols; ++i) {
            const double di = (i == 0 || i == cols - 1) ? 0.5 : 1.0;
            double acc = 0.0;
            for (size_t k = 0; k < cols; k += 2) {
                const double dk = (k == 0 || k == cols - 1) ? 0.5 : 1.0;
                acc += dk * mk[j * cols + k] *
                       std::cos(pi * static_cast<double>(i * k % (2 * static_cast<size_t>(npsi))) / npsi);
            }
            sw.w[j * cols + i] = (2.0 / npsi) * di * acc;
        }
    }
    return sw;
}

}  // namespace cbp
