#pragma once

// Tensor-product cubic B-spline interpolation on uniform grids, with the
// classic recursive prefilter so the spline passes through the samples
// exactly.  Boundaries are whole-sample mirrors, which makes the interpolant
// even about the first and last grid plane of every axis; the tabulated
// functions fed to it share that symmetry, so no accuracy is lost at faces.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace cbp {

namespace detail {

// single pole of the cubic B-spline prefilter
inline constexpr double bspline3_pole = -0.26794919243112270647;  // sqrt(3)-2

inline double init_causal(const double* c, int n, int stride, double z) {
    const double tol = 1e-16;
    int horizon = static_cast<int>(std::ceil(std::log(tol) / std::log(std::abs(z))));
    if (horizon < n) {
        double zk = z, sum = c[0];
        for (int k = 1; k < horizon; ++k) {
            sum += zk * c[k * stride];
            zk *= z;
        }
        return sum;
    }
    // short signal: exact mirrored geometric sum
    double zk = z;
    double z2 = std::pow(z, n - 1);
    double sum = c[0] + z2 * c[(n - 1) * stride];
    z2 *= z2 / z;
    for (int k = 1; k <= n - 2; ++k) {
        sum += (zk + z2) * c[k * stride];
        zk *= z;
        z2 /= z;
    }
    return sum / (1.0 - std::pow(z, 2 * n - 2));
}

inline double init_anticausal(const double* c, int n, int stride, double z) {
    return (z / (z * z - 1.0)) * (z * c[(n - 2) * stride] + c[(n - 1) * stride]);
}

inline void prefilter_line(double* c, int n, int stride) {
    const double z = bspline3_pole;
    const double lambda = (1.0 - z) * (1.0 - 1.0 / z);
    for (int k = 0; k < n; ++k) c[k * stride] *= lambda;
    c[0] = init_causal(c, n, stride, z);
    for (int k = 1; k < n; ++k) c[k * stride] += z * c[(k - 1) * stride];
    c[(n - 1) * stride] = init_anticausal(c, n, stride, z);
    for (int k = n - 2; k >= 0; --k)
        c[k * stride] = z * (c[(k + 1) * stride] - c[k * stride]);
}

// reflect a continuous coordinate into [0, n-1] (period 2(n-1))
inline double mirror_coord(double x, int n) {
    const double p = 2.0 * (n - 1);
    x = std::fmod(x, p);
    if (x < 0.0) x += p;
    return (x > n - 1) ? p - x : x;
}

inline int mirror_index(int i, int n) {
    const int p = 2 * (n - 1);
    i %= p;
    if (i < 0) i += p;
    return (i >= n) ? p - i : i;
}

}  // namespace detail

// Interpolating cubic spline over a d-dimensional uniform grid (d = 1..3).
// Samples are row-major, axis 0 slowest.  Lookup coordinates live in
// [0,1]^d; coordinates outside are mirror-folded, consistent with the
// boundary model of the prefilter.
class SplineTable {
  public:
    SplineTable() = default;

    SplineTable(std::vector<int> dims, std::vector<double> samples)
        : dims_(std::move(dims)), c_(std::move(samples)) {
        if (dims_.empty() || dims_.size() > 3)
            throw std::invalid_argument("SplineTable: need 1..3 axes");
        size_t total = 1;
        for (int n : dims_) {
            if (n < 2) throw std::invalid_argument("SplineTable: axis too short");
            total *= static_cast<size_t>(n);
        }
        if (c_.size() != total)
            throw std::invalid_argument("SplineTable: sample count mismatch");
        strides_.assign(dims_.size(), 1);
        for (int a = static_cast<int>(dims_.size()) - 2; a >= 0; --a)
            strides_[a] = strides_[a + 1] * dims_[a + 1];
        prefilter();
    }

    int axes() const { return static_cast<int>(dims_.size()); }

    double operator()(std::span<const double> u) const {
        if (u.size() != dims_.size())
            throw std::invalid_argument("SplineTable: coordinate arity mismatch");
        int base[3];
        double w[3][4];
        for (size_t a = 0; a < dims_.size(); ++a) {
            const int n = dims_[a];
            double x = detail::mirror_coord(u[a] * (n - 1), n);
            int i = static_cast<int>(std::floor(x));
            if (i > n - 2) i = n - 2;
            const double t = x - i;
            base[a] = i;
            const double t2 = t * t, t3 = t2 * t;
            w[a][0] = (1.0 - 3.0 * t + 3.0 * t2 - t3) / 6.0;
            w[a][1] = (4.0 - 6.0 * t2 + 3.0 * t3) / 6.0;
            w[a][2] = (1.0 + 3.0 * t + 3.0 * t2 - 3.0 * t3) / 6.0;
            w[a][3] = t3 / 6.0;
        }
        // gather the 4^d coefficient stencil with mirrored indices
        const int d = axes();
        double sum = 0.0;
        const int i0 = (d > 0) ? 4 : 1, i1 = (d > 1) ? 4 : 1, i2 = (d > 2) ? 4 : 1;
        for (int a = 0; a < i0; ++a) {
            const size_t o0 =
                static_cast<size_t>(detail::mirror_index(base[0] - 1 + a, dims_[0])) *
                strides_[0];
            const double wa = w[0][a];
            for (int b = 0; b < i1; ++b) {
                size_t o1 = o0;
                double wb = wa;
                if (d > 1) {
                    o1 += static_cast<size_t>(
                              detail::mirror_index(base[1] - 1 + b, dims_[1])) *
                          strides_[1];
                    wb *= w[1][b];
                }
                for (int c = 0; c < i2; ++c) {
                    size_t o2 = o1;
                    double wc = wb;
                    if (d > 2) {
                        o2 += static_cast<size_t>(
                                  detail::mirror_index(base[2] - 1 + c, dims_[2])) *
                              strides_[2];
                        wc *= w[2][c];
                    }
                    sum += wc * c_[o2];
                }
            }
        }
        return sum;
    }

    double at1(double u) const {
        const double uu[1] = {u};
        return (*this)(std::span<const double>(uu, 1));
    }

  private:
    void prefilter() {
        // run the recursive filter along every line of every axis
        const int d = axes();
        for (int a = 0; a < d; ++a) {
            const int n = dims_[a];
            const size_t stride = strides_[a];
            const size_t nlines = c_.size() / static_cast<size_t>(n);
            // enumerate line start offsets: all index tuples with axis a == 0
            std::vector<size_t> starts;
            starts.reserve(nlines);
            enumerate_starts(a, starts);
            for (size_t s : starts)
                detail::prefilter_line(c_.data() + s, n, static_cast<int>(stride));
        }
    }

    void enumerate_starts(int axis, std::vector<size_t>& out) const {
        const int d = axes();
        std::vector<int> idx(d, 0);
        for (;;) {
            size_t off = 0;
            for (int a = 0; a < d; ++a) off += static_cast<size_t>(idx[a]) * strides_[a];
            out.push_back(off);
            int a = d - 1;
            for (; a >= 0; --a) {
                if (a == axis) continue;
                if (++idx[a] < dims_[a]) break;
                idx[a] = 0;
            }
            if (a < 0) break;
        }
    }

    std::vector<int> dims_;
    std::vector<size_t> strides_;
    std::vector<double> c_;
};

}  // namespace cbp
