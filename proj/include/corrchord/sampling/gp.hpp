#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "corrchord/core/error.hpp"

namespace corrchord {

enum class MaternNu { ThreeHalves, FiveHalves };

struct GPKernel {
    MaternNu nu = MaternNu::FiveHalves;
    double signal_variance = 1.0;
    double length_scale = 0.25;
    double noise = 1e-6;  ///< observation noise, relative to signal_variance
};

inline double matern(const GPKernel& k, double r) {
    const double s = r / k.length_scale;
    if (k.nu == MaternNu::ThreeHalves) {
        const double a = std::sqrt(3.0) * s;
        return k.signal_variance * (1.0 + a) * std::exp(-a);
    }
    const double a = std::sqrt(5.0) * s;
    return k.signal_variance * (1.0 + a + a * a / 3.0) * std::exp(-a);
}

struct Posterior {
    double mean = 0.0;
    double variance = 0.0;
};

/// Gaussian-process regression with a Matern kernel on normalized coordinates.
/// The Cholesky factor of the observation covariance is grown one row per
/// observation; refit() rebuilds it from scratch.
class GPModel {
public:
    GPModel() = default;
    GPModel(int dim, GPKernel kernel, double prior_mean = 0.0) : dim_(dim), kernel_(kernel), prior_mean_(prior_mean) {
        if (dim < 0) throw RangeError("gp: negative dimension");
        if (!(kernel.signal_variance > 0.0) || !(kernel.length_scale > 0.0)) throw RangeError("gp: kernel parameters must be positive");
    }

    int dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return y_.size(); }
    const GPKernel& kernel() const noexcept { return kernel_; }
    double prior_mean() const noexcept { return prior_mean_; }
    std::span<const double> point(std::size_t i) const { return {x_.data() + i * dim_, static_cast<std::size_t>(dim_)}; }
    double value(std::size_t i) const { return y_[i]; }
    double jitter(std::size_t i) const { return jitter_[i]; }

    double k(std::span<const double> a, std::span<const double> b) const {
        double d2 = 0.0;
        for (int i = 0; i < dim_; ++i) {
            const double d = a[i] - b[i];
            d2 += d * d;
        }
        return matern(kernel_, std::sqrt(d2));
    }

    /// Condition on one more observation. Escalates a diagonal jitter from
    /// 1e-10 to 1e-6 (relative) if the new pivot is not positive.
    void add(std::span<const double> theta, double value) {
        if (static_cast<int>(theta.size()) != dim_) throw RangeError("gp: observation has wrong dimension");
        if (!std::isfinite(value)) throw RangeError("gp: observation value must be finite");
        const std::size_t n = size();
        kvec_.resize(n);
        for (std::size_t i = 0; i < n; ++i) kvec_[i] = k(point(i), theta);
        lvec_.resize(n);
        forward(kvec_, lvec_);
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) ll += lvec_[i] * lvec_[i];
        const double base = kernel_.signal_variance * (1.0 + kernel_.noise);
        double jit = 0.0;
        double d2 = base - ll;
        for (double j = 1e-10; !(d2 > 0.0) || !std::isfinite(d2); j *= 10.0) {
            if (j > 1e-6 * 1.0000001) throw std::runtime_error("gp: covariance factorization failed after jitter escalation");
            jit = j;
            d2 = base + jit * kernel_.signal_variance - ll;
        }
        x_.insert(x_.end(), theta.begin(), theta.end());
        cols_.resize(static_cast<std::size_t>(dim_));
        for (int a = 0; a < dim_; ++a) cols_[static_cast<std::size_t>(a)].push_back(theta[a]);
        y_.push_back(value);
        jitter_.push_back(jit);
        L_.insert(L_.end(), lvec_.begin(), lvec_.end());
        L_.push_back(std::sqrt(d2));
        append_inverse_row(n);
        // z = L^-1 (y - m) grows by one entry.
        double s = value - prior_mean_;
        for (std::size_t i = 0; i < n; ++i) s -= lvec_[i] * z_[i];
        z_.push_back(s / L_.back());
        solve_alpha();
    }

    /// Rebuild the factorization and weights from the stored observations.
    void refit() {
        const std::size_t n = size();
        L_.assign(n * (n + 1) / 2, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double* Li = L_.data() + row(i);
            for (std::size_t j = 0; j <= i; ++j) {
                double s = k(point(i), point(j));
                if (i == j) s = kernel_.signal_variance * (1.0 + kernel_.noise + jitter_[i]);
                const double* Lj = L_.data() + row(j);
                for (std::size_t q = 0; q < j; ++q) s -= Li[q] * Lj[q];
                if (i == j) {
                    if (!(s > 0.0)) throw std::runtime_error("gp: covariance factorization failed");
                    Li[i] = std::sqrt(s);
                } else {
                    Li[j] = s / Lj[j];
                }
            }
        }
        Linv_.clear();
        for (std::size_t i = 0; i < n; ++i) append_inverse_row(i);
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = y_[i] - prior_mean_;
        z_.assign(n, 0.0);
        forward(r, z_);
        solve_alpha();
    }

    Posterior predict(std::span<const double> theta) const {
        std::vector<double> kv, v;
        return predict(theta, kv, v);
    }

    /// Allocation-free variant for hot loops.
    Posterior predict(std::span<const double> theta, std::vector<double>& kv, std::vector<double>& v) const {
        const std::size_t n = size();
        kv.assign(n, 0.0);
        v.resize(n);
        // Squared distances axis by axis over the column copy of the inputs.
        for (int a = 0; a < dim_; ++a) {
            const double* col = cols_[static_cast<std::size_t>(a)].data();
            const double t = theta[a];
            for (std::size_t i = 0; i < n; ++i) {
                const double d = col[i] - t;
                kv[i] += d * d;
            }
        }
        for (std::size_t i = 0; i < n; ++i) kv[i] = matern(kernel_, std::sqrt(kv[i]));
        const double mean = prior_mean_ + dot(kv.data(), alpha_.data(), n);
        // v = L^-1 k through the explicit inverse: independent rows, no
        // substitution chain.
        for (std::size_t i = 0; i < n; ++i) v[i] = dot(Linv_.data() + row(i), kv.data(), i + 1);
        const double vv = dot(v.data(), v.data(), n);
        return {mean, std::max(0.0, kernel_.signal_variance - vv)};
    }

private:
    static std::size_t row(std::size_t i) noexcept { return i * (i + 1) / 2; }

    static double dot(const double* a, const double* b, std::size_t n) noexcept {
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
        std::size_t j = 0;
        for (; j + 4 <= n; j += 4) {
            s0 += a[j] * b[j];
            s1 += a[j + 1] * b[j + 1];
            s2 += a[j + 2] * b[j + 2];
            s3 += a[j + 3] * b[j + 3];
        }
        for (; j < n; ++j) s0 += a[j] * b[j];
        return (s0 + s1) + (s2 + s3);
    }

    void forward(const std::vector<double>& b, std::vector<double>& out) const {
        const std::size_t n = b.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double* Li = L_.data() + row(i);
            out[i] = (b[i] - dot(Li, out.data(), i)) / Li[i];
        }
    }

    /// Row i of L^-1 from rows 0..i-1 of L^-1 and row i of L.
    void append_inverse_row(std::size_t i) {
        const double* Li = L_.data() + row(i);
        Linv_.resize(row(i + 1), 0.0);
        double* out = Linv_.data() + row(i);
        std::fill(out, out + i + 1, 0.0);
        for (std::size_t q = 0; q < i; ++q) {
            const double lq = Li[q];
            const double* Rq = Linv_.data() + row(q);
            for (std::size_t j = 0; j <= q; ++j) out[j] -= lq * Rq[j];
        }
        const double inv = 1.0 / Li[i];
        for (std::size_t j = 0; j < i; ++j) out[j] *= inv;
        out[i] = inv;
    }

    void solve_alpha() {
        const std::size_t n = size();
        alpha_.assign(z_.begin(), z_.end());
        for (std::size_t ii = n; ii-- > 0;) {
            alpha_[ii] /= L_[row(ii) + ii];
            const double a = alpha_[ii];
            const double* Li = L_.data() + row(ii);
            for (std::size_t j = 0; j < ii; ++j) alpha_[j] -= Li[j] * a;
        }
    }

    int dim_ = 0;
    GPKernel kernel_;
    double prior_mean_ = 0.0;
    std::vector<double> x_, y_, jitter_;
    std::vector<std::vector<double>> cols_;
    std::vector<double> L_;     ///< packed lower triangle, row-major
    std::vector<double> Linv_;  ///< its inverse, same layout
    std::vector<double> z_, alpha_;
    std::vector<double> kvec_, lvec_;
};

inline void gp_update(GPModel& model, std::span<const double> theta, double value) { model.add(theta, value); }

inline double ucb_score(double mean, double variance, double kappa) {
    return mean + kappa * std::sqrt(std::max(0.0, variance));
}

} // namespace corrchord
