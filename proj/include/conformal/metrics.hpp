#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>

namespace conformal {

enum class DistanceKind { euclidean };
enum class KernelKind { gaussian };

namespace detail {

// Running count of distance evaluations on this thread. The online-mode
// benchmarks use it as a deterministic work measure.
inline thread_local std::uint64_t distance_evaluations = 0;

// splitmix64 mix step, used to derive independent RNG seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

inline std::uint64_t distance_evaluation_count() { return detail::distance_evaluations; }
inline void reset_distance_evaluation_count() { detail::distance_evaluations = 0; }

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    ++detail::distance_evaluations;
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

inline double distance(DistanceKind kind, std::span<const double> a, std::span<const double> b) {
    switch (kind) {
        case DistanceKind::euclidean: return euclidean_distance(a, b);
    }
    throw std::logic_error("unknown distance kind");
}

/// Gaussian density kernel evaluated at a point with norm `u` in `dim`
/// dimensions: (2*pi)^(-dim/2) * exp(-u^2 / 2).
inline double gaussian_kernel(double u, std::size_t dim) {
    double norm = std::pow(2.0 * std::numbers::pi, -0.5 * static_cast<double>(dim));
    return norm * std::exp(-0.5 * u * u);
}

/// Kernel value for two points at distance `dist`, bandwidth-scaled.
inline double kernel_at_distance(KernelKind kind, double dist, double bandwidth, std::size_t dim) {
    switch (kind) {
        case KernelKind::gaussian: return gaussian_kernel(dist / bandwidth, dim);
    }
    throw std::logic_error("unknown kernel kind");
}

/// Neumaier compensated accumulator; keeps long kernel sums accurate enough
/// that the optimized and recomputed KDE scores agree to 1e-8.
struct CompensatedSum {
    double sum = 0.0;
    double compensation = 0.0;

    void add(double v) {
        double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            compensation += (sum - t) + v;
        else
            compensation += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + compensation; }
};

}  // namespace conformal
