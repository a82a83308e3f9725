#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace wyimvc {

// Deterministic random source. Every draw is derived from raw mt19937_64
// words so sequences are identical across standard library implementations
// (std::normal_distribution and friends are not portable).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform on (0,1); zero is rejected so logs stay finite
    double uniform01() {
        for (;;) {
            double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
            if (u > 0.0) return u;
        }
    }

    // standard normal, Box-Muller
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    // Gumbel(0,1) by inverse transform
    double gumbel() { return -std::log(-std::log(uniform01())); }

    // uniform integer in [0, n), unbiased by rejection
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t lim = UINT64_MAX - UINT64_MAX % n;
        for (;;) {
            std::uint64_t x = gen_();
            if (x < lim) return x % n;
        }
    }

    // symmetric Dirichlet(1) via normalized Exp(1) draws
    void dirichlet1(std::span<double> out) {
        double sum = 0.0;
        for (double& x : out) {
            x = -std::log(uniform01());
            sum += x;
        }
        for (double& x : out) x /= sum;
    }

    // Fisher-Yates
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static constexpr double kPi = 3.14159265358979323846;
    std::mt19937_64 gen_;
};

}  // namespace wyimvc
