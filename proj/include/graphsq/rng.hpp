#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace graphsq
{
    /// splitmix64 finalizer; used to decorrelate derived seeds.
    constexpr std::uint64_t mix64(std::uint64_t z) noexcept
    {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Substream seed for (master, a, b). Rule: mix64(mix64(mix64(master) ^ a) ^ b).
    /// Changing one coordinate never perturbs streams keyed by other coordinates.
    constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) noexcept
    {
        return mix64(mix64(mix64(master) ^ a) ^ b);
    }

    /// Seeded 64-bit generator. Variates are produced by explicit formulas
    /// (not std distributions) so streams are identical across standard libraries.
    class Rng
    {
    public:
        using result_type = std::uint64_t;

        explicit Rng(std::uint64_t seed) : engine_(seed) {}

        static constexpr result_type min() noexcept { return std::mt19937_64::min(); }
        static constexpr result_type max() noexcept { return std::mt19937_64::max(); }
        result_type operator()() { return engine_(); }

        /// Uniform on [0, 1) with 53 random bits.
        double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

        /// Exponential variate with the given rate (rate > 0).
        double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

        /// Uniform integer in [0, n), n > 0 (Lemire's multiply-and-reject).
        std::uint64_t below(std::uint64_t n)
        {
            unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
            auto low = static_cast<std::uint64_t>(m);
            if (low < n)
            {
                const std::uint64_t threshold = (0 - n) % n;
                while (low < threshold)
                {
                    m = static_cast<unsigned __int128>(engine_()) * n;
                    low = static_cast<std::uint64_t>(m);
                }
            }
            return static_cast<std::uint64_t>(m >> 64);
        }

    private:
        std::mt19937_64 engine_;
    };
} // namespace graphsq
