#ifndef IP3LAB_RANDOM_HPP
#define IP3LAB_RANDOM_HPP

#include <cstdint>

namespace ip3lab {

/// Independent, schedule-free sub-seed for stream `stream` of a master seed (splitmix64 mix).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace ip3lab

#endif  // IP3LAB_RANDOM_HPP
