#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace ofrep {

/// Raised on any contract violation or malformed input.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

/// Derives an independent 64-bit seed from a base seed and a stream tag
/// (splitmix64 finalizer over the combined words).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag_a, std::uint64_t tag_b);

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Tasks are claimed
/// from a shared counter, so callers must make fn(i) depend on i only.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace ofrep
