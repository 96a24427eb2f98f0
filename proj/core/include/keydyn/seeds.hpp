#pragma once

#include <cstdint>
#include <string_view>

namespace keydyn {

// Seed for a named pipeline component: splitmix64(global ^ fnv1a64(name)).
// Each stage gets an independent, reproducible stream from one global seed.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view component);

}  // namespace keydyn
