#pragma once

#include <cstdint>
#include <initializer_list>

namespace egogaze {

/// splitmix64 finalizer folded over the parts; used to derive independent
/// per-job seeds from a run seed.
inline std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(base);
  for (const auto p : parts) h = mix(h ^ mix(p));
  return h;
}

}  // namespace egogaze
