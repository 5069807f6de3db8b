#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace cdakd {

inline constexpr std::size_t kFrameSide = 84;
inline constexpr std::size_t kFrameStack = 4;
inline constexpr std::size_t kFrameSize = kFrameSide * kFrameSide;

// Grayscale frame stack, frame-major (earliest frame first), row-major pixels.
struct PixelObservation {
  std::array<std::uint8_t, kFrameStack * kFrameSize> bytes{};

  std::span<const std::uint8_t> frame(std::size_t f) const {
    return {bytes.data() + f * kFrameSize, kFrameSize};
  }
  bool operator==(const PixelObservation&) const = default;
};

// What an environment hands the agent: a real vector for classic control, a
// shared pixel stack for pixel tasks. Pixel stacks are shared so that s' of one
// transition and s of the next do not duplicate 28 KB.
struct Observation {
  std::vector<double> values;
  std::shared_ptr<const PixelObservation> pixels;

  bool is_pixel() const { return pixels != nullptr; }
};

// Network input view. Pixel bytes are scaled to [0, 1] into `scratch`.
inline std::span<const double> network_input(const Observation& obs, std::vector<double>& scratch) {
  if (!obs.pixels) return obs.values;
  scratch.resize(obs.pixels->bytes.size());
  for (std::size_t i = 0; i < scratch.size(); ++i) scratch[i] = obs.pixels->bytes[i] / 255.0;
  return scratch;
}

inline std::vector<double> flatten(const Observation& obs) {
  if (!obs.pixels) return obs.values;
  std::vector<double> out;
  network_input(obs, out);
  return out;
}

}  // namespace cdakd
