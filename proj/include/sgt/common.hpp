#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sgt {

enum class ErrorKind {
  InvalidInput,
  InfiniteValue,
  NegativeWeight,
  InvalidState,
  Unreachable,
  EmptyData,
  NumericalFailure,
  BadCmax,
  ConfigError,
  MissingArtifact,
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure in the library is reported through this exception type; the
/// kind is what callers (and the CLI exit code mapping) switch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// inf + x == inf for any x >= 0, which is all the saturation we need.
inline double saturating_add(double a, double b) {
  if (std::isinf(a) || std::isinf(b)) return kInfinity;
  return a + b;
}

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
  Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
};

inline double norm(const Point2& p) { return std::hypot(p.x, p.y); }
inline double distance(const Point2& a, const Point2& b) { return norm(a - b); }
inline Point2 lerp(const Point2& a, const Point2& b, double t) {
  return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t};
}

using Rng = std::mt19937_64;

/// Mixes a base seed with a stream index (splitmix64 finaliser) so that
/// derived generators are decorrelated yet reproducible.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b);

// Uniform in [0,1). Written out rather than using std::uniform_real_distribution
// so streams are identical across standard library implementations.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

/// Runs body(i) for i in [0, n) on up to `workers` threads (0 = hardware
/// concurrency). Iterations must write to disjoint outputs.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned workers = 0);

/// 64-bit FNV-1a, used for config fingerprints in reports.
std::uint64_t fnv1a64(std::string_view data);

}  // namespace sgt
