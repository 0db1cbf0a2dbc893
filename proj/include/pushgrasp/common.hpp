#ifndef PUSHGRASP_COMMON_HPP_
#define PUSHGRASP_COMMON_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace pushgrasp {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator-() const { return {-x, -y}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double squared_norm() const { return x * x + y * y; }

  Vec2 normalized() const {
    double n = norm();
    if (n == 0.0) throw std::invalid_argument("cannot normalize zero vector");
    return {x / n, y / n};
  }
  Vec2 perp() const { return {-y, x}; }

  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

// Rotation by angle; rotate() maps body frame to world frame.
struct Rot2 {
  double c = 1.0;
  double s = 0.0;

  Rot2() = default;
  explicit Rot2(double angle) : c(std::cos(angle)), s(std::sin(angle)) {}

  Vec2 rotate(const Vec2& v) const { return {c * v.x - s * v.y, s * v.x + c * v.y}; }
  Vec2 inverse_rotate(const Vec2& v) const { return {c * v.x + s * v.y, -s * v.x + c * v.y}; }
};

inline double clamp(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

template <typename T>
bool all_finite(const std::vector<T>& v) {
  for (const T& x : v)
    if (!std::isfinite(static_cast<double>(x))) return false;
  return true;
}

// Deterministic per-component RNG. mt19937_64 gives identical streams for
// identical seeds on a fixed toolchain, which is what the reproducibility
// contract requires.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : gen_(seed) {}

  double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(gen_);
  }
  double normal(double mean = 0.0, double std = 1.0) {
    std::normal_distribution<double> d(mean, std);
    return d(gen_);
  }
  int64_t uniform_int(int64_t lo, int64_t hi) {  // inclusive range
    std::uniform_int_distribution<int64_t> d(lo, hi);
    return d(gen_);
  }
  uint64_t next_u64() { return gen_(); }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

// FNV-1a content hash, used for config digests and log comparison.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

std::string hex64(uint64_t v);

}  // namespace pushgrasp

#endif  // PUSHGRASP_COMMON_HPP_
