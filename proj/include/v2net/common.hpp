#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace v2net {

using Bytes = std::vector<uint8_t>;
using ByteSpan = std::span<const uint8_t>;

/// Simulated time in microseconds since the start of a run.
using SimTime = int64_t;

constexpr SimTime kMicros = 1;
constexpr SimTime kMillis = 1000;
constexpr SimTime kSeconds = 1000 * kMillis;
constexpr SimTime kMinutes = 60 * kSeconds;
constexpr SimTime kHours = 60 * kMinutes;
constexpr SimTime kDays = 24 * kHours;

constexpr SimTime seconds(double s) { return static_cast<SimTime>(s * static_cast<double>(kSeconds)); }
constexpr double to_seconds(SimTime t) { return static_cast<double>(t) / static_cast<double>(kSeconds); }

std::string to_hex(ByteSpan data);
/// Accepts an empty string or "-" as the empty byte string.
Bytes from_hex(std::string_view hex);

/// Classic 16-bytes-per-row dump with offsets and an ASCII column.
std::string hex_dump(ByteSpan data);

std::array<uint8_t, 32> sha256(ByteSpan data);
std::array<uint8_t, 32> sha256(ByteSpan a, ByteSpan b);

void write_le16(uint8_t* out, uint16_t v);
void write_le32(uint8_t* out, uint32_t v);
void write_le64(uint8_t* out, uint64_t v);
uint16_t read_le16(const uint8_t* in);
uint32_t read_le32(const uint8_t* in);
uint64_t read_le64(const uint8_t* in);

inline void append(Bytes& out, ByteSpan data) { out.insert(out.end(), data.begin(), data.end()); }

/// Seeded generator used everywhere randomness is needed. Draw helpers are
/// written out so results do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : m_engine(seed) {}

  uint64_t next() { return m_engine(); }
  /// Uniform in [0, n). n must be positive.
  uint64_t uniform(uint64_t n);
  /// Uniform in [lo, hi] inclusive.
  int64_t range(int64_t lo, int64_t hi) { return lo + static_cast<int64_t>(uniform(static_cast<uint64_t>(hi - lo) + 1)); }
  double unit();  // [0, 1)
  bool bernoulli(double p) { return unit() < p; }
  double exponential(double mean);
  void fill(std::span<uint8_t> out);
  template <size_t N>
  std::array<uint8_t, N> bytes() {
    std::array<uint8_t, N> out{};
    fill(out);
    return out;
  }
  /// Derives an independent child generator (used to give each simulated
  /// node its own stream).
  Rng fork() { return Rng(next() ^ 0x9e3779b97f4a7c15ULL); }

 private:
  std::mt19937_64 m_engine;
};

uint64_t mix64(uint64_t x);

/// Minimal value-or-error holder.
template <class T, class E>
class Expected {
 public:
  Expected(T value) : m_v(std::in_place_index<0>, std::move(value)) {}
  Expected(E error) : m_v(std::in_place_index<1>, error) {}

  bool has_value() const { return m_v.index() == 0; }
  explicit operator bool() const { return has_value(); }
  T& value() {
    if (!has_value()) throw std::logic_error("Expected: no value");
    return std::get<0>(m_v);
  }
  const T& value() const {
    if (!has_value()) throw std::logic_error("Expected: no value");
    return std::get<0>(m_v);
  }
  T& operator*() { return value(); }
  const T& operator*() const { return value(); }
  T* operator->() { return &value(); }
  const T* operator->() const { return &value(); }
  E error() const { return std::get<1>(m_v); }

 private:
  std::variant<T, E> m_v;
};

}  // namespace v2net
