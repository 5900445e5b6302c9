#pragma once

#include <v2net/common.hpp>

#include <array>
#include <compare>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace v2net {

/// Network group used for diversity rules: /16 for IPv4, /32 for IPv6.
struct NetGroup {
  uint64_t value = 0;
  auto operator<=>(const NetGroup&) const = default;
};

/// An IP endpoint. IPv4 addresses are stored IPv4-mapped (::ffff:a.b.c.d).
class NetAddress {
 public:
  NetAddress() = default;
  NetAddress(const std::array<uint8_t, 16>& ip, uint16_t port) : m_ip(ip), m_port(port) {}

  static NetAddress ipv4(uint8_t a, uint8_t b, uint8_t c, uint8_t d, uint16_t port = 8333);
  static NetAddress ipv4(uint32_t host_order, uint16_t port = 8333);
  /// "a.b.c.d:port" or "[v6]:port"; the port may be omitted (defaults to 8333).
  static std::optional<NetAddress> parse(std::string_view text);

  bool is_ipv4() const;
  uint32_t ipv4_value() const;  // host order, only meaningful for IPv4
  const std::array<uint8_t, 16>& ip() const { return m_ip; }
  uint16_t port() const { return m_port; }
  NetAddress with_port(uint16_t port) const { return NetAddress(m_ip, port); }
  bool same_ip(const NetAddress& o) const { return m_ip == o.m_ip; }

  NetGroup group() const;
  /// Simulated publicly-routable predicate: rejects unspecified, loopback,
  /// RFC1918, link-local, multicast and reserved IPv4 ranges.
  bool is_routable() const;

  std::string ip_string() const;
  std::string to_string() const;

  auto operator<=>(const NetAddress&) const = default;

 private:
  std::array<uint8_t, 16> m_ip{};
  uint16_t m_port = 0;
};

struct NetAddressHash {
  size_t operator()(const NetAddress& a) const;
};

}  // namespace v2net
