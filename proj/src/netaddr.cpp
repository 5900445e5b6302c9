#include <v2net/netaddr.hpp>

#include <arpa/inet.h>

#include <charconv>
#include <cstring>

namespace v2net {

namespace {
constexpr std::array<uint8_t, 12> kIpv4Prefix{0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0xff, 0xff};
}

NetAddress NetAddress::ipv4(uint8_t a, uint8_t b, uint8_t c, uint8_t d, uint16_t port) {
  std::array<uint8_t, 16> ip{};
  std::copy(kIpv4Prefix.begin(), kIpv4Prefix.end(), ip.begin());
  ip[12] = a;
  ip[13] = b;
  ip[14] = c;
  ip[15] = d;
  return NetAddress(ip, port);
}

NetAddress NetAddress::ipv4(uint32_t v, uint16_t port) {
  return ipv4(static_cast<uint8_t>(v >> 24), static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 8),
              static_cast<uint8_t>(v), port);
}

std::optional<NetAddress> NetAddress::parse(std::string_view text) {
  std::string host;
  uint16_t port = 8333;
  std::string_view port_text;
  if (!text.empty() && text.front() == '[') {
    auto close = text.find(']');
    if (close == std::string_view::npos) return std::nullopt;
    host = std::string(text.substr(1, close - 1));
    if (close + 1 < text.size()) {
      if (text[close + 1] != ':') return std::nullopt;
      port_text = text.substr(close + 2);
    }
  } else {
    auto colon = text.rfind(':');
    if (colon != std::string_view::npos && text.find(':') == colon) {
      host = std::string(text.substr(0, colon));
      port_text = text.substr(colon + 1);
    } else {
      host = std::string(text);
    }
  }
  if (!port_text.empty()) {
    auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc{} || ptr != port_text.data() + port_text.size()) return std::nullopt;
  }
  std::array<uint8_t, 16> ip{};
  in_addr v4{};
  if (inet_pton(AF_INET, host.c_str(), &v4) == 1) {
    std::copy(kIpv4Prefix.begin(), kIpv4Prefix.end(), ip.begin());
    std::memcpy(ip.data() + 12, &v4, 4);
    return NetAddress(ip, port);
  }
  in6_addr v6{};
  if (inet_pton(AF_INET6, host.c_str(), &v6) == 1) {
    std::memcpy(ip.data(), &v6, 16);
    return NetAddress(ip, port);
  }
  return std::nullopt;
}

bool NetAddress::is_ipv4() const { return std::equal(kIpv4Prefix.begin(), kIpv4Prefix.end(), m_ip.begin()); }

uint32_t NetAddress::ipv4_value() const {
  return (uint32_t{m_ip[12]} << 24) | (uint32_t{m_ip[13]} << 16) | (uint32_t{m_ip[14]} << 8) | m_ip[15];
}

NetGroup NetAddress::group() const {
  if (is_ipv4()) return NetGroup{(uint64_t{4} << 32) | (uint64_t{m_ip[12]} << 8) | m_ip[13]};
  return NetGroup{(uint64_t{6} << 32) | (uint64_t{m_ip[0]} << 24) | (uint64_t{m_ip[1]} << 16) |
                  (uint64_t{m_ip[2]} << 8) | m_ip[3]};
}

bool NetAddress::is_routable() const {
  if (is_ipv4()) {
    const uint8_t a = m_ip[12], b = m_ip[13];
    if (ipv4_value() == 0) return false;
    if (a == 10 || a == 127) return false;
    if (a == 172 && (b & 0xf0) == 16) return false;
    if (a == 192 && b == 168) return false;
    if (a == 169 && b == 254) return false;
    if (a >= 224) return false;
    return true;
  }
  static constexpr std::array<uint8_t, 16> kAny{};
  if (m_ip == kAny) return false;
  std::array<uint8_t, 16> loopback{};
  loopback[15] = 1;
  if (m_ip == loopback) return false;
  if (m_ip[0] == 0xfe && (m_ip[1] & 0xc0) == 0x80) return false;  // link-local
  if ((m_ip[0] & 0xfe) == 0xfc) return false;                     // unique local
  if (m_ip[0] == 0xff) return false;                              // multicast
  return true;
}

std::string NetAddress::ip_string() const {
  char buf[INET6_ADDRSTRLEN] = {};
  if (is_ipv4()) {
    inet_ntop(AF_INET, m_ip.data() + 12, buf, sizeof(buf));
    return buf;
  }
  inet_ntop(AF_INET6, m_ip.data(), buf, sizeof(buf));
  return buf;
}

std::string NetAddress::to_string() const {
  if (is_ipv4()) return ip_string() + ":" + std::to_string(m_port);
  return "[" + ip_string() + "]:" + std::to_string(m_port);
}

size_t NetAddressHash::operator()(const NetAddress& a) const {
  uint64_t h = read_le64(a.ip().data()) ^ mix64(read_le64(a.ip().data() + 8));
  return static_cast<size_t>(mix64(h ^ a.port()));
}

}  // namespace v2net
