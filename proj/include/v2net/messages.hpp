#pragma once

// Application-layer messages. Bodies are simplified but keep the sizes that
// matter for length-based analysis: 36-byte inventory vectors, 30-byte
// address records, 81-byte headers (80 + empty tx count), 8-byte nonces.

#include <v2net/common.hpp>
#include <v2net/netaddr.hpp>

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace v2net {

enum class MessageType : uint8_t { Version, Verack, Ping, Pong, Inv, GetData, Addr, Headers, GetHeaders, Block };

inline constexpr std::array kAllMessageTypes{MessageType::Version, MessageType::Verack,  MessageType::Ping,
                                             MessageType::Pong,    MessageType::Inv,     MessageType::GetData,
                                             MessageType::Addr,    MessageType::Headers, MessageType::GetHeaders,
                                             MessageType::Block};

/// Lower-case command string ("version", "getheaders", ...).
std::string_view command_name(MessageType t);
std::optional<MessageType> from_command(std::string_view name);

namespace services {
inline constexpr uint64_t kNetwork = 1;
inline constexpr uint64_t kWitness = 8;
inline constexpr uint64_t kNetworkLimited = 1024;
inline constexpr uint64_t kP2PV2 = 2048;
}  // namespace services

/// V2 message type encoding: one byte for types with a short id, otherwise
/// 0x00 followed by a 2-byte id.
struct TypeId {
  uint16_t code = 0;
  bool long_form = false;
  size_t size() const { return long_form ? 3 : 1; }
  bool operator==(const TypeId&) const = default;
};

TypeId v2_type_id(MessageType t);
std::optional<MessageType> from_type_id(TypeId id);

struct Message {
  MessageType type = MessageType::Ping;
  Bytes body;
  bool operator==(const Message&) const = default;
};

inline constexpr size_t kVersionBodyLen = 102;
inline constexpr size_t kUserAgentLen = 16;
inline constexpr size_t kInvItemLen = 36;
inline constexpr size_t kAddrRecordLen = 30;
inline constexpr size_t kHeaderLen = 81;
inline constexpr size_t kGetHeadersFixedLen = 36;  // version + stop hash
inline constexpr size_t kV1HeaderLen = 24;

struct VersionInfo {
  int32_t protocol_version = 70016;
  uint64_t services = 0;
  int64_t timestamp = 0;
  uint64_t nonce = 0;
  std::string user_agent;  // padded or truncated to kUserAgentLen
  int32_t start_height = 0;
  bool relay = true;
};

Message make_version(const VersionInfo& v);
std::optional<VersionInfo> parse_version(ByteSpan body);
Message make_verack();

Message make_ping(uint64_t nonce);
Message make_pong(uint64_t nonce);
std::optional<uint64_t> parse_nonce(ByteSpan body);

struct InvItem {
  uint32_t type = 1;
  std::array<uint8_t, 32> hash{};
  bool operator==(const InvItem&) const = default;
};
Message make_inv(const std::vector<InvItem>& items);
Message make_getdata(const std::vector<InvItem>& items);
std::optional<std::vector<InvItem>> parse_inv(ByteSpan body);

struct AddrEntry {
  uint32_t time = 0;
  uint64_t services = 0;
  NetAddress addr;
  bool operator==(const AddrEntry&) const = default;
};
Message make_addr(const std::vector<AddrEntry>& entries);
std::optional<std::vector<AddrEntry>> parse_addr(ByteSpan body);

/// Simulated header: the chain height and timestamp are embedded in the
/// 80-byte header, the rest is filler.
struct HeaderInfo {
  uint32_t height = 0;
  uint32_t time = 0;
  bool operator==(const HeaderInfo&) const = default;
};
Message make_headers(const std::vector<HeaderInfo>& headers);
std::optional<std::vector<HeaderInfo>> parse_headers(ByteSpan body);

/// GETHEADERS with a single-entry locator naming the requester's tip height.
Message make_getheaders(uint32_t tip_height);
std::optional<uint32_t> parse_getheaders(ByteSpan body);

Message make_block(uint32_t height, size_t body_size);
std::optional<uint32_t> parse_block(ByteSpan body);

void write_compact_size(Bytes& out, uint64_t n);
/// Returns (value, bytes consumed).
std::optional<std::pair<uint64_t, size_t>> read_compact_size(ByteSpan in);
size_t compact_size_len(uint64_t n);

/// Size of the message in a V2 packet: 20 framing bytes + type id + body.
size_t v2_wire_size(const Message& m);
/// Size of the message in V1 framing: 24-byte header + body.
size_t v1_wire_size(const Message& m);

}  // namespace v2net
