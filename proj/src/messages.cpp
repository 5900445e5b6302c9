#include <v2net/messages.hpp>

#include <algorithm>

namespace v2net {

namespace {

struct TypeRow {
  MessageType type;
  std::string_view command;
  TypeId id;
};

// Short ids follow the BIP324 table; VERSION and VERACK have none and use
// the long form.
constexpr std::array<TypeRow, 10> kTypeTable{{
    {MessageType::Version, "version", {0x0001, true}},
    {MessageType::Verack, "verack", {0x0002, true}},
    {MessageType::Ping, "ping", {18, false}},
    {MessageType::Pong, "pong", {19, false}},
    {MessageType::Inv, "inv", {14, false}},
    {MessageType::GetData, "getdata", {11, false}},
    {MessageType::Addr, "addr", {1, false}},
    {MessageType::Headers, "headers", {13, false}},
    {MessageType::GetHeaders, "getheaders", {12, false}},
    {MessageType::Block, "block", {2, false}},
}};

const TypeRow& row(MessageType t) {
  for (const auto& r : kTypeTable)
    if (r.type == t) return r;
  throw std::logic_error("unknown message type");
}

void put_u32(Bytes& b, uint32_t v) {
  uint8_t tmp[4];
  write_le32(tmp, v);
  b.insert(b.end(), tmp, tmp + 4);
}
void put_u64(Bytes& b, uint64_t v) {
  uint8_t tmp[8];
  write_le64(tmp, v);
  b.insert(b.end(), tmp, tmp + 8);
}

void put_net_addr(Bytes& b, uint64_t services, const NetAddress& a) {
  put_u64(b, services);
  b.insert(b.end(), a.ip().begin(), a.ip().end());
  b.push_back(static_cast<uint8_t>(a.port() >> 8));
  b.push_back(static_cast<uint8_t>(a.port()));
}

NetAddress get_net_addr(const uint8_t* p) {
  std::array<uint8_t, 16> ip{};
  std::copy_n(p, 16, ip.begin());
  return NetAddress(ip, static_cast<uint16_t>((p[16] << 8) | p[17]));
}

Message make_inv_like(MessageType t, const std::vector<InvItem>& items) {
  Message m{t, {}};
  write_compact_size(m.body, items.size());
  for (const auto& it : items) {
    put_u32(m.body, it.type);
    m.body.insert(m.body.end(), it.hash.begin(), it.hash.end());
  }
  return m;
}

/// Reads a count prefix and checks that exactly count * unit bytes follow.
std::optional<std::pair<uint64_t, size_t>> counted(ByteSpan body, size_t unit) {
  auto cs = read_compact_size(body);
  if (!cs) return std::nullopt;
  if (body.size() - cs->second != cs->first * unit) return std::nullopt;
  return cs;
}

}  // namespace

std::string_view command_name(MessageType t) { return row(t).command; }

std::optional<MessageType> from_command(std::string_view name) {
  for (const auto& r : kTypeTable)
    if (r.command == name) return r.type;
  return std::nullopt;
}

TypeId v2_type_id(MessageType t) { return row(t).id; }

std::optional<MessageType> from_type_id(TypeId id) {
  for (const auto& r : kTypeTable)
    if (r.id == id) return r.type;
  return std::nullopt;
}

void write_compact_size(Bytes& out, uint64_t n) {
  if (n < 0xfd) {
    out.push_back(static_cast<uint8_t>(n));
  } else if (n <= 0xffff) {
    out.push_back(0xfd);
    out.push_back(static_cast<uint8_t>(n));
    out.push_back(static_cast<uint8_t>(n >> 8));
  } else if (n <= 0xffffffffULL) {
    out.push_back(0xfe);
    put_u32(out, static_cast<uint32_t>(n));
  } else {
    out.push_back(0xff);
    put_u64(out, n);
  }
}

std::optional<std::pair<uint64_t, size_t>> read_compact_size(ByteSpan in) {
  if (in.empty()) return std::nullopt;
  uint8_t first = in[0];
  if (first < 0xfd) return std::pair<uint64_t, size_t>{first, 1};
  if (first == 0xfd) {
    if (in.size() < 3) return std::nullopt;
    return std::pair<uint64_t, size_t>{read_le16(in.data() + 1), 3};
  }
  if (first == 0xfe) {
    if (in.size() < 5) return std::nullopt;
    return std::pair<uint64_t, size_t>{read_le32(in.data() + 1), 5};
  }
  if (in.size() < 9) return std::nullopt;
  return std::pair<uint64_t, size_t>{read_le64(in.data() + 1), 9};
}

size_t compact_size_len(uint64_t n) {
  if (n < 0xfd) return 1;
  if (n <= 0xffff) return 3;
  if (n <= 0xffffffffULL) return 5;
  return 9;
}

Message make_version(const VersionInfo& v) {
  Message m{MessageType::Version, {}};
  auto& b = m.body;
  put_u32(b, static_cast<uint32_t>(v.protocol_version));
  put_u64(b, v.services);
  put_u64(b, static_cast<uint64_t>(v.timestamp));
  put_net_addr(b, 0, NetAddress());
  put_net_addr(b, v.services, NetAddress());
  put_u64(b, v.nonce);
  std::string ua = v.user_agent;
  ua.resize(kUserAgentLen, ' ');
  write_compact_size(b, ua.size());
  b.insert(b.end(), ua.begin(), ua.end());
  put_u32(b, static_cast<uint32_t>(v.start_height));
  b.push_back(v.relay ? 1 : 0);
  return m;
}

std::optional<VersionInfo> parse_version(ByteSpan b) {
  if (b.size() != kVersionBodyLen) return std::nullopt;
  VersionInfo v;
  v.protocol_version = static_cast<int32_t>(read_le32(b.data()));
  v.services = read_le64(b.data() + 4);
  v.timestamp = static_cast<int64_t>(read_le64(b.data() + 12));
  v.nonce = read_le64(b.data() + 72);
  if (b[80] != kUserAgentLen) return std::nullopt;
  v.user_agent.assign(reinterpret_cast<const char*>(b.data() + 81), kUserAgentLen);
  while (!v.user_agent.empty() && v.user_agent.back() == ' ') v.user_agent.pop_back();
  v.start_height = static_cast<int32_t>(read_le32(b.data() + 97));
  v.relay = b[101] != 0;
  return v;
}

Message make_verack() { return Message{MessageType::Verack, {}}; }

Message make_ping(uint64_t nonce) {
  Message m{MessageType::Ping, {}};
  put_u64(m.body, nonce);
  return m;
}

Message make_pong(uint64_t nonce) {
  Message m{MessageType::Pong, {}};
  put_u64(m.body, nonce);
  return m;
}

std::optional<uint64_t> parse_nonce(ByteSpan body) {
  if (body.size() != 8) return std::nullopt;
  return read_le64(body.data());
}

Message make_inv(const std::vector<InvItem>& items) { return make_inv_like(MessageType::Inv, items); }
Message make_getdata(const std::vector<InvItem>& items) { return make_inv_like(MessageType::GetData, items); }

std::optional<std::vector<InvItem>> parse_inv(ByteSpan body) {
  auto cs = counted(body, kInvItemLen);
  if (!cs) return std::nullopt;
  std::vector<InvItem> out(cs->first);
  const uint8_t* p = body.data() + cs->second;
  for (auto& it : out) {
    it.type = read_le32(p);
    std::copy_n(p + 4, 32, it.hash.begin());
    p += kInvItemLen;
  }
  return out;
}

Message make_addr(const std::vector<AddrEntry>& entries) {
  Message m{MessageType::Addr, {}};
  write_compact_size(m.body, entries.size());
  for (const auto& e : entries) {
    put_u32(m.body, e.time);
    put_net_addr(m.body, e.services, e.addr);
  }
  return m;
}

std::optional<std::vector<AddrEntry>> parse_addr(ByteSpan body) {
  auto cs = counted(body, kAddrRecordLen);
  if (!cs) return std::nullopt;
  std::vector<AddrEntry> out(cs->first);
  const uint8_t* p = body.data() + cs->second;
  for (auto& e : out) {
    e.time = read_le32(p);
    e.services = read_le64(p + 4);
    e.addr = get_net_addr(p + 12);
    p += kAddrRecordLen;
  }
  return out;
}

Message make_headers(const std::vector<HeaderInfo>& headers) {
  Message m{MessageType::Headers, {}};
  write_compact_size(m.body, headers.size());
  for (const auto& h : headers) {
    Bytes hdr(kHeaderLen, 0);
    write_le32(hdr.data(), 0x20000000);
    write_le32(hdr.data() + 4, h.height == 0 ? 0 : h.height - 1);  // prev-block marker
    write_le32(hdr.data() + 36, h.height);                           // merkle-root marker
    write_le32(hdr.data() + 68, h.time);
    write_le32(hdr.data() + 72, 0x1d00ffff);
    append(m.body, hdr);  // last byte is the empty tx count
  }
  return m;
}

std::optional<std::vector<HeaderInfo>> parse_headers(ByteSpan body) {
  auto cs = counted(body, kHeaderLen);
  if (!cs) return std::nullopt;
  std::vector<HeaderInfo> out(cs->first);
  const uint8_t* p = body.data() + cs->second;
  for (auto& h : out) {
    h.height = read_le32(p + 36);
    h.time = read_le32(p + 68);
    p += kHeaderLen;
  }
  return out;
}

Message make_getheaders(uint32_t tip_height) {
  Message m{MessageType::GetHeaders, {}};
  put_u32(m.body, 70016);
  write_compact_size(m.body, 1);
  Bytes locator(32, 0);
  write_le32(locator.data(), tip_height);
  append(m.body, locator);
  m.body.insert(m.body.end(), 32, 0);  // stop hash
  return m;
}

std::optional<uint32_t> parse_getheaders(ByteSpan body) {
  if (body.size() < kGetHeadersFixedLen + 1) return std::nullopt;
  auto cs = read_compact_size(body.subspan(4));
  if (!cs || cs->first == 0) return std::nullopt;
  if (body.size() != kGetHeadersFixedLen + cs->second + 32 * cs->first) return std::nullopt;
  return read_le32(body.data() + 4 + cs->second);
}

Message make_block(uint32_t height, size_t body_size) {
  Message m{MessageType::Block, Bytes(std::max<size_t>(body_size, 84), 0)};
  write_le32(m.body.data(), 0x20000000);
  write_le32(m.body.data() + 36, height);
  return m;
}

std::optional<uint32_t> parse_block(ByteSpan body) {
  if (body.size() < 84) return std::nullopt;
  return read_le32(body.data() + 36);
}

size_t v2_wire_size(const Message& m) { return 20 + v2_type_id(m.type).size() + m.body.size(); }
size_t v1_wire_size(const Message& m) { return kV1HeaderLen + m.body.size(); }

}  // namespace v2net
