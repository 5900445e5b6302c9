#include <v2net/classifier.hpp>

#include <algorithm>
#include <cctype>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace v2net {

namespace {

MessageTypeSpec list_spec(std::string name, size_t unit, uint64_t max) {
  MessageTypeSpec s;
  s.name = std::move(name);
  s.count_prefix_bytes = {1, 3};
  s.unit_size = unit;
  s.min_elements = 1;
  s.max_elements = max;
  return s;
}

MessageTypeSpec fixed_spec(std::string name, size_t type_bytes, size_t body) {
  MessageTypeSpec s;
  s.name = std::move(name);
  s.type_field_bytes = type_bytes;
  s.count_prefix_bytes = {0};
  if (body == 0) {
    s.unit_size = 1;
    s.min_elements = s.max_elements = 0;
  } else {
    s.unit_size = body;
  }
  return s;
}

}  // namespace

std::string spec_name(MessageType t) {
  std::string s(command_name(t));
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

const std::vector<MessageTypeSpec>& default_specs() {
  static const std::vector<MessageTypeSpec> specs = [] {
    std::vector<MessageTypeSpec> v;
    v.push_back(list_spec("INV", kInvItemLen, 50000));
    v.push_back(list_spec("GETDATA", kInvItemLen, 50000));
    v.push_back(list_spec("ADDR", kAddrRecordLen, 1000));
    v.push_back(list_spec("HEADERS", kHeaderLen, 2000));
    auto gh = list_spec("GETHEADERS", 32, 101);
    gh.fixed_bytes = kGetHeadersFixedLen;
    v.push_back(gh);
    v.push_back(fixed_spec("PING", 1, 8));
    v.push_back(fixed_spec("PONG", 1, 8));
    v.push_back(fixed_spec("VERSION", 3, kVersionBodyLen));
    v.push_back(fixed_spec("VERACK", 3, 0));
    MessageTypeSpec block;
    block.name = "BLOCK";
    block.wildcard_min_payload = 1000;
    v.push_back(block);
    return v;
  }();
  return specs;
}

std::vector<MessageTypeSpec> load_specs(std::istream& in) {
  std::vector<MessageTypeSpec> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    MessageTypeSpec s;
    std::string prefixes;
    if (!(ss >> s.name)) continue;
    if (!(ss >> s.type_field_bytes >> prefixes >> s.fixed_bytes >> s.unit_size >> s.min_elements >> s.max_elements)) {
      throw std::invalid_argument("spec table line " + std::to_string(lineno) + ": expected 7 fields");
    }
    s.count_prefix_bytes.clear();
    std::istringstream ps(prefixes);
    std::string tok;
    while (std::getline(ps, tok, ',')) s.count_prefix_bytes.push_back(std::stoul(tok));
    size_t wildcard = 0;
    if (ss >> wildcard) s.wildcard_min_payload = wildcard;
    if (s.unit_size == 0) throw std::invalid_argument("spec table line " + std::to_string(lineno) + ": unit_size 0");
    out.push_back(std::move(s));
  }
  return out;
}

void save_specs(std::ostream& out, const std::vector<MessageTypeSpec>& specs) {
  out << "# name type_bytes prefixes fixed unit min max [wildcard_min]\n";
  for (const auto& s : specs) {
    out << s.name << ' ' << s.type_field_bytes << ' ';
    for (size_t i = 0; i < s.count_prefix_bytes.size(); ++i) out << (i ? "," : "") << s.count_prefix_bytes[i];
    out << ' ' << s.fixed_bytes << ' ' << s.unit_size << ' ' << s.min_elements << ' ' << s.max_elements;
    if (s.wildcard_min_payload) out << ' ' << *s.wildcard_min_payload;
    out << '\n';
  }
}

bool Classification::contains(std::string_view type) const {
  return std::any_of(candidates.begin(), candidates.end(), [&](const Candidate& c) { return c.type == type; });
}

std::optional<uint64_t> Classification::count_for(std::string_view type) const {
  for (const auto& c : candidates)
    if (c.type == type) return c.count;
  return std::nullopt;
}

Expected<Classification, ClassifyError> classify(size_t len, const std::vector<MessageTypeSpec>& specs) {
  if (len < 20) return ClassifyError::NotV2Packet;
  Classification out;
  out.payload_len = len;
  if (len == 20) {
    out.empty_or_decoy = true;
    return out;
  }
  const size_t contents = len - 20;
  for (const auto& s : specs) {
    if (s.wildcard_min_payload) {
      if (len >= *s.wildcard_min_payload) out.candidates.push_back({s.name, 1});
      continue;
    }
    for (size_t c : s.count_prefix_bytes) {
      const size_t overhead = s.type_field_bytes + c + s.fixed_bytes;
      if (contents < overhead) continue;
      const size_t rest = contents - overhead;
      if (rest % s.unit_size != 0) continue;
      const uint64_t k = rest / s.unit_size;
      if (k < s.min_elements || k > s.max_elements) continue;
      // A count prefix must be the one the count would be encoded with.
      if (c != 0 && compact_size_len(k) != c) continue;
      out.candidates.push_back({s.name, k});
      break;
    }
  }
  return out;
}

std::vector<Segment> segment_coalescer(const std::vector<TimedMessage>& messages, FlushPolicy policy) {
  std::vector<Segment> out;
  // Index of the open segment for each direction.
  std::map<int, size_t> open;
  for (const auto& m : messages) {
    auto it = open.find(m.direction);
    if (it != open.end() && policy.window > 0 && m.time - out[it->second].time < policy.window) {
      auto& seg = out[it->second];
      seg.payload_len += m.wire_size;
      seg.truth.push_back(m.type);
      continue;
    }
    out.push_back(Segment{m.direction, m.time, m.wire_size, {m.type}});
    open[m.direction] = out.size() - 1;
  }
  return out;
}

Expected<Metrics, EvalError> evaluate(const std::vector<Segment>& observed, MessageType target,
                                      const std::vector<MessageTypeSpec>& specs) {
  const std::string name = spec_name(target);
  Metrics m;
  for (const auto& seg : observed) {
    const size_t n_target = static_cast<size_t>(std::count(seg.truth.begin(), seg.truth.end(), target));
    m.target_total += n_target;
    auto c = classify(seg.payload_len, specs);
    if (!c || !c->contains(name)) continue;
    ++m.labeled;
    if (n_target > 0) ++m.labeled_correct;
    m.target_found += n_target;
  }
  if (m.target_total == 0) return EvalError::NoTargetMessages;
  m.precision = m.labeled ? static_cast<double>(m.labeled_correct) / static_cast<double>(m.labeled) : 0.0;
  m.recall = static_cast<double>(m.target_found) / static_cast<double>(m.target_total);
  return m;
}

void write_size_report(std::ostream& out, const std::vector<Segment>& observed) {
  std::map<std::string, std::map<size_t, size_t>> sizes;
  std::map<std::string, size_t> totals;
  for (const auto& seg : observed) {
    if (seg.truth.size() != 1) continue;
    auto name = spec_name(seg.truth[0]);
    ++sizes[name][seg.payload_len];
    ++totals[name];
  }
  out << "type,size,percent\n";
  for (const auto& [name, by_size] : sizes) {
    for (const auto& [size, n] : by_size) {
      out << name << ',' << size << ',' << std::fixed << std::setprecision(2)
          << 100.0 * static_cast<double>(n) / static_cast<double>(totals[name]) << '\n';
    }
  }
}

}  // namespace v2net
