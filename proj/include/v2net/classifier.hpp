#pragma once

// Message-type inference from encrypted payload sizes. A payload of length x
// is consistent with (type t, k elements) when
//   x - 20 - type_bytes(t) - prefix - fixed(t) == k * unit(t)
// for a count prefix the element count would actually be encoded with.

#include <v2net/common.hpp>
#include <v2net/messages.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace v2net {

struct MessageTypeSpec {
  std::string name;
  size_t type_field_bytes = 1;
  /// Allowed count-prefix sizes; {0} for fixed-size messages.
  std::vector<size_t> count_prefix_bytes{0};
  /// Bytes outside the repeated part (e.g. version and stop hash in GETHEADERS).
  size_t fixed_bytes = 0;
  size_t unit_size = 1;
  uint64_t min_elements = 1;
  uint64_t max_elements = 1;
  /// Unstructured types (BLOCK) match any payload at or above this size.
  std::optional<size_t> wildcard_min_payload;
};

/// INV, GETDATA, ADDR, HEADERS, PING, PONG, VERSION, VERACK, GETHEADERS, BLOCK.
const std::vector<MessageTypeSpec>& default_specs();

/// Whitespace-separated rows:
///   name type_bytes prefixes fixed unit min max [wildcard_min]
/// where prefixes is a comma list such as "1,3" or "0". '#' starts a comment.
std::vector<MessageTypeSpec> load_specs(std::istream& in);
void save_specs(std::ostream& out, const std::vector<MessageTypeSpec>& specs);

struct Candidate {
  std::string type;
  uint64_t count = 0;
  bool operator==(const Candidate&) const = default;
};

struct Classification {
  size_t payload_len = 0;
  bool empty_or_decoy = false;
  std::vector<Candidate> candidates;

  bool contains(std::string_view type) const;
  std::optional<uint64_t> count_for(std::string_view type) const;
};

enum class ClassifyError { NotV2Packet };

Expected<Classification, ClassifyError> classify(size_t payload_len,
                                                 const std::vector<MessageTypeSpec>& specs = default_specs());

/// One observed TCP payload together with the messages it actually carried.
struct Segment {
  int direction = 0;
  SimTime time = 0;
  size_t payload_len = 0;
  std::vector<MessageType> truth;
};

struct TimedMessage {
  SimTime time = 0;
  int direction = 0;
  MessageType type = MessageType::Ping;
  size_t wire_size = 0;
};

struct FlushPolicy {
  /// Messages in one direction are written as one segment while
  /// time - first_time < window. A zero window writes one per message.
  SimTime window = 0;
  static FlushPolicy per_message() { return {}; }
  static FlushPolicy within(SimTime dt) { return {dt}; }
};

std::vector<Segment> segment_coalescer(const std::vector<TimedMessage>& messages, FlushPolicy policy);

struct Metrics {
  double precision = 0;
  double recall = 0;
  size_t labeled = 0;
  size_t labeled_correct = 0;
  size_t target_total = 0;
  size_t target_found = 0;
};

enum class EvalError { NoTargetMessages };

/// Precision: labeled segments that carry at least one target message, over
/// all labeled segments. Recall: target messages inside labeled segments,
/// over all target messages.
Expected<Metrics, EvalError> evaluate(const std::vector<Segment>& observed, MessageType target,
                                      const std::vector<MessageTypeSpec>& specs = default_specs());

/// Table of (type, payload size, percent of that type's single-message
/// segments with that size), written as CSV.
void write_size_report(std::ostream& out, const std::vector<Segment>& observed);

std::string spec_name(MessageType t);

}  // namespace v2net
