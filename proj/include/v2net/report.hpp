#pragma once

// Run reports: metric snapshots, the event log and a summary with the
// configuration echo. Written as CSV or JSON plus line-delimited JSON events.

#include <v2net/netsim.hpp>

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace v2net {

struct Snapshot {
  SimTime time = 0;
  size_t outbound_honest = 0;
  size_t outbound_attacker = 0;
  size_t inbound_honest = 0;
  size_t inbound_attacker = 0;
  size_t v1_count = 0;
  size_t v2_count = 0;
};

struct RunReport {
  std::string scenario;
  uint64_t seed = 0;
  std::string config_json;
  std::vector<Snapshot> snapshots;
  std::vector<LogEntry> events;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
};

enum class ReportFormat { Csv, Json };
std::optional<ReportFormat> report_format_from(std::string_view s);

inline constexpr std::string_view kSnapshotHeader =
    "time,outbound_honest,outbound_attacker,inbound_honest,inbound_attacker,v1_count,v2_count";

void write_snapshots_csv(std::ostream& out, const std::vector<Snapshot>& snaps);
void write_snapshots_json(std::ostream& out, const std::vector<Snapshot>& snaps);
void write_events_jsonl(std::ostream& out, const std::vector<LogEntry>& events);
/// Summary object: scenario, seed, config echo and the metrics.
nlohmann::ordered_json summary_json(const RunReport& r);
void write_summary_csv(std::ostream& out, const RunReport& r);

/// Writes snapshots.{csv,json}, summary.{csv,json}, events.jsonl and
/// config.json into `dir` (created if needed). Returns an error message on I/O failure.
std::optional<std::string> emit_report(const RunReport& r, const std::string& dir, ReportFormat fmt);

}  // namespace v2net
