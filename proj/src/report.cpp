#include <v2net/report.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace v2net {

using nlohmann::ordered_json;

namespace {

std::string time_str(SimTime t) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << to_seconds(t);
  return s.str();
}

std::string csv_value(const ordered_json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

std::optional<ReportFormat> report_format_from(std::string_view s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  return std::nullopt;
}

void write_snapshots_csv(std::ostream& out, const std::vector<Snapshot>& snaps) {
  out << kSnapshotHeader << '\n';
  for (const auto& s : snaps) {
    out << time_str(s.time) << ',' << s.outbound_honest << ',' << s.outbound_attacker << ',' << s.inbound_honest << ','
        << s.inbound_attacker << ',' << s.v1_count << ',' << s.v2_count << '\n';
  }
}

void write_snapshots_json(std::ostream& out, const std::vector<Snapshot>& snaps) {
  ordered_json arr = ordered_json::array();
  for (const auto& s : snaps) {
    arr.push_back(ordered_json{{"time", to_seconds(s.time)},
                               {"outbound_honest", s.outbound_honest},
                               {"outbound_attacker", s.outbound_attacker},
                               {"inbound_honest", s.inbound_honest},
                               {"inbound_attacker", s.inbound_attacker},
                               {"v1_count", s.v1_count},
                               {"v2_count", s.v2_count}});
  }
  out << arr.dump(1) << '\n';
}

void write_events_jsonl(std::ostream& out, const std::vector<LogEntry>& events) {
  for (const auto& e : events) {
    ordered_json j{{"t", to_seconds(e.time)}, {"node", e.node}, {"event", e.event}, {"details", e.details}};
    out << j.dump() << '\n';
  }
}

ordered_json summary_json(const RunReport& r) {
  ordered_json j;
  j["scenario"] = r.scenario;
  j["seed"] = r.seed;
  j["config"] = r.config_json.empty() ? ordered_json::object() : ordered_json::parse(r.config_json);
  j["metrics"] = r.summary;
  return j;
}

void write_summary_csv(std::ostream& out, const RunReport& r) {
  out << "key,value\n";
  out << "scenario," << r.scenario << '\n';
  out << "seed," << r.seed << '\n';
  for (auto it = r.summary.begin(); it != r.summary.end(); ++it) out << it.key() << ',' << csv_value(*it) << '\n';
}

std::optional<std::string> emit_report(const RunReport& r, const std::string& dir, ReportFormat fmt) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) return "cannot create " + dir + ": " + ec.message();
  auto open = [&](const std::string& name, std::ofstream& f) -> std::optional<std::string> {
    f.open(fs::path(dir) / name, std::ios::binary | std::ios::trunc);
    if (!f) return "cannot write " + (fs::path(dir) / name).string();
    return std::nullopt;
  };
  std::ofstream snaps, summary, events, config;
  const bool csv = fmt == ReportFormat::Csv;
  if (auto e = open(csv ? "snapshots.csv" : "snapshots.json", snaps)) return e;
  if (auto e = open(csv ? "summary.csv" : "summary.json", summary)) return e;
  if (auto e = open("events.jsonl", events)) return e;
  if (auto e = open("config.json", config)) return e;
  config << (r.config_json.empty() ? std::string("{}") : r.config_json) << '\n';
  if (csv) {
    write_snapshots_csv(snaps, r.snapshots);
    write_summary_csv(summary, r);
  } else {
    write_snapshots_json(snaps, r.snapshots);
    summary << summary_json(r).dump(2) << '\n';
  }
  write_events_jsonl(events, r.events);
  for (auto* f : {&snaps, &summary, &events, &config}) {
    f->flush();
    if (!*f) return "write failed in " + dir;
  }
  return std::nullopt;
}

}  // namespace v2net
