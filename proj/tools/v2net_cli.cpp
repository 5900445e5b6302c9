#include <v2net/addr_sim.hpp>
#include <v2net/classifier.hpp>
#include <v2net/config.hpp>
#include <v2net/report.hpp>
#include <v2net/scenarios.hpp>
#include <v2net/sweep.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace v2net;

namespace {

struct RunOpts {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out;
  std::string format = "csv";
};

int run_kind(ScenarioKind kind, const RunOpts& o) {
  ScenarioConfig cfg = default_config(kind);
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) {
      std::cerr << "error: cannot read " << o.config_path << '\n';
      return 2;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    auto parsed = parse_config(ss.str(), cfg);
    if (!parsed) {
      std::cerr << "config error: " << parsed.error() << '\n';
      return 2;
    }
    cfg = *parsed;
    if (cfg.kind != kind) {
      std::cerr << "config error: scenario '" << to_string(cfg.kind) << "' does not match the subcommand\n";
      return 2;
    }
  }
  if (o.seed) cfg.seed = *o.seed;
  auto fmt = report_format_from(o.format);
  if (!fmt) {
    std::cerr << "error: --format must be csv or json\n";
    return 2;
  }
  RunReport r = run_scenario(cfg);
  if (!o.out.empty()) {
    if (auto err = emit_report(r, o.out, *fmt)) {
      std::cerr << "error: " << *err << '\n';
      return 1;
    }
  }
  std::cout << summary_json(r)["metrics"].dump(2) << '\n';
  return 0;
}

AddrTables load_or_generate(const std::string& path, uint64_t seed) {
  if (path.empty()) {
    SyntheticDbSpec s;
    s.seed = seed;
    return generate_synthetic_addrdb(s);
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return AddrTables::load(in, SyntheticDbSpec{}.key);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BIP-324 transport and P2P attack simulator"};
  app.require_subcommand(1);

  RunOpts eo, dopt, co;
  auto add_run = [&](const char* name, const char* desc, RunOpts& o) {
    auto* sc = app.add_subcommand(name, desc);
    sc->add_option("--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    sc->add_option("--seed", o.seed, "Override the configured seed");
    sc->add_option("--out", o.out, "Output directory for the report");
    sc->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    return sc;
  };
  auto* ecl = add_run("run-eclipse", "Replay-based eclipse attack against one victim", eo);
  auto* dng = add_run("run-downgrade", "V1-fallback downgrade at network restart", dopt);
  auto* cms = add_run("run-countermeasures", "Inbound flood against the duplicate-prefix limit", co);

  std::string db_path, grid_out;
  size_t attackers = 20, closes = 1, seeds = 64;
  uint64_t seed_base = 0, db_seed = 1;
  int threads = 0;
  bool grid = false, serial = false;
  auto* asim = app.add_subcommand("addr-sim", "Time until all outbound slots hold attacker addresses");
  asim->add_option("--db", db_path, "Address database dump (default: synthetic)");
  asim->add_option("--db-seed", db_seed, "Seed for the synthetic database");
  asim->add_option("--attackers", attackers, "Injected attacker addresses")->check(CLI::Range(1, 255));
  asim->add_option("--closes", closes, "Connections closed per interval")->check(CLI::Range(1, 10));
  asim->add_option("--seeds", seeds, "Runs per point")->check(CLI::Range(1, 100000));
  asim->add_option("--seed-base", seed_base, "Run k uses seed-base + k + 1");
  asim->add_flag("--grid", grid, "Sweep attackers {20,30,40,50} x closes {1,2,5,10}");
  asim->add_option("--threads", threads, "OpenMP threads (0: runtime default)");
  asim->add_flag("--serial", serial, "Use the serial reference kernel");
  asim->add_option("--out", grid_out, "Write the per-point CSV here as well");

  std::string gen_out;
  SyntheticDbSpec gen;
  auto* gdb = app.add_subcommand("gen-db", "Write a synthetic address database");
  gdb->add_option("--out", gen_out, "Output file")->required();
  gdb->add_option("--seed", gen.seed, "Generator seed");
  gdb->add_option("--new-fill", gen.new_fill, "Fraction of new-table cells filled")->check(CLI::Range(0.0, 1.0));
  gdb->add_option("--tried-fill", gen.tried_fill, "Fraction of tried-table cells filled")->check(CLI::Range(0.0, 1.0));
  gdb->add_option("--groups", gen.groups, "Distinct /16 groups")->check(CLI::Range(1, 65535));

  std::string trace_in;
  bool simulate = false, per_message = false;
  size_t sim_nodes = 10;
  double sim_hours = 1;
  uint64_t sim_seed = 1;
  auto* ctr = app.add_subcommand("classify-trace", "Infer message types from V2 payload lengths");
  ctr->add_option("--input", trace_in, "One payload length per line ('#' comments)");
  ctr->add_flag("--simulate", simulate, "Classify traffic from an attack-free simulated network");
  ctr->add_flag("--per-message", per_message, "Simulated nodes write one segment per message");
  ctr->add_option("--nodes", sim_nodes, "Simulated honest nodes");
  ctr->add_option("--hours", sim_hours, "Simulated duration in hours");
  ctr->add_option("--seed", sim_seed, "Simulation seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ecl) return run_kind(ScenarioKind::Eclipse, eo);
    if (*dng) return run_kind(ScenarioKind::Downgrade, dopt);
    if (*cms) return run_kind(ScenarioKind::Countermeasures, co);

    if (*asim) {
      AddrTables db = load_or_generate(db_path, db_seed);
      AddrGridSpec spec;
      spec.seeds = seeds;
      spec.seed_base = seed_base;
      if (!grid) {
        spec.attackers = {attackers};
        spec.closes = {closes};
      }
      auto cells = serial ? addr_grid_serial(db, spec) : addr_grid_parallel(db, spec, threads);
      if (!cells) {
        std::cerr << "error: " << to_string(cells.error()) << '\n';
        return 2;
      }
      std::ostringstream csv;
      csv << "attackers,closes,runs,completed,mean_days,min_days,max_days\n";
      for (const auto& c : *cells)
        csv << c.attackers << ',' << c.closes << ',' << c.days.size() << ',' << c.completed << ',' << c.mean_days << ','
            << c.min_days << ',' << c.max_days << '\n';
      std::cout << csv.str();
      if (grid) std::cout << "# monotone " << (grid_monotone(*cells, spec) ? "yes" : "no") << '\n';
      if (!grid_out.empty()) {
        std::ofstream f(grid_out);
        f << csv.str();
        if (!f) {
          std::cerr << "error: cannot write " << grid_out << '\n';
          return 1;
        }
      }
      return 0;
    }

    if (*gdb) {
      AddrTables db = generate_synthetic_addrdb(gen);
      std::ofstream f(gen_out);
      db.dump(f);
      if (!f) {
        std::cerr << "error: cannot write " << gen_out << '\n';
        return 1;
      }
      std::cout << "new_refs " << db.new_ref_count() << " new_unique " << db.new_unique_count() << " tried "
                << db.tried_count() << " groups " << distinct_groups(db) << '\n';
      return 0;
    }

    if (*ctr) {
      if (simulate) {
        auto segs = simulate_traffic(sim_nodes, seconds(sim_hours * 3600), sim_seed, per_message);
        write_size_report(std::cout, segs);
        for (MessageType t : {MessageType::Ping, MessageType::Inv, MessageType::Headers}) {
          if (auto m = evaluate(segs, t))
            std::cout << "# " << spec_name(t) << " precision " << m->precision << " recall " << m->recall << '\n';
        }
        return 0;
      }
      std::ifstream file;
      std::istream* in = &std::cin;
      if (!trace_in.empty()) {
        file.open(trace_in);
        if (!file) {
          std::cerr << "error: cannot read " << trace_in << '\n';
          return 2;
        }
        in = &file;
      }
      std::cout << "payload_len,candidates\n";
      std::string line;
      size_t lineno = 0;
      while (std::getline(*in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::istringstream ls(line);
        long long len;
        if (!(ls >> len)) continue;
        if (len < 0) {
          std::cerr << "error: negative length on line " << lineno << '\n';
          return 2;
        }
        auto c = classify(static_cast<size_t>(len));
        std::cout << len << ',';
        if (!c) {
          std::cout << "not-v2\n";
          continue;
        }
        if (c->empty_or_decoy) std::cout << "empty-or-decoy";
        for (size_t i = 0; i < c->candidates.size(); ++i)
          std::cout << (i || c->empty_or_decoy ? ";" : "") << c->candidates[i].type << 'x' << c->candidates[i].count;
        std::cout << '\n';
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
