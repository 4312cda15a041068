#include "pfmimo/cli/commands.hpp"

#include <pfmimo/mac_sim.hpp>
#include <pfmimo/model.hpp>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace pfmimo::cli {

namespace {

using ojson = nlohmann::ordered_json;

// Shortest text that reads back to the same double.
std::string csv_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

ojson vector_json(const Vector& v) {
  ojson out = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

std::string join(const Vector& v) {
  std::ostringstream s;
  s << std::setprecision(6);
  for (Eigen::Index i = 0; i < v.size(); ++i) s << (i ? " " : "") << v(i);
  return s.str();
}

std::map<std::string, PatternDistribution> parse_pi_overrides(const Scenario& sc,
                                                              const std::vector<std::string>& specs) {
  std::map<std::string, PatternDistribution> out;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw ScenarioError("--pi", "expected station=p1,p2,... but got '" + spec + "'");
    const std::string id = spec.substr(0, eq);
    const StationSpec* station = nullptr;
    for (const auto& s : sc.stations) station = s.id == id ? &s : station;
    if (station == nullptr) throw ScenarioError("--pi", "unknown station '" + id + "'");
    const auto values = parse_number_list(spec.substr(eq + 1), "--pi " + id);
    if (static_cast<int>(values.size()) != station->pattern_count()) {
      throw ScenarioError("--pi " + id, "station has " + std::to_string(station->pattern_count()) +
                                            " patterns but " + std::to_string(values.size()) + " weights were given");
    }
    try {
      out.insert_or_assign(id, PatternDistribution(Eigen::Map<const Vector>(values.data(),
                                                                            static_cast<Eigen::Index>(values.size()))));
    } catch (const DomainError& e) {
      throw ScenarioError("--pi " + id, e.what());
    }
  }
  return out;
}

}  // namespace

std::vector<double> parse_number_list(const std::string& text, const std::string& option) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = std::min(text.find(',', start), text.size());
    std::string item = text.substr(start, comma - start);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) {
      if (text.find_first_not_of(" \t") == std::string::npos) break;
      throw ScenarioError(option, "empty entry in list '" + text + "'");
    }
    double v = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw ScenarioError(option, "'" + item + "' is not a number");
    }
    out.push_back(v);
    start = comma + 1;
  }
  if (out.empty()) throw ScenarioError(option, "list is empty");
  return out;
}

void cmd_solve(const Scenario& sc, std::ostream& json_out, std::ostream& text_out) {
  spdlog::info("solving {} station(s), {} cap(s)", sc.stations.size(), sc.caps.caps.size());
  const Allocation alloc = solve_scenario(sc.stations, sc.mac, sc.caps, sc.solver);

  ojson j;
  j["stations"] = ojson::array();
  for (const auto& s : sc.stations) j["stations"].push_back(s.id);
  ojson tau = ojson::object();
  ojson pi = ojson::object();
  ojson airtimes = ojson::object();
  ojson nu = ojson::object();
  ojson theta = ojson::object();
  ojson kkt = ojson::object();
  for (std::size_t i = 0; i < sc.stations.size(); ++i) {
    const auto& id = sc.stations[i].id;
    tau[id] = alloc.attempt.tau()(static_cast<Eigen::Index>(i));
    pi[id] = vector_json(alloc.distributions[i].pi());
    airtimes[id] = alloc.station_airtimes[i];
    nu[id] = alloc.multipliers.nu[i];
    theta[id] = vector_json(alloc.multipliers.theta[i]);
    kkt[id] = {{"stationarity", alloc.kkt[i].stationarity},
               {"complementary_slackness", alloc.kkt[i].complementary_slackness},
               {"dual_feasibility", alloc.kkt[i].dual_feasibility}};
  }
  ojson rates = ojson::object();
  ojson capacity = ojson::object();
  ojson lambda = ojson::object();
  for (const auto& s : sc.stations) {
    for (const auto& f : s.flows) {
      rates[f] = alloc.flow_rates.at(f);
      capacity[f] = alloc.flow_capacity.at(f);
      lambda[f] = alloc.multipliers.lambda.at(f);
    }
  }
  j["tau"] = std::move(tau);
  j["pi"] = std::move(pi);
  j["flow_rates"] = std::move(rates);
  j["flow_capacity"] = std::move(capacity);
  j["airtimes"] = std::move(airtimes);
  j["multipliers"] = {{"lambda", std::move(lambda)}, {"nu", std::move(nu)}, {"theta", std::move(theta)}};
  j["objective"] = alloc.objective;
  j["kkt_residuals"] = std::move(kkt);
  json_out << j.dump(2) << "\n";

  text_out << std::setprecision(6);
  text_out << "objective " << alloc.objective << "\n\n";
  text_out << std::left << std::setw(12) << "station" << std::setw(14) << "tau" << std::setw(14) << "airtime"
           << "pi\n";
  for (std::size_t i = 0; i < sc.stations.size(); ++i) {
    text_out << std::setw(12) << sc.stations[i].id << std::setw(14) << alloc.attempt.tau()(static_cast<Eigen::Index>(i))
             << std::setw(14) << alloc.station_airtimes[i] << join(alloc.distributions[i].pi()) << "\n";
  }
  text_out << "\n"
           << std::setw(12) << "flow" << std::setw(14) << "rate" << std::setw(14) << "capacity" << "cap\n";
  for (const auto& s : sc.stations) {
    for (const auto& f : s.flows) {
      const auto cap = sc.caps.caps.find(f);
      text_out << std::setw(12) << f << std::setw(14) << alloc.flow_rates.at(f) << std::setw(14)
               << alloc.flow_capacity.at(f);
      if (cap != sc.caps.caps.end()) {
        text_out << cap->second;
      } else {
        text_out << "-";
      }
      text_out << "\n";
    }
  }
  text_out << std::right;
}

int cmd_simulate(const Scenario& sc, const SimulateOptions& opts, std::ostream& csv_out) {
  const std::size_t n = sc.stations.size();
  if (!opts.tau.empty() && opts.tau.size() != n) {
    throw ScenarioError("--tau", "scenario has " + std::to_string(n) + " stations but " +
                                     std::to_string(opts.tau.size()) + " attempt rates were given");
  }
  const auto pi_over = parse_pi_overrides(sc, opts.pi);

  std::optional<Allocation> solved;
  if (opts.tau.empty() || pi_over.size() < n) {
    solved = solve_scenario(sc.stations, sc.mac, sc.caps, sc.solver);
  }
  Vector tau(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    tau(static_cast<Eigen::Index>(i)) = opts.tau.empty() ? solved->attempt.tau()(static_cast<Eigen::Index>(i))
                                                         : opts.tau[i];
  }
  AttemptRates rates = [&] {
    try {
      return AttemptRates(tau);
    } catch (const DomainError& e) {
      throw ScenarioError("--tau", e.what());
    }
  }();
  std::vector<PatternDistribution> dists;
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = pi_over.find(sc.stations[i].id);
    dists.push_back(it != pi_over.end() ? it->second : solved->distributions[i]);
  }

  SimConfig cfg;
  cfg.slots = opts.slots;
  cfg.seed = opts.seed;
  cfg.mac = sc.mac;
  spdlog::info("simulating {} slots, seed {}", cfg.slots, cfg.seed);
  const SimResult result = simulate(sc.stations, rates, dists, cfg);
  for (const auto& w : result.warnings) spdlog::warn("{}", w);

  int outside = 0;
  csv_out << "metric,analytic,empirical,ci99,within_ci\n";
  for (const auto& row : compare_with_model(sc.stations, rates, dists, sc.mac, result)) {
    csv_out << row.metric << ',' << csv_number(row.analytic) << ',' << csv_number(row.empirical) << ','
            << csv_number(row.ci99) << ',' << (row.within_ci ? "true" : "false") << '\n';
    outside += row.within_ci ? 0 : 1;
  }
  return outside;
}

void cmd_sweep(const Scenario& sc, const SweepOptions& opts, std::ostream& csv_out) {
  if (opts.snr_db.empty()) throw ScenarioError("--snr-list", "list is empty");
  const StationSpec* station = nullptr;
  if (!opts.station.empty()) {
    for (const auto& s : sc.stations) station = s.id == opts.station ? &s : station;
    if (station == nullptr) throw ScenarioError("--station", "unknown station '" + opts.station + "'");
  } else if (sc.stations.size() == 1) {
    station = &sc.stations.front();
  } else {
    throw ScenarioError("--station", "scenario has several stations; choose one to sweep");
  }

  ChannelConfig ch = sc.channel;
  if (opts.draws) ch.draws = *opts.draws;
  if (opts.seed) ch.seed = *opts.seed;
  try {
    ch.validate();
  } catch (const ConfigurationError& e) {
    throw ScenarioError("--draws", e.what());
  }
  spdlog::info("sweeping station '{}' over {} SNR points, {} draws", station->id, opts.snr_db.size(), ch.draws);
  const auto sweep = snr_sweep(station->patterns, opts.snr_db, ch, sc.solver);

  csv_out << "snr_db,pattern_index,pi,sumlog_pf,sumlog_uniform\n";
  for (const auto& p : sweep.points) {
    if (!p.feasible) {
      std::string names;
      for (const auto& f : p.infeasible_flows) names += (names.empty() ? "" : ", ") + f;
      spdlog::warn("{} dB: no pattern delivers bits to {}", p.snr_db, names);
    }
    for (int k = 0; k < p.pf.size(); ++k) {
      csv_out << csv_number(p.snr_db) << ',' << k + 1 << ',' << csv_number(p.pf[k]) << ','
              << csv_number(p.sumlog_pf) << ',' << csv_number(p.sumlog_uniform) << '\n';
    }
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Proportional-fair MU-MIMO pattern and airtime allocation for 802.11 WLANs", "pfmimo"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string output;
  SimulateOptions sim;
  SweepOptions sweep;
  std::string snr_list = "0,5,10,15,20,25,30,35,40";
  std::string tau_list;
  int draws = 0;
  std::uint64_t sweep_seed = 0;

  auto* solve = app.add_subcommand("solve", "proportional-fair allocation as JSON plus a text summary");
  auto* simulate = app.add_subcommand("simulate", "slotted MAC simulation against the analytic model (CSV)");
  auto* sweep_cmd = app.add_subcommand("sweep", "Rayleigh-fading SNR sweep of one station (CSV)");
  for (auto* sub : {solve, simulate, sweep_cmd}) {
    sub->add_option("scenario", scenario_path, "scenario JSON file")->required();
    sub->add_option("-o,--output", output, "output file (default: standard output)");
  }
  simulate->add_option("--slots", sim.slots, "number of MAC slots")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "random seed");
  simulate->add_option("--tau", tau_list, "attempt probabilities, one per station: a,b,c");
  simulate->add_option("--pi", sim.pi, "pattern distribution override: station=p1,p2,... (repeatable)");
  sweep_cmd->add_option("--snr-list", snr_list, "SNR points in dB: a,b,c");
  auto* draws_opt = sweep_cmd->add_option("--draws", draws, "fading realizations");
  auto* seed_opt = sweep_cmd->add_option("--seed", sweep_seed, "random seed");
  sweep_cmd->add_option("--station", sweep.station, "station to sweep");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    const Scenario sc = load_scenario(scenario_path);
    std::ofstream file;
    if (!output.empty()) {
      file.open(output, std::ios::binary);
      if (!file) throw ScenarioError(output, "cannot open output file");
    }
    std::ostream& dest = output.empty() ? out : file;

    if (*solve) {
      std::ostringstream summary;
      cmd_solve(sc, dest, summary);
      (output.empty() ? err : out) << summary.str();
    } else if (*simulate) {
      if (!tau_list.empty()) sim.tau = parse_number_list(tau_list, "--tau");
      const int outside = cmd_simulate(sc, sim, dest);
      if (!output.empty()) out << outside << " metric(s) outside their 99% confidence interval\n";
    } else {
      sweep.snr_db = parse_number_list(snr_list, "--snr-list");
      if (draws_opt->count() > 0) sweep.draws = draws;
      if (seed_opt->count() > 0) sweep.seed = sweep_seed;
      cmd_sweep(sc, sweep, dest);
    }
    if (!output.empty()) {
      file.close();
      if (!file) throw ScenarioError(output, "write failed");
    }
    return kExitOk;
  } catch (const InfeasibleFlowError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << " (last residual " << e.last_residual() << ")\n";
    return kExitNonConvergence;
  } catch (const ScenarioError& e) {
    err << "error: " << scenario_path << ": " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace pfmimo::cli
