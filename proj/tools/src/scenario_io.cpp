#include "pfmimo/cli/scenario_io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace pfmimo::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& detail) { throw ScenarioError(where, detail); }

const json& require(const json& obj, const std::string& key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(where, "missing field '" + key + "'");
  return *it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) fail(where, "expected an integer");
  return v.get<int>();
}

std::string string(const json& v, const std::string& where) {
  if (!v.is_string()) fail(where, "expected a string");
  return v.get<std::string>();
}

const json& array(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array");
  return v;
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> known) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) fail(where.empty() ? key : where + "." + key, "unknown field");
  }
}

MacParams parse_mac(const json& j) {
  check_keys(j, "mac", {"sigma_us", "ts_us"});
  const double sigma = number(require(j, "sigma_us", "mac"), "mac.sigma_us");
  const double ts = number(require(j, "ts_us", "mac"), "mac.ts_us");
  try {
    return MacParams(sigma, ts);
  } catch (const Error& e) {
    fail("mac", e.what());
  }
}

StationSpec parse_station(const json& j, const std::string& at) {
  check_keys(j, at, {"id", "flows", "V", "D"});
  const std::string id = string(require(j, "id", at), at + ".id");
  std::vector<std::string> flows;
  for (std::size_t f = 0; const auto& name : array(require(j, "flows", at), at + ".flows")) {
    flows.push_back(string(name, at + ".flows[" + std::to_string(f++) + "]"));
  }
  if (flows.empty()) fail(at + ".flows", "station carries no flows");

  const json& rows = array(require(j, "V", at), at + ".V");
  if (rows.empty()) fail(at + ".V", "pattern matrix has no rows");
  const auto f_count = static_cast<Eigen::Index>(flows.size());
  IntMatrix v(static_cast<Eigen::Index>(rows.size()), f_count);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::string row_at = at + ".V[" + std::to_string(k) + "]";
    const json& row = array(rows[k], row_at);
    if (static_cast<Eigen::Index>(row.size()) != f_count) {
      fail(row_at, "row has " + std::to_string(row.size()) + " entries, expected " + std::to_string(f_count) +
                       " (one per flow)");
    }
    for (std::size_t f = 0; f < row.size(); ++f) {
      const std::string cell = row_at + "[" + std::to_string(f) + "]";
      const int value = integer(row[f], cell);
      if (value < 0) fail(cell, "stream counts must be non-negative");
      v(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(f)) = value;
    }
  }
  for (Eigen::Index f = 0; f < f_count; ++f) {
    if (v.col(f).sum() == 0) {
      throw InfeasibleFlowError(flows[static_cast<std::size_t>(f)],
                                "no pattern of station '" + id + "' gives it a stream");
    }
  }

  Matrix d = Matrix::Ones(v.rows(), f_count);
  if (const auto it = j.find("D"); it != j.end()) {
    const json& dj = array(*it, at + ".D");
    if (!dj.empty() && dj.front().is_array()) {
      if (dj.size() != rows.size()) fail(at + ".D", "payload matrix needs one row per pattern");
      for (std::size_t k = 0; k < dj.size(); ++k) {
        const std::string row_at = at + ".D[" + std::to_string(k) + "]";
        const json& row = array(dj[k], row_at);
        if (static_cast<Eigen::Index>(row.size()) != f_count) fail(row_at, "row needs one entry per flow");
        for (std::size_t f = 0; f < row.size(); ++f) {
          d(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(f)) =
              number(row[f], row_at + "[" + std::to_string(f) + "]");
        }
      }
    } else {
      if (static_cast<Eigen::Index>(dj.size()) != f_count) fail(at + ".D", "per-flow payload needs one entry per flow");
      for (std::size_t f = 0; f < dj.size(); ++f) {
        d.col(static_cast<Eigen::Index>(f)).setConstant(number(dj[f], at + ".D[" + std::to_string(f) + "]"));
      }
    }
  }
  try {
    return StationSpec(id, std::move(flows), PatternMatrix(std::move(v)), PayloadMatrix(std::move(d)));
  } catch (const ConfigurationError& e) {
    fail(at, e.what());
  }
}

SolverConfig parse_solver(const json& j) {
  check_keys(j, "solver", {"objective_tol", "simplex_tol", "max_iters", "subgradient_step", "root_tol", "kkt_tol"});
  SolverConfig cfg;
  auto read = [&](const char* key, double& out) {
    if (const auto it = j.find(key); it != j.end()) out = number(*it, std::string("solver.") + key);
  };
  read("objective_tol", cfg.objective_tol);
  read("simplex_tol", cfg.simplex_tol);
  read("subgradient_step", cfg.subgradient_step);
  read("root_tol", cfg.root_tol);
  read("kkt_tol", cfg.kkt_tol);
  if (const auto it = j.find("max_iters"); it != j.end()) cfg.max_iters = integer(*it, "solver.max_iters");
  try {
    cfg.validate();
  } catch (const ConfigurationError& e) {
    fail("solver", e.what());
  }
  return cfg;
}

ChannelConfig parse_channel(const json& j) {
  check_keys(j, "channel", {"ap_antennas", "client_antennas", "snr_db", "txop_us", "bits_per_stream",
                            "demod_threshold_db", "draws", "seed", "fading"});
  ChannelConfig ch;
  auto read = [&](const char* key, double& out) {
    if (const auto it = j.find(key); it != j.end()) out = number(*it, std::string("channel.") + key);
  };
  read("snr_db", ch.snr_db);
  read("txop_us", ch.txop_us);
  read("bits_per_stream", ch.bits_per_stream);
  read("demod_threshold_db", ch.demod_threshold_db);
  if (const auto it = j.find("ap_antennas"); it != j.end()) ch.ap_antennas = integer(*it, "channel.ap_antennas");
  if (const auto it = j.find("draws"); it != j.end()) ch.draws = integer(*it, "channel.draws");
  if (const auto it = j.find("seed"); it != j.end()) {
    if (!it->is_number_unsigned()) fail("channel.seed", "expected a non-negative integer");
    ch.seed = it->get<std::uint64_t>();
  }
  if (const auto it = j.find("client_antennas"); it != j.end()) {
    for (std::size_t f = 0; const auto& a : array(*it, "channel.client_antennas")) {
      ch.client_antennas.push_back(integer(a, "channel.client_antennas[" + std::to_string(f++) + "]"));
    }
  }
  if (const auto it = j.find("fading"); it != j.end()) {
    const std::string name = string(*it, "channel.fading");
    if (name == "rayleigh") {
      ch.fading = FadingModel::kRayleigh;
    } else if (name == "none") {
      ch.fading = FadingModel::kNone;
    } else {
      fail("channel.fading", "expected \"rayleigh\" or \"none\"");
    }
  }
  try {
    ch.validate();
  } catch (const ConfigurationError& e) {
    fail("channel", e.what());
  }
  return ch;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // locate the byte offset nlohmann reports
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    fail("line " + std::to_string(line) + ", column " + std::to_string(column), "invalid JSON");
  }
  check_keys(root, "", {"version", "mac", "stations", "caps", "solver", "channel"});
  const int version = integer(require(root, "version", "scenario"), "version");
  if (version != kScenarioVersion) fail("version", "unsupported version " + std::to_string(version));

  Scenario out;
  out.mac = parse_mac(require(root, "mac", "scenario"));
  for (std::size_t i = 0; const auto& s : array(require(root, "stations", "scenario"), "stations")) {
    out.stations.push_back(parse_station(s, "stations[" + std::to_string(i++) + "]"));
  }
  try {
    validate_scenario(out.stations);
  } catch (const ConfigurationError& e) {
    fail("stations", e.what());
  }
  if (const auto it = root.find("caps"); it != root.end()) {
    if (!it->is_object()) fail("caps", "expected an object");
    for (const auto& [flow, value] : it->items()) out.caps.caps[flow] = number(value, "caps." + flow);
    try {
      out.caps.validate(out.stations);
    } catch (const ConfigurationError& e) {
      fail("caps", e.what());
    }
  }
  if (const auto it = root.find("solver"); it != root.end()) out.solver = parse_solver(*it);
  if (const auto it = root.find("channel"); it != root.end()) out.channel = parse_channel(*it);
  return out;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError(path, "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string serialize_scenario(const Scenario& s) {
  json root;
  root["version"] = kScenarioVersion;
  root["mac"] = {{"sigma_us", s.mac.sigma()}, {"ts_us", s.mac.t_s()}};
  json stations = json::array();
  for (const auto& st : s.stations) {
    json v = json::array();
    for (int k = 0; k < st.pattern_count(); ++k) {
      json row = json::array();
      for (int f = 0; f < st.flow_count(); ++f) row.push_back(st.patterns(k, f));
      v.push_back(std::move(row));
    }
    stations.push_back({{"id", st.id}, {"flows", st.flows}, {"V", v}, {"D", matrix_json(st.payloads.entries())}});
  }
  root["stations"] = std::move(stations);
  if (!s.caps.empty()) root["caps"] = s.caps.caps;
  root["solver"] = {{"objective_tol", s.solver.objective_tol}, {"simplex_tol", s.solver.simplex_tol},
                    {"max_iters", s.solver.max_iters},         {"subgradient_step", s.solver.subgradient_step},
                    {"root_tol", s.solver.root_tol},           {"kkt_tol", s.solver.kkt_tol}};
  const auto& ch = s.channel;
  json channel = {{"ap_antennas", ch.ap_antennas},
                  {"snr_db", ch.snr_db},
                  {"txop_us", ch.txop_us},
                  {"bits_per_stream", ch.bits_per_stream},
                  {"demod_threshold_db", ch.demod_threshold_db},
                  {"draws", ch.draws},
                  {"seed", ch.seed},
                  {"fading", ch.fading == FadingModel::kNone ? "none" : "rayleigh"}};
  if (!ch.client_antennas.empty()) channel["client_antennas"] = ch.client_antennas;
  root["channel"] = std::move(channel);
  return root.dump(2) + "\n";
}

bool same_scenario(const Scenario& a, const Scenario& b) {
  if (a.mac.sigma() != b.mac.sigma() || a.mac.t_s() != b.mac.t_s()) return false;
  if (a.stations.size() != b.stations.size() || a.caps.caps != b.caps.caps) return false;
  for (std::size_t i = 0; i < a.stations.size(); ++i) {
    const auto& x = a.stations[i];
    const auto& y = b.stations[i];
    if (x.id != y.id || x.flows != y.flows || x.patterns.entries() != y.patterns.entries() ||
        x.payloads.entries() != y.payloads.entries()) {
      return false;
    }
  }
  const auto& p = a.solver;
  const auto& q = b.solver;
  if (p.objective_tol != q.objective_tol || p.simplex_tol != q.simplex_tol || p.max_iters != q.max_iters ||
      p.subgradient_step != q.subgradient_step || p.root_tol != q.root_tol || p.kkt_tol != q.kkt_tol) {
    return false;
  }
  const auto& c = a.channel;
  const auto& e = b.channel;
  return c.ap_antennas == e.ap_antennas && c.client_antennas == e.client_antennas && c.snr_db == e.snr_db &&
         c.txop_us == e.txop_us && c.bits_per_stream == e.bits_per_stream &&
         c.demod_threshold_db == e.demod_threshold_db && c.draws == e.draws && c.seed == e.seed &&
         c.fading == e.fading;
}

}  // namespace pfmimo::cli
