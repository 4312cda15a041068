#include "pfmimo/channel.hpp"

#include "pfmimo/error.hpp"
#include "pfmimo/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

namespace pfmimo {

namespace {

using CMatrix = Eigen::MatrixXcd;

std::vector<int> resolve_client_antennas(const PatternMatrix& patterns, const ChannelConfig& ch) {
  std::vector<int> antennas = ch.client_antennas;
  if (antennas.empty()) {
    for (int f = 0; f < patterns.flows(); ++f) antennas.push_back(patterns.entries().col(f).maxCoeff());
  }
  if (static_cast<int>(antennas.size()) != patterns.flows()) {
    throw ConfigurationError("client_antennas needs one entry per flow");
  }
  for (int k = 0; k < patterns.patterns(); ++k) {
    if (patterns.streams(k) > ch.ap_antennas) {
      throw CapabilityError("pattern " + std::to_string(k) + " uses " +
                            std::to_string(patterns.streams(k)) + " streams but the AP has " +
                            std::to_string(ch.ap_antennas) + " antennas");
    }
    for (int f = 0; f < patterns.flows(); ++f) {
      if (patterns(k, f) > antennas[static_cast<std::size_t>(f)]) {
        throw CapabilityError("pattern " + std::to_string(k) + " sends " + std::to_string(patterns(k, f)) +
                              " streams to the client of flow " + std::to_string(f) + ", which has " +
                              std::to_string(antennas[static_cast<std::size_t>(f)]) + " antennas");
      }
    }
  }
  return antennas;
}

double db_to_linear(double db) {
  if (db == std::numeric_limits<double>::infinity()) return db;
  if (db == -std::numeric_limits<double>::infinity()) return 0.0;
  return std::pow(10.0, db / 10.0);
}

}  // namespace

void ChannelConfig::validate() const {
  if (ap_antennas < 1) throw ConfigurationError("ap_antennas must be at least 1");
  for (int a : client_antennas) {
    if (a < 1) throw ConfigurationError("client antenna counts must be at least 1");
  }
  if (draws < 1) throw ConfigurationError("draws must be at least 1");
  if (!(bits_per_stream > 0.0)) throw ConfigurationError("bits_per_stream must be positive");
  if (!(txop_us > 0.0)) throw ConfigurationError("txop_us must be positive");
  if (std::isnan(snr_db) || !std::isfinite(demod_threshold_db)) {
    throw ConfigurationError("snr and demodulation threshold must be numbers");
  }
}

StreamGainTable StreamGainTable::sample(const PatternMatrix& patterns, const ChannelConfig& ch) {
  ch.validate();
  const std::vector<int> antennas = resolve_client_antennas(patterns, ch);
  const int k_count = patterns.patterns();
  const int f_count = patterns.flows();

  StreamGainTable table;
  table.patterns_ = k_count;
  table.flows_ = f_count;
  table.gains_.resize(static_cast<std::size_t>(k_count * f_count));

  if (ch.fading == FadingModel::kNone) {
    for (int k = 0; k < k_count; ++k) {
      for (int f = 0; f < f_count; ++f) {
        if (patterns(k, f) > 0) {
          table.gains_[static_cast<std::size_t>(k * f_count + f)].push_back(1.0 / patterns.streams(k));
        }
      }
    }
    return table;
  }

  // receive-antenna row offsets of each client in the stacked channel
  std::vector<int> offset(static_cast<std::size_t>(f_count), 0);
  int total_rx = 0;
  for (int f = 0; f < f_count; ++f) {
    offset[static_cast<std::size_t>(f)] = total_rx;
    total_rx += antennas[static_cast<std::size_t>(f)];
  }

  const double scale = std::sqrt(0.5);
  CMatrix h(total_rx, ch.ap_antennas);
  for (int r = 0; r < ch.draws; ++r) {
    Rng rng(substream_seed(ch.seed, static_cast<std::uint64_t>(r)));
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
      for (Eigen::Index j = 0; j < h.cols(); ++j) {
        const double re = rng.normal();
        const double im = rng.normal();
        h(i, j) = std::complex<double>(scale * re, scale * im);
      }
    }
    for (int k = 0; k < k_count; ++k) {
      const int streams = patterns.streams(k);
      CMatrix hk(streams, ch.ap_antennas);
      std::vector<int> owner;
      int row = 0;
      for (int f = 0; f < f_count; ++f) {
        for (int s = 0; s < patterns(k, f); ++s) {
          hk.row(row++) = h.row(offset[static_cast<std::size_t>(f)] + s);
          owner.push_back(f);
        }
      }
      const CMatrix gram = hk * hk.adjoint();
      const CMatrix inv = gram.llt().solve(CMatrix::Identity(streams, streams));
      for (int j = 0; j < streams; ++j) {
        const double d = inv(j, j).real();
        const double gain = d > 0.0 && std::isfinite(d) ? 1.0 / (streams * d) : 0.0;
        table.gains_[static_cast<std::size_t>(k * f_count + owner[static_cast<std::size_t>(j)])].push_back(gain);
      }
    }
  }
  for (auto& g : table.gains_) std::sort(g.begin(), g.end());
  return table;
}

PayloadMatrix StreamGainTable::payloads(double snr_db, double bits_per_stream,
                                        double demod_threshold_db) const {
  const double snr = db_to_linear(snr_db);
  const double needed = snr == 0.0 ? std::numeric_limits<double>::infinity()
                                   : db_to_linear(demod_threshold_db) / snr;
  Matrix d = Matrix::Zero(patterns_, flows_);
  for (int k = 0; k < patterns_; ++k) {
    for (int f = 0; f < flows_; ++f) {
      const auto& g = gains_[static_cast<std::size_t>(k * flows_ + f)];
      if (g.empty()) continue;
      const auto first_ok = std::lower_bound(g.begin(), g.end(), needed);
      const auto ok = static_cast<double>(g.end() - first_ok);
      d(k, f) = bits_per_stream * ok / static_cast<double>(g.size());
    }
  }
  return PayloadMatrix(std::move(d));
}

PayloadMatrix build_payload_matrix(const PatternMatrix& patterns, const ChannelConfig& ch) {
  return StreamGainTable::sample(patterns, ch).payloads(ch.snr_db, ch.bits_per_stream, ch.demod_threshold_db);
}

double sum_log_rate(const PatternMatrix& patterns, const PayloadMatrix& payloads,
                    const PatternDistribution& pi, double txop_us) {
  const Matrix gains = patterns.as_real().cwiseProduct(payloads.entries());
  const Vector bits = gains.transpose() * pi.pi();
  double total = 0.0;
  for (Eigen::Index f = 0; f < bits.size(); ++f) {
    if (!(bits(f) > 0.0)) return -std::numeric_limits<double>::infinity();
    total += std::log(bits(f) / txop_us);
  }
  return total;
}

SweepResult snr_sweep(const PatternMatrix& patterns, std::span<const double> snr_points,
                      const ChannelConfig& ch, const SolverConfig& cfg) {
  if (snr_points.empty()) throw ConfigurationError("SNR sweep needs at least one point");
  const StreamGainTable table = StreamGainTable::sample(patterns, ch);

  std::vector<std::string> names;
  for (int f = 0; f < patterns.flows(); ++f) names.push_back("f" + std::to_string(f + 1));
  const auto uniform = PatternDistribution::uniform(patterns.patterns());

  SweepResult out;
  for (const double snr_db : snr_points) {
    SweepPoint point;
    point.snr_db = snr_db;
    point.payloads = table.payloads(snr_db, ch.bits_per_stream, ch.demod_threshold_db);
    const StationSpec station("ap", names, patterns, point.payloads);
    const Matrix gains = station.gains();
    for (int f = 0; f < patterns.flows(); ++f) {
      if (!(gains.col(f).maxCoeff() > 0.0)) point.infeasible_flows.push_back(names[static_cast<std::size_t>(f)]);
    }
    point.feasible = point.infeasible_flows.empty();
    if (point.feasible) {
      point.pf = solve_pattern_distribution(station, cfg);
      point.sumlog_pf = sum_log_rate(patterns, point.payloads, point.pf, ch.txop_us);
      point.sumlog_uniform = sum_log_rate(patterns, point.payloads, uniform, ch.txop_us);
    } else {
      point.pf = uniform;
      point.sumlog_pf = -std::numeric_limits<double>::infinity();
      point.sumlog_uniform = -std::numeric_limits<double>::infinity();
    }
    out.points.push_back(std::move(point));
  }
  return out;
}

}  // namespace pfmimo
