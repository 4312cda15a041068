#include "pfmimo/types.hpp"

#include "pfmimo/error.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace pfmimo {

MacParams::MacParams(double sigma_us, double t_s_us) : sigma_(sigma_us), t_s_(t_s_us) {
  if (!(sigma_us > 0.0) || !(t_s_us > 0.0) || !std::isfinite(sigma_us) || !std::isfinite(t_s_us)) {
    throw ConfigurationError("slot durations must be positive and finite");
  }
  if (sigma_us > t_s_us) {
    throw ConfigurationError("idle slot longer than busy slot (sigma > T_s)");
  }
  a_ = sigma_ / t_s_;
}

MacParams MacParams::from_ratio(double a, double t_s_us) { return MacParams(a * t_s_us, t_s_us); }

AttemptRates::AttemptRates(Vector tau) : tau_(std::move(tau)), x_(tau_.size()) {
  for (Eigen::Index i = 0; i < tau_.size(); ++i) {
    const double t = tau_(i);
    if (!(t >= 0.0 && t <= 1.0)) {
      std::ostringstream msg;
      msg << "attempt probability tau[" << i << "] = " << t << " outside [0, 1]";
      throw DomainError(msg.str());
    }
    x_(i) = t == 1.0 ? std::numeric_limits<double>::infinity() : t / (1.0 - t);
  }
}

AttemptRates AttemptRates::from_odds(const Vector& x) {
  Vector tau(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x(i) >= 0.0)) throw DomainError("odds x must be non-negative");
    tau(i) = std::isinf(x(i)) ? 1.0 : x(i) / (1.0 + x(i));
  }
  AttemptRates rates(std::move(tau));
  // keep the caller's odds rather than the round-tripped values
  rates.x_ = x;
  return rates;
}

PatternMatrix::PatternMatrix(IntMatrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() < 1 || entries_.cols() < 1) {
    throw ConfigurationError("pattern matrix needs at least one pattern and one flow");
  }
  if ((entries_.array() < 0).any()) {
    throw ConfigurationError("pattern matrix entries must be non-negative");
  }
  for (Eigen::Index k = 0; k < entries_.rows(); ++k) {
    if (entries_.row(k).sum() == 0) {
      throw ConfigurationError("pattern " + std::to_string(k) + " allocates no streams");
    }
  }
  for (Eigen::Index f = 0; f < entries_.cols(); ++f) {
    if (entries_.col(f).sum() == 0) {
      throw ConfigurationError("flow column " + std::to_string(f) +
                               " is not served by any pattern");
    }
  }
}

namespace {

IntMatrix from_rows(std::initializer_list<std::initializer_list<int>> rows) {
  const auto n_rows = static_cast<Eigen::Index>(rows.size());
  const auto n_cols = n_rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.begin()->size());
  IntMatrix m(n_rows, n_cols);
  Eigen::Index k = 0;
  for (const auto& row : rows) {
    if (static_cast<Eigen::Index>(row.size()) != n_cols) {
      throw ConfigurationError("pattern matrix rows have unequal length");
    }
    Eigen::Index f = 0;
    for (int v : row) m(k, f++) = v;
    ++k;
  }
  return m;
}

}  // namespace

PatternMatrix::PatternMatrix(std::initializer_list<std::initializer_list<int>> rows)
    : PatternMatrix(from_rows(rows)) {}

PatternMatrix PatternMatrix::identity(int flows) {
  return PatternMatrix(IntMatrix::Identity(flows, flows));
}

PayloadMatrix::PayloadMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (!entries_.allFinite() || (entries_.array() < 0.0).any()) {
    throw ConfigurationError("payload entries must be finite and non-negative");
  }
}

PayloadMatrix PayloadMatrix::per_flow(int patterns, std::span<const double> bits_per_flow) {
  Matrix m(patterns, static_cast<Eigen::Index>(bits_per_flow.size()));
  for (Eigen::Index f = 0; f < m.cols(); ++f) m.col(f).setConstant(bits_per_flow[f]);
  return PayloadMatrix(std::move(m));
}

PayloadMatrix PayloadMatrix::uniform(int patterns, int flows, double bits) {
  return PayloadMatrix(Matrix::Constant(patterns, flows, bits));
}

StationSpec::StationSpec(std::string id_, std::vector<std::string> flows_, PatternMatrix patterns_,
                         PayloadMatrix payloads_)
    : id(std::move(id_)),
      flows(std::move(flows_)),
      patterns(std::move(patterns_)),
      payloads(std::move(payloads_)) {
  if (flows.empty()) throw ConfigurationError("station '" + id + "' carries no flows");
  if (patterns.flows() != static_cast<int>(flows.size())) {
    throw ConfigurationError("station '" + id + "': pattern matrix has " +
                             std::to_string(patterns.flows()) + " columns for " +
                             std::to_string(flows.size()) + " flows");
  }
  if (payloads.patterns() != patterns.patterns() || payloads.flows() != patterns.flows()) {
    throw ConfigurationError("station '" + id + "': payload matrix shape differs from patterns");
  }
  std::set<std::string> seen;
  for (const auto& f : flows) {
    if (!seen.insert(f).second) {
      throw ConfigurationError("station '" + id + "': duplicate flow '" + f + "'");
    }
  }
}

StationSpec::StationSpec(std::string id_, std::vector<std::string> flows_, PatternMatrix patterns_,
                         double bits_per_stream)
    : StationSpec(std::move(id_), flows_, patterns_,
                  PayloadMatrix::uniform(patterns_.patterns(), patterns_.flows(), bits_per_stream)) {}

Matrix StationSpec::gains() const {
  return patterns.as_real().cwiseProduct(payloads.entries());
}

void validate_scenario(std::span<const StationSpec> stations) {
  if (stations.empty()) throw ConfigurationError("scenario has no stations");
  std::set<std::string> flows;
  std::set<std::string> ids;
  for (const auto& s : stations) {
    if (!ids.insert(s.id).second) {
      throw ConfigurationError("duplicate station id '" + s.id + "'");
    }
    for (const auto& f : s.flows) {
      if (!flows.insert(f).second) {
        throw ConfigurationError("flow '" + f + "' appears on more than one station");
      }
    }
  }
}

PatternDistribution::PatternDistribution(Vector pi) : pi_(std::move(pi)) {
  if (pi_.size() < 1) throw DomainError("pattern distribution is empty");
  if (!pi_.allFinite() || (pi_.array() < 0.0).any()) {
    throw DomainError("pattern distribution has negative or non-finite entries");
  }
  if (std::abs(pi_.sum() - 1.0) > kSumTolerance) {
    std::ostringstream msg;
    msg << "pattern distribution sums to " << pi_.sum() << ", expected 1";
    throw DomainError(msg.str());
  }
}

PatternDistribution PatternDistribution::uniform(int patterns) {
  return PatternDistribution(Vector::Constant(patterns, 1.0 / patterns));
}

PatternDistribution PatternDistribution::point_mass(int patterns, int k) {
  Vector pi = Vector::Zero(patterns);
  pi(k) = 1.0;
  return PatternDistribution(std::move(pi));
}

}  // namespace pfmimo
