#include "famsec/outcome.hpp"

#include <algorithm>
#include <cmath>

#include "famsec/error.hpp"

namespace famsec {

void OutcomeStandard::validate() const {
  if (alpha < 0) throw Error(ErrorKind::InvalidArgument, "alpha must be a non-negative integer");
  if (!(k > 0.0)) throw Error(ErrorKind::InvalidArgument, "k must be positive");
  if (!std::isfinite(z_star)) throw Error(ErrorKind::InvalidArgument, "z* must be finite");
}

namespace {

double moment_term(double excess, int alpha) {
  // std::pow(0, 0) is 1, which would count a tie as a gain and a loss at once.
  if (alpha == 0) return 1.0;
  return std::pow(excess, alpha);
}

}  // namespace

PartialMoments upm_lpm(const std::vector<double>& samples, const OutcomeStandard& standard) {
  standard.validate();
  if (samples.empty()) throw Error(ErrorKind::EmptySamples, "partial moments need at least one sample");
  double upper = 0.0;
  double lower = 0.0;
  for (double z : samples) {
    const double d = z - standard.z_star;
    if (standard.alpha == 0) {
      if (d >= 0.0) upper += 1.0;
      else lower += 1.0;
    } else if (d > 0.0) {
      upper += moment_term(d, standard.alpha);
    } else if (d < 0.0) {
      lower += moment_term(-d, standard.alpha);
    }
  }
  const auto n = static_cast<double>(samples.size());
  PartialMoments m{upper / n, lower / n, 0.0};
  if (m.lpm > 0.0) m.ratio = m.upm / m.lpm;
  else if (m.upm > 0.0) m.ratio = std::numeric_limits<double>::infinity();
  return m;
}

IndicatorValue x_o_from_moments(double upm, double lpm, double k) {
  if (!(upm >= 0.0 && lpm >= 0.0)) throw Error(ErrorKind::InvalidArgument, "partial moments must be non-negative");
  if (!(k > 0.0)) throw Error(ErrorKind::InvalidArgument, "k must be positive");
  if (upm == 0.0 && lpm == 0.0) return {0.0, true};
  if (lpm == 0.0) return {1.0, false};
  if (upm == 0.0) return {-1.0, false};
  const double u = std::pow(upm, k);
  const double l = std::pow(lpm, k);
  return {std::clamp((u - l) / (u + l), -1.0, 1.0), false};
}

double omega_ratio(const std::vector<double>& samples, double z_star) {
  return upm_lpm(samples, OutcomeStandard{z_star, 0, 1.0}).ratio;
}

OutcomeAssessmentResult assess_outcome(const std::vector<double>& samples, const OutcomeStandard& standard) {
  const auto m = upm_lpm(samples, standard);
  const auto x = x_o_from_moments(m.upm, m.lpm, standard.k);
  OutcomeAssessmentResult r;
  r.standard = standard;
  r.upm = m.upm;
  r.lpm = m.lpm;
  r.x_o = x.value;
  r.n = samples.size();
  if (x.standard_exactly_met) r.flags.emplace_back("standard-exactly-met");
  if (m.lpm == 0.0 && m.upm > 0.0) r.flags.emplace_back("no-unfavorable-mass");
  if (m.upm == 0.0 && m.lpm > 0.0) r.flags.emplace_back("no-favorable-mass");
  return r;
}

nlohmann::ordered_json outcome_to_json(const OutcomeAssessmentResult& r) {
  nlohmann::ordered_json j;
  j["z_star"] = r.standard.z_star;
  j["alpha"] = r.standard.alpha;
  j["k"] = r.standard.k;
  j["upm"] = r.upm;
  j["lpm"] = r.lpm;
  j["x_o"] = r.x_o;
  j["n"] = r.n;
  j["flags"] = r.flags;
  return j;
}

void DiscreteOutcomeDist::validate() const {
  if (classes.empty() || classes.size() != probs.size())
    throw Error(ErrorKind::InvalidDist, "classes and probabilities must be non-empty and the same length");
  double sum = 0.0;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (i > 0 && classes[i] <= classes[i - 1]) throw Error(ErrorKind::InvalidDist, "classes must be strictly increasing");
    if (!(probs[i] >= 0.0 && probs[i] <= 1.0)) throw Error(ErrorKind::InvalidDist, "probability outside [0,1]");
    sum += probs[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::InvalidDist, "probabilities do not sum to 1");
}

OutcomeAssessmentResult goa(const DiscreteOutcomeDist& dist, int z_star, double k) {
  dist.validate();
  if (z_star < dist.classes.front() - 1 || z_star > dist.classes.back() + 1)
    throw Error(ErrorKind::InvalidDist, "z* is outside the class range");
  double up = 0.0;
  double down = 0.0;
  for (std::size_t i = 0; i < dist.classes.size(); ++i) {
    const int z = dist.classes[i];
    if (z >= z_star) up += (z - z_star + 1) * dist.probs[i];
    else down += (z_star - z) * dist.probs[i];
  }
  const auto x = x_o_from_moments(up, down, k);
  OutcomeAssessmentResult r;
  r.standard = {static_cast<double>(z_star), 1, k};
  r.upm = up;
  r.lpm = down;
  r.x_o = x.value;
  r.n = dist.classes.size();
  r.flags.emplace_back("discrete");
  if (x.standard_exactly_met) r.flags.emplace_back("standard-exactly-met");
  return r;
}

std::function<double(double)> loss_averse_linear_value(double lambda, double ref) {
  return [=](double z) { return z >= ref ? z - ref : lambda * (z - ref); };
}

std::function<double(double)> power_value(double a, double b, double lambda, double ref) {
  return [=](double z) { return z >= ref ? std::pow(z - ref, a) : -lambda * std::pow(ref - z, b); };
}

std::function<double(double)> probability_weighting(double g) {
  return [=](double p) {
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    const double a = std::pow(p, g);
    return a / std::pow(a + std::pow(1.0 - p, g), 1.0 / g);
  };
}

double cpt_value(const std::vector<double>& samples, const CptSpec& spec) {
  if (samples.empty()) throw Error(ErrorKind::EmptySamples, "CPT value needs at least one sample");
  if (!(spec.loss_bound <= spec.gain_bound)) throw Error(ErrorKind::InvalidArgument, "need l- <= g+");
  std::vector<double> z = samples;
  std::sort(z.begin(), z.end());
  const auto n = static_cast<double>(z.size());
  double losses = 0.0;
  double gains = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double f_prev = static_cast<double>(i) / n;
    const double f_here = static_cast<double>(i + 1) / n;
    if (z[i] <= spec.loss_bound) {
      losses += spec.value(z[i]) * (spec.weight(f_here) - spec.weight(f_prev));
    } else if (z[i] > spec.gain_bound) {
      gains += spec.value(z[i]) * (spec.weight(1.0 - f_prev) - spec.weight(1.0 - f_here));
    }
  }
  return losses + gains;
}

std::vector<ProfilePoint> confidence_profile(const std::vector<double>& samples, std::vector<double> grid, int alpha,
                                             double k) {
  if (grid.empty()) throw Error(ErrorKind::InvalidArgument, "z* grid must not be empty");
  std::sort(grid.begin(), grid.end());
  std::vector<ProfilePoint> out;
  out.reserve(grid.size());
  for (double z : grid) out.push_back({z, assess_outcome(samples, OutcomeStandard{z, alpha, k}).x_o});
  return out;
}

}  // namespace famsec
