#include "famsec/solver_quality.hpp"

#include <algorithm>
#include <cmath>

#include "famsec/error.hpp"
#include "famsec/rollout.hpp"

namespace famsec {

void SolverQualityConfig::validate() const {
  if (!(kappa > 0.0 && kappa < 1.0)) throw Error(ErrorKind::InvalidConfig, "kappa must lie in (0,1)");
  if (!(squash_gain > 0.0)) throw Error(ErrorKind::InvalidConfig, "squash gain must be positive");
  if (!(std::isfinite(r_low) && std::isfinite(r_high) && r_high > r_low))
    throw Error(ErrorKind::InvalidConfig, "reward range needs r_high > r_low");
}

double hellinger2_gaussian(const GaussianSummary& p, const GaussianSummary& q) {
  const double var_sum = p.sigma * p.sigma + q.sigma * q.sigma;
  if (!(var_sum > 0.0)) return p.mu == q.mu ? 0.0 : 1.0;
  const double d = p.mu - q.mu;
  const double bc = std::sqrt(2.0 * p.sigma * q.sigma / var_sum) * std::exp(-0.25 * d * d / var_sum);
  return std::clamp(1.0 - bc, 0.0, 1.0);
}

double hellinger2_hist(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size() || p.empty()) throw Error(ErrorKind::BinMismatch, "histograms have different bin counts");
  double bc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) bc += std::sqrt(p[i] * q[i]);
  return std::clamp(1.0 - bc, 0.0, 1.0);
}

double hellinger2_hist(const std::vector<double>& p_edges, const std::vector<double>& p,
                       const std::vector<double>& q_edges, const std::vector<double>& q) {
  if (p_edges != q_edges) throw Error(ErrorKind::BinMismatch, "histograms use different bin edges");
  if (p_edges.size() != p.size() + 1) throw Error(ErrorKind::BinMismatch, "edge count does not match bin count");
  return hellinger2_hist(p, q);
}

double squash_solver_quality(double m_s, double gain) {
  // Keep the open interval (0, 2) even when exp underflows.
  const double upper = std::min(2.0 / (1.0 + std::exp(-gain * std::abs(m_s))), std::nextafter(2.0, 0.0));
  return m_s < 0.0 ? 2.0 - upper : upper;
}

namespace {

SolverQualityResult finish(GaussianSummary candidate, GaussianSummary trusted, double h2,
                           const SolverQualityConfig& config) {
  SolverQualityResult r;
  r.candidate = candidate;
  r.trusted = trusted;
  r.h2 = h2;
  r.delta_mu = candidate.mu - trusted.mu;
  r.f = std::abs(r.delta_mu) / config.range();
  if (r.delta_mu != 0.0) {
    const double magnitude = std::pow(r.f, config.kappa) * std::sqrt(h2);
    r.m_s = r.delta_mu > 0.0 ? magnitude : -magnitude;
  }
  r.x_s = squash_solver_quality(r.m_s, config.squash_gain);
  r.flags.emplace_back("delta-mu=candidate-minus-trusted");
  if (r.delta_mu == 0.0 && h2 > 0.0) r.flags.emplace_back("variance-blind-fixed-point");
  if (std::abs(r.delta_mu) > config.range()) r.flags.emplace_back("mean-gap-exceeds-range");
  return r;
}

}  // namespace

SolverQualityResult solver_quality(const GaussianSummary& candidate, const GaussianSummary& trusted,
                                   const SolverQualityConfig& config) {
  config.validate();
  const double floor = config.sigma_min();
  GaussianSummary c{candidate.mu, std::max(candidate.sigma, floor)};
  GaussianSummary t{trusted.mu, std::max(trusted.sigma, floor)};
  auto r = finish(c, t, hellinger2_gaussian(c, t), config);
  if (candidate.sigma < floor || trusted.sigma < floor) r.flags.emplace_back("sigma-floored");
  return r;
}

GaussianSummary gaussian_summary(const std::vector<double>& samples) {
  const auto s = summarize(samples, 1);
  return {s.mean, s.stddev};
}

SolverQualityResult solver_quality_hist(const std::vector<double>& candidate, const std::vector<double>& trusted,
                                        const SolverQualityConfig& config, int bin_count) {
  config.validate();
  if (candidate.size() < 2 || trusted.size() < 2)
    throw Error(ErrorKind::EmptySamples, "histogram mode needs at least two samples per side");
  const double lo = std::min(*std::min_element(candidate.begin(), candidate.end()),
                             *std::min_element(trusted.begin(), trusted.end()));
  double hi = std::max(*std::max_element(candidate.begin(), candidate.end()),
                       *std::max_element(trusted.begin(), trusted.end()));
  if (hi == lo) hi = lo + 1.0;
  std::vector<double> edges(static_cast<std::size_t>(bin_count) + 1);
  for (std::size_t i = 0; i < edges.size(); ++i) edges[i] = lo + (hi - lo) * static_cast<double>(i) / bin_count;
  const double h2 = hellinger2_hist(normalized_histogram(candidate, edges), normalized_histogram(trusted, edges));
  auto r = finish(gaussian_summary(candidate), gaussian_summary(trusted), h2, config);
  r.flags.emplace_back("histogram-mode");
  return r;
}

SolverQualityResult x_s_from_samples(const std::vector<double>& candidate, const TrustedReference& trusted,
                                     const SolverQualityConfig& config) {
  if (candidate.size() < 2) throw Error(ErrorKind::EmptySamples, "candidate needs at least two samples");
  const GaussianSummary c = gaussian_summary(candidate);
  GaussianSummary t;
  bool measured = false;
  if (const auto* g = std::get_if<GaussianSummary>(&trusted)) {
    t = *g;
  } else {
    const auto& v = std::get<std::vector<double>>(trusted);
    if (v.size() < 2) throw Error(ErrorKind::EmptySamples, "trusted needs at least two samples");
    t = gaussian_summary(v);
    measured = true;
  }
  auto r = solver_quality(c, t, config);
  r.flags.emplace_back(measured ? "trusted-measured" : "trusted-predicted");
  return r;
}

nlohmann::ordered_json solver_quality_to_json(const SolverQualityResult& r, const SolverQualityConfig& config) {
  nlohmann::ordered_json j;
  j["mu_c"] = r.candidate.mu;
  j["sigma_c"] = r.candidate.sigma;
  j["mu_t"] = r.trusted.mu;
  j["sigma_t"] = r.trusted.sigma;
  j["r_low"] = config.r_low;
  j["r_high"] = config.r_high;
  j["kappa"] = config.kappa;
  j["squash_gain"] = config.squash_gain;
  j["h2"] = r.h2;
  j["f"] = r.f;
  j["m_s"] = r.m_s;
  j["x_s"] = r.x_s;
  j["flags"] = r.flags;
  return j;
}

}  // namespace famsec
