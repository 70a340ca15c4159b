#pragma once

#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace famsec {

struct GaussianSummary {
  double mu = 0.0;
  double sigma = 0.0;
};

struct SolverQualityConfig {
  double kappa = 0.5;
  double squash_gain = 5.0;
  double r_low = -1.0;
  double r_high = 1.0;

  double range() const { return r_high - r_low; }
  double sigma_min() const { return 1e-6 * range(); }
  /// Throws InvalidConfig.
  void validate() const;
};

/// Squared Hellinger distance between two normals (closed form).
double hellinger2_gaussian(const GaussianSummary& p, const GaussianSummary& q);

/// 1 - sum_i sqrt(p_i q_i) over normalised histograms on shared bins.
/// Throws BinMismatch when the bin counts or edges differ.
double hellinger2_hist(const std::vector<double>& p, const std::vector<double>& q);
double hellinger2_hist(const std::vector<double>& p_edges, const std::vector<double>& p,
                       const std::vector<double>& q_edges, const std::vector<double>& q);

struct SolverQualityResult {
  GaussianSummary candidate;
  GaussianSummary trusted;
  double h2 = 0.0;
  double delta_mu = 0.0;  // candidate mean minus trusted mean
  double f = 0.0;
  double m_s = 0.0;
  double x_s = 1.0;
  std::vector<std::string> flags;
};

/// Logistic squash of the signed meta-utility onto (0, 2). Evaluated on |m|
/// and reflected, so squash(m) + squash(-m) == 2 exactly.
double squash_solver_quality(double m_s, double gain);

/// Signed, range-scaled Hellinger meta-utility and its squashed indicator.
/// Sigmas are floored at config.sigma_min() before use.
SolverQualityResult solver_quality(const GaussianSummary& candidate, const GaussianSummary& trusted,
                                   const SolverQualityConfig& config);

/// Same meta-utility with h2 taken from histograms of both samples over a
/// shared binning; delta_mu still comes from the sample means.
SolverQualityResult solver_quality_hist(const std::vector<double>& candidate, const std::vector<double>& trusted,
                                        const SolverQualityConfig& config, int bin_count = 20);

using TrustedReference = std::variant<GaussianSummary, std::vector<double>>;

/// Gaussian summary (mean, sample standard deviation) of a sample.
GaussianSummary gaussian_summary(const std::vector<double>& samples);

/// Candidate n >= 2. The trusted side is either measured samples or a
/// surrogate prediction.
SolverQualityResult x_s_from_samples(const std::vector<double>& candidate, const TrustedReference& trusted,
                                     const SolverQualityConfig& config);

nlohmann::ordered_json solver_quality_to_json(const SolverQualityResult& r, const SolverQualityConfig& config);

}  // namespace famsec
