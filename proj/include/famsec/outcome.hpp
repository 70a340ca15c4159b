#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

namespace famsec {

/// Minimal acceptable outcome z* with moment order alpha and logistic
/// steepness k. Gains and losses share the single threshold z*.
struct OutcomeStandard {
  double z_star = 0.0;
  int alpha = 1;
  double k = 1.0;

  void validate() const;
};

struct PartialMoments {
  double upm = 0.0;
  double lpm = 0.0;
  /// upm / lpm; +inf when only gains carry mass, 0 when only losses do.
  /// Report code serialises x_o from (upm, lpm) and never this field.
  double ratio = 0.0;
};

/// Empirical alpha-partial moments about z*. For alpha == 0 a sample equal
/// to z* counts as a gain; for alpha >= 1 ties contribute nothing.
PartialMoments upm_lpm(const std::vector<double>& samples, const OutcomeStandard& standard);

struct IndicatorValue {
  double value = 0.0;
  /// Both moments were zero: the standard is met exactly and 0 is reported.
  bool standard_exactly_met = false;
};

/// (UPM^k - LPM^k) / (UPM^k + LPM^k)
IndicatorValue x_o_from_moments(double upm, double lpm, double k);

/// Odds of favorable (z >= z*) to unfavorable outcomes.
double omega_ratio(const std::vector<double>& samples, double z_star);

struct OutcomeAssessmentResult {
  OutcomeStandard standard;
  double upm = 0.0;
  double lpm = 0.0;
  double x_o = 0.0;
  std::size_t n = 0;
  std::vector<std::string> flags;
};

OutcomeAssessmentResult assess_outcome(const std::vector<double>& samples, const OutcomeStandard& standard);

nlohmann::ordered_json outcome_to_json(const OutcomeAssessmentResult& result);

/// Integer-indexed outcome classes with probabilities (strictly increasing
/// classes, probabilities summing to one).
struct DiscreteOutcomeDist {
  std::vector<int> classes;
  std::vector<double> probs;

  void validate() const;
};

/// Discrete generalized outcome assessment: numerator sums (z - z* + 1) P(z)
/// over z >= z*, denominator sums (z* - z) P(z) over z < z*.
OutcomeAssessmentResult goa(const DiscreteOutcomeDist& dist, int z_star, double k);

// ---------------------------------------------------------------------------
// Cumulative prospect theory meta-utility

struct CptSpec {
  std::function<double(double)> value = [](double z) { return z; };
  std::function<double(double)> weight = [](double p) { return p; };
  double loss_bound = 0.0;  // l-
  double gain_bound = 0.0;  // g+
};

/// Piecewise-linear value with loss aversion: z for z >= ref, lambda * (z - ref) + ref below.
std::function<double(double)> loss_averse_linear_value(double lambda, double ref = 0.0);
/// (z - ref)^a for gains and -lambda (ref - z)^b for losses.
std::function<double(double)> power_value(double a, double b, double lambda, double ref = 0.0);
/// p^g / (p^g + (1-p)^g)^(1/g)
std::function<double(double)> probability_weighting(double g);

/// Evaluates the CPT functional against the empirical CDF. Samples at or
/// below l- enter the loss sum with weight differences w(F_i) - w(F_{i-1});
/// samples above g+ enter the gain sum with w(1 - F_{i-1}) - w(1 - F_i).
double cpt_value(const std::vector<double>& samples, const CptSpec& spec);

struct ProfilePoint {
  double z_star;
  double x_o;
};

/// x_o for each z* in the grid, sorted by z*.
std::vector<ProfilePoint> confidence_profile(const std::vector<double>& samples, std::vector<double> z_star_grid,
                                             int alpha, double k);

}  // namespace famsec
