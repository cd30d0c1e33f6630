#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rae/core.hpp"
#include "rae/infer.hpp"
#include "rae/policy.hpp"
#include "rae/stats.hpp"

namespace rae {

struct AnalysisConfig {
  McmcConfig mcmc;
  double hdi_mass = 0.94;
  double fdr_q = 0.05;
  /// Pairwise rows at or above this r are flagged notable.
  double pairwise_r_threshold = 0.20;
  /// Frame used by the rank tests of h1-h3 and by h5.
  ItemValue test_frame = ItemValue::Low;
  EffectDenominator denominator = EffectDenominator::TotalPairs;
  /// Posterior predictive draws per fit (0 disables the check).
  std::size_t ppc_draws = 200;
  /// Skip the Bayesian fits (rank tests only).
  bool skip_bayes = false;
  /// Called with (hypothesis, model, fit) after every successful fit.
  std::function<void(const std::string&, const std::string&, const FitResult&)> on_fit;
};

/// One test in a report. Statistical degeneracies (all ties, constant input)
/// are recorded in `error` instead of aborting the runner.
struct CellResult {
  std::string family;  // e.g. "kruskal_wallis", "spearman:experience"
  std::optional<Domain> domain;
  std::optional<Aim> aim;
  std::optional<TestResult> test;
  std::optional<double> p_adjusted;
  bool rejected = false;
  std::optional<std::string> error;
};

struct MeanRankRow {
  Aim aim = Aim::Educative;
  Domain domain = Domain::Apparel;
  double mean_rank = 0.0;
  std::size_t n = 0;
};

struct PairwiseRow {
  Aim aim = Aim::Educative;
  Domain first = Domain::Apparel;
  Domain second = Domain::Apparel;
  TestResult test;  // p_value is Bonferroni-adjusted
  bool notable = false;
};

struct BayesRow {
  std::string model;      // e.g. "Educative", "educative_control"
  std::string parameter;  // e.g. "beta[experience]", "alpha[Education]"
  ParameterSummary summary;
  bool credible = false;  // HDI excludes zero
  std::optional<double> odds_ratio;
};

struct FitInfo {
  std::string model;
  std::size_t n_observations = 0;
  int divergences = 0;
  double max_rhat = 0.0;
  double min_ess_bulk = 0.0;
  std::optional<std::string> error;
};

struct FrequencyRow {
  Aim aim = Aim::Educative;
  ItemValue frame = ItemValue::Low;
  std::array<double, kCategories> percent{};
  std::size_t n = 0;
};

struct PpcRow {
  std::string model;
  PredictiveCheck check;
};

struct AnalysisReport {
  std::string hypothesis;  // "h1" .. "h6"
  std::optional<Aim> aim;
  std::uint64_t seed = 0;
  double hdi_mass = 0.94;
  std::size_t effective_n = 0;
  std::vector<CellResult> tests;
  std::vector<MeanRankRow> mean_ranks;
  std::vector<PairwiseRow> pairwise;
  std::vector<BayesRow> bayes;
  std::vector<FitInfo> fits;
  std::vector<FrequencyRow> frequencies;
  std::vector<PpcRow> ppc;

  const BayesRow* find_bayes(std::string_view model, std::string_view parameter) const;
};

/// credible <=> hdi_low > 0 or hdi_high < 0.
bool credible(const ParameterSummary& s);

/// h1 / h2 / h3 for the educative / explorative / affective aim: Kruskal-Wallis
/// over domains, all domain pairs by Mann-Whitney (Bonferroni over the pairs),
/// and a hierarchical fit on every row of the aim with experience and value
/// frame as predictors and domain intercepts.
AnalysisReport run_h1_h3(const RatingRecords& records, Aim aim, const AnalysisConfig& config = {});

/// Per participant and aim, the mean rating in the Low frame against the mean
/// in the High frame (paired signed-rank), plus the stacked frequency table.
/// Throws Error{MissingPair} when a participant has one frame but not the other.
AnalysisReport run_h4(const RatingRecords& records, const AnalysisConfig& config = {});

/// Spearman screens for experience, gender (effect coded) and age over the
/// 30 domain x aim cells, BH within each predictor family, then a pooled
/// fit per aim with experience, gender and age and domain intercepts.
AnalysisReport run_h5(const RatingRecords& records, const AnalysisConfig& config = {});

/// One-sample signed-rank tests of the two control items against 3, their
/// Spearman association, and per-item ordinal regressions (Male dummy,
/// experience, age dummies against 18-24). Throws Error{DegenerateData} when
/// fewer than 10 participants carry autonomy answers.
AnalysisReport run_h6(const RatingRecords& records, const AnalysisConfig& config = {});

using AnalysisReports = std::map<std::string, AnalysisReport>;

/// Builds the policy priors from h1-h5. Throws Error{MissingReport}.
///  - intercepts: alpha[domain] from the h1-h3 fits
///  - beta_exp per aim: admitted when its h5 HDI excludes zero
///  - beta_gender: never global; a (domain, aim) override per BH-significant
///    gender cell in h5
///  - beta_age: carried for reference, never admitted
///  - calibration (when the h1-h3 fits carry cutpoints): cutpoints plus the
///    experience and value coefficients of the same fit; the value shift is
///    admitted when the h4 test for that aim is significant
PolicyPriors calibrate(const AnalysisReports& reports, double alpha = 0.05);

/// h1-h5 reports holding the published summary numbers only (no raw data).
AnalysisReports published_reports();

}  // namespace rae
