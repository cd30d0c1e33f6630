#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace rae {

enum class Alternative { TwoSided, Greater, Less };

/// Which n enters r = |z| / sqrt(n) for the signed-rank test.
enum class EffectDenominator { TotalPairs, NonTied };

std::string_view to_string(Alternative a);
std::string_view to_string(EffectDenominator d);

struct TestResult {
  double statistic = 0.0;
  std::optional<double> z;
  double p_value = 1.0;
  /// n for KW / MWU / Spearman; the non-tied count n' for signed-rank tests.
  std::size_t n_effective = 0;
  std::size_t n_total = 0;
  std::optional<double> effect_r;
  std::optional<double> rank_biserial;
  std::optional<double> cles;

  // Signed-rank extras.
  std::optional<double> w_plus;
  std::optional<double> w_minus;
  std::optional<double> effect_r_total;    // |z| / sqrt(n_total)
  std::optional<double> effect_r_nontied;  // |z| / sqrt(n')
  std::optional<EffectDenominator> denominator;
  std::optional<double> p_exact;
  std::optional<double> p_normal;
  bool exact = false;

  // Multiplicity bookkeeping (MWU).
  std::optional<double> p_unadjusted;
  std::size_t adjust_factor = 1;

  // Spearman.
  std::optional<double> rho;
};

/// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> mid_ranks(std::span<const double> values);
/// Sum over tie blocks of (t^3 - t).
double tie_term(std::span<const double> values);

/// r = |z| / sqrt(n). Throws Error{InvalidArgument} for n == 0.
double effect_size_r(double z, std::size_t n);

struct KruskalWallisResult {
  TestResult test;
  std::vector<double> mean_ranks;  // per input group
  std::vector<std::size_t> sizes;
};

/// H with tie correction, p from chi-square(groups - 1). Needs >= 2 groups,
/// none empty (Error{EmptyGroup}). All-equal input gives H = 0, p = 1.
KruskalWallisResult kruskal_wallis(std::span<const std::vector<double>> groups);

/// Two-sided Mann-Whitney U. statistic = min(U_a, U_b); z uses U_a (so its sign
/// says which sample is larger) with tie-corrected variance and a 0.5
/// continuity correction; p is multiplied by `adjust` and clamped to 1.
/// rank_biserial = (U_a - U_b)/(n_a n_b), cles = U_a/(n_a n_b).
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                          std::size_t adjust = 1);

struct WilcoxonOptions {
  Alternative alternative = Alternative::TwoSided;
  EffectDenominator denominator = EffectDenominator::TotalPairs;
  /// Exact null distribution when n' <= this.
  std::size_t exact_threshold = 12;
};

/// Paired signed-rank test on x - y. Zero differences are dropped.
/// statistic = min(W+, W-). Error{AllTies} when every difference is zero;
/// Error{InvalidArgument} on length mismatch.
TestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                const WilcoxonOptions& options = {});
/// One-sample form against a constant (default: the scale midpoint 3).
TestResult wilcoxon_one_sample(std::span<const double> x, double mu = 3.0,
                               const WilcoxonOptions& options = {});
/// Signed-rank test directly on differences; `n_total` counts zeros too.
TestResult wilcoxon_differences(std::span<const double> differences,
                                const WilcoxonOptions& options = {});

/// Spearman rho (Pearson on mid-ranks), two-sided p from t with n - 2 df.
/// Error{ConstantInput} if either ranking has no spread.
TestResult spearman(std::span<const double> x, std::span<const double> y);

struct FdrResult {
  std::vector<double> adjusted;  // input order
  std::vector<bool> rejected;
};

/// Step-up Benjamini-Hochberg at level q.
FdrResult benjamini_hochberg(std::span<const double> p_values, double q = 0.05);
/// min(1, m p).
std::vector<double> bonferroni(std::span<const double> p_values);

/// Upper tail of chi-square(df) at x.
double chi_square_sf(double x, double df);

}  // namespace rae
