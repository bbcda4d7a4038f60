#pragma once

#include <vector>

namespace ppjudge {

/// Ties get the rounded-to-nearest-integer rule used by acc(): halfway cases
/// round away from zero (7.5 -> 8, -7.5 -> -8).
double round_half_away_from_zero(double v);

/// 1-based ranks; tied values share the average of their rank positions.
std::vector<double> average_ranks(const std::vector<double>& v);

/// Spearman rank correlation: Pearson correlation of average-rank vectors.
/// Throws UndefinedMetricError for length < 2 or zero rank variance.
double srcc(const std::vector<double>& pred, const std::vector<double>& label);

/// Pearson correlation. Throws UndefinedMetricError for length < 2 or zero
/// variance in either argument.
double pcc(const std::vector<double>& pred, const std::vector<double>& label);

/// Mean squared error. Throws UndefinedMetricError on empty input.
double mse(const std::vector<double>& pred, const std::vector<double>& label);

/// Fraction of positions whose rounded values match.
double acc(const std::vector<double>& pred, const std::vector<double>& label);

}  // namespace ppjudge
