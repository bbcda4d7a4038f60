#include "ppjudge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ppjudge/error.hpp"

namespace ppjudge {

double round_half_away_from_zero(double v) {
  return std::round(v);  // C round() halves go away from zero
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

namespace {

void check_lengths(const std::vector<double>& a, const std::vector<double>& b,
                   const char* op) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(op) + ": length " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
  }
}

}  // namespace

double pcc(const std::vector<double>& pred, const std::vector<double>& label) {
  check_lengths(pred, label, "pcc");
  if (pred.size() < 2) {
    throw UndefinedMetricError("pcc undefined for fewer than 2 points");
  }
  double n = static_cast<double>(pred.size());
  double mp = std::accumulate(pred.begin(), pred.end(), 0.0) / n;
  double ml = std::accumulate(label.begin(), label.end(), 0.0) / n;
  double cov = 0.0, vp = 0.0, vl = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double dp = pred[i] - mp;
    double dl = label[i] - ml;
    cov += dp * dl;
    vp += dp * dp;
    vl += dl * dl;
  }
  if (vp <= 0.0 || vl <= 0.0) {
    throw UndefinedMetricError("pcc undefined: zero variance input");
  }
  return cov / std::sqrt(vp * vl);
}

double srcc(const std::vector<double>& pred, const std::vector<double>& label) {
  check_lengths(pred, label, "srcc");
  if (pred.size() < 2) {
    throw UndefinedMetricError("srcc undefined for fewer than 2 points");
  }
  try {
    return pcc(average_ranks(pred), average_ranks(label));
  } catch (const UndefinedMetricError&) {
    throw UndefinedMetricError("srcc undefined: zero rank variance");
  }
}

double mse(const std::vector<double>& pred, const std::vector<double>& label) {
  check_lengths(pred, label, "mse");
  if (pred.empty()) throw UndefinedMetricError("mse undefined on empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double d = pred[i] - label[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

double acc(const std::vector<double>& pred, const std::vector<double>& label) {
  check_lengths(pred, label, "acc");
  if (pred.empty()) throw UndefinedMetricError("acc undefined on empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (round_half_away_from_zero(pred[i]) == round_half_away_from_zero(label[i])) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace ppjudge
