#pragma once

#include <cstdint>
#include <string>

#include "dhff/detect.hpp"

namespace dhff {

struct ConfusionCounts {
  std::int64_t correct_change = 0;    // m_a
  std::int64_t correct_unchange = 0;  // m_c
  std::int64_t detected_change = 0;   // M_d
  std::int64_t true_change = 0;       // M_c
  std::int64_t total = 0;             // M
};

ConfusionCounts confusion(const ChangeMap& pred, const ChangeMap& truth);

struct MetricsReport {
  double ra = 0.0;  // accuracy (m_a + m_c) / M
  double rp = 0.0;  // precision m_a / M_d
  double rr = 0.0;  // recall m_a / M_c
  double ka = 0.0;  // kappa (Ra - Pe) / (1 - Pe)
  double pe = 0.0;  // chance agreement, Cohen two-class marginals
};

// Degenerate-denominator conventions: Rp = 1 when M_d = M_c = 0 and 0
// when only M_d = 0; Rr = 1 when M_c = 0; Ka = 0 when Pe = 1.
MetricsReport compute_metrics(const ConfusionCounts& c);

// "Ra,Rp,Rr,Ka" as percentages with 2 decimals.
std::string metrics_csv(const MetricsReport& r);
// Raw fractions plus the confusion counts.
std::string metrics_json(const MetricsReport& r, const ConfusionCounts& c);

}  // namespace dhff
