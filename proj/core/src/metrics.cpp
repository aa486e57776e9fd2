#include "dhff/metrics.hpp"

#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace dhff {

ConfusionCounts confusion(const ChangeMap& pred, const ChangeMap& truth) {
  if (pred.height != truth.height || pred.width != truth.width)
    throw std::invalid_argument("confusion: dimension mismatch");
  ConfusionCounts c;
  c.total = static_cast<std::int64_t>(pred.bits.size());
  for (std::size_t i = 0; i < pred.bits.size(); ++i) {
    const bool p = pred.bits[i] != 0;
    const bool t = truth.bits[i] != 0;
    c.detected_change += p;
    c.true_change += t;
    if (p && t) ++c.correct_change;
    if (!p && !t) ++c.correct_unchange;
  }
  return c;
}

MetricsReport compute_metrics(const ConfusionCounts& c) {
  if (c.total <= 0)
    throw std::invalid_argument("compute_metrics: empty map");
  const double M = double(c.total);
  MetricsReport r;
  r.ra = double(c.correct_change + c.correct_unchange) / M;
  if (c.detected_change > 0)
    r.rp = double(c.correct_change) / double(c.detected_change);
  else
    r.rp = c.true_change == 0 ? 1.0 : 0.0;
  r.rr = c.true_change > 0
             ? double(c.correct_change) / double(c.true_change)
             : 1.0;
  r.pe = (double(c.detected_change) * double(c.true_change) +
          double(c.total - c.detected_change) *
              double(c.total - c.true_change)) /
         (M * M);
  r.ka = r.pe < 1.0 ? (r.ra - r.pe) / (1.0 - r.pe) : 0.0;
  return r;
}

std::string metrics_csv(const MetricsReport& r) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%.2f,%.2f,%.2f,%.2f", 100.0 * r.ra,
                100.0 * r.rp, 100.0 * r.rr, 100.0 * r.ka);
  return buf;
}

std::string metrics_json(const MetricsReport& r, const ConfusionCounts& c) {
  nlohmann::json j;
  j["Ra"] = r.ra;
  j["Rp"] = r.rp;
  j["Rr"] = r.rr;
  j["Ka"] = r.ka;
  j["Pe"] = r.pe;
  j["correct_change"] = c.correct_change;
  j["correct_unchange"] = c.correct_unchange;
  j["detected_change"] = c.detected_change;
  j["true_change"] = c.true_change;
  j["total"] = c.total;
  return j.dump(2);
}

}  // namespace dhff
