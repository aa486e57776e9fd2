#include "dhff/ocsvm.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace dhff {

namespace {

double rbf(const double* a, const double* b, int dim, double gamma) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::exp(-gamma * s);
}

}  // namespace

double OcsvmModel::decision(std::span<const double> x) const {
  if (int(x.size()) != dim)
    throw std::invalid_argument("ocsvm: feature dimension mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < alpha.size(); ++j)
    s += alpha[j] * rbf(x.data(), sv.data() + j * dim, dim, gamma);
  return s - rho;
}

OcsvmModel ocsvm_train(std::span<const double> samples, int dim,
                       const OcsvmTrainConfig& cfg) {
  if (dim < 1) throw std::invalid_argument("ocsvm_train: dim must be >= 1");
  if (samples.size() % dim != 0)
    throw std::invalid_argument("ocsvm_train: sample buffer not a multiple "
                                "of dim");
  const int l = static_cast<int>(samples.size() / dim);
  if (l < 2) throw std::invalid_argument("ocsvm_train: need >= 2 samples");
  if (!(cfg.nu > 0.0 && cfg.nu <= 1.0))
    throw std::invalid_argument("ocsvm_train: nu must lie in (0,1]");
  if (!(cfg.gamma > 0.0))
    throw std::invalid_argument("ocsvm_train: gamma must be > 0");
  for (double v : samples)
    if (!std::isfinite(v))
      throw std::invalid_argument("ocsvm_train: non-finite sample");

  const double C = 1.0 / (cfg.nu * l);

  // dense kernel matrix; desk-scale problems only
  std::vector<double> K(std::size_t(l) * l);
  for (int i = 0; i < l; ++i) {
    K[std::size_t(i) * l + i] = 1.0;
    for (int j = i + 1; j < l; ++j) {
      const double v = rbf(samples.data() + std::size_t(i) * dim,
                           samples.data() + std::size_t(j) * dim, dim,
                           cfg.gamma);
      K[std::size_t(i) * l + j] = v;
      K[std::size_t(j) * l + i] = v;
    }
  }

  // all samples identical -> any feasible alpha is optimal
  bool degenerate = true;
  for (int i = 1; i < l && degenerate; ++i)
    if (K[std::size_t(0) * l + i] < 1.0 - 1e-15) degenerate = false;

  // standard initialization: the first floor(nu*l) coefficients at the
  // box bound, the remainder on the next one
  std::vector<double> a(l, 0.0);
  {
    const int nfull = static_cast<int>(cfg.nu * l);
    double remaining = 1.0;
    for (int i = 0; i < nfull && i < l; ++i) {
      a[i] = C;
      remaining -= C;
    }
    if (nfull < l && remaining > 0.0) a[nfull] = remaining;
  }

  // gradient g_i = (K a)_i
  std::vector<double> g(l, 0.0);
  for (int i = 0; i < l; ++i) {
    double s = 0.0;
    const double* row = K.data() + std::size_t(i) * l;
    for (int j = 0; j < l; ++j) s += row[j] * a[j];
    g[i] = s;
  }

  // maximal-violating-pair updates: optimality when
  // max_{a_j > 0} g_j - min_{a_i < C} g_i <= tol
  long iter = 0;
  if (!degenerate) {
    for (; iter < cfg.max_iters; ++iter) {
      int i_up = -1, j_dn = -1;
      double gmin = std::numeric_limits<double>::infinity();
      double gmax = -std::numeric_limits<double>::infinity();
      for (int t = 0; t < l; ++t) {
        if (a[t] < C - 1e-15 && g[t] < gmin) {
          gmin = g[t];
          i_up = t;
        }
        if (a[t] > 1e-15 && g[t] > gmax) {
          gmax = g[t];
          j_dn = t;
        }
      }
      if (i_up < 0 || j_dn < 0 || gmax - gmin <= cfg.kkt_tol) break;

      const double* Ki = K.data() + std::size_t(i_up) * l;
      const double* Kj = K.data() + std::size_t(j_dn) * l;
      double quad = Ki[i_up] + Kj[j_dn] - 2.0 * Ki[j_dn];
      if (quad < 1e-12) quad = 1e-12;
      double t_step = (g[j_dn] - g[i_up]) / quad;
      t_step = std::min(t_step, std::min(C - a[i_up], a[j_dn]));
      if (t_step <= 0.0) break;

      a[i_up] += t_step;
      a[j_dn] -= t_step;
      for (int t = 0; t < l; ++t) g[t] += t_step * (Ki[t] - Kj[t]);
    }
  }

  // rho from margin support vectors; fall back to the bound midpoint
  double rho;
  {
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < l; ++i)
      if (a[i] > 1e-8 * C && a[i] < C * (1.0 - 1e-8)) {
        sum += g[i];
        ++count;
      }
    if (count > 0) {
      rho = sum / count;
    } else {
      double lo = -std::numeric_limits<double>::infinity();
      double hi = std::numeric_limits<double>::infinity();
      for (int i = 0; i < l; ++i) {
        if (a[i] >= C * (1.0 - 1e-8)) lo = std::max(lo, g[i]);
        else if (a[i] <= 1e-8 * C) hi = std::min(hi, g[i]);
      }
      if (!std::isfinite(lo)) rho = hi;
      else if (!std::isfinite(hi)) rho = lo;
      else rho = 0.5 * (lo + hi);
    }
  }

  OcsvmModel model;
  model.nu = cfg.nu;
  model.gamma = cfg.gamma;
  model.rho = rho;
  model.dim = dim;
  model.degenerate = degenerate;
  for (int i = 0; i < l; ++i)
    if (a[i] > 0.0) {
      model.alpha.push_back(a[i]);
      model.sv.insert(model.sv.end(), samples.begin() + std::size_t(i) * dim,
                      samples.begin() + std::size_t(i + 1) * dim);
    }
  return model;
}

ChangeMap ocsvm_detect(const OcsvmModel& model, const Image& opt,
                       const Image& t2, int radius) {
  const std::vector<double> feats = pixel_features(opt, t2, radius);
  const int d = pixel_feature_dim(opt.channels);
  if (d != model.dim)
    throw std::invalid_argument("ocsvm_detect: feature dimension mismatch");
  ChangeMap map(opt.height, opt.width);
  const std::size_t n = map.size();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i) {
    const double f = model.decision(
        std::span<const double>(feats.data() + std::size_t(i) * d, d));
    map.bits[i] = f < 0.0 ? 1 : 0;
  }
  return map;
}

std::vector<double> features_from_mask(const Image& opt, const Image& t2,
                                       int radius, const ChangeMap& mask) {
  if (mask.height != opt.height || mask.width != opt.width)
    throw std::invalid_argument("features_from_mask: mask shape mismatch");
  const std::vector<double> feats = pixel_features(opt, t2, radius);
  const int d = pixel_feature_dim(opt.channels);
  std::vector<double> out;
  for (std::size_t i = 0; i < mask.bits.size(); ++i)
    if (mask.bits[i])
      out.insert(out.end(), feats.begin() + i * d, feats.begin() + (i + 1) * d);
  return out;
}

std::vector<double> self_training_features(const Image& opt, const Image& t2,
                                           int radius,
                                           std::size_t max_samples) {
  const Image diff = difference_image(opt, t2);
  const std::vector<double> feats = pixel_features(opt, t2, radius);
  const int d = pixel_feature_dim(opt.channels);
  const std::size_t n = diff.data.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                   std::size_t b) {
    return diff.data[a] < diff.data[b];
  });

  const std::size_t keep = std::max<std::size_t>(2, n / 2);
  const std::size_t take = std::min(keep, max_samples);
  std::vector<double> out;
  out.reserve(take * d);
  // even stride over the low-difference half keeps the choice deterministic
  for (std::size_t s = 0; s < take; ++s) {
    const std::size_t idx = order[s * keep / take];
    out.insert(out.end(), feats.begin() + idx * d,
               feats.begin() + (idx + 1) * d);
  }
  return out;
}

void save_ocsvm_json(const OcsvmModel& model, std::ostream& os) {
  nlohmann::json j;
  j["nu"] = model.nu;
  j["gamma"] = model.gamma;
  j["rho"] = model.rho;
  j["dim"] = model.dim;
  j["alpha"] = model.alpha;
  j["support_vectors"] = model.sv;
  j["degenerate"] = model.degenerate;
  os << j.dump(2) << "\n";
}

OcsvmModel load_ocsvm_json(std::istream& is) {
  nlohmann::json j = nlohmann::json::parse(is);
  OcsvmModel m;
  m.nu = j.at("nu").get<double>();
  m.gamma = j.at("gamma").get<double>();
  m.rho = j.at("rho").get<double>();
  m.dim = j.at("dim").get<int>();
  m.alpha = j.at("alpha").get<std::vector<double>>();
  m.sv = j.at("support_vectors").get<std::vector<double>>();
  m.degenerate = j.value("degenerate", false);
  if (m.sv.size() != m.alpha.size() * m.dim)
    throw std::runtime_error("ocsvm: inconsistent model file");
  return m;
}

}  // namespace dhff
