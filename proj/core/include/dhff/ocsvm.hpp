#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "dhff/detect.hpp"

namespace dhff {

// nu-one-class SVM with RBF kernel, decision
//   f(x) = sum_j alpha_j * exp(-gamma ||x - sv_j||^2) - rho,
// f < 0 flags an outlier (change).
struct OcsvmModel {
  double nu = 0.0;
  double gamma = 0.0;
  double rho = 0.0;
  int dim = 0;
  std::vector<double> sv;     // support vectors, row-major, dim each
  std::vector<double> alpha;  // matching dual coefficients, sum = 1
  bool degenerate = false;    // all training samples identical

  double decision(std::span<const double> x) const;
};

struct OcsvmTrainConfig {
  double nu = 0.1;
  double gamma = 1.0;
  double kkt_tol = 1e-4;
  long max_iters = 2'000'000;
};

// Solves min 1/2 a^T K a  s.t. 0 <= a_i <= 1/(nu*l), sum a = 1 by
// maximal-violating-pair coordinate updates on the dense kernel matrix.
// Requires l >= 2 finite samples (row-major, dim each).
OcsvmModel ocsvm_train(std::span<const double> samples, int dim,
                       const OcsvmTrainConfig& cfg);

// Pixel marked change iff the decision value of its feature vector is
// negative.
ChangeMap ocsvm_detect(const OcsvmModel& model, const Image& opt,
                       const Image& t2, int radius);

// Rows of `mask` with value 1 select training pixels (the caller's
// "unchanged" mask).
std::vector<double> features_from_mask(const Image& opt, const Image& t2,
                                       int radius, const ChangeMap& mask);

// Self-training fallback: features of the 50% of pixels with the smallest
// difference-image values, subsampled evenly to at most max_samples.
std::vector<double> self_training_features(const Image& opt, const Image& t2,
                                           int radius,
                                           std::size_t max_samples = 4096);

void save_ocsvm_json(const OcsvmModel& model, std::ostream& os);
OcsvmModel load_ocsvm_json(std::istream& is);

}  // namespace dhff
