#pragma once

#include <string>

#include "dhff/iist.hpp"

namespace dhff {

// Plain "key = value" configuration with '#' comments; unknown keys are
// rejected. Recognized keys mirror IistConfig:
//   lambda_c, alpha (single value or 16 comma-separated), max_outer_iters,
//   epsilon, content_layer (conv3-4|conv4-4|conv5-4), pooling (max|average),
//   seed, lbfgs_memory, lbfgs_max_iters, lbfgs_grad_tol, wolfe_c1, wolfe_c2
IistConfig parse_config_text(const std::string& text);
IistConfig parse_config_file(const std::string& path);

}  // namespace dhff
