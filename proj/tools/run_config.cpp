#include "run_config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace dhff {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& v, const std::string& key) {
  std::size_t pos = 0;
  double d;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad numeric value for " + key);
  }
  if (pos != v.size())
    throw std::invalid_argument("config: trailing junk in value for " + key);
  return d;
}

long to_long(const std::string& v, const std::string& key) {
  std::size_t pos = 0;
  long d;
  try {
    d = std::stol(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer value for " + key);
  }
  if (pos != v.size())
    throw std::invalid_argument("config: trailing junk in value for " + key);
  return d;
}

}  // namespace

IistConfig parse_config_text(const std::string& text) {
  IistConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " is not 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw std::invalid_argument("config: empty key or value on line " +
                                  std::to_string(lineno));

    if (key == "lambda_c") {
      cfg.lambda_c = to_double(val, key);
    } else if (key == "alpha") {
      std::vector<double> parts;
      std::stringstream ss(val);
      std::string tok;
      while (std::getline(ss, tok, ','))
        parts.push_back(to_double(trim(tok), key));
      if (parts.size() == 1) {
        cfg.alpha.fill(parts[0]);
      } else if (parts.size() == 16) {
        std::copy(parts.begin(), parts.end(), cfg.alpha.begin());
      } else {
        throw std::invalid_argument(
            "config: alpha needs 1 or 16 comma-separated values");
      }
    } else if (key == "max_outer_iters") {
      cfg.max_outer_iters = static_cast<int>(to_long(val, key));
    } else if (key == "epsilon") {
      cfg.epsilon = to_double(val, key);
    } else if (key == "content_layer") {
      if (val == "conv3-4") cfg.content_layer = ContentLayer::Conv3_4;
      else if (val == "conv4-4") cfg.content_layer = ContentLayer::Conv4_4;
      else if (val == "conv5-4") cfg.content_layer = ContentLayer::Conv5_4;
      else
        throw std::invalid_argument(
            "config: content_layer must be conv3-4, conv4-4 or conv5-4");
    } else if (key == "pooling") {
      if (val == "max") cfg.pooling = PoolingMode::Max;
      else if (val == "average") cfg.pooling = PoolingMode::Average;
      else
        throw std::invalid_argument("config: pooling must be max or average");
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(to_long(val, key));
    } else if (key == "lbfgs_memory") {
      cfg.lbfgs.memory = static_cast<int>(to_long(val, key));
    } else if (key == "lbfgs_max_iters") {
      cfg.lbfgs.max_iters = static_cast<int>(to_long(val, key));
    } else if (key == "lbfgs_grad_tol") {
      cfg.lbfgs.grad_tol = to_double(val, key);
    } else if (key == "wolfe_c1") {
      cfg.lbfgs.c1 = to_double(val, key);
    } else if (key == "wolfe_c2") {
      cfg.lbfgs.c2 = to_double(val, key);
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

IistConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace dhff
