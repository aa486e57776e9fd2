#include "dhff/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace dhff {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

bool finite(double v) { return std::isfinite(v); }

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

struct Eval {
  double f = 0.0;
  double dg = 0.0;  // directional derivative g(x+a*d)^T d
};

// Cubic minimizer of the interpolant through (a, fa, ga) and (b, fb, gb),
// clipped into the inner 10% band of [a,b]. Falls back to bisection.
double cubic_min(double a, double fa, double ga, double b, double fb,
                 double gb) {
  const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - ga * gb;
  if (disc >= 0.0) {
    const double d2 = std::sqrt(disc) * (b > a ? 1.0 : -1.0);
    double t = b - (b - a) * (gb + d2 - d1) / (gb - ga + 2.0 * d2);
    const double lo = std::min(a, b), hi = std::max(a, b);
    const double pad = 0.1 * (hi - lo);
    if (finite(t) && t > lo + pad && t < hi - pad) return t;
  }
  return 0.5 * (a + b);
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& objective, std::vector<double> x0,
                           const LbfgsConfig& cfg) {
  const std::size_t n = x0.size();
  LbfgsResult res;

  std::vector<double> x = std::move(x0);
  std::vector<double> g(n, 0.0), xtrial(n, 0.0), gtrial(n, 0.0);

  double f = objective(x, g);
  if (!finite(f) || !all_finite(g)) {
    res.x = std::move(x);
    res.f = f;
    res.status = LbfgsStatus::NonFinite;
    return res;
  }
  res.history.push_back(f);

  // best-seen iterate, returned whatever happens later
  std::vector<double> xbest = x;
  double fbest = f;

  auto grad_converged = [&](const std::vector<double>& xs,
                            const std::vector<double>& gs) {
    return norm2(gs) <= cfg.grad_tol * std::max(1.0, norm2(xs));
  };

  if (grad_converged(x, g)) {
    res.x = std::move(x);
    res.f = f;
    res.status = LbfgsStatus::AlreadyMinimized;
    return res;
  }

  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Pair> mem;

  std::vector<double> d(n, 0.0), alpha_buf;
  res.status = LbfgsStatus::MaxIters;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    // two-loop recursion: d = -H g
    d = g;
    alpha_buf.assign(mem.size(), 0.0);
    for (int i = int(mem.size()) - 1; i >= 0; --i) {
      const Pair& p = mem[i];
      alpha_buf[i] = p.rho * dot(p.s, d);
      for (std::size_t j = 0; j < n; ++j) d[j] -= alpha_buf[i] * p.y[j];
    }
    if (!mem.empty()) {
      const Pair& last = mem.back();
      const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      for (double& v : d) v *= gamma;
    }
    for (int i = 0; i < int(mem.size()); ++i) {
      const Pair& p = mem[i];
      const double beta = p.rho * dot(p.y, d);
      for (std::size_t j = 0; j < n; ++j)
        d[j] += (alpha_buf[i] - beta) * p.s[j];
    }
    for (double& v : d) v = -v;

    double dg0 = dot(g, d);
    if (!(dg0 < 0.0)) {  // not a descent direction; restart from -g
      mem.clear();
      for (std::size_t j = 0; j < n; ++j) d[j] = -g[j];
      dg0 = dot(g, d);
      if (!(dg0 < 0.0)) {
        res.status = LbfgsStatus::LineSearchFailed;
        break;
      }
    }

    // strong Wolfe line search (bracket + zoom)
    auto phi = [&](double a, Eval& ev) -> bool {
      for (std::size_t j = 0; j < n; ++j) xtrial[j] = x[j] + a * d[j];
      ev.f = objective(xtrial, gtrial);
      if (!finite(ev.f) || !all_finite(gtrial)) return false;
      ev.dg = dot(gtrial, d);
      return true;
    };

    const double f0 = f;
    bool nonfinite = false;
    double a_prev = 0.0, f_prev = f0, dg_prev = dg0;
    double a = 1.0;
    double a_lo = -1.0, f_lo = 0.0, dg_lo = 0.0;
    double a_hi = -1.0, f_hi = 0.0, dg_hi = 0.0;
    bool bracketed = false, accepted = false;
    Eval ev;
    int evals = 0;

    while (evals < cfg.max_linesearch) {
      if (!phi(a, ev)) {
        nonfinite = true;
        break;
      }
      ++evals;
      if (ev.f > f0 + cfg.c1 * a * dg0 || (evals > 1 && ev.f >= f_prev)) {
        a_lo = a_prev; f_lo = f_prev; dg_lo = dg_prev;
        a_hi = a; f_hi = ev.f; dg_hi = ev.dg;
        bracketed = true;
        break;
      }
      if (std::abs(ev.dg) <= -cfg.c2 * dg0) {
        accepted = true;
        break;
      }
      if (ev.dg >= 0.0) {
        a_lo = a; f_lo = ev.f; dg_lo = ev.dg;
        a_hi = a_prev; f_hi = f_prev; dg_hi = dg_prev;
        bracketed = true;
        break;
      }
      a_prev = a; f_prev = ev.f; dg_prev = ev.dg;
      a *= 2.0;
      if (a > 1e10) break;
    }

    if (bracketed && !accepted && !nonfinite) {
      while (evals < cfg.max_linesearch) {
        const double aj = cubic_min(a_lo, f_lo, dg_lo, a_hi, f_hi, dg_hi);
        if (!phi(aj, ev)) {
          nonfinite = true;
          break;
        }
        ++evals;
        if (ev.f > f0 + cfg.c1 * aj * dg0 || ev.f >= f_lo) {
          a_hi = aj; f_hi = ev.f; dg_hi = ev.dg;
        } else {
          if (std::abs(ev.dg) <= -cfg.c2 * dg0) {
            accepted = true;
            break;
          }
          if (ev.dg * (a_hi - a_lo) >= 0.0) {
            a_hi = a_lo; f_hi = f_lo; dg_hi = dg_lo;
          }
          a_lo = aj; f_lo = ev.f; dg_lo = ev.dg;
        }
        if (std::abs(a_hi - a_lo) <=
            1e-16 * std::max(1.0, std::max(std::abs(a_lo), std::abs(a_hi))))
          break;
      }
    }

    if (nonfinite) {
      res.status = LbfgsStatus::NonFinite;
      break;
    }
    if (!accepted) {
      res.status = LbfgsStatus::LineSearchFailed;
      break;
    }

    // the accepting phi() call left the trial point in xtrial
    std::vector<double> s(n), ynew(n);
    for (std::size_t j = 0; j < n; ++j) {
      s[j] = xtrial[j] - x[j];
      ynew[j] = gtrial[j] - g[j];
    }
    x.swap(xtrial);
    g.swap(gtrial);  // the accepting phi() call left the gradient here
    f = ev.f;
    ++res.iterations;
    res.history.push_back(f);
    if (f < fbest) {
      fbest = f;
      xbest = x;
    }

    const double sy = dot(s, ynew);
    if (sy > 1e-10 * norm2(s) * norm2(ynew)) {
      Pair p{std::move(s), std::move(ynew), 1.0 / sy};
      mem.push_back(std::move(p));
      if (int(mem.size()) > cfg.memory) mem.pop_front();
    }

    if (grad_converged(x, g)) {
      res.status = LbfgsStatus::GradTol;
      break;
    }
  }

  res.x = std::move(xbest);
  res.f = fbest;
  return res;
}

}  // namespace dhff
