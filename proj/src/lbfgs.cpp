#include "stylo/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace stylo {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(std::span<const double> a) {
  double m = 0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

struct Pair {
  std::vector<double> s, y;
  double rho;
};

// Two-loop recursion: d = -H g.
void search_direction(const std::deque<Pair>& mem, std::span<const double> g,
                      std::vector<double>& d, std::vector<double>& alpha) {
  d.assign(g.begin(), g.end());
  for (double& v : d) v = -v;
  alpha.resize(mem.size());
  for (std::size_t k = mem.size(); k-- > 0;) {
    alpha[k] = mem[k].rho * dot(mem[k].s, d);
    const auto& y = mem[k].y;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= alpha[k] * y[i];
  }
  if (!mem.empty()) {
    const auto& last = mem.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (double& v : d) v *= gamma;
  }
  for (std::size_t k = 0; k < mem.size(); ++k) {
    const double beta = mem[k].rho * dot(mem[k].y, d);
    const auto& s = mem[k].s;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += (alpha[k] - beta) * s[i];
  }
}

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& f, std::span<double> x, const LbfgsOptions& opts) {
  const std::size_t n = x.size();
  LbfgsResult result;
  std::vector<double> g(n), g_new(n), x_new(n), d, alpha;
  std::deque<Pair> mem;

  double fx = f(x, g);
  result.history.push_back(fx);
  if (max_abs(g) <= opts.gtol) {
    result.value = fx;
    result.converged = true;
    return result;
  }

  for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
    search_direction(mem, g, d, alpha);
    double slope = dot(g, d);
    if (!(slope < 0)) {
      mem.clear();
      d.assign(g.begin(), g.end());
      for (double& v : d) v = -v;
      slope = dot(g, d);
    }
    double step = 1.0;
    if (mem.empty()) step = std::min(1.0, 1.0 / std::sqrt(-slope));

    double f_new = 0;
    bool accepted = false;
    for (std::size_t bt = 0; bt < opts.max_backtracks; ++bt) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * d[i];
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= fx + opts.armijo_c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no progress possible along d

    Pair p;
    p.s.resize(n);
    p.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      p.s[i] = x_new[i] - x[i];
      p.y[i] = g_new[i] - g[i];
    }
    const double sy = dot(p.s, p.y);
    if (sy > 1e-12 * dot(p.y, p.y)) {
      p.rho = 1.0 / sy;
      if (mem.size() == opts.history) mem.pop_front();
      mem.push_back(std::move(p));
    }

    std::copy(x_new.begin(), x_new.end(), x.begin());
    g.swap(g_new);
    const double f_old = fx;
    fx = f_new;
    result.history.push_back(fx);
    result.iterations = iter + 1;

    if (max_abs(g) <= opts.gtol) {
      result.converged = true;
      break;
    }
    const double scale = std::max({std::abs(f_old), std::abs(fx), 1.0});
    if ((f_old - fx) / scale <= opts.ftol) {
      result.converged = true;
      break;
    }
  }
  result.value = fx;
  return result;
}

}  // namespace stylo
