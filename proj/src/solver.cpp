#include "beamopt/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <exception>
#include <numeric>
#include <string>

#include "beamopt/error.hpp"

namespace beamopt {

void SolverOptions::validate() const {
  if (!(fd_step > 0.0) || max_iterations == 0 || !(objective_tolerance > 0.0) || !(gradient_tolerance > 0.0) ||
      history == 0 || max_line_search == 0 || !(first_step > 0.0)) {
    throw ConfigError("solver options must all be positive");
  }
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double inf_norm(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

struct Failed {
  std::string what;
};

class Problem {
 public:
  Problem(const ScalarObjective& f, const Bounds& b, SolverResult& result) : f_(f), bounds_(b), result_(result) {
    const std::size_t n = b.lower.size();
    scale_.resize(n);
    for (std::size_t i = 0; i < n; ++i) scale_[i] = b.upper[i] - b.lower[i];
    physical_.resize(n);
  }

  bool fixed(std::size_t i) const { return !(scale_[i] > 0.0); }

  // Objective at normalized coordinates; throws Failed on error.
  double operator()(const std::vector<double>& y) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      physical_[i] = fixed(i) ? bounds_.lower[i] : std::clamp(bounds_.lower[i] + scale_[i] * y[i], bounds_.lower[i], bounds_.upper[i]);
    }
    ++result_.evaluations;
    double value = 0.0;
    try {
      value = f_(physical_);
    } catch (const std::exception& e) {
      throw Failed{e.what()};
    }
    if (!std::isfinite(value)) throw Failed{"objective is not finite"};
    return value;
  }

  std::vector<double> to_physical(const std::vector<double>& y) const {
    std::vector<double> x(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      x[i] = fixed(i) ? bounds_.lower[i] : std::clamp(bounds_.lower[i] + scale_[i] * y[i], bounds_.lower[i], bounds_.upper[i]);
    }
    return x;
  }

  std::vector<double> gradient(const std::vector<double>& y, double fy, double h) {
    std::vector<double> g(y.size(), 0.0);
    std::vector<double> probe = y;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (fixed(i)) continue;
      const double step = y[i] + h <= 1.0 ? h : -h;
      probe[i] = y[i] + step;
      g[i] = ((*this)(probe) - fy) / step;
      probe[i] = y[i];
    }
    return g;
  }

 private:
  const ScalarObjective& f_;
  const Bounds& bounds_;
  SolverResult& result_;
  std::vector<double> scale_;
  std::vector<double> physical_;
};

}  // namespace

SolverResult solve_box_qn(const ScalarObjective& objective, std::span<const double> x0, const Bounds& bounds,
                          const SolverOptions& options) {
  options.validate();
  const std::size_t n = x0.size();
  if (bounds.lower.size() != n || bounds.upper.size() != n) throw ConfigError("bounds do not match x0");
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(bounds.lower[i] <= bounds.upper[i])) throw ConfigError("lower bound exceeds upper bound");
    if (!(x0[i] >= bounds.lower[i] && x0[i] <= bounds.upper[i])) {
      throw ConfigError("initial point outside bounds at coordinate " + std::to_string(i));
    }
    const double scale = bounds.upper[i] - bounds.lower[i];
    y[i] = scale > 0.0 ? (x0[i] - bounds.lower[i]) / scale : 0.0;
  }

  SolverResult result;
  Problem problem(objective, bounds, result);
  double f = 0.0;
  try {
    f = problem(y);
  } catch (const Failed& e) {
    throw SolverError("objective not finite at the initial point: " + e.what);
  }
  result.initial_objective = f;
  result.objective = f;
  result.x.assign(x0.begin(), x0.end());

  auto is_free = [&](std::size_t i, const std::vector<double>& grad) {
    if (problem.fixed(i)) return false;
    if (y[i] <= 0.0 && grad[i] > 0.0) return false;
    if (y[i] >= 1.0 && grad[i] < 0.0) return false;
    return true;
  };

  std::deque<std::vector<double>> s_hist;
  std::deque<std::vector<double>> y_hist;
  std::deque<double> rho_hist;

  try {
    std::vector<double> g = problem.gradient(y, f, options.fd_step);
    for (unsigned it = 1; it <= options.max_iterations; ++it) {
      std::vector<double> pg(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) pg[i] = is_free(i, g) ? g[i] : 0.0;
      const double pg_norm = inf_norm(pg);
      if (pg_norm <= options.gradient_tolerance) {
        result.message = "projected gradient below tolerance";
        break;
      }

      // Two-loop recursion restricted to free coordinates.
      auto direction = [&]() {
        std::vector<double> q = pg;
        std::vector<double> alpha(s_hist.size());
        for (std::size_t j = s_hist.size(); j-- > 0;) {
          alpha[j] = rho_hist[j] * dot(s_hist[j], q);
          for (std::size_t i = 0; i < n; ++i) q[i] -= alpha[j] * y_hist[j][i];
        }
        if (!s_hist.empty()) {
          const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
          for (double& v : q) v *= gamma;
        }
        for (std::size_t j = 0; j < s_hist.size(); ++j) {
          const double beta = rho_hist[j] * dot(y_hist[j], q);
          for (std::size_t i = 0; i < n; ++i) q[i] += s_hist[j][i] * (alpha[j] - beta);
        }
        for (std::size_t i = 0; i < n; ++i) q[i] = pg[i] != 0.0 ? -q[i] : 0.0;
        return q;
      };

      std::vector<double> d = direction();
      if (dot(d, g) >= 0.0 || s_hist.empty()) {
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        d = pg;
        for (double& v : d) v = -v;
        const double scale = options.first_step / inf_norm(d);
        for (double& v : d) v *= scale;
      }

      // Backtracking along the projection arc.
      std::vector<double> y_new(n);
      double f_new = f;
      bool accepted = false;
      double step = 1.0;
      for (unsigned ls = 0; ls < options.max_line_search; ++ls) {
        for (std::size_t i = 0; i < n; ++i) y_new[i] = std::clamp(y[i] + step * d[i], 0.0, 1.0);
        double decrease = 0.0;
        for (std::size_t i = 0; i < n; ++i) decrease += g[i] * (y_new[i] - y[i]);
        if (decrease >= 0.0) break;
        f_new = problem(y_new);
        if (f_new <= f + 1e-4 * decrease) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        if (!s_hist.empty()) {
          // Retry from steepest descent with fresh memory.
          s_hist.clear();
          y_hist.clear();
          rho_hist.clear();
          continue;
        }
        result.message = "line search failed";
        break;
      }

      std::vector<double> g_new = problem.gradient(y_new, f_new, options.fd_step);
      std::vector<double> s(n);
      std::vector<double> yv(n);
      for (std::size_t i = 0; i < n; ++i) {
        s[i] = y_new[i] - y[i];
        yv[i] = g_new[i] - g[i];
      }
      const double sy = dot(s, yv);
      if (sy > 1e-12 * dot(yv, yv)) {
        s_hist.push_back(std::move(s));
        y_hist.push_back(std::move(yv));
        rho_hist.push_back(1.0 / sy);
        if (s_hist.size() > options.history) {
          s_hist.pop_front();
          y_hist.pop_front();
          rho_hist.pop_front();
        }
      }

      const double reduction = (f - f_new) / std::max({std::abs(f), std::abs(f_new), 1e-300});
      y = y_new;
      f = f_new;
      g = std::move(g_new);
      result.iterations = it;
      result.objective = f;
      result.x = problem.to_physical(y);
      result.trace.push_back({it, f, pg_norm, result.evaluations});
      if (reduction <= options.objective_tolerance) {
        result.message = "relative objective decrease below tolerance";
        break;
      }
      if (it == options.max_iterations) result.message = "iteration limit reached";
    }
  } catch (const Failed& e) {
    result.aborted = true;
    result.message = "objective evaluation failed: " + e.what;
  }
  return result;
}

}  // namespace beamopt
