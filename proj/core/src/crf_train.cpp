#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <vector>

#include "crowdlab/crf.hpp"
#include "crowdlab/error.hpp"

namespace crowdlab {
namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

struct Evaluation {
  double f = 0.0;
  std::vector<double> g;
};

// Limited-memory BFGS with Armijo backtracking. Deterministic for a
// deterministic objective; history of 10 pairs, gamma-scaled initial Hessian.
struct Minimizer {
  std::function<Evaluation(const std::vector<double>&)> eval;
  int max_iterations = 200;
  double tolerance = 1e-4;
  int evaluations = 0;

  TrainReport run(std::vector<double>* x) {
    constexpr std::size_t kHistory = 10;
    constexpr double kArmijo = 1e-4;
    const std::size_t n = x->size();

    auto cur = eval(*x);
    ++evaluations;

    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;

    TrainReport report;
    std::vector<double> d(n), x_new(n);
    int iter = 0;
    for (; iter < max_iterations; ++iter) {
      if (inf_norm(cur.g) < tolerance) {
        report.converged = true;
        break;
      }

      // Two-loop recursion.
      d = cur.g;
      std::vector<double> alpha(s_hist.size());
      for (std::size_t i = s_hist.size(); i-- > 0;) {
        alpha[i] = rho_hist[i] * dot(s_hist[i], d);
        for (std::size_t j = 0; j < n; ++j) d[j] -= alpha[i] * y_hist[i][j];
      }
      if (!s_hist.empty()) {
        const double gamma =
            dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
        for (auto& v : d) v *= gamma;
      }
      for (std::size_t i = 0; i < s_hist.size(); ++i) {
        const double beta = rho_hist[i] * dot(y_hist[i], d);
        for (std::size_t j = 0; j < n; ++j) d[j] += (alpha[i] - beta) * s_hist[i][j];
      }
      for (auto& v : d) v = -v;

      double gd = dot(cur.g, d);
      if (!(gd < 0.0)) {
        // Fall back to steepest descent when the metric has degenerated.
        for (std::size_t j = 0; j < n; ++j) d[j] = -cur.g[j];
        gd = dot(cur.g, d);
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
      }

      double step = s_hist.empty() ? std::min(1.0, 1.0 / std::max(1e-12, inf_norm(cur.g))) : 1.0;
      Evaluation next;
      bool accepted = false;
      for (int half = 0; half < 50; ++half) {
        for (std::size_t j = 0; j < n; ++j) x_new[j] = (*x)[j] + step * d[j];
        next = eval(x_new);
        ++evaluations;
        if (std::isfinite(next.f) && next.f <= cur.f + kArmijo * step * gd) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;  // line search stalled; report where we stopped

      std::vector<double> s(n), yv(n);
      for (std::size_t j = 0; j < n; ++j) {
        s[j] = x_new[j] - (*x)[j];
        yv[j] = next.g[j] - cur.g[j];
      }
      const double sy = dot(s, yv);
      const double s2 = std::sqrt(dot(s, s));
      const double y2 = std::sqrt(dot(yv, yv));
      if (sy > 1e-10 * s2 * y2) {
        s_hist.push_back(std::move(s));
        y_hist.push_back(std::move(yv));
        rho_hist.push_back(1.0 / sy);
        if (s_hist.size() > kHistory) {
          s_hist.pop_front();
          y_hist.pop_front();
          rho_hist.pop_front();
        }
      }
      *x = x_new;
      cur = std::move(next);
    }

    report.iterations = iter;
    report.evaluations = evaluations;
    report.objective = cur.f;
    report.grad_inf_norm = inf_norm(cur.g);
    if (!report.converged) report.converged = inf_norm(cur.g) < tolerance;
    return report;
  }
};

}  // namespace

TrainReport train_crf(CrfModel& model, const std::vector<EncodedSequence>& sequences,
                      const Matrix* cost_table) {
  if (model.config.cost_sensitive != (cost_table != nullptr))
    throw Error("cost table presence must match the configured mode");
  if (sequences.empty()) throw Error("no training sequences");
  if (model.weights.size() != model.num_weights())
    throw Error("model weights not sized for its feature map");
  const double l2 = model.config.l2;
  if (l2 < 0.0) throw Error("l2 strength must be non-negative");

  Minimizer opt;
  opt.max_iterations = model.config.max_epochs;
  opt.tolerance = model.config.grad_tolerance;
  bool first_eval = true;
  opt.eval = [&](const std::vector<double>& w) {
    model.weights = w;
    Evaluation ev;
    ev.f = 0.0;
    ev.g.assign(w.size(), 0.0);
    try {
      for (const auto& seq : sequences) {
        const auto obj = sequence_objective(model, seq, cost_table);
        ev.f -= obj.loss;
        for (std::size_t j = 0; j < w.size(); ++j) ev.g[j] -= obj.grad[j];
      }
    } catch (const Error&) {
      // A probe past the representable range of the objective (the cost-
      // weighted mass underflows once the model all but memorizes a
      // sequence). Report it as infinitely bad so the line search backs off;
      // the first evaluation still surfaces real misconfigurations.
      if (first_eval) throw;
      ev.f = std::numeric_limits<double>::infinity();
      std::fill(ev.g.begin(), ev.g.end(), 0.0);
      return ev;
    }
    first_eval = false;
    for (std::size_t j = 0; j < w.size(); ++j) {
      ev.f += 0.5 * l2 * w[j] * w[j];
      ev.g[j] += l2 * w[j];
    }
    return ev;
  };

  std::vector<double> x = model.weights;
  const auto report = opt.run(&x);
  model.weights = x;
  return report;
}

}  // namespace crowdlab
