#include "spot/lbfgs.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <sstream>

#include "spot/grid.hpp"

namespace spot {

void LbfgsOptions::validate() const {
  if (memory < 1) throw ParameterError("lbfgs memory must be >= 1");
  if (max_iterations < 0) throw ParameterError("lbfgs max_iterations must be >= 0");
  if (!(g_tol >= 0.0)) throw ParameterError("lbfgs g_tol must be >= 0");
  if (!(c1 > 0.0 && c1 < c2 && c2 < 1.0)) throw ParameterError("lbfgs needs 0 < c1 < c2 < 1");
  if (max_line_search < 1) throw ParameterError("lbfgs max_line_search must be >= 1");
}

const char* to_string(LbfgsStatus s) {
  switch (s) {
    case LbfgsStatus::Converged: return "converged";
    case LbfgsStatus::MaxIterations: return "max_iterations";
    case LbfgsStatus::WallClock: return "wall_clock";
    case LbfgsStatus::LineSearchFailed: return "line_search_failed";
  }
  return "unknown";
}

namespace {

struct Evaluator {
  const Objective& f;
  int count = 0;

  double operator()(const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    ++count;
    g.resize(x.size());
    const double v = f(x, g);
    if (!std::isfinite(v) || !g.allFinite()) {
      std::ostringstream os;
      os << "objective returned a non-finite " << (std::isfinite(v) ? "gradient" : "value") << " at evaluation "
         << count << " (|x|=" << x.norm() << ")";
      throw ParameterError(os.str());
    }
    return v;
  }
};

// Minimizer of the cubic through (a, fa, da) and (b, fb, db), kept inside
// the bracket; falls back to bisection.
double cubic_step(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  const double lo = std::min(a, b), hi = std::max(a, b);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    const double margin = 0.1 * (hi - lo);
    if (std::isfinite(t) && t > lo + margin && t < hi - margin) return t;
  }
  return 0.5 * (a + b);
}

struct LineResult {
  bool ok = false;
  double alpha = 0.0;
  double f = 0.0;
  Eigen::VectorXd x, g;
};

LineResult strong_wolfe(Evaluator& eval, const Eigen::VectorXd& x, double f0, const Eigen::VectorXd& g0,
                        const Eigen::VectorXd& dir, double alpha0, const LbfgsOptions& o) {
  const double d0 = g0.dot(dir);
  LineResult best;
  best.f = f0;
  double a_prev = 0.0, f_prev = f0, d_prev = d0;
  double a = alpha0;
  Eigen::VectorXd xa, ga;
  int evals = 0;

  auto zoom = [&](double lo, double flo, double dlo, double hi, double fhi, double dhi) -> LineResult {
    while (evals < o.max_line_search) {
      const double aj = cubic_step(lo, flo, dlo, hi, fhi, dhi);
      xa = x + aj * dir;
      const double fj = eval(xa, ga);
      ++evals;
      const double dj = ga.dot(dir);
      if (fj < best.f) best = {false, aj, fj, xa, ga};
      if (fj > f0 + o.c1 * aj * d0 || fj >= flo) {
        hi = aj;
        fhi = fj;
        dhi = dj;
      } else {
        if (std::abs(dj) <= -o.c2 * d0) return {true, aj, fj, xa, ga};
        if (dj * (hi - lo) >= 0.0) {
          hi = lo;
          fhi = flo;
          dhi = dlo;
        }
        lo = aj;
        flo = fj;
        dlo = dj;
      }
      if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
    }
    return best;
  };

  while (evals < o.max_line_search) {
    xa = x + a * dir;
    const double fa = eval(xa, ga);
    ++evals;
    const double da = ga.dot(dir);
    if (fa < best.f) best = {false, a, fa, xa, ga};
    if (fa > f0 + o.c1 * a * d0 || (evals > 1 && fa >= f_prev)) return zoom(a_prev, f_prev, d_prev, a, fa, da);
    if (std::abs(da) <= -o.c2 * d0) return {true, a, fa, xa, ga};
    if (da >= 0.0) return zoom(a, fa, da, a_prev, f_prev, d_prev);
    a_prev = a;
    f_prev = fa;
    d_prev = da;
    a *= 2.0;
  }
  return best;
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& objective, const Eigen::VectorXd& x0, const LbfgsOptions& o) {
  o.validate();
  const auto start = std::chrono::steady_clock::now();
  Evaluator eval{objective};
  LbfgsResult r;
  r.x = x0;
  r.f = eval(r.x, r.g);
  r.history.push_back(r.f);

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  r.status = LbfgsStatus::MaxIterations;

  for (;;) {
    if (r.g.norm() < o.g_tol) {
      r.status = LbfgsStatus::Converged;
      break;
    }
    if (r.iterations >= o.max_iterations) {
      r.status = LbfgsStatus::MaxIterations;
      break;
    }
    if (o.max_wall_ms > 0.0) {
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      if (ms >= o.max_wall_ms) {
        r.status = LbfgsStatus::WallClock;
        break;
      }
    }

    // Two-loop recursion.
    Eigen::VectorXd q = r.g;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    double gamma = 1.0;
    if (o.precondition) {
      if (!s_hist.empty()) {
        Eigen::VectorXd py = y_hist.back();
        o.precondition(py);
        gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().dot(py);
      }
      o.precondition(q);
    } else if (!s_hist.empty()) {
      gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    }
    Eigen::VectorXd dir = gamma * q;
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(dir);
      dir += (alpha[i] - beta) * s_hist[i];
    }
    dir = -dir;
    if (!(r.g.dot(dir) < 0.0)) {
      // Not a descent direction; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -r.g;
      if (o.precondition) o.precondition(dir);
    }
    // A preconditioned first step is already scaled.
    const double alpha0 = s_hist.empty() && !o.precondition ? std::min(1.0, 1.0 / r.g.norm()) : 1.0;

    LineResult ls = strong_wolfe(eval, r.x, r.f, r.g, dir, alpha0, o);
    if (!ls.ok) {
      if (ls.f < r.f) {
        r.x = ls.x;
        r.f = ls.f;
        r.g = ls.g;
        ++r.iterations;
        r.history.push_back(r.f);
      }
      r.status = LbfgsStatus::LineSearchFailed;
      break;
    }
    const Eigen::VectorXd s = ls.x - r.x;
    const Eigen::VectorXd y = ls.g - r.g;
    r.x = ls.x;
    r.f = ls.f;
    r.g = ls.g;
    ++r.iterations;
    r.history.push_back(r.f);
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > o.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
  }
  r.evaluations = eval.count;
  return r;
}

}  // namespace spot
