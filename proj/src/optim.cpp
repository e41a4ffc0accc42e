#include "gibbscal/optim.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <cmath>
#include <limits>
#include <memory>

#include "gibbscal/errors.hpp"

namespace gibbscal::optim {

namespace {

constexpr double kPenalty = 1e300;

struct Context {
  const Objective* f;
};

double trampoline(const gsl_vector* v, void* params) {
  const auto* ctx = static_cast<Context*>(params);
  Eigen::Map<const Eigen::VectorXd, 0, Eigen::InnerStride<>> x(v->data, static_cast<Eigen::Index>(v->size),
                                                              Eigen::InnerStride<>(static_cast<Eigen::Index>(v->stride)));
  const double value = (*ctx->f)(Eigen::VectorXd(x));
  return std::isfinite(value) ? value : kPenalty;
}

struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
struct MinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};

OptimResult run_once(const Objective& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& step, int max_iter,
                     double size_tol) {
  const auto n = static_cast<std::size_t>(x0.size());
  Context ctx{&f};
  gsl_multimin_function fn{&trampoline, n, &ctx};

  std::unique_ptr<gsl_vector, VectorDeleter> start(gsl_vector_alloc(n));
  std::unique_ptr<gsl_vector, VectorDeleter> steps(gsl_vector_alloc(n));
  for (std::size_t i = 0; i < n; ++i) {
    gsl_vector_set(start.get(), i, x0(static_cast<Eigen::Index>(i)));
    gsl_vector_set(steps.get(), i, step(static_cast<Eigen::Index>(i)));
  }
  std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> solver(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n));
  gsl_multimin_fminimizer_set(solver.get(), &fn, start.get(), steps.get());

  OptimResult result;
  int status = GSL_CONTINUE;
  int iter = 0;
  // Near a minimum the objective is flat to rounding over a width that can
  // exceed size_tol; the simplex then cycles without shrinking. Treat a long
  // run with neither a smaller simplex nor a lower value as converged.
  const int patience = 20 * (static_cast<int>(n) + 1);
  double best_size = std::numeric_limits<double>::infinity();
  double best_value = std::numeric_limits<double>::infinity();
  int stale = 0;
  while (status == GSL_CONTINUE && iter < max_iter) {
    ++iter;
    const int step_status = gsl_multimin_fminimizer_iterate(solver.get());
    if (step_status == GSL_ENOPROG) {
      status = GSL_SUCCESS;
      break;
    }
    if (step_status != GSL_SUCCESS) break;
    const double size = gsl_multimin_fminimizer_size(solver.get());
    status = gsl_multimin_test_size(size, size_tol);
    // Progress means the simplex halved or the value dropped beyond rounding.
    if (size < 0.5 * best_size || solver->fval < best_value - 1e-13 * (1.0 + std::abs(best_value))) {
      best_size = std::min(best_size, size);
      best_value = std::min(best_value, solver->fval);
      stale = 0;
    } else if (++stale >= patience) {
      status = GSL_SUCCESS;
    }
  }
  result.x.resize(x0.size());
  for (std::size_t i = 0; i < n; ++i) result.x(static_cast<Eigen::Index>(i)) = gsl_vector_get(solver->x, i);
  result.value = solver->fval;
  result.iterations = iter;
  result.converged = status == GSL_SUCCESS && result.value < kPenalty;
  return result;
}

}  // namespace

OptimResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                        const NelderMeadOptions& options) {
  if (x0.size() == 0 || step.size() != x0.size()) fail(ErrorKind::Structural, "nelder_mead: bad dimensions");
  static const bool handler_off = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)handler_off;

  OptimResult best = run_once(f, x0, step, options.max_iter, options.size_tol);
  for (int round = 0; round < options.polish_rounds && best.value < kPenalty; ++round) {
    OptimResult again = run_once(f, best.x, step * 0.1, options.max_iter, options.size_tol);
    again.iterations += best.iterations;
    const bool stalled = std::abs(again.value - best.value) <= 1e-12 * (1.0 + std::abs(best.value));
    if (again.value <= best.value) best = again;
    if (stalled) break;
  }
  return best;
}

Eigen::MatrixXd numeric_hessian(const Objective& f, const Eigen::VectorXd& x, double h) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd hs(n);
  for (Eigen::Index i = 0; i < n; ++i) hs(i) = h * std::max(1.0, std::abs(x(i)));
  Eigen::MatrixXd H(n, n);
  const double f0 = f(x);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp(i) += hs(i);
    xm(i) -= hs(i);
    H(i, i) = (f(xp) - 2.0 * f0 + f(xm)) / (hs(i) * hs(i));
    for (Eigen::Index j = 0; j < i; ++j) {
      Eigen::VectorXd a = x, b = x, c = x, d = x;
      a(i) += hs(i); a(j) += hs(j);
      b(i) += hs(i); b(j) -= hs(j);
      c(i) -= hs(i); c(j) += hs(j);
      d(i) -= hs(i); d(j) -= hs(j);
      H(i, j) = H(j, i) = (f(a) - f(b) - f(c) + f(d)) / (4.0 * hs(i) * hs(j));
    }
  }
  return H;
}

double bisect(const std::function<double(double)>& g, double lo, double hi, double tol, int max_iter) {
  double glo = g(lo);
  const double ghi = g(hi);
  if (glo == 0.0) return lo;
  if (ghi == 0.0) return hi;
  if ((glo > 0) == (ghi > 0)) fail(ErrorKind::Domain, "bisect: no sign change on bracket");
  for (int i = 0; i < max_iter && hi - lo > tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if ((gm > 0) == (glo > 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace gibbscal::optim
