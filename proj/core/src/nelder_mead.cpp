#include "nelder_mead.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <cmath>
#include <limits>

namespace otest::detail {

namespace {

double trampoline(const gsl_vector* v, void* params) {
  const auto& f = *static_cast<const Objective*>(params);
  const double value = f(std::span<const double>(v->data, v->size));
  return std::isfinite(value) ? value : std::numeric_limits<double>::max();
}

}  // namespace

SimplexResult simplex_minimize(const Objective& f, std::vector<double> x0, double initial_step,
                               double size_tol, int max_iter) {
  static const bool handler_off = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)handler_off;

  const std::size_t dim = x0.size();
  gsl_multimin_function fn{&trampoline, dim, const_cast<Objective*>(&f)};
  gsl_vector* x = gsl_vector_alloc(dim);
  gsl_vector* step = gsl_vector_alloc(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    gsl_vector_set(x, i, x0[i]);
    gsl_vector_set(step, i, initial_step);
  }
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim);
  gsl_multimin_fminimizer_set(s, &fn, x, step);

  SimplexResult out;
  int status = GSL_CONTINUE;
  while (status == GSL_CONTINUE && out.iterations < max_iter) {
    ++out.iterations;
    if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
    status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), size_tol);
  }
  out.converged = status == GSL_SUCCESS;
  out.value = s->fval;
  out.x.assign(s->x->data, s->x->data + dim);

  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(step);
  gsl_vector_free(x);
  return out;
}

}  // namespace otest::detail
