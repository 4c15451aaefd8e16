#include <algorithm>
#include <cmath>

#include "anav/numcore.hpp"

namespace anav::nc {

GradCheckResult grad_check(ParameterSet& params, const ScalarFn& f, double eps,
                           std::span<const ParamId> only) {
  auto analytic = params.make_gradients();
  {
    Tape tape(params);
    const Var loss = f(tape);
    tape.backward(loss, analytic);
  }

  auto evaluate = [&]() {
    Tape tape(params);
    return f(tape).item();
  };

  std::vector<ParamId> ids(only.begin(), only.end());
  if (ids.empty()) {
    for (ParamId i = 0; i < params.size(); ++i) ids.push_back(i);
  }

  GradCheckResult result;
  for (ParamId id : ids) {
    Parameter& p = params[id];
    for (int i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + eps;
      const double up = evaluate();
      p.value[i] = saved - eps;
      const double down = evaluate();
      p.value[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[static_cast<std::size_t>(id)][i];
      const double rel = std::abs(a - numeric) / std::max({1e-5, std::abs(numeric), std::abs(a)});
      ++result.checked;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = p.name;
        result.worst_index = i;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace anav::nc
