#pragma once

#include <functional>

#include "brw/scheme.hpp"

namespace brw {

struct ManyToOneCheck {
  double lhs = 0;  // E[sum over generation n of g(X_v)], by enumerating whole trees
  double rhs = 0;  // sum_x M^{*n}(x) g(x), M the mean displacement measure
  double abs_diff() const;
};

// Tabulated schemes only. Throws PreconditionError when the number of distinct
// generation configurations would exceed max_configs.
ManyToOneCheck many_to_one_check(const SchemeSpec& spec, int n_gen, const std::function<double(int)>& g,
                                 std::size_t max_configs = 2'000'000);

}  // namespace brw
