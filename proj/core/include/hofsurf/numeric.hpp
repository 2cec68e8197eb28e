#pragma once

#include <span>

namespace hofsurf {

// Correctly rounded sum of finite values (Shewchuk's partials, final
// round-half-even fix-up as in Python's math.fsum). The result depends only
// on the multiset of inputs, never on their order.
double exact_sum(std::span<const double> values);

} // namespace hofsurf
