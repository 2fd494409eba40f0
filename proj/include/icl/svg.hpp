#pragma once

#include <string>
#include <vector>

#include "icl/io.hpp"

namespace icl {

// Deterministic SVG line chart of mean_err vs n_context, one polyline per
// model with +-std_err error bars. Identical rows produce identical bytes.
std::string plot_results_svg(const std::vector<ResultRow>& rows);

}  // namespace icl
