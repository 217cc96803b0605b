#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mmrmx/csv.hpp"

namespace mmrmx {

struct RatePlotOptions {
    std::string title;
    std::string y_label = "rejection rate";
    double y_max = 1.0;
    std::optional<double> reference_line;  // e.g. the nominal level
};

// Static SVG 1.1 panel grid: one facet per (rho, b) pair, rejection rate
// against delta, one polyline per estimator. Pure function of the parsed
// CSV rows, so re-rendering from the same CSV is byte-identical.
std::string render_rates_svg(const std::vector<ResultRow>& rows,
                             const RatePlotOptions& opts);

}  // namespace mmrmx
