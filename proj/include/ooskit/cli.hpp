#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ooskit/metric_core.hpp"

namespace ooskit::cli {

/// Runs one `ooskit` invocation. args excludes the program name.
/// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "origin" (needs dim) or comma-separated coordinates.
Point parse_point(const std::string& text, Index dim = 0);

/// Prototype list "x,y;x,y;...", assigned class ids 1..k in order.
std::vector<Point> parse_point_list(const std::string& text);

}  // namespace ooskit::cli
