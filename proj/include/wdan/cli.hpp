#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "wdan/error.hpp"

namespace wdan::cli {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

int exit_code_for(ErrorKind kind) noexcept;

/// Entry point shared by the `wdan` executable and the tests. `args`
/// excludes the program name. Diagnostics go to `err` as one line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Static SVG line chart.
std::string line_chart_svg(const std::vector<double>& xs, const std::vector<double>& ys, const std::string& title,
                           const std::string& x_label, const std::string& y_label);

}  // namespace wdan::cli
