#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vqol {

enum class Severity { Error, Warning, Info };

/// A message about an experiment. Parser diagnostics carry a line and
/// column (1-based); layout diagnostics carry the grid cell. Unknown
/// positions are -1.
struct Diagnostic {
    Severity severity = Severity::Error;
    std::string message;
    int line = -1;
    int column = -1;
    int x = -1;
    int y = -1;
};

using Diagnostics = std::vector<Diagnostic>;

std::string_view severity_name(Severity s);

bool has_errors(const Diagnostics &diags);

/// "error: line 3, col 9: unknown key 'bogus'" style rendering.
std::string format_diagnostic(const Diagnostic &d);

}  // namespace vqol
