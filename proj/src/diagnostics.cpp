#include "vqol/diagnostics.hpp"

#include <algorithm>

namespace vqol {

std::string_view severity_name(Severity s) {
    switch (s) {
    case Severity::Error: return "error";
    case Severity::Warning: return "warning";
    case Severity::Info: return "info";
    }
    return "error";
}

bool has_errors(const Diagnostics &diags) {
    return std::any_of(diags.begin(), diags.end(),
                       [](const Diagnostic &d) { return d.severity == Severity::Error; });
}

std::string format_diagnostic(const Diagnostic &d) {
    std::string out(severity_name(d.severity));
    out += ": ";
    if (d.line >= 0) {
        out += "line " + std::to_string(d.line);
        if (d.column >= 0) out += ", col " + std::to_string(d.column);
        out += ": ";
    } else if (d.x >= 0 && d.y >= 0) {
        out += "(" + std::to_string(d.x) + "," + std::to_string(d.y) + "): ";
    }
    out += d.message;
    return out;
}

}  // namespace vqol
