#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vqol/circuit.hpp"
#include "vqol/diagnostics.hpp"

namespace vqol {

struct ExperimentSpec {
    double num_seconds = 1e-3;
    bool offline_mode = false;
    std::vector<GridPlacement> placements;
    std::uint64_t source_text_hash = 0;

    std::int64_t num_steps() const;
};

struct ParseResult {
    ExperimentSpec spec;
    Diagnostics diagnostics;
    bool ok() const { return !has_errors(diagnostics); }
};

/// Parse experiment text. Every malformed line produces one diagnostic and
/// parsing continues with the next line.
ParseResult parse(std::string_view text);

/// Canonical text: settings first, then components sorted by (y, x) with
/// only keys that differ from their defaults (x and y always).
std::string serialize(const ExperimentSpec &spec);

/// Equality ignoring placement order and the source hash.
bool structurally_equal(const ExperimentSpec &a, const ExperimentSpec &b);

/// FNV-1a 64-bit hash of the source text.
std::uint64_t fnv1a64(std::string_view text);

/// Keys accepted by a kind, excluding the common x, y, orientation, id.
const std::vector<std::string_view> &kind_keys(Kind kind);

/// Set one key of a placement from its textual value, with the same checks
/// the parser applies. Returns an error message on failure.
std::optional<std::string> set_key(GridPlacement &p, std::string_view key, std::string_view value);

/// Apply a `target.param=value` override. Targets are an id label, a kind
/// name (when unique in the experiment), `Kind#n` (1-based in (y, x) order), a bare
/// parameter name accepted by exactly one component, or a setting name.
std::optional<std::string> apply_override(ExperimentSpec &spec, std::string_view name,
                                          std::string_view value);

/// Shortest round-trip decimal form of a double.
std::string format_number(double v);

}  // namespace vqol
