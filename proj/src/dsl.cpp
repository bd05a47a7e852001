#include "vqol/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

namespace vqol {

namespace {

constexpr std::string_view kWhitespace = " \t\r\v\f";

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(kWhitespace);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(kWhitespace);
    return s.substr(b, e - b + 1);
}

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto ca = static_cast<unsigned char>(a[i]);
        const auto cb = static_cast<unsigned char>(b[i]);
        if (std::tolower(ca) != std::tolower(cb)) return false;
    }
    return true;
}

std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v))
        return std::nullopt;
    return v;
}

std::optional<long long> parse_integer(std::string_view s) {
    const auto v = parse_double(s);
    if (!v || *v != std::floor(*v) || std::abs(*v) > 1e9) return std::nullopt;
    return static_cast<long long>(*v);
}

std::optional<bool> parse_bool(std::string_view s) {
    s = trim(s);
    if (iequals(s, "true") || s == "1") return true;
    if (iequals(s, "false") || s == "0") return false;
    return std::nullopt;
}

bool valid_id(std::string_view s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
    });
}

const std::vector<std::string_view> kNoKeys{};

struct KeyTable {
    std::map<Kind, std::vector<std::string_view>> keys{
        {Kind::HalfWavePlate, {"angle"}},
        {Kind::QuarterWavePlate, {"angle"}},
        {Kind::PhaseDelay, {"phi"}},
        {Kind::TimeDelay, {"steps"}},
        {Kind::Rotator, {"angle"}},
        {Kind::PhaseRetarder, {"phi"}},
        {Kind::NeutralDensityFilter, {"d"}},
        {Kind::Polarizer, {"angle", "phi"}},
        {Kind::BeamSplitter, {"r"}},
        {Kind::PolarizingBeamSplitter, {"basis"}},
        {Kind::LED, {"power"}},
        {Kind::Laser, {"power", "polarization"}},
        {Kind::EntanglementSource, {"type", "r", "varphi", "directions"}},
        {Kind::Detector, {"dcr"}},
    };
};

const KeyTable &key_table() {
    static const KeyTable t;
    return t;
}

bool is_common_key(std::string_view k) {
    return k == "x" || k == "y" || k == "orientation" || k == "id";
}

bool kind_accepts(Kind kind, std::string_view key) {
    const auto &keys = kind_keys(kind);
    return std::find(keys.begin(), keys.end(), key) != keys.end();
}

std::string key_value_text(const GridPlacement &p, std::string_view key) {
    const auto &q = p.params;
    if (key == "angle") return format_number(q.angle);
    if (key == "phi") return format_number(q.phi);
    if (key == "steps") return std::to_string(q.steps);
    if (key == "d") return format_number(q.d);
    if (key == "r") return format_number(q.r);
    if (key == "basis") return std::string(basis_name(q.basis));
    if (key == "power") return format_number(q.power);
    if (key == "polarization") return std::string(polarization_name(q.polarization));
    if (key == "type") return std::string(ent_type_name(q.ent_type));
    if (key == "varphi") return format_number(q.varphi);
    if (key == "directions") return std::string(directions_name(q.directions));
    if (key == "dcr") return format_number(q.dcr);
    return {};
}

bool is_default_value(const GridPlacement &p, std::string_view key) {
    const ComponentParams def = default_params(p.params.kind);
    const auto &q = p.params;
    if (key == "angle") return q.angle == def.angle;
    if (key == "phi") return q.phi == def.phi;
    if (key == "steps") return q.steps == def.steps;
    if (key == "d") return q.d == def.d;
    if (key == "r") return q.r == def.r;
    if (key == "basis") return q.basis == def.basis;
    if (key == "power") return q.power == def.power;
    if (key == "polarization") return q.polarization == def.polarization;
    if (key == "type") return q.ent_type == def.ent_type;
    if (key == "varphi") return q.varphi == default_varphi(q.ent_type);
    if (key == "directions") return q.directions == def.directions;
    if (key == "dcr") return q.dcr == def.dcr;
    return true;
}

struct Field {
    std::string_view text;
    std::size_t column;  // 0-based offset into the line
};

std::vector<Field> split_fields(std::string_view line) {
    std::vector<Field> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        const auto end = comma == std::string_view::npos ? line.size() : comma;
        std::string_view raw = line.substr(start, end - start);
        const auto lead = raw.find_first_not_of(kWhitespace);
        const std::size_t col = start + (lead == std::string_view::npos ? 0 : lead);
        out.push_back({trim(raw), col});
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

std::int64_t ExperimentSpec::num_steps() const {
    return std::llround(num_seconds / constants::delta_t);
}

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string format_number(double v) {
    if (v == 0.0) return "0";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

const std::vector<std::string_view> &kind_keys(Kind kind) {
    const auto &t = key_table().keys;
    const auto it = t.find(kind);
    return it == t.end() ? kNoKeys : it->second;
}

std::optional<std::string> set_key(GridPlacement &p, std::string_view key, std::string_view value) {
    value = trim(value);
    auto &q = p.params;
    auto number = [&]() -> std::optional<double> { return parse_double(value); };
    auto bad_number = [&] { return "invalid number '" + std::string(value) + "' for " + std::string(key); };

    if (key == "x" || key == "y") {
        const auto v = parse_integer(value);
        if (!v || *v < 0) return std::string(key) + " must be a nonnegative integer";
        (key == "x" ? p.x : p.y) = static_cast<int>(*v);
        return std::nullopt;
    }
    if (key == "orientation") {
        const auto v = parse_integer(value);
        if (!v || *v % 90 != 0) return std::string("orientation must be a multiple of 90");
        p.orientation = static_cast<int>(((*v % 360) + 360) % 360);
        return std::nullopt;
    }
    if (key == "id") {
        if (!valid_id(value)) return "invalid id '" + std::string(value) + "'";
        p.id = std::string(value);
        return std::nullopt;
    }
    if (!kind_accepts(q.kind, key))
        return "unknown key '" + std::string(key) + "' for " + std::string(kind_name(q.kind));

    if (key == "angle") {
        const auto v = number();
        if (!v) return bad_number();
        if (q.kind == Kind::Rotator && (*v < 0.0 || *v > 90.0))
            return std::string("rotator angle must lie in [0, 90]");
        q.angle = *v;
    } else if (key == "phi") {
        const auto v = number();
        if (!v) return bad_number();
        q.phi = *v;
    } else if (key == "varphi") {
        const auto v = number();
        if (!v) return bad_number();
        q.varphi = *v;
    } else if (key == "steps") {
        const auto v = parse_integer(value);
        if (!v || *v < 0) return std::string("steps must be a nonnegative integer");
        q.steps = static_cast<int>(*v);
    } else if (key == "d") {
        const auto v = number();
        if (!v) return bad_number();
        if (*v < 0.0) return std::string("optical density must be nonnegative");
        q.d = *v;
    } else if (key == "r") {
        const auto v = number();
        if (!v) return bad_number();
        if (*v < 0.0) return std::string("r must be nonnegative");
        if (q.kind == Kind::BeamSplitter && *v > 1.0)
            return std::string("beam splitter r must lie in [0, 1]");
        q.r = *v;
    } else if (key == "power") {
        const auto v = number();
        if (!v) return bad_number();
        if (*v < 0.0) return std::string("power must be nonnegative");
        q.power = *v;
    } else if (key == "dcr") {
        const auto v = number();
        if (!v) return bad_number();
        if (*v < 0.0) return std::string("dcr must be nonnegative");
        if (*v * constants::delta_t > 1.0) return std::string("dark count probability exceeds 1");
        q.dcr = *v;
    } else if (key == "basis") {
        std::string b(value);
        b.erase(std::remove(b.begin(), b.end(), '/'), b.end());
        const auto v = parse_basis(b);
        if (!v) return "unknown basis '" + std::string(value) + "'";
        q.basis = *v;
    } else if (key == "polarization") {
        const auto v = parse_polarization(value);
        if (!v) return "unknown polarization '" + std::string(value) + "'";
        q.polarization = *v;
    } else if (key == "type") {
        const auto v = parse_ent_type(value);
        if (!v) return "unknown entanglement type '" + std::string(value) + "'";
        if (q.varphi == default_varphi(q.ent_type)) q.varphi = default_varphi(*v);
        q.ent_type = *v;
    } else if (key == "directions") {
        const auto v = parse_directions(value);
        if (!v) return "unknown directions '" + std::string(value) + "'";
        q.directions = *v;
    }
    return std::nullopt;
}

ParseResult parse(std::string_view text) {
    ParseResult res;
    res.spec.source_text_hash = fnv1a64(text);
    auto &diags = res.diagnostics;
    std::set<std::string> seen_ids;
    std::set<std::string> seen_settings;

    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        if (trim(line).empty()) continue;

        auto error = [&](std::string msg, std::size_t col) {
            diags.push_back({Severity::Error, std::move(msg), line_no, static_cast<int>(col) + 1});
        };

        const auto first = line.find_first_not_of(kWhitespace);
        if (trim(line).starts_with("<JS>") || trim(line).starts_with("<js>")) {
            error("embedded scripting blocks are not supported; use the CLI sweep feature "
                  "(vqol sweep --sweep name=start:stop:step)",
                  first);
            break;
        }

        auto fields = split_fields(line);
        // Settings: a single `name = value` field.
        if (fields.size() == 1 && fields[0].text.find('=') != std::string_view::npos) {
            const auto eq = fields[0].text.find('=');
            const std::string name(trim(fields[0].text.substr(0, eq)));
            const std::string_view value = trim(fields[0].text.substr(eq + 1));
            const std::size_t value_col = fields[0].column + eq + 1;
            if (name == "num_seconds") {
                const auto v = parse_double(value);
                if (!v || *v <= 0.0) {
                    error("num_seconds must be a positive number", value_col);
                    continue;
                }
                const double steps = std::round(*v / constants::delta_t);
                if (steps < 1.0 || steps > 1e12) {
                    error("num_seconds must cover between 1 and 1e12 time steps", value_col);
                    continue;
                }
                res.spec.num_seconds = *v;
                if (std::abs(steps * constants::delta_t - *v) > 1e-9 * *v) {
                    res.spec.num_seconds = steps * constants::delta_t;
                    diags.push_back({Severity::Warning,
                                     "num_seconds rounded to " + format_number(res.spec.num_seconds) +
                                         " (a whole number of 1 us steps)",
                                     line_no, static_cast<int>(value_col) + 1});
                }
            } else if (name == "offline_mode") {
                const auto v = parse_bool(value);
                if (!v) {
                    error("offline_mode must be True or False", value_col);
                    continue;
                }
                res.spec.offline_mode = *v;
            } else {
                error("unknown setting '" + name + "'", fields[0].column);
                continue;
            }
            if (!seen_settings.insert(name).second)
                diags.push_back({Severity::Warning, "setting '" + name + "' given more than once",
                                 line_no, static_cast<int>(fields[0].column) + 1});
            continue;
        }

        const auto kind = parse_kind(fields[0].text);
        if (!kind) {
            error("unknown component kind '" + std::string(fields[0].text) + "'", fields[0].column);
            continue;
        }
        GridPlacement p;
        p.params = default_params(*kind);
        std::set<std::string, std::less<>> given;
        std::string_view varphi_text;
        bool failed = false;
        for (std::size_t i = 1; i < fields.size() && !failed; ++i) {
            const Field &f = fields[i];
            if (f.text.empty()) {
                if (i + 1 == fields.size()) break;  // trailing comma
                error("empty field", f.column);
                failed = true;
                break;
            }
            const auto eq = f.text.find('=');
            if (eq == std::string_view::npos) {
                error("expected key=value, found '" + std::string(f.text) + "'", f.column);
                failed = true;
                break;
            }
            const std::string key(trim(f.text.substr(0, eq)));
            const std::string_view value = f.text.substr(eq + 1);
            if (!is_common_key(key) && !kind_accepts(*kind, key)) {
                error("unknown key '" + key + "'", f.column);
                failed = true;
                break;
            }
            if (!given.insert(key).second) {
                error("duplicate key '" + key + "'", f.column);
                failed = true;
                break;
            }
            if (key == "varphi") varphi_text = value;
            if (auto msg = set_key(p, key, value)) {
                error(*msg, f.column + eq + 1);
                failed = true;
            }
        }
        if (failed) continue;
        if (!given.count("x") || !given.count("y")) {
            error(std::string("missing required key '") + (given.count("x") ? "y" : "x") + "'",
                  fields[0].column);
            continue;
        }
        // A `type` key resets varphi to that type's default, so an explicit
        // varphi is reapplied regardless of key order.
        if (*kind == Kind::EntanglementSource) {
            if (given.count("varphi")) set_key(p, "varphi", varphi_text);
            else p.params.varphi = default_varphi(p.params.ent_type);
        }
        if (!p.id.empty() && !seen_ids.insert(p.id).second) {
            error("duplicate id '" + p.id + "'", fields[0].column);
            continue;
        }
        if (*kind == Kind::Laser && p.params.power < constants::vacuum_power) {
            diags.push_back({Severity::Warning,
                             "laser power below the vacuum power; coherent amplitude clamped to 0",
                             line_no, static_cast<int>(fields[0].column) + 1});
        }
        res.spec.placements.push_back(std::move(p));
    }
    return res;
}

std::string serialize(const ExperimentSpec &spec) {
    std::string out = "num_seconds = " + format_number(spec.num_seconds) + "\n";
    if (spec.offline_mode) out += "offline_mode = True\n";
    std::vector<const GridPlacement *> sorted;
    for (const auto &p : spec.placements) sorted.push_back(&p);
    std::stable_sort(sorted.begin(), sorted.end(), [](const GridPlacement *a, const GridPlacement *b) {
        return std::tie(a->y, a->x) < std::tie(b->y, b->x);
    });
    for (const GridPlacement *p : sorted) {
        out += kind_name(p->params.kind);
        out += ", x=" + std::to_string(p->x) + ", y=" + std::to_string(p->y);
        if (p->orientation != 0) out += ", orientation=" + std::to_string(p->orientation);
        if (!p->id.empty()) out += ", id=" + p->id;
        for (auto key : kind_keys(p->params.kind)) {
            if (is_default_value(*p, key)) continue;
            out += ", ";
            out += key;
            out += "=" + key_value_text(*p, key);
        }
        out += "\n";
    }
    return out;
}

bool structurally_equal(const ExperimentSpec &a, const ExperimentSpec &b) {
    if (a.num_seconds != b.num_seconds || a.offline_mode != b.offline_mode) return false;
    if (a.placements.size() != b.placements.size()) return false;
    auto key = [](const GridPlacement &p) { return std::tie(p.y, p.x); };
    auto sa = a.placements, sb = b.placements;
    auto less = [&](const GridPlacement &l, const GridPlacement &r) { return key(l) < key(r); };
    std::stable_sort(sa.begin(), sa.end(), less);
    std::stable_sort(sb.begin(), sb.end(), less);
    return sa == sb;
}

std::optional<std::string> apply_override(ExperimentSpec &spec, std::string_view name,
                                          std::string_view value) {
    name = trim(name);
    if (name == "num_seconds" || name == "offline_mode") {
        const std::string text = std::string(name) + " = " + std::string(value) + "\n";
        ParseResult r = parse(text);
        for (const auto &d : r.diagnostics) {
            if (d.severity == Severity::Error) return d.message;
        }
        if (name == "num_seconds") spec.num_seconds = r.spec.num_seconds;
        else spec.offline_mode = r.spec.offline_mode;
        return std::nullopt;
    }

    std::vector<std::size_t> order(spec.placements.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto &pa = spec.placements[a], &pb = spec.placements[b];
        return std::tie(pa.y, pa.x) < std::tie(pb.y, pb.x);
    });

    const auto dot = name.rfind('.');
    if (dot == std::string_view::npos) {
        std::vector<std::size_t> hits;
        for (std::size_t i : order) {
            if (kind_accepts(spec.placements[i].params.kind, name)) hits.push_back(i);
        }
        if (hits.empty()) return "no component accepts parameter '" + std::string(name) + "'";
        if (hits.size() > 1)
            return "parameter '" + std::string(name) + "' is ambiguous; qualify it as Kind.param, "
                   "Kind#n.param or id.param";
        return set_key(spec.placements[hits.front()], name, value);
    }

    const std::string_view target = name.substr(0, dot);
    const std::string_view param = name.substr(dot + 1);
    for (std::size_t i : order) {
        if (spec.placements[i].id == target) return set_key(spec.placements[i], param, value);
    }
    std::string_view kind_text = target;
    int ordinal = 0;
    if (const auto h = target.find('#'); h != std::string_view::npos) {
        kind_text = target.substr(0, h);
        const auto n = parse_integer(target.substr(h + 1));
        if (!n || *n < 1) return "invalid ordinal in '" + std::string(target) + "'";
        ordinal = static_cast<int>(*n);
    }
    const auto kind = parse_kind(kind_text);
    if (!kind) return "unknown override target '" + std::string(target) + "'";
    std::vector<std::size_t> of_kind;
    for (std::size_t i : order) {
        if (spec.placements[i].params.kind == *kind) of_kind.push_back(i);
    }
    if (of_kind.empty()) return "no " + std::string(kind_name(*kind)) + " in the experiment";
    if (ordinal == 0) {
        if (of_kind.size() > 1)
            return "target '" + std::string(target) + "' is ambiguous; use " +
                   std::string(kind_name(*kind)) + "#n or an id";
        return set_key(spec.placements[of_kind.front()], param, value);
    }
    if (static_cast<std::size_t>(ordinal) > of_kind.size())
        return "no " + std::string(kind_name(*kind)) + " #" + std::to_string(ordinal);
    return set_key(spec.placements[of_kind[static_cast<std::size_t>(ordinal - 1)]], param, value);
}

}  // namespace vqol
