#include "vqol/recorder.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vqol {

CoincidenceTable::CoincidenceTable(int num_detectors) : n_(num_detectors) {
    if (num_detectors < 0 || num_detectors > 20)
        throw std::invalid_argument("coincidence table supports 0 to 20 detectors");
    counts_.assign(std::size_t{1} << num_detectors, 0);
}

void CoincidenceTable::add(std::uint64_t mask, std::int64_t times) {
    if (mask >= counts_.size()) throw std::out_of_range("click mask exceeds detector count");
    counts_[static_cast<std::size_t>(mask)] += times;
}

std::int64_t CoincidenceTable::pattern(std::initializer_list<int> detectors) const {
    return count(pattern_mask(detectors));
}

std::int64_t CoincidenceTable::total() const {
    std::int64_t s = 0;
    for (auto c : counts_) s += c;
    return s;
}

std::int64_t CoincidenceTable::detector_total(int detector) const {
    std::int64_t s = 0;
    for (std::size_t m = 0; m < counts_.size(); ++m) {
        if ((m >> detector) & 1u) s += counts_[m];
    }
    return s;
}

std::uint64_t pattern_mask(std::initializer_list<int> detectors) {
    std::uint64_t m = 0;
    for (int d : detectors) m |= std::uint64_t{1} << (d - 1);
    return m;
}

std::string pattern_name(std::uint64_t mask, int num_detectors) {
    std::string s = "{";
    bool first = true;
    for (int i = 0; i < num_detectors; ++i) {
        if (!((mask >> i) & 1u)) continue;
        if (!first) s += ',';
        s += std::to_string(i + 1);
        first = false;
    }
    return s + "}";
}

std::vector<std::uint64_t> pattern_order(int num_detectors) {
    std::vector<std::uint64_t> masks(std::size_t{1} << num_detectors);
    for (std::size_t i = 0; i < masks.size(); ++i) masks[i] = i;
    std::stable_sort(masks.begin(), masks.end(), [](std::uint64_t a, std::uint64_t b) {
        return std::popcount(a) < std::popcount(b);
    });
    return masks;
}

CoincidenceTable tabulate(const RunRecords &records) {
    CoincidenceTable t(static_cast<int>(records.detectors.size()));
    for (auto m : records.clicks) t.add(m);
    return t;
}

CoincidenceTable tabulate(std::span<const StepRecord> records) {
    if (records.empty()) throw std::invalid_argument("no records to tabulate");
    CoincidenceTable t(static_cast<int>(records.front().clicks.size()));
    for (const auto &r : records) {
        std::uint64_t m = 0;
        for (std::size_t i = 0; i < r.clicks.size(); ++i) {
            if (r.clicks[i]) m |= std::uint64_t{1} << i;
        }
        t.add(m);
    }
    return t;
}

std::string column_label(const std::string &label) {
    std::string out;
    for (char c : label) {
        if (c == '(' || c == ',') out += '_';
        else if (c == ')' || c == ' ') continue;
        else out += c;
    }
    return out;
}

namespace {

// Whole units and a zero-padded fraction; exact for integer counts.
void append_fixed(std::string &out, std::int64_t value, std::int64_t scale, int digits) {
    if (value < 0) {
        out += '-';
        value = -value;
    }
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, value / scale);
    out.append(buf, r.ptr);
    out += '.';
    const std::string frac = std::to_string(value % scale);
    out.append(static_cast<std::size_t>(digits) - frac.size(), '0');
    out += frac;
}

std::vector<std::string> split(const std::string &line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

std::int64_t parse_fixed(const std::string &s, std::int64_t scale) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw std::invalid_argument("bad numeric field '" + s + "'");
    return std::llround(v * static_cast<double>(scale));
}

}  // namespace

std::string csv_text(const RunRecords &records) {
    std::string out = "step,time_s";
    for (const auto &pm : records.power_meters) out += ",pm_" + column_label(pm.label) + "_W";
    for (const auto &d : records.detectors) out += ",det_" + column_label(d.label);
    out += '\n';
    const std::size_t row = 16 + 14 * records.power_meters.size() + 2 * records.detectors.size();
    out.reserve(out.size() + row * static_cast<std::size_t>(records.num_steps));
    char buf[32];
    for (std::int64_t t = 0; t < records.num_steps; ++t) {
        auto r = std::to_chars(buf, buf + sizeof buf, t);
        out.append(buf, r.ptr);
        out += ',';
        append_fixed(out, t, 1'000'000, 6);  // step * 1 us
        for (std::size_t i = 0; i < records.power_meters.size(); ++i) {
            out += ',';
            append_fixed(out, records.power_at(t, i), 1'000'000'000, 9);
        }
        for (std::size_t i = 0; i < records.detectors.size(); ++i) {
            out += ',';
            out += records.click_at(t, i) ? '1' : '0';
        }
        out += '\n';
    }
    return out;
}

void write_csv(const RunRecords &records, const std::filesystem::path &path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    const std::string text = csv_text(records);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

RunRecords parse_csv(const std::string &text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty CSV");
    const auto header = split(line, ',');
    if (header.size() < 2 || header[0] != "step" || header[1] != "time_s")
        throw std::invalid_argument("CSV header must start with step,time_s");
    RunRecords rec;
    for (std::size_t i = 2; i < header.size(); ++i) {
        const std::string &h = header[i];
        if (h.starts_with("pm_") && h.ends_with("_W")) {
            if (!rec.detectors.empty()) throw std::invalid_argument("power columns must precede detectors");
            rec.power_meters.push_back({-1, h.substr(3, h.size() - 5)});
        } else if (h.starts_with("det_")) {
            rec.detectors.push_back({-1, h.substr(4)});
        } else {
            throw std::invalid_argument("unknown CSV column '" + h + "'");
        }
    }
    const std::size_t npm = rec.power_meters.size();
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != header.size())
            throw std::invalid_argument("line " + std::to_string(lineno) + ": wrong field count");
        if (std::stoll(f[0]) != rec.num_steps)
            throw std::invalid_argument("line " + std::to_string(lineno) + ": steps out of sequence");
        for (std::size_t i = 0; i < npm; ++i) rec.power_nw.push_back(parse_fixed(f[2 + i], 1'000'000'000));
        std::uint64_t m = 0;
        for (std::size_t i = 0; i < rec.detectors.size(); ++i) {
            const std::string &c = f[2 + npm + i];
            if (c == "1") m |= std::uint64_t{1} << i;
            else if (c != "0")
                throw std::invalid_argument("line " + std::to_string(lineno) + ": click must be 0 or 1");
        }
        rec.clicks.push_back(m);
        ++rec.num_steps;
    }
    return rec;
}

RunRecords read_csv(const std::filesystem::path &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    try {
        return parse_csv(ss.str());
    } catch (const std::exception &e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

std::string csv_file_name(const std::string &stem, std::uint64_t seed) {
    return stem + "_" + std::to_string(seed) + ".csv";
}

std::string summary_text(const RunRecords &records, const CoincidenceTable &table,
                         const RunMetadata &meta) {
    std::ostringstream s;
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(meta.spec_hash));
    s << "name = " << meta.name << '\n'
      << "seed = " << meta.seed << '\n'
      << "spec_hash = " << hash << '\n'
      << "mode = " << meta.mode << '\n'
      << "num_steps = " << records.num_steps << '\n';
    for (std::size_t i = 0; i < records.power_meters.size(); ++i) {
        double sum = 0.0;
        for (std::int64_t t = 0; t < records.num_steps; ++t) sum += static_cast<double>(records.power_at(t, i));
        const double mean = records.num_steps > 0 ? sum / static_cast<double>(records.num_steps) * 1e-9 : 0.0;
        s << "pm_" << column_label(records.power_meters[i].label) << "_mean_W = " << mean << '\n';
    }
    for (std::size_t i = 0; i < records.detectors.size(); ++i)
        s << "det_" << column_label(records.detectors[i].label) << "_total = "
          << table.detector_total(static_cast<int>(i)) << '\n';
    s << "[coincidences]\n";
    for (auto m : pattern_order(table.num_detectors()))
        s << pattern_name(m, table.num_detectors()) << " = " << table.count(m) << '\n';
    return s.str();
}

void write_summary(const RunRecords &records, const CoincidenceTable &table, const RunMetadata &meta,
                   const std::filesystem::path &path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << summary_text(records, table, meta);
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace vqol
