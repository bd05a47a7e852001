#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vqol/engine.hpp"

namespace vqol {

/// Counts of the 2^n exclusive click patterns of n detectors. Pattern index
/// is the click mask, bit i for detector i (detector i+1 in 1-based names).
class CoincidenceTable {
public:
    explicit CoincidenceTable(int num_detectors = 0);

    int num_detectors() const { return n_; }
    void add(std::uint64_t mask, std::int64_t times = 1);
    std::int64_t count(std::uint64_t mask) const { return counts_[static_cast<std::size_t>(mask)]; }
    /// Count of the exact pattern given by 1-based detector numbers.
    std::int64_t pattern(std::initializer_list<int> detectors) const;
    std::int64_t total() const;
    /// Clicks of one detector (0-based) summed over all patterns.
    std::int64_t detector_total(int detector) const;
    const std::vector<std::int64_t> &counts() const { return counts_; }

    friend bool operator==(const CoincidenceTable &, const CoincidenceTable &) = default;

private:
    int n_;
    std::vector<std::int64_t> counts_;
};

/// Mask from 1-based detector numbers.
std::uint64_t pattern_mask(std::initializer_list<int> detectors);
/// "{}", "{1}", "{1,3}" ...
std::string pattern_name(std::uint64_t mask, int num_detectors);
/// Masks ordered by number of clicks, then numerically.
std::vector<std::uint64_t> pattern_order(int num_detectors);

CoincidenceTable tabulate(const RunRecords &records);
CoincidenceTable tabulate(std::span<const StepRecord> records);

/// Sink label usable as a CSV column fragment ("PowerMeter(5,1)" becomes
/// "PowerMeter_5_1").
std::string column_label(const std::string &label);

std::string csv_text(const RunRecords &records);
void write_csv(const RunRecords &records, const std::filesystem::path &path);
/// Parses CSV written by write_csv. Sink node ids are not stored and come
/// back as -1.
RunRecords parse_csv(const std::string &text);
RunRecords read_csv(const std::filesystem::path &path);

/// `<stem>_<seed>.csv`
std::string csv_file_name(const std::string &stem, std::uint64_t seed);

struct RunMetadata {
    std::string name;
    std::uint64_t seed = 0;
    std::uint64_t spec_hash = 0;
    std::string mode = "grid";
};

std::string summary_text(const RunRecords &records, const CoincidenceTable &table,
                         const RunMetadata &meta);
void write_summary(const RunRecords &records, const CoincidenceTable &table, const RunMetadata &meta,
                   const std::filesystem::path &path);

}  // namespace vqol
