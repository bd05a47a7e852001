#include <gtest/gtest.h>

#include <filesystem>

#include "test_util.hpp"
#include "vqol/recorder.hpp"

using namespace vqol;

namespace {

RunRecords sample_records() {
    RunRecords r;
    r.num_steps = 3;
    r.power_meters = {{2, "PowerMeter(5,1)"}};
    r.detectors = {{3, "D1"}, {4, "D2"}};
    r.power_nw = {4'000'000, 17, 0};
    r.clicks = {1, 1, 0};
    return r;
}

}  // namespace

TEST(Recorder, TablePatternCounts) {
    const auto t = tabulate(sample_records());
    EXPECT_EQ(t.pattern({1}), 2);
    EXPECT_EQ(t.pattern({}), 1);
    EXPECT_EQ(t.pattern({1, 2}), 0);
    EXPECT_EQ(t.total(), 3);
    EXPECT_EQ(t.detector_total(0), 2);
    EXPECT_EQ(t.detector_total(1), 0);
}

TEST(Recorder, EveryStepLandsInExactlyOnePattern) {
    CoincidenceTable t(3);
    for (std::uint64_t m = 0; m < 8; ++m) t.add(m, static_cast<std::int64_t>(m + 1));
    EXPECT_EQ(t.total(), 36);
    EXPECT_EQ(t.pattern({1, 3}), 6);
    EXPECT_EQ(t.detector_total(2), 5 + 6 + 7 + 8);
    EXPECT_THROW(CoincidenceTable(21), std::invalid_argument);
}

TEST(Recorder, TabulateStepRecords) {
    std::vector<StepRecord> recs{{0, {}, {1, 0}}, {1, {}, {1, 1}}, {2, {}, {0, 0}}};
    const auto t = tabulate(recs);
    EXPECT_EQ(t.pattern({1}), 1);
    EXPECT_EQ(t.pattern({1, 2}), 1);
    EXPECT_EQ(t.pattern({}), 1);
    EXPECT_THROW(tabulate(std::span<const StepRecord>{}), std::invalid_argument);
}

TEST(Recorder, PatternNamesAndOrder) {
    EXPECT_EQ(pattern_mask({1, 3}), 0b101u);
    EXPECT_EQ(pattern_name(0b101, 3), "{1,3}");
    EXPECT_EQ(pattern_name(0, 3), "{}");
    const auto order = pattern_order(3);
    ASSERT_EQ(order.size(), 8u);
    EXPECT_EQ(order[0], 0u);
    EXPECT_EQ(order[1], 1u);
    EXPECT_EQ(order[3], 4u);
    EXPECT_EQ(order[4], 3u);
    EXPECT_EQ(order[7], 7u);
}

TEST(Recorder, CsvRoundTripIsLossless) {
    const auto r = sample_records();
    const std::string text = csv_text(r);
    EXPECT_EQ(text.substr(0, text.find('\n')), "step,time_s,pm_PowerMeter_5_1_W,det_D1,det_D2");
    EXPECT_NE(text.find("0,0.000000,0.004000000,1,0"), std::string::npos);
    EXPECT_NE(text.find("1,0.000001,0.000000017,1,0"), std::string::npos);
    const auto back = parse_csv(text);
    EXPECT_EQ(back.num_steps, r.num_steps);
    EXPECT_EQ(back.power_nw, r.power_nw);
    EXPECT_EQ(back.clicks, r.clicks);
    EXPECT_EQ(back.detectors[1].label, "D2");
    EXPECT_EQ(csv_text(back), text);
}

TEST(Recorder, CsvRoundTripOfARealRun) {
    const auto e = test::fixture("anticorrelation");
    ASSERT_TRUE(e.ok());
    auto spec = e.spec;
    spec.num_seconds = 0.02;
    const auto r = run_experiment(build_experiment(spec), 5);
    const auto back = parse_csv(csv_text(r));
    EXPECT_EQ(back.clicks, r.clicks);
    EXPECT_EQ(back.power_nw, r.power_nw);
}

TEST(Recorder, CsvFileIo) {
    const auto dir = std::filesystem::temp_directory_path() / "vqol_recorder_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / csv_file_name("malus", 7);
    EXPECT_EQ(path.filename(), "malus_7.csv");
    write_csv(sample_records(), path);
    EXPECT_EQ(read_csv(path).clicks, sample_records().clicks);
    EXPECT_THROW(read_csv(dir / "missing.csv"), std::runtime_error);
    std::filesystem::remove_all(dir);
}

TEST(Recorder, MalformedCsvIsRejected) {
    EXPECT_ANY_THROW(parse_csv(""));
    EXPECT_ANY_THROW(parse_csv("step,time_s,det_D1\n0,0.000000,2\n"));
    EXPECT_ANY_THROW(parse_csv("step,time_s,det_D1\n0,0.000000\n"));
}

TEST(Recorder, SummaryListsEveryPattern) {
    const auto r = sample_records();
    const auto s = summary_text(r, tabulate(r), {"demo", 3, 0xabcdef, "grid"});
    EXPECT_NE(s.find("name = demo"), std::string::npos);
    EXPECT_NE(s.find("seed = 3"), std::string::npos);
    EXPECT_NE(s.find("spec_hash = 0000000000abcdef"), std::string::npos);
    EXPECT_NE(s.find("det_D1_total = 2"), std::string::npos);
    EXPECT_NE(s.find("[coincidences]"), std::string::npos);
    EXPECT_NE(s.find("{1,2} = 0"), std::string::npos);
}

TEST(Recorder, ColumnLabels) {
    EXPECT_EQ(column_label("PowerMeter(5,1)"), "PowerMeter_5_1");
    EXPECT_EQ(column_label("D1"), "D1");
}
