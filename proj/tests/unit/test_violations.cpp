#include <gtest/gtest.h>

#include <sstream>

#include "atomscan/ingest.hpp"
#include "atomscan/violations.hpp"
#include "test_support.hpp"

using namespace atomscan;
using testutil::addr;
using testutil::dep;
using testutil::txid;
using testutil::wd;

namespace {

RateTable fixture_rates() {
    std::stringstream in;
    in << "token,block,rate_num,rate_den\n"
       << testutil::kT0.str() << ",1,1,100\n"
       << testutil::kT0.str() << ",10,1,50\n"
       << testutil::kT1.str() << ",5,3,1\n";
    return RateTable::parse_csv(in);
}

DetectionReport join_report() {
    auto recs = parse_trace_file(testutil::fixture("join_problem/trace.jsonl"));
    auto reg = PoolRegistry::load(testutil::fixture("join_problem/registry.json"));
    auto c = extract_candidates(recs, reg, testutil::kPool);
    return run_matchmaker(c.deposits, c.withdrawals, MatchParams{});
}

}  // namespace

TEST(RateTable, NearestEntryWithEarlierTieBreak) {
    RateTable t = fixture_rates();
    EXPECT_EQ(t.nearest(testutil::kT0, 0).block, 1u);
    EXPECT_EQ(t.nearest(testutil::kT0, 5).block, 1u);
    EXPECT_EQ(t.nearest(testutil::kT0, 6).block, 10u);
    // 1 and 10 are not equidistant from 5.5; check an exact tie instead.
    RateTable tie({{testutil::kT0, 2, Rational(1)}, {testutil::kT0, 4, Rational(2)}});
    EXPECT_EQ(tie.nearest(testutil::kT0, 3).block, 2u);
    EXPECT_EQ(t.nearest(testutil::kT0, 1000).block, 10u);
    EXPECT_THROW(t.nearest(addr(0xdead), 1), NoRate);
}

TEST(RateTable, RejectsMalformedCsv) {
    std::stringstream a("token,block,rate_num,rate_den\n0xa0,1,1\n");
    EXPECT_THROW(RateTable::parse_csv(a), std::invalid_argument);
    std::stringstream b("0xa0,1,1,0\n");
    EXPECT_THROW(RateTable::parse_csv(b), std::invalid_argument);
    EXPECT_THROW(RateTable::load_csv("/nonexistent/rates.csv"), std::invalid_argument);
}

TEST(Valuation, ExactRationalProduct) {
    RateTable t = fixture_rates();
    EXPECT_EQ(estimate_value(testutil::kT0, 500, 1, t), Rational(5));
    EXPECT_EQ(estimate_value(testutil::kT0, 500, 12, t), Rational(10));
    EXPECT_EQ(estimate_value(testutil::kT1, 7, 100, t), Rational(21));
}

TEST(Valuation, MonotoneInAmountAndInvariantUnderTranslation) {
    RateTable t = fixture_rates();
    for (Amount a = 0; a < 2000; a += 37) EXPECT_LE(estimate_value(testutil::kT0, a, 3, t), estimate_value(testutil::kT0, a + 1, 3, t));
    const std::uint64_t shift = 1'000'000;
    RateTable shifted({{testutil::kT0, 1 + shift, Rational(1, 100)},
                       {testutil::kT0, 10 + shift, Rational(1, 50)},
                       {testutil::kT1, 5 + shift, Rational(3)}});
    for (std::uint64_t b = 0; b < 30; ++b)
        EXPECT_EQ(estimate_value(testutil::kT0, 999, b, t), estimate_value(testutil::kT0, 999, b + shift, shifted));
}

TEST(Valuation, AmountsPerKind) {
    auto r = join_report();
    ASSERT_EQ(r.violations.size(), 3u);
    EXPECT_EQ(violation_amount(r.violations[0]), 500u);  // II: deposit
    EXPECT_EQ(violation_amount(r.violations[1]), 300u);  // I: withdrawn input
    EXPECT_EQ(violation_amount(r.violations[2]), 50u);   // IV: |gap|
    EXPECT_EQ(value_token(r.violations[1]), testutil::kT0);
    EXPECT_EQ(valuation_block(r.violations[0]), 1u);
    EXPECT_EQ(valuation_block(r.violations[2]), 7u);
}

TEST(Aggregate, RowsFollowFixedOrderAndPartition) {
    auto r = join_report();
    RateTable rates = fixture_rates();
    SummaryTable t = aggregate(r, &rates);
    ASSERT_EQ(t.rows.size(), 7u);
    const char* order[] = {"I", "II", "III", "IV", "V", "Interleaved", "Atomic"};
    for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(t.rows[i].kind, order[i]);
    EXPECT_EQ(t.total_count(), r.violations.size() + r.matches.size());
    EXPECT_EQ(t.rows[0].count, 1u);
    EXPECT_EQ(t.rows[0].anomaly, "F");
    EXPECT_EQ(t.rows[1].total_value_usd, Rational(5));       // 500 at 1/100
    EXPECT_EQ(t.rows[0].total_value_usd, Rational(3));       // 300 at 1/100
    EXPECT_EQ(t.rows[3].total_value_usd, Rational(1));       // 50 at 1/50, block 7 is nearer 10
    EXPECT_EQ(t.rows[6].count, 2u);
    EXPECT_EQ(t.rows[6].distinct_tx, 4u);
    EXPECT_EQ(t.rows[2].anomaly, "");

    SummaryTable none = aggregate(r, nullptr);
    EXPECT_EQ(none.rows[0].unvalued, 1u);
    EXPECT_EQ(none.rows[0].total_value_usd, Rational(0));
}

TEST(Aggregate, CsvAndJsonForms) {
    auto t = aggregate(join_report(), nullptr);
    std::string csv = to_csv(t);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "kind,anomaly,count,total_value_usd,unvalued,distinct_tx");
    EXPECT_NE(csv.find("I,F,1,0.000000,1,1\n"), std::string::npos);
    Json j = to_json(t);
    EXPECT_EQ(j["rows"].size(), 7u);
    EXPECT_TRUE(j["rows"][2]["anomaly"].is_null());
}

TEST(Aggregate, CountsMatchPartitionOnRandomStreams) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto s = testutil::random_stream(seed, 500);
        auto r = run_matchmaker(s.deposits, s.withdrawals, MatchParams{});
        auto t = aggregate(r, nullptr);
        EXPECT_EQ(t.total_count(), r.violations.size() + r.matches.size());
    }
}
