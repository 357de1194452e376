#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "atomscan/matchmaker.hpp"

namespace atomscan {

struct RateEntry {
    AccountId token;
    std::uint64_t block = 0;
    Rational usd_rate;  // USD per smallest token unit
};

class NoRate : public std::runtime_error {
public:
    explicit NoRate(const AccountId& token) : std::runtime_error("NoRate(" + token.str() + ")") {}
};

class RateTable {
public:
    RateTable() = default;
    explicit RateTable(std::vector<RateEntry> entries);

    // CSV with header token,block,rate_num,rate_den
    static RateTable load_csv(const std::string& path);
    static RateTable parse_csv(std::istream& in);

    const std::vector<RateEntry>& entries() const { return entries_; }
    // Entry with minimal |block - entry.block|; ties go to the earlier entry.
    const RateEntry& nearest(const AccountId& token, std::uint64_t block) const;

private:
    std::vector<RateEntry> entries_;  // sorted by (token, block)
};

Rational estimate_value(const AccountId& token, Amount amount, std::uint64_t block, const RateTable& rates);

// Token and amount a violation is valued in: the deposit token where a
// deposit exists, else the withdrawal's input token. Amount is the
// withdrawn input for I, the deposit for II and III, |value_gap| otherwise.
AccountId value_token(const ViolationRecord& v);
Amount violation_amount(const ViolationRecord& v);
// Withdrawal block when present, else the deposit block.
std::uint64_t valuation_block(const ViolationRecord& v);

struct SummaryRow {
    std::string kind;     // "I".."V", "Interleaved", "Atomic"
    std::string anomaly;  // letter or empty
    std::size_t count = 0;
    Rational total_value_usd;
    std::size_t unvalued = 0;  // rows whose token had no rate
    std::size_t distinct_tx = 0;
};

struct SummaryTable {
    std::vector<SummaryRow> rows;  // fixed order I, II, III, IV, V, Interleaved, Atomic
    std::size_t total_count() const;
};

// rates may be null, in which case every row is unvalued.
SummaryTable aggregate(const DetectionReport& report, const RateTable* rates);

std::string to_csv(const SummaryTable& t);
Json to_json(const SummaryTable& t);

}  // namespace atomscan
