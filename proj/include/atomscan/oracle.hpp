#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "atomscan/matchmaker.hpp"

namespace atomscan {

inline constexpr std::size_t kOracleMaxSide = 12;

class WindowTooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OracleGroup {
    std::vector<DepositRecord> deposits;
    std::vector<WithdrawalRecord> withdrawals;
    bool intra_tx = true;
    bool account_mismatch = false;  // counted as one violation
};

struct OracleResult {
    std::vector<OracleGroup> best_matching;
    std::size_t min_violation_count = 0;
    std::uint64_t explored = 0;
};

// Exhaustive search over families of disjoint groups. Group shapes: same
// transaction with at most m records per side, or cross-transaction with at
// most m per side where every record has a partner on the other side that
// it precedes (or shares a transaction with). Residue is counted the way
// the greedy matcher reports it: one violation per transaction holding
// unmatched records on both sides (none if they cancel exactly), one per
// same-account deposit/withdrawal pair, one per remaining record.
OracleResult exhaustive_match(const std::vector<DepositRecord>& deposits,
                              const std::vector<WithdrawalRecord>& withdrawals, const MatchParams& params);

struct Diff {
    long violation_delta = 0;
    std::vector<std::string> mismatched_groups;
    bool empty() const { return violation_delta == 0 && mismatched_groups.empty(); }
};

Diff compare_with_oracle(const DetectionReport& greedy, const OracleResult& oracle);

// Splits stream-ordered candidates into windows of at most max_side records
// per side, cutting only at transaction boundaries.
struct Window {
    std::vector<DepositRecord> deposits;
    std::vector<WithdrawalRecord> withdrawals;
};
std::vector<Window> split_windows(const std::vector<DepositRecord>& deposits,
                                  const std::vector<WithdrawalRecord>& withdrawals,
                                  std::size_t max_side = kOracleMaxSide);

}  // namespace atomscan
