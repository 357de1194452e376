#pragma once

#include <set>
#include <string>
#include <vector>

#include "atomscan/ingest.hpp"
#include "atomscan/matchmaker.hpp"
#include "atomscan/violations.hpp"

namespace atomscan {

// Functions whose callers are treated as pool operators, not victims.
const std::vector<std::string>& privileged_functions();

struct LostOptions {
    // Accept retries within tolerance_pct instead of requiring equal value.
    bool tolerant = false;
    Rational tolerance_pct{10};
    // Keep findings of privileged senders, flagged, instead of dropping them.
    bool include_excluded = false;
};

struct LostTokenFinding {
    DepositRecord deposit;
    std::optional<DepositRecord> retry;
    std::int64_t block_diff = 0;  // retry block - deposit block
    bool value_equal = true;
    std::optional<Rational> value_usd;
    bool privileged_excluded = false;
    Protocol protocol = Protocol::UniswapV2Like;
};

// `violations` is the pool's report; only kind II deposits are considered.
// `pool_deposits` are all deposit candidates of the same pool, stream-ordered.
std::vector<LostTokenFinding> detect_lost(const std::vector<ViolationRecord>& violations,
                                          const std::vector<DepositRecord>& pool_deposits,
                                          const std::vector<CallRecord>& stream,
                                          const std::set<AccountId>& privileged_accounts,
                                          const PoolRegistry& registry, const RateTable* rates,
                                          const LostOptions& opts = {});

struct LostAggregate {
    std::size_t count = 0;
    Rational total_usd;
    std::size_t unvalued = 0;
    std::optional<Rational> mean_block_diff;
};

LostAggregate aggregate_lost(const std::vector<LostTokenFinding>& findings);

// deposit_tx,retry_tx,value_equal,value_usd,block_diff,protocol,token
std::string findings_csv(const std::vector<LostTokenFinding>& findings);

}  // namespace atomscan
