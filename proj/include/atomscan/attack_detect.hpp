#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "atomscan/ingest.hpp"
#include "atomscan/matchmaker.hpp"

namespace atomscan {

// Thresholds. An absent value disables that indicator.
struct DetectionParams {
    std::optional<Rational> x1 = Rational(2);
    std::optional<Rational> x2 = Rational(617);
    std::optional<Rational> x3 = Rational(1928, 100);
    std::optional<Rational> x4 = Rational(975, 1000);
    std::optional<Rational> x6 = Rational(692, 1000);
    // Gap standard deviation (blocks) above which an account with no fired
    // indicator is reported as a scavenger. No reference value exists.
    Rational scavenger_spread{200};

    // {"x1":2,"x2":617,"x3":"19.28",...}; null disables an indicator.
    static DetectionParams from_json(const Json& j);
    static DetectionParams load(const std::string& path);
    Json to_json() const;
};

// Per-pool view of the call stream used by the indicators.
class TraceIndex {
public:
    TraceIndex(const std::vector<CallRecord>& stream, const PoolRegistry& registry);

    struct PoolEvent {
        StreamKey key;
        std::uint64_t block = 0;
        std::size_t record = 0;  // index into the stream
        AccountId sender;        // transaction origin
        bool success = true;
        std::optional<DepositPattern> marker;  // rebase, airdrop, reflect, accrueInterest
        bool sync = false;        // successful call that resets reserves to balances
        bool deposit = false;     // transfer into the pool
        bool withdrawal = false;  // swap, mint or burn, successful or not
        bool probe = false;       // getReserves
        bool standalone = false;  // withdrawal with no deposit to the pool in its tx
    };

    const std::vector<CallRecord>& stream() const { return stream_; }
    const std::vector<PoolEvent>& events(const AccountId& pool) const;
    // Records of one transaction in stream order.
    const std::vector<std::size_t>& tx_records(const std::string& txid) const;
    const AccountId& origin(const std::string& txid) const;
    const PoolInfo* pool(const AccountId& p) const { return registry_.find(p); }

    bool tx_has_deposit(const std::string& txid, const AccountId& pool) const;
    bool tx_has_failed_pool_call(const std::string& txid, const AccountId& pool) const;
    bool tx_has_probe(const std::string& txid, const AccountId& pool) const;
    // Probe in the same transaction or in an earlier one of the same origin
    // within the same block.
    bool probed_before(const StreamKey& key, const std::string& txid, const AccountId& pool) const;

private:
    const std::vector<CallRecord>& stream_;
    const PoolRegistry& registry_;
    std::map<AccountId, std::vector<PoolEvent>> events_;
    std::map<std::string, std::vector<std::size_t>> tx_;
    std::map<std::string, AccountId> origin_;
};

// A standalone withdrawal (kind I) or a withdrawal that claimed another
// account's deposit (kind III).
struct RiskyWithdrawal {
    AccountId account;
    AccountId pool;
    ViolationKind kind = ViolationKind::I_StandaloneWithdrawal;
    DepositPattern pattern = DepositPattern::Unknown;
    std::string withdrawal_txid;
    StreamKey withdrawal_key;
    std::uint64_t withdrawal_block = 0;
    std::optional<StreamKey> source_key;  // creating deposit or balance marker
    std::uint64_t source_block = 0;
    std::optional<std::uint64_t> block_gap;
    bool probed = false;
    bool deposit_in_tx = false;
    std::size_t competitors = 0;  // distinct other accounts, see detect_frontrunning
};

std::vector<RiskyWithdrawal> collect_risky(const std::map<AccountId, DetectionReport>& reports,
                                           const TraceIndex& index);

struct Attempt {
    std::string txid;
    std::uint64_t block = 0;
    CallSeq call_seq;
    std::string func;
    bool success = true;
};

// Swap and getReserves calls on the pool between the creating deposit and
// the next one, grouped by transaction origin.
std::map<AccountId, std::vector<Attempt>> expand_attempts(const RiskyWithdrawal& r, const TraceIndex& index);

// Other accounts issuing failed or standalone withdrawals, or probes, on the
// pool in blocks [source_block, withdrawal_block + 10].
std::size_t count_competitors(const RiskyWithdrawal& r, const TraceIndex& index);
inline bool detect_frontrunning(const RiskyWithdrawal& r, const TraceIndex& index) {
    return count_competitors(r, index) > 0;
}

struct IndicatorVector {
    AccountId account;
    std::optional<Rational> i1;  // mean gap, non-P2
    std::optional<Rational> i2;  // mean gap, P2
    std::optional<Rational> i3;  // i2 / i1
    bool i3_infinite = false;    // i2 present, i1 absent or zero
    Rational i4;                 // probed fraction
    bool i5 = false;             // no deposit in any withdrawal tx
    Rational i6;                 // (P1 + P2) / all
    bool i7 = false;
    std::size_t swap_count = 0;
    Rational gap_variance;  // population variance over all gaps

    double gap_stddev() const;
};

// Rationals are written as strings ("3/100"); absent values as null.
Json to_json(const IndicatorVector& v);
IndicatorVector indicator_from_json(const Json& j);

struct IndicatorOptions {
    bool use_median = false;
};

// nullopt when the account has no risky withdrawal.
std::optional<IndicatorVector> compute_indicators(const AccountId& account,
                                                  const std::vector<RiskyWithdrawal>& risky,
                                                  const IndicatorOptions& opts = {});
// One vector per account, ordered by account.
std::vector<IndicatorVector> compute_all(const std::vector<RiskyWithdrawal>& risky, const IndicatorOptions& opts = {});

enum class AccountLabelKind { Attacker_A1, Attacker_A2, Attacker_Generic, ScavengerA3, Benign };
std::string to_string(AccountLabelKind k);

struct AccountLabel {
    AccountLabelKind kind = AccountLabelKind::Benign;
    std::set<std::string> fired;  // "I1" .. "I6"

    bool attacker() const {
        return kind == AccountLabelKind::Attacker_A1 || kind == AccountLabelKind::Attacker_A2 ||
               kind == AccountLabelKind::Attacker_Generic;
    }
};

AccountLabel classify_account(const IndicatorVector& v, const DetectionParams& params);

class NoPositives : public std::runtime_error {
public:
    NoPositives() : std::runtime_error("NoPositives") {}
};
class UncoverablePositive : public std::runtime_error {
public:
    explicit UncoverablePositive(const std::string& account)
        : std::runtime_error("UncoverablePositive(" + account + ")") {}
};

// Three-stage cover of the positives:
//   A: rows with i1 and i2 where i2 > i1 set x2 = floor(min i2) and
//      x3 = min i3 floored to 0.01;
//   B: remaining rows with i6 > 0 set x6 = min i6 floored to 0.001;
//   C: the rest set x1 = ceil(max i1) and x4 = min positive i4 floored
//      to 0.001.
// Thresholds with no contributing row are absent.
DetectionParams calibrate(const std::vector<std::pair<IndicatorVector, bool>>& labeled);

// account,swap_count,i1,i2,i3,i4,i5,i6,i7,gap_stddev,label,fired
std::string indicators_csv(const std::vector<IndicatorVector>& vectors, const DetectionParams& params);

}  // namespace atomscan
