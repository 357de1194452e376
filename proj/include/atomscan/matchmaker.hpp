#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "atomscan/rational.hpp"
#include "atomscan/trace_model.hpp"

namespace atomscan {

struct MatchParams {
    Rational tolerance_pct{10};
    int max_group = 2;
    std::uint64_t timeout_blocks = 6646;
    bool use_reverse_pass = true;

    // Throws std::invalid_argument when out of range.
    void validate() const;
};

// |a - b| / max(a, b, 1) <= tolerance_pct / 100, exact.
bool within_tolerance(i128 a, i128 b, const Rational& tolerance_pct);

enum class MatchKind { AtomicSwap, AtomicAddLiquidity };
std::string to_string(MatchKind k);

struct MatchResult {
    std::vector<DepositRecord> deposits;
    std::vector<WithdrawalRecord> withdrawals;
    MatchKind kind = MatchKind::AtomicSwap;
    bool intra_tx = true;
    // sum(deposit value) / sum(value_out); absent when nothing was paid out.
    std::optional<Rational> exchange_rate;
};

struct ViolationRecord {
    ViolationKind kind = ViolationKind::I_StandaloneWithdrawal;
    std::optional<AnomalyClass> anomaly;
    std::vector<DepositRecord> deposits;
    std::vector<WithdrawalRecord> withdrawals;
    // sum(deposit value) - sum(expected_value_in)
    i128 value_gap = 0;
    std::optional<std::uint64_t> block_gap;
};

struct DetectionReport {
    std::vector<MatchResult> matches;
    std::vector<ViolationRecord> violations;
};

Json to_json(const MatchResult& m);
Json to_json(const ViolationRecord& v);
Json to_json(const DetectionReport& r);

// ---------------------------------------------------------------------------
// Index-level building blocks. Indices refer to the deposit / withdrawal
// vectors handed to run_matchmaker.

// A residual unit: a single record, or the merged leftovers of one
// transaction. remainder > 0 makes it a deposit-side unit.
struct Unit {
    std::vector<std::uint32_t> deposits;
    std::vector<std::uint32_t> withdrawals;
    i128 remainder = 0;
    std::uint64_t pos = 0;  // rank of the unit's first record in the merged stream
    std::uint64_t block = 0;

    bool deposit_side() const { return remainder > 0; }
    bool is_virtual() const { return !deposits.empty() && !withdrawals.empty(); }
    i128 magnitude() const { return remainder < 0 ? -remainder : remainder; }
};

struct Residuals {
    std::vector<Unit> deposits;     // position-ordered
    std::vector<Unit> withdrawals;  // position-ordered
};

struct IndexGroup {
    std::vector<std::uint32_t> deposits;
    std::vector<std::uint32_t> withdrawals;
    bool intra_tx = true;
};

struct IndexViolation {
    ViolationKind kind = ViolationKind::I_StandaloneWithdrawal;
    std::vector<std::uint32_t> deposits;
    std::vector<std::uint32_t> withdrawals;
    i128 value_gap = 0;
    std::optional<std::uint64_t> block_gap;
};

// One transaction, in call_seq order.
struct TxEvent {
    bool deposit = true;
    Amount value = 0;  // deposit value, or the withdrawal's expected_value_in
    std::uint32_t index = 0;
};

struct InterleaveFlag {
    std::vector<std::uint32_t> deposits;
    std::uint32_t withdrawal = 0;
};

struct InterleaveResult {
    std::vector<InterleaveFlag> flags;
    std::vector<std::uint32_t> underflow;  // withdrawals that met an empty stack
};

InterleaveResult check_interleaving(const std::vector<TxEvent>& events, const MatchParams& params);

struct Round1Output {
    std::vector<IndexGroup> matches;
    std::vector<IndexViolation> interleaved;
    Residuals residuals;
};

Round1Output round1_intra_tx(const std::vector<DepositRecord>& deposits, const std::vector<WithdrawalRecord>& withdrawals,
                             const MatchParams& params);

struct Round2Output {
    std::vector<IndexGroup> matches;
    std::vector<IndexViolation> mismatches;  // kind III
    Residuals residuals;
};

Round2Output round2_cross_tx(const std::vector<DepositRecord>& deposits,
                             const std::vector<WithdrawalRecord>& withdrawals, const Residuals& residuals,
                             const MatchParams& params);

std::vector<IndexViolation> round3_classify(const std::vector<DepositRecord>& deposits,
                                            const std::vector<WithdrawalRecord>& withdrawals,
                                            const Residuals& residuals, const MatchParams& params);

// Inputs must be stream-ordered (std::invalid_argument otherwise).
// Cost is O(n * C(w, m)) where w is the number of residual withdrawals
// between consecutive residual deposits, capped at kMaxWindow.
DetectionReport run_matchmaker(const std::vector<DepositRecord>& deposits,
                               const std::vector<WithdrawalRecord>& withdrawals, const MatchParams& params);

inline constexpr std::size_t kMaxWindow = 64;

// Re-checks tolerance, temporal and account predicates of every match.
// Returns a description of the first failure, or nullopt.
std::optional<std::string> validate_report(const DetectionReport& report, const MatchParams& params);

}  // namespace atomscan
