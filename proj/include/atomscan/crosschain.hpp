#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "atomscan/trace_model.hpp"

namespace atomscan {

struct XTransferRecord {
    AccountId sender;
    Amount amount = 0;
    AccountId target;  // pay-to account on the destination chain
    std::string txid;
    ChainId chain;
    std::uint64_t block = 0;
    std::int64_t timestamp = 0;  // seconds
};

struct ReportRecord {
    AccountId reporter;
    std::string reported_txid;  // the _txId argument
    AccountId target;
    Amount amount = 0;
    std::string txid;
    ChainId chain;
    std::int64_t timestamp = 0;
};

// Successful xTransfer(amount, to, timestamp) calls. Throws DecodeError on a
// record missing one of those arguments or with a zero amount.
std::vector<XTransferRecord> extract_xtransfers(const std::vector<CallRecord>& stream);
// Successful reportTx(_txId, to, amount, timestamp) calls.
std::vector<ReportRecord> extract_reports(const std::vector<CallRecord>& stream);

struct CrossChainGroup {
    XTransferRecord src;
    std::vector<ReportRecord> reports;  // agreeing reports, in input order
    std::size_t distinct_reporters = 0;
    bool minted = false;
    std::vector<std::int64_t> delays;  // per report, seconds
};

struct CrossChainOptions {
    std::size_t quorum = 3;
    // 0 requires equal amounts.
    Rational amount_tolerance_pct{0};
};

struct CrossChainResult {
    std::vector<CrossChainGroup> matched;     // minted
    std::vector<CrossChainGroup> underwater;  // fewer than quorum distinct reporters
    // Reports with an unknown _txId, or whose amount or target disagrees
    // with the referenced xTransfer.
    std::vector<ReportRecord> orphans;
};

CrossChainResult join_crosschain(const std::vector<XTransferRecord>& src, const std::vector<ReportRecord>& dst,
                                 const CrossChainOptions& opts = {});

struct DelayBucket {
    std::string label;  // "[lo,hi)" in minutes, "[lo,inf)" for the last
    std::int64_t lo_min = 0;
    std::optional<std::int64_t> hi_min;
    std::size_t count = 0;
    Rational fraction;
};

struct DelayHistogram {
    std::vector<DelayBucket> buckets;
    std::size_t total = 0;  // bucketed reports
    std::vector<std::string> negative;  // report txids with report before xTransfer
    std::optional<std::int64_t> max_delay;  // seconds

    // Fraction of bucketed reports with delay < minutes * 60.
    Rational fraction_under(std::int64_t minutes) const;
};

inline const std::vector<std::int64_t>& default_delay_edges() {
    static const std::vector<std::int64_t> e{0, 2, 3, 4, 5, 6, 10, 60, 600, 1200};
    return e;
}

// Covers reports of minted and underwater groups.
DelayHistogram delay_stats(const CrossChainResult& result,
                           const std::vector<std::int64_t>& edges_minutes = default_delay_edges());

// bucket,count,fraction
std::string histogram_csv(const DelayHistogram& h);
Json to_json(const CrossChainResult& r);

// Synthetic BancorX-style traffic with delays drawn by quota from weighted
// buckets over default_delay_edges().
struct BancorSynthConfig {
    std::uint64_t seed = 1;
    std::size_t swaps = 1000;
    std::size_t underwater = 3;  // swaps reported by only two reporters
    std::size_t reporters = 3;
    // Weights per bucket of default_delay_edges(), last one open-ended.
    std::vector<std::uint64_t> bucket_weights{106, 1934, 3513, 2484, 1159, 610, 71, 78, 45, 0};
};

struct BancorSynth {
    std::vector<CallRecord> source;       // chain "eth", stream-ordered
    std::vector<CallRecord> destination;  // chain "eos", stream-ordered
    Rational configured_under_10;         // fraction of reports placed under 10 minutes
};

BancorSynth synth_bancorx(const BancorSynthConfig& cfg);

}  // namespace atomscan
