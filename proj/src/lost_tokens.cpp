#include "atomscan/lost_tokens.hpp"

#include <sstream>

namespace atomscan {

const std::vector<std::string>& privileged_functions() {
    static const std::vector<std::string> names{"setSwapFee",   "setFeeTo",       "setFeeToSetter", "setController",
                                                "setPublicSwap", "finalize",      "setOwner"};
    return names;
}

namespace {

std::set<AccountId> observed_privileged(const std::vector<CallRecord>& stream) {
    std::set<std::string> names(privileged_functions().begin(), privileged_functions().end());
    std::set<AccountId> out;
    for (const auto& r : stream)
        if (r.success && names.count(r.callee_func)) out.insert(r.caller);
    return out;
}

}  // namespace

std::vector<LostTokenFinding> detect_lost(const std::vector<ViolationRecord>& violations,
                                          const std::vector<DepositRecord>& pool_deposits,
                                          const std::vector<CallRecord>& stream,
                                          const std::set<AccountId>& privileged_accounts,
                                          const PoolRegistry& registry, const RateTable* rates,
                                          const LostOptions& opts) {
    std::set<AccountId> privileged = observed_privileged(stream);
    privileged.insert(privileged_accounts.begin(), privileged_accounts.end());

    std::vector<LostTokenFinding> out;
    for (const auto& v : violations) {
        if (v.kind != ViolationKind::II_StandaloneDeposit) continue;
        for (const auto& d : v.deposits) {
            const DepositRecord* retry = nullptr;
            for (const auto& c : pool_deposits) {
                if (!(c.key() > d.key()) || c.txid == d.txid) continue;
                if (c.depositor != d.depositor || c.token != d.token || c.pool != d.pool) continue;
                if (c.origin_func == d.origin_func) continue;
                bool same = c.value == d.value;
                if (!same && !(opts.tolerant && within_tolerance(c.value, d.value, opts.tolerance_pct))) continue;
                retry = &c;
                break;
            }
            if (!retry) continue;
            LostTokenFinding f;
            f.deposit = d;
            f.retry = *retry;
            f.block_diff = static_cast<std::int64_t>(retry->block) - static_cast<std::int64_t>(d.block);
            f.value_equal = retry->value == d.value;
            f.privileged_excluded = privileged.count(d.depositor) > 0;
            if (const PoolInfo* p = registry.find(d.pool)) f.protocol = p->protocol;
            if (rates) {
                try {
                    f.value_usd = estimate_value(d.token, d.value, d.block, *rates);
                } catch (const NoRate&) {
                }
            }
            if (f.privileged_excluded && !opts.include_excluded) continue;
            out.push_back(std::move(f));
        }
    }
    return out;
}

LostAggregate aggregate_lost(const std::vector<LostTokenFinding>& findings) {
    LostAggregate a;
    i128 diff_sum = 0;
    for (const auto& f : findings) {
        if (f.privileged_excluded) continue;
        ++a.count;
        diff_sum += f.block_diff;
        if (f.value_usd)
            a.total_usd += *f.value_usd;
        else
            ++a.unvalued;
    }
    if (a.count) a.mean_block_diff = Rational(diff_sum, static_cast<i128>(a.count));
    return a;
}

std::string findings_csv(const std::vector<LostTokenFinding>& findings) {
    std::ostringstream os;
    os << "deposit_tx,retry_tx,value_equal,value_usd,block_diff,protocol,token\n";
    for (const auto& f : findings) {
        os << f.deposit.txid << ',' << (f.retry ? f.retry->txid : std::string{}) << ','
           << (f.value_equal ? "true" : "false") << ',' << (f.value_usd ? f.value_usd->to_decimal(6) : std::string{})
           << ',' << f.block_diff << ',' << to_string(f.protocol) << ',' << f.deposit.token.str() << '\n';
    }
    return os.str();
}

}  // namespace atomscan
