#pragma once

#include "mfiv/decimal.hpp"
#include "mfiv/quotes.hpp"
#include "mfiv/var_index.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfiv {

// Conventional VIX-style estimator, kept for comparison with the envelope
// construction. Strike selection, midpoints and strike spacing follow the
// usual exchange methodology; every choice is a visible constant here.

struct BenchmarkConfig {
    int consecutive_zero_bid_limit = 2;  // scanning stops after this many zero bids in a row
};

class BenchmarkError : public std::runtime_error {
public:
    BenchmarkError(std::string stage, const std::string& reason)
        : std::runtime_error(reason), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

inline Rational mid_price(const Quote& q) { return (q.bid.to_rational() + q.ask.to_rational()) / 2; }

struct ForwardEstimate {
    Rational forward;
    Decimal parity_strike;
};

/// Parity strike = common strike minimizing |C_mid - P_mid| (ties to the
/// lower strike); F0 = K + (C_mid - P_mid) / D there.
inline ForwardEstimate estimate_forward(const MarketSnapshot& snap) {
    std::optional<ForwardEstimate> best;
    Rational best_gap;
    std::size_t c = 0;
    for (const Quote& p : snap.put_chain.quotes) {
        while (c < snap.call_chain.size() && snap.call_chain[c].strike < p.strike) ++c;
        if (c == snap.call_chain.size() || snap.call_chain[c].strike != p.strike) continue;
        const Rational diff = mid_price(snap.call_chain[c]) - mid_price(p);
        const Rational gap = diff < 0 ? Rational(-diff) : diff;
        if (!best || gap < best_gap) {
            best_gap = gap;
            best = ForwardEstimate{p.strike.to_rational() + diff / snap.discount.to_rational(), p.strike};
        }
    }
    if (!best) throw BenchmarkError("estimate_forward", "forward inestimable");
    return *best;
}

enum class Moneyness { Put, AtStrike, Call };

struct EligibleQuote {
    Decimal strike;
    Moneyness kind;
    Rational q;        // midpoint price used in the sum
    Rational delta_k;  // strike spacing weight
};

struct EligibleSet {
    Decimal k_star;
    std::vector<EligibleQuote> quotes;  // ascending strike
};

namespace detail {

/// Scans outward from `start`, skipping zero bids and stopping after
/// `limit` consecutive zero bids. Returns chain positions in scan order.
inline std::vector<std::size_t> scan_outward(const QuoteChain& chain, std::ptrdiff_t start, std::ptrdiff_t step,
                                             int limit) {
    std::vector<std::size_t> kept;
    int zero_run = 0;
    for (std::ptrdiff_t n = start; n >= 0 && n < static_cast<std::ptrdiff_t>(chain.size()); n += step) {
        if (chain[static_cast<std::size_t>(n)].bid.is_zero()) {
            if (++zero_run >= limit) break;
            continue;
        }
        zero_run = 0;
        kept.push_back(static_cast<std::size_t>(n));
    }
    return kept;
}

}  // namespace detail

/// K* = largest strike quoted on both sides not above F0. OTM puts below and
/// OTM calls above K* are retained by the zero-bid scan; at K* the put and
/// call midpoints are averaged. Fails when either wing ends up empty.
inline EligibleSet select_eligible(const MarketSnapshot& snap, const Rational& forward, const BenchmarkConfig& cfg = {}) {
    if (cfg.consecutive_zero_bid_limit < 1) throw std::invalid_argument("consecutive_zero_bid_limit must be >= 1");
    const QuoteChain& puts = snap.put_chain;
    const QuoteChain& calls = snap.call_chain;

    std::optional<std::size_t> put_at, call_at;
    std::size_t c = 0;
    for (std::size_t p = 0; p < puts.size(); ++p) {
        if (puts[p].strike.to_rational() > forward) break;
        while (c < calls.size() && calls[c].strike < puts[p].strike) ++c;
        if (c < calls.size() && calls[c].strike == puts[p].strike) {
            put_at = p;
            call_at = c;
        }
    }
    if (!put_at) throw BenchmarkError("select_eligible", "benchmark incalculable: no common strike at or below F0");

    EligibleSet out;
    out.k_star = puts[*put_at].strike;
    const auto put_idx = detail::scan_outward(puts, static_cast<std::ptrdiff_t>(*put_at) - 1, -1,
                                              cfg.consecutive_zero_bid_limit);
    const auto call_idx = detail::scan_outward(calls, static_cast<std::ptrdiff_t>(*call_at) + 1, +1,
                                               cfg.consecutive_zero_bid_limit);
    if (put_idx.empty() || call_idx.empty())
        throw BenchmarkError("select_eligible", "benchmark incalculable");

    for (auto it = put_idx.rbegin(); it != put_idx.rend(); ++it)
        out.quotes.push_back({puts[*it].strike, Moneyness::Put, mid_price(puts[*it]), Rational(0)});
    out.quotes.push_back(
        {out.k_star, Moneyness::AtStrike, (mid_price(puts[*put_at]) + mid_price(calls[*call_at])) / 2, Rational(0)});
    for (std::size_t n : call_idx)
        out.quotes.push_back({calls[n].strike, Moneyness::Call, mid_price(calls[n]), Rational(0)});

    auto& q = out.quotes;
    for (std::size_t n = 0; n < q.size(); ++n) {
        if (n == 0)
            q[n].delta_k = (q[1].strike - q[0].strike).to_rational();
        else if (n + 1 == q.size())
            q[n].delta_k = (q[n].strike - q[n - 1].strike).to_rational();
        else
            q[n].delta_k = (q[n + 1].strike - q[n - 1].strike).to_rational() / 2;
    }
    return out;
}

/// V(T) = (2/D) sum Q(K) dK / K^2 - (F0 / K* - 1)^2
inline double riemann_variance(const EligibleSet& eligible, const Rational& forward, Decimal discount) {
    long double sum = 0.0L;
    for (const EligibleQuote& e : eligible.quotes) {
        const Rational k = e.strike.to_rational();
        sum += static_cast<long double>(to_double(Rational(e.q * e.delta_k / (k * k))));
    }
    const Rational adj = forward / eligible.k_star.to_rational() - 1;
    return static_cast<double>(2.0L * sum / static_cast<long double>(discount.to_double())) -
           to_double(Rational(adj * adj));
}

struct BenchmarkResult {
    std::string label;
    Decimal maturity;
    std::optional<Rational> forward;
    std::optional<Decimal> parity_strike;
    EligibleSet eligible;
    double total_variance = 0.0;
    std::optional<std::string> failed;
    std::optional<std::string> failed_stage;
};

inline BenchmarkResult benchmark_variance(const MarketSnapshot& snap, const BenchmarkConfig& cfg = {}) {
    BenchmarkResult out;
    out.label = snap.label;
    out.maturity = snap.maturity;
    try {
        const ForwardEstimate fwd = estimate_forward(snap);
        out.forward = fwd.forward;
        out.parity_strike = fwd.parity_strike;
        out.eligible = select_eligible(snap, fwd.forward, cfg);
        out.total_variance = riemann_variance(out.eligible, fwd.forward, snap.discount);
    } catch (const BenchmarkError& e) {
        out.failed = e.what();
        out.failed_stage = e.stage();
    }
    return out;
}

struct BenchmarkIndexResult {
    BenchmarkResult near;
    BenchmarkResult next;
    IndexResult index;
};

/// Both maturities through the benchmark, then the same interpolation and
/// annualization as the envelope index. Snapshots are ordered by maturity.
inline BenchmarkIndexResult benchmark_index(const MarketSnapshot& s1, const MarketSnapshot& s2, int target_days,
                                            const BenchmarkConfig& cfg = {}, const IndexConventions& conv = {}) {
    if (s1.maturity == s2.maturity)
        throw std::invalid_argument("benchmark_index: degenerate maturities (both " + s1.maturity.to_string() + ")");
    const bool swap = s2.maturity < s1.maturity;
    BenchmarkIndexResult out;
    out.near = benchmark_variance(swap ? s2 : s1, cfg);
    out.next = benchmark_variance(swap ? s1 : s2, cfg);
    out.index.target_days = target_days;
    for (const BenchmarkResult* r : {&out.near, &out.next}) {
        if (r->failed) {
            out.index.failure = "maturity '" + r->label + "' failed at " + *r->failed_stage + ": " + *r->failed;
            return out;
        }
    }
    out.index = interpolate_total_variance(out.near.maturity.to_double(), out.near.total_variance,
                                           out.next.maturity.to_double(), out.next.total_variance, target_days, conv);
    return out;
}

}  // namespace mfiv
