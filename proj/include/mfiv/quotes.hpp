#pragma once

#include "mfiv/decimal.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mfiv {

enum class Side { Put, Call };

inline const char* to_string(Side s) { return s == Side::Put ? "P" : "C"; }

struct Quote {
    Decimal strike;
    Decimal bid;
    Decimal ask;

    friend bool operator==(const Quote&, const Quote&) = default;
};

/// Quotes for one option type and expiry. Strikes are expected to be strictly
/// increasing; `validate_chain` reports when they are not.
struct QuoteChain {
    Side side = Side::Put;
    std::vector<Quote> quotes;

    std::size_t size() const { return quotes.size(); }
    bool empty() const { return quotes.empty(); }
    const Quote& operator[](std::size_t n) const { return quotes[n]; }

    friend bool operator==(const QuoteChain&, const QuoteChain&) = default;
};

struct MarketSnapshot {
    std::string label;
    Decimal maturity;  // year fraction
    Decimal discount;  // zero-coupon bond price D
    QuoteChain put_chain{Side::Put, {}};
    QuoteChain call_chain{Side::Call, {}};

    const QuoteChain& chain(Side s) const { return s == Side::Put ? put_chain : call_chain; }
    QuoteChain& chain(Side s) { return s == Side::Put ? put_chain : call_chain; }

    friend bool operator==(const MarketSnapshot&, const MarketSnapshot&) = default;
};

// ---------------------------------------------------------------------------
// Validation

enum class ChainViolationKind { EmptyChain, NonPositiveStrike, NegativePrice, BidAboveAsk, StrikeOrder, ZeroQuote };

inline const char* to_string(ChainViolationKind k) {
    switch (k) {
        case ChainViolationKind::EmptyChain: return "empty_chain";
        case ChainViolationKind::NonPositiveStrike: return "non_positive_strike";
        case ChainViolationKind::NegativePrice: return "negative_price";
        case ChainViolationKind::BidAboveAsk: return "bid_above_ask";
        case ChainViolationKind::StrikeOrder: return "strike_order";
        case ChainViolationKind::ZeroQuote: return "zero_quote";
    }
    return "unknown";
}

struct ChainViolation {
    ChainViolationKind kind;
    std::size_t index;  // position in the chain (0-based)
    std::string message;
};

using ValidationReport = std::vector<ChainViolation>;

/// Structural prechecks: ordering, signs, bid <= ask, and bid = ask = 0
/// quotes (which the curve construction cannot use).
inline ValidationReport validate_chain(const QuoteChain& chain) {
    ValidationReport report;
    auto add = [&](ChainViolationKind kind, std::size_t n, std::string msg) {
        report.push_back({kind, n, std::move(msg)});
    };
    if (chain.empty()) {
        add(ChainViolationKind::EmptyChain, 0, "chain has no quotes");
        return report;
    }
    for (std::size_t n = 0; n < chain.size(); ++n) {
        const Quote& q = chain[n];
        const std::string at = " at strike " + q.strike.to_string();
        if (q.strike <= Decimal{}) add(ChainViolationKind::NonPositiveStrike, n, "strike must be positive" + at);
        if (q.bid < Decimal{} || q.ask < Decimal{}) add(ChainViolationKind::NegativePrice, n, "negative price" + at);
        if (q.bid > q.ask) add(ChainViolationKind::BidAboveAsk, n, "bid above ask" + at);
        if (q.bid.is_zero() && q.ask.is_zero()) add(ChainViolationKind::ZeroQuote, n, "bid = ask = 0" + at);
        if (n > 0 && chain[n - 1].strike >= q.strike)
            add(ChainViolationKind::StrikeOrder, n, "strikes not strictly increasing" + at);
    }
    return report;
}

// ---------------------------------------------------------------------------
// CSV ingestion

inline constexpr std::string_view kCsvHeader = "label,maturity_years,discount,side,strike,bid,ask";

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t row, const std::string& what)
        : std::runtime_error("row " + std::to_string(row) + ": " + what), row_(row) {}
    std::size_t row() const { return row_; }

private:
    std::size_t row_;
};

/// A well-formed row whose values break a quote invariant (bid above ask,
/// non-positive strike, duplicate strike, ...).
class QuoteValidationError : public ParseError {
public:
    using ParseError::ParseError;
};

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace detail

/// Reads snapshots from CSV text. One snapshot per label, in order of first
/// appearance; each chain is sorted by strike. Row numbers in errors count
/// the header as row 1.
inline std::vector<MarketSnapshot> parse_snapshot(std::string_view csv_text) {
    std::vector<MarketSnapshot> out;
    std::map<std::string, std::size_t, std::less<>> by_label;

    std::size_t row = 0;
    bool seen_header = false;
    std::size_t pos = 0;
    while (pos <= csv_text.size()) {
        auto nl = csv_text.find('\n', pos);
        if (nl == std::string_view::npos) nl = csv_text.size();
        const std::string_view line = detail::trim(csv_text.substr(pos, nl - pos));
        pos = nl + 1;
        ++row;
        if (line.empty()) continue;

        if (!seen_header) {
            if (line != kCsvHeader) throw ParseError(row, "expected header '" + std::string(kCsvHeader) + "'");
            seen_header = true;
            continue;
        }

        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 7) throw ParseError(row, "expected 7 columns, got " + std::to_string(fields.size()));

        auto number = [&](std::size_t col, const char* name) {
            try {
                return Decimal::parse(fields[col]);
            } catch (const DecimalParseError& e) {
                throw ParseError(row, std::string(name) + ": " + e.what());
            }
        };
        const std::string label(detail::trim(fields[0]));
        if (label.empty()) throw ParseError(row, "empty label");
        const Decimal maturity = number(1, "maturity_years");
        const Decimal discount = number(2, "discount");
        const std::string_view side_text = detail::trim(fields[3]);
        const Decimal strike = number(4, "strike");
        const Decimal bid = number(5, "bid");
        const Decimal ask = number(6, "ask");

        Side side;
        if (side_text == "P")
            side = Side::Put;
        else if (side_text == "C")
            side = Side::Call;
        else
            throw ParseError(row, "side must be P or C");

        if (maturity <= Decimal{}) throw QuoteValidationError(row, "maturity must be positive");
        if (discount <= Decimal{} || discount > Decimal::from_int(1))
            throw QuoteValidationError(row, "discount must lie in (0, 1]");
        if (strike <= Decimal{}) throw QuoteValidationError(row, "strike must be positive");
        if (bid < Decimal{} || ask < Decimal{}) throw QuoteValidationError(row, "negative price");
        if (bid > ask) throw QuoteValidationError(row, "bid above ask");

        auto [it, inserted] = by_label.try_emplace(label, out.size());
        if (inserted) {
            MarketSnapshot snap;
            snap.label = label;
            snap.maturity = maturity;
            snap.discount = discount;
            out.push_back(std::move(snap));
        }
        MarketSnapshot& snap = out[it->second];
        if (snap.maturity != maturity || snap.discount != discount)
            throw QuoteValidationError(row, "maturity/discount differ from earlier rows of label '" + label + "'");

        auto& quotes = (side == Side::Put ? snap.put_chain : snap.call_chain).quotes;
        for (const Quote& q : quotes)
            if (q.strike == strike)
                throw QuoteValidationError(row, "duplicate strike " + strike.to_string() + " on side " + to_string(side));
        quotes.push_back({strike, bid, ask});
    }

    for (auto& snap : out) {
        for (auto* chain : {&snap.put_chain, &snap.call_chain})
            std::sort(chain->quotes.begin(), chain->quotes.end(),
                      [](const Quote& a, const Quote& b) { return a.strike < b.strike; });
    }
    return out;
}

/// Inverse of `parse_snapshot`: header, then puts and calls per snapshot.
inline std::string serialize_snapshots(const std::vector<MarketSnapshot>& snapshots) {
    std::ostringstream os;
    os << kCsvHeader << '\n';
    for (const auto& snap : snapshots) {
        for (const auto* chain : {&snap.put_chain, &snap.call_chain})
            for (const Quote& q : chain->quotes)
                os << snap.label << ',' << snap.maturity << ',' << snap.discount << ',' << to_string(chain->side)
                   << ',' << q.strike << ',' << q.bid << ',' << q.ask << '\n';
    }
    return os.str();
}

}  // namespace mfiv
