#pragma once

#include "mfiv/decimal.hpp"
#include "mfiv/pwl.hpp"
#include "mfiv/quotes.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfiv {

/// Where the constructed price must vanish. Puts vanish near K = 0. The call
/// side runs the same machinery on a reflected chain, where the price must
/// instead vanish towards -inf of the reflected axis, so origin-referenced
/// tests become slope-sign tests.
enum class ZeroAnchor { Origin, Infinity };

struct IndexPair {
    int i;
    int j;
    friend bool operator==(const IndexPair&, const IndexPair&) = default;
};

/// Admissible ask-line families for one chain. All indices are 0-based.
///
/// - `L_members`: pairs whose ask line stays below every ask, is negative at
///   the anchor and has slope at most D.
/// - `M_members`: pairs whose ask line stays below every ask, has slope at
///   most D and passes strictly under some bid to the left of its first point.
struct CurveClassification {
    std::vector<IndexPair> L_members;
    std::vector<IndexPair> M_members;
    std::optional<int> I_L, J_L, I_M, J_M;
    Line fD;  // minimum of the slope-D lines through the asks
    int fD_index = -1;
    Line gD;  // maximum of the slope-D lines through the bids
    int gD_index = -1;
};

enum class CurveCase { MClass, LClass, FallbackGD, FallbackF1F2, FallbackF1 };

inline const char* to_string(CurveCase c) {
    switch (c) {
        case CurveCase::MClass: return "M";
        case CurveCase::LClass: return "L";
        case CurveCase::FallbackGD: return "fallback_gD";
        case CurveCase::FallbackF1F2: return "fallback_f1_f2";
        case CurveCase::FallbackF1: return "fallback_f1";
    }
    return "unknown";
}

namespace detail {

/// Raw scaled integers of a chain, for exact 128-bit predicates.
struct RawChain {
    std::vector<Wide> K, A, B;
    Wide D = 0;
    int n = 0;

    RawChain(const QuoteChain& chain, Decimal discount) : D(wide(discount)), n(static_cast<int>(chain.size())) {
        K.reserve(chain.size());
        A.reserve(chain.size());
        B.reserve(chain.size());
        for (const Quote& q : chain.quotes) {
            K.push_back(wide(q.strike));
            A.push_back(wide(q.ask));
            B.push_back(wide(q.bid));
        }
    }

    // sign of (f_ij(K_n) - y) * (K_j - K_i), f_ij the ask line through i < j
    Wide ask_line_minus(int i, int j, int n, Wide y) const {
        const Wide dk = K[j] - K[i];
        return (A[j] - A[i]) * (K[n] - K[i]) + A[i] * dk - y * dk;
    }
    bool slope_at_most_D(int i, int j) const { return (A[j] - A[i]) * Decimal::kScale <= D * (K[j] - K[i]); }
    bool below_all_asks(int i, int j) const {
        for (int m = i + 1; m < j; ++m)
            if (ask_line_minus(i, j, m, A[m]) > 0) return false;
        for (int m = 0; m < i; ++m)
            if (ask_line_minus(i, j, m, A[m]) > 0) return false;
        for (int m = j + 1; m < n; ++m)
            if (ask_line_minus(i, j, m, A[m]) > 0) return false;
        return true;
    }
    bool vanishes_at_anchor(int i, int j, ZeroAnchor anchor) const {
        if (anchor == ZeroAnchor::Origin) return A[i] * K[j] - A[j] * K[i] < 0;  // intercept < 0
        return A[j] > A[i];                                                    // slope > 0
    }
    bool passes_under_left_bid(int i, int j) const {
        for (int m = 0; m < i; ++m)
            if (ask_line_minus(i, j, m, B[m]) < 0) return true;
        return false;
    }
};

inline Point ask_point(const QuoteChain& c, int n) { return {c[n].strike.to_rational(), c[n].ask.to_rational()}; }
inline Point bid_point(const QuoteChain& c, int n) { return {c[n].strike.to_rational(), c[n].bid.to_rational()}; }

inline Line pair_line(const QuoteChain& c, IndexPair p) {
    return line_through(ask_point(c, p.i), ask_point(c, p.j), {LineKind::Pair, p.i, p.j});
}

/// Slope of the line from the ask at `anchor` to the bid at `n`.
inline Rational ask_to_bid_slope(const QuoteChain& c, int anchor, int n) {
    return (c[anchor].ask.to_rational() - c[n].bid.to_rational()) /
           (c[anchor].strike.to_rational() - c[n].strike.to_rational());
}

/// Through (K_a, A_a) with the smallest ask-to-bid slope over i < a (ties to
/// the smallest i). Requires a >= 1.
inline Line min_left_bid_line(const QuoteChain& c, int a, LineKind kind) {
    int best = 0;
    Rational best_slope = ask_to_bid_slope(c, a, 0);
    for (int i = 1; i < a; ++i) {
        Rational s = ask_to_bid_slope(c, a, i);
        if (s < best_slope) {
            best_slope = std::move(s);
            best = i;
        }
    }
    return line_with_slope(best_slope, ask_point(c, a), {kind, best, a});
}

/// Through (K_a, A_a) with the largest ask-to-bid slope over j > a (ties to
/// the smallest j). Requires a < N - 1.
inline Line max_right_bid_line(const QuoteChain& c, int a, LineKind kind) {
    const int n = static_cast<int>(c.size());
    int best = a + 1;
    Rational best_slope = ask_to_bid_slope(c, a, a + 1);
    for (int j = a + 2; j < n; ++j) {
        Rational s = ask_to_bid_slope(c, a, j);
        if (s > best_slope) {
            best_slope = std::move(s);
            best = j;
        }
    }
    return line_with_slope(best_slope, ask_point(c, a), {kind, a, best});
}

}  // namespace detail

/// Exact membership of every pair i < j, the extreme indices of both
/// families, and the boundary lines fD / gD (achievers tie to the largest
/// index). O(N^2) pairs with O(N) verification each.
inline CurveClassification classify_put(const QuoteChain& chain, Decimal discount,
                                        ZeroAnchor anchor = ZeroAnchor::Origin) {
    if (chain.empty()) throw std::invalid_argument("classify_put: empty chain");
    const detail::RawChain raw(chain, discount);
    CurveClassification cls;

    for (int i = 0; i < raw.n; ++i) {
        for (int j = i + 1; j < raw.n; ++j) {
            if (!raw.slope_at_most_D(i, j)) continue;
            if (!raw.below_all_asks(i, j)) continue;
            const IndexPair p{i, j};
            if (raw.vanishes_at_anchor(i, j, anchor)) {
                cls.L_members.push_back(p);
                if (!cls.I_L || i < *cls.I_L) cls.I_L = i;
                if (!cls.J_L || j > *cls.J_L) cls.J_L = j;
            }
            if (raw.passes_under_left_bid(i, j)) {
                cls.M_members.push_back(p);
                if (!cls.I_M || i < *cls.I_M) cls.I_M = i;
                if (!cls.J_M || j > *cls.J_M) cls.J_M = j;
            }
        }
    }

    // fD: smallest A_i - D K_i; gD: largest B_i - D K_i (scaled by kScale).
    int f_best = 0, g_best = 0;
    auto f_key = [&](int n) { return raw.A[n] * Decimal::kScale - raw.D * raw.K[n]; };
    auto g_key = [&](int n) { return raw.B[n] * Decimal::kScale - raw.D * raw.K[n]; };
    for (int n = 1; n < raw.n; ++n) {
        if (f_key(n) <= f_key(f_best)) f_best = n;
        if (g_key(n) >= g_key(g_best)) g_best = n;
    }
    const Rational D = discount.to_rational();
    cls.fD = line_with_slope(D, detail::ask_point(chain, f_best), {LineKind::FD, f_best});
    cls.fD_index = f_best;
    cls.gD = line_with_slope(D, detail::bid_point(chain, g_best), {LineKind::GD, g_best});
    cls.gD_index = g_best;
    return cls;
}

/// Extrapolation line through the ask at I_M with the smallest slope to any
/// bid on its left.
inline Line build_f0_for_M(const QuoteChain& chain, const CurveClassification& cls) {
    if (!cls.I_M) throw std::invalid_argument("build_f0_for_M: M class is empty");
    if (*cls.I_M < 1) throw std::logic_error("build_f0_for_M: I_M must exceed the first index");
    return detail::min_left_bid_line(chain, *cls.I_M, LineKind::F0);
}

namespace detail {

struct CurveConstruction {
    std::vector<Line> lines;  // candidate family; the zero line is added by the envelope
    CurveCase case_taken = CurveCase::FallbackGD;
    CurveClassification classification;
    std::optional<Line> f0;
};

inline CurveConstruction construct_lines(const QuoteChain& chain, Decimal discount, ZeroAnchor anchor) {
    CurveConstruction out;
    out.classification = classify_put(chain, discount, anchor);
    const CurveClassification& cls = out.classification;

    if (!cls.M_members.empty()) {
        out.case_taken = CurveCase::MClass;
        for (const IndexPair& p : cls.M_members) out.lines.push_back(pair_line(chain, p));
        out.f0 = build_f0_for_M(chain, cls);
        out.lines.push_back(*out.f0);
        out.lines.push_back(cls.fD);
        return out;
    }

    if (!cls.L_members.empty()) {
        out.case_taken = CurveCase::LClass;
        std::optional<Rational> min_slope;
        for (const IndexPair& p : cls.L_members) {
            out.lines.push_back(pair_line(chain, p));
            if (!min_slope || out.lines.back().slope < *min_slope) min_slope = out.lines.back().slope;
        }
        out.lines.push_back(cls.fD);
        if (*cls.I_L >= 1) {
            Line f0 = min_left_bid_line(chain, *cls.I_L, LineKind::F0);
            if (f0.slope <= *min_slope) out.lines.push_back(f0);
            out.f0 = std::move(f0);
        }
        return out;
    }

    if (cls.gD.intercept <= cls.fD.intercept) {
        out.case_taken = CurveCase::FallbackGD;
        out.lines.push_back(cls.gD);
        return out;
    }

    const int J = cls.fD_index;
    const int n = static_cast<int>(chain.size());
    // With arbitrage-consistent quotes gD > fD forces J >= 1; otherwise fD
    // stands in for f1 so the construction still returns a curve.
    Line f1 = J >= 1 ? min_left_bid_line(chain, J, LineKind::F1) : cls.fD;
    if (J + 1 < n) {
        Line f2 = max_right_bid_line(chain, J, LineKind::F2);
        if (f1.slope < f2.slope) {
            out.case_taken = CurveCase::FallbackF1F2;
            out.lines.push_back(std::move(f1));
            out.lines.push_back(std::move(f2));
            return out;
        }
    }
    out.case_taken = CurveCase::FallbackF1;
    out.lines.push_back(std::move(f1));
    return out;
}

}  // namespace detail

struct PutCurveResult {
    PiecewiseLinearCurve curve;
    CurveCase case_taken = CurveCase::FallbackGD;
    CurveClassification classification;
    std::optional<Line> f0;
    std::optional<Divergence> divergence;
    std::vector<Decimal> excluded_strikes;

    bool diverges() const { return divergence.has_value(); }
};

/// Divergence of the integral of p/K^2 near the origin: diverges iff the
/// largest intercept among active non-zero lines is >= 0.
inline std::optional<Divergence> detect_put_divergence(const PiecewiseLinearCurve& curve) {
    const Line* worst = nullptr;
    for (const auto& seg : curve.segments()) {
        const Line& l = seg.line;
        if (l.slope == 0 && l.intercept == 0) continue;
        if (!worst || l.intercept > worst->intercept) worst = &l;
    }
    if (!worst || worst->intercept < 0) return std::nullopt;
    const std::string detail = worst->tag.to_string() + " intercept >= 0";
    if (worst->intercept > 0) return Divergence{DivergenceKind::PositiveAtOrigin, detail};
    if (worst->slope > 0) return Divergence{DivergenceKind::LinearAtOrigin, detail};
    return std::nullopt;
}

inline std::optional<Divergence> detect_put_divergence(const PutCurveResult& result) {
    return detect_put_divergence(result.curve);
}

/// Arbitrage-free put price curve consistent with the chain's spreads.
/// Precedence: M family, then L family, then the slope-D fallbacks.
inline PutCurveResult construct_put_curve(const QuoteChain& chain, Decimal discount) {
    detail::CurveConstruction built = detail::construct_lines(chain, discount, ZeroAnchor::Origin);
    PutCurveResult out;
    out.curve = upper_envelope(built.lines, true);
    out.case_taken = built.case_taken;
    out.classification = std::move(built.classification);
    out.f0 = std::move(built.f0);
    out.divergence = detect_put_divergence(out.curve);
    return out;
}

// ---------------------------------------------------------------------------
// Anomaly filter

struct FilterResult {
    QuoteChain filtered;
    std::vector<Decimal> excluded_strikes;
    PutCurveResult result;
    int passes = 0;
};

class FilterError : public std::runtime_error {
public:
    FilterError(const std::string& what, FilterResult partial)
        : std::runtime_error(what), partial_(std::move(partial)) {}
    const FilterResult& partial() const { return partial_; }

private:
    FilterResult partial_;
};

/// Indices i < I_M whose bid-to-ask line g(i, I_M) is non-negative at K = 0.
inline std::vector<int> anomalous_indices(const QuoteChain& chain, const CurveClassification& cls) {
    std::vector<int> out;
    if (!cls.I_M) return out;
    const int I = *cls.I_M;
    const Wide KI = wide(chain[I].strike), AI = wide(chain[I].ask);
    for (int i = 0; i < I; ++i)
        if (wide(chain[i].bid) * KI - AI * wide(chain[i].strike) >= 0) out.push_back(i);
    return out;
}

/// Removes put quotes that force a non-negative f0 intercept, re-classifying
/// after each pass since I_M may move. Stops at a fixed point or throws after
/// `max_passes` removing passes with a violation still present.
inline FilterResult filter_anomalies(const QuoteChain& chain, Decimal discount, int max_passes = 10) {
    FilterResult state;
    state.filtered = chain;
    state.result = construct_put_curve(chain, discount);
    if (state.result.classification.M_members.empty())
        throw std::invalid_argument("filter_anomalies: M class is empty for the input chain");

    while (true) {
        const std::vector<int> bad = anomalous_indices(state.filtered, state.result.classification);
        if (bad.empty()) break;
        if (state.passes >= max_passes) {
            state.result.excluded_strikes = state.excluded_strikes;
            throw FilterError("filter_anomalies: no fixed point after " + std::to_string(max_passes) + " passes",
                              std::move(state));
        }
        std::vector<Quote> kept;
        std::size_t next_bad = 0;
        for (int n = 0; n < static_cast<int>(state.filtered.size()); ++n) {
            if (next_bad < bad.size() && bad[next_bad] == n) {
                state.excluded_strikes.push_back(state.filtered[n].strike);
                ++next_bad;
            } else {
                kept.push_back(state.filtered[n]);
            }
        }
        state.filtered.quotes = std::move(kept);
        ++state.passes;
        state.result = construct_put_curve(state.filtered, discount);
    }
    std::sort(state.excluded_strikes.begin(), state.excluded_strikes.end());
    state.result.excluded_strikes = state.excluded_strikes;
    return state;
}

}  // namespace mfiv
