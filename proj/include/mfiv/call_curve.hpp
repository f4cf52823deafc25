#pragma once

#include "mfiv/put_curve.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mfiv {

/// Maps strikes K -> center - K (reversing the order) and flips the side.
/// Requires center > every strike.
inline QuoteChain reflect_chain(const QuoteChain& chain, Decimal center) {
    QuoteChain out;
    out.side = chain.side == Side::Put ? Side::Call : Side::Put;
    out.quotes.reserve(chain.size());
    for (auto it = chain.quotes.rbegin(); it != chain.quotes.rend(); ++it) {
        if (it->strike >= center) throw std::invalid_argument("reflect_chain: center must exceed every strike");
        out.quotes.push_back({center - it->strike, it->bid, it->ask});
    }
    return out;
}

/// Fixed reflection center used by the call construction.
inline Decimal call_reflection_center(const QuoteChain& chain) {
    const Decimal top = chain.quotes.back().strike;
    return top + top;
}

namespace detail {

inline int mirror_index(int idx, int n) { return idx < 0 ? idx : n - 1 - idx; }

inline LineTag mirror_tag(const LineTag& t, int n) {
    LineTag out = t;
    switch (t.kind) {
        case LineKind::Pair:
            out.i = mirror_index(t.j, n);
            out.j = mirror_index(t.i, n);
            break;
        default:
            out.i = mirror_index(t.i, n);
            out.j = mirror_index(t.j, n);
            break;
    }
    return out;
}

/// y = a (C - K) + b  ->  y = -a K + (a C + b)
inline Line mirror_line(const Line& l, const Rational& center, int n) {
    Rational intercept = l.slope * center + l.intercept;
    return {Rational(-l.slope), std::move(intercept), mirror_tag(l.tag, n)};
}

inline std::optional<int> mirror_opt(const std::optional<int>& idx, int n) {
    if (!idx) return std::nullopt;
    return n - 1 - *idx;
}

inline CurveClassification mirror_classification(const CurveClassification& c, const Rational& center, int n) {
    CurveClassification out;
    for (const IndexPair& p : c.L_members) out.L_members.push_back({n - 1 - p.j, n - 1 - p.i});
    for (const IndexPair& p : c.M_members) out.M_members.push_back({n - 1 - p.j, n - 1 - p.i});
    out.I_L = mirror_opt(c.J_L, n);
    out.J_L = mirror_opt(c.I_L, n);
    out.I_M = mirror_opt(c.J_M, n);
    out.J_M = mirror_opt(c.I_M, n);
    out.fD = mirror_line(c.fD, center, n);
    out.fD_index = n - 1 - c.fD_index;
    out.gD = mirror_line(c.gD, center, n);
    out.gD_index = n - 1 - c.gD_index;
    return out;
}

}  // namespace detail

struct CallCurveResult {
    PiecewiseLinearCurve curve;  // non-increasing for arbitrage-consistent quotes
    CurveCase case_taken = CurveCase::FallbackGD;
    CurveClassification classification;  // indices refer to the call chain
    std::optional<Line> f0;
    std::optional<Divergence> divergence;
    std::optional<std::string> tail_warning;

    bool diverges() const { return divergence.has_value(); }
};

struct CallDivergenceReport {
    std::optional<Divergence> divergence;
    std::optional<std::string> warning;
};

/// The integral of c/K^2 diverges only if c grows linearly at infinity. A
/// positive constant tail converges and is only flagged.
inline CallDivergenceReport detect_call_divergence(const PiecewiseLinearCurve& curve) {
    const Line& tail = curve.terminal_line();
    if (tail.slope > 0)
        return {Divergence{DivergenceKind::LinearGrowthAtInfinity, tail.tag.to_string() + " slope > 0"}, std::nullopt};
    if (tail.slope == 0 && tail.intercept > 0)
        return {std::nullopt, "positive constant tail on " + tail.tag.to_string()};
    return {};
}

inline CallDivergenceReport detect_call_divergence(const CallCurveResult& result) {
    return detect_call_divergence(result.curve);
}

/// Arbitrage-free call price curve: the put construction applied to the chain
/// reflected about 2 K_N, with the resulting lines mapped back.
inline CallCurveResult construct_call_curve(const QuoteChain& chain, Decimal discount) {
    if (chain.empty()) throw std::invalid_argument("construct_call_curve: empty chain");
    const int n = static_cast<int>(chain.size());
    const Decimal center = call_reflection_center(chain);
    const Rational c = center.to_rational();

    const QuoteChain mirrored = reflect_chain(chain, center);
    const detail::CurveConstruction built = detail::construct_lines(mirrored, discount, ZeroAnchor::Infinity);

    std::vector<Line> lines;
    lines.reserve(built.lines.size());
    for (const Line& l : built.lines) lines.push_back(detail::mirror_line(l, c, n));

    CallCurveResult out;
    out.curve = upper_envelope(lines, true);
    out.case_taken = built.case_taken;
    out.classification = detail::mirror_classification(built.classification, c, n);
    if (built.f0) out.f0 = detail::mirror_line(*built.f0, c, n);
    auto report = detect_call_divergence(out.curve);
    out.divergence = std::move(report.divergence);
    out.tail_warning = std::move(report.warning);
    return out;
}

}  // namespace mfiv
