#pragma once

#include "mfiv/call_curve.hpp"
#include "mfiv/put_curve.hpp"
#include "mfiv/quotes.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfiv {

enum class ViolationKind { Butterfly, VerticalWithBond, BondCap, GLineIntercept };

inline const char* to_string(ViolationKind k) {
    switch (k) {
        case ViolationKind::Butterfly: return "butterfly";
        case ViolationKind::VerticalWithBond: return "vertical_with_bond";
        case ViolationKind::BondCap: return "bond_cap";
        case ViolationKind::GLineIntercept: return "g_line_intercept";
    }
    return "unknown";
}

/// A failing instance of one of the necessary no-arbitrage inequalities.
/// `indices` are 0-based chain positions in increasing order:
///   Butterfly        {i, j, k}  ask chord of i,k at K_j does not exceed B_j
///   VerticalWithBond {i, j}     slope-D ask bound broken by a bid
///   BondCap          {i}        put bid at least D K_i (puts only)
///   GLineIntercept   {i, j}     puts: g(i,j)(0) >= 0; calls: A_i <= B_j
struct Violation {
    ViolationKind kind;
    Side side;
    std::vector<int> indices;
};

namespace detail {

inline std::vector<Violation> check_frame(const QuoteChain& chain, Decimal discount, ZeroAnchor anchor, Side side) {
    const RawChain raw(chain, discount);
    const Wide S = Decimal::kScale;
    std::vector<Violation> out;
    const int n = raw.n;

    for (int i = 0; i < n; ++i)
        for (int k = i + 2; k < n; ++k)
            for (int j = i + 1; j < k; ++j)
                if (raw.ask_line_minus(i, k, j, raw.B[j]) <= 0) out.push_back({ViolationKind::Butterfly, side, {i, j, k}});

    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (raw.D * (raw.K[j] - raw.K[i]) + raw.A[i] * S < raw.B[j] * S)
                out.push_back({ViolationKind::VerticalWithBond, side, {i, j}});

    if (anchor == ZeroAnchor::Origin)
        for (int i = 0; i < n; ++i)
            if (raw.B[i] * S >= raw.D * raw.K[i]) out.push_back({ViolationKind::BondCap, side, {i}});

    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const bool bad = anchor == ZeroAnchor::Origin ? raw.B[i] * raw.K[j] - raw.A[j] * raw.K[i] >= 0
                                                          : raw.A[j] <= raw.B[i];
            if (bad) out.push_back({ViolationKind::GLineIntercept, side, {i, j}});
        }
    return out;
}

}  // namespace detail

/// Evaluates every instance of the butterfly, slope-D vertical, bond-cap and
/// g-line inequalities exactly. Empty means nothing was detected; the
/// conditions are necessary, not sufficient. Calls are checked on the
/// reflected chain, where the bond cap has no analogue.
inline std::vector<Violation> check_necessary_conditions(const QuoteChain& chain, Decimal discount, Side side) {
    if (chain.empty()) return {};
    if (side == Side::Put) return detail::check_frame(chain, discount, ZeroAnchor::Origin, side);

    const int n = static_cast<int>(chain.size());
    const QuoteChain mirrored = reflect_chain(chain, call_reflection_center(chain));
    std::vector<Violation> out = detail::check_frame(mirrored, discount, ZeroAnchor::Infinity, side);
    for (Violation& v : out) {
        for (int& idx : v.indices) idx = n - 1 - idx;
        std::reverse(v.indices.begin(), v.indices.end());
    }
    std::stable_sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
        if (a.kind != b.kind) return a.kind < b.kind;
        return a.indices < b.indices;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Certificates

enum class InstrumentKind { Put, Call, Bond };

struct Position {
    InstrumentKind instrument;
    Decimal strike;  // unused for bonds
    Rational quantity;
    Rational ask;
    Rational bid;

    Rational payoff(const Rational& s) const {
        switch (instrument) {
            case InstrumentKind::Put: {
                Rational v = strike.to_rational() - s;
                return v > 0 ? v : Rational(0);
            }
            case InstrumentKind::Call: {
                Rational v = s - strike.to_rational();
                return v > 0 ? v : Rational(0);
            }
            case InstrumentKind::Bond: return Rational(1);
        }
        return Rational(0);
    }
};

struct Portfolio {
    std::vector<Position> positions;

    /// Long legs pay the ask, short legs receive the bid.
    Rational cost() const {
        Rational c = 0;
        for (const Position& p : positions) c += p.quantity > 0 ? Rational(p.quantity * p.ask) : Rational(p.quantity * p.bid);
        return c;
    }
    Rational payoff(const Rational& s) const {
        Rational v = 0;
        for (const Position& p : positions) v += p.quantity * p.payoff(s);
        return v;
    }
};

struct ArbitrageCertificate {
    Violation violation;
    Portfolio portfolio;
    Rational cost;
    std::vector<Rational> witness_states;  // terminal prices with strictly positive net value
};

class CertificateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Terminal prices at which payoffs are checked: 0, every strike, every
/// midpoint and one unit past the last strike. Payoffs are linear between
/// strikes, so this grid decides non-negativity exactly.
inline std::vector<Rational> payoff_grid(const QuoteChain& chain) {
    std::vector<Rational> grid{Rational(0)};
    for (std::size_t n = 0; n < chain.size(); ++n) {
        const Rational k = chain[n].strike.to_rational();
        if (n > 0) grid.push_back((chain[n - 1].strike.to_rational() + k) / 2);
        grid.push_back(k);
    }
    grid.push_back(chain.quotes.back().strike.to_rational() + 1);
    return grid;
}

namespace detail {

inline Position option_leg(const QuoteChain& chain, int n, Rational qty) {
    const InstrumentKind kind = chain.side == Side::Put ? InstrumentKind::Put : InstrumentKind::Call;
    return {kind, chain[n].strike, std::move(qty), chain[n].ask.to_rational(), chain[n].bid.to_rational()};
}

inline Position bond_leg(Decimal discount, Rational qty) {
    const Rational d = discount.to_rational();
    return {InstrumentKind::Bond, Decimal{}, std::move(qty), d, d};
}

}  // namespace detail

/// The static portfolio exhibiting `violation`, verified on the payoff grid:
/// cost <= 0, net terminal value (payoff - cost / D) >= 0 everywhere tested
/// and > 0 at one or more witnesses. A verification failure is a bug.
inline ArbitrageCertificate certificate_for(const Violation& violation, const QuoteChain& chain, Decimal discount) {
    const auto& idx = violation.indices;
    auto K = [&](int n) { return chain[n].strike.to_rational(); };
    Portfolio pf;
    const bool put = chain.side == Side::Put;

    switch (violation.kind) {
        case ViolationKind::Butterfly: {
            const int i = idx.at(0), j = idx.at(1), k = idx.at(2);
            const Rational lambda = (K(k) - K(j)) / (K(k) - K(i));
            pf.positions.push_back(detail::option_leg(chain, i, lambda));
            pf.positions.push_back(detail::option_leg(chain, j, Rational(-1)));
            pf.positions.push_back(detail::option_leg(chain, k, Rational(1 - lambda)));
            break;
        }
        case ViolationKind::VerticalWithBond: {
            const int i = idx.at(0), j = idx.at(1);
            if (put) {
                pf.positions.push_back(detail::option_leg(chain, i, Rational(1)));
                pf.positions.push_back(detail::bond_leg(discount, K(j) - K(i)));
                pf.positions.push_back(detail::option_leg(chain, j, Rational(-1)));
            } else {
                pf.positions.push_back(detail::option_leg(chain, j, Rational(1)));
                pf.positions.push_back(detail::bond_leg(discount, K(j) - K(i)));
                pf.positions.push_back(detail::option_leg(chain, i, Rational(-1)));
            }
            break;
        }
        case ViolationKind::BondCap: {
            if (!put) throw CertificateError("bond cap applies to puts only");
            const int i = idx.at(0);
            pf.positions.push_back(detail::bond_leg(discount, K(i)));
            pf.positions.push_back(detail::option_leg(chain, i, Rational(-1)));
            break;
        }
        case ViolationKind::GLineIntercept: {
            const int i = idx.at(0), j = idx.at(1);
            if (put) {
                pf.positions.push_back(detail::option_leg(chain, j, K(i) / K(j)));
                pf.positions.push_back(detail::option_leg(chain, i, Rational(-1)));
            } else {
                pf.positions.push_back(detail::option_leg(chain, i, Rational(1)));
                pf.positions.push_back(detail::option_leg(chain, j, Rational(-1)));
            }
            break;
        }
    }

    ArbitrageCertificate cert{violation, pf, pf.cost(), {}};
    if (cert.cost > 0) throw CertificateError(std::string("certificate cost positive for ") + to_string(violation.kind));
    const Rational carry = cert.cost / discount.to_rational();
    for (const Rational& s : payoff_grid(chain)) {
        const Rational net = pf.payoff(s) - carry;
        if (net < 0) throw CertificateError(std::string("certificate payoff negative for ") + to_string(violation.kind));
        if (net > 0) cert.witness_states.push_back(s);
    }
    if (cert.witness_states.empty())
        throw CertificateError(std::string("certificate has no strict witness for ") + to_string(violation.kind));
    return cert;
}

}  // namespace mfiv
