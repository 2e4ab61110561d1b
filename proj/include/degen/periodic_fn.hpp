#pragma once

// 2*pi-periodic scalar coefficient functions on the boundary circle.
//
// Evaluation order (bit-exact contract):
//   Const   c                 -> c
//   Cosine  m, s, p           -> m + s * cos(y - p)
//   Fourier [(k, c_k, s_k)]   -> sum over the list in order, starting from 0.0,
//                                of (c_k * cos(k*y) + s_k * sin(k*y))

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "degen/error.hpp"

namespace degen {

struct FourierTerm {
    int k = 0;
    double cos_coeff = 0.0;
    double sin_coeff = 0.0;

    bool operator==(const FourierTerm&) const = default;
};

class PeriodicFn {
public:
    struct Const {
        double c = 0.0;
        bool operator==(const Const&) const = default;
    };
    struct Cosine {
        double mean = 0.0;
        double amp = 0.0;
        double phase = 0.0;
        bool operator==(const Cosine&) const = default;
    };
    struct Fourier {
        std::vector<FourierTerm> terms;
        bool operator==(const Fourier&) const = default;
    };

    PeriodicFn() : rep_(Const{0.0}) {}
    PeriodicFn(double c) : rep_(Const{c}) {}  // NOLINT: implicit for literal coefficients
    explicit PeriodicFn(Const c) : rep_(c) {}
    explicit PeriodicFn(Cosine c) : rep_(c) {}
    explicit PeriodicFn(Fourier f) : rep_(std::move(f)) {
        for (const auto& t : std::get<Fourier>(rep_).terms)
            if (t.k < 0) fail(ErrorCode::InvalidArgument, "Fourier wavenumber must be >= 0");
    }

    static PeriodicFn constant(double c) { return PeriodicFn(Const{c}); }
    static PeriodicFn cosine(double mean, double amp, double phase = 0.0) {
        return PeriodicFn(Cosine{mean, amp, phase});
    }
    /// mean + amp * sin(y), written as a one-term Fourier series so it is exact.
    static PeriodicFn sine(double mean, double amp) {
        return PeriodicFn(Fourier{{{0, mean, 0.0}, {1, 0.0, amp}}});
    }
    static PeriodicFn fourier(std::vector<FourierTerm> terms) {
        return PeriodicFn(Fourier{std::move(terms)});
    }

    double operator()(double y) const {
        return std::visit(
            [y](const auto& r) -> double {
                using T = std::decay_t<decltype(r)>;
                if constexpr (std::is_same_v<T, Const>) {
                    return r.c;
                } else if constexpr (std::is_same_v<T, Cosine>) {
                    return r.mean + r.amp * std::cos(y - r.phase);
                } else {
                    double s = 0.0;
                    for (const auto& t : r.terms) {
                        double ky = static_cast<double>(t.k) * y;
                        s += t.cos_coeff * std::cos(ky) + t.sin_coeff * std::sin(ky);
                    }
                    return s;
                }
            },
            rep_);
    }

    double derivative(double y) const {
        return std::visit(
            [y](const auto& r) -> double {
                using T = std::decay_t<decltype(r)>;
                if constexpr (std::is_same_v<T, Const>) {
                    return 0.0;
                } else if constexpr (std::is_same_v<T, Cosine>) {
                    return -r.amp * std::sin(y - r.phase);
                } else {
                    double s = 0.0;
                    for (const auto& t : r.terms) {
                        double k = static_cast<double>(t.k);
                        s += k * (-t.cos_coeff * std::sin(k * y) + t.sin_coeff * std::cos(k * y));
                    }
                    return s;
                }
            },
            rep_);
    }

    /// True when the function does not depend on y.
    bool is_constant() const {
        if (std::holds_alternative<Const>(rep_)) return true;
        if (const auto* c = std::get_if<Cosine>(&rep_)) return c->amp == 0.0;
        for (const auto& t : std::get<Fourier>(rep_).terms)
            if (t.k != 0 && (t.cos_coeff != 0.0 || t.sin_coeff != 0.0)) return false;
        return true;
    }

    /// Lower bound from the coefficient representation (exact for Const/Cosine).
    double lower_bound() const {
        if (const auto* c = std::get_if<Const>(&rep_)) return c->c;
        if (const auto* c = std::get_if<Cosine>(&rep_)) return c->mean - std::abs(c->amp);
        double s = 0.0;
        for (const auto& t : std::get<Fourier>(rep_).terms) {
            if (t.k == 0) s += t.cos_coeff;
            else s -= std::hypot(t.cos_coeff, t.sin_coeff);
        }
        return s;
    }

    const auto& representation() const { return rep_; }

    bool operator==(const PeriodicFn&) const = default;

private:
    std::variant<Const, Cosine, Fourier> rep_;
};

inline PeriodicFn scaled(const PeriodicFn& f, double factor) {
    return std::visit(
        [factor](const auto& r) -> PeriodicFn {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, PeriodicFn::Const>) {
                return PeriodicFn::constant(r.c * factor);
            } else if constexpr (std::is_same_v<T, PeriodicFn::Cosine>) {
                return PeriodicFn::cosine(r.mean * factor, r.amp * factor, r.phase);
            } else {
                auto terms = r.terms;
                for (auto& t : terms) {
                    t.cos_coeff *= factor;
                    t.sin_coeff *= factor;
                }
                return PeriodicFn::fourier(std::move(terms));
            }
        },
        f.representation());
}

}  // namespace degen
