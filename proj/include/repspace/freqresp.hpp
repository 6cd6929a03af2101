#pragma once

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace repspace {

using Complex = std::complex<double>;

// Rational transfer function num(s)/den(s) * exp(-delay*s).
// Coefficients are stored in ascending powers of s (index 0 is the constant
// term). Trailing zero coefficients are trimmed on construction so that the
// leading denominator coefficient is always nonzero.
//
// A negative delay is a pure advance. It is valid in frequency-domain algebra
// but cannot be simulated.
class TransferFunction {
public:
    TransferFunction(std::vector<double> num, std::vector<double> den, double delay = 0.0);

    static TransferFunction constant(double gain);

    [[nodiscard]] const std::vector<double>& num() const noexcept { return num_; }
    [[nodiscard]] const std::vector<double>& den() const noexcept { return den_; }
    [[nodiscard]] double delay() const noexcept { return delay_; }

    [[nodiscard]] std::size_t num_degree() const noexcept { return num_.size() - 1; }
    [[nodiscard]] std::size_t den_degree() const noexcept { return den_.size() - 1; }
    [[nodiscard]] bool is_proper() const noexcept { return num_degree() <= den_degree(); }
    [[nodiscard]] bool is_zero() const noexcept { return num_.size() == 1 && num_[0] == 0.0; }

    // Series connection; delays add.
    [[nodiscard]] TransferFunction operator*(const TransferFunction& rhs) const;

    friend bool operator==(const TransferFunction&, const TransferFunction&) = default;

private:
    std::vector<double> num_;
    std::vector<double> den_;
    double delay_;
};

// Coefficient slots of a second-order section
//   (n2 s^2 + n1 s + n0) / (d2 s^2 + d1 s + d0).
enum class Slot { N2, N1, N0, D2, D1, D0 };

inline constexpr std::array<Slot, 6> kAllSlots{Slot::N2, Slot::N1, Slot::N0,
                                               Slot::D2, Slot::D1, Slot::D0};

[[nodiscard]] std::string_view to_string(Slot slot) noexcept;
[[nodiscard]] std::optional<Slot> slot_from_string(std::string_view name) noexcept;

struct BiquadSection {
    double n2 = 0.0;
    double n1 = 0.0;
    double n0 = 0.0;
    double d2 = 0.0;
    double d1 = 0.0;
    double d0 = 1.0;

    [[nodiscard]] double get(Slot slot) const noexcept;
    void set(Slot slot, double value) noexcept;

    [[nodiscard]] bool denominator_is_zero() const noexcept {
        return d2 == 0.0 && d1 == 0.0 && d0 == 0.0;
    }

    [[nodiscard]] TransferFunction to_tf() const;

    static BiquadSection unity() { return {0.0, 0.0, 1.0, 0.0, 0.0, 1.0}; }
    static BiquadSection zero() { return {0.0, 0.0, 0.0, 0.0, 0.0, 1.0}; }

    friend bool operator==(const BiquadSection&, const BiquadSection&) = default;
};

// Evaluates a real-coefficient polynomial (ascending order) at s with Horner's scheme.
[[nodiscard]] Complex eval_polynomial(std::span<const double> coeffs, Complex s) noexcept;

// num(jw)/den(jw) * exp(-j*w*delay).
// Throws NonFiniteInput for non-finite omega and PoleAtFrequency when
// |den(jw)| < 1e-300.
[[nodiscard]] Complex eval_tf(const TransferFunction& tf, double omega);

[[nodiscard]] Complex eval_section(const BiquadSection& section, double omega);

// Product of the sections at jw; an empty chain evaluates to 1.
[[nodiscard]] Complex eval_chain(std::span<const BiquadSection> sections, double omega);

[[nodiscard]] TransferFunction chain_to_tf(std::span<const BiquadSection> sections);

struct BodePoint {
    double omega = 0.0;
    Complex value;
    double magnitude = 0.0;
    double phase = 0.0; // radians, unwrapped along the grid
};

// omegas must be strictly increasing and positive.
[[nodiscard]] std::vector<BodePoint> bode_grid(const TransferFunction& tf,
                                               std::span<const double> omegas);

[[nodiscard]] std::vector<double> log_space(double lo, double hi, std::size_t count);
[[nodiscard]] std::vector<double> lin_space(double lo, double hi, std::size_t count);

// Standard controller forms expressible as one biquad section.
enum class ControllerKind { P, PD, PI, PID, Lag, Lead, FirstOrderFilter, SecondOrderFilter };

[[nodiscard]] std::string_view to_string(ControllerKind kind) noexcept;
// Throws UnknownKind.
[[nodiscard]] ControllerKind controller_kind_from_string(std::string_view name);

struct ControllerParams {
    std::optional<double> K;
    std::optional<double> Td;
    std::optional<double> Ti;
    std::optional<double> T;
    std::optional<double> alpha;
    std::optional<double> beta;
    std::optional<double> tau;
    std::optional<double> zeta;
    std::optional<double> omega;
};

// Builds the biquad coefficient pattern for one controller kind.
// Throws MissingParameter when a required field is absent and
// InvalidParameter for Lead with alpha outside (0,1) or Lag with beta <= 1.
[[nodiscard]] BiquadSection make_controller_tf(ControllerKind kind, const ControllerParams& params);

} // namespace repspace
