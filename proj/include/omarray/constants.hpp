#pragma once

#include <numbers>

namespace omarray
{

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

namespace physical
{
inline constexpr double hbar = 1.054571817e-34;  // J s
inline constexpr double k_boltzmann = 1.380649e-23;  // J / K
} // namespace physical

// Tolerances shared by the matrix identities and cross-checks.
namespace tolerance
{
inline constexpr double matrix_identity = 1e-12;
inline constexpr double cross_check = 1e-10;
inline constexpr double degenerate_eigen = 1e-7;
inline constexpr double max_eigen_condition = 1e6;
inline constexpr double overflow_entry = 1e150;
inline constexpr double underflow_guard = 1e-300;
} // namespace tolerance

inline constexpr double hz_to_angular(double hz) { return kTwoPi * hz; }
inline constexpr double angular_to_hz(double w) { return w / kTwoPi; }

} // namespace omarray
