#pragma once

// Frozen outputs of tests/oracles/oracles.py (independent Python reference).
namespace lmdp::oracle {

constexpr double kTinyBlind = 1.4375;
constexpr double kTinyInformed = 1.4375;
constexpr double kMixedBlind = 2.101716;
constexpr double kMixedInformed = 2.1585285;
constexpr double kMixedAlpha = 0.4;
constexpr double kHardBlind = 0.125;
constexpr double kHardInformed = 0.5334375;
constexpr double kHardAlpha = 0.0005546700693420631;
constexpr double kKlHardOptimal = 0.0012154338659456391;
constexpr double kKlHardSuboptimal = 0.0;
constexpr double kKlSymbol0Suboptimal = 3.5677791531428835e-09;

}  // namespace lmdp::oracle
