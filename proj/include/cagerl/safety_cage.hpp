#pragma once

#include <string_view>

namespace cagerl::cage {

// Headway reported when the host is (nearly) stationary.
inline constexpr double kHeadwaySentinel = 10.0;
// Below this host speed the headway is the sentinel.
inline constexpr double kMinHeadwaySpeed = 0.1;

// Branch membership of a cage map: Low is the zero-braking branch, R1..R3
// the successive braking branches in increasing risk.
enum class RiskLevel { kLow, kR1, kR2, kR3 };

std::string_view to_string(RiskLevel level);

struct CageVerdict {
  double th = 0.0;
  double ttc = 0.0;  // may be +inf
  double b_th = 0.0;
  double b_ttc = 0.0;
  double b_agent = 0.0;
  double b_final = 0.0;
  double executed_pedal = 0.0;
  bool breached = false;
  RiskLevel risk_th = RiskLevel::kLow;
  RiskLevel risk_ttc = RiskLevel::kLow;
};

// Gap over host speed. Throws DomainError for a negative gap.
double time_headway(double x_rel, double v);

// Gap over closing speed; +inf when the gap is not closing.
double time_to_collision(double x_rel, double v_rel);

// Minimum normalized braking demanded by the headway cage.
double th_braking(double th);
// Minimum normalized braking demanded by the time-to-collision cage.
double ttc_braking(double ttc);

RiskLevel th_risk(double th);
RiskLevel ttc_risk(double ttc);

// Compares both cage demands with the agent's braking and picks the largest.
// If a cage demands more braking than the agent applies, the executed pedal
// is the negated cage demand and the verdict is flagged as breached.
CageVerdict arbitrate(double x_rel, double v, double v_rel, double agent_pedal);

}  // namespace cagerl::cage
