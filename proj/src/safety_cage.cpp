#include "cagerl/safety_cage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cagerl/errors.hpp"

namespace cagerl::cage {

std::string_view to_string(RiskLevel level) {
  switch (level) {
    case RiskLevel::kLow: return "low";
    case RiskLevel::kR1: return "r1";
    case RiskLevel::kR2: return "r2";
    case RiskLevel::kR3: return "r3";
  }
  return "?";
}

double time_headway(double x_rel, double v) {
  if (x_rel < 0.0) {
    throw DomainError("time_headway: negative gap " + std::to_string(x_rel));
  }
  if (v <= kMinHeadwaySpeed) return kHeadwaySentinel;
  return x_rel / v;
}

double time_to_collision(double x_rel, double v_rel) {
  if (v_rel <= 0.0) return std::numeric_limits<double>::infinity();
  return x_rel / v_rel;
}

RiskLevel th_risk(double th) {
  if (th > 1.6) return RiskLevel::kLow;
  if (th > 1.0) return RiskLevel::kR1;
  if (th > 0.5) return RiskLevel::kR2;
  return RiskLevel::kR3;
}

RiskLevel ttc_risk(double ttc) {
  if (ttc > 2.5) return RiskLevel::kLow;
  if (ttc > 1.5) return RiskLevel::kR1;
  if (ttc > 1.0) return RiskLevel::kR2;
  return RiskLevel::kR3;
}

double th_braking(double th) {
  switch (th_risk(th)) {
    case RiskLevel::kLow: return 0.0;
    case RiskLevel::kR1: return -0.5 * th + 1.0;
    case RiskLevel::kR2: return -1.0 * th + 1.5;
    case RiskLevel::kR3: return 1.0;
  }
  return 1.0;
}

double ttc_braking(double ttc) {
  switch (ttc_risk(ttc)) {
    case RiskLevel::kLow: return 0.0;
    case RiskLevel::kR1: return -0.5 * ttc + 1.25;
    case RiskLevel::kR2: return -1.0 * ttc + 2.0;
    case RiskLevel::kR3: return 1.0;
  }
  return 1.0;
}

CageVerdict arbitrate(double x_rel, double v, double v_rel, double agent_pedal) {
  CageVerdict out;
  out.th = time_headway(x_rel, v);
  out.ttc = time_to_collision(x_rel, v_rel);
  out.risk_th = th_risk(out.th);
  out.risk_ttc = ttc_risk(out.ttc);
  out.b_th = th_braking(out.th);
  out.b_ttc = ttc_braking(out.ttc);
  out.b_agent = std::max(-agent_pedal, 0.0);
  const double cage = std::max(out.b_th, out.b_ttc);
  out.b_final = std::max(cage, out.b_agent);
  out.breached = cage > out.b_agent;
  out.executed_pedal = out.breached ? -cage : agent_pedal;
  return out;
}

}  // namespace cagerl::cage
