#include "pvs/physics.hpp"

#include <cmath>

namespace pvs {

std::string design_violation(const DesignPoint& design) {
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(design.depth) || design.depth < 0.0) return "depth must be finite and >= 0";
  if (!finite(design.length) || design.length < 0.0) return "length must be finite and >= 0";
  if (!finite(design.thickness) || design.thickness <= 0.0) return "thickness must be finite and > 0";
  if (!finite(design.radius) || design.radius <= 0.0) return "radius must be finite and > 0";
  if (design.thickness >= design.radius) return "thickness must be smaller than radius";
  return {};
}

void validate(const DesignPoint& design) {
  if (auto message = design_violation(design); !message.empty()) throw DomainError(message);
}

Material al6061_t6() { return {"Al6061-T6", 276.0e6, 2700.0}; }

StressResult max_vm_stress(const DesignPoint& design, const SeaWater& water) {
  validate(design);
  StressResult result;
  result.pressure = hydrostatic_pressure(design.depth, water);
  result.cylinder_vm = cylinder_max_vm(result.pressure, design.radius, design.thickness);
  result.sphere_vm = sphere_max_vm(result.pressure, design.radius, design.thickness);
  result.max_vm = std::max(result.cylinder_vm, result.sphere_vm);
  return result;
}

bool is_feasible(const DesignPoint& design, const Material& material, double safety_factor,
                 const SeaWater& water) {
  if (!(safety_factor >= 1.0)) throw DomainError("safety factor must be >= 1");
  if (!(material.yield_strength > 0.0)) throw DomainError("yield strength must be > 0");
  return max_vm_stress(design, water).max_vm * safety_factor < material.yield_strength;
}

}  // namespace pvs
