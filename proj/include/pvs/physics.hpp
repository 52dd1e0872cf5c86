#pragma once

// Closed-form stress model of a cylindrical hull with hemispherical end caps
// under external hydrostatic pressure. Lamé thick-wall solutions for both
// bodies; the junction (weld) bending stresses are not modelled.

#include <algorithm>
#include <cmath>
#include <string>

#include "pvs/errors.hpp"

namespace pvs {

/// One candidate vessel. All lengths in meters.
struct DesignPoint {
  double depth = 0.0;      // sea depth
  double length = 0.0;     // cylindrical section length
  double thickness = 0.0;  // wall thickness
  double radius = 0.0;     // outer radius of cylinder and end caps

  friend bool operator==(const DesignPoint&, const DesignPoint&) = default;
};

/// Throws DomainError naming the first violated field.
void validate(const DesignPoint& design);
/// Non-throwing variant; returns an empty string for a valid design.
std::string design_violation(const DesignPoint& design);

struct Material {
  std::string name;
  double yield_strength = 0.0;  // Pa
  double density = 0.0;         // kg/m^3, informational
};

/// Al6061-T6 with the handbook yield strength of 276 MPa.
Material al6061_t6();

struct StressResult {
  double pressure = 0.0;     // Pa
  double cylinder_vm = 0.0;  // Pa
  double sphere_vm = 0.0;    // Pa
  double max_vm = 0.0;       // Pa
};

struct SeaWater {
  double density = 1025.0;  // kg/m^3
  double gravity = 9.81;    // m/s^2
};

/// Gauge pressure rho*g*depth. Throws DomainError for negative depth.
template <typename Scalar>
Scalar hydrostatic_pressure(Scalar depth, const SeaWater& water = {}) {
  using std::isfinite;
  if (!(depth >= Scalar(0)) || !isfinite(depth)) {
    throw DomainError("depth must be a finite value >= 0");
  }
  return Scalar(water.density) * Scalar(water.gravity) * depth;
}

namespace detail {
template <typename Scalar>
void check_shell(Scalar pressure, Scalar outer_radius, Scalar thickness) {
  if (!(pressure >= Scalar(0))) throw DomainError("pressure must be >= 0");
  if (!(outer_radius > Scalar(0))) throw DomainError("outer radius must be > 0");
  if (!(thickness > Scalar(0))) throw DomainError("thickness must be > 0");
  if (!(thickness < outer_radius)) throw DomainError("thickness must be smaller than the outer radius");
}
}  // namespace detail

/// Von Mises stress at the inner wall of a closed thick cylinder loaded by
/// external pressure only. With k = p b^2 / (b^2 - a^2) the inner-wall state is
/// (sigma_r, sigma_theta, sigma_z) = (0, -2k, -k), whose von Mises value is sqrt(3) k.
template <typename Scalar>
Scalar cylinder_max_vm(Scalar pressure, Scalar outer_radius, Scalar thickness) {
  detail::check_shell(pressure, outer_radius, thickness);
  using std::sqrt;
  const Scalar b = outer_radius;
  const Scalar a = outer_radius - thickness;
  const Scalar k = pressure * b * b / (b * b - a * a);
  return sqrt(Scalar(3)) * k;
}

/// Von Mises stress at the inner wall of a thick sphere under external
/// pressure: the state is (0, -c, -c) with c = 1.5 p b^3 / (b^3 - a^3).
template <typename Scalar>
Scalar sphere_max_vm(Scalar pressure, Scalar outer_radius, Scalar thickness) {
  detail::check_shell(pressure, outer_radius, thickness);
  const Scalar b = outer_radius;
  const Scalar a = outer_radius - thickness;
  return Scalar(1.5) * pressure * b * b * b / (b * b * b - a * a * a);
}

/// Maximum von Mises stress over the cylinder and the end caps. Independent of length.
StressResult max_vm_stress(const DesignPoint& design, const SeaWater& water = {});

/// True iff max_vm * safety_factor < yield strength.
bool is_feasible(const DesignPoint& design, const Material& material, double safety_factor = 1.0,
                 const SeaWater& water = {});

}  // namespace pvs
