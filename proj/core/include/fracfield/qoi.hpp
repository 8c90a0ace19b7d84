#pragma once

#include "fracfield/model.hpp"

namespace fracfield {

struct QoIRecord {
  double tcv = 0.0;
  double bulk_energy = 0.0;
  double crack_energy = 0.0;
};

/// TCV = integral of u . grad(phi).
double total_crack_volume(const FESystem& fe, const SystemState& s);
/// Integral of g(phi)/2 sigma : e(u), with the stress law of the model's form.
double bulk_energy(const PhaseFieldModel& model, const SystemState& s);
/// G_c/2 times the integral of (phi-1)^2/eps + eps |grad phi|^2.
double crack_energy(const PhaseFieldModel& model, const SystemState& s);

QoIRecord evaluate_qoi(const PhaseFieldModel& model, const SystemState& s);

/// Crack volume of a pressurized line crack of half-length l0 in an infinite plane-strain
/// body: 2 pi p l0^2 (1 - nu^2) / E.
double sneddon_reference_tcv(double pressure, double half_length, double youngs_modulus, double poisson_ratio);

}  // namespace fracfield
