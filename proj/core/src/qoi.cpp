#include "fracfield/qoi.hpp"

#include <numbers>
#include <stdexcept>

#include "cell_fields.hpp"

namespace fracfield {

namespace {

template <typename F>
double integrate(const FESystem& fe, const SystemState& s, F&& integrand) {
  const detail::CellFields fields(fe, gauss_tensor(3));
  std::vector<detail::PointFields> pts;
  double total = 0.0;
  for (std::size_t c = 0; c < fe.mesh().n_active(); ++c) {
    const int cell = static_cast<int>(c);
    fields.evaluate(cell, s, pts);
    double local = 0.0;
    for (const auto& f : pts) local += f.weight * integrand(cell, f);
    total += local;
  }
  return total;
}

}  // namespace

double total_crack_volume(const FESystem& fe, const SystemState& s) {
  return integrate(fe, s, [](int, const detail::PointFields& f) { return f.u.dot(f.grad_phi); });
}

double bulk_energy(const PhaseFieldModel& model, const SystemState& s) {
  const double kappa = model.material().kappa();
  return integrate(model.fe(), s, [&](int cell, const detail::PointFields& f) {
    return 0.5 * degradation(f.phi, kappa) * detail::stress_work(model.fe(), f, model.cell_material(cell));
  });
}

double crack_energy(const PhaseFieldModel& model, const SystemState& s) {
  const double eps = model.eps();
  const double gc = model.material().fracture_toughness();
  return integrate(model.fe(), s, [&](int, const detail::PointFields& f) {
    return 0.5 * gc * ((f.phi - 1.0) * (f.phi - 1.0) / eps + eps * f.grad_phi.squaredNorm());
  });
}

QoIRecord evaluate_qoi(const PhaseFieldModel& model, const SystemState& s) {
  return {total_crack_volume(model.fe(), s), bulk_energy(model, s), crack_energy(model, s)};
}

double sneddon_reference_tcv(double pressure, double half_length, double youngs_modulus, double poisson_ratio) {
  if (!(youngs_modulus > 0.0)) throw std::invalid_argument("sneddon_reference_tcv: E must be positive");
  if (!(poisson_ratio >= 0.0 && poisson_ratio <= 0.5)) {
    throw std::invalid_argument("sneddon_reference_tcv: Poisson ratio outside [0, 0.5]");
  }
  return 2.0 * std::numbers::pi * pressure * half_length * half_length * (1.0 - poisson_ratio * poisson_ratio) /
         youngs_modulus;
}

}  // namespace fracfield
