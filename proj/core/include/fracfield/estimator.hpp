#pragma once

#include <ostream>
#include <vector>

#include "fracfield/model.hpp"

namespace fracfield {

enum class NodeClass { Free, SemiContact, FullContact };
const char* to_string(NodeClass c);

/// Nodal residual estimator for the phase-field obstacle problem of one loading step.
/// Node indices are mesh nodes (equal to Q1 dof indices).
struct EstimatorReport {
  std::vector<NodeClass> node_class;
  std::vector<double> eta1_q, eta2_q, eta3_q, eta4_q;
  std::vector<double> alpha_q;   // min over the patch of G_c/eps + (1-kappa) sigma:e
  std::vector<double> weight_q;  // min{h_q / sqrt(G_c eps), alpha_q^{-1/2}}
  double eta1 = 0.0, eta2 = 0.0, eta3 = 0.0, eta4 = 0.0;
  double eta_total = 0.0;  // eta1 + eta2 + eta3 + eta4
  /// Squared cell indicators: each node's squared contributions shared equally among the
  /// cells of its patch, so the cell values sum to the sum of all nodal squares.
  std::vector<double> cell_indicator_sq;
  std::size_t negative_alpha_nodes = 0;  // patches where the h-weight fallback was used

  void write_csv(std::ostream& out, const QuadMesh& mesh) const;
};

/// a(zeta, psi) = G_c/eps (zeta,psi) + (1-kappa)(sigma:e zeta, psi) + 2(p_g div u zeta, psi)
///              + 2(grad p_g . u zeta, psi) + G_c eps (grad zeta, grad psi), on raw Q1 vectors.
double bilinear_form(const PhaseFieldModel& model, const SystemState& s, const Vector& zeta, const Vector& psi);

/// <Lambda_h, phi_q> = G_c/eps (1, phi_q) - a(phi_h, phi_q) for every node with a W_h basis
/// function; zero at hanging nodes.
Vector constraining_force(const PhaseFieldModel& model, const SystemState& s);

/// A node is in contact when phi = obstacle there (within `tol`). Full contact: every node of
/// the patch is in contact and has a nonnegative force; semi-contact: contact at the node only.
/// Hanging nodes are never in contact.
std::vector<NodeClass> classify_nodes(const PhaseFieldModel& model, const SystemState& s, const Vector& forces,
                                      double tol = 1e-10);

/// Strong residual G_c/eps (1 - phi) + G_c eps lap(phi) - [(1-kappa) sigma:e + 2 p_g div u
/// + 2 grad p_g . u] phi at the 3x3 Gauss points of a cell. The Laplacian of a bilinear
/// function vanishes on rectangles.
std::vector<double> interior_residual(const PhaseFieldModel& model, const SystemState& s, int cell);

EstimatorReport compute_eta(const PhaseFieldModel& model, const SystemState& s, const std::vector<NodeClass>& classes,
                            const Vector& forces);
EstimatorReport estimate(const PhaseFieldModel& model, const SystemState& s);

/// ||zeta||_eps^2 = G_c eps ||grad zeta||^2 + ||(G_c/eps + (1-kappa) sigma:e)^{1/2} zeta||^2.
/// Throws std::domain_error if the weight is negative at a quadrature point.
double energy_norm(const PhaseFieldModel& model, const SystemState& s, const Vector& zeta);

}  // namespace fracfield
