#include "fracfield/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <stdexcept>

#include "cell_fields.hpp"

namespace fracfield {

const char* to_string(NodeClass c) {
  switch (c) {
    case NodeClass::Free: return "free";
    case NodeClass::SemiContact: return "semi";
    case NodeClass::FullContact: return "full";
  }
  return "?";
}

namespace {

// Reaction coefficient of the phase-field operator without the G_c/eps part.
double reaction(const PhaseFieldModel& model, const detail::PointFields& f, int cell) {
  const double kappa = model.material().kappa();
  const double pg = model.pressure().value(f.x);
  const Point gpg = model.pressure().gradient(f.x);
  return (1.0 - kappa) * detail::stress_work(model.fe(), f, model.cell_material(cell)) +
         2.0 * pg * f.grad_u.trace() + 2.0 * gpg.dot(f.u);
}

struct ScalarAtPoint {
  double value;
  Point grad;
};

ScalarAtPoint q1_at(const detail::CellFields& fields, const FESystem& fe, const Vector& c, int cell, std::size_t q) {
  const Rect b = fe.mesh().cell_box(cell);
  const auto fd = fe.phase_dofs().cell_dofs(cell);
  ScalarAtPoint out{0.0, Point::Zero()};
  for (int i = 0; i < 4; ++i) {
    out.value += c[fd[i]] * fields.phi_table().v(q, i);
    out.grad += c[fd[i]] * fields.phi_table().grad(q, i, b.width(), b.height());
  }
  return out;
}

}  // namespace

double bilinear_form(const PhaseFieldModel& model, const SystemState& s, const Vector& zeta, const Vector& psi) {
  const FESystem& fe = model.fe();
  const double gc = model.material().fracture_toughness();
  const double eps = model.eps();
  const detail::CellFields fields(fe, gauss_tensor(3));
  std::vector<detail::PointFields> pts;
  double total = 0.0;
  for (std::size_t c = 0; c < fe.mesh().n_active(); ++c) {
    const int cell = static_cast<int>(c);
    fields.evaluate(cell, s, pts);
    for (std::size_t q = 0; q < pts.size(); ++q) {
      const ScalarAtPoint z = q1_at(fields, fe, zeta, cell, q);
      const ScalarAtPoint p = q1_at(fields, fe, psi, cell, q);
      const double k = gc / eps + reaction(model, pts[q], cell);
      total += pts[q].weight * (k * z.value * p.value + gc * eps * z.grad.dot(p.grad));
    }
  }
  return total;
}

Vector constraining_force(const PhaseFieldModel& model, const SystemState& s) {
  const FESystem& fe = model.fe();
  const Vector condensed = fe.condense(model.residual(s));
  Vector out = Vector::Zero(static_cast<int>(fe.n_phi()));
  const int off = static_cast<int>(fe.raw_offset_phi());
  for (std::size_t i = fe.n_free_up(); i < fe.n_free(); ++i) {
    out[fe.raw_index(static_cast<int>(i)) - off] = -condensed[static_cast<int>(i)];
  }
  return out;
}

std::vector<NodeClass> classify_nodes(const PhaseFieldModel& model, const SystemState& s, const Vector& forces,
                                      double tol) {
  const FESystem& fe = model.fe();
  const QuadMesh& mesh = fe.mesh();
  const auto& dofs = fe.phase_dofs();
  const std::size_t n = mesh.n_nodes();
  std::vector<char> contact(n, 0);
  for (std::size_t q = 0; q < n; ++q) {
    if (dofs.is_constrained(static_cast<int>(q))) continue;
    contact[q] = s.phi[q] >= s.phi_prev[q] - tol;
  }
  std::vector<NodeClass> out(n, NodeClass::Free);
  for (std::size_t q = 0; q < n; ++q) {
    if (!contact[q]) continue;
    bool full = true;
    for (int cell : mesh.node_cells(static_cast<NodeId>(q))) {
      for (int v : dofs.cell_dofs(cell)) {
        if (!contact[v] || forces[v] < 0.0) full = false;
      }
      // hanging nodes on the cell's faces belong to the patch as well
      for (int f = 0; f < 4; ++f) {
        const NodeId h = mesh.face_hanging_node(cell, f);
        if (h >= 0 && !contact[h]) full = false;
      }
    }
    out[q] = full ? NodeClass::FullContact : NodeClass::SemiContact;
  }
  return out;
}

std::vector<double> interior_residual(const PhaseFieldModel& model, const SystemState& s, int cell) {
  const double gc = model.material().fracture_toughness();
  const double eps = model.eps();
  const detail::CellFields fields(model.fe(), gauss_tensor(3));
  std::vector<detail::PointFields> pts;
  fields.evaluate(cell, s, pts);
  std::vector<double> r(pts.size());
  for (std::size_t q = 0; q < pts.size(); ++q) {
    r[q] = gc / eps * (1.0 - pts[q].phi) - reaction(model, pts[q], cell) * pts[q].phi;
  }
  return r;
}

EstimatorReport compute_eta(const PhaseFieldModel& model, const SystemState& s, const std::vector<NodeClass>& classes,
                            const Vector& forces) {
  const FESystem& fe = model.fe();
  const QuadMesh& mesh = fe.mesh();
  const double gc = model.material().fracture_toughness();
  const double eps = model.eps();
  const double kappa = model.material().kappa();
  const std::size_t n_cells = mesh.n_active();
  const std::size_t n_nodes = mesh.n_nodes();
  if (classes.size() != n_nodes) throw std::invalid_argument("compute_eta: classification has wrong size");

  // cell quantities
  const detail::CellFields fields(fe, gauss_tensor(3));
  std::vector<detail::PointFields> pts;
  std::vector<double> r2(n_cells, 0.0);
  std::vector<double> alpha(n_cells, std::numeric_limits<double>::infinity());
  std::vector<double> mass(n_nodes, 0.0);  // integral of the nodal hat over its patch
  std::vector<double> gap(n_nodes, 0.0);   // integral of (obstacle - phi) times the hat
  for (std::size_t c = 0; c < n_cells; ++c) {
    const int cell = static_cast<int>(c);
    fields.evaluate(cell, s, pts);
    const auto fd = fe.phase_dofs().cell_dofs(cell);
    for (std::size_t q = 0; q < pts.size(); ++q) {
      const auto& f = pts[q];
      const double r = gc / eps * (1.0 - f.phi) - reaction(model, f, cell) * f.phi;
      r2[c] += f.weight * r * r;
      alpha[c] = std::min(alpha[c], gc / eps + (1.0 - kappa) * detail::stress_work(fe, f, model.cell_material(cell)));
      for (int i = 0; i < 4; ++i) {
        const double n = fields.phi_table().v(q, i);
        mass[fd[i]] += f.weight * n;
        gap[fd[i]] += f.weight * (f.phi_prev - f.phi) * n;
      }
    }
  }

  // side quantities: squared flux jumps (interior) and squared fluxes (boundary)
  const Quadrature1D g = gauss_1d(3);
  const auto& sides = mesh.sides();
  std::vector<double> side2(sides.size(), 0.0);
  const auto& pd = fe.phase_dofs();
  for (std::size_t k = 0; k < sides.size(); ++k) {
    const Side& sd = sides[k];
    const Point a = mesh.node(sd.a);
    const Point b = mesh.node(sd.b);
    for (std::size_t i = 0; i < g.points.size(); ++i) {
      const Point x = a + g.points[i] * (b - a);
      const Point gl = evaluate_gradient_on_cell(mesh, pd, s.phi, sd.left, x);
      double flux = gl.dot(sd.normal);
      if (!sd.on_boundary()) flux -= evaluate_gradient_on_cell(mesh, pd, s.phi, sd.right, x).dot(sd.normal);
      flux *= gc * eps;
      side2[k] += g.weights[i] * sd.length * flux * flux;
    }
  }

  EstimatorReport rep;
  rep.node_class = classes;
  rep.eta1_q.assign(n_nodes, 0.0);
  rep.eta2_q.assign(n_nodes, 0.0);
  rep.eta3_q.assign(n_nodes, 0.0);
  rep.eta4_q.assign(n_nodes, 0.0);
  rep.alpha_q.assign(n_nodes, 0.0);
  rep.weight_q.assign(n_nodes, 0.0);
  rep.cell_indicator_sq.assign(n_cells, 0.0);
  const double sqrt_gce = std::sqrt(gc * eps);
  double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
  for (std::size_t q = 0; q < n_nodes; ++q) {
    const Patch patch = mesh.patch_of(static_cast<NodeId>(q));
    double a = std::numeric_limits<double>::infinity();
    double res2 = 0.0;
    for (int c : patch.members) {
      a = std::min(a, alpha[c]);
      res2 += r2[c];
    }
    const double h_weight = patch.diameter / sqrt_gce;
    double w = h_weight;
    if (a > 0.0) {
      w = std::min(h_weight, 1.0 / std::sqrt(a));
    } else {
      ++rep.negative_alpha_nodes;
    }
    rep.alpha_q[q] = a;
    rep.weight_q[q] = w;

    if (classes[q] != NodeClass::FullContact) {
      double jump2 = 0.0;
      double bnd2 = 0.0;
      for (int k : patch.interior_sides) jump2 += side2[k];
      for (int k : patch.boundary_sides) bnd2 += side2[k];
      const double face_weight = std::sqrt(w) / std::sqrt(sqrt_gce);
      rep.eta1_q[q] = w * std::sqrt(res2);
      rep.eta2_q[q] = face_weight * std::sqrt(jump2);
      rep.eta3_q[q] = face_weight * std::sqrt(bnd2);
    }
    if (classes[q] == NodeClass::SemiContact && mass[q] > 0.0) {
      const double s_q = forces[q] / mass[q];
      rep.eta4_q[q] = std::sqrt(std::max(0.0, s_q * gap[q]));
    }
    const double e1 = rep.eta1_q[q] * rep.eta1_q[q];
    const double e2 = rep.eta2_q[q] * rep.eta2_q[q];
    const double e3 = rep.eta3_q[q] * rep.eta3_q[q];
    const double e4 = rep.eta4_q[q] * rep.eta4_q[q];
    s1 += e1;
    s2 += e2;
    s3 += e3;
    s4 += e4;
    const double share = (e1 + e2 + e3 + e4) / static_cast<double>(patch.members.size());
    for (int c : patch.members) rep.cell_indicator_sq[c] += share;
  }
  rep.eta1 = std::sqrt(s1);
  rep.eta2 = std::sqrt(s2);
  rep.eta3 = std::sqrt(s3);
  rep.eta4 = std::sqrt(s4);
  rep.eta_total = rep.eta1 + rep.eta2 + rep.eta3 + rep.eta4;
  return rep;
}

EstimatorReport estimate(const PhaseFieldModel& model, const SystemState& s) {
  const Vector forces = constraining_force(model, s);
  return compute_eta(model, s, classify_nodes(model, s, forces), forces);
}

double energy_norm(const PhaseFieldModel& model, const SystemState& s, const Vector& zeta) {
  const FESystem& fe = model.fe();
  const double gc = model.material().fracture_toughness();
  const double eps = model.eps();
  const double kappa = model.material().kappa();
  const detail::CellFields fields(fe, gauss_tensor(3));
  std::vector<detail::PointFields> pts;
  double total = 0.0;
  for (std::size_t c = 0; c < fe.mesh().n_active(); ++c) {
    const int cell = static_cast<int>(c);
    fields.evaluate(cell, s, pts);
    for (std::size_t q = 0; q < pts.size(); ++q) {
      const double weight = gc / eps + (1.0 - kappa) * detail::stress_work(fe, pts[q], model.cell_material(cell));
      if (weight < 0.0) throw std::domain_error("energy_norm: negative weight G_c/eps + (1-kappa) sigma:e");
      const ScalarAtPoint z = q1_at(fields, fe, zeta, cell, q);
      total += pts[q].weight * (gc * eps * z.grad.squaredNorm() + weight * z.value * z.value);
    }
  }
  return std::sqrt(total);
}

void EstimatorReport::write_csv(std::ostream& out, const QuadMesh& mesh) const {
  out << "node,x,y,class,eta1,eta2,eta3,eta4\n";
  out << std::setprecision(17) << std::scientific;
  for (std::size_t q = 0; q < node_class.size(); ++q) {
    const Point& x = mesh.node(static_cast<NodeId>(q));
    out << q << ',' << x.x() << ',' << x.y() << ',' << to_string(node_class[q]) << ',' << eta1_q[q] << ','
        << eta2_q[q] << ',' << eta3_q[q] << ',' << eta4_q[q] << '\n';
  }
}

}  // namespace fracfield
