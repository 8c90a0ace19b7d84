#include "fracfield/rt.hpp"

#include <stdexcept>
#include <map>
#include <tuple>

#include <Eigen/LU>

#include "fracfield/quadrature.hpp"
#include "fracfield/shape.hpp"

namespace fracfield {

namespace {

// monomial exponents per component: x-component x^a y^b (a<=2, b<=1), y-component (a<=1, b<=2)
constexpr int kExpX[6][2] = {{0, 0}, {1, 0}, {2, 0}, {0, 1}, {1, 1}, {2, 1}};
constexpr int kExpY[6][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}, {1, 2}};

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

double dpow(double x, int n) { return n == 0 ? 0.0 : n * ipow(x, n - 1); }

}  // namespace

const RTReference& RTReference::instance() {
  static const RTReference ref;
  return ref;
}

std::array<double, 12> RTReference::dofs(const std::function<Point(const Point&)>& v) const {
  const Quadrature1D g = gauss_1d(3);
  const Quadrature2D q = gauss_tensor(3);
  std::array<double, 12> d{};
  for (std::size_t k = 0; k < g.points.size(); ++k) {
    const double s = g.points[k];
    const double w = g.weights[k];
    const double vx0 = v({0.0, s}).x();
    const double vx1 = v({1.0, s}).x();
    const double vy0 = v({s, 0.0}).y();
    const double vy1 = v({s, 1.0}).y();
    d[0] += w * vx0;
    d[1] += w * vx0 * s;
    d[2] += w * vx1;
    d[3] += w * vx1 * s;
    d[4] += w * vy0;
    d[5] += w * vy0 * s;
    d[6] += w * vy1;
    d[7] += w * vy1 * s;
  }
  for (std::size_t k = 0; k < q.size(); ++k) {
    const Point& x = q.points[k];
    const Point val = v(x);
    d[8] += q.weights[k] * val.x();
    d[9] += q.weights[k] * val.x() * x.y();
    d[10] += q.weights[k] * val.y();
    d[11] += q.weights[k] * val.y() * x.x();
  }
  return d;
}

RTReference::RTReference() {
  // Vandermonde: functionals applied to the 12 component monomials
  Eigen::Matrix<double, 12, 12> vdm;
  for (int m = 0; m < 12; ++m) {
    const bool xcomp = m < 6;
    const int a = xcomp ? kExpX[m][0] : kExpY[m - 6][0];
    const int b = xcomp ? kExpX[m][1] : kExpY[m - 6][1];
    const auto d = dofs([&](const Point& p) {
      const double val = ipow(p.x(), a) * ipow(p.y(), b);
      return xcomp ? Point(val, 0.0) : Point(0.0, val);
    });
    for (int i = 0; i < 12; ++i) vdm(i, m) = d[i];
  }
  // basis i has its monomial coefficients in column i of vdm^{-1}
  const Eigen::Matrix<double, 12, 12> inv = vdm.fullPivLu().inverse();
  for (int i = 0; i < 12; ++i) {
    for (int m = 0; m < 6; ++m) {
      xcoef_[i][m] = inv(m, i);
      ycoef_[i][m] = inv(6 + m, i);
    }
  }

  for (int j = 0; j < 18; ++j) {
    const int c = j / 9;
    const int node = j % 9;
    const auto d = dofs([&](const Point& p) {
      const double val = shape_value(Element::Q2, node, p);
      return c == 0 ? Point(val, 0.0) : Point(0.0, val);
    });
    for (int i = 0; i < 12; ++i) q2_dofs_(i, j) = d[i];
  }
}

Point RTReference::value(int i, const Point& ref) const {
  Point v = Point::Zero();
  for (int m = 0; m < 6; ++m) {
    v.x() += xcoef_[i][m] * ipow(ref.x(), kExpX[m][0]) * ipow(ref.y(), kExpX[m][1]);
    v.y() += ycoef_[i][m] * ipow(ref.x(), kExpY[m][0]) * ipow(ref.y(), kExpY[m][1]);
  }
  return v;
}

Point RTReference::div_parts(int i, const Point& ref) const {
  Point d = Point::Zero();
  for (int m = 0; m < 6; ++m) {
    d.x() += xcoef_[i][m] * dpow(ref.x(), kExpX[m][0]) * ipow(ref.y(), kExpX[m][1]);
    d.y() += ycoef_[i][m] * ipow(ref.x(), kExpY[m][0]) * dpow(ref.y(), kExpY[m][1]);
  }
  return d;
}

Eigen::Matrix<double, 12, 1> rt_piola_scaling(double hx, double hy) {
  Eigen::Matrix<double, 12, 1> s;
  s << hy, hy, hy, hy, hx, hx, hx, hx, hy, hy, hx, hx;
  return s;
}

RTInterpolatedTable::RTInterpolatedTable(std::span<const Point> points) : n_points(points.size()) {
  const RTReference& ref = RTReference::instance();
  value.assign(n_points * 18, Point::Zero());
  div_parts.assign(n_points * 18, Point::Zero());
  for (std::size_t q = 0; q < n_points; ++q) {
    for (int i = 0; i < 12; ++i) {
      const Point bv = ref.value(i, points[q]);
      const Point bd = ref.div_parts(i, points[q]);
      for (int j = 0; j < 18; ++j) {
        const double c = ref.q2_dofs()(i, j);
        if (c == 0.0) continue;
        value[q * 18 + j] += c * bv;
        div_parts[q * 18 + j] += c * bd;
      }
    }
  }
}

RTSpace::RTSpace(std::shared_ptr<const QuadMesh> mesh) : mesh_(std::move(mesh)) {
  const QuadMesh& m = *mesh_;
  cell_faces_.resize(m.n_active());
  // a face is identified by its lattice start point, orientation and level
  std::map<std::tuple<std::int64_t, std::int64_t, int, int>, int> face_of;
  for (std::size_t k = 0; k < m.n_active(); ++k) {
    const int cell = static_cast<int>(k);
    const auto o = m.cell_lattice_origin(cell);
    const std::int64_t step = QuadMesh::lattice_step(m.cell_level(cell));
    const QuadMesh::LatticePoint starts[4] = {{o.x, o.y}, {o.x + step, o.y}, {o.x, o.y}, {o.x, o.y + step}};
    for (int f = 0; f < 4; ++f) {
      const auto key = std::make_tuple(starts[f].x, starts[f].y, f < 2 ? 0 : 1, m.cell_level(cell));
      const auto [it, inserted] = face_of.try_emplace(key, static_cast<int>(n_faces_));
      if (inserted) ++n_faces_;
      cell_faces_[k][f] = it->second;
    }
  }
}

std::array<int, 12> RTSpace::cell_dofs(int active) const {
  std::array<int, 12> d{};
  for (int f = 0; f < 4; ++f) {
    d[2 * f] = 2 * cell_faces_[active][f];
    d[2 * f + 1] = 2 * cell_faces_[active][f] + 1;
  }
  const int base = static_cast<int>(2 * n_faces_) + 4 * active;
  for (int i = 0; i < 4; ++i) d[8 + i] = base + i;
  return d;
}

Point RTSpace::evaluate(const Vector& coeffs, int active, const Point& x) const {
  const Rect b = mesh_->cell_box(active);
  const Point ref((x.x() - b.x0) / b.width(), (x.y() - b.y0) / b.height());
  const auto d = cell_dofs(active);
  Point v = Point::Zero();
  for (int i = 0; i < 12; ++i) v += coeffs[d[i]] * RTReference::instance().value(i, ref);
  // contravariant Piola with J = diag(hx, hy)
  return {v.x() / b.height(), v.y() / b.width()};
}

double RTSpace::divergence(const Vector& coeffs, int active, const Point& x) const {
  const Rect b = mesh_->cell_box(active);
  const Point ref((x.x() - b.x0) / b.width(), (x.y() - b.y0) / b.height());
  const auto d = cell_dofs(active);
  double div = 0.0;
  for (int i = 0; i < 12; ++i) {
    const Point p = RTReference::instance().div_parts(i, ref);
    div += coeffs[d[i]] * (p.x() + p.y());
  }
  return div / b.area();
}

Vector interpolate_rt(const RTSpace& rt, const ScalarDofHandler& q2, const Vector& ux, const Vector& uy) {
  if (q2.degree() != 2) throw std::invalid_argument("interpolate_rt: expects a Q2 displacement space");
  const QuadMesh& m = rt.mesh();
  const RTLocalMatrix& dq = RTReference::instance().q2_dofs();
  Vector out = Vector::Zero(static_cast<int>(rt.n_dofs()));
  Eigen::Matrix<double, 18, 1> local;
  for (std::size_t k = 0; k < m.n_active(); ++k) {
    const int cell = static_cast<int>(k);
    const auto cd = q2.cell_dofs(cell);
    for (int j = 0; j < 9; ++j) {
      local[j] = ux[cd[j]];
      local[9 + j] = uy[cd[j]];
    }
    const Rect b = m.cell_box(cell);
    const Eigen::Matrix<double, 12, 1> c = rt_piola_scaling(b.width(), b.height()).cwiseProduct(dq * local);
    const auto d = rt.cell_dofs(cell);
    for (int i = 0; i < 12; ++i) out[d[i]] = c[i];
  }
  return out;
}

}  // namespace fracfield
