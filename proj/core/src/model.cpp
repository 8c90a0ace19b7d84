#include "fracfield/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fracfield {

LocalMaterial lame_parameters(double youngs_modulus, double poisson_ratio) {
  const double e = youngs_modulus;
  const double nu = poisson_ratio;
  LocalMaterial m;
  m.mu = e / (2.0 * (1.0 + nu));
  if (nu >= 0.5) {
    m.incompressible = true;
    m.lambda = std::numeric_limits<double>::infinity();
    m.inv_lambda = 0.0;
  } else {
    m.lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    m.inv_lambda = nu > 0.0 ? (1.0 + nu) * (1.0 - 2.0 * nu) / (e * nu) : std::numeric_limits<double>::infinity();
  }
  return m;
}

MaterialMap::MaterialMap(double youngs_modulus, double poisson_ratio, double fracture_toughness, double kappa)
    : youngs_(youngs_modulus), nu_(poisson_ratio), gc_(fracture_toughness), kappa_(kappa) {
  if (!(youngs_ > 0.0)) throw std::invalid_argument("MaterialMap: Young's modulus must be positive");
  if (!(gc_ > 0.0)) throw std::invalid_argument("MaterialMap: fracture toughness must be positive");
  if (!(kappa_ > 0.0)) throw std::invalid_argument("MaterialMap: kappa must be positive");
  if (!(nu_ >= 0.0 && nu_ <= 0.5)) throw std::invalid_argument("MaterialMap: Poisson ratio outside [0, 0.5]");
}

void MaterialMap::add_region(const Rect& box, double poisson_ratio) {
  if (!(poisson_ratio >= 0.0 && poisson_ratio <= 0.5)) {
    throw std::invalid_argument("MaterialMap: Poisson ratio outside [0, 0.5]");
  }
  regions_.emplace_back(box, poisson_ratio);
}

double MaterialMap::poisson_ratio_at(const Point& x) const {
  double nu = nu_;
  for (const auto& [box, value] : regions_) {
    if (box.contains(x)) nu = value;
  }
  return nu;
}

std::vector<LocalMaterial> MaterialMap::per_cell(const QuadMesh& mesh) const {
  std::vector<LocalMaterial> out(mesh.n_active());
  for (std::size_t k = 0; k < mesh.n_active(); ++k) out[k] = at(mesh.cell_center(static_cast<int>(k)));
  return out;
}

bool MaterialMap::any_incompressible(const QuadMesh& mesh) const {
  for (std::size_t k = 0; k < mesh.n_active(); ++k) {
    if (poisson_ratio_at(mesh.cell_center(static_cast<int>(k))) >= 0.5) return true;
  }
  return false;
}

void MaterialMap::check_alignment(const QuadMesh& mesh) const {
  for (std::size_t k = 0; k < mesh.n_active(); ++k) {
    const Rect c = mesh.cell_box(static_cast<int>(k));
    const double tol = 1e-12 * std::max(c.width(), c.height());
    for (const auto& [box, nu] : regions_) {
      if (!c.overlaps_interior(box)) continue;
      const bool inside = c.x0 >= box.x0 - tol && c.x1 <= box.x1 + tol && c.y0 >= box.y0 - tol && c.y1 <= box.y1 + tol;
      if (!inside) {
        throw std::invalid_argument("MaterialMap: a material interface cuts through an active cell; "
                                    "align region boxes with the coarse mesh lines");
      }
    }
  }
}

PressureField PressureField::constant(double value) {
  PressureField p;
  p.constant_ = value;
  return p;
}

PressureField PressureField::bump() {
  PressureField p;
  p.bump_ = true;
  return p;
}

double PressureField::bump_f(double x) {
  if (x >= 0.0 && x < 1.0) return -0.002 * x * x * (x - 1.5);
  if (x >= 1.0 && x < 2.0) return 0.001;
  if (x >= 2.0 && x < 3.0) return 0.002 * (x - 3.0) * (x - 3.0) * (x - 1.5);
  return 0.0;
}

double PressureField::bump_f_prime(double x) {
  if (x >= 0.0 && x < 1.0) return -0.002 * (3.0 * x * x - 3.0 * x);
  if (x >= 2.0 && x < 3.0) return 0.002 * (2.0 * (x - 3.0) * (x - 1.5) + (x - 3.0) * (x - 3.0));
  return 0.0;
}

double PressureField::bump_g(double y) {
  const double a = std::abs(y);
  if (a < 0.5) return 1.0;
  if (a < 1.5) return 2.0 * (a - 1.5) * (a - 1.5) * a;
  return 0.0;
}

double PressureField::bump_g_prime(double y) {
  const double a = std::abs(y);
  if (a < 0.5 || a >= 1.5) return 0.0;
  const double da = 2.0 * (2.0 * (a - 1.5) * a + (a - 1.5) * (a - 1.5));
  return y < 0.0 ? -da : da;
}

double PressureField::value(const Point& x) const {
  return bump_ ? bump_f(x.x()) * bump_g(x.y()) : constant_;
}

Point PressureField::gradient(const Point& x) const {
  if (!bump_) return Point::Zero();
  return {bump_f_prime(x.x()) * bump_g(x.y()), bump_f(x.x()) * bump_g_prime(x.y())};
}

Tensor2 stress_primal(const Tensor2& strain, const LocalMaterial& mat) {
  if (mat.incompressible) throw std::invalid_argument("stress_primal: lambda is infinite at nu = 0.5");
  return 2.0 * mat.mu * strain + mat.lambda * strain.trace() * Tensor2::Identity();
}

Tensor2 stress_mixed(const Tensor2& strain, double p, const LocalMaterial& mat) {
  return 2.0 * mat.mu * strain + p * Tensor2::Identity();
}

double degradation(double phi, double kappa) { return (1.0 - kappa) * phi * phi + kappa; }

SystemState SystemState::zeros(const FESystem& fe) {
  SystemState s;
  s.u = Vector::Zero(static_cast<int>(fe.n_u()));
  s.p = Vector::Zero(static_cast<int>(fe.n_p()));
  s.phi = Vector::Zero(static_cast<int>(fe.n_phi()));
  s.tau = Vector::Zero(static_cast<int>(fe.n_phi()));
  s.phi_prev = Vector::Zero(static_cast<int>(fe.n_phi()));
  return s;
}

Vector SystemState::pack(const FESystem& fe) const {
  Vector raw(static_cast<int>(fe.n_raw()));
  raw << u, p, phi;
  return raw;
}

void SystemState::unpack(const FESystem& fe, const Vector& raw) {
  u = raw.head(static_cast<int>(fe.n_u()));
  p = raw.segment(static_cast<int>(fe.raw_offset_p()), static_cast<int>(fe.n_p()));
  phi = raw.tail(static_cast<int>(fe.n_phi()));
}

// ---------------------------------------------------------------------------------------------

CondensedAssembler::CondensedAssembler(const FESystem& fe, std::size_t row_begin, std::size_t row_end,
                                       std::size_t col_begin, std::size_t col_end)
    : fe_(fe), row_begin_(row_begin), row_end_(row_end), col_begin_(col_begin), col_end_(col_end) {
  const QuadMesh& mesh = fe.mesh();
  const std::size_t n_cells = mesh.n_active();
  const std::size_t n_cols = col_end - col_begin;

  // free rows and columns touched by each cell
  std::vector<int> row_offsets{0};
  std::vector<int> rows;
  std::vector<int> col_count(n_cols + 1, 0);
  std::vector<std::vector<int>> cell_cols(n_cells);
  std::vector<int> dofs;
  std::vector<int> buf_rows;
  for (std::size_t k = 0; k < n_cells; ++k) {
    fe.cell_raw_dofs(static_cast<int>(k), dofs);
    buf_rows.clear();
    auto& cols = cell_cols[k];
    for (int raw : dofs) {
      for (const auto& e : fe.expansion(raw)) {
        const auto f = static_cast<std::size_t>(e.index);
        if (f >= row_begin && f < row_end) buf_rows.push_back(e.index - static_cast<int>(row_begin));
        if (f >= col_begin && f < col_end) cols.push_back(e.index - static_cast<int>(col_begin));
      }
    }
    std::sort(buf_rows.begin(), buf_rows.end());
    buf_rows.erase(std::unique(buf_rows.begin(), buf_rows.end()), buf_rows.end());
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    rows.insert(rows.end(), buf_rows.begin(), buf_rows.end());
    row_offsets.push_back(static_cast<int>(rows.size()));
    for (int c : cols) ++col_count[c + 1];
  }
  // column -> cells incidence
  for (std::size_t c = 0; c < n_cols; ++c) col_count[c + 1] += col_count[c];
  std::vector<int> col_cells(col_count.back());
  {
    std::vector<int> fill(col_count.begin(), col_count.end() - 1);
    for (std::size_t k = 0; k < n_cells; ++k) {
      for (int c : cell_cols[k]) col_cells[fill[c]++] = static_cast<int>(k);
    }
  }
  cell_cols.clear();
  cell_cols.shrink_to_fit();

  std::vector<int> outer(n_cols + 1, 0);
  std::vector<int> inner;
  std::vector<int> gather;
  for (std::size_t c = 0; c < n_cols; ++c) {
    gather.clear();
    for (int i = col_count[c]; i < col_count[c + 1]; ++i) {
      const int k = col_cells[i];
      gather.insert(gather.end(), rows.begin() + row_offsets[k], rows.begin() + row_offsets[k + 1]);
    }
    std::sort(gather.begin(), gather.end());
    gather.erase(std::unique(gather.begin(), gather.end()), gather.end());
    inner.insert(inner.end(), gather.begin(), gather.end());
    outer[c + 1] = static_cast<int>(inner.size());
  }

  matrix_.resize(static_cast<int>(row_end - row_begin), static_cast<int>(n_cols));
  matrix_.resizeNonZeros(static_cast<int>(inner.size()));
  std::copy(outer.begin(), outer.end(), matrix_.outerIndexPtr());
  std::copy(inner.begin(), inner.end(), matrix_.innerIndexPtr());
  zero();
}

void CondensedAssembler::zero() { std::fill_n(matrix_.valuePtr(), matrix_.nonZeros(), 0.0); }

void CondensedAssembler::add(int row, int col, double value) {
  const int* begin = matrix_.innerIndexPtr() + matrix_.outerIndexPtr()[col];
  const int* end = matrix_.innerIndexPtr() + matrix_.outerIndexPtr()[col + 1];
  const int* it = std::lower_bound(begin, end, row);
  matrix_.valuePtr()[it - matrix_.innerIndexPtr()] += value;
}

void CondensedAssembler::add_local(std::span<const int> dofs, const Eigen::MatrixXd& k, int local_row_begin,
                                   int local_row_end, int local_col_begin, int local_col_end) {
  const int rb = static_cast<int>(row_begin_);
  const int re = static_cast<int>(row_end_);
  const int cb = static_cast<int>(col_begin_);
  const int ce = static_cast<int>(col_end_);
  for (int j = local_col_begin; j < local_col_end; ++j) {
    const auto cexp = fe_.expansion(dofs[j]);
    for (const auto& cj : cexp) {
      if (cj.index < cb || cj.index >= ce) continue;
      for (int i = local_row_begin; i < local_row_end; ++i) {
        const double kij = k(i, j);
        if (kij == 0.0) continue;
        for (const auto& ri : fe_.expansion(dofs[i])) {
          if (ri.index < rb || ri.index >= re) continue;
          add(ri.index - rb, cj.index - cb, ri.weight * cj.weight * kij);
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------------------------

PhaseFieldModel::PhaseFieldModel(const FESystem& fe, const MaterialMap& material, const PressureField& pressure,
                                 double eps)
    : fe_(fe),
      material_(material),
      pressure_(pressure),
      eps_(eps),
      quad_(gauss_tensor(3)),
      u_tab_(fe.displacement_dofs().element(), quad_.points),
      p_tab_(Element::P1Disc, quad_.points),
      phi_tab_(Element::Q1, quad_.points),
      cell_material_(material.per_cell(fe.mesh())) {
  if (!(eps > 0.0)) throw std::invalid_argument("PhaseFieldModel: eps must be positive");
  for (const auto& m : cell_material_) {
    if (fe.form() == FormKind::Primal && m.incompressible) {
      throw std::invalid_argument("PhaseFieldModel: the primal form cannot represent nu = 0.5; use a mixed form");
    }
    if (fe.form() != FormKind::Primal && std::isinf(m.inv_lambda)) {
      throw std::invalid_argument("PhaseFieldModel: the mixed form needs nu > 0");
    }
  }
  if (fe.form() == FormKind::MixedRobust) rt_tab_.emplace(quad_.points);
}

void PhaseFieldModel::local(int cell, const SystemState& s, const LocalRequest& req, Eigen::VectorXd& r,
                            Eigen::MatrixXd& k) const {
  const QuadMesh& mesh = fe_.mesh();
  const int nu = fe_.displacement_dofs().dofs_per_cell();
  const int np = fe_.has_pressure() ? 3 : 0;
  const int ou = 0;
  const int op = 2 * nu;
  const int of = 2 * nu + np;
  const int n = of + 4;
  const int rb = req.row_begin;
  const int re = req.row_end < 0 ? n : req.row_end;
  const bool mixed = fe_.has_pressure();
  const bool robust = fe_.form() == FormKind::MixedRobust;

  if (req.residual) r.setZero(n);
  if (req.jacobian) k.setZero(n, n);

  const Rect box = mesh.cell_box(cell);
  const double hx = box.width();
  const double hy = box.height();
  const LocalMaterial& mat = cell_material_[cell];
  const double kappa = material_.kappa();
  const double gc = material_.fracture_toughness();

  const auto ud = fe_.displacement_dofs().cell_dofs(cell);
  const auto fd = fe_.phase_dofs().cell_dofs(cell);
  const int nuc = static_cast<int>(fe_.n_u_component());

  // local coefficients
  Eigen::VectorXd cux(nu), cuy(nu);
  for (int a = 0; a < nu; ++a) {
    cux[a] = s.u[ud[a]];
    cuy[a] = s.u[nuc + ud[a]];
  }
  double cp[3] = {0.0, 0.0, 0.0};
  if (mixed) {
    for (int kk = 0; kk < 3; ++kk) cp[kk] = s.p[3 * cell + kk];
  }
  double cf[4];
  double cfp[4];
  for (int i = 0; i < 4; ++i) {
    cf[i] = s.phi[fd[i]];
    cfp[i] = s.phi_prev[fd[i]];
  }

  auto in_rows = [&](int lo, int hi) { return hi > rb && lo < re; };
  const bool rows_u = in_rows(ou, op);
  const bool rows_p = in_rows(op, of);
  const bool rows_f = in_rows(of, n);

  std::vector<Point> gu(nu);
  for (std::size_t q = 0; q < quad_.size(); ++q) {
    const double w = quad_.weights[q] * hx * hy;
    const Point x(box.x0 + quad_.points[q].x() * hx, box.y0 + quad_.points[q].y() * hy);

    Tensor2 grad_u = Tensor2::Zero();  // grad_u(c, j) = d u_c / d x_j
    Point uval = Point::Zero();
    for (int a = 0; a < nu; ++a) {
      gu[a] = u_tab_.grad(q, a, hx, hy);
      const double na = u_tab_.v(q, a);
      uval.x() += cux[a] * na;
      uval.y() += cuy[a] * na;
      grad_u.row(0) += cux[a] * gu[a].transpose();
      grad_u.row(1) += cuy[a] * gu[a].transpose();
    }
    const Tensor2 e = 0.5 * (grad_u + grad_u.transpose());
    const double tre = e.trace();
    double pval = 0.0;
    if (mixed) {
      for (int kk = 0; kk < 3; ++kk) pval += cp[kk] * p_tab_.v(q, kk);
    }
    double phi = 0.0;
    double phip = 0.0;
    Point gphi = Point::Zero();
    Point gm[4];
    for (int i = 0; i < 4; ++i) {
      gm[i] = phi_tab_.grad(q, i, hx, hy);
      phi += cf[i] * phi_tab_.v(q, i);
      phip += cfp[i] * phi_tab_.v(q, i);
      gphi += cf[i] * gm[i];
    }
    const double pg = pressure_.value(x);
    const Point gpg = pressure_.gradient(x);
    const double gdeg = degradation(phip, kappa);
    const double phip2 = phip * phip;
    const Tensor2 sigma = mixed ? stress_mixed(e, pval, mat) : stress_primal(e, mat);
    const double sdote = (sigma.array() * e.array()).sum();
    const double lam = mixed ? 0.0 : mat.lambda;

    // displacement rows
    if (rows_u) {
      for (int c = 0; c < 2; ++c) {
        for (int a = 0; a < nu; ++a) {
          const int row = ou + c * nu + a;
          if (row < rb || row >= re) continue;
          const double na = u_tab_.v(q, a);
          if (req.residual) {
            double load;
            if (robust) {
              const int j = c * 9 + a;
              load = phip2 * pg * rt_tab_->div(q, j, hx, hy) + phip2 * gpg.dot(rt_tab_->v(q, j));
            } else {
              load = phip2 * pg * gu[a][c] + phip2 * gpg[c] * na;
            }
            r[row] += w * (gdeg * sigma.row(c).dot(gu[a]) + load);
          }
          if (req.jacobian) {
            for (int d = 0; d < 2; ++d) {
              for (int b = 0; b < nu; ++b) {
                double val = mat.mu * (gu[a][d] * gu[b][c]);
                if (c == d) val += mat.mu * gu[a].dot(gu[b]);
                val += lam * gu[a][c] * gu[b][d];
                k(row, ou + d * nu + b) += w * gdeg * val;
              }
            }
            if (mixed) {
              for (int kk = 0; kk < 3; ++kk) k(row, op + kk) += w * gdeg * p_tab_.v(q, kk) * gu[a][c];
            }
          }
        }
      }
    }

    // pressure rows
    if (mixed && rows_p) {
      for (int kk = 0; kk < 3; ++kk) {
        const int row = op + kk;
        if (row < rb || row >= re) continue;
        const double pk = p_tab_.v(q, kk);
        if (req.residual) r[row] += w * (tre - mat.inv_lambda * pval) * pk;
        if (req.jacobian) {
          for (int d = 0; d < 2; ++d) {
            for (int b = 0; b < nu; ++b) k(row, ou + d * nu + b) += w * pk * gu[b][d];
          }
          for (int l = 0; l < 3; ++l) k(row, op + l) -= w * mat.inv_lambda * pk * p_tab_.v(q, l);
        }
      }
    }

    // phase-field rows
    if (rows_f) {
      const double reaction = (1.0 - kappa) * sdote + 2.0 * pg * tre + 2.0 * gpg.dot(uval);
      for (int i = 0; i < 4; ++i) {
        const int row = of + i;
        if (row < rb || row >= re) continue;
        const double mi = phi_tab_.v(q, i);
        if (req.residual) {
          r[row] += w * ((reaction * phi - gc / eps_ * (1.0 - phi)) * mi + gc * eps_ * gphi.dot(gm[i]));
        }
        if (req.jacobian) {
          for (int j = 0; j < 4; ++j) {
            k(row, of + j) += w * ((reaction + gc / eps_) * mi * phi_tab_.v(q, j) + gc * eps_ * gm[i].dot(gm[j]));
          }
          for (int d = 0; d < 2; ++d) {
            for (int b = 0; b < nu; ++b) {
              const double nb = u_tab_.v(q, b);
              double ds = 4.0 * mat.mu * e.row(d).dot(gu[b]);
              ds += mixed ? pval * gu[b][d] : 2.0 * mat.lambda * tre * gu[b][d];
              const double val = (1.0 - kappa) * ds + 2.0 * pg * gu[b][d] + 2.0 * gpg[d] * nb;
              k(row, ou + d * nu + b) += w * phi * mi * val;
            }
          }
          if (mixed) {
            for (int kk = 0; kk < 3; ++kk) k(row, op + kk) += w * phi * mi * (1.0 - kappa) * tre * p_tab_.v(q, kk);
          }
        }
      }
    }
  }
}

Vector PhaseFieldModel::residual(const SystemState& s) const {
  Vector out = Vector::Zero(static_cast<int>(fe_.n_raw()));
  Eigen::VectorXd r;
  Eigen::MatrixXd k;
  std::vector<int> dofs;
  for (std::size_t c = 0; c < fe_.mesh().n_active(); ++c) {
    local(static_cast<int>(c), s, {true, false, 0, -1}, r, k);
    fe_.cell_raw_dofs(static_cast<int>(c), dofs);
    for (int i = 0; i < r.size(); ++i) out[dofs[i]] += r[i];
  }
  return out;
}

SparseMatrix PhaseFieldModel::jacobian(const SystemState& s) const {
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd r;
  Eigen::MatrixXd k;
  std::vector<int> dofs;
  for (std::size_t c = 0; c < fe_.mesh().n_active(); ++c) {
    local(static_cast<int>(c), s, {false, true, 0, -1}, r, k);
    fe_.cell_raw_dofs(static_cast<int>(c), dofs);
    for (int j = 0; j < k.cols(); ++j) {
      for (int i = 0; i < k.rows(); ++i) {
        if (k(i, j) != 0.0) trips.emplace_back(dofs[i], dofs[j], k(i, j));
      }
    }
  }
  SparseMatrix out(static_cast<int>(fe_.n_raw()), static_cast<int>(fe_.n_raw()));
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

DisplacementSystem PhaseFieldModel::displacement_system(const Vector& phi_prev) const {
  const std::size_t nup = fe_.n_free_up();
  if (!up_up_) up_up_ = std::make_unique<CondensedAssembler>(fe_, 0, nup, 0, nup);
  up_up_->zero();

  SystemState s = SystemState::zeros(fe_);
  s.phi_prev = phi_prev;
  const int nloc = 2 * fe_.displacement_dofs().dofs_per_cell() + (fe_.has_pressure() ? 3 : 0);
  Vector load = Vector::Zero(static_cast<int>(nup));
  Eigen::VectorXd r;
  Eigen::MatrixXd k;
  std::vector<int> dofs;
  for (std::size_t c = 0; c < fe_.mesh().n_active(); ++c) {
    local(static_cast<int>(c), s, {true, true, 0, nloc}, r, k);
    fe_.cell_raw_dofs(static_cast<int>(c), dofs);
    up_up_->add_local(dofs, k, 0, nloc, 0, nloc);
    for (int i = 0; i < nloc; ++i) {
      for (const auto& e : fe_.expansion(dofs[i])) {
        if (static_cast<std::size_t>(e.index) < nup) load[e.index] += e.weight * r[i];
      }
    }
  }

  DisplacementSystem out;
  bool all_incompressible = fe_.has_pressure();
  for (const auto& m : cell_material_) all_incompressible = all_incompressible && m.incompressible;
  if (!all_incompressible) {
    out.matrix = up_up_->matrix();
    out.load = std::move(load);
    return out;
  }

  // border with the pressure mean: the first P1 basis function is the constant one
  const SparseMatrix& a = up_up_->matrix();
  const int n = static_cast<int>(nup);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(a.nonZeros() + 2 * fe_.mesh().n_active());
  for (int j = 0; j < a.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(a, j); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
  }
  for (std::size_t c = 0; c < fe_.mesh().n_active(); ++c) {
    const int f = fe_.free_index(static_cast<int>(fe_.raw_offset_p() + 3 * c));
    const double area = fe_.mesh().cell_box(static_cast<int>(c)).area();
    trips.emplace_back(n, f, area);
    trips.emplace_back(f, n, area);
  }
  out.matrix.resize(n + 1, n + 1);
  out.matrix.setFromTriplets(trips.begin(), trips.end());
  out.load = Vector::Zero(n + 1);
  out.load.head(n) = load;
  out.bordered = true;
  return out;
}

PhaseSystem PhaseFieldModel::phase_system(const SystemState& s) const {
  const std::size_t nup = fe_.n_free_up();
  const std::size_t nf = fe_.n_free();
  if (!phi_phi_) phi_phi_ = std::make_unique<CondensedAssembler>(fe_, nup, nf, nup, nf);
  if (!phi_up_) phi_up_ = std::make_unique<CondensedAssembler>(fe_, nup, nf, 0, nup);
  phi_phi_->zero();
  phi_up_->zero();

  const int nloc_up = 2 * fe_.displacement_dofs().dofs_per_cell() + (fe_.has_pressure() ? 3 : 0);
  const int nloc = nloc_up + 4;
  Vector res = Vector::Zero(static_cast<int>(nf - nup));
  Eigen::VectorXd r;
  Eigen::MatrixXd k;
  std::vector<int> dofs;
  for (std::size_t c = 0; c < fe_.mesh().n_active(); ++c) {
    local(static_cast<int>(c), s, {true, true, nloc_up, nloc}, r, k);
    fe_.cell_raw_dofs(static_cast<int>(c), dofs);
    phi_phi_->add_local(dofs, k, nloc_up, nloc, nloc_up, nloc);
    phi_up_->add_local(dofs, k, nloc_up, nloc, 0, nloc_up);
    for (int i = nloc_up; i < nloc; ++i) {
      for (const auto& e : fe_.expansion(dofs[i])) res[e.index - static_cast<int>(nup)] += e.weight * r[i];
    }
  }
  return {phi_phi_->matrix(), phi_up_->matrix(), std::move(res)};
}

namespace {

Vector checked_residual(FormKind expected, const SystemState& s, const FESystem& fe, const MaterialMap& mat,
                        const PressureField& pg, double eps) {
  if (fe.form() != expected) throw std::invalid_argument("residual: FESystem built for a different form");
  return PhaseFieldModel(fe, mat, pg, eps).residual(s);
}

}  // namespace

Vector residual_primal(const SystemState& s, const FESystem& fe, const MaterialMap& mat, const PressureField& pg,
                       double eps) {
  return checked_residual(FormKind::Primal, s, fe, mat, pg, eps);
}

Vector residual_mixed(const SystemState& s, const FESystem& fe, const MaterialMap& mat, const PressureField& pg,
                      double eps) {
  return checked_residual(FormKind::Mixed, s, fe, mat, pg, eps);
}

Vector residual_mixed_robust(const SystemState& s, const FESystem& fe, const MaterialMap& mat,
                             const PressureField& pg, double eps) {
  return checked_residual(FormKind::MixedRobust, s, fe, mat, pg, eps);
}

SparseMatrix jacobian(const SystemState& s, const FESystem& fe, const MaterialMap& mat, const PressureField& pg,
                      double eps) {
  return PhaseFieldModel(fe, mat, pg, eps).jacobian(s);
}

}  // namespace fracfield
