#include "slowfast/noise.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include "slowfast/errors.hpp"
#include "slowfast/records.hpp"
#include "slowfast/rng.hpp"

namespace slowfast {

namespace {

constexpr std::uint32_t kChannelW1 = 0;
constexpr std::uint32_t kChannelW2 = 1;
constexpr std::uint32_t kChannelW3 = 2;

[[noreturn]] void window_exhausted(const char* which, std::int64_t cell, std::int64_t first, std::int64_t end,
                                   double dt) {
  std::ostringstream msg;
  msg << which << " increment for cell " << cell << " (t = " << static_cast<double>(cell) * dt
      << ") is outside the stored window [" << static_cast<double>(first) * dt << ", "
      << static_cast<double>(end) * dt << "); extend the path ";
  if (cell < first) {
    msg << "backward by " << static_cast<double>(first - cell) * dt;
  } else {
    msg << "forward by " << static_cast<double>(cell + 1 - end) * dt;
  }
  throw WindowExhaustedError(msg.str(), cell, first, end);
}

}  // namespace

Grid Grid::covering(double dt, double t_min, double t_max) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("grid step must be positive");
  if (!(t_min <= 0.0 && 0.0 <= t_max)) throw DomainError("grid must satisfy t_min <= 0 <= t_max");
  Grid g;
  g.dt = dt;
  g.first_cell = cell_of(t_min, dt);
  g.end_cell = cell_of(t_max, dt);
  if (g.end_cell <= g.first_cell) throw DomainError("empty grid");
  return g;
}

std::int64_t cell_of(double t, double dt) {
  if (!std::isfinite(t)) throw DomainError("time must be finite");
  const double r = t / dt;
  const double n = std::nearbyint(r);
  if (std::abs(r - n) > 1e-8 * std::max(1.0, std::abs(r))) {
    std::ostringstream msg;
    msg << "time " << t << " is not a multiple of the grid step " << dt;
    throw DomainError(msg.str());
  }
  return static_cast<std::int64_t>(n);
}

NoisePath NoisePath::sample(const CovarianceSpec& cov1, const CovarianceSpec& cov2, int dim3, const Grid& grid,
                            std::uint64_t seed, std::uint64_t stream_id) {
  if (grid.cells() <= 0) throw DomainError("empty grid");
  if (!(grid.dt > 0.0)) throw DomainError("grid step must be positive");
  const int d1 = static_cast<int>(cov1.per_mode_variance.size());
  const int d2 = static_cast<int>(cov2.per_mode_variance.size());
  cov1.validate(d1);
  cov2.validate(d2);
  if (dim3 < 0) throw DomainError("dim3 must be non-negative");

  NoisePath p;
  p.grid_ = grid;
  p.seed_ = seed;
  p.stream_ = stream_id;
  p.w3_first_ = std::max<std::int64_t>(0, grid.first_cell);
  const auto cells = grid.cells();
  const auto cells3 = std::max<std::int64_t>(0, grid.end_cell - p.w3_first_);
  p.w1_.resize(d1, cells);
  p.w2_.resize(d2, cells);
  p.w3_.resize(dim3, cells3);

  const GaussianSource src(seed, stream_id);
  Eigen::VectorXd s1(d1), s2(d2);
  for (int i = 0; i < d1; ++i) s1[i] = std::sqrt(cov1.per_mode_variance[i] * grid.dt);
  for (int i = 0; i < d2; ++i) s2[i] = std::sqrt(cov2.per_mode_variance[i] * grid.dt);
  const double s3 = std::sqrt(grid.dt);
  for (std::int64_t c = 0; c < cells; ++c) {
    const std::int64_t cell = grid.first_cell + c;
    src.fill(cell, kChannelW1, p.w1_.col(c).data(), static_cast<std::size_t>(d1));
    p.w1_.col(c).array() *= s1.array();
    src.fill(cell, kChannelW2, p.w2_.col(c).data(), static_cast<std::size_t>(d2));
    p.w2_.col(c).array() *= s2.array();
  }
  for (std::int64_t c = 0; c < cells3; ++c) {
    src.fill(p.w3_first_ + c, kChannelW3, p.w3_.col(c).data(), static_cast<std::size_t>(dim3));
    p.w3_.col(c) *= s3;
  }
  return p;
}

std::uint64_t NoisePath::path_ref() const {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &grid_.dt, sizeof bits);
  return splitmix64(splitmix64(seed_ ^ 0x5F3759DFull) ^ stream_) ^ splitmix64(bits);
}

const double* NoisePath::w1(std::int64_t cell) const {
  if (cell < grid_.first_cell || cell >= grid_.end_cell)
    window_exhausted("W1", cell, grid_.first_cell, grid_.end_cell, grid_.dt);
  return w1_.col(cell - grid_.first_cell).data();
}

const double* NoisePath::w2(std::int64_t cell) const {
  if (cell < grid_.first_cell || cell >= grid_.end_cell)
    window_exhausted("W2", cell, grid_.first_cell, grid_.end_cell, grid_.dt);
  return w2_.col(cell - grid_.first_cell).data();
}

const double* NoisePath::w3(std::int64_t cell) const {
  if (cell < w3_first_ || cell >= grid_.end_cell) window_exhausted("W3", cell, w3_first_, grid_.end_cell, grid_.dt);
  return w3_.col(cell - w3_first_).data();
}

Eigen::VectorXd NoisePath::w1_value(std::int64_t cell) const {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim1());
  if (cell >= 0) {
    for (std::int64_t c = 0; c < cell; ++c) acc += Eigen::Map<const Eigen::VectorXd>(w1(c), dim1());
  } else {
    for (std::int64_t c = cell; c < 0; ++c) acc -= Eigen::Map<const Eigen::VectorXd>(w1(c), dim1());
  }
  return acc;
}

bool NoisePath::operator==(const NoisePath& other) const {
  return grid_.dt == other.grid_.dt && grid_.first_cell == other.grid_.first_cell &&
         grid_.end_cell == other.grid_.end_cell && seed_ == other.seed_ && stream_ == other.stream_ &&
         w1_ == other.w1_ && w2_ == other.w2_ && w3_ == other.w3_;
}

void NoisePath::write(std::ostream& out) const {
  RecordWriter w(out, RecordKind::NoisePath);
  w.f64(grid_.dt);
  w.i64(grid_.first_cell);
  w.i64(grid_.end_cell);
  w.u64(seed_);
  w.u64(stream_);
  w.i64(w3_first_);
  w.matrix(w1_);
  w.matrix(w2_);
  w.matrix(w3_);
}

NoisePath NoisePath::read(std::istream& in) {
  RecordReader r(in, RecordKind::NoisePath);
  NoisePath p;
  p.grid_.dt = r.f64();
  p.grid_.first_cell = r.i64();
  p.grid_.end_cell = r.i64();
  p.seed_ = r.u64();
  p.stream_ = r.u64();
  p.w3_first_ = r.i64();
  p.w1_ = r.matrix();
  p.w2_ = r.matrix();
  p.w3_ = r.matrix();
  if (p.w1_.cols() != p.grid_.cells() || p.w2_.cols() != p.grid_.cells())
    throw StructuralError("path record has inconsistent cell counts");
  return p;
}

PathView shift(const PathView& path, double s) { return path.shifted_cells(cell_of(s, path.dt())); }

double backward_horizon(const SystemParams& p, double tol) {
  if (!(tol > 0.0 && tol < 1.0)) throw DomainError("truncation tolerance must lie in (0, 1)");
  if (!(p.gamma2 > p.mu)) throw AdmissibilityError("gamma2 must exceed mu");
  return p.epsilon / (p.gamma2 - p.mu) * std::log(1.0 / tol);
}

std::int64_t backward_cells(const SystemParams& p, double dt, double tol) {
  return static_cast<std::int64_t>(std::ceil(backward_horizon(p, tol) / dt - 1e-9));
}

Eigen::VectorXd ou_convolution(const SpectralOperator& b, double sigma2, double eps, const PathView& path, double t,
                               double t_back) {
  const double dt = path.dt();
  const std::int64_t end = cell_of(t, dt);
  const std::int64_t start = end - static_cast<std::int64_t>(std::ceil(t_back / dt - 1e-9));
  Eigen::VectorXd v = Eigen::VectorXd::Zero(b.space().dim());
  if (sigma2 == 0.0) return v;
  const Propagator prop(b, 1.0 / eps, dt);
  Eigen::VectorXd xi(v.size()), next(v.size());
  const double scale = sigma2 / std::sqrt(eps);
  for (std::int64_t c = start; c < end; ++c) {
    prop.noise_apply(path.w2(c), scale, xi);
    prop.exp_apply(v, next);
    v = next + xi;
  }
  return v;
}

Eigen::VectorXd slow_convolution(const SpectralOperator& a, double sigma1, const PathView& path, double t_from,
                                 double t_to) {
  const double dt = path.dt();
  const std::int64_t from = cell_of(t_from, dt);
  const std::int64_t to = cell_of(t_to, dt);
  if (to < from) throw DomainError("slow_convolution needs t_from <= t_to");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(a.space().dim());
  if (sigma1 == 0.0) return v;
  const Propagator prop(a, 1.0, dt);
  Eigen::VectorXd xi(v.size()), next(v.size());
  for (std::int64_t c = from; c < to; ++c) {
    prop.noise_apply(path.w1(c), sigma1, xi);
    prop.exp_apply(v, next);
    v = next + xi;
  }
  return v;
}

}  // namespace slowfast
