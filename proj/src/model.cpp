#include "qdecay/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "qdecay/quadrature.hpp"

namespace qdecay {

Potential::Potential(std::vector<Segment> segments, std::vector<Shell> shells, double range_a)
    : segments_(std::move(segments)), shells_(std::move(shells)), range_(range_a) {
  if (!(range_ > 0.0) || !std::isfinite(range_)) throw DomainError("potential range must be positive");
  std::sort(segments_.begin(), segments_.end(),
            [](const Segment& a, const Segment& b) { return a.r_lo < b.r_lo; });
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    if (!(s.r_lo >= 0.0 && s.r_lo < s.r_hi && s.r_hi <= range_) || !std::isfinite(s.V))
      throw DomainError(fmt::format("segment [{}, {}) outside [0, range={}]", s.r_lo, s.r_hi, range_));
    if (i > 0 && s.r_lo < segments_[i - 1].r_hi)
      throw DomainError(fmt::format("segments overlap at r = {}", s.r_lo));
  }
  std::sort(shells_.begin(), shells_.end(), [](const Shell& a, const Shell& b) { return a.r < b.r; });
  for (const auto& sh : shells_) {
    if (!(sh.r > 0.0 && sh.r <= range_) || !std::isfinite(sh.lambda))
      throw DomainError(fmt::format("shell at r = {} outside (0, range={}]", sh.r, range_));
  }
}

Potential Potential::free_particle(double range_a) { return Potential({}, {}, range_a); }

bool Potential::is_free() const noexcept {
  const bool no_segments =
      std::all_of(segments_.begin(), segments_.end(), [](const Segment& s) { return s.V == 0.0; });
  const bool no_shells =
      std::all_of(shells_.begin(), shells_.end(), [](const Shell& s) { return s.lambda == 0.0; });
  return no_segments && no_shells;
}

double Potential::operator()(double r) const noexcept {
  if (r > range_ || r < 0.0) return 0.0;
  for (const auto& s : segments_)
    if (r >= s.r_lo && r < s.r_hi) return s.V;
  return 0.0;
}

std::vector<double> Potential::breakpoints() const {
  std::vector<double> pts;
  for (const auto& s : segments_) {
    if (s.r_lo > 0.0) pts.push_back(s.r_lo);
    pts.push_back(s.r_hi);
  }
  for (const auto& sh : shells_) pts.push_back(sh.r);
  pts.push_back(range_);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(1.0, b); }),
            pts.end());
  return pts;
}

Potential build_delta_shell(double lambda, double a) {
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError(fmt::format("delta shell radius must be positive, got {}", a));
  return Potential({}, {Shell{a, lambda}}, a);
}

// ---------------------------------------------------------------------------

RadialGrid::RadialGrid(double r_max, std::size_t n_points) : r_max_(r_max), n_(n_points) {
  if (!(r_max > 0.0) || !std::isfinite(r_max)) throw DomainError("grid r_max must be positive");
  if (n_points < 2) throw DomainError("grid needs at least two points");
  h_ = r_max / static_cast<double>(n_points - 1);
}

std::size_t RadialGrid::nearest(double r) const {
  const double x = std::round(r / h_);
  if (x <= 0.0) return 0;
  return std::min(n_ - 1, static_cast<std::size_t>(x));
}

std::size_t RadialGrid::floor_index(double r) const {
  const double x = std::floor(r / h_ * (1.0 + 1e-12) + 1e-9);
  if (x <= 0.0) return 0;
  return std::min(n_ - 1, static_cast<std::size_t>(x));
}

std::size_t RadialGrid::ceil_index(double r) const {
  const double x = std::ceil(r / h_ * (1.0 - 1e-12) - 1e-9);
  if (x <= 0.0) return 0;
  return std::min(n_ - 1, static_cast<std::size_t>(x));
}

bool RadialGrid::on_node(double r, double rel_tol) const {
  const double x = r / h_;
  return std::abs(x - std::round(x)) <= rel_tol * std::max(1.0, x);
}

double RadialGrid::integrate(std::span<const double> f, std::size_t last) const {
  return quad::simpson(f.subspan(0, std::min(last + 1, f.size())), h_);
}

cplx RadialGrid::integrate(std::span<const cplx> f, std::size_t last) const {
  return quad::simpson(f.subspan(0, std::min(last + 1, f.size())), h_);
}

double RadialGrid::integrate_to(std::span<const double> f, double R) const {
  if (R <= 0.0) return 0.0;
  const std::size_t m = std::min(floor_index(R), f.size() - 1);
  double acc = m > 0 ? integrate(f, m) : 0.0;
  const double rest = R - r(m);
  if (rest > 1e-12 * h_ && m + 1 < f.size()) {
    const double slope = (f[m + 1] - f[m]) / h_;
    acc += rest * f[m] + 0.5 * slope * rest * rest;
  }
  return acc;
}

// ---------------------------------------------------------------------------

std::string describe(const StateFamily& family) {
  return std::visit(
      [](const auto& f) -> std::string {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, SineBox>)
          return fmt::format("SineBox(n={}, R={})", f.n, f.R);
        else
          return fmt::format("GaussianBump(r0={}, sigma={}, R={})", f.r0, f.sigma, f.R);
      },
      family);
}

double support_of(const StateFamily& family) {
  return std::visit([](const auto& f) { return f.R; }, family);
}

double family_shape(const StateFamily& family, double r) {
  return std::visit(
      [r](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if (r < 0.0 || r > f.R) return 0.0;
        if constexpr (std::is_same_v<T, SineBox>) {
          return std::sqrt(2.0 / f.R) * std::sin(f.n * std::numbers::pi * r / f.R);
        } else {
          auto g = [&](double x) { return std::exp(-0.5 * x * x / (f.sigma * f.sigma)); };
          const double edge = g(f.R - f.r0) - g(f.R + f.r0);
          return g(r - f.r0) - g(r + f.r0) - (r / f.R) * edge;
        }
      },
      family);
}

namespace {

void validate_family(const StateFamily& family, const RadialGrid& grid) {
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if (!(f.R > 0.0)) throw DomainError("initial state support R must be positive");
        if (f.R > grid.r_max())
          throw DomainError(fmt::format("initial state support R = {} exceeds grid r_max = {}", f.R, grid.r_max()));
        if constexpr (std::is_same_v<T, SineBox>) {
          if (f.n < 1) throw DomainError("SineBox mode index n must be >= 1");
        } else {
          if (!(f.sigma > 0.0)) throw DomainError("GaussianBump sigma must be positive");
          if (!(f.r0 > 0.0 && f.r0 < f.R)) throw DomainError("GaussianBump r0 must lie in (0, R)");
        }
      },
      family);
}

// Analytic L2 norm^2 of the family shape (untruncated for the Gaussian).
double analytic_norm2(const StateFamily& family) {
  return std::visit(
      [](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, SineBox>) {
          return 1.0;
        } else {
          const double s = f.sigma;
          return s * std::sqrt(std::numbers::pi) * (1.0 - std::exp(-f.r0 * f.r0 / (s * s)));
        }
      },
      family);
}

double samples_norm(const RadialGrid& grid, std::span<const cplx> samples, std::size_t last) {
  std::vector<double> dens(last + 1);
  for (std::size_t i = 0; i <= last; ++i) dens[i] = std::norm(samples[i]);
  return std::sqrt(grid.integrate(dens, last));
}

}  // namespace

InitialState::InitialState(RadialGrid grid, std::vector<cplx> samples, double support, std::string label,
                           ContinuumSource source, double raw_norm)
    : grid_(std::move(grid)),
      samples_(std::move(samples)),
      support_(support),
      label_(std::move(label)),
      source_(std::move(source)),
      raw_norm_(raw_norm) {}

InitialState InitialState::from_samples(const RadialGrid& grid, std::vector<cplx> samples, double support_R,
                                        std::string label) {
  if (samples.size() != grid.size()) throw DomainError("sample count does not match grid");
  if (!(support_R > 0.0) || support_R > grid.r_max() * (1.0 + 1e-12))
    throw DomainError(fmt::format("support R = {} must lie in (0, r_max = {}]", support_R, grid.r_max()));
  if (std::abs(samples[0]) != 0.0) throw DomainError("s-wave radial function must vanish at r = 0");
  const std::size_t last = grid.ceil_index(support_R);
  for (std::size_t i = last + 1; i < samples.size(); ++i)
    if (samples[i] != cplx(0.0)) throw DomainError("samples are non-zero beyond the declared support");
  const double n = samples_norm(grid, samples, last);
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("initial state has zero norm");
  for (auto& s : samples) s /= n;
  ContinuumSource src{std::vector<cplx>(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(last + 1)), 1.0};
  return InitialState(grid, std::move(samples), support_R, std::move(label), std::move(src), n);
}

InitialState InitialState::rebuild(const RadialGrid& grid, std::vector<cplx> samples, double support_R,
                                   ContinuumSource source, std::string label, double min_norm) {
  const std::size_t last = grid.ceil_index(support_R);
  const double n = samples_norm(grid, samples, last);
  if (!(n > min_norm)) throw DegenerateState(fmt::format("state norm {} below {}", n, min_norm));
  for (auto& s : samples) s /= n;
  source.scale /= n;
  return InitialState(grid, std::move(samples), support_R, std::move(label), std::move(source), n);
}

double InitialState::norm() const { return samples_norm(grid_, samples_, support_index()); }

cplx InitialState::inner(const InitialState& other) const {
  if (!(grid_ == other.grid_)) throw DomainError("inner product of states on different grids");
  const std::size_t last = std::max(support_index(), other.support_index());
  return inner_product(grid_, samples_, other.samples_, last);
}

cplx inner_product(const RadialGrid& grid, std::span<const cplx> a, std::span<const cplx> b, std::size_t last) {
  last = std::min({last, a.size() - 1, b.size() - 1});
  std::vector<cplx> prod(last + 1);
  for (std::size_t i = 0; i <= last; ++i) prod[i] = std::conj(a[i]) * b[i];
  return grid.integrate(std::span<const cplx>(prod), last);
}

InitialState build_initial_state(const StateFamily& family, const RadialGrid& grid) {
  validate_family(family, grid);
  const double R = support_of(family);
  const double scale = 1.0 / std::sqrt(analytic_norm2(family));
  std::vector<cplx> samples(grid.size(), 0.0);
  const std::size_t last = grid.ceil_index(R);
  for (std::size_t i = 1; i <= last; ++i) samples[i] = scale * family_shape(family, grid.r(i));
  auto state = InitialState::from_samples(grid, std::move(samples), R, describe(family));
  return state;
}

}  // namespace qdecay
