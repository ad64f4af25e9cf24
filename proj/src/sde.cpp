#include "qhydro/sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qhydro {

int Particle::winding() const { return static_cast<int>(std::floor(theta / kTwoPi)); }

double Particle::wrapped() const {
  double w = theta - kTwoPi * std::floor(theta / kTwoPi);
  if (w >= kTwoPi) w -= kTwoPi;
  return w;
}

namespace {

StepResult euler_step(Particle p, DriftSample u, double ito_sign, double nu, double dt,
                      std::pair<double, double> noise) {
  const double c = std::cos(p.theta), s = std::sin(p.theta);
  const double xi_r = c * noise.first + s * noise.second;
  const double xi_t = -s * noise.first + c * noise.second;
  const double amp = std::sqrt(2.0 * nu * std::abs(dt));
  StepResult out;
  double r = p.r + u.ur * dt + ito_sign * (nu / p.r) * dt + amp * xi_r;
  out.particle.theta = p.theta + u.utheta * dt + amp / p.r * xi_t;
  if (r <= 0.0) {
    out.reflected = true;
    r = std::max(-r, std::numeric_limits<double>::min());
  }
  out.particle.r = r;
  return out;
}

}  // namespace

StepResult forward_step(Particle p, DriftSample u_plus, double nu, double dt, std::pair<double, double> noise) {
  if (!(dt > 0.0)) throw InvalidInput("forward_step needs dt > 0");
  if (!(p.r > 0.0)) throw InvalidInput("particle radius must be positive");
  return euler_step(p, u_plus, +1.0, nu, dt, noise);
}

StepResult backward_step(Particle p, DriftSample u_minus, double nu, double dt, std::pair<double, double> noise) {
  if (!(dt < 0.0)) throw InvalidInput("backward_step needs dt < 0");
  if (!(p.r > 0.0)) throw InvalidInput("particle radius must be positive");
  return euler_step(p, u_minus, -1.0, nu, dt, noise);
}

// --- DriftField -------------------------------------------------------------------

DriftField::DriftField(const Grid& grid, const PairField& drift) {
  if (!grid.chart().is_polar()) throw InvalidInput("drift fields need a polar grid");
  check_shape(grid, drift.c0, "DriftField");
  check_shape(grid, drift.c1, "DriftField");
  r_nodes_ = grid.axis0().nodes;
  n_theta_ = grid.n1();
  h_theta_ = grid.h1();
  scaled_r_.resize(grid.size());
  scaled_theta_.resize(grid.size());
  for (std::size_t i = 0; i < grid.n0(); ++i) {
    const double r = r_nodes_[i];
    for (std::size_t j = 0; j < n_theta_; ++j) {
      scaled_r_[i * n_theta_ + j] = r * drift.c0(i, j);
      scaled_theta_[i * n_theta_ + j] = r * r * drift.c1(i, j);
    }
  }
}

DriftField DriftField::zero() { return DriftField(); }

DriftField DriftField::from(const Grid& grid, const VelocityFields& fields, Direction direction) {
  return DriftField(grid, direction == Direction::forward ? fields.u_plus : fields.u_minus);
}

DriftSample DriftField::sample(double r, double theta_wrapped) const {
  if (r_nodes_.empty()) return {};
  const std::size_t n0 = r_nodes_.size();
  const double h0 = r_nodes_.size() > 1 ? r_nodes_[1] - r_nodes_[0] : 1.0;
  double x = (r - r_nodes_[0]) / h0;
  x = std::clamp(x, 0.0, static_cast<double>(n0 - 1));
  std::size_t i0 = std::min(static_cast<std::size_t>(x), n0 - 2);
  const double fx = x - static_cast<double>(i0);
  const double y = theta_wrapped / h_theta_;
  std::size_t j0 = static_cast<std::size_t>(std::floor(y)) % n_theta_;
  const double fy = y - std::floor(y);
  const std::size_t j1 = (j0 + 1) % n_theta_;
  auto lerp2 = [&](const std::vector<double>& f) {
    const double a = f[i0 * n_theta_ + j0], b = f[i0 * n_theta_ + j1];
    const double c = f[(i0 + 1) * n_theta_ + j0], d = f[(i0 + 1) * n_theta_ + j1];
    return (1.0 - fx) * ((1.0 - fy) * a + fy * b) + fx * ((1.0 - fy) * c + fy * d);
  };
  return {lerp2(scaled_r_) / r, lerp2(scaled_theta_) / (r * r)};
}

// --- Accumulation -----------------------------------------------------------------

namespace {

std::size_t block_count(std::size_t particles) { return (particles + kParticleBlock - 1) / kParticleBlock; }

// Cell index of a point on a cell-centred polar grid, or npos outside.
std::size_t locate(const Grid& cells, double r, double theta_wrapped) {
  const double h0 = cells.h0();
  const auto i = static_cast<std::size_t>(r / h0);
  if (i >= cells.n0()) return std::numeric_limits<std::size_t>::max();
  const double h1 = cells.h1();
  auto j = static_cast<std::size_t>(std::floor((theta_wrapped + 0.5 * h1) / h1));
  j %= cells.n1();
  return i * cells.n1() + j;
}

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

}  // namespace

DriftAccumulator::DriftAccumulator(const Grid& cells, std::size_t particles, double mass)
    : cells_(cells), mass_(mass) {
  if (!cells.chart().is_polar()) throw InvalidInput("drift cells must be a polar grid");
  blocks_.assign(block_count(particles), std::vector<Cell>(cells.size()));
  pooled_.assign(block_count(particles), Pooled{});
}

void DriftAccumulator::record(std::size_t k, Particle before, Particle after, double nu, double dt) {
  if (dt < 0.0) {
    std::swap(before, after);
    dt = -dt;
  }
  const std::size_t b = k / kParticleBlock;
  auto& cells = blocks_[b];
  const double rate_r = (after.r - before.r) / dt;
  const double rate_t = (after.theta - before.theta) / dt;

  const std::size_t cf = locate(cells_, before.r, before.wrapped());
  if (cf != npos) {
    Cell& c = cells[cf];
    const double ur = rate_r - nu / before.r;
    ++c.count_plus;
    c.ur_plus += ur;
    c.ur_plus_sq += ur * ur;
    c.ut_plus += rate_t;
    c.ut_plus_sq += rate_t * rate_t;
  }
  const std::size_t cb = locate(cells_, after.r, after.wrapped());
  if (cb != npos) {
    Cell& c = cells[cb];
    const double ur = rate_r + nu / after.r;
    ++c.count_minus;
    c.ur_minus += ur;
    c.ur_minus_sq += ur * ur;
    c.ut_minus += rate_t;
    c.ut_minus_sq += rate_t * rate_t;
  }
  Pooled& p = pooled_[b];
  ++p.count;
  p.ptheta_plus += mass_ * before.r * before.r * rate_t;
  p.ptheta_minus += mass_ * after.r * after.r * rate_t;
}

std::vector<DriftAccumulator::Cell> DriftAccumulator::merged() const {
  std::vector<Cell> out(cells_.size());
  for (const auto& block : blocks_) {
    for (std::size_t c = 0; c < out.size(); ++c) {
      const Cell& s = block[c];
      Cell& d = out[c];
      d.count_plus += s.count_plus;
      d.count_minus += s.count_minus;
      d.ur_plus += s.ur_plus;
      d.ur_plus_sq += s.ur_plus_sq;
      d.ut_plus += s.ut_plus;
      d.ut_plus_sq += s.ut_plus_sq;
      d.ur_minus += s.ur_minus;
      d.ur_minus_sq += s.ur_minus_sq;
      d.ut_minus += s.ut_minus;
      d.ut_minus_sq += s.ut_minus_sq;
    }
  }
  return out;
}

namespace {

void mean_and_se(double sum, double sum_sq, std::uint64_t n, double& mean, double& se) {
  if (n == 0) {
    mean = 0.0;
    se = 0.0;
    return;
  }
  const double nd = static_cast<double>(n);
  mean = sum / nd;
  const double var = n > 1 ? std::max(0.0, (sum_sq - nd * mean * mean) / (nd - 1.0)) : 0.0;
  se = std::sqrt(var / nd);
}

void batch_mean(const std::vector<double>& means, double& mean, double& se) {
  const double n = static_cast<double>(means.size());
  mean = 0.0;
  for (double m : means) mean += m;
  mean /= n;
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  se = means.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
}

}  // namespace

DriftEstimate finalize(const DriftAccumulator& acc, std::uint64_t min_visits) {
  const Grid& cells = acc.cells();
  DriftEstimate out{cells,
                    {cells.make_field(), cells.make_field()},
                    {cells.make_field(), cells.make_field()},
                    {cells.make_field(), cells.make_field()},
                    {cells.make_field(), cells.make_field()},
                    NodeMask(cells.size(), 0)};
  const auto merged = acc.merged();
  for (std::size_t c = 0; c < merged.size(); ++c) {
    const auto& m = merged[c];
    mean_and_se(m.ur_plus, m.ur_plus_sq, m.count_plus, out.u_plus.c0[c], out.se_plus.c0[c]);
    mean_and_se(m.ut_plus, m.ut_plus_sq, m.count_plus, out.u_plus.c1[c], out.se_plus.c1[c]);
    mean_and_se(m.ur_minus, m.ur_minus_sq, m.count_minus, out.u_minus.c0[c], out.se_minus.c0[c]);
    mean_and_se(m.ut_minus, m.ut_minus_sq, m.count_minus, out.u_minus.c1[c], out.se_minus.c1[c]);
    out.estimated[c] = m.count_plus >= min_visits && m.count_minus >= min_visits ? 1 : 0;
  }
  std::vector<double> plus, minus;
  for (const auto& p : acc.pooled()) {
    if (p.count == 0) continue;
    plus.push_back(p.ptheta_plus / static_cast<double>(p.count));
    minus.push_back(p.ptheta_minus / static_cast<double>(p.count));
  }
  if (!plus.empty()) {
    batch_mean(plus, out.ptheta_plus, out.ptheta_plus_se);
    batch_mean(minus, out.ptheta_minus, out.ptheta_minus_se);
  }
  return out;
}

// --- Ensemble kernels ---------------------------------------------------------------

Ensemble sample_ensemble(const MadelungState& state, std::size_t count, std::uint64_t seed, Exec exec) {
  const Grid& g = state.g();
  if (!g.chart().is_polar()) throw InvalidInput("ensembles are sampled from polar states");
  std::vector<double> cdf(g.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < g.n0(); ++i)
    for (std::size_t j = 0; j < g.n1(); ++j) {
      acc += std::max(0.0, state.rho(i, j)) * g.cell_weight(i);
      cdf[i * g.n1() + j] = acc;
    }
  if (!(acc > 0.0)) throw InvalidInput("cannot sample from a vanishing density");
  Ensemble e;
  e.r.resize(count);
  e.theta.resize(count);
  const double h0 = g.h0(), h1 = g.h1();
  auto draw = [&](std::size_t k) {
    const NoiseStream stream(seed, k, StreamPurpose::initial_sampling);
    const auto [u_cell, u_r] = stream.uniform_pair(0);
    const auto [u_t, unused] = stream.uniform_pair(1);
    (void)unused;
    const double target = u_cell * acc;
    std::size_t c = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), target) - cdf.begin());
    c = std::min(c, cdf.size() - 1);
    const std::size_t i = c / g.n1(), j = c % g.n1();
    const double a = g.axis0().nodes[i] - 0.5 * h0, b = a + h0;
    e.r[k] = std::sqrt(a * a + u_r * (b * b - a * a));
    if (e.r[k] <= 0.0) e.r[k] = 0.5 * b;
    double t = g.axis1().nodes[j] + (u_t - 0.5) * h1;
    if (t < 0.0) t += kTwoPi;
    e.theta[k] = t;
  };
  const auto n = static_cast<std::int64_t>(count);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < n; ++k) draw(static_cast<std::size_t>(k));
  } else {
    for (std::int64_t k = 0; k < n; ++k) draw(static_cast<std::size_t>(k));
  }
  return e;
}

namespace {

// Steps particles [begin, end); returns reflections.
std::uint64_t step_range(Ensemble& e, std::size_t begin, std::size_t end, const DriftField& drift, double nu,
                         double dt, Direction direction, std::uint64_t seed, std::uint64_t step,
                         DriftAccumulator* acc) {
  std::uint64_t reflections = 0;
  for (std::size_t k = begin; k < end; ++k) {
    const Particle before = e.particle(k);
    const auto noise = NoiseStream(seed, k).normal_pair(step);
    const DriftSample u = drift.sample(before.r, before.wrapped());
    const StepResult res = direction == Direction::forward ? euler_step(before, u, +1.0, nu, dt, noise)
                                                           : euler_step(before, u, -1.0, nu, -dt, noise);
    e.r[k] = res.particle.r;
    e.theta[k] = res.particle.theta;
    reflections += res.reflected ? 1 : 0;
    if (acc) acc->record(k, before, res.particle, nu, direction == Direction::forward ? dt : -dt);
  }
  return reflections;
}

}  // namespace

std::uint64_t step_ensemble(Ensemble& ensemble, const DriftField& drift, double nu, double dt, Direction direction,
                            std::uint64_t seed, std::uint64_t step, Exec exec, DriftAccumulator* acc) {
  if (!(dt > 0.0)) throw InvalidInput("step size magnitude must be positive");
  const std::size_t n = ensemble.size();
  const auto blocks = static_cast<std::int64_t>(block_count(n));
  std::uint64_t reflections = 0;
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static) reduction(+ : reflections)
    for (std::int64_t b = 0; b < blocks; ++b) {
      const std::size_t begin = static_cast<std::size_t>(b) * kParticleBlock;
      reflections += step_range(ensemble, begin, std::min(n, begin + kParticleBlock), drift, nu, dt, direction,
                                seed, step, acc);
    }
  } else {
    reflections = step_range(ensemble, 0, n, drift, nu, dt, direction, seed, step, acc);
  }
  return reflections;
}

void run_ensemble(EnsembleRun& run, const DriftField& drift, double nu, Exec exec, DriftAccumulator* acc) {
  const double sign = run.config.direction == Direction::forward ? 1.0 : -1.0;
  for (std::uint64_t s = 0; s < run.config.steps; ++s) {
    run.reflections += step_ensemble(run.particles, drift, nu, run.config.dt, run.config.direction, run.config.seed,
                                     run.steps_taken, exec, acc);
    ++run.steps_taken;
    run.time += sign * run.config.dt;
  }
}

DensityEstimate estimate_density(const Ensemble& ensemble, const Grid& cells, Exec exec) {
  if (!cells.chart().is_polar()) throw InvalidInput("density cells must be a polar grid");
  const std::size_t n = ensemble.size();
  if (n == 0) throw InvalidInput("cannot estimate a density from an empty ensemble");
  const auto blocks = static_cast<std::int64_t>(block_count(n));
  std::vector<std::vector<std::uint64_t>> local(static_cast<std::size_t>(blocks),
                                                std::vector<std::uint64_t>(cells.size() + 1, 0));
  auto fill = [&](std::int64_t b) {
    auto& h = local[static_cast<std::size_t>(b)];
    const std::size_t begin = static_cast<std::size_t>(b) * kParticleBlock;
    const std::size_t end = std::min(n, begin + kParticleBlock);
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t c = locate(cells, ensemble.r[k], ensemble.particle(k).wrapped());
      ++h[c == npos ? cells.size() : c];
    }
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < blocks; ++b) fill(b);
  } else {
    for (std::int64_t b = 0; b < blocks; ++b) fill(b);
  }
  std::vector<std::uint64_t> total(cells.size() + 1, 0);
  for (const auto& h : local)
    for (std::size_t c = 0; c < total.size(); ++c) total[c] += h[c];

  DensityEstimate out{cells.make_field(), 0.0};
  const double nd = static_cast<double>(n);
  for (std::size_t i = 0; i < cells.n0(); ++i)
    for (std::size_t j = 0; j < cells.n1(); ++j)
      out.rho(i, j) = static_cast<double>(total[i * cells.n1() + j]) / (nd * cells.cell_weight(i));
  out.overflow = static_cast<double>(total.back()) / nd;
  return out;
}

Field cell_masses(const Grid& cells, const std::function<double(double, double)>& rho, int sub) {
  Field m = cells.make_field();
  const double h0 = cells.h0(), h1 = cells.h1();
  const double dr = h0 / sub, dt = h1 / sub;
  for (std::size_t i = 0; i < cells.n0(); ++i) {
    const double r_lo = cells.axis0().nodes[i] - 0.5 * h0;
    for (std::size_t j = 0; j < cells.n1(); ++j) {
      const double t_lo = cells.axis1().nodes[j] - 0.5 * h1;
      double acc = 0.0;
      for (int a = 0; a < sub; ++a) {
        const double r = r_lo + (a + 0.5) * dr;
        for (int b = 0; b < sub; ++b) {
          double t = t_lo + (b + 0.5) * dt;
          if (t < 0.0) t += kTwoPi;
          acc += rho(r, t) * r * dr * dt;
        }
      }
      m(i, j) = acc;
    }
  }
  return m;
}

std::function<double(double, double)> interpolated_density(const MadelungState& state) {
  const Grid& g = state.g();
  if (!g.chart().is_polar()) throw InvalidInput("interpolated_density needs a polar state");
  auto grid = state.grid;
  Field rho = state.rho;
  return [grid, rho](double r, double theta) {
    const Grid& gg = *grid;
    const auto& rn = gg.axis0().nodes;
    double x = (r - rn[0]) / gg.h0();
    x = std::clamp(x, 0.0, static_cast<double>(rn.size() - 1));
    const std::size_t i0 = std::min(static_cast<std::size_t>(x), rn.size() - 2);
    const double fx = x - static_cast<double>(i0);
    const double y = theta / gg.h1();
    const std::size_t j0 = static_cast<std::size_t>(std::floor(y)) % gg.n1();
    const std::size_t j1 = (j0 + 1) % gg.n1();
    const double fy = y - std::floor(y);
    const double v = (1.0 - fx) * ((1.0 - fy) * rho(i0, j0) + fy * rho(i0, j1)) +
                     fx * ((1.0 - fy) * rho(i0 + 1, j0) + fy * rho(i0 + 1, j1));
    return r > gg.axis0().upper ? 0.0 : v;
  };
}

double histogram_l1(const DensityEstimate& estimate, const Grid& cells, const Field& reference_masses) {
  double l1 = 0.0, ref_total = 0.0;
  for (std::size_t i = 0; i < cells.n0(); ++i)
    for (std::size_t j = 0; j < cells.n1(); ++j) {
      const double est = estimate.rho(i, j) * cells.cell_weight(i);
      l1 += std::abs(est - reference_masses(i, j));
      ref_total += reference_masses(i, j);
    }
  return l1 + std::abs(estimate.overflow - std::max(0.0, 1.0 - ref_total));
}

DriftEstimate estimate_drifts(const Trajectories& tr, const Grid& cells, std::uint64_t min_visits) {
  if (tr.snapshots.size() < 2) throw InvalidInput("drift estimation needs at least two snapshots");
  if (tr.dt == 0.0) throw InvalidInput("drift estimation needs a nonzero dt");
  const std::size_t n = tr.snapshots.front().size();
  DriftAccumulator acc(cells, n, tr.mass);
  for (std::size_t t = 0; t + 1 < tr.snapshots.size(); ++t) {
    if (tr.snapshots[t + 1].size() != n) throw InvalidInput("trajectory snapshots differ in particle count");
    for (std::size_t k = 0; k < n; ++k) acc.record(k, tr.snapshots[t][k], tr.snapshots[t + 1][k], tr.nu, tr.dt);
  }
  return finalize(acc, min_visits);
}

}  // namespace qhydro
