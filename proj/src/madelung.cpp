#include "qhydro/madelung.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace qhydro {

PhysicalParams::PhysicalParams(double mass, double hbar, Potential potential)
    : mass_(mass), hbar_(hbar), potential_(std::move(potential)) {
  if (!(mass > 0.0) || !std::isfinite(mass)) throw InvalidInput("mass must be positive");
  if (!(hbar > 0.0) || !std::isfinite(hbar)) throw InvalidInput("hbar must be positive");
}

PhysicalParams PhysicalParams::oscillator(double mass, double hbar, double omega) {
  if (!(omega > 0.0)) throw InvalidInput("omega must be positive");
  const double k = mass * omega * omega;
  return PhysicalParams(mass, hbar, [k](double r) { return 0.5 * k * r * r; });
}

NodeMask floor_mask(const Field& rho, double floor) {
  const double peak = *std::max_element(rho.values().begin(), rho.values().end());
  NodeMask mask(rho.size(), 0);
  for (std::size_t k = 0; k < rho.size(); ++k) mask[k] = rho[k] < floor * peak ? 1 : 0;
  return mask;
}

void normalize(MadelungState& state, double floor) {
  const double total = integrate(state.g(), state.rho);
  if (!(total > 0.0)) throw InvalidInput("cannot normalise a vanishing density");
  for (auto& v : state.rho.values()) v /= total;
  state.flagged = floor_mask(state.rho, floor);
}

namespace {

double wrap_pi(double a) { return std::remainder(a, kTwoPi); }

}  // namespace

Decomposition decompose(const ComplexField& psi, std::shared_ptr<const Grid> grid, double floor) {
  if (!grid) throw InvalidInput("decompose: missing grid");
  const Grid& g = *grid;
  if (psi.n0() != g.n0() || psi.n1() != g.n1()) throw InvalidInput("decompose: field shape does not match the grid");
  const std::size_t n0 = g.n0(), n1 = g.n1();

  Decomposition out;
  MadelungState& s = out.state;
  s.grid = grid;
  s.rho = g.make_field();
  s.phase = g.make_field();
  Field raw = g.make_field();
  for (std::size_t k = 0; k < psi.size(); ++k) {
    if (!std::isfinite(psi[k].real()) || !std::isfinite(psi[k].imag()))
      throw InvalidInput("decompose: non-finite wave function sample");
    s.rho[k] = std::norm(psi[k]);
    raw[k] = std::arg(psi[k]);
  }
  if (*std::max_element(s.rho.values().begin(), s.rho.values().end()) == 0.0)
    throw InvalidInput("decompose: wave function vanishes identically");
  normalize(s, floor);

  // Per-row state: resolved (no flagged node) and its loop winding.
  std::vector<char> resolved(n0, 0);
  std::vector<int> row_winding(n0, 0);
  std::map<int, std::size_t> votes;
  for (std::size_t i = 0; i < n0; ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < n1 && ok; ++j) ok = s.flagged[i * n1 + j] == 0;
    resolved[i] = ok ? 1 : 0;
    if (!ok || !g.axis1().periodic) continue;
    double loop = 0.0;
    for (std::size_t j = 0; j < n1; ++j) loop += wrap_pi(raw(i, (j + 1) % n1) - raw(i, j));
    row_winding[i] = static_cast<int>(std::lround(loop / kTwoPi));
    ++votes[row_winding[i]];
  }
  int winding = 0;
  std::size_t best = 0;
  for (const auto& [w, count] : votes) {
    if (count > best) {
      best = count;
      winding = w;
    }
  }
  s.winding = g.axis1().periodic ? winding : 0;

  for (std::size_t i = 0; i < n0; ++i)
    if (resolved[i] && row_winding[i] != s.winding) out.inconsistent_rows.push_back(i);

  // Sub-floor nodes between the first and last resolved rows are true nodes.
  std::size_t first = n0, last = 0;
  for (std::size_t i = 0; i < n0; ++i) {
    if (resolved[i]) {
      first = std::min(first, i);
      last = i;
    }
  }
  for (std::size_t i = first; i < n0 && i <= last; ++i)
    for (std::size_t j = 0; j < n1; ++j)
      if (s.flagged[i * n1 + j]) out.node_singularities.push_back(i * n1 + j);

  // Unwrap along axis 1 from a radially continuous anchor at j = 0.
  double anchor_prev = raw(0, 0);
  for (std::size_t i = 0; i < n0; ++i) {
    double anchor = raw(i, 0);
    if (i > 0) anchor = anchor_prev + wrap_pi(raw(i, 0) - anchor_prev);
    anchor_prev = anchor;
    s.phase(i, 0) = anchor;
    for (std::size_t j = 1; j < n1; ++j) s.phase(i, j) = s.phase(i, j - 1) + wrap_pi(raw(i, j) - raw(i, j - 1));
  }
  return out;
}

ComplexField compose(const MadelungState& state) {
  ComplexField psi(state.rho.n0(), state.rho.n1());
  for (std::size_t k = 0; k < psi.size(); ++k) psi[k] = std::polar(std::sqrt(state.rho[k]), state.phase[k]);
  return psi;
}

PairField velocity_from_phase(const MadelungState& state, const PhysicalParams& params) {
  const Grid& g = state.g();
  PairField grad = phase_gradient(g, state.phase);
  const double two_nu = 2.0 * params.nu();
  for (std::size_t i = 0; i < g.n0(); ++i) {
    const Diag2 ginv = g.chart().inverse_metric(g.point(i, 0));
    for (std::size_t j = 0; j < g.n1(); ++j) {
      grad.c0(i, j) *= two_nu * ginv.d0;
      grad.c1(i, j) *= two_nu * ginv.d1;
    }
  }
  return grad;
}

VelocityFields osmotic_split(const PairField& v, const MadelungState& state, const PhysicalParams& params) {
  const Grid& g = state.g();
  check_shape(g, v.c0, "osmotic_split");
  const double peak = *std::max_element(state.rho.values().begin(), state.rho.values().end());
  const double clamp = kAmplitudeFloor * peak;
  Field log_rho = g.make_field();
  for (std::size_t k = 0; k < log_rho.size(); ++k) log_rho[k] = std::log(std::max(state.rho[k], clamp));
  const Field d0 = diff0(g, log_rho, OriginRule::antipodal);
  const Field d1 = diff1(g, log_rho);

  VelocityFields out{v, v, v, state.flagged};
  if (out.flagged.size() != g.size()) out.flagged = floor_mask(state.rho);
  const double nu = params.nu();
  for (std::size_t i = 0; i < g.n0(); ++i) {
    const Diag2 ginv = g.chart().inverse_metric(g.point(i, 0));
    for (std::size_t j = 0; j < g.n1(); ++j) {
      const std::size_t k = i * g.n1() + j;
      const double o0 = out.flagged[k] ? 0.0 : nu * ginv.d0 * d0[k];
      const double o1 = out.flagged[k] ? 0.0 : nu * ginv.d1 * d1[k];
      out.u_plus.c0[k] = v.c0[k] + o0;
      out.u_plus.c1[k] = v.c1[k] + o1;
      out.u_minus.c0[k] = v.c0[k] - o0;
      out.u_minus.c1[k] = v.c1[k] - o1;
    }
  }
  return out;
}

VelocityFields velocity_fields(const MadelungState& state, const PhysicalParams& params) {
  return osmotic_split(velocity_from_phase(state, params), state, params);
}

Field laplacian_ratio(const MadelungState& state) {
  const Grid& g = state.g();
  Field amp = g.make_field();
  for (std::size_t k = 0; k < amp.size(); ++k) amp[k] = std::sqrt(state.rho[k]);
  Field s = laplacian(g, amp);
  const NodeMask mask = state.flagged.size() == g.size() ? state.flagged : floor_mask(state.rho);
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = mask[k] ? 0.0 : s[k] / amp[k];
  return s;
}

Field quantum_potential(const MadelungState& state, const PhysicalParams& params) {
  Field q = laplacian_ratio(state);
  const double c = -params.hbar() * params.hbar() / (2.0 * params.mass());
  for (auto& v : q.values()) v *= c;
  return q;
}

PairField quantum_force(const MadelungState& state, const PhysicalParams& params) {
  const Grid& g = state.g();
  const Field s = laplacian_ratio(state);
  const double c = 2.0 * params.nu() * params.nu();
  PairField f{diff0(g, s, OriginRule::antipodal), diff1(g, s)};
  for (auto& v : f.c0.values()) v *= c;
  for (auto& v : f.c1.values()) v *= c;
  return f;
}

}  // namespace qhydro
