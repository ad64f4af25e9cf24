#include "qhydro/io.hpp"

#include <cstdio>

namespace qhydro {

std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

const char* coord_name(ChartKind chart, int i) {
  if (chart == ChartKind::polar) return i == 0 ? "r" : "theta";
  return i == 0 ? "x" : "y";
}

void row(std::ostream& out, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) out << ',';
    out << format_number(v);
    first = false;
  }
  out << '\n';
}

// "/coords/r/mean" -> "coords_r_mean"
std::string column_name(const std::string& pointer) {
  std::string s = pointer.substr(1);
  for (auto& c : s)
    if (c == '/') c = '_';
  return s;
}

void append_columns(const nlohmann::ordered_json& doc, const std::string& prefix, std::vector<std::string>& names,
                    std::vector<std::string>& values) {
  const auto flat = doc.flatten();
  for (const auto& [pointer, value] : flat.items()) {
    names.push_back(prefix + column_name(pointer));
    if (value.is_number_float())
      values.push_back(format_number(value.get<double>()));
    else if (value.is_string())
      values.push_back(value.get<std::string>());
    else
      values.push_back(value.dump());
  }
}

}  // namespace

void write_field_csv(std::ostream& out, const MadelungState& state, const PairField& v) {
  const Grid& g = state.g();
  out << "r,theta,rho,Theta,v_r,v_theta\n";
  for (std::size_t i = 0; i < g.n0(); ++i)
    for (std::size_t j = 0; j < g.n1(); ++j) {
      const Point2 q = g.point(i, j);
      row(out, {q.q0, q.q1, state.rho(i, j), state.phase(i, j), v.c0(i, j), v.c1(i, j)});
    }
}

void write_ensemble_csv(std::ostream& out, const Ensemble& ensemble, double t) {
  out << "particle_id,t,r,theta_wrapped,winding\n";
  const std::string ts = format_number(t);
  for (std::size_t k = 0; k < ensemble.size(); ++k) {
    const Particle p = ensemble.particle(k);
    out << k << ',' << ts << ',' << format_number(p.r) << ',' << format_number(p.wrapped()) << ','
        << p.winding() << '\n';
  }
}

void write_eigenstate_csv(std::ostream& out, const EigenstateSpec& spec) {
  out << "# alpha=" << format_number(spec.alpha) << '\n';
  out << "# n_r=" << spec.n_r << '\n';
  out << "# epsilon=" << format_number(spec.epsilon) << '\n';
  out << "r,sqrt_rho,rho\n";
  for (std::size_t i = 0; i < spec.mesh.n; ++i) {
    const double a = spec.radial_profile[i];
    row(out, {spec.mesh.node(i), a, a * a});
  }
}

void write_histogram_csv(std::ostream& out, const DensityEstimate& estimate, const Grid& cells,
                         const Field& reference_masses) {
  out << "r,theta,count_density,reference_density\n";
  for (std::size_t i = 0; i < cells.n0(); ++i)
    for (std::size_t j = 0; j < cells.n1(); ++j) {
      const Point2 q = cells.point(i, j);
      row(out, {q.q0, q.q1, estimate.rho(i, j), reference_masses(i, j) / cells.cell_weight(i)});
    }
}

void write_drift_csv(std::ostream& out, const DriftEstimate& e) {
  out << "r,theta,estimated,ur_plus,ur_plus_se,ut_plus,ut_plus_se,ur_minus,ur_minus_se,ut_minus,ut_minus_se\n";
  for (std::size_t i = 0; i < e.cells.n0(); ++i)
    for (std::size_t j = 0; j < e.cells.n1(); ++j) {
      const Point2 q = e.cells.point(i, j);
      const std::size_t k = i * e.cells.n1() + j;
      out << format_number(q.q0) << ',' << format_number(q.q1) << ',' << int(e.estimated[k]) << ',';
      row(out, {e.u_plus.c0[k], e.se_plus.c0[k], e.u_plus.c1[k], e.se_plus.c1[k], e.u_minus.c0[k],
                e.se_minus.c0[k], e.u_minus.c1[k], e.se_minus.c1[k]});
    }
}

void write_audit_csv(std::ostream& out, const std::vector<AuditRecord>& audits) {
  out << "time,norm,energy,continuity,hydro_radial,hydro_angular,hydro_skipped,radial_margin,angular_margin,"
         "min_margin\n";
  for (const auto& a : audits) {
    out << format_number(a.time) << ',' << format_number(a.norm) << ',' << format_number(a.energy) << ','
        << format_number(a.continuity) << ',' << format_number(a.hydro.radial) << ','
        << format_number(a.hydro.angular) << ',' << int(a.hydro.skipped) << ',';
    row(out, {a.radial_margin, a.angular_margin, a.min_margin});
  }
}

nlohmann::ordered_json to_json(const UncertaintyReport& report) {
  nlohmann::ordered_json doc;
  doc["chart"] = report.chart == ChartKind::polar ? "polar" : "cartesian";
  for (int i = 0; i < 2; ++i) {
    const CoordinateStats& c = report.coords[i];
    doc["coords"][coord_name(report.chart, i)] = {
        {"mean", c.mean},
        {"variance", c.variance},
        {"momentum_mean", c.momentum_mean},
        {"variance_plus", c.variance_plus},
        {"variance_minus", c.variance_minus},
        {"sigma2", c.sigma2},
        {"osmotic_part", c.osmotic_part},
        {"current_part", c.current_part},
        {"decomposition_error", c.decomposition_error},
    };
  }
  for (const BoundTerms& b : report.bounds) {
    const std::string key = std::string(coord_name(report.chart, b.i)) + "_" + coord_name(report.chart, b.j);
    doc["bounds"][key] = {
        {"position_variance", b.position_variance},
        {"momentum_sigma2", b.momentum_sigma2},
        {"lhs", b.lhs},
        {"delta", b.delta},
        {"boundary_flux_lower", b.boundary_flux_lower},
        {"boundary_flux_upper", b.boundary_flux_upper},
        {"christoffel_term", b.christoffel_term},
        {"kennard_term", b.kennard_term},
        {"covariance", b.covariance},
        {"covariance_term", b.covariance_term},
        {"rhs", b.rhs},
        {"margin", b.margin},
    };
  }
  doc["r_moment_product"] = report.r_moment_product;
  doc["min_margin"] = report.min_margin();
  return doc;
}

nlohmann::ordered_json to_json(const EnsembleReport& report) {
  nlohmann::ordered_json doc;
  doc["particles"] = report.particles;
  doc["blocks"] = report.blocks;
  doc["inverse_r_clip_fraction"] = report.inverse_r_clip_fraction;
  doc["value"] = to_json(report.value);
  doc["standard_error"] = to_json(report.standard_error);
  return doc;
}

void write_uncertainty_csv(std::ostream& out, const UncertaintyReport& grid, const EnsembleReport* ensemble) {
  std::vector<std::string> names, values;
  append_columns(to_json(grid), "grid_", names, values);
  if (ensemble) {
    names.push_back("ens_particles");
    values.push_back(std::to_string(ensemble->particles));
    append_columns(to_json(ensemble->value), "ens_", names, values);
    append_columns(to_json(ensemble->standard_error), "ens_se_", names, values);
  }
  for (std::size_t k = 0; k < names.size(); ++k) out << (k ? "," : "") << names[k];
  out << '\n';
  for (std::size_t k = 0; k < values.size(); ++k) out << (k ? "," : "") << values[k];
  out << '\n';
}

}  // namespace qhydro
