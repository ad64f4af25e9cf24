#pragma once

// Plain-text outputs. Numbers are written with 17 significant digits so files
// round-trip exactly and identical runs produce identical bytes.

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qhydro/eigensolver.hpp"
#include "qhydro/evolution.hpp"
#include "qhydro/sde.hpp"
#include "qhydro/uncertainty.hpp"

namespace qhydro {

std::string format_number(double x);

/// Columns r, theta, rho, Theta, v_r, v_theta (contravariant).
void write_field_csv(std::ostream& out, const MadelungState& state, const PairField& v);

/// Columns particle_id, t, r, theta_wrapped, winding.
void write_ensemble_csv(std::ostream& out, const Ensemble& ensemble, double t);

/// `#` metadata lines (alpha, n_r, epsilon) then columns r, sqrt_rho, rho.
void write_eigenstate_csv(std::ostream& out, const EigenstateSpec& spec);

/// Columns r, theta, count_density, reference_density per histogram cell.
void write_histogram_csv(std::ostream& out, const DensityEstimate& estimate, const Grid& cells,
                         const Field& reference_masses);

/// Columns r, theta, estimated, ur_plus, ur_plus_se, ut_plus, ut_plus_se,
/// ur_minus, ur_minus_se, ut_minus, ut_minus_se per histogram cell.
void write_drift_csv(std::ostream& out, const DriftEstimate& estimate);

/// Columns time, norm, energy, continuity, hydro_radial, hydro_angular,
/// hydro_skipped, radial_margin, angular_margin, min_margin.
void write_audit_csv(std::ostream& out, const std::vector<AuditRecord>& audits);

nlohmann::ordered_json to_json(const UncertaintyReport& report);
nlohmann::ordered_json to_json(const EnsembleReport& report);

/// One header and one data row. Grid columns are prefixed `grid_`; when
/// `ensemble` is given its values and standard errors follow as `ens_` and
/// `ens_se_` columns.
void write_uncertainty_csv(std::ostream& out, const UncertaintyReport& grid, const EnsembleReport* ensemble);

}  // namespace qhydro
