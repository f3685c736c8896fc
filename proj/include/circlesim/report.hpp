#pragma once

#include <string>
#include <vector>

#include "circlesim/analytics.hpp"
#include "circlesim/simulate.hpp"
#include "circlesim/verification.hpp"

namespace circlesim {

std::string report_to_json(const VerificationReport& rep);
std::string reports_to_json(const std::vector<VerificationReport>& reps);

/// summary.json payload: {gamma, J, e, splitting_probability, reversible,
/// flux_constant, density_csv_path, model_hash}.
std::string summary_to_json(const ModelSummary& summary, const std::string& density_csv_path);

void write_text_file(const std::string& path, const std::string& content);

/// CSV columns x,rho.
void write_density_csv(const std::string& path, const std::vector<double>& grid,
                       const std::vector<double>& density);

/// CSV of a report's curve rows under its header.
void write_curve_csv(const std::string& path, const VerificationReport& rep);

/// CSV log export: columns path_id,n,T_n,xi_n.
void write_cycle_log_csv(const std::string& path,
                         const std::vector<std::pair<std::uint64_t, const class CycleEventLog*>>&
                             logs);

/// Small-run CSV export of full paths: columns path_id,t,x.
void write_paths_csv(const std::string& path, const std::vector<PathRecord>& records);

/// Binary path dump: ASCII header line (magic, model_hash, config digest,
/// n_paths, n_samples) then row-major float64 positions.
void write_path_dump(const std::string& path, const std::string& model_hash,
                     const std::string& config_digest,
                     const std::vector<PathRecord>& records);

} // namespace circlesim
