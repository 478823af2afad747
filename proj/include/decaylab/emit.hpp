#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "decaylab/diagnostics.hpp"
#include "decaylab/fast_constructor.hpp"
#include "decaylab/operator_model.hpp"
#include "decaylab/semilinear_integrator.hpp"

namespace decaylab {

/// First line of every CSV and plot-data file.
inline constexpr const char* kSchemaHeader = "# decay-lab v1";

/// Scientific notation with 17 significant digits; "nan", "inf", "-inf".
std::string format_double(double x);

/// Writes to a temporary sibling and renames it over `path`.  Throws IoError.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// t, u_0..u_{N-1}, v_0..v_{N-1} in mode coordinates.  Throws
/// InvalidArgument for an empty trajectory.
std::string trajectory_csv(const Trajectory& traj);

/// t, norm_u, norm_Ahalf_u, norm_v, E, E_hat, G_p, G_hat_p and one
/// comp_<rate> column per rate (energy norm of that component).
std::string trace_csv(const OperatorSpec& spec, const DecayRateSet& rates, const Trajectory& traj, double p);

/// Single-row classification report.
std::string report_csv(const std::string& scenario, const DecayReport& report);

/// One "mode" row per eigenvalue (lambda, root kind, r1, r2, phi), one
/// "rate" row per element of the rate set and a final "nu_mu" row.
std::string spectrum_csv(const OperatorSpec& spec, const DecayRateSet& rates);

/// Single-row construction summary.
std::string construction_csv(const FastSolution& result, const ProfileSpec& profile);

/// iteration, distance.
std::string iterations_csv(const FastSolution& result);

/// One row per checked gamma.
std::string profile_check_csv(const std::vector<FastProfileCheck>& checks);

/// Two whitespace-separated columns for plotting.
std::string plot_series(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace decaylab
