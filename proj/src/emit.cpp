#include "decaylab/emit.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "decaylab/error.hpp"
#include "decaylab/linear_propagator.hpp"

namespace decaylab {

namespace {

std::string rate_label(double r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", r);
    return buf;
}

std::string opt(const std::optional<double>& x) { return x ? format_double(*x) : ""; }

const char* kind_name(RootKind k) {
    switch (k) {
        case RootKind::RealSplit: return "real-split";
        case RootKind::Critical: return "critical";
        case RootKind::Complex: return "complex";
    }
    return "?";
}

void require_nonempty(const Trajectory& traj) {
    if (traj.empty()) throw Error(ErrorCode::InvalidArgument, "cannot emit an empty trajectory");
}

}  // namespace

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", x);
    return buf;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw Error(ErrorCode::IoError, "cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) {
            std::filesystem::remove(tmp, ec);
            throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::IoError, "cannot rename into " + path.string());
    }
}

std::string trajectory_csv(const Trajectory& traj) {
    require_nonempty(traj);
    const Index n = traj.spec().size();
    std::ostringstream out;
    out << kSchemaHeader << "\nt";
    for (Index k = 0; k < n; ++k) out << ",u_" << k;
    for (Index k = 0; k < n; ++k) out << ",v_" << k;
    out << '\n';
    for (std::size_t j = 0; j < traj.size(); ++j) {
        const PhasePair& x = traj.states()[j];
        out << format_double(traj.times()[j]);
        for (Index k = 0; k < n; ++k) out << ',' << format_double(x.u[k]);
        for (Index k = 0; k < n; ++k) out << ',' << format_double(x.v[k]);
        out << '\n';
    }
    return out.str();
}

std::string trace_csv(const OperatorSpec& spec, const DecayRateSet& rates, const Trajectory& traj, double p) {
    require_nonempty(traj);
    const EnergyTrace trace = energy_trace(spec, traj, {p});
    std::ostringstream out;
    out << kSchemaHeader << "\nt,norm_u,norm_Ahalf_u,norm_v,E,E_hat,G_p,G_hat_p";
    for (double r : rates.rates) out << ",comp_" << rate_label(r);
    out << '\n';
    for (std::size_t j = 0; j < traj.size(); ++j) {
        const EnergyPoint& e = trace.points[j];
        out << format_double(trace.times[j]) << ',' << format_double(e.norm_u) << ','
            << format_double(e.norm_a_half_u) << ',' << format_double(e.norm_v) << ',' << format_double(e.E) << ','
            << format_double(e.E_hat) << ',' << format_double(trace.G[0][j]) << ','
            << format_double(trace.G_hat[0][j]);
        const ComponentSplit split = split_components(spec, rates, traj.states()[j]);
        for (const PhasePair& c : split.components) out << ',' << format_double(energy_norm(spec, c));
        out << '\n';
    }
    return out.str();
}

std::string report_csv(const std::string& scenario, const DecayReport& r) {
    std::ostringstream out;
    out << kSchemaHeader
        << "\nscenario,verdict,p,q,fitted_power,fitted_rate,matched_r0,fit_model,M1,M2,T0,residual_gamma,beta0,"
           "gamma_bound,window_start,window_nodes,note\n";
    out << scenario << ',' << to_string(r.verdict) << ',' << format_double(r.p) << ',' << format_double(r.q) << ','
        << opt(r.fitted_power) << ',' << opt(r.fitted_rate) << ',' << opt(r.matched_r0) << ',' << r.fit_model << ',';
    if (r.constants)
        out << format_double(r.constants->M1) << ',' << format_double(r.constants->M2) << ','
            << format_double(r.constants->T0) << ',';
    else
        out << ",,,";
    std::string note = r.note;
    for (char& c : note)
        if (c == ',' || c == '\n') c = ';';
    out << opt(r.residual_gamma) << ',' << opt(r.beta0) << ',' << opt(r.gamma_bound) << ','
        << format_double(r.window_start) << ',' << r.window_nodes << ',' << note << '\n';
    return out.str();
}

std::string spectrum_csv(const OperatorSpec& spec, const DecayRateSet& rates) {
    std::ostringstream out;
    out << kSchemaHeader << "\nkind,index,lambda,root_kind,r1,r2,phi\n";
    for (Index k = 0; k < spec.size(); ++k) {
        const RootPair& root = spec.root(k);
        out << "mode," << k << ',' << format_double(root.lambda) << ',' << kind_name(root.kind) << ','
            << format_double(root.r1) << ',' << format_double(root.r2) << ',' << format_double(root.phi) << '\n';
    }
    for (std::size_t i = 0; i < rates.size(); ++i)
        out << "rate," << i << ',' << format_double(rates.rates[i]) << ",,,,\n";
    const NuMu nm = nu_mu(spec);
    out << "nu_mu,0," << format_double(nm.nu) << ",," << format_double(nm.mu) << ",,\n";
    return out.str();
}

std::string construction_csv(const FastSolution& s, const ProfileSpec& profile) {
    std::ostringstream out;
    out << kSchemaHeader
        << "\nr0,s0,gamma0,epsilon0,iterations,converged,contraction_factor,theoretical_factor,K1,K2,Gamma0,L,p,"
           "smallness_radius,smallness_product,smallness_overridden,envelope,envelope_breaches,sup_psi,"
           "fast_component_error,profile_residual,profile_residual_tail_sup,profile_residual_slope\n";
    out << format_double(profile.r0) << ',' << format_double(profile.s0) << ',' << format_double(profile.gamma0) << ','
        << format_double(profile.epsilon0) << ',' << s.iterations << ',' << (s.converged ? 1 : 0) << ','
        << format_double(s.contraction_factor) << ',' << format_double(s.theoretical_factor) << ','
        << format_double(s.K1) << ',' << format_double(s.K2) << ',' << format_double(s.Gamma0) << ','
        << format_double(s.L) << ',' << format_double(s.p) << ',' << format_double(s.smallness_radius) << ','
        << format_double(s.smallness_product) << ',' << (s.smallness_overridden ? 1 : 0) << ','
        << format_double(s.envelope) << ',' << s.envelope_breaches << ',' << format_double(s.sup_psi) << ','
        << format_double(s.fast_component_error) << ',' << format_double(s.profile_residual) << ','
        << format_double(s.profile_residual_tail_sup) << ',' << format_double(s.profile_residual_slope) << '\n';
    return out.str();
}

std::string iterations_csv(const FastSolution& s) {
    std::ostringstream out;
    out << kSchemaHeader << "\niteration,distance\n";
    for (std::size_t i = 0; i < s.distances.size(); ++i) out << i + 1 << ',' << format_double(s.distances[i]) << '\n';
    return out.str();
}

std::string profile_check_csv(const std::vector<FastProfileCheck>& checks) {
    std::ostringstream out;
    out << kSchemaHeader
        << "\ngamma,gamma_bound,sup_residual,final_residual,tail_slope,monotone_growth,verified\n";
    for (const auto& c : checks)
        out << format_double(c.gamma) << ',' << opt(c.gamma_bound) << ',' << format_double(c.sup_residual) << ','
            << format_double(c.final_residual) << ',' << format_double(c.tail_slope) << ','
            << (c.monotone_growth ? 1 : 0) << ',' << (c.verified ? 1 : 0) << '\n';
    return out.str();
}

std::string plot_series(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw Error(ErrorCode::DimensionMismatch, "plot series columns differ in length");
    if (x.empty()) throw Error(ErrorCode::InvalidArgument, "cannot emit an empty series");
    std::ostringstream out;
    out << kSchemaHeader << '\n';
    for (std::size_t i = 0; i < x.size(); ++i) out << format_double(x[i]) << ' ' << format_double(y[i]) << '\n';
    return out.str();
}

}  // namespace decaylab
