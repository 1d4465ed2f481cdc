#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "refugia/continuation.hpp"
#include "refugia/dynamics.hpp"
#include "refugia/geometry.hpp"
#include "refugia/operators.hpp"

namespace refugia::harness {

/// One row per cell: i,j,region,u,v. v is blank on refuge cells.
void write_state_csv(const SystemState& s, const DomainGeometry& geom, std::ostream& out);

/// label,index,mu,amplitude,s,gamma,flag,residual_norm
void write_branch_csv(const Branch& branch, std::ostream& out);

/// t,u_inf,v_inf,dudt_inf,dvdt_inf
void write_timeseries_csv(const std::vector<TransientSample>& history, std::ostream& out);

/// index,mu,gamma,verdict
void write_sign_audit_csv(const SignAudit& audit, std::ostream& out);

/// Flat key = value summary.
void write_report(const BifurcationReport& report, std::ostream& out);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);

}  // namespace refugia::harness
