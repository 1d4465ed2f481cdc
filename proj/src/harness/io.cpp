#include "refugia/harness/io.hpp"

#include <ostream>

#include <openssl/evp.h>

#include "refugia/error.hpp"
#include "refugia/harness/format.hpp"

namespace refugia::harness {

void write_state_csv(const SystemState& s, const DomainGeometry& geom, std::ostream& out) {
  out << "i,j,region,u,v\n";
  for (int k = 0; k < geom.cell_count(); ++k) {
    out << geom.cell_i(k) << ',' << geom.cell_j(k) << ',';
    if (geom.in_omega1(k)) {
      out << "predator," << format_double(s.u.values[k]) << ','
          << format_double(s.v.values[geom.omega1_index(k)]) << '\n';
    } else {
      out << "refuge," << format_double(s.u.values[k]) << ",\n";
    }
  }
}

void write_branch_csv(const Branch& branch, std::ostream& out) {
  out << "label,index,mu,amplitude,s,gamma,flag,residual_norm\n";
  for (std::size_t k = 0; k < branch.points.size(); ++k) {
    const auto& p = branch.points[k];
    out << to_string(branch.label) << ',' << k << ',' << format_double(p.mu) << ',' << format_double(p.amplitude)
        << ',' << format_double(p.s) << ',' << format_double(p.gamma) << ',' << to_string(p.flag) << ','
        << format_double(p.residual_norm) << '\n';
  }
}

void write_timeseries_csv(const std::vector<TransientSample>& history, std::ostream& out) {
  out << "t,u_inf,v_inf,dudt_inf,dvdt_inf\n";
  for (const auto& h : history) {
    out << format_double(h.t) << ',' << format_double(h.u_inf) << ',' << format_double(h.v_inf) << ','
        << format_double(h.dudt_inf) << ',' << format_double(h.dvdt_inf) << '\n';
  }
}

void write_sign_audit_csv(const SignAudit& audit, std::ostream& out) {
  out << "index,mu,gamma,verdict\n";
  for (const auto& r : audit.rows) {
    out << r.index << ',' << format_double(r.mu) << ',' << format_double(r.gamma) << ','
        << (r.pass ? "pass" : "fail") << '\n';
  }
}

namespace {

void put_cell(std::ostream& out, const char* name, const ExchangeCell& c) {
  out << "exchange." << name << ".stable = " << c.stable << '\n';
  out << "exchange." << name << ".unstable = " << c.unstable << '\n';
  out << "exchange." << name << ".marginal = " << c.marginal << '\n';
}

}  // namespace

void write_report(const BifurcationReport& r, std::ostream& out) {
  out << "mu_star.detected = " << format_double(r.mu_star_detected) << '\n';
  out << "mu_star.analytic = " << format_double(r.mu_star_analytic) << '\n';
  out << "mu_star.relative_gap = " << format_double(r.relative_gap) << '\n';
  out << "area.omega = " << format_double(r.area_omega) << '\n';
  out << "area.omega1 = " << format_double(r.area_omega1) << '\n';
  out << "refuge.empty = " << (r.refuge_empty ? "true" : "false") << '\n';
  if (r.tangent_cosine) out << "tangent.cosine = " << format_double(*r.tangent_cosine) << '\n';
  if (r.tangent_angle_deg) out << "tangent.angle_deg = " << format_double(*r.tangent_angle_deg) << '\n';
  if (r.slope_sign) out << "slope.sign = " << *r.slope_sign << '\n';
  out << "slope.mu_decreasing_initially = " << (r.mu_decreasing_initially ? "true" : "false") << '\n';
  out << "audit.status = " << to_string(r.audit_status) << '\n';
  out << "audit.rows = " << r.audit.rows.size() << '\n';
  out << "audit.passed = " << r.audit.passed() << '\n';
  if (!r.audit.warning.empty()) out << "audit.warning = " << r.audit.warning << '\n';
  put_cell(out, "semitrivial_below", r.semitrivial_below);
  put_cell(out, "semitrivial_above", r.semitrivial_above);
  put_cell(out, "nontrivial_below", r.nontrivial_below);
  put_cell(out, "nontrivial_above", r.nontrivial_above);
  out << "exchange.both_stable_window = " << (r.both_stable_window ? "true" : "false") << '\n';
  out << "exchange.ok = " << (r.exchange_ok ? "true" : "false") << '\n';
  for (std::size_t k = 0; k < r.notes.size(); ++k) out << "note." << k << " = " << r.notes[k] << '\n';
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::IoError, "SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string s;
  s.reserve(2 * len);
  for (unsigned int k = 0; k < len; ++k) {
    s += hex[digest[k] >> 4];
    s += hex[digest[k] & 0xf];
  }
  return s;
}

}  // namespace refugia::harness
