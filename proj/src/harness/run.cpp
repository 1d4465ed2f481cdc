#include "refugia/harness/run.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "refugia/continuation.hpp"
#include "refugia/dynamics.hpp"
#include "refugia/harness/format.hpp"
#include "refugia/harness/io.hpp"
#include "refugia/harness/plot.hpp"
#include "refugia/spectral.hpp"
#include "refugia/steady.hpp"

namespace fs = std::filesystem;

namespace refugia::harness {

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class DirectoryLock {
 public:
  explicit DirectoryLock(fs::path path) : path_(std::move(path)) {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      throw Error(Errc::IoError, "output directory is locked (" + path_.string() + " exists) or not writable");
    }
  }
  ~DirectoryLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Run {
 public:
  Run(const RunConfig& cfg, std::ostream* log) : cfg_(cfg), dir_(cfg.output), log_(log) {}

  RunManifest& manifest() { return m_; }

  void write(const std::string& rel, const std::function<void(std::ostream&)>& body) {
    const fs::path p = dir_ / rel;
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(Errc::IoError, "cannot open " + p.string());
    body(out);
    out.close();
    if (!out) throw Error(Errc::IoError, "write failed for " + p.string());
  }

  /// Runs one stage; errors become a failed outcome.
  bool stage(const std::string& name, const std::function<std::string()>& body) {
    StageOutcome o{name, false, {}};
    if (log_) *log_ << "[" << name << "] ..." << std::flush;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o.detail = body();
      o.ok = true;
    } catch (const Error& e) {
      if (e.code() == Errc::IoError) throw;
      o.detail = e.what();
    } catch (const std::exception& e) {
      o.detail = e.what();
    }
    if (log_) {
      const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      *log_ << (o.ok ? " ok" : " FAILED") << " (" << format_seconds(sec) << ")";
      if (!o.detail.empty()) *log_ << ": " << o.detail;
      *log_ << '\n';
    }
    m_.stages.push_back(o);
    return o.ok;
  }

  void fail(const std::string& name, const std::string& detail) { m_.stages.push_back({name, false, detail}); }

  const RunConfig& cfg() const { return cfg_; }

 private:
  static std::string format_seconds(double s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2fs", s);
    return buf;
  }

  const RunConfig& cfg_;
  fs::path dir_;
  std::ostream* log_;
  RunManifest m_;
};

std::string file_label(BranchLabel label) {
  return label == BranchLabel::Semitrivial ? "semitrivial" : "nontrivial";
}

std::string state_name(BranchLabel label, std::size_t k) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "states/%s_%03zu.csv", file_label(label).c_str(), k);
  return buf;
}

void write_branch(Run& run, const Branch& b, const DomainGeometry& geom) {
  const std::string label = file_label(b.label);
  run.write("branch_" + label + ".csv", [&](std::ostream& o) { write_branch_csv(b, o); });
  const auto every = static_cast<std::size_t>(run.cfg().continuation.sample_every);
  for (std::size_t k = 0; k < b.points.size(); ++k) {
    if (k % every != 0 && k + 1 != b.points.size()) continue;
    run.write(state_name(b.label, k), [&](std::ostream& o) { write_state_csv(b.points[k].state, geom, o); });
  }
}

SystemState initial_state(const RunConfig& cfg, const DomainGeometry& geom) {
  SystemState s = uniform_state(geom, cfg.initial.u0 * cfg.params.lambda, cfg.initial.v0);
  if (cfg.initial.perturbation > 0.0) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> xi(-1.0, 1.0);
    for (Eigen::Index k = 0; k < s.u.values.size(); ++k) s.u.values[k] *= 1.0 + cfg.initial.perturbation * xi(rng);
    for (Eigen::Index k = 0; k < s.v.values.size(); ++k) s.v.values[k] *= 1.0 + cfg.initial.perturbation * xi(rng);
  }
  return s;
}

void run_simulate(Run& run, const DomainGeometry& geom) {
  const RunConfig& cfg = run.cfg();
  run.stage("transient", [&] {
    cfg.params.validate_transient();
    const TransientResult r = run_to_steady(initial_state(cfg, geom), cfg.params, cfg.transient, geom);
    run.write("timeseries.csv", [&](std::ostream& o) { write_timeseries_csv(r.history, o); });
    run.write("final_state.csv", [&](std::ostream& o) { write_state_csv(r.state, geom, o); });
    return std::string("converged=") + (r.converged ? "true" : "false") + " t=" + format_double(r.t) +
           " steps=" + std::to_string(r.steps);
  });
}

void run_steady(Run& run, const DomainGeometry& geom) {
  const RunConfig& cfg = run.cfg();
  std::optional<NewtonResult> solved;
  run.stage("newton", [&] {
    cfg.params.validate();
    const KernelTangent kernel = solve_kernel_function(cfg.params, geom);
    SystemState guess = semitrivial_state(cfg.params, geom);
    guess.u.values -= cfg.steady_v0 * kernel.alpha.values;
    guess.u.values = guess.u.values.cwiseMax(0.0);
    guess.v.values.setConstant(cfg.steady_v0);
    solved = newton_solve(guess, cfg.params, cfg.newton, geom);
    run.write("state.csv", [&](std::ostream& o) { write_state_csv(solved->state, geom, o); });
    run.write("newton_history.csv", [&](std::ostream& o) {
      o << "iteration,residual_norm\n";
      for (std::size_t k = 0; k < solved->residual_history.size(); ++k) {
        o << k << ',' << format_double(solved->residual_history[k]) << '\n';
      }
    });
    return "iterations=" + std::to_string(solved->iterations) + " residual=" + format_double(solved->residual_norm);
  });
  if (!solved) return;
  run.stage("stability", [&] {
    const SparseOperator J = assemble_jacobian(cfg.params, solved->state, geom);
    const EigenPair ep = leading_eigenvalue(J);
    const Stability flag = classify(ep.value);
    run.write("steady_report.txt", [&](std::ostream& o) {
      o << "mu = " << format_double(cfg.params.mu) << '\n';
      o << "iterations = " << solved->iterations << '\n';
      o << "residual_norm = " << format_double(solved->residual_norm) << '\n';
      o << "amplitude = " << format_double(amplitude(solved->state, geom)) << '\n';
      o << "u.max = " << format_double(solved->state.u.values.maxCoeff()) << '\n';
      o << "v.max = " << format_double(solved->state.v.values.size() ? solved->state.v.values.maxCoeff() : 0.0)
        << '\n';
      o << "gamma = " << format_double(ep.value) << '\n';
      o << "gamma.imag = " << format_double(ep.imag) << '\n';
      o << "gamma.residual = " << format_double(ep.residual_norm) << '\n';
      o << "stability = " << to_string(flag) << '\n';
    });
    if (cfg.outputs.dump_jacobian) run.write("jacobian.coo", [&](std::ostream& o) { write_coo(J, o); });
    return "gamma=" + format_double(ep.value) + " " + std::string(to_string(flag));
  });
}

void run_branches(Run& run, const DomainGeometry& geom) {
  const RunConfig& cfg = run.cfg();
  const bool reporting = cfg.kind != ExperimentKind::Continue;
  ContinuationConfig cc;
  cc.newton.tol_residual = cfg.newton.tol_residual;
  cc.max_amplitude = cfg.continuation.max_amplitude;

  std::optional<Branch> semi;
  std::optional<double> mu_star;
  std::optional<BranchPoint> start;
  std::optional<Branch> nontrivial;

  run.stage("semitrivial", [&] {
    cfg.params.validate();
    semi = trace_semitrivial(cfg.params, cfg.mu_range->min, cfg.mu_range->max, cfg.mu_range->points, geom, cc.eigen);
    write_branch(run, *semi, geom);
    return std::to_string(semi->points.size()) + " points";
  });
  if (!semi) return;

  if (run.stage("detect", [&] {
        mu_star = detect_transcritical(*semi, geom, cc.eigen);
        return "mu_star=" + format_double(*mu_star);
      })) {
    if (run.stage("switch", [&] {
          start = branch_switch(*mu_star, cfg.params, geom, cfg.continuation.s0, cc);
          return "mu=" + format_double(start->mu) + " amplitude=" + format_double(start->amplitude);
        })) {
      run.stage("continuation", [&] {
        ExtendedVector dir{Eigen::VectorXd::Zero(unknown_count(geom)), 0.0};
        dir.x.tail(geom.omega1_count()).setOnes();
        nontrivial = continue_branch(*start, dir, cfg.continuation.steps, cfg.continuation.ds,
                                     BranchLabel::Nontrivial, cfg.params, geom, cc);
        write_branch(run, *nontrivial, geom);
        return std::to_string(nontrivial->points.size()) + " points, " +
               std::string(to_string(nontrivial->termination));
      });
    }
  }
  if (!reporting) return;

  std::optional<BifurcationReport> report;
  if (mu_star) {
    run.stage("report", [&] {
      report = build_report(*semi, nontrivial ? &*nontrivial : nullptr, *mu_star, cfg.params, geom);
      run.write("report.txt", [&](std::ostream& o) { write_report(*report, o); });
      run.write("sign_audit.csv", [&](std::ostream& o) { write_sign_audit_csv(report->audit, o); });
      return "relative_gap=" + format_double(report->relative_gap) + " audit=" +
             std::string(to_string(report->audit_status));
    });
  }
  run.stage("plot", [&] {
    std::vector<Branch> branches{*semi};
    if (nontrivial) branches.push_back(*nontrivial);
    const auto outcome = emit_plot(branches, report ? &*report : nullptr, fs::path(cfg.output) / "bifurcation.svg");
    if (!outcome.written) throw Error(Errc::IoError, outcome.diagnostic);
    return std::string("bifurcation.svg");
  });

  if (cfg.kind == ExperimentKind::Verify) {
    if (!report) {
      run.fail("verify", "no report: bifurcation point not located");
      return;
    }
    const BifurcationReport& r = *report;
    std::vector<std::string> failed;
    if (!(r.relative_gap <= 1e-3)) failed.push_back("relative_gap=" + format_double(r.relative_gap));
    if (!(r.slope_sign && *r.slope_sign < 0)) failed.push_back("slope sign not negative");
    if (r.audit_status != AuditStatus::Passed) failed.push_back("sign audit " + std::string(to_string(r.audit_status)));
    if (!r.exchange_ok) failed.push_back("stability exchange not confirmed");
    if (failed.empty()) {
      run.stage("verify", [] { return std::string("all checks passed"); });
    } else {
      std::string d;
      for (const auto& f : failed) d += (d.empty() ? "" : "; ") + f;
      run.fail("verify", d);
    }
  }
}

std::vector<FileRecord> inventory(const fs::path& dir) {
  std::vector<FileRecord> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), dir).generic_string();
    if (rel == kManifestName || rel == kLockName) continue;
    const std::string bytes = read_file(entry.path());
    files.push_back({rel, bytes.size(), sha256_hex(bytes)});
  }
  std::sort(files.begin(), files.end(), [](const FileRecord& a, const FileRecord& b) { return a.path < b.path; });
  return files;
}

}  // namespace

void write_manifest(const RunManifest& m, std::ostream& out) {
  out << "tool_version = " << m.tool_version << '\n';
  out << "start = " << m.start << '\n';
  out << "end = " << m.end << '\n';
  out << "exit_status = " << m.exit_status << '\n';
  for (std::size_t k = 0; k < m.stages.size(); ++k) {
    const auto& s = m.stages[k];
    out << "stage." << k << ".name = " << s.name << '\n';
    out << "stage." << k << ".status = " << (s.ok ? "ok" : "failed") << '\n';
    if (!s.detail.empty()) out << "stage." << k << ".detail = " << s.detail << '\n';
  }
  for (std::size_t k = 0; k < m.files.size(); ++k) {
    const auto& f = m.files[k];
    out << "file." << k << ".path = " << f.path << '\n';
    out << "file." << k << ".bytes = " << f.bytes << '\n';
    out << "file." << k << ".sha256 = " << f.sha256 << '\n';
  }
  std::istringstream cfg(render_config(m.config));
  for (std::string line; std::getline(cfg, line);) {
    if (!line.empty()) out << "config." << line << '\n';
  }
}

RunManifest run_experiment(const RunConfig& cfg, std::ostream* log) {
  const fs::path dir(cfg.output);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
  DirectoryLock lock(dir / kLockName);

  Run run(cfg, log);
  RunManifest& m = run.manifest();
  m.config = cfg;
  m.tool_version = std::string(kToolVersion);
  m.start = utc_now();

  std::optional<DomainGeometry> geom;
  run.stage("geometry", [&] {
    geom.emplace(build_geometry(cfg.grid, cfg.refuge));
    attack_rate_field(*geom, cfg.params.b);
    if (cfg.outputs.dump_mask) run.write("mask.pgm", [&](std::ostream& o) { write_mask_pgm(*geom, o); });
    return "cells=" + std::to_string(geom->cell_count()) + " omega1=" + std::to_string(geom->omega1_count());
  });
  if (geom) {
    switch (cfg.kind) {
      case ExperimentKind::Simulate: run_simulate(run, *geom); break;
      case ExperimentKind::Steady: run_steady(run, *geom); break;
      case ExperimentKind::Continue:
      case ExperimentKind::Bifurcate:
      case ExperimentKind::Verify: run_branches(run, *geom); break;
    }
  }

  m.exit_status = std::all_of(m.stages.begin(), m.stages.end(), [](const StageOutcome& s) { return s.ok; }) ? 0 : 1;
  m.end = utc_now();
  m.files = inventory(dir);
  run.write(std::string(kManifestName), [&](std::ostream& o) { write_manifest(m, o); });
  return m;
}

}  // namespace refugia::harness
