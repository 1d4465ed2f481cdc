#include "refugia/harness/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "refugia/error.hpp"

namespace refugia::harness {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 24.0;
constexpr double kTop = 24.0;
constexpr double kBottom = 48.0;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string tick(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

struct Frame {
  double mu0, mu1, a0, a1;
  double px(double mu) const { return kLeft + (mu - mu0) / (mu1 - mu0) * (kWidth - kLeft - kRight); }
  double py(double a) const { return kHeight - kBottom - (a - a0) / (a1 - a0) * (kHeight - kTop - kBottom); }
};

Frame make_frame(const std::vector<Branch>& branches, const BifurcationReport* report) {
  double mu0 = INFINITY, mu1 = -INFINITY, a1 = 0.0;
  for (const auto& b : branches) {
    for (const auto& p : b.points) {
      mu0 = std::min(mu0, p.mu);
      mu1 = std::max(mu1, p.mu);
      a1 = std::max(a1, p.amplitude);
    }
  }
  if (report) {
    mu0 = std::min(mu0, report->mu_star_detected);
    mu1 = std::max(mu1, report->mu_star_detected);
  }
  if (!std::isfinite(mu0)) mu0 = 0.0, mu1 = 1.0;
  if (mu1 - mu0 < 1e-12) mu0 -= 0.5, mu1 += 0.5;
  const double pad = 0.05 * (mu1 - mu0);
  if (a1 <= 0.0) a1 = 1.0;
  return {mu0 - pad, mu1 + pad, 0.0, 1.08 * a1};
}

// A segment is drawn solid when one end is STABLE and neither is UNSTABLE.
bool segment_stable(const BranchPoint& a, const BranchPoint& b) {
  if (a.flag == Stability::Unstable || b.flag == Stability::Unstable) return false;
  return a.flag == Stability::Stable || b.flag == Stability::Stable;
}

void overlays(std::ostream& out, const Branch& b, const Frame& f) {
  const auto& pts = b.points;
  std::size_t k = 0;
  while (k + 1 < pts.size()) {
    const bool stable = segment_stable(pts[k], pts[k + 1]);
    std::string d = "M" + fmt(f.px(pts[k].mu)) + ',' + fmt(f.py(pts[k].amplitude));
    std::size_t e = k + 1;
    for (; e < pts.size(); ++e) {
      if (segment_stable(pts[e - 1], pts[e]) != stable) break;
      d += " L" + fmt(f.px(pts[e].mu)) + ',' + fmt(f.py(pts[e].amplitude));
    }
    out << "  <path class=\"" << (stable ? "stable" : "unstable") << "\" data-branch=\"" << to_string(b.label)
        << "\" d=\"" << d << "\" fill=\"none\" stroke=\"black\" stroke-width=\"2\""
        << (stable ? "" : " stroke-dasharray=\"6 4\"") << "/>\n";
    k = e - 1;
  }
}

}  // namespace

std::string render_plot(const std::vector<Branch>& branches, const BifurcationReport* report) {
  const Frame f = make_frame(branches, report);
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  out << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  out << "  <g class=\"axes\" stroke=\"#444\" stroke-width=\"1\">\n";
  out << "    <line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x1) << "\" y2=\"" << fmt(y0)
      << "\"/>\n";
  out << "    <line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x0) << "\" y2=\"" << fmt(y1)
      << "\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double mu = f.mu0 + (f.mu1 - f.mu0) * t / 4.0;
    const double a = f.a0 + (f.a1 - f.a0) * t / 4.0;
    out << "    <line x1=\"" << fmt(f.px(mu)) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(f.px(mu)) << "\" y2=\""
        << fmt(y0 + 5) << "\"/>\n";
    out << "    <line x1=\"" << fmt(x0 - 5) << "\" y1=\"" << fmt(f.py(a)) << "\" x2=\"" << fmt(x0) << "\" y2=\""
        << fmt(f.py(a)) << "\"/>\n";
  }
  out << "  </g>\n";
  out << "  <g class=\"labels\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#222\">\n";
  for (int t = 0; t <= 4; ++t) {
    const double mu = f.mu0 + (f.mu1 - f.mu0) * t / 4.0;
    const double a = f.a0 + (f.a1 - f.a0) * t / 4.0;
    out << "    <text x=\"" << fmt(f.px(mu)) << "\" y=\"" << fmt(y0 + 18) << "\" text-anchor=\"middle\">" << tick(mu)
        << "</text>\n";
    out << "    <text x=\"" << fmt(x0 - 8) << "\" y=\"" << fmt(f.py(a) + 4) << "\" text-anchor=\"end\">" << tick(a)
        << "</text>\n";
  }
  out << "    <text x=\"" << fmt((x0 + x1) / 2) << "\" y=\"" << fmt(kHeight - 10)
      << "\" text-anchor=\"middle\">mu</text>\n";
  out << "    <text x=\"16\" y=\"" << fmt((y0 + y1) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << fmt((y0 + y1) / 2) << ")\">mean v over predator domain</text>\n";
  out << "  </g>\n";

  for (const auto& b : branches) {
    out << "  <polyline class=\"branch\" data-branch=\"" << to_string(b.label) << "\" points=\"";
    for (std::size_t k = 0; k < b.points.size(); ++k) {
      if (k) out << ' ';
      out << fmt(f.px(b.points[k].mu)) << ',' << fmt(f.py(b.points[k].amplitude));
    }
    out << "\" fill=\"none\" stroke=\"#bbb\" stroke-width=\"1\"/>\n";
  }
  for (const auto& b : branches) overlays(out, b, f);

  if (report) {
    out << "  <circle class=\"bifurcation\" cx=\"" << fmt(f.px(report->mu_star_detected)) << "\" cy=\""
        << fmt(f.py(0.0)) << "\" r=\"5\" fill=\"red\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

PlotOutcome emit_plot(const std::vector<Branch>& branches, const BifurcationReport* report,
                      const std::filesystem::path& path) {
  if (branches.empty()) return {false, "no branches to plot"};
  const std::string doc = render_plot(branches, report);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot open " + path.string());
  out << doc;
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
  return {true, {}};
}

}  // namespace refugia::harness
