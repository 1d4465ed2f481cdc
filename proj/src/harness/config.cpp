#include "refugia/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "refugia/harness/format.hpp"

namespace refugia::harness {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

template <typename Int>
std::optional<Int> to_int(std::string_view s) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<bool> to_bool(std::string_view s) {
  if (s == "true") return true;
  if (s == "false") return false;
  return std::nullopt;
}

std::string_view refuge_name(RefugeKind k) {
  switch (k) {
    case RefugeKind::Empty: return "empty";
    case RefugeKind::Rectangle: return "rectangle";
    case RefugeKind::Disc: return "disc";
  }
  return "empty";
}

using Setter = std::function<std::optional<std::string>(RunConfig&, std::string_view)>;
using Renderer = std::function<std::optional<std::string>(const RunConfig&)>;

struct KeySpec {
  std::string key;
  Setter set;
  Renderer render;
};

Setter set_double(std::function<double&(RunConfig&)> field) {
  return [field](RunConfig& c, std::string_view v) -> std::optional<std::string> {
    const auto d = to_double(v);
    if (!d) return "expected a finite number, got '" + std::string(v) + "'";
    field(c) = *d;
    return std::nullopt;
  };
}

Renderer render_double(std::function<double(const RunConfig&)> field) {
  return [field](const RunConfig& c) -> std::optional<std::string> { return format_double(field(c)); };
}

template <typename Int>
Setter set_int(std::function<Int&(RunConfig&)> field) {
  return [field](RunConfig& c, std::string_view v) -> std::optional<std::string> {
    const auto d = to_int<Int>(v);
    if (!d) return "expected an integer, got '" + std::string(v) + "'";
    field(c) = *d;
    return std::nullopt;
  };
}

Setter set_bool(std::function<bool&(RunConfig&)> field) {
  return [field](RunConfig& c, std::string_view v) -> std::optional<std::string> {
    const auto d = to_bool(v);
    if (!d) return "expected true or false, got '" + std::string(v) + "'";
    field(c) = *d;
    return std::nullopt;
  };
}

MuRange& range_of(RunConfig& c) {
  if (!c.mu_range) c.mu_range.emplace();
  return *c.mu_range;
}

bool refuge_has(const RunConfig& c, std::string_view field) {
  switch (c.refuge.kind) {
    case RefugeKind::Empty: return false;
    case RefugeKind::Rectangle: return field != "radius";
    case RefugeKind::Disc: return field == "cx" || field == "cy" || field == "radius";
  }
  return false;
}

#define DOUBLE_KEY(name, expr) \
  KeySpec{name, set_double([](RunConfig& c) -> double& { return expr; }), render_double([](const RunConfig& c) { return expr; })}
#define INT_KEY(type, name, expr)                                                  \
  KeySpec {                                                                        \
    name, set_int<type>([](RunConfig& c) -> type& { return expr; }),               \
        [](const RunConfig& c) -> std::optional<std::string> { return std::to_string(expr); } \
  }
#define BOOL_KEY(name, expr)                                                                   \
  KeySpec {                                                                                    \
    name, set_bool([](RunConfig& c) -> bool& { return expr; }),                                \
        [](const RunConfig& c) -> std::optional<std::string> { return (expr) ? "true" : "false"; } \
  }

KeySpec refuge_key(const char* field, double RefugeShape::*member) {
  return KeySpec{std::string("geometry.refuge.") + field,
                 set_double([member](RunConfig& c) -> double& { return c.refuge.*member; }),
                 [field, member](const RunConfig& c) -> std::optional<std::string> {
                   if (!refuge_has(c, field)) return std::nullopt;
                   return format_double(c.refuge.*member);
                 }};
}

KeySpec range_key(const char* name, double MuRange::*member) {
  return KeySpec{name, set_double([member](RunConfig& c) -> double& { return range_of(c).*member; }),
                 [member](const RunConfig& c) -> std::optional<std::string> {
                   if (!c.mu_range) return std::nullopt;
                   return format_double((*c.mu_range).*member);
                 }};
}

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = [] {
    std::vector<KeySpec> t;
    t.push_back({"experiment.kind",
                 [](RunConfig& c, std::string_view v) -> std::optional<std::string> {
                   const auto k = parse_kind(v);
                   if (!k) return "unknown experiment kind '" + std::string(v) + "'";
                   c.kind = *k;
                   return std::nullopt;
                 },
                 [](const RunConfig& c) -> std::optional<std::string> { return std::string(to_string(c.kind)); }});
    t.push_back({"experiment.output",
                 [](RunConfig& c, std::string_view v) -> std::optional<std::string> {
                   c.output = std::string(v);
                   return std::nullopt;
                 },
                 [](const RunConfig& c) -> std::optional<std::string> { return c.output; }});
    t.push_back(INT_KEY(std::uint64_t, "experiment.seed", c.seed));

    t.push_back(INT_KEY(int, "geometry.nx", c.grid.nx));
    t.push_back(INT_KEY(int, "geometry.ny", c.grid.ny));
    t.push_back(DOUBLE_KEY("geometry.lx", c.grid.lx));
    t.push_back(DOUBLE_KEY("geometry.ly", c.grid.ly));
    t.push_back({"geometry.refuge.kind",
                 [](RunConfig& c, std::string_view v) -> std::optional<std::string> {
                   if (v == "empty") c.refuge.kind = RefugeKind::Empty;
                   else if (v == "rectangle") c.refuge.kind = RefugeKind::Rectangle;
                   else if (v == "disc") c.refuge.kind = RefugeKind::Disc;
                   else return "refuge kind must be empty, rectangle or disc";
                   return std::nullopt;
                 },
                 [](const RunConfig& c) -> std::optional<std::string> { return std::string(refuge_name(c.refuge.kind)); }});
    t.push_back(refuge_key("cx", &RefugeShape::cx));
    t.push_back(refuge_key("cy", &RefugeShape::cy));
    t.push_back(refuge_key("half_x", &RefugeShape::half_x));
    t.push_back(refuge_key("half_y", &RefugeShape::half_y));
    t.push_back(refuge_key("radius", &RefugeShape::radius));

    t.push_back(DOUBLE_KEY("params.lambda", c.params.lambda));
    t.push_back(DOUBLE_KEY("params.m", c.params.m));
    t.push_back(DOUBLE_KEY("params.c", c.params.c));
    t.push_back(DOUBLE_KEY("params.b", c.params.b));
    t.push_back({"params.mu",
                 [](RunConfig& c, std::string_view v) -> std::optional<std::string> {
                   const auto d = to_double(v);
                   if (!d) return "expected a finite number, got '" + std::string(v) + "'";
                   c.mu = *d;
                   c.params.mu = *d;
                   return std::nullopt;
                 },
                 [](const RunConfig& c) -> std::optional<std::string> {
                   if (!c.mu) return std::nullopt;
                   return format_double(*c.mu);
                 }});
    t.push_back(range_key("params.mu_min", &MuRange::min));
    t.push_back(range_key("params.mu_max", &MuRange::max));
    t.push_back({"params.mu_points",
                 set_int<int>([](RunConfig& c) -> int& { return range_of(c).points; }),
                 [](const RunConfig& c) -> std::optional<std::string> {
                   if (!c.mu_range) return std::nullopt;
                   return std::to_string(c.mu_range->points);
                 }});
    t.push_back(DOUBLE_KEY("params.D_u", c.params.D_u));
    t.push_back(DOUBLE_KEY("params.D_v", c.params.D_v));
    t.push_back(DOUBLE_KEY("params.r", c.params.r));

    t.push_back(DOUBLE_KEY("newton.tol", c.newton.tol_residual));
    t.push_back(INT_KEY(int, "newton.max_iter", c.newton.max_iter));

    t.push_back(DOUBLE_KEY("transient.dt", c.transient.dt));
    t.push_back(DOUBLE_KEY("transient.t_end", c.transient.t_end));
    t.push_back(DOUBLE_KEY("transient.steady_tol", c.transient.steady_tol));
    t.push_back(INT_KEY(int, "transient.max_steps", c.transient.max_steps));
    t.push_back(INT_KEY(int, "transient.record_every", c.transient.record_every));
    t.push_back(DOUBLE_KEY("transient.u0", c.initial.u0));
    t.push_back(DOUBLE_KEY("transient.v0", c.initial.v0));
    t.push_back(DOUBLE_KEY("transient.perturbation", c.initial.perturbation));

    t.push_back(DOUBLE_KEY("steady.v0", c.steady_v0));

    t.push_back(DOUBLE_KEY("continuation.s0", c.continuation.s0));
    t.push_back(DOUBLE_KEY("continuation.ds", c.continuation.ds));
    t.push_back(INT_KEY(int, "continuation.steps", c.continuation.steps));
    t.push_back(DOUBLE_KEY("continuation.max_amplitude", c.continuation.max_amplitude));
    t.push_back(INT_KEY(int, "continuation.sample_every", c.continuation.sample_every));

    t.push_back(BOOL_KEY("output.dump_mask", c.outputs.dump_mask));
    t.push_back(BOOL_KEY("output.dump_jacobian", c.outputs.dump_jacobian));
    return t;
  }();
  return table;
}

#undef DOUBLE_KEY
#undef INT_KEY
#undef BOOL_KEY

bool needs_range(ExperimentKind k) {
  return k == ExperimentKind::Continue || k == ExperimentKind::Bifurcate || k == ExperimentKind::Verify;
}

std::vector<ConfigIssue> validate(const RunConfig& c, const std::map<std::string, int>& lines, bool kind_given) {
  std::vector<ConfigIssue> issues;
  auto line_of = [&](const std::string& key) {
    const auto it = lines.find(key);
    return it == lines.end() ? 0 : it->second;
  };
  auto check = [&](bool ok, const std::string& key, const std::string& msg) {
    if (!ok) issues.push_back({line_of(key), key, msg});
  };

  check(kind_given, "experiment.kind", "missing experiment kind (set it or pass a subcommand)");
  check(!c.output.empty(), "experiment.output", "output directory must not be empty");
  for (const char* key : {"params.lambda", "params.m", "params.c", "params.b"}) {
    check(lines.count(key) > 0, key, "required key is missing");
  }

  check(c.grid.nx >= 4, "geometry.nx", "must be >= 4");
  check(c.grid.ny >= 4, "geometry.ny", "must be >= 4");
  check(c.grid.lx > 0.0, "geometry.lx", "must be > 0");
  check(c.grid.ly > 0.0, "geometry.ly", "must be > 0");
  if (c.refuge.kind == RefugeKind::Rectangle) {
    check(c.refuge.half_x > 0.0, "geometry.refuge.half_x", "must be > 0");
    check(c.refuge.half_y > 0.0, "geometry.refuge.half_y", "must be > 0");
  }
  if (c.refuge.kind == RefugeKind::Disc) check(c.refuge.radius > 0.0, "geometry.refuge.radius", "must be > 0");
  if (c.refuge.kind != RefugeKind::Empty && c.grid.nx >= 4 && c.grid.ny >= 4 && c.grid.lx > 0 && c.grid.ly > 0) {
    const double h = std::max(c.grid.hx(), c.grid.hy());
    check(c.refuge.boundary_margin(c.grid.lx, c.grid.ly) > 2.0 * h, "geometry.refuge.kind",
          "refuge must stay more than 2h = " + format_double(2.0 * h) + " away from the outer boundary");
  }

  const auto& p = c.params;
  check(p.lambda > 0.0, "params.lambda", "must be > 0");
  check(p.m >= 0.0, "params.m", "must be >= 0");
  check(p.c > 0.0, "params.c", "must be > 0");
  check(p.b > 0.0, "params.b", "must be > 0");
  check(p.D_u > 0.0, "params.D_u", "must be > 0");
  check(p.D_v > 0.0, "params.D_v", "must be > 0");
  check(p.r > 0.0, "params.r", "must be > 0");
  if (c.mu) check(*c.mu > 0.0, "params.mu", "must be > 0");
  if (c.mu_range) {
    check(c.mu_range->min > 0.0, "params.mu_min", "must be > 0");
    check(c.mu_range->max > c.mu_range->min, "params.mu_max", "must exceed params.mu_min");
    check(c.mu_range->points >= 2, "params.mu_points", "must be >= 2");
  }
  if (needs_range(c.kind)) {
    check(c.mu_range.has_value(), "params.mu_min", std::string(to_string(c.kind)) + " requires params.mu_min/mu_max");
    check(!c.mu.has_value(), "params.mu",
          std::string(to_string(c.kind)) + " takes a mu range; scalar params.mu is not allowed");
  } else {
    check(c.mu.has_value(), "params.mu", std::string(to_string(c.kind)) + " requires scalar params.mu");
    check(!c.mu_range.has_value(), "params.mu_min",
          std::string(to_string(c.kind)) + " takes scalar params.mu; a mu range is not allowed");
  }

  check(c.newton.tol_residual > 0.0, "newton.tol", "must be > 0");
  check(c.newton.max_iter >= 1, "newton.max_iter", "must be >= 1");
  check(c.transient.dt > 0.0, "transient.dt", "must be > 0");
  check(c.transient.t_end > 0.0, "transient.t_end", "must be > 0");
  check(c.transient.steady_tol > 0.0, "transient.steady_tol", "must be > 0");
  check(c.transient.max_steps >= 1, "transient.max_steps", "must be >= 1");
  check(c.transient.record_every >= 1, "transient.record_every", "must be >= 1");
  check(c.initial.u0 >= 0.0, "transient.u0", "must be >= 0");
  check(c.initial.v0 >= 0.0, "transient.v0", "must be >= 0");
  check(c.initial.perturbation >= 0.0 && c.initial.perturbation < 1.0, "transient.perturbation",
        "must lie in [0, 1)");
  check(c.steady_v0 >= 0.0, "steady.v0", "must be >= 0");
  check(c.continuation.s0 > 0.0 && c.continuation.s0 <= 0.1 * p.lambda, "continuation.s0",
        "must lie in (0, 0.1 lambda]");
  check(c.continuation.ds > 0.0, "continuation.ds", "must be > 0");
  check(c.continuation.steps >= 1, "continuation.steps", "must be >= 1");
  check(c.continuation.max_amplitude > 0.0, "continuation.max_amplitude", "must be > 0");
  check(c.continuation.sample_every >= 1, "continuation.sample_every", "must be >= 1");
  return issues;
}

std::string describe(const std::vector<ConfigIssue>& issues) {
  std::ostringstream os;
  os << issues.size() << " problem(s)";
  for (const auto& i : issues) {
    os << "; ";
    if (i.line > 0) os << "line " << i.line << ": ";
    if (!i.key.empty()) os << i.key << ": ";
    os << i.message;
  }
  return os.str();
}

}  // namespace

ConfigError::ConfigError(Errc code, std::vector<ConfigIssue> issues)
    : Error(code, describe(issues)), issues_(std::move(issues)) {}

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Simulate: return "simulate";
    case ExperimentKind::Steady: return "steady";
    case ExperimentKind::Continue: return "continue";
    case ExperimentKind::Bifurcate: return "bifurcate";
    case ExperimentKind::Verify: return "verify";
  }
  return "steady";
}

std::optional<ExperimentKind> parse_kind(std::string_view text) {
  for (auto k : {ExperimentKind::Simulate, ExperimentKind::Steady, ExperimentKind::Continue,
                 ExperimentKind::Bifurcate, ExperimentKind::Verify}) {
    if (text == to_string(k)) return k;
  }
  return std::nullopt;
}

std::vector<std::string> known_config_keys() {
  std::vector<std::string> keys;
  for (const auto& spec : key_table()) keys.push_back(spec.key);
  return keys;
}

RunConfig parse_config(std::string_view text, std::optional<ExperimentKind> kind_override) {
  RunConfig cfg;
  std::vector<ConfigIssue> parse_issues;
  std::map<std::string, int> lines;
  const auto& table = key_table();

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      parse_issues.push_back({line_no, "", "expected 'key = value'"});
      continue;
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto spec = std::find_if(table.begin(), table.end(), [&](const KeySpec& s) { return s.key == key; });
    if (spec == table.end()) {
      parse_issues.push_back({line_no, key, "unknown key"});
      continue;
    }
    if (lines.count(key)) {
      parse_issues.push_back({line_no, key, "duplicate key (first set on line " + std::to_string(lines[key]) + ")"});
      continue;
    }
    if (value.empty()) {
      parse_issues.push_back({line_no, key, "missing value"});
      continue;
    }
    if (auto err = spec->set(cfg, value)) {
      parse_issues.push_back({line_no, key, *err});
      continue;
    }
    lines[key] = line_no;
    if (end == text.size()) break;
  }

  if (kind_override) cfg.kind = *kind_override;
  const bool kind_given = kind_override.has_value() || lines.count("experiment.kind") > 0;
  auto issues = validate(cfg, lines, kind_given);
  if (!parse_issues.empty()) {
    parse_issues.insert(parse_issues.end(), issues.begin(), issues.end());
    throw ConfigError(Errc::ParseError, std::move(parse_issues));
  }
  if (!issues.empty()) throw ConfigError(Errc::ValidationError, std::move(issues));
  return cfg;
}

std::string render_config(const RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& spec : key_table()) {
    const auto value = spec.render(cfg);
    if (!value) continue;
    const std::string head = spec.key.substr(0, spec.key.find('.'));
    if (!section.empty() && head != section) out += '\n';
    section = head;
    out += spec.key + " = " + *value + '\n';
  }
  return out;
}

}  // namespace refugia::harness
