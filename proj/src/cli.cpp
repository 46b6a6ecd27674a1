#include "wsl/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "wsl/pairing.hpp"
#include "wsl/theory.hpp"

namespace wsl::cli {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::Config, msg); }

std::size_t read_size(const json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (x >= 0.0 && std::floor(x) == x && x < 1.8e19) return static_cast<std::size_t>(x);
  }
  config_error(fmt::format("field '{}': expected a non-negative integer, got {}", key, v.dump()));
}

double read_double(const json& v, const std::string& key) {
  if (!v.is_number()) config_error(fmt::format("field '{}': expected a number, got {}", key, v.dump()));
  const double x = v.get<double>();
  if (!std::isfinite(x)) config_error(fmt::format("field '{}': value must be finite", key));
  return x;
}

std::string read_string(const json& v, const std::string& key) {
  if (!v.is_string()) config_error(fmt::format("field '{}': expected a string, got {}", key, v.dump()));
  return v.get<std::string>();
}

std::vector<double> spaced(const json& spec, const std::string& key, bool logarithmic) {
  if (!spec.is_array() || spec.size() != 3) {
    config_error(fmt::format("field '{}': expected [start, stop, count]", key));
  }
  const double a = read_double(spec[0], key);
  const double b = read_double(spec[1], key);
  const std::size_t count = read_size(spec[2], key);
  std::vector<double> out;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    const double x = a + (b - a) * t;
    out.push_back(logarithmic ? std::pow(10.0, x) : x);
  }
  return out;
}

// A grid is a number, a list of numbers, {"linspace": [a, b, k]},
// {"logspace": [a, b, k]} (powers of ten) or {"start", "stop", "step"}.
std::vector<double> read_grid(const json& v, const std::string& key) {
  if (v.is_number()) return {read_double(v, key)};
  if (v.is_array()) {
    std::vector<double> out;
    for (const auto& x : v) out.push_back(read_double(x, key));
    return out;
  }
  if (v.is_object()) {
    if (v.contains("linspace")) return spaced(v["linspace"], key, false);
    if (v.contains("logspace")) return spaced(v["logspace"], key, true);
    if (v.contains("start") && v.contains("stop") && v.contains("step")) {
      try {
        return linear_grid(read_double(v["start"], key), read_double(v["stop"], key), read_double(v["step"], key));
      } catch (const Error& e) {
        config_error(fmt::format("field '{}': {}", key, e.what()));
      }
    }
  }
  config_error(fmt::format("field '{}': expected a number, a list, or a linspace/logspace/start-stop-step object", key));
}

std::vector<std::string> read_string_list(const json& v, const std::string& key) {
  std::vector<std::string> out;
  if (v.is_string()) {
    std::stringstream ss(v.get<std::string>());
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }
  if (!v.is_array()) config_error(fmt::format("field '{}': expected a list of strings", key));
  for (const auto& x : v) out.push_back(read_string(x, key));
  return out;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

std::string extract_config_line(std::string_view text) {
  constexpr std::string_view kTag = "# config: ";
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    if (line.substr(0, kTag.size()) == kTag) return std::string(line.substr(kTag.size()));
    if (line.empty() || line[0] != '#') break;
    pos = end + 1;
  }
  config_error("artifact header has no '# config:' line");
}

void check_config(const RunConfig& c) {
  if (c.d < 2) config_error(fmt::format("field 'd': need d >= 2, got {}", c.d));
  if (c.s < 1 || c.s > c.d) config_error(fmt::format("field 's': need 1 <= s <= d, got s={} d={}", c.s, c.d));
  if (c.n < 1) config_error("field 'n': need n >= 1");
  for (double a : c.alpha) {
    if (a < 0.0 || a > 1.0) config_error(fmt::format("field 'alpha': {} outside [0, 1]", a));
  }
  for (double g : c.gamma) {
    if (g < 0.0) config_error(fmt::format("field 'gamma': {} is negative", g));
  }
  if (c.gamma_scale != "absolute" && c.gamma_scale != "info" && c.gamma_scale != "tractable") {
    config_error(fmt::format("field 'gamma_scale': expected absolute, info or tractable, got '{}'", c.gamma_scale));
  }
  if (!(c.R > 0.0)) config_error("field 'R': must be positive");
  if (!(c.C > 1.0)) config_error("field 'C': must exceed 1");
  if (c.xi != 0.0 && !(c.xi > 0.0 && c.xi < 1.0)) config_error("field 'xi': must lie in (0, 1), or 0 for 1/d");
  if (c.trials < 1) config_error("field 'trials': must be >= 1");
  if (c.threads < 1) config_error("field 'threads': must be >= 1");
  for (const auto& t : c.tests) parse_test_kind(t);
}

}  // namespace

RunConfig default_config() {
  RunConfig c;
  c.threads = std::max(1u, std::thread::hardware_concurrency());
  return c;
}

json RunConfig::to_json() const {
  json j;
  j["d"] = d;
  j["s"] = s;
  j["n"] = n;
  j["alpha"] = alpha;
  j["gamma"] = gamma;
  j["gamma_scale"] = gamma_scale;
  j["sigma"] = sigma;
  j["R"] = R;
  j["C"] = C;
  j["xi"] = xi;
  j["C0"] = C0;
  j["trials"] = trials;
  j["seed"] = seed;
  // threads is left out: results do not depend on it, and artifacts from
  // runs that differ only in worker count must compare equal.
  j["max_supports"] = max_supports;
  j["mc_samples"] = mc_samples;
  j["tests"] = tests;
  return j;
}

Matrix RunConfig::sigma_matrix() const {
  const auto dd = static_cast<Eigen::Index>(d);
  if (sigma.is_string()) {
    if (sigma.get<std::string>() != "identity") config_error("field 'sigma': the only named covariance is \"identity\"");
    return Matrix::Identity(dd, dd);
  }
  if (!sigma.is_array() || sigma.size() != d) {
    config_error(fmt::format("field 'sigma': expected \"identity\", {} diagonal entries, or a {}x{} matrix", d, d, d));
  }
  Matrix m = Matrix::Zero(dd, dd);
  if (sigma[0].is_number()) {
    for (std::size_t i = 0; i < d; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      m(ii, ii) = read_double(sigma[i], "sigma");
    }
  } else {
    for (std::size_t i = 0; i < d; ++i) {
      if (!sigma[i].is_array() || sigma[i].size() != d) config_error(fmt::format("field 'sigma': row {} must have {} entries", i, d));
      for (std::size_t k = 0; k < d; ++k) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = read_double(sigma[i][k], "sigma");
      }
    }
  }
  if (auto err = validate_params(Vector::Zero(dd), Vector::Zero(dd), m, 0.0)) {
    config_error(fmt::format("field 'sigma': {}", err->what()));
  }
  return m;
}

std::vector<TestKind> RunConfig::test_kinds() const {
  std::vector<TestKind> out;
  for (const auto& t : tests) out.push_back(parse_test_kind(t));
  if (out.empty()) config_error("field 'tests': no tests selected");
  return out;
}

TestSettings RunConfig::test_settings() const {
  TestSettings t;
  t.s = s;
  t.R = R;
  t.C = C;
  t.xi = xi;
  t.phi1.max_supports = max_supports;
  t.phi1.threads = 1;
  return t;
}

TractableConfig RunConfig::tractable_config() const {
  TractableConfig t;
  t.R = R;
  t.C = C;
  t.xi = xi;
  t.d = d;
  t.n = static_cast<double>(n);
  return t;
}

double RunConfig::resolve_gamma(double g, double a) const {
  if (gamma_scale == "info") return g * rate_info(d, s, static_cast<double>(n), a);
  if (gamma_scale == "tractable") return g * rate_tractable(d, s, static_cast<double>(n), a);
  return g;
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::string body(text);
  const auto first = body.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && body[first] == '#') body = extract_config_line(std::string_view(body).substr(first));
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(body, e.byte == 0 ? 0 : e.byte - 1);
    config_error(fmt::format("config parse error at line {} column {}: {}", line, col, e.what()));
  }
  if (!j.is_object()) config_error("config must be a JSON object");
  RunConfig c = std::move(base);
  std::optional<std::vector<double>> beta;
  bool gamma_set = false;
  for (const auto& [key, v] : j.items()) {
    if (key == "d") c.d = read_size(v, key);
    else if (key == "s") c.s = read_size(v, key);
    else if (key == "n") c.n = read_size(v, key);
    else if (key == "alpha") c.alpha = read_grid(v, key);
    else if (key == "gamma") { c.gamma = read_grid(v, key); gamma_set = true; }
    else if (key == "beta") beta = read_grid(v, key);
    else if (key == "gamma_scale") c.gamma_scale = read_string(v, key);
    else if (key == "sigma") c.sigma = v;
    else if (key == "R") c.R = read_double(v, key);
    else if (key == "C") c.C = read_double(v, key);
    else if (key == "xi") c.xi = read_double(v, key);
    else if (key == "C0") c.C0 = read_double(v, key);
    else if (key == "trials") c.trials = read_size(v, key);
    else if (key == "seed") {
      if (!v.is_number_unsigned()) config_error(fmt::format("field 'seed': expected an unsigned integer, got {}", v.dump()));
      c.seed = v.get<std::uint64_t>();
    }
    else if (key == "threads") c.threads = static_cast<unsigned>(read_size(v, key));
    else if (key == "max_supports") c.max_supports = read_size(v, key);
    else if (key == "mc_samples") c.mc_samples = read_size(v, key);
    else if (key == "tests") c.tests = read_string_list(v, key);
    else if (key == "out") c.out = read_string(v, key);
    else if (key == "svg") c.svg = read_string(v, key);
    else if (key == "transcripts") c.transcripts = read_string(v, key);
    else config_error(fmt::format("unknown field '{}'", key));
  }
  if (beta) {
    if (gamma_set) config_error("fields 'gamma' and 'beta' are mutually exclusive");
    c.gamma.clear();
    for (double b : *beta) c.gamma.push_back(static_cast<double>(c.s) * b * b);
  }
  check_config(c);
  return c;
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) config_error(fmt::format("cannot open config file '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::vector<std::string> config_header(std::string_view command, const RunConfig& cfg) {
  return {fmt::format("wsl_lab {}", command), "config: " + cfg.to_json().dump(),
          fmt::format("seed: {}", cfg.seed)};
}

int run_guarded(const std::function<int()>& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    if (e.code() == ErrorCode::CombinatorialBudgetExceeded || e.code() == ErrorCode::BudgetExceeded) {
      return kBudgetError;
    }
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

namespace {

void write_header(std::ostream& os, std::string_view command, const RunConfig& cfg) {
  for (const auto& line : config_header(command, cfg)) os << "# " << line << '\n';
}

}  // namespace

int cmd_rates(const RunConfig& cfg, std::ostream& out) {
  check_config(cfg);
  if (cfg.alpha.empty()) config_error("empty alpha grid");
  write_header(out, "rates", cfg);
  out << "# gamma_info = min(sqrt(s ln d / n), s ln d / (alpha^2 n))\n";
  out << "# gamma_tract = min(sqrt(s^2 / n), s ln d / (alpha^2 n))\n";
  out << "alpha,gamma_info,gamma_tract\n";
  const double n = static_cast<double>(cfg.n);
  for (double a : cfg.alpha) {
    out << fmt::format("{},{},{}\n", a, rate_info(cfg.d, cfg.s, n, a), rate_tractable(cfg.d, cfg.s, n, a));
  }
  return kOk;
}

namespace {

void check_support_budget(const RunConfig& cfg, const std::vector<TestKind>& kinds) {
  if (std::find(kinds.begin(), kinds.end(), TestKind::Exhaustive) == kinds.end()) return;
  const std::uint64_t supports = binomial(cfg.d, cfg.s);
  if (supports <= cfg.max_supports) return;
  std::size_t s_ok = cfg.s;
  while (s_ok > 1 && binomial(cfg.d, s_ok) > cfg.max_supports) --s_ok;
  std::size_t d_ok = cfg.d;
  while (d_ok > cfg.s && binomial(d_ok, cfg.s) > cfg.max_supports) --d_ok;
  throw Error(ErrorCode::CombinatorialBudgetExceeded,
              fmt::format("exhaustive test needs C({}, {}) = {} supports, cap is {}; try s <= {} or d <= {}, "
                          "or raise max_supports",
                          cfg.d, cfg.s, supports, cfg.max_supports, s_ok, d_ok));
}

}  // namespace

int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream* svg) {
  check_config(cfg);
  if (cfg.gamma_scale != "absolute") config_error("sweep needs gamma_scale = absolute");
  if (!cfg.sigma.is_string()) config_error("sweep runs with sigma = identity; use the risk command for other covariances");
  const auto kinds = cfg.test_kinds();
  check_support_budget(cfg, kinds);
  SweepGrid grid;
  grid.alpha_values = cfg.alpha;
  grid.gamma_values = cfg.gamma;
  grid.d = cfg.d;
  grid.s = cfg.s;
  grid.n = cfg.n;
  grid.trials = cfg.trials;
  grid.seed = cfg.seed;
  grid.C0 = cfg.C0;
  grid.validate();
  spdlog::info("sweep: {} x {} cells, {} tests, {} trials, {} threads", grid.alpha_values.size(),
               grid.gamma_values.size(), kinds.size(), grid.trials, cfg.threads);
  const auto rows = sweep_phase_diagram(grid, kinds, cfg.test_settings(), cfg.threads);
  write_sweep_csv(out, grid, rows, config_header("sweep", cfg));
  if (svg) write_sweep_svg(*svg, grid, rows);
  return kOk;
}

int cmd_risk(const RunConfig& cfg, std::ostream& out) {
  check_config(cfg);
  if (cfg.alpha.empty()) config_error("empty alpha grid");
  if (cfg.gamma.empty()) config_error("empty gamma grid");
  const auto kinds = cfg.test_kinds();
  check_support_budget(cfg, kinds);
  const Matrix sigma = cfg.sigma_matrix();
  const auto d = static_cast<Eigen::Index>(cfg.d);
  const auto s = static_cast<Eigen::Index>(cfg.s);
  // beta chosen so that the SNR of the alternative equals gamma.
  const Matrix precision = sigma.llt().solve(Matrix::Identity(d, d));
  const double quad = precision.topLeftCorner(s, s).sum();
  std::vector<TestProcedure> procs;
  for (TestKind k : kinds) procs.push_back(make_test(k, cfg.test_settings(), cfg.d, cfg.n, sigma));

  write_header(out, "risk", cfg);
  out << "# null: mu = 0; alternative: mu0 = -v/2, mu1 = v/2 with v = beta on coordinates 0..s-1\n";
  out << "alpha,gamma,beta,test,d,s,n,trials,type1,type2,risk,half_width_type1,half_width_type2,half_width,seed\n";
  for (double a : cfg.alpha) {
    for (double g0 : cfg.gamma) {
      const double g = cfg.resolve_gamma(g0, a);
      const double beta = std::sqrt(g / quad);
      Vector v = Vector::Zero(d);
      v.head(s).setConstant(beta);
      const ModelParams theta0 = ModelParams::null_model(Vector::Zero(d), sigma, a);
      const ModelParams theta1(-0.5 * v, 0.5 * v, sigma, a);
      for (std::size_t k = 0; k < kinds.size(); ++k) {
        const RiskEstimate r = estimate_risk(procs[k], theta0, theta1, cfg.n, cfg.trials, cfg.seed, cfg.threads);
        out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", a, g, beta, to_string(kinds[k]), cfg.d,
                           cfg.s, cfg.n, r.trials, r.type1, r.type2, r.risk, r.half_width_type1,
                           r.half_width_type2, r.half_width, cfg.seed);
      }
    }
  }
  return kOk;
}

int cmd_oracle_demo(const RunConfig& cfg, std::ostream& out, std::ostream& console) {
  check_config(cfg);
  if (cfg.alpha.empty()) config_error("empty alpha grid");
  if (cfg.gamma.empty()) config_error("empty gamma grid");
  const double alpha = cfg.alpha.front();
  const double gamma = cfg.resolve_gamma(cfg.gamma.front(), alpha);
  const double beta = std::sqrt(gamma / static_cast<double>(cfg.s));
  const OracleDemoResult demo =
      oracle_demo(cfg.d, cfg.s, static_cast<double>(cfg.n), alpha, beta, cfg.tractable_config());
  write_header(out, "oracle-demo", cfg);
  out << fmt::format("# alpha = {}, gamma = {}, beta = {}, support = 0..{}\n", alpha, gamma, beta, cfg.s - 1);
  write_report_csv(out, demo.report);
  if (!cfg.transcripts.empty()) {
    for (int h = 0; h < 2; ++h) {
      const std::string path = cfg.transcripts + (h == 0 ? "_null.csv" : "_alt.csv");
      std::ofstream t(path);
      if (!t) config_error(fmt::format("cannot write '{}'", path));
      write_header(t, "oracle-demo", cfg);
      write_transcript_csv(t, h == 0 ? demo.null_transcript : demo.alt_transcript);
    }
  }
  console << fmt::format("flagged queries: {} of {}\n", demo.flagged, demo.report.size());
  console << fmt::format("transcripts identical: {}\n", demo.transcripts_identical ? "yes" : "no");
  console << fmt::format("decision under null: {}, under alternative: {}\n", demo.null_reject ? "reject" : "accept",
                         demo.alt_reject ? "reject" : "accept");
  console << "verdict: " << demo.verdict;
  if (demo.flagged == 0) console << " (any test on these answers has type-I + type-II error equal to 1)";
  console << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// verify

namespace {

struct CheckRow {
  std::string suite;
  std::string check;
  double value = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

class Checks {
 public:
  explicit Checks(std::string suite) : suite_(std::move(suite)) {}
  void add(std::string check, double value, double reference, double tolerance, bool pass) {
    rows_.push_back({suite_, std::move(check), value, reference, tolerance, pass});
  }
  // Passes when |value - reference| <= tolerance.
  void near(std::string check, double value, double reference, double tolerance) {
    add(std::move(check), value, reference, tolerance, std::abs(value - reference) <= tolerance);
  }
  std::vector<CheckRow>& rows() { return rows_; }

 private:
  std::string suite_;
  std::vector<CheckRow> rows_;
};

void suite_cross_moment(Checks& c, const RunConfig& cfg) {
  const double beta = 0.5;
  Vector v1 = Vector::Zero(5), v2 = Vector::Zero(5);
  v1[0] = v1[1] = beta;
  v2[1] = v2[2] = beta;
  std::uint64_t key = 0;
  for (double a : {0.0, 0.3, 1.0}) {
    Stream st = Stream::derive(cfg.seed, {1, key++});
    const McEstimate mc = mc_cross_moment(v1, v2, a, cfg.mc_samples, st);
    const double ref = std::cosh(0.125) + a * a * std::sinh(0.125);
    c.near(fmt::format("mc_overlap1_alpha{}_vs_half_angle", a), mc.estimate, ref, 3.0 * mc.standard_error);
    c.near(fmt::format("mc_overlap1_alpha{}_vs_quarter_angle", a), mc.estimate, cross_moment_from_model(beta * beta, a),
           3.0 * mc.standard_error);
    c.near(fmt::format("closed_form_alpha{}", a), cross_moment(beta * beta, a), ref, 1e-15);
  }
  c.near("alpha1_is_exp", cross_moment(0.25, 1.0), std::exp(0.125), 1e-15);
  Vector e0 = Vector::Zero(5), e1 = Vector::Zero(5);
  e0[0] = beta;
  e1[1] = beta;
  Stream st = Stream::derive(cfg.seed, {1, key++});
  const McEstimate orth = mc_cross_moment(e0, e1, 0.7, cfg.mc_samples, st);
  c.near("mc_orthogonal", orth.estimate, 1.0, 3.0 * orth.standard_error);
  Stream st0 = Stream::derive(cfg.seed, {1, key++});
  const McEstimate zero = mc_cross_moment(Vector::Zero(5), Vector::Zero(5), 0.5, 1000, st0);
  c.add("mc_zero_vectors", zero.estimate, 1.0, 0.0, zero.estimate == 1.0 && zero.standard_error == 0.0);
  double min_excess = std::numeric_limits<double>::infinity();
  bool at_zero = true;
  for (double a : linear_grid(0.0, 1.0, 0.05)) {
    at_zero = at_zero && cross_moment(0.0, a) == 1.0;
    for (double t : linear_grid(0.01, 10.0, 0.01)) min_excess = std::min(min_excess, cross_moment(t, a) - 1.0);
  }
  c.add("at_least_one_for_t_positive", min_excess, 0.0, 0.0, min_excess > 0.0);
  c.add("equals_one_at_t_zero", at_zero ? 1.0 : 0.0, 1.0, 0.0, at_zero);
}

void suite_hyperbolic(Checks& c) {
  const auto xs = linear_grid(0.0, 10.0, 0.01);
  const auto vs = linear_grid(0.0, 1.0, 0.01);
  const BoundCheckReport r = hyperbolic_bound_check(xs, vs);
  c.add("grid_points", static_cast<double>(r.points), static_cast<double>(xs.size() * vs.size()), 0.0,
        r.points == xs.size() * vs.size());
  c.add("grid_violations", static_cast<double>(r.violations.size()), 0.0, 0.0, r.violations.empty());
  c.add("grid_max_excess", r.max_excess, 0.0, 1e-12, r.max_excess <= 1e-12);
  const double x0[] = {0.0};
  const BoundCheckReport z = hyperbolic_bound_check(x0, vs);
  c.add("x0_equality", z.max_excess, 0.0, 0.0, z.max_excess == 0.0);
  double worst = 0.0;
  for (double x : xs) worst = std::max(worst, std::abs(std::cosh(x) + std::sinh(x) - std::exp(x)) / std::exp(x));
  c.add("v1_is_exp_x", worst, 0.0, 1e-14, worst <= 1e-14);
}

void suite_chisq(Checks& c) {
  const std::pair<std::size_t, std::size_t> shapes[] = {{6, 2}, {8, 2}, {8, 3}};
  for (auto [d, s] : shapes) {
    for (double beta : {0.1, 0.3}) {
      for (double a : {0.0, 0.5, 1.0}) {
        for (double n : {1.0, 10.0}) {
          const double mix = chi_square_mixture(d, s, beta, a, n);
          const double direct = chi_square_by_enumeration(d, s, beta, a, n);
          const double rel = std::abs(mix - direct) / std::abs(direct);
          c.add(fmt::format("d{}_s{}_beta{}_alpha{}_n{}", d, s, beta, a, n), mix, direct, 1e-10, rel <= 1e-10);
        }
      }
    }
  }
  c.add("beta0_is_zero", chi_square_mixture(20, 4, 0.0, 0.7, 1e4), 0.0, 0.0,
        chi_square_mixture(20, 4, 0.0, 0.7, 1e4) == 0.0);
  const double full = chi_square_mixture(5, 5, 0.2, 0.5, 7.0);
  const double t = 0.5 * 0.04 * 5.0;
  const double expected = std::pow(std::cosh(t) + 0.25 * std::sinh(t), 7.0) - 1.0;
  c.add("full_support", full, expected, 1e-12, std::abs(full - expected) <= 1e-12 * expected);
  bool monotone = true;
  for (double a : {0.0, 0.5, 1.0}) {
    double prev_b = -1.0;
    for (double b : linear_grid(0.0, 0.6, 0.05)) {
      const double v = chi_square_mixture(30, 3, b, a, 200.0);
      monotone = monotone && v >= prev_b;
      prev_b = v;
    }
  }
  for (double b : {0.1, 0.3}) {
    double prev_n = -1.0, prev_a = -1.0;
    for (double n : {1.0, 10.0, 100.0, 1000.0}) {
      const double v = chi_square_mixture(30, 3, b, 0.5, n);
      monotone = monotone && v >= prev_n;
      prev_n = v;
    }
    for (double a : linear_grid(0.0, 1.0, 0.1)) {
      const double v = chi_square_mixture(30, 3, b, a, 100.0);
      monotone = monotone && v >= prev_a;
      prev_a = v;
    }
  }
  c.add("monotone_in_beta_n_alpha", monotone ? 1.0 : 0.0, 1.0, 0.0, monotone);
}

Matrix random_spd(std::size_t d, Stream& st) {
  const auto dd = static_cast<Eigen::Index>(d);
  Matrix g(dd, dd);
  for (Eigen::Index i = 0; i < dd; ++i) {
    for (Eigen::Index j = 0; j < dd; ++j) g(i, j) = st.normal();
  }
  const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
  Vector lambda(dd);
  for (Eigen::Index i = 0; i < dd; ++i) lambda[i] = 0.5 + 0.7 * st.uniform();
  Matrix s = q * lambda.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

double op_norm(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix sample_cov(const RowMatrix& x) {
  const RowMatrix centered = x.rowwise() - x.colwise().mean();
  return (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
}

void suite_moments(Checks& c, const RunConfig& cfg) {
  // 10^5 differences per check, so 2 * 10^5 draws per dataset.
  constexpr std::size_t kDraws = 200'000;
  for (std::uint64_t k = 0; k < 5; ++k) {
    Stream st = Stream::derive(cfg.seed, {4, k});
    const std::size_t d = 2 + st.below(9);
    const auto dd = static_cast<Eigen::Index>(d);
    const Matrix sigma = random_spd(d, st);
    Vector mu0(dd), mu1(dd);
    for (Eigen::Index j = 0; j < dd; ++j) {
      mu0[j] = 0.5 * st.normal();
      mu1[j] = 0.5 * st.normal();
    }
    const double alpha = st.uniform();
    const ModelParams alt(mu0, mu1, sigma, alpha);
    const Dataset da = sample_dataset(alt, kDraws, st);
    const RowMatrix u = compute_u_samples(da);
    const Vector mean_u = u.colwise().mean();
    const Vector expect = alpha * (mu1 - mu0);
    const Vector se = (sample_cov(u).diagonal() / static_cast<double>(u.rows())).cwiseSqrt();
    const double zmax = ((mean_u - expect).cwiseAbs().array() / se.array()).maxCoeff();
    c.add(fmt::format("theta{}_d{}_mean_u_in_se", k, d), zmax, 0.0, 4.0, zmax <= 4.0);

    const ModelParams null = ModelParams::null_model(mu0, sigma, alpha);
    const Dataset dn = sample_dataset(null, kDraws, st);
    const Matrix identity = Matrix::Identity(dd, dd);
    const RowMatrix raw = compute_w_samples(dn, identity);
    const double err_raw = op_norm(sample_cov(raw) - 2.0 * sigma);
    c.add(fmt::format("theta{}_d{}_cov_w_raw", k, d), err_raw, 0.0, 0.1, err_raw <= 0.1);
    const RowMatrix white = compute_w_samples(dn, sigma);
    const double err_white = op_norm(sample_cov(white) - 2.0 * identity);
    c.add(fmt::format("theta{}_d{}_cov_w_whitened", k, d), err_white, 0.0, 0.1, err_white <= 0.1);
  }
}

void suite_tolerances(Checks& c, const RunConfig& cfg, const ToleranceFunction& tol) {
  OracleConfig ex;
  ex.n = 100;
  ex.xi = std::exp(-1.0);
  ex.eta = 0.0;
  c.near("example_variance_branch", tol(1.0, 0.0, ex), std::sqrt(0.02), 1e-15);
  OracleConfig ex2;
  ex2.n = 50;
  ex2.xi = std::exp(-1.0);
  ex2.eta = 1.0;
  c.near("expectation_at_bound", tol(2.0, 2.0, ex2), 0.08, 1e-15);
  OracleConfig twice = ex;
  twice.n = 200;
  c.add("decreasing_in_n", tol(1.0, 0.3, twice), tol(1.0, 0.3, ex), 0.0, tol(1.0, 0.3, twice) < tol(1.0, 0.3, ex));
  bool branch_ok = true;
  for (double m : {0.5, 1.0, 4.0}) {
    for (double f : {0.0, 0.5, 1.0}) {
      for (double n : {10.0, 100.0, 1e4}) {
        for (double eta : {0.0, 3.0}) {
          OracleConfig o;
          o.n = n;
          o.xi = 0.05;
          o.eta = eta;
          const double e = f * m;
          const double cap = eta + std::log(20.0);
          const double b1 = cap * m / n;
          const double b2 = std::sqrt(2.0 * cap * (m * m - e * e) / n);
          const double t = tol(m, e, o);
          branch_ok = branch_ok && std::abs(t - std::max(b1, b2)) <= 1e-14 * std::max(b1, b2);
          branch_ok = branch_ok && ((t == b1) == (cap * m * m >= 2.0 * n * (m * m - e * e)) || b1 == b2);
        }
      }
    }
  }
  c.add("max_of_branches_grid", branch_ok ? 1.0 : 0.0, 1.0, 0.0, branch_ok);

  // Coverage of the honest empirical oracle: |response - E[q]| <= tau_q.
  constexpr std::size_t kD = 10, kN = 10'000, kTrials = 100;
  TractableConfig tc;
  tc.d = kD;
  tc.n = static_cast<double>(kN);
  const Matrix identity = Matrix::Identity(kD, kD);
  const auto queries = build_queries(tc, identity);
  const OracleConfig occ = tc.oracle_config();
  const ModelParams null = ModelParams::null_model(Vector::Zero(kD), identity, 0.5);
  const ModelParams alt = make_restricted_alternative(AltSpec{kD, {0, 1}, 0.5}, 0.5);
  const std::size_t picks[] = {0, kD, 2 * kD};  // mean, second moment, signed label on coordinate 0
  for (int h = 0; h < 2; ++h) {
    const ModelParams& theta = h == 0 ? null : alt;
    for (std::size_t qi : picks) {
      const double expect = analytic_expectation(queries[qi], theta);
      const double t = tol(queries[qi].bound, expect, occ);
      std::size_t covered = 0;
      for (std::uint64_t trial = 0; trial < kTrials; ++trial) {
        Stream st = Stream::derive(cfg.seed, {5, static_cast<std::uint64_t>(h), qi, trial});
        const Dataset data = sample_dataset(theta, kN, st);
        EmpiricalOracle oracle(data, occ);
        if (std::abs(oracle.query(queries[qi]).value - expect) <= t) ++covered;
      }
      const double rate = static_cast<double>(covered) / kTrials;
      c.add(fmt::format("coverage_{}_{}", h == 0 ? "null" : "alt", queries[qi].id), rate, 0.95, 0.0, rate >= 0.95);
    }
  }
}

}  // namespace

int cmd_verify(const RunConfig& cfg, std::span<const std::string> suites, std::ostream& out,
               const VerifyOptions& options) {
  std::vector<std::string> selected(suites.begin(), suites.end());
  if (selected.empty()) selected.assign(std::begin(kVerifySuites), std::end(kVerifySuites));
  for (const auto& s : selected) {
    if (std::find(std::begin(kVerifySuites), std::end(kVerifySuites), s) == std::end(kVerifySuites)) {
      config_error(fmt::format("unknown verify suite '{}'", s));
    }
  }
  std::vector<CheckRow> rows;
  for (const auto& s : selected) {
    Checks c(s);
    spdlog::info("verify: running {}", s);
    if (s == "lemma1") suite_cross_moment(c, cfg);
    else if (s == "lemma2") suite_hyperbolic(c);
    else if (s == "chisq") suite_chisq(c);
    else if (s == "moments") suite_moments(c, cfg);
    else suite_tolerances(c, cfg, options.tolerance);
    rows.insert(rows.end(), c.rows().begin(), c.rows().end());
  }
  write_header(out, "verify", cfg);
  out << "suite,check,value,reference,tolerance,pass\n";
  bool all = true;
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{}\n", r.suite, r.check, r.value, r.reference, r.tolerance, r.pass ? 1 : 0);
    all = all && r.pass;
  }
  if (!all) {
    for (const auto& r : rows) {
      if (!r.pass) spdlog::error("verify: {}/{} failed (value {}, reference {})", r.suite, r.check, r.value, r.reference);
    }
  }
  return all ? kOk : kVerifyFailed;
}

}  // namespace wsl::cli
