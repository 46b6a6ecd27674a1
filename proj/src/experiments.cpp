#include "wsl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "wsl/theory.hpp"

namespace wsl {

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  const auto workers = static_cast<unsigned>(std::min<std::size_t>(std::max(threads, 1u), count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::size_t failed_index = count;
  std::exception_ptr failure;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

RiskEstimate make_risk_estimate(std::size_t null_rejections, std::size_t alt_acceptances,
                                std::size_t trials) {
  if (trials == 0) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
  RiskEstimate r;
  const double t = static_cast<double>(trials);
  r.trials = trials;
  r.type1 = static_cast<double>(null_rejections) / t;
  r.type2 = static_cast<double>(alt_acceptances) / t;
  r.risk = r.type1 + r.type2;
  const double v1 = r.type1 * (1.0 - r.type1);
  const double v2 = r.type2 * (1.0 - r.type2);
  r.half_width_type1 = 1.96 * std::sqrt(v1 / t);
  r.half_width_type2 = 1.96 * std::sqrt(v2 / t);
  r.half_width = 1.96 * std::sqrt((v1 + v2) / t);
  return r;
}

RiskEstimate estimate_risk(const TestProcedure& test, const ModelParams& theta0,
                           const ModelParams& theta1, std::size_t n, std::size_t trials,
                           std::uint64_t seed, unsigned threads) {
  if (trials == 0) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
  if (theta0.dim() != theta1.dim()) throw Error(ErrorCode::DimMismatch, "theta0 and theta1 differ in dimension");
  std::atomic<std::size_t> rejections{0};
  std::atomic<std::size_t> acceptances{0};
  parallel_for(2 * trials, threads, [&](std::size_t item) {
    const std::uint64_t t = item / 2;
    const std::uint64_t h = item % 2;
    const ModelParams& truth = h == 0 ? theta0 : theta1;
    Stream data_stream = Stream::derive(seed, {t, h});
    const Dataset data = sample_dataset(truth, n, data_stream);
    Stream test_stream = Stream::derive(seed, {t, h, 1});
    const bool reject = test(TrialContext{data, truth, theta0, theta1,
                                          h == 0 ? Hypothesis::Null : Hypothesis::Alternative,
                                          test_stream});
    if (h == 0 && reject) rejections.fetch_add(1);
    if (h == 1 && !reject) acceptances.fetch_add(1);
  });
  return make_risk_estimate(rejections.load(), acceptances.load(), trials);
}

std::string_view to_string(TestKind kind) noexcept {
  switch (kind) {
    case TestKind::Exhaustive: return "exhaustive";
    case TestKind::TractableHonest: return "tractable_honest";
    case TestKind::TractableAdversarial: return "tractable_adversarial";
    case TestKind::TractableWorstPlus: return "tractable_worst_plus";
    case TestKind::TractableWorstMinus: return "tractable_worst_minus";
  }
  return "unknown";
}

TestKind parse_test_kind(std::string_view name) {
  for (TestKind k : {TestKind::Exhaustive, TestKind::TractableHonest, TestKind::TractableAdversarial,
                     TestKind::TractableWorstPlus, TestKind::TractableWorstMinus}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::Config, fmt::format("unknown test '{}'", name));
}

TestProcedure make_test(TestKind kind, const TestSettings& settings, std::size_t d, std::size_t n,
                        const Matrix& sigma) {
  if (static_cast<std::size_t>(sigma.rows()) != d) throw Error(ErrorCode::DimMismatch, "sigma does not match d");
  if (kind == TestKind::Exhaustive) {
    const Thresholds thr = default_thresholds(d, settings.s, std::max<std::size_t>(n / 2, 1), sigma);
    const std::uint64_t supports = binomial(d, settings.s);
    if (supports > settings.phi1.max_supports) {
      throw Error(ErrorCode::CombinatorialBudgetExceeded,
                  fmt::format("C({}, {}) = {} supports exceeds the cap of {}", d, settings.s, supports,
                              settings.phi1.max_supports));
    }
    return [=](const TrialContext& ctx) {
      return run_exhaustive_test(ctx.data, sigma, settings.s, thr, settings.phi1).reject;
    };
  }
  TractableConfig cfg;
  cfg.R = settings.R;
  cfg.C = settings.C;
  cfg.xi = settings.xi;
  cfg.d = d;
  cfg.n = static_cast<double>(n);
  cfg.validate();
  const OracleConfig occ = cfg.oracle_config();
  switch (kind) {
    case TestKind::TractableHonest:
      return [=](const TrialContext& ctx) {
        EmpiricalOracle oracle(ctx.data, occ);
        return run_tractable_test(oracle, cfg, sigma).reject;
      };
    case TestKind::TractableAdversarial:
      return [=](const TrialContext& ctx) {
        AdversarialPairOracle oracle(ctx.null, ctx.alternative, ctx.hypothesis, occ);
        return run_tractable_test(oracle, cfg, sigma).reject;
      };
    case TestKind::TractableWorstPlus:
    case TestKind::TractableWorstMinus: {
      const SignPolicy policy = kind == TestKind::TractableWorstPlus ? SignPolicy::Plus : SignPolicy::Minus;
      return [=](const TrialContext& ctx) {
        WorstCaseOracle oracle(ctx.truth, policy, occ);
        return run_tractable_test(oracle, cfg, sigma).reject;
      };
    }
    default:
      break;
  }
  throw Error(ErrorCode::InvalidArgument, "unhandled test kind");
}

void SweepGrid::validate() const {
  if (alpha_values.empty()) throw Error(ErrorCode::Config, "empty alpha grid");
  if (gamma_values.empty()) throw Error(ErrorCode::Config, "empty gamma grid");
  for (double a : alpha_values) {
    if (!std::isfinite(a) || a < 0.0 || a > 1.0) throw Error(ErrorCode::Config, fmt::format("alpha {} outside [0, 1]", a));
  }
  for (double g : gamma_values) {
    if (!std::isfinite(g) || g < 0.0) throw Error(ErrorCode::Config, fmt::format("gamma {} must be finite and >= 0", g));
  }
  if (!std::is_sorted(alpha_values.begin(), alpha_values.end())) throw Error(ErrorCode::Config, "alpha grid must be sorted");
  if (!std::is_sorted(gamma_values.begin(), gamma_values.end())) throw Error(ErrorCode::Config, "gamma grid must be sorted");
  if (d < 2 || s < 1 || s > d) throw Error(ErrorCode::Config, fmt::format("need d >= 2 and 1 <= s <= d (d={}, s={})", d, s));
  if (n < 4) throw Error(ErrorCode::Config, "n must be >= 4");
  if (trials == 0) throw Error(ErrorCode::Config, "trials must be >= 1");
  if (!std::isfinite(C0)) throw Error(ErrorCode::Config, "C0 must be finite");
}

std::vector<SweepRow> sweep_phase_diagram(const SweepGrid& grid, std::span<const TestKind> tests,
                                          const TestSettings& settings, unsigned threads) {
  grid.validate();
  if (tests.empty()) throw Error(ErrorCode::Config, "no tests selected");
  const std::size_t d = grid.d;
  const Matrix identity = Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  TestSettings local = settings;
  local.s = grid.s;
  std::vector<TestProcedure> procs;
  for (TestKind k : tests) procs.push_back(make_test(k, local, d, grid.n, identity));

  const std::size_t n_gamma = grid.gamma_values.size();
  const std::size_t cells = grid.alpha_values.size() * n_gamma;
  const std::size_t n_tests = tests.size();
  // Per (cell, test): rejections at each null point and acceptances under the alternative.
  std::vector<std::atomic<std::size_t>> counts(cells * n_tests * 3);
  for (auto& c : counts) c.store(0);

  const Vector zero = Vector::Zero(static_cast<Eigen::Index>(d));
  const Vector shift = Vector::Constant(static_cast<Eigen::Index>(d), grid.C0);

  parallel_for(cells * grid.trials, threads, [&](std::size_t item) {
    const std::uint64_t cell = item / grid.trials;
    const std::uint64_t trial = item % grid.trials;
    const double alpha = grid.alpha_values[cell / n_gamma];
    const double beta = std::sqrt(grid.gamma_values[cell % n_gamma] / static_cast<double>(grid.s));

    Stream support_stream = Stream::derive(grid.seed, {cell, trial, 2});
    AltSpec spec{d, random_support(d, grid.s, support_stream), beta};
    const ModelParams alt = make_restricted_alternative(spec, alpha);
    const ModelParams alt_shifted(alt.mu0() + shift, alt.mu1() + shift, identity, alpha);
    const ModelParams null0 = ModelParams::null_model(zero, identity, alpha);
    const ModelParams null1 = ModelParams::null_model(shift, identity, alpha);

    Stream null_stream = Stream::derive(grid.seed, {cell, trial, 0});
    const Dataset data0 = sample_dataset(null0, grid.n, null_stream);
    Dataset data1 = data0;
    data1.covariates.array() += grid.C0;
    Stream alt_stream = Stream::derive(grid.seed, {cell, trial, 1});
    const Dataset data_alt = sample_dataset(alt, grid.n, alt_stream);

    for (std::size_t k = 0; k < n_tests; ++k) {
      Stream ts = Stream::derive(grid.seed, {cell, trial, 3, k});
      const bool r0 = procs[k](TrialContext{data0, null0, null0, alt, Hypothesis::Null, ts});
      const bool r1 = procs[k](TrialContext{data1, null1, null1, alt_shifted, Hypothesis::Null, ts});
      const bool ra = procs[k](TrialContext{data_alt, alt, null0, alt, Hypothesis::Alternative, ts});
      auto* base = &counts[(cell * n_tests + k) * 3];
      if (r0) base[0].fetch_add(1);
      if (r1) base[1].fetch_add(1);
      if (!ra) base[2].fetch_add(1);
    }
  });

  std::vector<SweepRow> rows;
  rows.reserve(cells * n_tests);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    for (std::size_t k = 0; k < n_tests; ++k) {
      const auto* base = &counts[(cell * n_tests + k) * 3];
      SweepRow row;
      row.alpha = grid.alpha_values[cell / n_gamma];
      row.gamma = grid.gamma_values[cell % n_gamma];
      row.beta = std::sqrt(row.gamma / static_cast<double>(grid.s));
      row.test = tests[k];
      row.risk = make_risk_estimate(std::max(base[0].load(), base[1].load()), base[2].load(), grid.trials);
      rows.push_back(row);
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const SweepGrid& grid, const std::vector<SweepRow>& rows,
                     std::span<const std::string> header) {
  for (const auto& line : header) os << "# " << line << '\n';
  os << fmt::format("# null points: mu = 0 and mu = {} * 1; sigma = I\n", grid.C0);
  os << "# alternative: restricted family, fresh uniform support per trial, beta = sqrt(gamma / s)\n";
  os << "alpha,gamma,beta,test,d,s,n,trials,type1,type2,risk,half_width,seed\n";
  for (const auto& r : rows) {
    os << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.alpha, r.gamma, r.beta,
                      to_string(r.test), grid.d, grid.s, grid.n, r.risk.trials, r.risk.type1,
                      r.risk.type2, r.risk.risk, r.risk.half_width, grid.seed);
  }
}

namespace {

struct Axis {
  std::vector<double> edges;  // cell boundaries in axis units, size = values + 1
  double lo = 0.0;
  double hi = 1.0;
};

Axis make_axis(const std::vector<double>& values) {
  Axis axis;
  const std::size_t m = values.size();
  axis.edges.resize(m + 1);
  if (m == 1) {
    axis.edges = {values[0] - 0.5, values[0] + 0.5};
  } else {
    for (std::size_t i = 1; i < m; ++i) axis.edges[i] = 0.5 * (values[i - 1] + values[i]);
    axis.edges[0] = values[0] - (axis.edges[1] - values[0]);
    axis.edges[m] = values[m - 1] + (values[m - 1] - axis.edges[m - 1]);
  }
  axis.lo = axis.edges.front();
  axis.hi = axis.edges.back();
  return axis;
}

std::string risk_color(double risk) {
  const double r = std::clamp(risk, 0.0, 1.0);
  const int red = static_cast<int>(std::lround(40 + 200 * r));
  const int green = static_cast<int>(std::lround(40 + 160 * (1.0 - r)));
  return fmt::format("rgb({},{},60)", red, green);
}

}  // namespace

void write_sweep_svg(std::ostream& os, const SweepGrid& grid, const std::vector<SweepRow>& rows) {
  std::vector<TestKind> tests;
  for (const auto& r : rows) {
    if (std::find(tests.begin(), tests.end(), r.test) == tests.end()) tests.push_back(r.test);
  }
  // Log axis for gamma; zero values sit one decade below the smallest positive one.
  double smallest = 0.0;
  for (double g : grid.gamma_values) {
    if (g > 0.0 && (smallest == 0.0 || g < smallest)) smallest = g;
  }
  if (smallest == 0.0) smallest = 1e-3;
  auto log_gamma = [&](double g) { return std::log10(g > 0.0 ? g : smallest / 10.0); };
  std::vector<double> ly;
  for (double g : grid.gamma_values) ly.push_back(log_gamma(g));
  const Axis ax = make_axis(grid.alpha_values);
  const Axis ay = make_axis(ly);

  constexpr double kW = 300.0, kH = 260.0, kLeft = 70.0, kTop = 40.0, kGap = 60.0, kBottom = 50.0;
  const double width = kLeft + static_cast<double>(tests.size()) * (kW + kGap);
  const double height = kTop + kH + kBottom;
  auto px = [&](double a) { return (a - ax.lo) / (ax.hi - ax.lo) * kW; };
  auto py = [&](double l) { return kH - (l - ay.lo) / (ay.hi - ay.lo) * kH; };

  os << fmt::format(R"svg(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="11">)svg",
                    width, height)
     << '\n';
  os << fmt::format(R"svg(<rect width="{}" height="{}" fill="white"/>)svg", width, height) << '\n';
  for (std::size_t p = 0; p < tests.size(); ++p) {
    const double ox = kLeft + static_cast<double>(p) * (kW + kGap);
    os << fmt::format(R"svg(<g transform="translate({},{})">)svg", ox, kTop) << '\n';
    os << fmt::format(R"svg(<clipPath id="clip{}"><rect width="{}" height="{}"/></clipPath>)svg", p, kW, kH) << '\n';
    os << fmt::format(R"svg(<text x="{}" y="-12" text-anchor="middle" font-size="13">{}</text>)svg", kW / 2,
                      to_string(tests[p]))
       << '\n';
    for (const auto& r : rows) {
      if (r.test != tests[p]) continue;
      const auto ia = static_cast<std::size_t>(
          std::find(grid.alpha_values.begin(), grid.alpha_values.end(), r.alpha) - grid.alpha_values.begin());
      const auto ig = static_cast<std::size_t>(
          std::find(grid.gamma_values.begin(), grid.gamma_values.end(), r.gamma) - grid.gamma_values.begin());
      const double x0 = px(ax.edges[ia]), x1 = px(ax.edges[ia + 1]);
      const double y0 = py(ay.edges[ig + 1]), y1 = py(ay.edges[ig]);
      os << fmt::format(R"svg(<rect x="{:.2f}" y="{:.2f}" width="{:.2f}" height="{:.2f}" fill="{}"><title>alpha={} gamma={} risk={}</title></rect>)svg",
                        x0, y0, x1 - x0, y1 - y0, risk_color(r.risk.risk), r.alpha, r.gamma, r.risk.risk)
         << '\n';
    }
    // Rate curves over the alpha range.
    for (int curve = 0; curve < 2; ++curve) {
      std::string path;
      constexpr int kSteps = 200;
      for (int i = 0; i <= kSteps; ++i) {
        const double a = std::max(ax.lo + (ax.hi - ax.lo) * i / kSteps, 1e-6);
        const double rate = curve == 0 ? rate_info(grid.d, grid.s, static_cast<double>(grid.n), a)
                                       : rate_tractable(grid.d, grid.s, static_cast<double>(grid.n), a);
        path += fmt::format("{}{:.2f},{:.2f} ", i == 0 ? "M" : "L", px(a), py(std::log10(rate)));
      }
      os << fmt::format(R"svg(<path d="{}" fill="none" stroke="{}" stroke-width="2" {} clip-path="url(#clip{})"/>)svg",
                        path, curve == 0 ? "black" : "navy", curve == 0 ? "" : "stroke-dasharray=\"6,4\"", p)
         << '\n';
    }
    os << fmt::format(R"svg(<rect width="{}" height="{}" fill="none" stroke="black"/>)svg", kW, kH) << '\n';
    for (std::size_t i = 0; i < grid.alpha_values.size(); ++i) {
      os << fmt::format(R"svg(<text x="{:.2f}" y="{}" text-anchor="middle">{:.3g}</text>)svg",
                        px(grid.alpha_values[i]), kH + 15, grid.alpha_values[i])
         << '\n';
    }
    for (std::size_t i = 0; i < grid.gamma_values.size(); ++i) {
      os << fmt::format(R"svg(<text x="-6" y="{:.2f}" text-anchor="end" dominant-baseline="middle">{:.3g}</text>)svg",
                        py(ly[i]), grid.gamma_values[i])
         << '\n';
    }
    os << fmt::format(R"svg(<text x="{}" y="{}" text-anchor="middle">alpha</text>)svg", kW / 2, kH + 34) << '\n';
    os << "</g>\n";
  }
  os << fmt::format(R"svg(<text x="{}" y="{}" font-size="10">solid: information rate, dashed: tractable rate; gamma axis is logarithmic</text>)svg",
                    kLeft, height - 8)
     << '\n';
  os << "</svg>\n";
}

OracleDemoResult oracle_demo(std::size_t d, std::size_t s, double n, double alpha, double beta,
                             TractableConfig cfg) {
  cfg.d = d;
  cfg.n = n;
  cfg.validate();
  AltSpec spec{d, {}, beta};
  for (std::size_t j = 0; j < s; ++j) spec.support.push_back(j);
  const Matrix identity = Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  const ModelParams theta0 = ModelParams::null_model(Vector::Zero(static_cast<Eigen::Index>(d)), identity, alpha);
  const ModelParams theta1 = make_restricted_alternative(spec, alpha);
  const OracleConfig occ = cfg.oracle_config();

  OracleDemoResult out;
  out.report = distinguishability_report(theta0, theta1, build_queries(cfg, identity), occ);
  AdversarialPairOracle under_null(theta0, theta1, Hypothesis::Null, occ);
  AdversarialPairOracle under_alt(theta0, theta1, Hypothesis::Alternative, occ);
  TractableResult r0 = run_tractable_test(under_null, cfg, identity);
  TractableResult r1 = run_tractable_test(under_alt, cfg, identity);
  std::ostringstream t0, t1;
  write_transcript_csv(t0, r0.transcript);
  write_transcript_csv(t1, r1.transcript);
  out.transcripts_identical = t0.str() == t1.str();
  out.null_transcript = std::move(r0.transcript);
  out.alt_transcript = std::move(r1.transcript);
  out.flagged = static_cast<std::size_t>(
      std::count_if(out.report.begin(), out.report.end(), [](const auto& e) { return e.flagged; }));
  out.null_reject = r0.reject;
  out.alt_reject = r1.reject;
  out.verdict = out.flagged == 0 ? "indistinguishable" : "distinguishable";
  return out;
}

}  // namespace wsl
