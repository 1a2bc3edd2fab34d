#include "hybridcp/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>

#include "hybridcp/error.hpp"
#include "hybridcp/io.hpp"
#include "hybridcp/mor.hpp"

namespace hybridcp {

namespace {

constexpr int kUsage = 2;
constexpr int kData = 3;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// key=value lines become --key=value tokens placed ahead of the real flags,
// so anything given on the command line wins.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.empty()) return args;

  std::istringstream in(read_file(path));
  std::vector<std::string> injected;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ArgumentError("config line without '=': " + line);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty() || key == "config") throw ArgumentError("bad config key in line: " + line);
    injected.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  std::vector<std::string> out{args.front()};
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

std::vector<double> parse_list(const std::string& text, std::size_t count, const char* what) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (trim(item.substr(used)) != "") throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ArgumentError(std::string("cannot parse ") + what + ": " + text);
    }
  }
  if (v.size() != count) throw ArgumentError(std::string(what) + " needs " + std::to_string(count) + " values");
  return v;
}

Tensor3 load_any(const std::string& path, bool* image = nullptr) {
  const bool ppm = looks_like_ppm(path);
  if (image) *image = ppm;
  return ppm ? load_ppm(path) : read_tensor(path);
}

struct CompleteArgs {
  std::string input, mask, out, trace, lambda_trace, completed, truth, config;
  std::string mode = "hybrid";
  std::string step = "scalar";
  Index rank = 50;
  int max_iter = 500;
  double tol = 1e-3;
  double truncation = 1e-2;
  std::uint64_t seed = 0;
  bool timing = false;
};

int run_complete(const CompleteArgs& a, std::ostream& out) {
  CompletionConfig cfg;
  cfg.rank = a.rank;
  cfg.max_iterations = a.max_iter;
  cfg.tolerance = a.tol;
  cfg.truncation = a.truncation;
  cfg.seed = a.seed;
  cfg.record_timing = a.timing;
  if (a.mode == "hybrid") {
    cfg.mode = AlphaMode::Hybrid;
  } else if (a.mode == "fixed" || a.mode.rfind("fixed:", 0) == 0) {
    cfg.mode = AlphaMode::FixedLambda;
    if (a.mode.size() > 6) cfg.lambda = parse_list(a.mode.substr(6), 1, "fixed lambda")[0];
  } else {
    throw ArgumentError("--mode must be hybrid or fixed:<lambda>");
  }
  if (a.step == "column") {
    cfg.step_rule = StepRule::PerColumn;
  } else if (a.step != "scalar") {
    throw ArgumentError("--step must be scalar or column");
  }
  cfg.validate();

  bool image = false;
  const Tensor3 t = load_any(a.input, &image);
  const Mask mask = a.mask.empty() ? Mask::full(t.dims()) : read_mask(a.mask);
  if (!(mask.dims() == t.dims())) throw DataError("mask dims do not match the input tensor");

  const CompletionResult res = complete(t, mask, cfg);

  if (!a.out.empty()) write_model(a.out, res.model);
  if (!a.trace.empty()) write_trace_csv(a.trace, res.trace);
  if (!a.lambda_trace.empty()) {
    std::ostringstream csv;
    csv << "iteration,step,lambda,projected_residual\n" << std::setprecision(17);
    for (std::size_t n = 0; n < res.lambda_histories.size(); ++n) {
      const auto& lambdas = res.lambda_histories[n];
      const auto& residuals = res.residual_histories[n];
      for (std::size_t k = 0; k < lambdas.size(); ++k) {
        csv << n + 1 << ',' << k + 1 << ',' << lambdas[k] << ',';
        if (k < residuals.size()) csv << residuals[k];
        csv << '\n';
      }
    }
    write_file(a.lambda_trace, csv.str());
  }
  if (!a.completed.empty()) {
    if (image)
      save_ppm(a.completed, res.completed);
    else
      write_tensor(a.completed, res.completed);
  }

  out << "iterations " << res.trace.size() << " converged " << (res.converged ? "yes" : "no")
      << " residual " << res.trace.back().residual << " rank " << res.truncated.rank() << '\n';
  if (!a.truth.empty()) {
    const Tensor3 truth = load_any(a.truth);
    out << "relative_error " << relative_error(res.completed, truth) << '\n';
  }
  return 0;
}

struct MaskArgs {
  std::string like, dims, rect, out, config;
  double fraction = 0.0;
  std::uint64_t seed = 0;
};

int run_mask(const MaskArgs& a, std::ostream& out) {
  Dims d;
  if (!a.like.empty()) {
    d = load_any(a.like).dims();
  } else {
    const auto v = parse_list(a.dims, 3, "--dims");
    for (double x : v)
      if (!(x >= 1.0 && x == std::floor(x))) throw ArgumentError("--dims entries must be positive integers");
    d = {static_cast<Index>(v[0]), static_cast<Index>(v[1]), static_cast<Index>(v[2])};
  }
  Mask mask;
  if (!a.rect.empty()) {
    const auto r = parse_list(a.rect, 4, "--rect");
    mask = make_rect_mask(d, static_cast<Index>(r[0]), static_cast<Index>(r[1]), static_cast<Index>(r[2]),
                          static_cast<Index>(r[3]));
  } else {
    mask = make_random_mask(d, a.fraction, a.seed);
  }
  write_mask(a.out, mask);
  out << "observed " << mask.count() << " of " << d.size() << '\n';
  return 0;
}

struct MorArgs {
  Index nx = 40;
  Index grid = 9;
  Index rank0 = 50;
  double eps = 1e-2;
  Index tests = 10;
  Index pod_rank = 20;
  int max_iter = 500;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string snapshots, config;
};

int run_mor(const MorArgs& a, std::ostream& out) {
  namespace fs = std::filesystem;
  fs::create_directories(a.out_dir);
  const auto grid = parameter_grid(a.grid);
  const Tensor3 snaps = assemble_snapshots(grid, a.nx);
  if (!a.snapshots.empty()) write_tensor(a.snapshots, snaps);
  const auto tests = random_parameters(a.tests, a.seed + 1);

  CpBasisConfig cfg;
  cfg.rank0 = a.rank0;
  cfg.epsilon = a.eps;
  cfg.completion.seed = a.seed;
  cfg.completion.max_iterations = a.max_iter;
  cfg.completion.record_timing = false;
  const CpBasisResult cp = cp_reduced_basis(snaps, cfg);
  const ReducedBasis pod = pod_basis(snaps, std::min(a.pod_rank, std::min(a.nx * a.nx, snaps.dims().K)));

  Matrix truths(a.nx * a.nx, static_cast<Index>(tests.size()));
  for (std::size_t c = 0; c < tests.size(); ++c)
    truths.col(static_cast<Index>(c)) = flatten_solution(solve_diffusion({a.nx, tests[c].first, tests[c].second, {}}));
  const auto cp_err = project_error(cp.basis, truths);
  const auto pod_err = project_error(pod, truths);

  write_matrix((fs::path(a.out_dir) / "cp_basis.mat1").string(), cp.basis.phi);
  write_matrix((fs::path(a.out_dir) / "pod_basis.mat1").string(), pod.phi);
  std::ostringstream csv;
  csv << "test,mu1,mu2,cp_error,pod_error\n" << std::setprecision(17);
  for (std::size_t c = 0; c < tests.size(); ++c)
    csv << c + 1 << ',' << tests[c].first << ',' << tests[c].second << ',' << cp_err[c] << ',' << pod_err[c] << '\n';
  write_file((fs::path(a.out_dir) / "errors.csv").string(), csv.str());

  const Index r = std::max<Index>(cp.selected_rank, 1);
  std::ostringstream ratios;
  ratios << "scheme,rank,ratio\n" << std::setprecision(17);
  ratios << "cp," << r << ',' << compression_ratio(snaps.dims(), r, Scheme::Cp) << '\n';
  ratios << "pod," << pod.size() << ',' << compression_ratio(snaps.dims(), pod.size(), Scheme::Pod) << '\n';
  write_file((fs::path(a.out_dir) / "compression.csv").string(), ratios.str());

  auto range = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    std::ostringstream s;
    s << '[' << *lo << ", " << *hi << ']';
    return s.str();
  };
  out << "selected_rank " << cp.selected_rank << " cp_basis " << cp.basis.size() << " pod_basis " << pod.size()
      << '\n';
  if (!tests.empty()) out << "cp_errors " << range(cp_err) << " pod_errors " << range(pod_err) << '\n';
  return 0;
}

struct PodArgs {
  std::string input, out, config;
  Index rank = 20;
};

int run_pod(const PodArgs& a, std::ostream& out) {
  const Tensor3 snaps = read_tensor(a.input);
  const ReducedBasis pod = pod_basis(snaps, a.rank);
  write_matrix(a.out, pod.phi);
  out << "pod_basis " << pod.size() << " rows " << pod.phi.rows() << '\n';
  return 0;
}

struct ReportArgs {
  std::string input, out, config;
};

// CSV to whitespace-separated columns with a commented header.
int run_report(const ReportArgs& a, std::ostream& out) {
  std::istringstream in(read_file(a.input));
  std::string line;
  std::ostringstream dat;
  std::size_t offset = 0;
  std::size_t columns = 0;
  std::size_t rows = 0;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) {
      const auto n = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
      if (header) {
        columns = n;
      } else if (n != columns) {
        throw ParseError("row has " + std::to_string(n) + " columns, header has " + std::to_string(columns), offset);
      }
      std::string row = line;
      std::replace(row.begin(), row.end(), ',', ' ');
      dat << (header ? "# " : "") << row << '\n';
      if (!header) ++rows;
      header = false;
    }
    offset += line.size() + 1;
  }
  if (header) throw ParseError("empty CSV file", 0);
  write_file(a.out, dat.str());
  out << "rows " << rows << " columns " << columns << '\n';
  return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& raw, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-rank CP tensor completion with automatic regularization"};
  app.name("hybridcp");
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  CompleteArgs ca;
  auto* complete_cmd = app.add_subcommand("complete", "complete a partially observed tensor or image");
  complete_cmd->add_option("--input", ca.input, "TNS3 tensor or P3/P6 pixmap")->required();
  complete_cmd->add_option("--mask", ca.mask, "MSK3 observed-entry mask (default: everything)");
  complete_cmd->add_option("--rank", ca.rank, "upper-bound rank")->capture_default_str();
  complete_cmd->add_option("--mode", ca.mode, "hybrid or fixed:<lambda>")->capture_default_str();
  complete_cmd->add_option("--step", ca.step, "factor step: scalar (one Lipschitz bound) or column")
      ->capture_default_str();
  complete_cmd->add_option("--max-iter", ca.max_iter)->capture_default_str();
  complete_cmd->add_option("--tol", ca.tol, "observed-entry residual tolerance")->capture_default_str();
  complete_cmd->add_option("--truncation", ca.truncation)->capture_default_str();
  complete_cmd->add_option("--seed", ca.seed)->capture_default_str();
  complete_cmd->add_option("--out", ca.out, "CPM1 model");
  complete_cmd->add_option("--trace", ca.trace, "per-iteration CSV");
  complete_cmd->add_option("--lambda-trace", ca.lambda_trace, "hybrid lambda history CSV");
  complete_cmd->add_option("--completed", ca.completed, "completed tensor, same format as the input");
  complete_cmd->add_option("--truth", ca.truth, "reference for the relative error");
  complete_cmd->add_flag("--timing", ca.timing, "record wall time in the trace");
  complete_cmd->add_option("--config", ca.config, "key=value defaults");

  MaskArgs ma;
  auto* mask_cmd = app.add_subcommand("mask", "write an observation mask");
  auto* like = mask_cmd->add_option("--like", ma.like, "take dims from a tensor or pixmap");
  auto* dims = mask_cmd->add_option("--dims", ma.dims, "I,J,K");
  like->excludes(dims);
  auto* frac = mask_cmd->add_option("--fraction", ma.fraction, "observed fraction, uniform without replacement");
  auto* rect = mask_cmd->add_option("--rect", ma.rect, "x0,y0,x1,y1 pixel block to hide (0-based, end exclusive)");
  frac->excludes(rect);
  mask_cmd->add_option("--seed", ma.seed)->capture_default_str();
  mask_cmd->add_option("--out", ma.out)->required();
  mask_cmd->add_option("--config", ma.config);

  MorArgs mo;
  auto* mor_cmd = app.add_subcommand("mor-demo", "reduced bases for the parametrized diffusion problem");
  mor_cmd->add_option("--nx", mo.nx)->capture_default_str()->check(CLI::Range(Index{3}, Index{200}));
  mor_cmd->add_option("--grid", mo.grid)->capture_default_str()->check(CLI::Range(Index{1}, Index{50}));
  mor_cmd->add_option("--rank0", mo.rank0)->capture_default_str();
  mor_cmd->add_option("--eps", mo.eps)->capture_default_str();
  mor_cmd->add_option("--tests", mo.tests)->capture_default_str()->check(CLI::Range(Index{0}, Index{10000}));
  mor_cmd->add_option("--pod-rank", mo.pod_rank)->capture_default_str();
  mor_cmd->add_option("--max-iter", mo.max_iter)->capture_default_str();
  mor_cmd->add_option("--seed", mo.seed)->capture_default_str();
  mor_cmd->add_option("--out-dir", mo.out_dir)->capture_default_str();
  mor_cmd->add_option("--snapshots", mo.snapshots, "also write the snapshot tensor (TNS3)");
  mor_cmd->add_option("--config", mo.config);

  PodArgs po;
  auto* pod_cmd = app.add_subcommand("pod", "POD basis of a snapshot tensor");
  pod_cmd->add_option("--input", po.input)->required();
  pod_cmd->add_option("--rank", po.rank)->capture_default_str();
  pod_cmd->add_option("--out", po.out, "MAT1 basis")->required();
  pod_cmd->add_option("--config", po.config);

  ReportArgs re;
  auto* report_cmd = app.add_subcommand("report", "turn a trace or error CSV into a gnuplot data file");
  report_cmd->add_option("--input", re.input)->required();
  report_cmd->add_option("--out", re.out)->required();
  report_cmd->add_option("--config", re.config);

  try {
    std::vector<std::string> args = expand_config(raw);
    std::reverse(args.begin(), args.end());
    try {
      app.parse(args);
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) {
        out << app.help();
        return 0;
      }
      err << "error: " << e.what() << "\n\n" << app.help();
      return kUsage;
    }
    if (mask_cmd->parsed() && ma.like.empty() && ma.dims.empty())
      throw ArgumentError("mask needs --like or --dims");
    if (mask_cmd->parsed() && ma.rect.empty() && frac->count() == 0)
      throw ArgumentError("mask needs --fraction or --rect");

    if (complete_cmd->parsed()) return run_complete(ca, out);
    if (mask_cmd->parsed()) return run_mask(ma, out);
    if (mor_cmd->parsed()) return run_mor(mo, out);
    if (pod_cmd->parsed()) return run_pod(po, out);
    return run_report(re, out);
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
}

} // namespace hybridcp
