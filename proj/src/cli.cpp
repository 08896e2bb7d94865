#include "predvar/cli.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <memory>
#include <sstream>

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "predvar/benchmark.hpp"
#include "predvar/datagen.hpp"
#include "predvar/io.hpp"
#include "predvar/selection.hpp"

namespace predvar::cli {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::InvalidFlags:
      return kUsage;
    case ErrorKind::IoError:
    case ErrorKind::CsvParse:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::InsufficientRows:
    case ErrorKind::InsufficientHistory:
    case ErrorKind::NonFiniteInput:
    case ErrorKind::DegenerateData:
    case ErrorKind::EllExceedsRank:
      return kData;
    default:
      return kNumerical;
  }
}

namespace {

class LogScope {
 public:
  LogScope(std::ostream& err, const std::string& level) : previous_(spdlog::default_logger()) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    auto logger = std::make_shared<spdlog::logger>("predvar", sink);
    logger->set_pattern("[%l] %v");
    logger->set_level(spdlog::level::from_str(level));
    spdlog::set_default_logger(logger);
  }
  ~LogScope() { spdlog::set_default_logger(previous_); }

 private:
  std::shared_ptr<spdlog::logger> previous_;
};

std::string iso_time(std::time_t t) {
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string resolve_timestamp(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    const long long v = std::strtoll(epoch, &end, 10);
    if (end && *end == '\0' && end != epoch) return iso_time(static_cast<std::time_t>(v));
  }
  return iso_time(std::time(nullptr));
}

std::vector<std::string> names(const char* prefix, Eigen::Index count) {
  std::vector<std::string> out;
  for (Eigen::Index i = 1; i <= count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

IntRange parse_range(const std::string& text, const char* flag) {
  const auto colon = text.find(':');
  try {
    std::size_t used = 0;
    IntRange r;
    if (colon == std::string::npos) {
      r.lo = r.hi = std::stoi(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
    } else {
      const std::string a = text.substr(0, colon);
      const std::string b = text.substr(colon + 1);
      r.lo = std::stoi(a, &used);
      if (used != a.size()) throw std::invalid_argument(a);
      r.hi = std::stoi(b, &used);
      if (used != b.size()) throw std::invalid_argument(b);
    }
    if (r.lo < 1 || r.hi < r.lo) throw std::invalid_argument(text);
    return r;
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidFlags, std::string(flag) + " expects a:b with 1 <= a <= b, got '" + text + "'");
  }
}

std::string join(const std::vector<std::string>& args) {
  std::string out;
  for (std::size_t i = 0; i < args.size(); ++i) out += (i ? " " : "") + args[i];
  return out;
}

std::string vector_text(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? " " : "") + io::format_double(v(i));
  return out;
}

struct SimulateFlags {
  std::string kind = "lorenz";
  int n = 10000;
  int p = 6;
  int ell = 3;
  int s = 2;
  std::uint64_t seed = 0;
  double noise_scale = 1.0;
  double spectral_radius = 0.8;
  std::string out;
  std::string truth_out;
};

struct FitFlags {
  std::string data;
  int ell = 1;
  int s = 1;
  std::string variant = "predvar";
  int max_iter = 500;
  double tol = 1e-8;
  double rank_tol = 1e-10;
  std::string model_out;
};

struct PredictFlags {
  std::string model;
  std::string data;
  std::string out;
  std::string emit = "yhat";
};

struct SelectFlags {
  std::string data;
  std::string ell_range = "1:1";
  std::string s_range = "1:1";
  int parallel = 1;
  std::string variant = "predvar";
  int max_iter = 500;
  double tol = 1e-8;
  std::string out;
};

struct BenchmarkFlags {
  int trials = 1;
  std::string variants = "predvar";
  int n = 10000;
  int train = 7000;
  int p = 6;
  int ell = 3;
  int s = 2;
  std::uint64_t seed_base = 0;
  double noise_scale = 1.0;
  int parallel = 1;
  std::string timing = "wall";
  int max_iter = 500;
  double tol = 1e-8;
  std::string out;
};

void cmd_simulate(const SimulateFlags& f, const std::string& command_line, const std::string& stamp,
                  std::ostream& out) {
  TimeSeriesMatrix y;
  io::Json truth;
  io::Provenance prov{command_line, "", stamp};
  if (f.kind == "lorenz") {
    if (f.ell != 3) throw Error(ErrorKind::InvalidFlags, "--kind lorenz produces ell = 3 latent series");
    if (f.p < 3) throw Error(ErrorKind::InvalidFlags, "--p must be at least 3 for --kind lorenz");
    datagen::LorenzConfig lc;
    lc.n_samples = f.n;
    const datagen::Mixed mixed =
        datagen::mix_observations(datagen::lorenz_series(lc), {f.p, 3, f.noise_scale, f.seed});
    y = mixed.y;
    truth["schema_version"] = 1;
    truth["p"] = f.p;
    truth["ell"] = 3;
    truth["P"] = io::matrix_to_json(mixed.truth.loadings);
    truth["Pbar"] = io::matrix_to_json(mixed.truth.static_loadings);
    truth["R"] = io::matrix_to_json(mixed.truth.weights);
    truth["Rbar"] = io::matrix_to_json(mixed.truth.static_weights);
    truth["provenance"] = {{"command_line", prov.command_line}, {"data_digest", ""}, {"timestamp", stamp}};
  } else if (f.kind == "rrvar") {
    if (f.ell < 1 || f.ell > f.p) throw Error(ErrorKind::InvalidFlags, "--ell must lie in [1, p]");
    datagen::RrvarConfig rc;
    rc.p = f.p;
    rc.ell = f.ell;
    rc.s = f.s;
    rc.n = f.n;
    rc.seed = f.seed;
    rc.spectral_radius = f.spectral_radius;
    rc.static_noise_scale = f.noise_scale;
    const datagen::RrvarData data = datagen::rrvar_series(rc);
    y = data.y;
    truth = io::model_to_json(data.truth, FitReport{}, prov);
  } else {
    throw Error(ErrorKind::InvalidFlags, "--kind must be lorenz or rrvar");
  }

  std::ostringstream csv;
  io::write_csv(csv, names("y", y.cols()), y);
  io::write_file(f.out, csv.str());
  if (!f.truth_out.empty()) {
    truth["provenance"]["data_digest"] = io::sha256_hex(csv.str());
    io::write_file(f.truth_out, io::dump(truth));
  }
  out << "wrote " << y.rows() << "x" << y.cols() << " to " << f.out << '\n';
}

void cmd_fit(const FitFlags& f, const std::string& command_line, const std::string& stamp,
             std::ostream& out) {
  const std::string bytes = io::read_file(f.data);
  std::istringstream in(bytes);
  const io::CsvTable table = io::parse_csv(in, f.data);
  FitOptions opts;
  opts.ell = f.ell;
  opts.s = f.s;
  opts.variant = parse_variant(f.variant);
  opts.max_iter = f.max_iter;
  opts.tol = f.tol;
  opts.rank_tol = f.rank_tol;
  const FitResult fitted = fit(table.values, opts);
  const OptimalityReport opt = check_optimality(fitted.model, table.values);

  io::ModelDocument doc{fitted.model, fitted.report, {command_line, io::sha256_hex(bytes), stamp}};
  if (!f.model_out.empty()) io::save_model(f.model_out, doc);

  const Vector r2 = Vector::Ones(fitted.model.ell) - fitted.model.latent_innovation_cov.diagonal();
  out << "variant: " << to_string(opts.variant) << '\n'
      << "rank: " << fitted.model.r << '\n'
      << "iterations: " << fitted.report.iterations << '\n'
      << "converged: " << (fitted.report.converged ? "true" : "false") << '\n'
      << "spectrum: " << vector_text(r2) << '\n'
      << "final_spectrum: " << vector_text(fitted.report.final_spectrum) << '\n'
      << "residual R'Se Rbar: " << io::format_double(opt.innovation_cross) << '\n'
      << "residual R'Sy Rbar: " << io::format_double(opt.data_cross) << '\n'
      << "residual Se R - P R'Se R: " << io::format_double(opt.loading_alignment) << '\n'
      << "max corr(latent error, static noise): " << io::format_double(opt.innovation_correlation)
      << '\n';
}

void cmd_predict(const PredictFlags& f, std::ostream& out) {
  const io::ModelDocument doc = io::load_model(f.model);
  const io::CsvTable table = io::read_csv(f.data);
  const PredVarModel& m = doc.model;
  if (table.values.cols() != m.p) {
    std::ostringstream msg;
    msg << "model expects " << m.p << " columns, data has " << table.values.cols();
    throw Error(ErrorKind::DimensionMismatch, msg.str());
  }
  std::ostringstream csv;
  if (f.emit == "yhat") {
    io::write_csv_indexed(csv, "t", m.s + 1, table.header, predict_one_step(m, table.values).observed);
  } else if (f.emit == "vhat") {
    io::write_csv_indexed(csv, "t", m.s + 1, names("v", m.ell), predict_one_step(m, table.values).latent);
  } else if (f.emit == "scores") {
    io::write_csv_indexed(csv, "t", 1, names("v", m.ell), latent_scores(m, table.values));
  } else if (f.emit == "static") {
    io::write_csv_indexed(csv, "t", 1, names("e", m.p - m.ell), static_noise(m, table.values));
  } else {
    throw Error(ErrorKind::InvalidFlags, "--emit must be yhat, vhat, scores or static");
  }
  io::write_file(f.out, csv.str());
  out << "wrote " << f.emit << " to " << f.out << '\n';
}

void cmd_select(const SelectFlags& f, std::ostream& out) {
  const io::CsvTable table = io::read_csv(f.data);
  FitOptions base;
  base.variant = parse_variant(f.variant);
  base.max_iter = f.max_iter;
  base.tol = f.tol;
  const SelectionGrid grid = select(table.values, parse_range(f.ell_range, "--ell-range"),
                                    parse_range(f.s_range, "--s-range"), base, f.parallel);
  std::ostringstream csv;
  csv << "ell,s,rrmfpe,log_rrmfpe,converged,failed\n";
  for (const SelectionEntry& e : grid.entries) {
    csv << e.ell << ',' << e.s << ',' << io::format_double(e.rrmfpe) << ','
        << io::format_double(e.log_rrmfpe) << ',' << (e.converged ? 1 : 0) << ','
        << (e.failed ? 1 : 0) << '\n';
  }
  if (f.out.empty()) {
    out << csv.str();
  } else {
    io::write_file(f.out, csv.str());
  }
  out << "best: ell=" << grid.best_ell << " s=" << grid.best_s << '\n';
}

void cmd_benchmark(const BenchmarkFlags& f, std::ostream& out) {
  BenchmarkConfig cfg;
  cfg.trials = f.trials;
  cfg.variants.clear();
  std::stringstream list(f.variants);
  for (std::string item; std::getline(list, item, ',');) {
    try {
      cfg.variants.push_back(parse_variant(item));
    } catch (const Error& e) {
      throw Error(ErrorKind::InvalidFlags, e.what());
    }
  }
  cfg.n = f.n;
  cfg.train = f.train;
  cfg.p = f.p;
  cfg.ell = f.ell;
  cfg.s = f.s;
  cfg.seed_base = f.seed_base;
  cfg.noise_scale = f.noise_scale;
  cfg.workers = f.parallel;
  cfg.timing = f.timing == "wall";
  cfg.max_iter = f.max_iter;
  cfg.tol = f.tol;
  const std::vector<BenchmarkRow> rows = run_benchmark(cfg);
  std::ostringstream csv;
  write_benchmark_csv(csv, rows);
  if (f.out.empty()) {
    out << csv.str();
  } else {
    io::write_file(f.out, csv.str());
  }
  for (const BenchmarkRow& r : rows) {
    if (r.failed) spdlog::warn("trial {} ({}) failed: {}", r.trial, to_string(r.variant), r.error);
  }
  write_benchmark_summary(out, rows);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent VAR extraction with oblique projections", "predvar"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "warn";
  std::string timestamp;
  app.add_option("--log", log_level, "Diagnostic level on stderr")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));
  app.add_option("--timestamp", timestamp, "Provenance timestamp (default: SOURCE_DATE_EPOCH or now)");

  SimulateFlags sim;
  auto* s_cmd = app.add_subcommand("simulate", "Generate synthetic data");
  s_cmd->add_option("--kind", sim.kind)->check(CLI::IsMember({"lorenz", "rrvar"}));
  s_cmd->add_option("--n", sim.n)->check(CLI::PositiveNumber);
  s_cmd->add_option("--p", sim.p)->check(CLI::PositiveNumber);
  s_cmd->add_option("--ell", sim.ell)->check(CLI::PositiveNumber);
  s_cmd->add_option("--s", sim.s)->check(CLI::PositiveNumber);
  s_cmd->add_option("--seed", sim.seed);
  s_cmd->add_option("--noise-scale", sim.noise_scale)->check(CLI::NonNegativeNumber);
  s_cmd->add_option("--spectral-radius", sim.spectral_radius)->check(CLI::Range(0.0, 0.999999));
  s_cmd->add_option("--out", sim.out)->required();
  s_cmd->add_option("--truth-out", sim.truth_out);

  FitFlags fit_flags;
  auto* f_cmd = app.add_subcommand("fit", "Fit a model to a CSV file");
  f_cmd->add_option("--data", fit_flags.data)->required();
  f_cmd->add_option("--ell", fit_flags.ell)->required()->check(CLI::PositiveNumber);
  f_cmd->add_option("--s", fit_flags.s)->required()->check(CLI::PositiveNumber);
  f_cmd->add_option("--variant", fit_flags.variant)->check(CLI::IsMember({"predvar", "lavar", "oneshot"}));
  f_cmd->add_option("--max-iter", fit_flags.max_iter)->check(CLI::PositiveNumber);
  f_cmd->add_option("--tol", fit_flags.tol)->check(CLI::PositiveNumber);
  f_cmd->add_option("--rank-tol", fit_flags.rank_tol)->check(CLI::Range(1e-300, 0.5));
  f_cmd->add_option("--model-out", fit_flags.model_out)->required();

  PredictFlags pred;
  auto* p_cmd = app.add_subcommand("predict", "One-step predictions from a saved model");
  p_cmd->add_option("--model", pred.model)->required();
  p_cmd->add_option("--data", pred.data)->required();
  p_cmd->add_option("--out", pred.out)->required();
  p_cmd->add_option("--emit", pred.emit)->check(CLI::IsMember({"yhat", "vhat", "scores", "static"}));

  SelectFlags sel;
  auto* g_cmd = app.add_subcommand("select", "Grid search over (ell, s)");
  g_cmd->add_option("--data", sel.data)->required();
  g_cmd->add_option("--ell-range", sel.ell_range)->required();
  g_cmd->add_option("--s-range", sel.s_range)->required();
  g_cmd->add_option("--parallel", sel.parallel)->check(CLI::PositiveNumber);
  g_cmd->add_option("--variant", sel.variant)->check(CLI::IsMember({"predvar", "lavar", "oneshot"}));
  g_cmd->add_option("--max-iter", sel.max_iter)->check(CLI::PositiveNumber);
  g_cmd->add_option("--tol", sel.tol)->check(CLI::PositiveNumber);
  g_cmd->add_option("--out", sel.out);

  BenchmarkFlags bench;
  auto* b_cmd = app.add_subcommand("benchmark", "Monte-Carlo Lorenz benchmark");
  b_cmd->add_option("--trials", bench.trials)->check(CLI::PositiveNumber);
  b_cmd->add_option("--variants", bench.variants);
  b_cmd->add_option("--n", bench.n)->check(CLI::PositiveNumber);
  b_cmd->add_option("--train", bench.train)->check(CLI::PositiveNumber);
  b_cmd->add_option("--p", bench.p)->check(CLI::PositiveNumber);
  b_cmd->add_option("--ell", bench.ell)->check(CLI::PositiveNumber);
  b_cmd->add_option("--s", bench.s)->check(CLI::PositiveNumber);
  b_cmd->add_option("--seed-base", bench.seed_base);
  b_cmd->add_option("--noise-scale", bench.noise_scale)->check(CLI::NonNegativeNumber);
  b_cmd->add_option("--parallel", bench.parallel)->check(CLI::PositiveNumber);
  b_cmd->add_option("--timing", bench.timing)->check(CLI::IsMember({"wall", "off"}));
  b_cmd->add_option("--max-iter", bench.max_iter)->check(CLI::PositiveNumber);
  b_cmd->add_option("--tol", bench.tol)->check(CLI::PositiveNumber);
  b_cmd->add_option("--out", bench.out);

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  }

  LogScope logging(err, log_level);
  const std::string command_line = join(args);
  try {
    if (*s_cmd) cmd_simulate(sim, command_line, resolve_timestamp(timestamp), out);
    if (*f_cmd) cmd_fit(fit_flags, command_line, resolve_timestamp(timestamp), out);
    if (*p_cmd) cmd_predict(pred, out);
    if (*g_cmd) cmd_select(sel, out);
    if (*b_cmd) cmd_benchmark(bench, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  }
  return kOk;
}

}  // namespace predvar::cli
