#include <csignal>
#include <cstdlib>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "nsmc/nsmc.hpp"
#include "nsmc/simulate.hpp"

namespace {

using nlohmann::json;
using namespace nsmc;

enum Exit { kOk = 0, kUserError = 1, kEnvError = 2 };

class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Config {
  std::string model;
  std::string query;
  std::string query_file;
  RunParams params;
  double delta = 0.0;
  std::optional<std::uint64_t> seed;
  std::string reuse = "on";
  std::string format = "text";
  std::string output;
  std::string histogram;
  std::string cdf;
  int buckets = 20;
  std::vector<std::string> workers;
  int timeout_ms = 600'000;
  bool naive = false;
  int resolution = kDefaultResolution;
  std::string listen = "127.0.0.1:0";
};

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

std::uint64_t default_seed() {
  if (const char* env = std::getenv("NSMC_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string("NSMC_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) | rd();
}

void emit(const Config& cfg, const std::string& text) {
  if (cfg.output.empty()) std::cout << text;
  else write_file(cfg.output, text);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<std::string> query_texts(const Config& cfg) {
  if (cfg.query_file.empty()) return {cfg.query};
  std::vector<std::string> out;
  std::istringstream in(read_file(cfg.query_file));
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line.compare(b, 2, "//") == 0) continue;
    out.push_back(line.substr(b));
  }
  if (out.empty()) throw std::invalid_argument("query file '" + cfg.query_file + "' contains no query");
  return out;
}

ModelAst load_model(const std::string& path) {
  const auto text = read_file(path);
  try {
    return parse_model(text);
  } catch (const ParseError& e) {
    throw UserError(path + ":" + e.what());
  }
}

// ---- validate -----------------------------------------------------------------

int cmd_validate(const Config& cfg) {
  const auto ast = load_model(cfg.model);
  const auto diags = validate(ast);
  for (const auto& d : diags) std::cerr << cfg.model << ":" << to_string(d) << "\n";
  if (has_errors(diags)) return kUserError;
  std::cout << cfg.model << ": ok\n";
  return kOk;
}

// ---- query --------------------------------------------------------------------

json result_json(const std::string& text, const StatResult& r, const RunParams& p) {
  json j = {{"schema_version", kSchemaVersion},
            {"query", text},
            {"decision", to_string(r.decision)},
            {"runs", r.runs},
            {"successes", r.successes},
            {"deadlocks", r.deadlocks},
            {"seed", p.seed}};
  switch (r.kind) {
    case QueryKind::Estimate:
      j["kind"] = "estimate";
      j["p_hat"] = r.p_hat;
      j["epsilon"] = r.epsilon;
      j["confidence"] = 1.0 - p.alpha;
      j["ci"] = {r.ci.lo, r.ci.hi};
      break;
    case QueryKind::HypTest:
      j["kind"] = "hypothesis";
      j["threshold"] = r.threshold;
      j["p0"] = r.threshold + p.delta0;
      j["p1"] = r.threshold - p.delta1;
      j["p_hat"] = r.p_hat;
      break;
    case QueryKind::Compare:
      j["kind"] = "compare";
      j["discordant"] = r.discordant;
      break;
    case QueryKind::Expect:
      j["kind"] = "expect";
      j["mean"] = r.mean;
      j["sample_std"] = r.stddev;
      break;
    case QueryKind::Simulate:
      break;
  }
  return j;
}

std::string result_text(const std::string& text, const StatResult& r, const RunParams& p) {
  std::ostringstream o;
  o << "query: " << text << "\n";
  switch (r.kind) {
    case QueryKind::Estimate:
      o << "probability: " << r.p_hat << " +/- " << r.epsilon << " (confidence " << 1.0 - p.alpha << ")\n";
      o << "clopper-pearson interval: [" << r.ci.lo << ", " << r.ci.hi << "]\n";
      break;
    case QueryKind::HypTest:
      o << "decision: " << to_string(r.decision) << " ("
        << (r.decision == Decision::AcceptH0 ? "p >= " + std::to_string(r.threshold + p.delta0)
                                              : "p <= " + std::to_string(r.threshold - p.delta1))
        << ")\n";
      break;
    case QueryKind::Compare:
      o << "decision: " << to_string(r.decision) << " (" << r.discordant << " discordant pairs)\n";
      break;
    case QueryKind::Expect:
      o << "mean: " << r.mean << "\n";
      o << "sample std (no confidence bound): " << r.stddev << "\n";
      break;
    case QueryKind::Simulate:
      break;
  }
  o << "runs: " << r.runs << "\n";
  if (r.deadlocks) o << "deadlocked runs: " << r.deadlocks << "\n";
  o << "seed: " << p.seed << "\n";
  return o.str();
}

void export_distribution(const Config& cfg, const StatResult& r) {
  if (cfg.histogram.empty() && cfg.cdf.empty()) return;
  std::vector<double> values;
  for (const auto& o : r.outcomes) {
    if (r.kind == QueryKind::Expect) values.push_back(o.aggregate);
    else if ((r.kind == QueryKind::Estimate || r.kind == QueryKind::HypTest) && o.success)
      values.push_back(o.aggregate);
  }
  if (r.kind == QueryKind::Compare) throw std::invalid_argument("comparison queries have no distribution to export");
  if (values.empty()) throw std::invalid_argument("no satisfying runs to build a distribution from");
  if (!cfg.histogram.empty()) {
    const auto h = histogram_by_count(values, static_cast<std::size_t>(cfg.buckets));
    write_file(cfg.histogram, ends_with(cfg.histogram, ".json") ? to_json(h).dump(2) + "\n" : to_csv(h));
  }
  if (!cfg.cdf.empty()) {
    const auto d = build_cdf(values, cfg.params.alpha);
    write_file(cfg.cdf, ends_with(cfg.cdf, ".json") ? to_json(d).dump(2) + "\n" : to_csv(d));
  }
}

int cmd_simulate(const Config& cfg, const Network& net, const Query& q);

int cmd_query(const Config& cfg) {
  const auto ast = load_model(cfg.model);
  const auto net = build_network(ast);
  const auto texts = query_texts(cfg);
  json all = json::array();
  std::string text_out;
  for (const auto& text : texts) {
    const auto q = resolve_query(parse_query(text), net);
    if (q.kind == QueryKind::Simulate) {
      if (texts.size() > 1) throw std::invalid_argument("simulate queries must be run one at a time");
      return cmd_simulate(cfg, net, q);
    }
    StatResult r;
    if (cfg.naive) r = run_naive_parallel(net, q, cfg.params);
    else if (!cfg.workers.empty()) r = dispatch_remote(ast, net, q, text, cfg.params, cfg.workers, cfg.timeout_ms);
    else r = run_parallel(net, q, cfg.params);
    export_distribution(cfg, r);
    all.push_back(result_json(text, r, cfg.params));
    if (!text_out.empty()) text_out += "\n";
    text_out += result_text(text, r, cfg.params);
  }
  if (cfg.format == "json") emit(cfg, (all.size() == 1 ? all[0] : all).dump(2) + "\n");
  else emit(cfg, text_out);
  return kOk;
}

// ---- simulate -----------------------------------------------------------------

int cmd_simulate(const Config& cfg, const Network& net, const Query& q) {
  if (q.kind != QueryKind::Simulate) throw std::invalid_argument("expected a 'simulate' query");
  const auto series = simulate_trajectories(net, q, cfg.params.seed, cfg.resolution, cfg.params.reuse);
  if (cfg.format == "json") emit(cfg, to_json(series).dump(2) + "\n");
  else emit(cfg, to_csv(series));
  return kOk;
}

int cmd_simulate_entry(const Config& cfg) {
  const auto net = build_network(load_model(cfg.model));
  const auto texts = query_texts(cfg);
  if (texts.size() != 1) throw std::invalid_argument("simulate takes exactly one query");
  return cmd_simulate(cfg, net, resolve_query(parse_query(texts[0]), net));
}

// ---- worker -------------------------------------------------------------------

int cmd_worker(const Config& cfg) {
  WorkerService service(load_model(cfg.model));
  WorkerServer server(service, cfg.listen);
  struct sigaction sa{};
  sa.sa_handler = on_signal;
  sigemptyset(&sa.sa_mask);
  sigaction(SIGTERM, &sa, nullptr);
  sigaction(SIGINT, &sa, nullptr);
  std::cout << "listening on port " << server.port() << " model " << hex64(service.hash()) << std::endl;
  server.serve(g_stop);
  return kOk;
}

// ---- argument parsing -----------------------------------------------------------

void add_stat_options(CLI::App* app, Config& cfg) {
  app->add_option("--alpha", cfg.params.alpha, "Type I error bound / 1 - confidence")->capture_default_str();
  app->add_option("--beta", cfg.params.beta, "Type II error bound")->capture_default_str();
  app->add_option("--epsilon", cfg.params.epsilon, "Estimation half-width")->capture_default_str();
  app->add_option("--delta0", cfg.params.delta0, "Indifference half-width above the threshold")->capture_default_str();
  app->add_option("--delta1", cfg.params.delta1, "Indifference half-width below the threshold")->capture_default_str();
  app->add_option("--delta", cfg.delta, "Sets both indifference half-widths");
  app->add_option("--cores", cfg.params.cores, "Local worker threads")->capture_default_str();
  app->add_option("--batch", cfg.params.batch, "Runs per worker per round")->capture_default_str();
  app->add_option("--max-pairs", cfg.params.max_pairs, "Pair budget for comparisons")->capture_default_str();
  app->add_option("--workers", cfg.workers, "Remote worker endpoints host:port")->delimiter(',');
  app->add_option("--timeout-ms", cfg.timeout_ms, "Remote worker reply timeout")->capture_default_str();
  app->add_flag("--naive", cfg.naive, "Feed outcomes in completion order (biased; for demonstration)");
  app->add_option("--histogram", cfg.histogram, "Write a histogram of run times or values (.json or CSV)");
  app->add_option("--cdf", cfg.cdf, "Write the empirical CDF with confidence band (.json or CSV)");
  app->add_option("--buckets", cfg.buckets, "Histogram bucket count")->capture_default_str();
}

void add_common_run_options(CLI::App* app, Config& cfg) {
  app->add_option("model", cfg.model, "Model file")->required();
  app->add_option("query", cfg.query, "Query text");
  app->add_option("--query-file", cfg.query_file, "File with one query per line");
  app->add_option("--seed", cfg.seed, "Master seed (default: NSMC_SEED or random)");
  app->add_option("--reuse", cfg.reuse, "Reuse sampled delays across steps")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  app->add_option("--format", cfg.format, "Output format")->check(CLI::IsMember({"text", "json"}))->capture_default_str();
  app->add_option("-o,--output", cfg.output, "Write output to a file");
  app->add_option("--resolution", cfg.resolution, "Trajectory filter cells per axis")->capture_default_str();
}

void finish_config(Config& cfg) {
  if (cfg.query.empty() == cfg.query_file.empty())
    throw std::invalid_argument("give either a query argument or --query-file");
  if (cfg.delta > 0.0) cfg.params.delta0 = cfg.params.delta1 = cfg.delta;
  cfg.params.seed = cfg.seed ? *cfg.seed : default_seed();
  cfg.params.reuse = cfg.reuse == "on";
  if (cfg.resolution < 1) throw std::invalid_argument("resolution must be positive");
  if (cfg.buckets < 1) throw std::invalid_argument("bucket count must be positive");
  if (cfg.params.cores < 1) throw std::invalid_argument("cores must be at least 1");
  if (cfg.params.batch < 1) throw std::invalid_argument("batch must be at least 1");
}

}  // namespace

int main(int argc, char** argv) {
  Config cfg;
  CLI::App app{"Statistical model checker for networks of priced timed automata"};
  app.require_subcommand(1);

  auto* validate_cmd = app.add_subcommand("validate", "Check a model and print diagnostics");
  validate_cmd->add_option("model", cfg.model, "Model file")->required();

  auto* query_cmd = app.add_subcommand("query", "Run Pr, E or simulate queries");
  add_common_run_options(query_cmd, cfg);
  add_stat_options(query_cmd, cfg);

  auto* simulate_cmd = app.add_subcommand("simulate", "Record filtered trajectories of a simulate query");
  add_common_run_options(simulate_cmd, cfg);

  auto* worker_cmd = app.add_subcommand("worker", "Serve runs to a remote coordinator");
  worker_cmd->add_option("model", cfg.model, "Model file")->required();
  worker_cmd->add_option("--listen", cfg.listen, "host:port to listen on (port 0 picks one)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUserError;
  }

  try {
    if (*validate_cmd) return cmd_validate(cfg);
    if (*worker_cmd) return cmd_worker(cfg);
    finish_config(cfg);
    if (*simulate_cmd) return cmd_simulate_entry(cfg);
    return cmd_query(cfg);
  } catch (const UserError& e) {
    std::cerr << e.what() << "\n";
    return kUserError;
  } catch (const ParseError& e) {
    std::cerr << "query:" << e.what() << "\n";
    return kUserError;
  } catch (const ModelError& e) {
    for (const auto& d : e.diagnostics) std::cerr << to_string(d) << "\n";
    return kUserError;
  } catch (const OutputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kEnvError;
  } catch (const RemoteError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kEnvError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUserError;
  }
}
