#include "sttgcn/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sttgcn/bench.hpp"
#include "sttgcn/checkpoint.hpp"
#include "sttgcn/data_io.hpp"
#include "sttgcn/decomp.hpp"
#include "sttgcn/errors.hpp"
#include "sttgcn/graph.hpp"
#include "sttgcn/metrics.hpp"
#include "sttgcn/model.hpp"
#include "sttgcn/train.hpp"

namespace sttgcn {
namespace {

namespace fs = std::filesystem;

struct DataOpts {
  std::string speed;
  std::string adj;
  bool synthetic = false;
  int interval = 15;
  std::size_t t_in = 12;
  std::size_t t_out = 1;
  int horizon_minutes = 0;
  double split = 0.8;
  std::string speed_header = "auto";

  void attach(CLI::App* app) {
    app->add_option("--speed", speed, "Speed CSV (rows = timestamps, columns = nodes)");
    app->add_option("--adj", adj, "Adjacency CSV (N x N)");
    app->add_option("--speed-header", speed_header, "Speed CSV header row: auto, yes or no");
    app->add_flag("--synthetic", synthetic, "Use the built-in ring-graph sinusoid dataset");
    app->add_option("--interval", interval, "Sampling interval in minutes")->check(CLI::PositiveNumber);
    app->add_option("--t-in", t_in, "Input window length in steps")->check(CLI::PositiveNumber);
    app->add_option("--t-out", t_out, "Forecast horizon in steps")->check(CLI::PositiveNumber);
    app->add_option("--horizon-minutes", horizon_minutes, "Horizon in minutes (overrides --t-out)")
        ->check(CLI::PositiveNumber);
    app->add_option("--split", split, "Training fraction of the timeline")->check(CLI::Range(0.0, 1.0));
  }

  std::size_t horizon() const {
    if (horizon_minutes <= 0) return t_out;
    if (horizon_minutes % interval != 0) {
      throw ArgumentError("horizon of " + std::to_string(horizon_minutes) + " minutes is not a multiple of the " +
                          std::to_string(interval) + "-minute interval");
    }
    return static_cast<std::size_t>(horizon_minutes / interval);
  }

  RawDataset load() const {
    if (synthetic) {
      if (!speed.empty() || !adj.empty()) throw ArgumentError("--synthetic cannot be combined with --speed/--adj");
      RawDataset raw = make_synthetic_dataset();
      raw.interval_minutes = interval;
      return raw;
    }
    if (speed.empty() || adj.empty()) throw ArgumentError("--speed and --adj are required (or pass --synthetic)");
    return load_dataset(speed, adj, interval, parse_csv_header(speed_header));
  }
};

struct ModelOpts {
  TrainConfig cfg;
  std::string mode = "factorized";
  std::string rule = "sqrt";
  std::vector<std::size_t> ranks;
  std::string readout_activation = "sigmoid";

  void attach(CLI::App* app) {
    app->add_option("--mode", mode, "full, factorized, spatial-only or temporal-only");
    app->add_option("--epochs", cfg.epochs, "Training epochs")->check(CLI::NonNegativeNumber);
    app->add_option("--lr", cfg.learning_rate, "Adam learning rate");
    app->add_option("--batch", cfg.batch_size, "Minibatch size")->check(CLI::PositiveNumber);
    app->add_option("--lambda", cfg.lambda, "L2 coefficient");
    app->add_option("--p", cfg.p, "Graph polynomial order")->check(CLI::NonNegativeNumber);
    app->add_option("--rank-rule", rule, "Tucker rank preset: full, sqrt or cbrt");
    app->add_option("--ranks", ranks, "Explicit Tucker ranks n d t")->expected(3)->delimiter(',');
    app->add_option("--refactorize-every", cfg.refactorize_every, "Forwards between HOOI refreshes")
        ->check(CLI::PositiveNumber);
    app->add_option("--seed", cfg.seed, "Random seed");
    app->add_option("--hidden", cfg.hidden, "fc1 width")->check(CLI::PositiveNumber);
    app->add_option("--embed", cfg.embed, "Embedding width")->check(CLI::PositiveNumber);
    app->add_option("--conv1", cfg.conv1, "First conv layer width")->check(CLI::PositiveNumber);
    app->add_option("--conv2", cfg.conv2, "Second conv layer width")->check(CLI::PositiveNumber);
    app->add_option("--val-fraction", cfg.val_fraction, "Held-out tail of the training windows");
    app->add_option("--readout-activation", readout_activation, "sigmoid or identity");
  }

  TrainConfig resolve(const DataOpts& d) const {
    TrainConfig c = cfg;
    c.mode = parse_conv_mode(mode);
    c.rank_rule = parse_rank_rule(rule);
    if (!ranks.empty()) c.ranks = Ranks{ranks.at(0), ranks.at(1), ranks.at(2)};
    c.readout_activation = parse_activation(readout_activation);
    c.t_in = d.t_in;
    c.t_out = d.horizon();
    c.validate();
    return c;
  }
};

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "sttgcn_out";
}

fs::path prepare_dir(const std::string& flag) {
  const fs::path dir = output_dir(flag);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(dir.string() + ": cannot create output directory: " + ec.message());
  return dir;
}

struct Graphs {
  SpatialGraph sg;
  TemporalAdjacency at;
};

Graphs graphs_for(const RawDataset& raw, std::size_t t_in, int p) {
  return {make_spatial_graph(raw.adjacency, p), build_temporal_adjacency(raw.nodes(), t_in,
                                                                         TemporalScheme::backward_chain, p)};
}

std::string opt_str(const std::optional<double>& v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", *v);
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string metrics_csv(const MetricsReport& m) {
  return num(m.rmse) + "," + num(m.mae) + "," + opt_str(m.accuracy) + "," + opt_str(m.r2) + "," + opt_str(m.var);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError(path.string() + ": cannot write file");
  out << text;
}

// Rows of an existing sweep CSV keyed by their first `key_cols` fields.
std::map<std::string, std::string> read_sweep(const fs::path& path, const std::string& header, std::size_t key_cols) {
  std::map<std::string, std::string> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  if (!std::getline(in, line)) return rows;
  if (line != header) throw DataError(path.string() + ": existing sweep file has a different header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t pos = 0;
    for (std::size_t k = 0; k < key_cols && pos != std::string::npos; ++k) {
      pos = line.find(',', pos);
      if (pos != std::string::npos && k + 1 < key_cols) ++pos;
    }
    if (pos == std::string::npos) continue;  // truncated row, recomputed
    rows[line.substr(0, pos)] = line;
  }
  return rows;
}

void append_line(const fs::path& path, const std::string& header, const std::string& line) {
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw DataError(path.string() + ": cannot write file");
  if (fresh) out << header << '\n';
  out << line << '\n';
}

MetricsReport train_and_test(const TrainConfig& cfg, const WindowSet& ws, const Graphs& g, TrainResult* keep,
                             std::ostream& log, const std::string& tag) {
  if (ws.test.empty()) throw ArgumentError("the test split has no complete windows");
  const int every = std::max(1, cfg.epochs / 10);
  TrainResult r = train(cfg, ws, g.sg, g.at, [&](const EpochRecord& e) {
    if (e.epoch % every == 0 || e.epoch == cfg.epochs) {
      log << tag << "epoch " << e.epoch << " loss " << num(e.train_loss);
      if (e.val_rmse) log << " val_rmse " << num(*e.val_rmse);
      log << '\n';
    }
  });
  const ModelContext ctx = make_context(cfg, g.sg, g.at);
  MetricsReport m = evaluate(r.params, ws.test, ctx, ws.scaler);
  if (keep) *keep = std::move(r);
  return m;
}

int cmd_train(const DataOpts& d, const ModelOpts& mo, const std::string& out_flag, std::ostream& out) {
  const TrainConfig cfg = mo.resolve(d);
  const RawDataset raw = d.load();
  const WindowSet ws = prepare_windows(raw, cfg.t_in, cfg.t_out, d.split);
  const Graphs g = graphs_for(raw, cfg.t_in, cfg.p);
  const fs::path dir = prepare_dir(out_flag);

  TrainResult r;
  const MetricsReport m = train_and_test(cfg, ws, g, &r, out, "");
  save_checkpoint(dir / "checkpoint.json", Checkpoint{r.params, cfg, ws.scaler, cfg.seed});
  std::ostringstream hist;
  hist << "epoch,train_loss,val_rmse\n";
  for (const EpochRecord& e : r.history)
    hist << e.epoch << ',' << num(e.train_loss) << ',' << (e.val_rmse ? num(*e.val_rmse) : "") << '\n';
  write_text(dir / "history.csv", hist.str());
  write_text(dir / "metrics.txt", format_metrics_kv(m));
  out << format_metrics_table(m, "test metrics (" + std::string(conv_mode_name(cfg.mode)) + ", best epoch " +
                                     std::to_string(r.best_epoch) + ")");
  out << "wrote " << (dir / "checkpoint.json").string() << ", history.csv, metrics.txt\n";
  return 0;
}

int cmd_eval(const DataOpts& d, const std::string& ckpt_path, const std::string& mode_override,
             const std::string& out_flag, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(ckpt_path);
  TrainConfig cfg = ck.config;
  if (!mode_override.empty()) cfg.mode = parse_conv_mode(mode_override);
  const RawDataset raw = d.load();
  const WindowSet ws = prepare_windows(raw, cfg.t_in, cfg.t_out, d.split, ck.scaler.max);
  if (ws.test.empty()) throw ArgumentError("the test split has no complete windows");
  const Graphs g = graphs_for(raw, cfg.t_in, cfg.p);
  const MetricsReport m = evaluate(ck.params, ws.test, make_context(cfg, g.sg, g.at), ws.scaler);
  const fs::path dir = prepare_dir(out_flag);
  write_text(dir / "eval_metrics.txt", format_metrics_kv(m));
  out << format_metrics_table(m, "test metrics (" + std::string(conv_mode_name(cfg.mode)) + ")");
  out << format_metrics_kv(m);
  return 0;
}

int cmd_synthetic(const SyntheticOptions& o, const std::string& out_flag, std::ostream& out) {
  const RawDataset raw = make_synthetic_dataset(o);
  const fs::path dir = prepare_dir(out_flag);
  write_csv_matrix(dir / "speed.csv", raw.speeds);
  write_csv_matrix(dir / "adj.csv", raw.adjacency);
  out << "wrote " << (dir / "speed.csv").string() << " (" << raw.steps() << " x " << raw.nodes() << ") and adj.csv\n";
  return 0;
}

int cmd_ha(const DataOpts& d, const std::string& out_flag, std::ostream& out) {
  const RawDataset raw = d.load();
  const WindowSet ws = prepare_windows(raw, d.t_in, d.horizon(), d.split);
  const std::vector<Mat> preds = ha_baseline(ws);
  const MetricsReport m = score_predictions(preds, ws.test, ws.scaler);
  const fs::path dir = prepare_dir(out_flag);
  write_text(dir / "ha_metrics.txt", format_metrics_kv(m));
  out << format_metrics_table(m, "HA baseline, horizon " + std::to_string(ws.t_out) + " step(s), " +
                                     std::to_string(ws.test.size()) + " test windows");
  out << format_metrics_kv(m);
  return 0;
}

std::vector<BenchSize> parse_sizes(const std::vector<std::string>& specs) {
  std::vector<BenchSize> sizes;
  for (const std::string& s : specs) {
    BenchSize b;
    char x1 = 0;
    char x2 = 0;
    std::istringstream is(s);
    if (!(is >> b.n >> x1 >> b.d >> x2 >> b.t) || x1 != 'x' || x2 != 'x' || !is.eof()) {
      throw ArgumentError("size '" + s + "' must look like NxDxT");
    }
    sizes.push_back(b);
  }
  return sizes;
}

int cmd_bench(const std::vector<std::string>& size_specs, const BenchOptions& opts, const std::string& out_flag,
              std::ostream& out) {
  const BenchReport rep = bench_forward(parse_sizes(size_specs), opts);
  const fs::path dir = prepare_dir(out_flag);
  std::ostringstream csv;
  csv << bench_csv_header() << '\n';
  for (const BenchRow& r : rep.rows) csv << bench_csv_row(r) << '\n';
  write_text(dir / "bench.csv", csv.str());
  out << "rank rule " << rank_rule_name(opts.rule) << ", p=" << opts.p << ", input " << bench_input_name(opts.input)
      << ", median of " << opts.repetitions << (opts.concurrent ? ", concurrent components" : "") << '\n';
  write_bench_table(out, rep);
  out << "wrote " << (dir / "bench.csv").string() << '\n';
  return 0;
}

int cmd_decompose(const DataOpts& d, const std::vector<std::size_t>& random_dims, const std::string& rule_name,
                  const std::vector<std::size_t>& ranks_flag, const HooiOptions& hooi_opts, std::uint64_t seed,
                  const std::string& out_flag, std::ostream& out) {
  Tensor3 x;
  std::string source;
  if (!random_dims.empty()) {
    const Dims3 dims{random_dims.at(0), random_dims.at(1), random_dims.at(2)};
    if (!dims.size()) throw ArgumentError("random tensor dims must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    x = Tensor3(dims);
    for (double& v : x.data()) v = dist(rng);
    source = "random gaussian";
  } else {
    // node × lag × window tensor of the scaled training windows
    const RawDataset raw = d.load();
    const WindowSet ws = prepare_windows(raw, d.t_in, d.horizon(), d.split);
    if (ws.train.empty()) throw ArgumentError("no training windows to decompose");
    x = Tensor3({raw.nodes(), d.t_in, ws.train.size()});
    for (std::size_t w = 0; w < ws.train.size(); ++w)
      for (std::size_t t = 0; t < d.t_in; ++t)
        for (std::size_t k = 0; k < raw.nodes(); ++k) x(k, t, w) = ws.train[w].input(k, 0, t);
    source = "training windows (node x lag x window)";
  }
  const Dims3& dims = x.dims();
  const Ranks ranks = ranks_flag.empty() ? ranks_from_rule(dims, parse_rank_rule(rule_name))
                                         : Ranks{ranks_flag.at(0), ranks_flag.at(1), ranks_flag.at(2)};
  HooiTrace trace;
  const TuckerFactors f = hooi(x, ranks, hooi_opts, &trace);
  const auto [mem_full, mem_fact] = memory_footprint(dims.i1, dims.i2, dims.i3, ranks.n, ranks.d, ranks.t);

  const auto ortho = [](const Mat& u) {
    const Mat g = matmul_tn(u, u);
    double worst = 0.0;
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) worst = std::max(worst, std::abs(g(r, c) - (r == c ? 1.0 : 0.0)));
    return worst;
  };

  std::ostringstream csv;
  csv << "iteration,relative_error\n";
  for (std::size_t i = 0; i < trace.errors.size(); ++i) csv << i << ',' << num(trace.errors[i]) << '\n';
  const fs::path dir = prepare_dir(out_flag);
  write_text(dir / "decompose_trace.csv", csv.str());

  out << "source      " << source << '\n';
  out << "dims        " << dims.i1 << " x " << dims.i2 << " x " << dims.i3 << '\n';
  out << "ranks       " << ranks.n << " x " << ranks.d << " x " << ranks.t << '\n';
  out << "iterations  " << trace.iterations << (trace.converged ? " (converged)" : " (max_iter reached)") << '\n';
  out << "rel_error   " << num(reconstruction_error(x, f)) << '\n';
  out << "orthonormality deviation  " << num(std::max({ortho(f.u_s), ortho(f.u_f), ortho(f.u_t)})) << '\n';
  out << "memory      full " << mem_full << ", factorized " << mem_fact << '\n';
  out << "wrote " << (dir / "decompose_trace.csv").string() << '\n';
  return 0;
}

int cmd_perturb(const DataOpts& d, const ModelOpts& mo, const std::vector<double>& sigmas,
                const std::vector<std::string>& modes, int noise_seed, const std::string& out_flag,
                std::ostream& out) {
  const TrainConfig base = mo.resolve(d);
  const RawDataset raw = d.load();
  const Graphs g = graphs_for(raw, base.t_in, base.p);
  const fs::path dir = prepare_dir(out_flag);
  const fs::path csv = dir / "perturb_sweep.csv";
  const std::string header = "mode,sigma,seed,rmse,mae,accuracy,r2,var";
  auto done = read_sweep(csv, header, 3);

  for (const std::string& mode_name : modes) {
    TrainConfig cfg = base;
    cfg.mode = parse_conv_mode(mode_name);
    for (double sigma : sigmas) {
      const std::string key = std::string(conv_mode_name(cfg.mode)) + "," + num(sigma) + "," + std::to_string(cfg.seed);
      if (auto it = done.find(key); it != done.end()) {
        out << "skip " << key << " (already in " << csv.filename().string() << ")\n";
        continue;
      }
      const RawDataset noisy = add_gaussian_noise(raw, sigma, static_cast<std::uint64_t>(noise_seed));
      const WindowSet ws = prepare_windows(noisy, cfg.t_in, cfg.t_out, d.split);
      const MetricsReport m = train_and_test(cfg, ws, g, nullptr, out, "[" + key + "] ");
      const std::string line = key + "," + metrics_csv(m);
      append_line(csv, header, line);
      done[key] = line;
      out << line << '\n';
    }
  }
  out << "wrote " << csv.string() << '\n';
  return 0;
}

int cmd_rank_sweep(const DataOpts& d, const ModelOpts& mo, const std::vector<std::string>& rules,
                   const std::string& out_flag, std::ostream& out) {
  TrainConfig base = mo.resolve(d);
  if (base.mode == ConvMode::full) base.mode = ConvMode::factorized;
  base.ranks.reset();
  const RawDataset raw = d.load();
  const WindowSet ws = prepare_windows(raw, base.t_in, base.t_out, d.split);
  const Graphs g = graphs_for(raw, base.t_in, base.p);
  const fs::path dir = prepare_dir(out_flag);
  const fs::path csv = dir / "rank_sweep.csv";
  const std::string header = "exponent,mode,seed,n,d,t,rmse,mae,accuracy,r2,var";
  auto done = read_sweep(csv, header, 3);

  for (const std::string& rule_name : rules) {
    TrainConfig cfg = base;
    cfg.rank_rule = parse_rank_rule(rule_name);
    const std::string exponent = cfg.rank_rule == RankRule::full ? "1" : cfg.rank_rule == RankRule::sqrt ? "1/2" : "1/3";
    const std::string key = exponent + "," + std::string(conv_mode_name(cfg.mode)) + "," + std::to_string(cfg.seed);
    if (done.count(key)) {
      out << "skip " << key << " (already in " << csv.filename().string() << ")\n";
      continue;
    }
    const auto ranks = resolve_ranks(cfg, raw.nodes());
    const MetricsReport m = train_and_test(cfg, ws, g, nullptr, out, "[s=" + exponent + "] ");
    const std::string line = key + "," + std::to_string(ranks[0].n) + "," + std::to_string(ranks[0].d) + "," +
                             std::to_string(ranks[0].t) + "," + metrics_csv(m);
    append_line(csv, header, line);
    done[key] = line;
    out << line << '\n';
  }
  out << "wrote " << csv.string() << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatial-temporal tensor graph convolution for traffic forecasting", "sttgcn"};
  app.require_subcommand(1);
  std::string out_flag;
  app.add_option("--out", out_flag, std::string("Report directory (default $") + kOutDirEnv + " or ./sttgcn_out)");

  DataOpts train_data, eval_data, ha_data, dec_data, pert_data, rank_data;
  ModelOpts train_model, pert_model, rank_model;

  auto* train_cmd = app.add_subcommand("train", "Train a model and write checkpoint, history and test metrics");
  train_data.attach(train_cmd);
  train_model.attach(train_cmd);

  std::string ckpt;
  std::string eval_mode;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  eval_data.attach(eval_cmd);
  eval_cmd->add_option("--checkpoint", ckpt, "Checkpoint written by train")->required();
  eval_cmd->add_option("--mode", eval_mode, "Override the checkpoint's forward mode");

  std::vector<std::string> sizes{"512x64x12"};
  BenchOptions bench_opts;
  std::string bench_rule = "sqrt";
  std::string bench_input = "lowrank";
  auto* bench_cmd = app.add_subcommand("bench", "Time full versus factorized forward convolution");
  bench_cmd->add_option("--sizes", sizes, "Sizes as NxDxT")->delimiter(',');
  bench_cmd->add_option("--p", bench_opts.p, "Graph polynomial order")->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("--rank-rule", bench_rule, "full, sqrt or cbrt");
  bench_cmd->add_option("--reps", bench_opts.repetitions, "Repetitions (median reported)")->check(CLI::Range(1, 1000));
  bench_cmd->add_option("--seed", bench_opts.seed, "Random seed");
  bench_cmd->add_option("--input", bench_input, "lowrank or gaussian");
  bench_cmd->add_flag("--concurrent", bench_opts.concurrent, "Compute the three factor components concurrently");

  std::vector<std::size_t> random_dims;
  std::vector<std::size_t> dec_ranks;
  std::string dec_rule = "sqrt";
  HooiOptions dec_hooi;
  std::uint64_t dec_seed = 1;
  auto* dec_cmd = app.add_subcommand("decompose", "Run HOOI on a tensor and report its convergence");
  dec_data.attach(dec_cmd);
  dec_cmd->add_option("--random", random_dims, "Decompose a random N,D,T tensor instead of data")
      ->expected(3)
      ->delimiter(',');
  dec_cmd->add_option("--ranks", dec_ranks, "Explicit ranks n d t")->expected(3)->delimiter(',');
  dec_cmd->add_option("--rank-rule", dec_rule, "full, sqrt or cbrt");
  dec_cmd->add_option("--max-iter", dec_hooi.max_iter, "HOOI sweep limit")->check(CLI::PositiveNumber);
  dec_cmd->add_option("--tol", dec_hooi.tol, "Relative improvement threshold")->check(CLI::PositiveNumber);
  dec_cmd->add_option("--seed", dec_seed, "Seed for --random");

  std::vector<double> sigmas{0.0, 0.2, 0.4, 1.0, 2.0, 4.0};
  std::vector<std::string> pert_modes{"factorized", "full"};
  int noise_seed = 1234;
  auto* pert_cmd = app.add_subcommand("perturb-sweep", "Train and test under Gaussian noise of increasing sigma");
  pert_data.attach(pert_cmd);
  pert_model.attach(pert_cmd);
  pert_cmd->add_option("--sigmas", sigmas, "Noise standard deviations")->delimiter(',');
  pert_cmd->add_option("--modes", pert_modes, "Forward modes to compare")->delimiter(',');
  pert_cmd->add_option("--noise-seed", noise_seed, "Seed of the noise draws");

  std::vector<std::string> rules{"full", "sqrt", "cbrt"};
  auto* rank_cmd = app.add_subcommand("rank-sweep", "Train with rank exponents 1, 1/2 and 1/3");
  rank_data.attach(rank_cmd);
  rank_model.attach(rank_cmd);
  rank_cmd->add_option("--rules", rules, "Rank presets to run")->delimiter(',');

  auto* ha_cmd = app.add_subcommand("ha", "Historical-average baseline on the test split");
  ha_data.attach(ha_cmd);

  auto* syn_cmd = app.add_subcommand("synthetic", "Write the ring-graph sinusoid dataset as speed.csv and adj.csv");
  SyntheticOptions syn;
  syn_cmd->add_option("--nodes", syn.nodes, "Ring size")->check(CLI::PositiveNumber);
  syn_cmd->add_option("--steps", syn.steps, "Timestamps")->check(CLI::PositiveNumber);
  syn_cmd->add_option("--noise", syn.noise_std, "Noise standard deviation")->check(CLI::NonNegativeNumber);
  syn_cmd->add_option("--seed", syn.seed, "Noise seed");

  for (CLI::App* sub : {train_cmd, eval_cmd, bench_cmd, dec_cmd, pert_cmd, rank_cmd, ha_cmd, syn_cmd})
    sub->add_option("--out", out_flag, "Report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    if (argc <= 1) err << app.help();
    return 2;
  }

  try {
    if (*train_cmd) return cmd_train(train_data, train_model, out_flag, out);
    if (*eval_cmd) return cmd_eval(eval_data, ckpt, eval_mode, out_flag, out);
    if (*bench_cmd) {
      bench_opts.rule = parse_rank_rule(bench_rule);
      bench_opts.input = parse_bench_input(bench_input);
      return cmd_bench(sizes, bench_opts, out_flag, out);
    }
    if (*dec_cmd) return cmd_decompose(dec_data, random_dims, dec_rule, dec_ranks, dec_hooi, dec_seed, out_flag, out);
    if (*pert_cmd) return cmd_perturb(pert_data, pert_model, sigmas, pert_modes, noise_seed, out_flag, out);
    if (*rank_cmd) return cmd_rank_sweep(rank_data, rank_model, rules, out_flag, out);
    if (*ha_cmd) return cmd_ha(ha_data, out_flag, out);
    if (*syn_cmd) return cmd_synthetic(syn, out_flag, out);
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace sttgcn
