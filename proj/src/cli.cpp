#include "dgnpp/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "dgnpp/checkpoint.hpp"
#include "dgnpp/gradcheck.hpp"
#include "dgnpp/hawkes.hpp"
#include "dgnpp/ingest.hpp"
#include "dgnpp/predict.hpp"
#include "dgnpp/run_config.hpp"
#include "dgnpp/train.hpp"

namespace dgnpp {

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Applier = std::function<void(RunConfig&)>;

class Binder {
 public:
  Binder(CLI::App* cmd, std::vector<Applier>* appliers) : cmd_(cmd), appliers_(appliers) {}

  template <class T, class Set>
  void option(const std::string& name, const std::string& desc, Set set) {
    auto value = std::make_shared<T>();
    CLI::Option* o = cmd_->add_option(name, *value, desc);
    appliers_->push_back([value, o, set](RunConfig& c) {
      if (o->count() > 0) set(c, *value);
    });
  }

  template <class Set>
  void flag(const std::string& name, const std::string& desc, Set set) {
    auto value = std::make_shared<bool>(false);
    CLI::Option* o = cmd_->add_flag(name, *value, desc);
    appliers_->push_back([o, set](RunConfig& c) {
      if (o->count() > 0) set(c);
    });
  }

 private:
  CLI::App* cmd_;
  std::vector<Applier>* appliers_;
};

void add_common(Binder& b) {
  b.option<std::string>("--output-dir", "Directory for outputs and the resolved config",
                        [](RunConfig& c, const std::string& v) { c.output_dir = v; });
  b.option<std::uint64_t>("--seed", "Random seed",
                          [](RunConfig& c, std::uint64_t v) { c.train.seed = v; });
  b.option<std::size_t>("--threads", "Worker threads (1 = bitwise reproducible)",
                        [](RunConfig& c, std::size_t v) { c.train.threads = v; });
}

void add_model_flags(Binder& b) {
  b.option<std::size_t>("--dim", "Embedding width D (even)",
                        [](RunConfig& c, std::size_t v) { c.train.dim = v; });
  b.option<std::size_t>("--attn-dim", "Attention query/key width",
                        [](RunConfig& c, std::size_t v) { c.train.attn_dim = v; });
  b.option<std::size_t>("--sal-blocks", "Stacked attention blocks",
                        [](RunConfig& c, std::size_t v) { c.train.sal_blocks = v; });
  b.option<std::size_t>("--layers", "Aggregation layers R",
                        [](RunConfig& c, std::size_t v) { c.train.layers = v; });
  b.option<std::size_t>("--snapshots", "Number of graph snapshots N",
                        [](RunConfig& c, std::size_t v) { c.train.num_snapshots = v; });
  b.option<std::size_t>("--history-cap", "Most recent interactions attended to",
                        [](RunConfig& c, std::size_t v) { c.train.history_cap = v; });
  b.option<std::size_t>("--negatives", "Sampled negative items per event (0 = all)",
                        [](RunConfig& c, std::size_t v) { c.train.negatives = v; });
  b.option<std::size_t>("--mc-samples", "Monte Carlo samples per inter-event gap",
                        [](RunConfig& c, std::size_t v) { c.train.mc_samples_per_gap = v; });
  b.flag("--ablate-nal", "Use the raw node table instead of aggregated embeddings",
         [](RunConfig& c) { c.train.ablate_nal = true; });
  b.flag("--ablate-sal", "Use static embeddings in place of dynamic ones",
         [](RunConfig& c) { c.train.ablate_sal = true; });
}

void add_train_flags(Binder& b) {
  b.option<double>("--lr", "Learning rate",
                   [](RunConfig& c, double v) { c.train.learning_rate = v; });
  b.option<double>("--weight-decay", "Decoupled weight decay",
                   [](RunConfig& c, double v) { c.train.weight_decay = v; });
  b.option<double>("--dropout", "Attention dropout rate",
                   [](RunConfig& c, double v) { c.train.dropout = v; });
  b.option<std::size_t>("--epochs", "Training epochs",
                        [](RunConfig& c, std::size_t v) { c.train.epochs = v; });
  b.option<std::size_t>("--batch-size", "Events per mini-batch",
                        [](RunConfig& c, std::size_t v) { c.train.batch_size = v; });
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void echo_config(const RunConfig& c) {
  write_text(fs::path(c.output_dir) / "resolved_config.json", to_json(c).dump(2) + "\n");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void require(const std::string& value, const char* what) {
  if (value.empty()) throw UsageError(std::string("missing required ") + what);
}

std::string summary(const EventStream& s) {
  return std::to_string(s.num_users) + " users, " + std::to_string(s.num_items) +
         " items, " + std::to_string(s.size()) + " events, horizon " +
         format_double(s.horizon);
}

void apply_toy_defaults(RunConfig& c) {
  c.train.dim = 8;
  c.train.attn_dim = 8;
  c.train.sal_blocks = 2;
  c.train.layers = 2;
  c.train.num_snapshots = 4;
  c.train.negatives = 0;
  c.simulate.users = 2;
  c.simulate.items = 3;
  c.simulate.baseline = {0.3};
  c.simulate.excitation = {{0.1}};
  c.simulate.decay = 1.0;
  c.simulate.horizon = 10.0;
}

int cmd_ingest(const RunConfig& c, std::ostream& out) {
  require(c.input, "--input");
  require(c.output, "--output");
  if (!fs::exists(c.input)) throw std::runtime_error("input file not found: " + c.input);
  const IngestResult r = parse_jodie_csv(fs::path(c.input));
  write_event_file(r.stream, fs::path(c.output));
  out << summary(r.stream) << '\n';
  if (r.unsorted_rows > 0) {
    out << "sorted " << r.unsorted_rows << " out-of-order rows by timestamp\n";
  }
  return kOk;
}

int cmd_simulate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const HawkesParams p = c.simulate.params();
  TypeGrid grid{c.simulate.users, c.simulate.items};
  const SimulationResult r = simulate_hawkes(p, c.simulate.horizon, c.train.seed, grid);
  if (r.unstable) err << "warning: excitation is not subcritical\n";
  const std::string path =
      c.output.empty() ? (fs::path(c.output_dir) / "events.txt").string() : c.output;
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  write_event_file(r.stream, fs::path(path));
  out << summary(r.stream) << '\n';
  return kOk;
}

int cmd_train(const RunConfig& c, std::ostream& out, std::ostream& err) {
  require(c.events, "--events");
  const EventStream stream = read_event_file(fs::path(c.events));
  if (stream.empty()) throw UsageError("training stream is empty: " + c.events);
  const std::string ckpt_path =
      c.checkpoint.empty() ? (fs::path(c.output_dir) / "checkpoint.json").string()
                           : c.checkpoint;
  const std::string trace_path =
      c.loss_trace.empty() ? (fs::path(c.output_dir) / "loss_trace.csv").string()
                           : c.loss_trace;

  std::string trace = "epoch,neg_log_likelihood\n";
  TrainResult r = train(stream, c.train, [&](const EpochStats& s) {
    const std::string line = std::to_string(s.epoch) + "," + format_double(s.loss);
    trace += line + "\n";
    out << "epoch " << s.epoch << " loss " << format_double(s.loss) << '\n';
  });
  Checkpoint ckpt;
  ckpt.config = c.train;
  ckpt.params = std::move(r.params);
  ckpt.epochs_completed = r.epochs.size();
  ckpt.rng_seed = c.train.seed;
  ckpt.rng_epoch = r.epochs.size();
  if (fs::path(ckpt_path).has_parent_path()) {
    fs::create_directories(fs::path(ckpt_path).parent_path());
  }
  save_checkpoint(ckpt, ckpt_path);
  write_text(trace_path, trace);
  if (r.diverged) {
    err << "error: training diverged (" << r.message
        << "); saved the last finite parameters to " << ckpt_path << '\n';
    return kCheckFailed;
  }
  out << "checkpoint " << ckpt_path << '\n';
  return kOk;
}

int cmd_eval(const RunConfig& c, bool ablate_nal, bool ablate_sal, std::ostream& out) {
  require(c.checkpoint, "--checkpoint");
  require(c.test, "--test");
  if (!fs::exists(c.checkpoint)) throw std::runtime_error("checkpoint not found: " + c.checkpoint);
  const Checkpoint ckpt = load_checkpoint(c.checkpoint);
  const ModelDims dims = ckpt.params.dims();
  const EventStream test = read_event_file(fs::path(c.test), dims.num_users, dims.num_items);
  EventStream history;
  history.num_users = dims.num_users;
  history.num_items = dims.num_items;
  if (!c.history.empty()) {
    history = read_event_file(fs::path(c.history), dims.num_users, dims.num_items);
  }
  if (test.num_users != dims.num_users || test.num_items != dims.num_items ||
      history.num_users != dims.num_users || history.num_items != dims.num_items) {
    throw CheckpointError("event ids exceed the checkpoint's vocabulary (" +
                          std::to_string(dims.num_users) + " users, " +
                          std::to_string(dims.num_items) + " items)");
  }
  if (!history.empty() && !test.empty() &&
      test.events.front().timestamp < history.events.back().timestamp) {
    throw UsageError("test events must not precede the history");
  }
  ModelOptions options = ckpt.config.model_options();
  options.ablate_nal = options.ablate_nal || ablate_nal;
  options.ablate_sal = options.ablate_sal || ablate_sal;
  IntensityModel model(ckpt.params, history, options);

  EvalOptions eo;
  eo.k_list = c.k_list;
  eo.candidate_cap = c.candidate_cap;
  eo.predict_time = c.predict_time;
  eo.seed = c.train.seed;
  const EvalReport report = evaluate(model, test, eo);
  const std::string metrics = metrics_json(report);
  write_text(fs::path(c.output_dir) / "metrics.json", metrics);
  std::ostringstream audit;
  write_audit_csv(report, audit);
  write_text(fs::path(c.output_dir) / "audit.csv", audit.str());
  out << metrics;
  return kOk;
}

int cmd_gradcheck(const RunConfig& c, bool inject, std::ostream& out) {
  EventStream stream;
  ModelParams params;
  TrainConfig tc = c.train;
  if (!c.checkpoint.empty()) {
    const Checkpoint ckpt = load_checkpoint(c.checkpoint);
    params = ckpt.params;
    tc = ckpt.config;
  }
  if (!c.events.empty()) {
    stream = read_event_file(fs::path(c.events));
  } else {
    stream = simulate_hawkes(c.simulate.params(), c.simulate.horizon, tc.seed,
                             TypeGrid{c.simulate.users, c.simulate.items})
                 .stream;
  }
  if (c.checkpoint.empty()) {
    tc.validate();
    params = init_model_params(tc.dims(stream.num_users, stream.num_items), tc.seed);
  } else {
    const ModelDims d = params.dims();
    if (stream.num_users > d.num_users || stream.num_items > d.num_items) {
      throw CheckpointError("event ids exceed the checkpoint's vocabulary");
    }
    stream.num_users = d.num_users;
    stream.num_items = d.num_items;
  }

  GradCheckOptions go;
  go.coords_per_tensor = c.gradcheck_coords;
  go.step = c.gradcheck_step;
  go.seed = tc.seed;
  go.objective.negatives = tc.negatives;
  go.objective.mc_samples_per_gap = tc.mc_samples_per_gap;
  go.objective.seed = tc.seed;
  go.inject_gradient_error = inject ? 0.05 : 0.0;
  const GradCheckReport report = grad_check(params, stream, tc.model_options(), go);

  nlohmann::json j;
  j["max_relative_error"] = report.max_relative_error;
  j["checked"] = report.checked;
  nlohmann::json per = nlohmann::json::object();
  for (const auto& t : report.tensors) {
    per[t.name] = t.max_relative_error;
    out << t.name << " " << format_double(t.max_relative_error) << '\n';
  }
  j["tensors"] = per;
  write_text(fs::path(c.output_dir) / "gradcheck.json", j.dump(2) + "\n");
  out << "checked " << report.checked << " coordinates, max relative error "
      << format_double(report.max_relative_error) << '\n';
  return report.max_relative_error > 1e-3 ? kCheckFailed : kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dynamic graph neural point process: ingest, simulate, train, evaluate"};
  app.name("dgnpp");
  app.require_subcommand(1);
  std::string config_path;
  std::vector<Applier> appliers;
  bool inject = false;
  bool eval_ablate_nal = false;
  bool eval_ablate_sal = false;

  auto add_config = [&config_path](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run config (flags override it)");
  };

  CLI::App* ingest = app.add_subcommand("ingest", "Convert a JODIE-style CSV to an event file");
  {
    Binder b(ingest, &appliers);
    add_config(ingest);
    add_common(b);
    b.option<std::string>("--input", "JODIE-style CSV with a header line",
                          [](RunConfig& c, const std::string& v) { c.input = v; });
    b.option<std::string>("--output", "Canonical event file to write",
                          [](RunConfig& c, const std::string& v) { c.output = v; });
  }

  CLI::App* simulate = app.add_subcommand("simulate", "Simulate a multivariate Hawkes stream");
  {
    Binder b(simulate, &appliers);
    add_config(simulate);
    add_common(b);
    b.option<std::size_t>("--users", "Users in the type grid",
                          [](RunConfig& c, std::size_t v) { c.simulate.users = v; });
    b.option<std::size_t>("--items", "Items in the type grid",
                          [](RunConfig& c, std::size_t v) { c.simulate.items = v; });
    b.option<std::vector<double>>(
        "--baseline", "Baseline rate (one value, or one per type)",
        [](RunConfig& c, const std::vector<double>& v) { c.simulate.baseline = v; });
    b.option<double>("--excitation", "Excitation applied to every type pair",
                     [](RunConfig& c, double v) { c.simulate.excitation = {{v}}; });
    b.option<double>("--decay", "Exponential kernel decay",
                     [](RunConfig& c, double v) { c.simulate.decay = v; });
    b.option<double>("--horizon", "Simulation horizon",
                     [](RunConfig& c, double v) { c.simulate.horizon = v; });
    b.option<std::string>("--output", "Event file to write (default <output-dir>/events.txt)",
                          [](RunConfig& c, const std::string& v) { c.output = v; });
  }

  CLI::App* train_cmd = app.add_subcommand("train", "Train by maximum likelihood");
  {
    Binder b(train_cmd, &appliers);
    add_config(train_cmd);
    add_common(b);
    add_model_flags(b);
    add_train_flags(b);
    b.option<std::string>("--events", "Training event file",
                          [](RunConfig& c, const std::string& v) { c.events = v; });
    b.option<std::string>("--checkpoint",
                          "Checkpoint to write (default <output-dir>/checkpoint.json)",
                          [](RunConfig& c, const std::string& v) { c.checkpoint = v; });
    b.option<std::string>("--loss-trace",
                          "Loss trace CSV (default <output-dir>/loss_trace.csv)",
                          [](RunConfig& c, const std::string& v) { c.loss_trace = v; });
  }

  CLI::App* eval = app.add_subcommand("eval", "Rank test events and predict their times");
  {
    Binder b(eval, &appliers);
    add_config(eval);
    add_common(b);
    b.option<std::string>("--checkpoint", "Trained checkpoint",
                          [](RunConfig& c, const std::string& v) { c.checkpoint = v; });
    b.option<std::string>("--test", "Test event file",
                          [](RunConfig& c, const std::string& v) { c.test = v; });
    b.option<std::string>("--history", "Events preceding the test stream (training file)",
                          [](RunConfig& c, const std::string& v) { c.history = v; });
    b.option<std::vector<std::size_t>>(
        "--k", "Cutoffs for Recall@k",
        [](RunConfig& c, const std::vector<std::size_t>& v) { c.k_list = v; });
    b.option<std::size_t>("--candidate-cap",
                          "Rank against the true item plus cap-1 sampled items (0 = all)",
                          [](RunConfig& c, std::size_t v) { c.candidate_cap = v; });
    b.flag("--no-time", "Skip time prediction", [](RunConfig& c) { c.predict_time = false; });
    eval->add_flag("--ablate-nal", eval_ablate_nal,
                   "Evaluate with the raw node table instead of aggregated embeddings");
    eval->add_flag("--ablate-sal", eval_ablate_sal,
                   "Evaluate with static embeddings in place of dynamic ones");
  }

  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "Compare analytic gradients with central differences");
  {
    Binder b(gradcheck, &appliers);
    add_config(gradcheck);
    add_common(b);
    add_model_flags(b);
    b.option<std::string>("--events", "Event file (default: a small simulated stream)",
                          [](RunConfig& c, const std::string& v) { c.events = v; });
    b.option<std::string>("--checkpoint", "Check these parameters instead of a fresh init",
                          [](RunConfig& c, const std::string& v) { c.checkpoint = v; });
    b.option<std::size_t>("--coords", "Coordinates sampled per tensor",
                          [](RunConfig& c, std::size_t v) { c.gradcheck_coords = v; });
    b.option<double>("--step", "Central-difference step",
                     [](RunConfig& c, double v) { c.gradcheck_step = v; });
    gradcheck->add_flag("--inject-gradient-error", inject,
                        "Test hook: perturb the analytic gradient");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    RunConfig c;
    if (gradcheck->parsed()) apply_toy_defaults(c);
    if (!config_path.empty()) {
      if (!fs::exists(config_path)) {
        throw std::runtime_error("config file not found: " + config_path);
      }
      std::ifstream in(config_path);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(config_path + ": " + e.what());
      }
      merge_json(j, c);
    }
    if (const char* env = std::getenv("DGNPP_OUTPUT_DIR"); env && *env) c.output_dir = env;
    for (const auto& apply : appliers) apply(c);
    c.train.validate();
    fs::create_directories(c.output_dir);
    echo_config(c);

    if (ingest->parsed()) return cmd_ingest(c, out);
    if (simulate->parsed()) return cmd_simulate(c, out, err);
    if (train_cmd->parsed()) return cmd_train(c, out, err);
    if (eval->parsed()) return cmd_eval(c, eval_ablate_nal, eval_ablate_sal, out);
    return cmd_gradcheck(c, inject, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, out, err);
}

}  // namespace dgnpp
