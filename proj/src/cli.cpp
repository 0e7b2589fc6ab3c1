/*
 * Copyright 2026 The vbhead Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "vbhead/cli.hpp"

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "vbhead/common.hpp"
#include "vbhead/dataset.hpp"
#include "vbhead/fusion.hpp"
#include "vbhead/metrics.hpp"
#include "vbhead/model.hpp"
#include "vbhead/trainer.hpp"
#include "vbhead/uncertainty.hpp"

namespace vbhead {

namespace {

namespace fs = std::filesystem;

// Reads a flat JSON object of flag defaults for one subcommand. Keys are
// long flag names without the leading dashes; underscores stand for dashes.
// Flags given on the command line take precedence.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(std::string section) : section_(std::move(section)) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(input);
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      CLI::ConfigItem item;
      if (!section_.empty()) item.parents = {section_};
      item.name = key;
      for (auto& ch : item.name) {
        if (ch == '_') ch = '-';
      }
      if (item.name == "config") throw CLI::ConversionError("config files cannot nest");
      const auto scalar = [](const nlohmann::json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
        return v.dump();
      };
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  std::string section_;
};

// CLI11 reads config files on the top-level app only, so a --config given
// after the subcommand is moved in front of it.
std::vector<std::string> hoist_config(const std::vector<std::string>& args, std::string& section) {
  std::vector<std::string> front, rest;
  bool in_sub = false;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (!in_sub && !a.empty() && a[0] != '-') {
      in_sub = true;
      section = a;
    }
    if (in_sub && a == "--config" && i + 1 < args.size()) {
      front.push_back(a);
      front.push_back(args[++i]);
    } else if (in_sub && a.rfind("--config=", 0) == 0) {
      front.push_back(a);
    } else {
      rest.push_back(a);
    }
  }
  front.insert(front.end(), rest.begin(), rest.end());
  return front;
}

fs::path sibling(const fs::path& path, const std::string& suffix) {
  fs::path out = path;
  out.replace_extension(suffix);
  return out;
}

// Documents --config in each subcommand's help; the value itself is consumed
// by the top-level app (see hoist_config).
void add_config(CLI::App& sub, std::string& unused) {
  sub.add_option("--config", unused, "JSON file with default values for this subcommand's flags")
      ->configurable(false);
}

CLI::Option* add_seed(CLI::App& sub, std::uint64_t& seed) {
  return sub.add_option("--seed", seed, "Seed for every random draw (required)")->required();
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  std::string kind = "blobs";
  std::size_t n = 0, d = 0, k = 2;
  double separation = 0.0, noise = 1.0, dev_fraction = 0.2;
  std::uint64_t seed = 0;
  fs::path out;
};

void run_synth(const SynthArgs& a) {
  SyntheticSpec spec;
  if (a.kind == "blobs") {
    spec.kind = SyntheticSpec::Kind::blobs;
  } else if (a.kind == "planted_regression") {
    spec.kind = SyntheticSpec::Kind::planted_regression;
  } else {
    throw Error("unknown synthetic kind '" + a.kind + "'");
  }
  if (!(a.dev_fraction > 0.0 && a.dev_fraction < 1.0)) throw Error("--dev-fraction must lie in (0,1)");
  spec.num_examples = a.n;
  spec.num_features = a.d;
  spec.num_outputs = a.k;
  spec.class_separation = a.separation;
  spec.noise_std = a.noise;
  spec.seed = a.seed;
  const EmbeddingDataset all = generate_synthetic(spec);
  auto [train, dev] = split_by_fraction(all, a.dev_fraction, a.seed);
  save_dataset(train, a.out / "train.csv");
  save_dataset(dev, a.out / "dev.csv");
  std::cout << "wrote " << train.size() << " train and " << dev.size() << " dev records to " << a.out.string()
            << '\n';
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string head;
  fs::path train, dev, train_b, dev_b, out, report, prior_from;
  std::optional<double> prior_mean, prior_std, sigma_init;
  std::string kl_weight = "auto";
  std::string selection;
  bool record_timing = false;
  TrainConfig config;
};

void run_train(const TrainArgs& a) {
  TrainConfig config = a.config;
  if (a.kl_weight != "auto") config.kl_weight = parse_real(a.kl_weight);
  if (!a.selection.empty()) config.selection = parse_selection_metric(a.selection);
  config.sigma_init = a.sigma_init;
  if (a.prior_mean.has_value() != a.prior_std.has_value()) {
    throw Error("--prior-mean and --prior-std must be given together");
  }
  if (a.prior_mean) config.prior = ScalarGaussianPrior{*a.prior_mean, *a.prior_std};

  const HeadKind kind = parse_head_kind(a.head);
  std::optional<DenseLinearHead> prior_source;
  if (!a.prior_from.empty()) {
    const AnyHead loaded = load_checkpoint(a.prior_from);
    if (!std::holds_alternative<DenseLinearHead>(loaded)) throw Error("--prior-from must name a dense_linear checkpoint");
    prior_source = std::get<DenseLinearHead>(loaded);
  }
  if (a.train_b.empty() != a.dev_b.empty()) throw Error("--train-b and --dev-b must be given together");

  const EmbeddingDataset train_a = load_dataset(a.train);
  const EmbeddingDataset dev_a = load_dataset(a.dev);
  const DenseLinearHead* prior_ptr = prior_source ? &*prior_source : nullptr;
  const TrainResult result =
      a.train_b.empty()
          ? train(kind, train_a, dev_a, config, prior_ptr)
          : early_fuse_train(train_a, load_dataset(a.train_b), dev_a, load_dataset(a.dev_b), kind, config, prior_ptr);

  save_checkpoint(result.head, a.out);
  const fs::path report_path = a.report.empty() ? sibling(a.out, ".report.json") : a.report;
  write_json(to_json(result.report, a.record_timing), report_path);
  const auto& best = result.report.epochs.at(static_cast<std::size_t>(result.report.best_epoch - 1));
  std::cout << "best epoch " << result.report.best_epoch << ": dev " << to_string(result.report.selection) << " = "
            << best.dev_metric << '\n';
  std::cerr << "training took " << result.report.wall_clock_seconds << " s\n";
}

// --- predict / eval --------------------------------------------------------

struct PredictArgs {
  fs::path checkpoint, data, out;
  int samples = kDefaultSampleCount;
  std::uint64_t seed = 0;
};

void run_predict(const PredictArgs& a) {
  const PredictionTable table = predict_table(load_checkpoint(a.checkpoint), load_dataset(a.data), a.samples, a.seed);
  save_table(table, a.out);
  std::cout << "wrote " << table.size() << " predictions to " << a.out.string() << '\n';
}

struct EvalArgs {
  fs::path data, predictions, checkpoint, out;
  int samples = kDefaultSampleCount;
  std::optional<std::uint64_t> seed;
};

void run_eval(const EvalArgs& a) {
  if (a.predictions.empty() == a.checkpoint.empty()) {
    throw Error("give exactly one of --predictions or --checkpoint");
  }
  const EmbeddingDataset data = load_dataset(a.data);
  PredictionTable table;
  if (!a.predictions.empty()) {
    table = load_table(a.predictions);
  } else {
    if (!a.seed) throw Error("--seed is required when evaluating a checkpoint");
    table = predict_table(load_checkpoint(a.checkpoint), data, a.samples, *a.seed);
  }
  const nlohmann::json report = to_json(evaluate(table, data));
  if (a.out.empty()) {
    std::cout << report.dump(2) << '\n';
  } else {
    write_json(report, a.out);
  }
}

// --- fuse / ensemble / tune-fusion ----------------------------------------

std::vector<PredictionTable> load_tables(const std::vector<fs::path>& paths) {
  std::vector<PredictionTable> tables;
  for (const auto& p : paths) tables.push_back(load_table(p));
  return tables;
}

struct FuseArgs {
  std::vector<fs::path> tables;
  std::vector<double> weights;
  fs::path out, decisions;
};

void run_fuse(const FuseArgs& a) {
  if (a.tables.size() != a.weights.size()) throw Error("--weights needs one value per --tables entry");
  const auto tables = load_tables(a.tables);
  FusionSpec spec;
  for (std::size_t i = 0; i < tables.size(); ++i) spec.push_back({tables[i], a.weights[i]});
  const LateFusion fused = late_fuse(spec);
  save_table(fused.table, a.out);
  if (!a.decisions.empty()) {
    if (fused.predicted.empty()) throw Error("--decisions applies to probability tables only");
    std::ofstream out(a.decisions, std::ios::binary);
    out << "id,predicted\n";
    for (std::size_t i = 0; i < fused.predicted.size(); ++i) out << fused.table.ids[i] << ',' << fused.predicted[i] << '\n';
    if (!out) throw Error("failed writing " + a.decisions.string());
  }
  if (fused.table.size() == 1 && !fused.predicted.empty()) {
    std::cout << "predicted class " << fused.predicted.front() << '\n';
  } else {
    std::cout << "wrote " << fused.table.size() << " fused rows to " << a.out.string() << '\n';
  }
}

struct EnsembleArgs {
  std::string mode;
  std::vector<fs::path> tables;
  fs::path out;
};

void run_ensemble(const EnsembleArgs& a) {
  const auto tables = load_tables(a.tables);
  PredictionTable result;
  if (a.mode == "vote") {
    result = majority_vote(tables);
  } else if (a.mode == "average") {
    result = average_intensities(tables);
  } else {
    throw Error("unknown ensemble mode '" + a.mode + "' (expected vote or average)");
  }
  save_table(result, a.out);
  std::cout << "wrote " << result.size() << " ensembled rows to " << a.out.string() << '\n';
}

struct TuneArgs {
  std::vector<fs::path> tables;
  std::vector<double> grid;
  fs::path data, out;
};

void run_tune(const TuneArgs& a) {
  const auto tables = load_tables(a.tables);
  const FusionSearch best = tune_fusion_weights(tables, load_dataset(a.data), a.grid);
  const nlohmann::json j = {{"weights", best.weights}, {"uar", best.uar}, {"candidates", best.candidates}};
  if (a.out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json(j, a.out);
  }
}

// --- uncertainty -----------------------------------------------------------

struct UncertaintyArgs {
  fs::path checkpoint, data, out, curves, svg;
  int samples = kDefaultSampleCount;
  std::uint64_t seed = 0;
};

void run_uncertainty(const UncertaintyArgs& a) {
  const AnyHead head = load_checkpoint(a.checkpoint);
  const auto* bayes = std::get_if<GaussianVariationalHead>(&head);
  if (!bayes) throw Error("uncertainty analysis needs a bayes_linear checkpoint");
  const UncertaintyReport report = analyze(*bayes, load_dataset(a.data), a.samples, a.seed);
  write_json(to_json(report), a.out);
  if (!a.curves.empty()) write_curves_csv(report, a.curves);
  if (!a.svg.empty()) {
    std::ofstream svg(a.svg, std::ios::binary);
    svg << render_svg(report);
    if (!svg) throw Error("failed writing " + a.svg.string());
  }
  std::cout << "correct " << report.correct.size() << ", wrong " << report.wrong.size();
  if (report.separation) {
    std::cout << ", separation " << *report.separation << ", variance ratio " << *report.variance_ratio;
  } else {
    std::cout << " (single-sided)";
  }
  std::cout << '\n';
}

// --- merge-labels / concat -------------------------------------------------

struct PairArgs {
  fs::path a, b, out;
};

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Variational-Bayesian and deterministic linear heads over fixed embeddings", "vbhead"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  std::string section;
  const std::vector<std::string> hoisted = hoist_config(args, section);
  app.set_config("--config", "", "JSON file with default flag values for the chosen subcommand");
  app.config_formatter(std::make_shared<JsonConfig>(section));
  app.allow_config_extras(CLI::config_extras_mode::error);
  std::string unused_config;

  std::function<void()> action;

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a seeded synthetic train/dev dataset pair");
  add_config(*s, unused_config);
  s->add_option("--kind", synth.kind, "blobs or planted_regression")->capture_default_str();
  s->add_option("--n", synth.n, "Number of examples")->required();
  s->add_option("--d", synth.d, "Feature dimension")->required();
  s->add_option("--k", synth.k, "Classes (blobs) or intensity outputs (regression)")->capture_default_str();
  s->add_option("--separation", synth.separation, "Distance of each class centre from the origin (blobs)")
      ->capture_default_str();
  s->add_option("--noise", synth.noise, "Noise standard deviation")->capture_default_str();
  s->add_option("--dev-fraction", synth.dev_fraction, "Share of records held out as dev")->capture_default_str();
  add_seed(*s, synth.seed);
  s->add_option("--out", synth.out, "Output directory; receives train.csv and dev.csv")->required();
  s->callback([&] { action = [&] { run_synth(synth); }; });

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a linear or bayes head with minibatch SGD");
  add_config(*t, unused_config);
  t->add_option("--head", tr.head, "linear or bayes")->required();
  t->add_option("--train", tr.train, "Training dataset CSV")->required();
  t->add_option("--dev", tr.dev, "Dev dataset CSV used for model selection")->required();
  t->add_option("--train-b", tr.train_b, "Second-modality training set; enables early fusion");
  t->add_option("--dev-b", tr.dev_b, "Second-modality dev set");
  t->add_option("--out", tr.out, "Checkpoint JSON to write")->required();
  t->add_option("--report", tr.report, "Training report JSON (default: <out>.report.json)");
  add_seed(*t, tr.config.seed);
  t->add_option("--learning-rate,--lr", tr.config.learning_rate, "SGD step size")->capture_default_str();
  t->add_option("--momentum", tr.config.momentum, "Momentum in [0,1)")->capture_default_str();
  t->add_option("--epochs", tr.config.epochs, "Number of epochs")->capture_default_str();
  t->add_option("--batch-size", tr.config.batch_size, "Minibatch size; the last partial batch is kept")
      ->capture_default_str();
  t->add_option("--mc-samples", tr.config.mc_samples, "Weight draws per step (bayes)")->capture_default_str();
  t->add_option("--kl-weight", tr.kl_weight, "KL weight, or 'auto' = 1/(minibatches per epoch)")
      ->capture_default_str();
  t->add_option("--selection", tr.selection, "Dev metric for model selection: uar, spearman or loss "
                                             "(default: uar for classification, spearman for regression)");
  t->add_option("--prior-from", tr.prior_from, "dense_linear checkpoint whose weights define the prior (bayes)");
  t->add_option("--prior-mean", tr.prior_mean, "Explicit prior mean (bayes)");
  t->add_option("--prior-std", tr.prior_std, "Explicit prior std (bayes)");
  t->add_option("--sigma-init", tr.sigma_init, "Initial posterior std (bayes; default: prior std)");
  t->add_option("--eval-samples", tr.config.eval_samples, "Weight draws when scoring dev and the epoch objective")
      ->capture_default_str();
  t->add_flag("--record-timing", tr.record_timing, "Store wall-clock seconds in the report");
  t->callback([&] { action = [&] { run_train(tr); }; });

  PredictArgs pr;
  auto* p = app.add_subcommand("predict", "Write a prediction table for a dataset");
  add_config(*p, unused_config);
  p->add_option("--checkpoint", pr.checkpoint, "Checkpoint JSON")->required();
  p->add_option("--data", pr.data, "Dataset CSV")->required();
  p->add_option("--out", pr.out, "Prediction table CSV to write")->required();
  p->add_option("--samples", pr.samples, "Weight draws per example (bayes)")->capture_default_str();
  add_seed(*p, pr.seed);
  p->callback([&] { action = [&] { run_predict(pr); }; });

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Compute UAR/accuracy/NLL or Spearman/MSE");
  add_config(*e, unused_config);
  e->add_option("--data", ev.data, "Dataset CSV with true targets")->required();
  e->add_option("--predictions", ev.predictions, "Prediction table CSV");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint JSON (predicts on the fly)");
  e->add_option("--samples", ev.samples, "Weight draws per example (bayes checkpoints)")->capture_default_str();
  e->add_option("--seed", ev.seed, "Seed; required with --checkpoint");
  e->add_option("--out", ev.out, "Metric report JSON (default: stdout)");
  e->callback([&] { action = [&] { run_eval(ev); }; });

  FuseArgs fu;
  auto* f = app.add_subcommand("fuse", "Weighted late fusion of probability tables");
  add_config(*f, unused_config);
  f->add_option("--tables", fu.tables, "Prediction tables to fuse")->required();
  f->add_option("--weights", fu.weights, "One weight per table")->required();
  f->add_option("--out", fu.out, "Fused table CSV")->required();
  f->add_option("--decisions", fu.decisions, "Optional CSV of id,predicted");
  f->callback([&] { action = [&] { run_fuse(fu); }; });

  EnsembleArgs en;
  auto* n = app.add_subcommand("ensemble", "Majority vote (classification) or intensity averaging (regression)");
  add_config(*n, unused_config);
  n->add_option("--mode", en.mode, "vote or average")->required();
  n->add_option("--tables", en.tables, "Prediction tables")->required();
  n->add_option("--out", en.out, "Ensembled table CSV")->required();
  n->callback([&] { action = [&] { run_ensemble(en); }; });

  UncertaintyArgs un;
  auto* u = app.add_subcommand("uncertainty", "Confidence PDFs for correct vs wrong predictions of a bayes head");
  add_config(*u, unused_config);
  u->add_option("--checkpoint", un.checkpoint, "bayes_linear checkpoint")->required();
  u->add_option("--data", un.data, "Labelled dataset CSV")->required();
  u->add_option("--samples", un.samples, "Weight draws per example")->capture_default_str();
  add_seed(*u, un.seed);
  u->add_option("--out", un.out, "Report JSON")->required();
  u->add_option("--curves", un.curves, "Density curves CSV (set,x,density)");
  u->add_option("--svg", un.svg, "SVG rendering of both curves");
  u->callback([&] { action = [&] { run_uncertainty(un); }; });

  TuneArgs tu;
  auto* g = app.add_subcommand("tune-fusion", "Grid-search late-fusion weights by dev UAR");
  add_config(*g, unused_config);
  g->add_option("--tables", tu.tables, "Dev-set prediction tables")->required();
  g->add_option("--grid", tu.grid, "Candidate weight values tried for every table")->required();
  g->add_option("--data", tu.data, "Dev dataset CSV")->required();
  g->add_option("--out", tu.out, "Result JSON (default: stdout)");
  g->callback([&] { action = [&] { run_tune(tu); }; });

  PairArgs ml;
  auto* m = app.add_subcommand("merge-labels", "Merge binary requests/complaints labels into 4 classes");
  add_config(*m, unused_config);
  m->add_option("--requests", ml.a, "Binary dataset with classes {no, yes}")->required();
  m->add_option("--complaints", ml.b, "Binary dataset with classes {affil, presta}")->required();
  m->add_option("--out", ml.out, "Merged dataset CSV")->required();
  m->callback([&] {
    action = [&] {
      const EmbeddingDataset merged = merge_binary_labels(load_dataset(ml.a), load_dataset(ml.b));
      save_dataset(merged, ml.out);
      std::cout << "wrote " << merged.size() << " merged records to " << ml.out.string() << '\n';
    };
  });

  PairArgs cc;
  auto* c = app.add_subcommand("concat", "Concatenate the features of two aligned datasets");
  add_config(*c, unused_config);
  c->add_option("--a", cc.a, "First dataset; its features come first")->required();
  c->add_option("--b", cc.b, "Second dataset")->required();
  c->add_option("--out", cc.out, "Output dataset CSV")->required();
  c->callback([&] {
    action = [&] {
      const EmbeddingDataset joined = concat_features(load_dataset(cc.a), load_dataset(cc.b));
      save_dataset(joined, cc.out);
      std::cout << "wrote " << joined.size() << " records with " << joined.num_features << " features to "
                << cc.out.string() << '\n';
    };
  });

  try {
    std::vector<std::string> reversed(hoisted.rbegin(), hoisted.rend());
    app.parse(reversed);
  } catch (const CLI::ConfigError& err) {
    std::string what = err.what();
    const std::string ini = "INI was not able to parse ";
    if (what.rfind(ini, 0) == 0) what = "unknown config key '" + what.substr(ini.size()) + "'";
    std::cerr << "error: " << what << '\n';
    return 1;
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (action) action();
    return 0;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << '\n';
    return 2;
  }
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace vbhead
