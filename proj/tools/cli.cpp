// Copyright 2026 The hardpair Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hardpair/analysis.hpp"
#include "hardpair/embedstore.hpp"
#include "hardpair/error.hpp"
#include "hardpair/log.hpp"
#include "hardpair/miner.hpp"
#include "hardpair/report_io.hpp"
#include "hardpair/trainer.hpp"

namespace hardpair::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunRecord {
  std::string subcommand;
  std::vector<std::string> args;
  json config = json::object();
  json inputs = json::object();
  json outputs = json::object();
  std::uint64_t seed = 0;
};

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

void write_text(const fs::path& path, std::string_view text) { write_file_atomic(path, text); }

fs::path sibling(const fs::path& path, std::string_view suffix) {
  fs::path p = path;
  p += std::string(suffix);
  return p;
}

fs::path strip_ext(const fs::path& path) {
  fs::path p = path;
  return p.replace_extension();
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw Error(ErrorCode::invalid_config, "bad integer '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw Error(ErrorCode::invalid_config, "bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

// Every option of the subcommand with its parsed or default value.
json resolved_options(const CLI::App& sub) {
  json j = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help") continue;
    if (opt->count() > 0) {
      auto results = opt->results();
      j[name] = results.size() == 1 ? json(results.front()) : json(results);
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

void write_run_manifest(const RunRecord& rec, const fs::path& next_to, double wall_seconds) {
  json j;
  j["subcommand"] = rec.subcommand;
  j["args"] = rec.args;
  j["config"] = rec.config;
  j["inputs"] = rec.inputs;
  j["outputs"] = rec.outputs;
  j["seed"] = rec.seed;
  j["tool_version"] = kToolVersion;
  j["wall_seconds"] = wall_seconds;
  write_file_atomic(next_to, j.dump(2) + "\n");
}

PairDataset load_for_compute(const std::string& manifest, bool no_normalize) {
  return load_dataset(manifest, LoadOptions{.normalize = !no_normalize});
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  CLI::App app{"Hard pair mining, noise filtering and hard-negative training on embedding matrices",
               "hardpair"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", kToolVersion);

  RunRecord rec;
  rec.args = args;
  std::function<fs::path()> action;  // returns the path the run manifest sits next to

  // ---- synth ----
  SynthConfig synth_cfg;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a clustered synthetic dataset with planted mismatches");
  synth->add_option("--clusters", synth_cfg.num_clusters)->check(CLI::PositiveNumber);
  synth->add_option("--per-cluster", synth_cfg.per_cluster)->check(CLI::PositiveNumber);
  synth->add_option("--image-dim", synth_cfg.image_dim)->check(CLI::Range(2, 1 << 20));
  synth->add_option("--text-dim", synth_cfg.text_dim)->check(CLI::Range(2, 1 << 20));
  synth->add_option("--noise", synth_cfg.noise_scale)->check(CLI::NonNegativeNumber);
  synth->add_option("--mismatch", synth_cfg.mismatch_fraction)->check(CLI::Range(0.0, 1.0));
  synth->add_option("--seed", synth_cfg.seed);
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->callback([&] {
    action = [&] {
      auto result = synth_clusters(synth_cfg);
      fs::path dir = synth_out;
      save_dataset(result.dataset, dir);
      save_truth(result.truth, dir / "truth.json");
      rec.seed = synth_cfg.seed;
      rec.outputs = {{"manifest", (dir / "manifest.json").string()},
                     {"truth", (dir / "truth.json").string()}};
      log::write(log::Level::info, "synth_done",
                 {{"pairs", std::to_string(result.dataset.size())},
                  {"mismatched", std::to_string(result.truth.mismatch_count())}});
      return dir / "run.json";
    };
  });

  // ---- mine ----
  std::string mine_manifest, mine_out, mine_summary, mine_method = "auto";
  MiningConfig mine_cfg;
  std::optional<double> tau, tau_i, tau_t;
  std::optional<std::size_t> pool_size;
  bool mine_no_norm = false;
  auto* mine = app.add_subcommand("mine", "Mine hard pairs (hpm, fast, im, tm)");
  mine->add_option("--manifest", mine_manifest)->required();
  mine->add_option("--method", mine_method)->check(CLI::IsMember({"auto", "hpm", "fast", "im", "tm"}));
  mine->add_option("--k", mine_cfg.k)->check(CLI::PositiveNumber);
  mine->add_option("--tau", tau, "Threshold for both modalities (default 0.5)")->check(CLI::Range(0.0, 1.0));
  mine->add_option("--tau-i", tau_i)->check(CLI::Range(0.0, 1.0));
  mine->add_option("--tau-t", tau_t)->check(CLI::Range(0.0, 1.0));
  mine->add_option("--pool-size", pool_size, "FastHPM candidate pool size")->check(CLI::PositiveNumber);
  mine->add_option("--seed", mine_cfg.seed);
  mine->add_option("--workers", mine_cfg.workers)->check(CLI::NonNegativeNumber);
  mine->add_flag("--no-normalize", mine_no_norm);
  mine->add_option("--out", mine_out, "JSON-lines report")->required();
  mine->add_option("--summary", mine_summary, "Summary JSON (default <out>.summary.json)");
  mine->callback([&] {
    action = [&] {
      double base_tau = tau.value_or(0.5);
      mine_cfg.tau_image = tau_i.value_or(base_tau);
      mine_cfg.tau_text = tau_t.value_or(base_tau);
      mine_cfg.pool_size = pool_size;
      MiningMethod method = mine_method == "auto"
                                ? (pool_size ? MiningMethod::fast : MiningMethod::hpm)
                                : parse_mining_method(mine_method);
      auto dataset = load_for_compute(mine_manifest, mine_no_norm);
      auto report = hardpair::mine(dataset, method, mine_cfg);
      fs::path out_path = mine_out;
      fs::path summary = mine_summary.empty() ? sibling(out_path, ".summary.json") : fs::path(mine_summary);
      write_report(report, out_path);
      write_summary(report, summary);
      rec.seed = mine_cfg.seed;
      rec.config["method"] = std::string(to_string(method));
      rec.config["tau_image"] = mine_cfg.tau_image;
      rec.config["tau_text"] = mine_cfg.tau_text;
      rec.inputs = {{"manifest", mine_manifest}};
      rec.outputs = {{"report", out_path.string()}, {"summary", summary.string()}};
      log::write(log::Level::info, "mine_done",
                 {{"method", std::string(to_string(method))},
                  {"targets", std::to_string(report.summary.targets)},
                  {"noise", std::to_string(report.summary.noise_count)},
                  {"wall_seconds", format_double(report.summary.wall_seconds)}});
      return sibling(out_path, ".run.json");
    };
  });

  // ---- filter ----
  std::string filter_report, filter_truth, filter_out;
  auto* filter = app.add_subcommand("filter", "Split targets into clean and noise sets");
  filter->add_option("--report", filter_report)->required();
  filter->add_option("--truth", filter_truth, "Synthetic ground-truth sidecar");
  filter->add_option("--out", filter_out)->required();
  filter->callback([&] {
    action = [&] {
      auto report = read_report(filter_report);
      auto part = filter_noise(report);
      json j;
      j["clean"] = part.clean;
      j["noise"] = part.noise;
      j["clean_count"] = part.clean.size();
      j["noise_count"] = part.noise.size();
      rec.inputs = {{"report", filter_report}};
      if (!filter_truth.empty()) {
        auto truth = load_truth(filter_truth);
        auto q = score_detection(part, truth.mismatch);
        j["quality"] = {{"precision", q.precision},       {"recall", q.recall},
                        {"clean_flag_rate", q.clean_flag_rate}, {"planted", q.planted},
                        {"true_positives", q.true_positives},   {"clean_flagged", q.clean_flagged}};
        rec.inputs["truth"] = filter_truth;
        log::write(log::Level::info, "filter_quality",
                   {{"precision", format_double(q.precision)}, {"recall", format_double(q.recall)},
                    {"clean_flag_rate", format_double(q.clean_flag_rate)}});
      }
      write_text(filter_out, j.dump() + "\n");
      rec.outputs = {{"partition", filter_out}};
      return sibling(filter_out, ".run.json");
    };
  });

  // ---- compose ----
  std::string compose_report, compose_out;
  ComposerConfig compose_cfg;
  auto* compose = app.add_subcommand("compose", "Draw one hard-pair training batch");
  compose->add_option("--report", compose_report)->required();
  compose->add_option("--batch-size", compose_cfg.batch_size)->check(CLI::PositiveNumber);
  compose->add_option("--p", compose_cfg.hard_per_seed)->check(CLI::NonNegativeNumber);
  compose->add_option("--seed-fraction", compose_cfg.seed_fraction)->check(CLI::Range(0.0, 1.0));
  compose->add_option("--seed", compose_cfg.seed);
  compose->add_option("--out", compose_out)->required();
  compose->callback([&] {
    action = [&] {
      auto report = read_report(compose_report);
      std::mt19937_64 rng(compose_cfg.seed);
      auto plan = compose_batch(report.results.size(), &report, compose_cfg, rng);
      json j;
      j["base"] = plan.base;
      j["hard_draws"] = plan.hard_draws;
      j["composed"] = plan.composed;
      j["hard_mask"] = plan.hard_mask;
      write_text(compose_out, j.dump() + "\n");
      rec.seed = compose_cfg.seed;
      rec.inputs = {{"report", compose_report}};
      rec.outputs = {{"plan", compose_out}};
      return sibling(compose_out, ".run.json");
    };
  });

  // ---- train ----
  std::string train_manifest, train_report, train_init, train_out, train_trace;
  TrainConfig train_cfg;
  train_cfg.iterations = 300;
  std::size_t embed_dim = 16;
  std::uint64_t init_seed = 0;
  bool train_no_norm = false;
  auto* trainc = app.add_subcommand("train", "Continue training a toy linear encoder");
  trainc->add_option("--manifest", train_manifest)->required();
  trainc->add_option("--report", train_report, "Mining report (enables hard-pair batches)");
  trainc->add_option("--init", train_init, "Encoder checkpoint to start from");
  trainc->add_option("--dim", embed_dim, "Embedding width for a fresh encoder")->check(CLI::PositiveNumber);
  trainc->add_option("--init-seed", init_seed);
  trainc->add_option("--lr", train_cfg.learning_rate)->check(CLI::NonNegativeNumber);
  trainc->add_option("--iters", train_cfg.iterations)->check(CLI::PositiveNumber);
  trainc->add_option("--batch-size", train_cfg.composer.batch_size)->check(CLI::PositiveNumber);
  trainc->add_option("--p", train_cfg.composer.hard_per_seed)->check(CLI::NonNegativeNumber);
  trainc->add_option("--seed-fraction", train_cfg.composer.seed_fraction)->check(CLI::Range(0.0, 1.0));
  trainc->add_option("--gamma", train_cfg.loss.margin_weight)->check(CLI::NonNegativeNumber);
  trainc->add_option("--sigma", train_cfg.loss.temperature)->check(CLI::PositiveNumber);
  trainc->add_flag("--symmetric", train_cfg.loss.symmetric);
  trainc->add_option("--seed", train_cfg.seed);
  trainc->add_option("--patience", train_cfg.early_stop_patience, "Early-stop patience in evaluations (0 = off)");
  trainc->add_option("--eval-every", train_cfg.eval_every)->check(CLI::PositiveNumber);
  trainc->add_flag("--no-normalize", train_no_norm);
  trainc->add_option("--out", train_out, "Encoder checkpoint header (JSON)")->required();
  trainc->add_option("--trace", train_trace, "Loss trace CSV (default <out stem>.trace.csv)");
  trainc->callback([&] {
    action = [&] {
      auto dataset = load_for_compute(train_manifest, train_no_norm);
      std::optional<MiningReport> report;
      if (!train_report.empty()) report = read_report(train_report);
      if (!report && train_cfg.composer.hard_per_seed > 0) {
        log::write(log::Level::warn, "no_report", {{"detail", "no mining report; hard-pair draws disabled"}});
      }
      ToyEncoder init = train_init.empty()
                            ? random_encoder(dataset.image_dim(), dataset.text_dim(), embed_dim, init_seed)
                            : load_encoder(train_init);
      auto result = hardpair::train(dataset, report ? &*report : nullptr, train_cfg, init);
      fs::path out_path = train_out;
      fs::path trace = train_trace.empty() ? sibling(strip_ext(out_path), ".trace.csv") : fs::path(train_trace);
      save_encoder(result.encoder, out_path);
      write_text(trace, format_trace_csv(result.trace));
      rec.seed = train_cfg.seed;
      rec.inputs = {{"manifest", train_manifest}, {"report", train_report}, {"init", train_init}};
      rec.outputs = {{"encoder", out_path.string()}, {"trace", trace.string()}};
      log::write(log::Level::info, "train_done",
                 {{"iterations", std::to_string(result.trace.size())},
                  {"final_loss", format_double(result.trace.back())},
                  {"early_stopped", result.early_stopped ? "true" : "false"}});
      return sibling(out_path, ".run.json");
    };
  });

  // ---- eval ----
  std::string eval_manifest, eval_encoder, eval_ks = "1,5,10", eval_out;
  int eval_workers = 0;
  bool eval_no_norm = false;
  auto* evalc = app.add_subcommand("eval", "Image-to-text retrieval recall at k");
  evalc->add_option("--manifest", eval_manifest)->required();
  evalc->add_option("--encoder", eval_encoder, "Encoder checkpoint (default: raw embeddings)");
  evalc->add_option("--ks", eval_ks, "Comma-separated cutoffs");
  evalc->add_option("--workers", eval_workers)->check(CLI::NonNegativeNumber);
  evalc->add_flag("--no-normalize", eval_no_norm);
  evalc->add_option("--out", eval_out)->required();
  evalc->callback([&] {
    action = [&] {
      auto dataset = load_for_compute(eval_manifest, eval_no_norm);
      auto ks = parse_size_list(eval_ks);
      RecallTable table;
      if (eval_encoder.empty()) {
        if (dataset.image_dim() != dataset.text_dim()) {
          throw Error(ErrorCode::invalid_config, "raw evaluation needs equal image and text dims");
        }
        table = eval_retrieval(matrix_cast<double>(dataset.image), matrix_cast<double>(dataset.text), ks,
                               eval_workers);
      } else {
        table = eval_retrieval(load_encoder(eval_encoder), dataset, ks, eval_workers);
      }
      write_text(eval_out, format_recall_csv(table));
      rec.inputs = {{"manifest", eval_manifest}, {"encoder", eval_encoder}};
      rec.outputs = {{"recall", eval_out}};
      return sibling(eval_out, ".run.json");
    };
  });

  // ---- stats ----
  std::vector<std::string> stats_reports;
  std::string stats_out, stats_long;
  auto* stats = app.add_subcommand("stats", "Mean selection-criterion value per rank");
  stats->add_option("--report", stats_reports, "label=path, repeatable")->required();
  stats->add_option("--out", stats_out, "Wide CSV")->required();
  stats->add_option("--long", stats_long, "Long-format CSV (default <out stem>.long.csv)");
  stats->callback([&] {
    action = [&] {
      std::vector<MiningReport> reports;
      std::vector<std::string> labels;
      for (const auto& entry : stats_reports) {
        auto eq = entry.find('=');
        if (eq == std::string::npos || eq == 0) {
          throw Error(ErrorCode::invalid_config, "--report expects label=path, got '" + entry + "'");
        }
        labels.push_back(entry.substr(0, eq));
        reports.push_back(read_report(entry.substr(eq + 1)));
        rec.inputs[labels.back()] = entry.substr(eq + 1);
      }
      std::vector<LabeledReport> labeled;
      for (std::size_t t = 0; t < reports.size(); ++t) labeled.push_back({labels[t], &reports[t]});
      auto curves = criteria_curve(labeled);
      fs::path long_path = stats_long.empty() ? sibling(strip_ext(stats_out), ".long.csv") : fs::path(stats_long);
      write_text(stats_out, format_curves_wide_csv(curves));
      write_text(long_path, format_curves_long_csv(curves));
      rec.outputs = {{"curves", stats_out}, {"long", long_path.string()}};
      return sibling(stats_out, ".run.json");
    };
  });

  // ---- kendall ----
  std::string kendall_manifest, kendall_taus = "0.1,0.3,0.5", kendall_out;
  std::size_t kendall_k = 50;
  std::uint64_t kendall_seed = 0;
  std::optional<std::size_t> kendall_pool;
  int kendall_workers = 0;
  bool kendall_no_norm = false;
  auto* kendall = app.add_subcommand("kendall", "Kendall rank similarity of hard pairs across thresholds");
  kendall->add_option("--manifest", kendall_manifest)->required();
  kendall->add_option("--taus", kendall_taus, "Comma-separated threshold grid");
  kendall->add_option("--k", kendall_k)->check(CLI::PositiveNumber);
  kendall->add_option("--seed", kendall_seed);
  kendall->add_option("--pool-size", kendall_pool)->check(CLI::PositiveNumber);
  kendall->add_option("--workers", kendall_workers)->check(CLI::NonNegativeNumber);
  kendall->add_flag("--no-normalize", kendall_no_norm);
  kendall->add_option("--out", kendall_out)->required();
  kendall->callback([&] {
    action = [&] {
      auto dataset = load_for_compute(kendall_manifest, kendall_no_norm);
      auto m = tau_sensitivity(dataset, parse_double_list(kendall_taus), kendall_k, kendall_seed,
                               kendall_pool, kendall_workers);
      write_text(kendall_out, format_rank_similarity_csv(m));
      rec.seed = kendall_seed;
      rec.inputs = {{"manifest", kendall_manifest}};
      rec.outputs = {{"matrix", kendall_out}};
      return sibling(kendall_out, ".run.json");
    };
  });

  // ---- rerun ----
  std::string rerun_manifest, rerun_out;
  auto* rerun = app.add_subcommand("rerun", "Replay a run manifest");
  rerun->add_option("run", rerun_manifest, "Run manifest written by an earlier invocation")->required();
  rerun->add_option("--out", rerun_out, "Replace the recorded --out value");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error code=invalid_flag message=" << quote(e.what()) << "\n";
    return 2;
  }

  try {
    if (rerun->parsed()) {
      std::ifstream in(rerun_manifest);
      if (!in) throw Error(ErrorCode::io, "cannot open " + rerun_manifest);
      json j;
      try {
        in >> j;
      } catch (const json::exception& e) {
        throw Error(ErrorCode::format, "malformed run manifest: " + std::string(e.what()));
      }
      auto replay = j.at("args").get<std::vector<std::string>>();
      if (!rerun_out.empty()) {
        auto it = std::find(replay.begin(), replay.end(), "--out");
        if (it == replay.end() || it + 1 == replay.end()) {
          replay.push_back("--out");
          replay.push_back(rerun_out);
        } else {
          *(it + 1) = rerun_out;
        }
      }
      return run(replay, out, err);
    }

    const CLI::App* chosen = app.get_subcommands().front();
    rec.subcommand = chosen->get_name();
    json resolved = resolved_options(*chosen);
    fs::path manifest_path = action();
    for (auto& [key, value] : rec.config.items()) resolved[key] = value;
    rec.config = std::move(resolved);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_run_manifest(rec, manifest_path, wall);
    return 0;
  } catch (const Error& e) {
    err << "error code=" << to_string(e.code()) << " message=" << quote(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error code=internal message=" << quote(e.what()) << "\n";
    return 1;
  }
}

}  // namespace hardpair::cli
