// Copyright 2026 The tokplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// tokplan command-line interface.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 invariant violation.
// Relative paths are resolved against $TOKPLAN_DATA_DIR when it is set.

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "run_config.hpp"
#include "tokplan/io.hpp"
#include "tokplan/tokplan.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tokplan;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInvariant = 3;

fs::path resolve(const std::string& p) {
  fs::path path(p);
  if (path.is_absolute()) return path;
  if (const char* dir = std::getenv("TOKPLAN_DATA_DIR"); dir != nullptr && *dir != '\0') {
    return fs::path(dir) / path;
  }
  return path;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Split {
  std::vector<Scenario> train;
  std::vector<Scenario> validation;
};

Split split_suite(const std::vector<Scenario>& suite, double validation_fraction) {
  const auto n_val = static_cast<std::size_t>(
      std::llround(validation_fraction * static_cast<double>(suite.size())));
  if (n_val >= suite.size()) throw DataError("validation split leaves no training scenarios");
  Split s;
  s.train.assign(suite.begin(), suite.end() - static_cast<std::ptrdiff_t>(n_val));
  s.validation.assign(suite.end() - static_cast<std::ptrdiff_t>(n_val), suite.end());
  return s;
}

json aggregate_json(const EvalAggregate& a) {
  return {{"count", a.count},
          {"mean_total_reward", a.mean_total},
          {"mean_driving_reward", a.mean_driving},
          {"mean_pdms", a.mean_pdms},
          {"mean_reasoning_len", a.mean_reasoning},
          {"fast_fraction", a.fast_fraction}};
}

json summary_json(const EvalSummary& s) {
  return {{"all", aggregate_json(s.all)},
          {"simple", aggregate_json(s.simple)},
          {"complex", aggregate_json(s.complex)}};
}

void print_summary(const char* label, const EvalSummary& s) {
  std::printf("%s: reward %.4f pdms %.4f L %.2f | simple L %.2f | complex driving %.4f\n", label,
              s.all.mean_total, s.all.mean_pdms, s.all.mean_reasoning, s.simple.mean_reasoning,
              s.complex.mean_driving);
}

// ---------------------------------------------------------------------------

struct GenTrajectoriesArgs {
  std::uint64_t seed = 0;
  std::size_t n = 1000;
  std::string out;
  CorpusConfig corpus;
};

int cmd_gen_trajectories(const GenTrajectoriesArgs& a) {
  const auto corpus = generate_corpus(a.seed, a.n, a.corpus);
  std::vector<io::NamedTrajectory> named;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    named.push_back({"t" + std::to_string(i), corpus[i]});
  }
  io::write_trajectories(resolve(a.out), named);
  std::printf("wrote %zu trajectories\n", named.size());
  return 0;
}

struct BuildCodebookArgs {
  std::string trajectories;
  double delta_disk = kDefaultDiskRadius;
  std::size_t k_max = kDefaultCodebookSize;
  std::uint64_t seed = 0;
  std::string out;
  std::string source_tag;
};

int cmd_build_codebook(const BuildCodebookArgs& a) {
  const auto named = io::read_trajectories(resolve(a.trajectories));
  if (named.empty()) throw DataError(a.trajectories + " contains no trajectories");
  std::vector<Trajectory> trajs;
  for (const auto& t : named) trajs.push_back(t.traj);
  const auto segments = extract_segments(trajs);
  const auto res = kdisk_cluster(segments, a.delta_disk, a.k_max, a.seed, BoxSpec{},
                                 a.source_tag.empty() ? a.trajectories : a.source_tag);
  validate_codebook(res.codebook);
  io::write_codebook(resolve(a.out), res.codebook);
  std::printf("segments %zu\ntokens %zu\nmin_pairwise_distance %s\nunderfilled %s\n",
              segments.size(), res.codebook.size(),
              num(min_pairwise_distance(res.codebook)).c_str(),
              res.underfilled ? "true" : "false");
  return 0;
}

int cmd_tokenize(const std::string& in, const std::string& codebook, const std::string& out) {
  const Tokenizer tok(io::read_codebook(resolve(codebook)));
  std::vector<io::TokenRecord> recs;
  std::size_t oov = 0;
  for (const auto& t : io::read_trajectories(resolve(in))) {
    EncodeReport rep;
    try {
      rep = tok.encode_with_report(t.traj);
    } catch (const DataError& e) {
      throw DataError("trajectory " + t.id + ": " + e.what());
    }
    oov += rep.out_of_vicinity;
    recs.push_back({t.id, rep.ids, t.traj.poses.front()});
  }
  io::write_tokens(resolve(out), recs);
  std::printf("encoded %zu trajectories (%zu segments outside the token disks)\n", recs.size(),
              oov);
  return 0;
}

int cmd_detokenize(const std::string& in, const std::string& codebook, const std::string& out) {
  const Tokenizer tok(io::read_codebook(resolve(codebook)));
  std::vector<io::NamedTrajectory> trajs;
  for (const auto& r : io::read_tokens(resolve(in))) {
    try {
      trajs.push_back({r.id, tok.decode(r.ids, r.initial)});
    } catch (const DataError& e) {
      throw DataError("record " + r.id + ": " + e.what());
    }
  }
  io::write_trajectories(resolve(out), trajs);
  std::printf("decoded %zu token sequences\n", trajs.size());
  return 0;
}

int cmd_gen_scenarios(std::uint64_t seed, std::size_t n, double mix, const std::string& out,
                      const std::string& gt_out) {
  const auto suite = generate_suite(seed, n, mix);
  io::write_scenarios(resolve(out), suite);
  if (!gt_out.empty()) {
    std::vector<json> lines;
    for (const auto& sc : suite) {
      lines.push_back({{"id", sc.id}, {"poses", io::trajectory_json(sc.gt_traj)},
                       {"reasoning_len", 0}});
    }
    io::write_text(resolve(gt_out), io::to_lines(lines));
  }
  std::size_t n_complex = 0;
  for (const auto& sc : suite) n_complex += sc.complexity == Complexity::Complex ? 1 : 0;
  std::printf("wrote %zu scenarios (%zu complex)\n", suite.size(), n_complex);
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct Plan {
  std::optional<Trajectory> traj;
  std::size_t reasoning_len = 0;
};

std::map<std::string, Plan> read_plans(const fs::path& path) {
  std::map<std::string, Plan> plans;
  io::for_each_line(path, [&](const json& j, std::size_t) {
    Plan p;
    const auto id = j.at("id").get<std::string>();
    if (j.contains("poses") && !j.at("poses").is_null()) p.traj = io::trajectory_from(j.at("poses"));
    p.reasoning_len = j.value("reasoning_len", std::size_t{0});
    if (!plans.emplace(id, std::move(p)).second) throw DataError("duplicate plan id " + id);
  });
  return plans;
}

int cmd_eval(const std::string& plans_path, const std::string& scenarios_path,
             const std::string& mode_name, const std::string& out) {
  const RewardMode mode = parse_reward_mode(mode_name);
  const RewardConfig rcfg = RewardConfig::toy();
  const auto plans = read_plans(resolve(plans_path));
  const auto suite = io::read_scenarios(resolve(scenarios_path));

  json rows = json::array();
  struct Acc {
    std::size_t n = 0, collisions = 0, failed = 0;
    double pdms = 0, total = 0, ade = 0, rfs = 0, reasoning = 0;
    std::array<double, 3> l2{};
    std::size_t scored = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& sc : suite) {
    const auto it = plans.find(sc.id);
    if (it == plans.end()) continue;
    const Plan& plan = it->second;
    const RewardBreakdown b = total_reward(plan.traj, sc, plan.reasoning_len, mode, rcfg);
    json row = {{"id", sc.id},
                {"complexity", std::string(to_string(sc.complexity))},
                {"failed", b.failed},
                {"nc", b.nc},
                {"dac", b.dac},
                {"ttc", b.ttc},
                {"comfort", b.comfort},
                {"ep", b.ep},
                {"pdms", b.pdms},
                {"r_driving", b.r_driving},
                {"r_cot", b.r_cot},
                {"r_total", b.r_total},
                {"reasoning_len", plan.reasoning_len}};
    for (const char* key : {"all", sc.complexity == Complexity::Simple ? "simple" : "complex"}) {
      Acc& a = acc[key];
      ++a.n;
      a.pdms += b.pdms;
      a.total += b.r_total;
      a.reasoning += static_cast<double>(plan.reasoning_len);
      a.failed += b.failed ? 1 : 0;
    }
    if (!b.failed) {
      const auto l2 = l2_at(*plan.traj, sc.gt_traj);
      const double r = rfs(*plan.traj, sc);
      const bool collided = b.nc == 0.0;
      row["ade"] = b.ade;
      row["l2"] = {l2[0], l2[1], l2[2]};
      row["rfs"] = r;
      row["collision"] = collided;
      for (const char* key : {"all", sc.complexity == Complexity::Simple ? "simple" : "complex"}) {
        Acc& a = acc[key];
        ++a.scored;
        a.collisions += collided ? 1 : 0;
        a.ade += b.ade;
        a.rfs += r;
        for (std::size_t h = 0; h < 3; ++h) a.l2[h] += l2[h];
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("no plan ids match the scenario file");
  if (rows.size() != plans.size()) {
    throw DataError(std::to_string(plans.size() - rows.size()) +
                    " plan(s) reference unknown scenario ids");
  }

  json aggregates = json::object();
  for (const auto& [key, a] : acc) {
    const double n = static_cast<double>(a.n);
    const double m = a.scored ? static_cast<double>(a.scored) : 1.0;
    aggregates[key] = {{"count", a.n},
                       {"failed", a.failed},
                       {"mean_pdms", a.pdms / n},
                       {"mean_total_reward", a.total / n},
                       {"mean_reasoning_len", a.reasoning / n},
                       {"collision_rate", static_cast<double>(a.collisions) / m},
                       {"mean_ade", a.ade / m},
                       {"mean_l2", {a.l2[0] / m, a.l2[1] / m, a.l2[2] / m}},
                       {"mean_rfs", a.rfs / m}};
  }
  const json report = {{"reward_mode", std::string(to_string(mode))},
                       {"aggregates", aggregates},
                       {"rows", rows}};
  if (!out.empty()) io::write_json(resolve(out), report);
  const auto& all = aggregates.at("all");
  std::printf("plans %zu\nmean_pdms %s\ncollision_rate %s\nmean_ade %s\nmean_rfs %s\n",
              rows.size(), num(all.at("mean_pdms").get<double>()).c_str(),
              num(all.at("collision_rate").get<double>()).c_str(),
              num(all.at("mean_ade").get<double>()).c_str(),
              num(all.at("mean_rfs").get<double>()).c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// sft / rft / plan

void write_plans(const fs::path& path, const PolicyParams& params,
                 const std::vector<Scenario>& suite, const Tokenizer& tok, std::uint64_t seed,
                 const SamplerConfig& sampler, std::size_t threads) {
  const auto rows = evaluate_rows(params, suite, tok, sampler, 1, seed, RewardMode::Pdms,
                                  RewardConfig::toy(), threads);
  std::vector<json> lines;
  for (const auto& r : rows) {
    const Episode& ep = r.episode;
    json line = {{"id", suite[r.scenario].id},
                 {"reasoning_len", ep.reasoning_len},
                 {"tokens", ep.tokens}};
    line["poses"] = ep.plan ? io::trajectory_json(*ep.plan) : json(nullptr);
    lines.push_back(std::move(line));
  }
  io::write_text(path, io::to_lines(lines));
}

int cmd_sft(const std::string& config_path, std::size_t threads) {
  const auto cfg = cli::sft_config_from(io::read_json(resolve(config_path)));
  const auto suite = io::read_scenarios(resolve(cfg.scenarios));
  const auto split = split_suite(suite, cfg.validation_fraction);

  Codebook codebook;
  if (cfg.codebook) {
    codebook = io::read_codebook(resolve(*cfg.codebook));
  } else {
    std::vector<Trajectory> gts;
    for (const auto& sc : split.train) gts.push_back(sc.gt_traj);
    codebook = kdisk_cluster(extract_segments(gts), cfg.delta_disk, cfg.k_max,
                             mix_seed(cfg.seed, 11), BoxSpec{}, "training split ground truth")
                   .codebook;
  }
  validate_codebook(codebook);
  const Tokenizer tok(codebook);
  PolicyShape shape;
  shape.num_actions = codebook.size();
  shape.num_reasoning = cfg.num_reasoning;
  shape.max_reasoning = cfg.max_reasoning;

  const auto train = build_sft_dataset(split.train, tok, shape, cfg.dataset, mix_seed(cfg.seed, 12));
  const auto val =
      build_sft_dataset(split.validation, tok, shape, cfg.dataset, mix_seed(cfg.seed, 13));
  PolicyParams init;
  init.shape = shape;
  const auto res = sft_train(init, train, cfg.sft, mix_seed(cfg.seed, 14), val);
  if (!res.params.all_finite()) throw InvariantError("SFT produced non-finite parameters");

  const fs::path dir = resolve(cfg.out);
  fs::create_directories(dir);
  io::write_json(dir / "config.json", cli::to_json(cfg));
  io::write_codebook(dir / "codebook.json", codebook);
  io::write_checkpoint(dir / "checkpoint.json", res.params);
  std::string curve = "epoch\ttrain_loss\tval_loss\n";
  for (std::size_t e = 0; e < res.epoch_loss.size(); ++e) {
    curve += std::to_string(e + 1) + "\t" + num(res.epoch_loss[e]) + "\t" +
             (e < res.val_loss.size() ? num(res.val_loss[e]) : std::string("nan")) + "\n";
  }
  io::write_text(dir / "sft_curve.tsv", curve);
  const auto eval = evaluate_policy(res.params, suite, tok, SamplerConfig::exploration(),
                                    cfg.eval_samples, mix_seed(cfg.seed, 15), cfg.reward_mode,
                                    cfg.reward, threads);
  io::write_json(dir / "summary.json",
                 {{"tokens", codebook.size()},
                  {"train_examples", train.size()},
                  {"validation_examples", val.size()},
                  {"steps", res.steps},
                  {"final_train_loss", res.epoch_loss.back()},
                  {"final_val_loss", res.val_loss.empty() ? 0.0 : res.val_loss.back()},
                  {"eval", summary_json(eval)}});
  std::printf("tokens %zu, %zu examples, %zu steps\nloss %s -> %s\n", codebook.size(),
              train.size(), res.steps, num(res.epoch_loss.front()).c_str(),
              num(res.epoch_loss.back()).c_str());
  print_summary("sft", eval);
  return 0;
}

int cmd_rft(const std::string& config_path, std::size_t threads) {
  auto cfg = cli::rft_config_from(io::read_json(resolve(config_path)));
  cfg.grpo.threads = threads;
  const fs::path sft_dir = resolve(cfg.sft_run);
  if (!fs::exists(sft_dir / "checkpoint.json")) {
    throw DataError("rft needs an SFT checkpoint as its reference policy; none found in " +
                    sft_dir.string());
  }
  const auto sft_cfg = cli::sft_config_from(io::read_json(sft_dir / "config.json"));
  const PolicyParams sft_params = io::read_checkpoint(sft_dir / "checkpoint.json");
  const Tokenizer tok(io::read_codebook(sft_dir / "codebook.json"));
  const auto suite = io::read_scenarios(resolve(cfg.scenarios.value_or(sft_cfg.scenarios)));
  const auto split = split_suite(suite, cfg.validation_fraction);

  const auto res = rft_train(sft_params, split.train, split.validation, tok, cfg.grpo,
                             mix_seed(cfg.seed, 21));
  if (!res.final_params.all_finite()) throw InvariantError("RFT produced non-finite parameters");

  const fs::path dir = resolve(cfg.out);
  fs::create_directories(dir / "checkpoints");
  io::write_json(dir / "config.json", cli::to_json(cfg));
  io::write_checkpoint(dir / "checkpoints" / "final.json", res.final_params);
  io::write_checkpoint(dir / "checkpoints" / "best.json", res.best_params);
  std::string curve =
      "step\tscenario\tcomplexity\tmean_reward\tmean_driving\tmean_pdms\tmean_reasoning_len\tkl\t"
      "loss\tsmoothed_reward\n";
  for (const auto& p : res.curve) {
    curve += std::to_string(p.step) + "\t" + split.train[p.scenario].id + "\t" +
             std::string(to_string(p.complexity)) + "\t" + num(p.mean_reward) + "\t" +
             num(p.mean_driving) + "\t" + num(p.mean_pdms) + "\t" + num(p.mean_reasoning) + "\t" +
             num(p.kl) + "\t" + num(p.loss) + "\t" + num(p.smoothed_reward) + "\n";
  }
  io::write_text(dir / "curves.tsv", curve);
  std::string val = "step\tmean_total_reward\n";
  for (const auto& v : res.validation) val += std::to_string(v.step) + "\t" + num(v.mean_total) + "\n";
  io::write_text(dir / "validation.tsv", val);

  const std::uint64_t eval_seed = mix_seed(cfg.seed, 22);
  const auto before = evaluate_policy(sft_params, suite, tok, SamplerConfig::exploration(),
                                      cfg.eval_samples, eval_seed, cfg.grpo.reward_mode,
                                      cfg.grpo.reward, threads);
  const auto after = evaluate_policy(res.best_params, suite, tok, SamplerConfig::exploration(),
                                     cfg.eval_samples, eval_seed, cfg.grpo.reward_mode,
                                     cfg.grpo.reward, threads);
  io::write_json(dir / "summary.json", {{"best_step", res.best_step},
                                        {"best_validation_reward", res.best_validation},
                                        {"final_smoothed_reward", res.final_smoothed_reward()},
                                        {"before", summary_json(before)},
                                        {"after", summary_json(after)}});
  write_plans(dir / "plans.jsonl", res.best_params, suite, tok, mix_seed(cfg.seed, 23),
              SamplerConfig::inference(), threads);
  std::printf("steps %zu, best checkpoint at step %zu\nsmoothed reward %s -> %s\n",
              res.curve.size(), res.best_step,
              num(res.curve.empty()
                      ? 0.0
                      : res.curve[std::min(cfg.grpo.smoothing_window, res.curve.size()) - 1]
                            .smoothed_reward)
                  .c_str(),
              num(res.final_smoothed_reward()).c_str());
  print_summary("before", before);
  print_summary("after", after);
  return 0;
}

int cmd_plan(const std::string& checkpoint, const std::string& codebook,
             const std::string& scenarios, std::uint64_t seed, const SamplerConfig& sampler,
             const std::string& out, std::size_t threads) {
  const PolicyParams params = io::read_checkpoint(resolve(checkpoint));
  const Tokenizer tok(io::read_codebook(resolve(codebook)));
  if (params.shape.num_actions != tok.vocabulary_size()) {
    throw DataError("checkpoint and codebook disagree on the number of action tokens");
  }
  const auto suite = io::read_scenarios(resolve(scenarios));
  write_plans(resolve(out), params, suite, tok, seed, sampler, threads);
  std::printf("wrote %zu plans\n", suite.size());
  return 0;
}

// ---------------------------------------------------------------------------
// report

std::vector<std::map<std::string, std::string>> read_tsv(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("missing curves file " + path.string());
  std::istringstream in(io::read_text(path));
  std::string line;
  std::vector<std::string> header;
  std::vector<std::map<std::string, std::string>> rows;
  const auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, '\t')) out.push_back(cell);
    return out;
  };
  if (!std::getline(in, line)) throw DataError(path.string() + " is empty");
  header = split(line);
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw DataError(path.string() + ":" + std::to_string(n) + ": wrong number of columns");
    }
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < cells.size(); ++i) row[header[i]] = cells[i];
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path.string() + " has no data rows");
  return rows;
}

double cell(const std::map<std::string, std::string>& row, const std::string& key) {
  const auto it = row.find(key);
  if (it == row.end()) throw DataError("curves file lacks column " + key);
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw DataError("bad number '" + it->second + "' in column " + key);
  }
}

int cmd_report(const std::string& run, const std::string& out_dir, std::size_t window) {
  const fs::path dir = resolve(run);
  const auto rows = read_tsv(dir / "curves.tsv");
  const fs::path out = out_dir.empty() ? dir / "report" : resolve(out_dir);
  fs::create_directories(out);

  std::vector<double> reward, reasoning, pdms;
  for (const auto& r : rows) {
    reward.push_back(cell(r, "mean_reward"));
    reasoning.push_back(cell(r, "mean_reasoning_len"));
    pdms.push_back(cell(r, "mean_pdms"));
  }
  const auto sm_reward = smooth(reward, window);
  const auto sm_reasoning = smooth(reasoning, window);
  std::string rcsv = "step,mean_reward,smoothed_reward\n";
  std::string lcsv = "step,complexity,mean_reasoning_len,smoothed_reasoning_len\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string step = rows[i].at("step");
    rcsv += step + "," + num(reward[i]) + "," + num(sm_reward[i]) + "\n";
    lcsv += step + "," + rows[i].at("complexity") + "," + num(reasoning[i]) + "," +
            num(sm_reasoning[i]) + "\n";
  }
  io::write_text(out / "reward_vs_step.csv", rcsv);
  io::write_text(out / "cot_length_vs_step.csv", lcsv);

  // Before/after from the first and last smoothing windows of the curves.
  const std::size_t w = std::min(window, rows.size());
  const auto window_mean = [&](const std::vector<double>& xs, std::size_t from) {
    double s = 0.0;
    for (std::size_t i = from; i < from + w; ++i) s += xs[i];
    return s / static_cast<double>(w);
  };
  const std::size_t last = rows.size() - w;
  std::string table = "metric\tbefore\tafter\tdelta\n";
  const auto add = [&](const std::string& name, double before, double after) {
    table += name + "\t" + num(before) + "\t" + num(after) + "\t" + num(after - before) + "\n";
  };
  add("curve_mean_reward", window_mean(reward, 0), window_mean(reward, last));
  add("curve_mean_pdms", window_mean(pdms, 0), window_mean(pdms, last));
  add("curve_mean_reasoning_len", window_mean(reasoning, 0), window_mean(reasoning, last));
  if (fs::exists(dir / "summary.json")) {
    const json s = io::read_json(dir / "summary.json");
    for (const char* group : {"all", "simple", "complex"}) {
      const auto& b = s.at("before").at(group);
      const auto& a = s.at("after").at(group);
      for (const char* key : {"mean_pdms", "mean_reasoning_len", "mean_total_reward"}) {
        add(std::string("eval_") + group + "_" + key, b.at(key).get<double>(),
            a.at(key).get<double>());
      }
    }
  }
  io::write_text(out / "summary.tsv", table);
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Action-token planning toolkit: codebooks, tokenization, scoring and training"};
  app.require_subcommand(1);
  std::size_t threads = 1;
  app.add_option("--threads", threads, "Worker threads for sampling and evaluation")
      ->check(CLI::PositiveNumber);

  GenTrajectoriesArgs gt;
  auto* gen_traj = app.add_subcommand("gen-trajectories", "Generate a smooth trajectory corpus");
  gen_traj->add_option("--seed", gt.seed)->required();
  gen_traj->add_option("--n", gt.n)->check(CLI::PositiveNumber);
  gen_traj->add_option("--max-speed", gt.corpus.max_speed);
  gen_traj->add_option("--max-yaw-rate", gt.corpus.max_yaw_rate);
  gen_traj->add_option("--out", gt.out)->required();

  BuildCodebookArgs bc;
  auto* build = app.add_subcommand("build-codebook", "Cluster trajectory segments into a codebook");
  build->add_option("--trajectories", bc.trajectories)->required();
  build->add_option("--delta-disk", bc.delta_disk);
  build->add_option("--k-max", bc.k_max);
  build->add_option("--seed", bc.seed)->required();
  build->add_option("--source-tag", bc.source_tag);
  build->add_option("--out", bc.out)->required();

  std::string tok_in, tok_codebook, tok_out;
  auto* tokenize = app.add_subcommand("tokenize", "Encode trajectories as token ids");
  tokenize->add_option("--trajectories", tok_in)->required();
  tokenize->add_option("--codebook", tok_codebook)->required();
  tokenize->add_option("--out", tok_out)->required();

  std::string detok_in, detok_codebook, detok_out;
  auto* detokenize = app.add_subcommand("detokenize", "Decode token ids into trajectories");
  detokenize->add_option("--tokens", detok_in)->required();
  detokenize->add_option("--codebook", detok_codebook)->required();
  detokenize->add_option("--out", detok_out)->required();

  std::uint64_t gs_seed = 0;
  std::size_t gs_n = 200;
  double gs_mix = 0.5;
  std::string gs_out, gs_gt_out;
  auto* gen_sc = app.add_subcommand("gen-scenarios", "Generate a scenario suite");
  gen_sc->add_option("--seed", gs_seed)->required();
  gen_sc->add_option("--n", gs_n)->check(CLI::PositiveNumber);
  gen_sc->add_option("--mix", gs_mix, "Fraction of Complex scenarios")->check(CLI::Range(0.0, 1.0));
  gen_sc->add_option("--out", gs_out)->required();
  gen_sc->add_option("--gt-out", gs_gt_out, "Also write ground-truth plans");

  std::string ev_plans, ev_scenarios, ev_mode = "pdms", ev_out;
  auto* eval = app.add_subcommand("eval", "Score plans against scenarios");
  eval->add_option("--plans", ev_plans)->required();
  eval->add_option("--scenarios", ev_scenarios)->required();
  eval->add_option("--reward-mode", ev_mode)->check(CLI::IsMember({"pdms", "ade"}));
  eval->add_option("--out", ev_out, "Report file (JSON)");

  std::string sft_config;
  auto* sft = app.add_subcommand("sft", "Supervised fine-tuning run");
  sft->add_option("--config", sft_config)->required();

  std::string rft_config;
  auto* rft = app.add_subcommand("rft", "Reinforcement fine-tuning run from an SFT run");
  rft->add_option("--config", rft_config)->required();

  std::string pl_ckpt, pl_codebook, pl_scenarios, pl_out;
  std::uint64_t pl_seed = 0;
  SamplerConfig pl_sampler = SamplerConfig::inference();
  auto* plan = app.add_subcommand("plan", "Sample plans from a policy checkpoint");
  plan->add_option("--checkpoint", pl_ckpt)->required();
  plan->add_option("--codebook", pl_codebook)->required();
  plan->add_option("--scenarios", pl_scenarios)->required();
  plan->add_option("--seed", pl_seed)->required();
  plan->add_option("--temperature", pl_sampler.temperature)->check(CLI::NonNegativeNumber);
  plan->add_option("--top-k", pl_sampler.top_k);
  plan->add_option("--top-p", pl_sampler.top_p)->check(CLI::Range(0.0, 1.0));
  plan->add_option("--out", pl_out)->required();

  std::string rp_run, rp_out;
  std::size_t rp_window = 100;
  auto* report = app.add_subcommand("report", "Export curves and a before/after summary");
  report->add_option("--run", rp_run)->required();
  report->add_option("--out", rp_out);
  report->add_option("--window", rp_window)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen_traj) return cmd_gen_trajectories(gt);
    if (*build) return cmd_build_codebook(bc);
    if (*tokenize) return cmd_tokenize(tok_in, tok_codebook, tok_out);
    if (*detokenize) return cmd_detokenize(detok_in, detok_codebook, detok_out);
    if (*gen_sc) return cmd_gen_scenarios(gs_seed, gs_n, gs_mix, gs_out, gs_gt_out);
    if (*eval) return cmd_eval(ev_plans, ev_scenarios, ev_mode, ev_out);
    if (*sft) return cmd_sft(sft_config, threads);
    if (*rft) return cmd_rft(rft_config, threads);
    if (*plan) return cmd_plan(pl_ckpt, pl_codebook, pl_scenarios, pl_seed, pl_sampler, pl_out,
                               threads);
    if (*report) return cmd_report(rp_run, rp_out, rp_window);
  } catch (const InvariantError& e) {
    std::fprintf(stderr, "invariant violation: %s\n", e.what());
    return kExitInvariant;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
