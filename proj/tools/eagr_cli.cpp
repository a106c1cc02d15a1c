// Copyright 2026 The EAGR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// eagr: command-line harness for dataset synthesis, training, evaluation,
// gradient checking, flop benchmarking and response-map export.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "eagr/eagr.hpp"

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kCheckFailed = 2, kIoOrParse = 3 };

eagr::Grid grid_arg(const std::string& v, const char* flag) {
  try {
    return eagr::parse_grid(v);
  } catch (const std::exception& e) {
    throw CLI::ValidationError(flag, "expected RxC, got \"" + v + "\"");
  }
}

eagr::NetConfig config_or_default(const std::string& path) {
  return path.empty() ? eagr::NetConfig{} : eagr::load_config(path);
}

int cmd_synth(const std::string& out, std::size_t count, std::uint64_t seed, const std::string& size) {
  eagr::SynthConfig cfg;
  const auto g = grid_arg(size, "--size");
  cfg.height = g.rows;
  cfg.width = g.cols;
  cfg.seed = seed;
  eagr::write_dataset(out, cfg, count);
  std::cout << "wrote " << count << " samples to " << out << "\n";
  return kOk;
}

int cmd_train(const std::string& data, const std::string& config, const std::string& out, const std::string& ablate,
              const std::string& eval_data, std::string log_path) {
  eagr::NetConfig cfg = eagr::load_config(config);
  if (!ablate.empty()) cfg.ablation = eagr::parse_ablation(ablate);
  auto samples = eagr::load_dataset(data);
  std::vector<eagr::Sample> eval;
  if (!eval_data.empty()) eval = eagr::load_dataset(eval_data);
  auto res = eagr::train(cfg, samples, eval_data.empty() ? nullptr : &eval, [](const eagr::StepRecord& r) {
    std::printf("step %zu  L_parsing %.6f  L_edge %.6f  L_BA %.6f  L_total %.6f\n", r.step, r.parsing, r.edge, r.ba,
                r.total);
  });
  eagr::to_checkpoint(res.params, cfg).save(out);
  if (log_path.empty()) log_path = out + ".log";
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw eagr::IoError("cannot write " + log_path);
  log << res.log.format();
  std::printf("initial_loss %.6f  final_loss %.6f  ablation %s\ncheckpoint %s\n", res.log.initial_loss,
              res.log.final_loss, eagr::ablation_name(cfg.ablation), out.c_str());
  return kOk;
}

int cmd_eval(const std::string& data, const std::string& ckpt, const std::string& config, const std::string& format) {
  eagr::NetConfig cfg = config_or_default(config);
  auto params = eagr::params_from_checkpoint(eagr::Checkpoint::load(ckpt), cfg);
  auto samples = eagr::load_dataset(data);
  auto cm = eagr::evaluate(params, cfg, samples);
  auto sc = eagr::scores(cm);
  auto merged = eagr::merged_f1(cm, eagr::face_part_merge());
  std::map<std::string, double> kv{{"pixel_acc", sc.pixel_acc},
                                   {"miou", sc.miou},
                                   {"mean_f1_excl_bg", sc.mean_f1_excl_bg},
                                   {"merged_overall_f1", merged.micro},
                                   {"merged_overall_f1_macro", merged.macro}};
  const auto& names = eagr::face_class_names();
  for (std::size_t c = 0; c < sc.per_class_f1.size(); ++c) {
    const std::string label = c < names.size() ? names[c] : std::to_string(c);
    kv["f1." + label] = sc.per_class_f1[c];
    kv["iou." + label] = sc.per_class_iou[c];
  }
  if (format == "json") {
    nlohmann::json j(kv);
    j["samples"] = samples.size();
    std::cout << j.dump() << "\n";
  } else {
    std::cout << "samples=" << samples.size() << "\n";
    std::cout.precision(6);
    std::cout << std::fixed;
    for (const auto& [k, v] : kv) std::cout << k << "=" << v << "\n";
  }
  return kOk;
}

int cmd_gradcheck(std::uint64_t seed, std::size_t seeds) {
  std::map<std::string, eagr::GradCheckResult> worst;
  std::vector<std::string> order;
  for (std::uint64_t s = seed; s < seed + seeds; ++s)
    for (auto& r : eagr::run_gradcheck_suite(s)) {
      auto [it, fresh] = worst.try_emplace(r.name, r);
      if (fresh) {
        order.push_back(r.name);
        continue;
      }
      if (!(r.worst_rel_err <= it->second.worst_rel_err)) it->second.worst_rel_err = r.worst_rel_err;
      it->second.entries += r.entries;
    }
  bool ok = true;
  std::printf("%-24s %14s %10s  %s\n", "check", "worst_rel_err", "tolerance", "result");
  for (const auto& name : order) {
    const auto& r = worst.at(name);
    ok = ok && r.pass();
    std::printf("%-24s %14.3e %10.0e  %s\n", name.c_str(), r.worst_rel_err, r.tolerance, r.pass() ? "PASS" : "FAIL");
  }
  std::printf("seeds %llu..%llu: %s\n", static_cast<unsigned long long>(seed),
              static_cast<unsigned long long>(seed + seeds - 1), ok ? "all checks passed" : "FAILURES");
  return ok ? kOk : kCheckFailed;
}

int cmd_bench(const std::string& size, std::size_t channels, std::size_t t, std::size_t k, const std::string& grid,
              const std::string& sel, std::size_t runs, std::uint64_t seed) {
  eagr::BenchOptions opt;
  const auto hw = grid_arg(size, "--size");
  opt.height = hw.rows;
  opt.width = hw.cols;
  opt.channels = channels;
  opt.eagr.t_dim = t;
  opt.eagr.k_dim = k ? k : 2 * t;
  opt.eagr.pool_grid = grid_arg(grid, "--grid");
  opt.eagr.central_sel = grid_arg(sel, "--sel");
  opt.runs = std::max<std::size_t>(runs, 5);
  opt.seed = seed;
  auto rep = eagr::run_bench(opt);
  std::printf("input %zux%zu  C=%zu  T=%zu  K=%zu  grid %s  sel %s  Nv=%zu\n", opt.height, opt.width, channels, t,
              opt.eagr.k_dim, eagr::grid_str(opt.eagr.pool_grid).c_str(), eagr::grid_str(opt.eagr.central_sel).c_str(),
              opt.eagr.vertices());
  std::printf("%-10s %16s %16s %16s %16s %12s\n", "module", "macs_total", "macs_analytic", "attention_macs",
              "attention_analytic", "median_ms");
  std::printf("%-10s %16llu %16llu %16llu %16llu %12.3f\n", "nonlocal",
              static_cast<unsigned long long>(rep.nonlocal_measured.total),
              static_cast<unsigned long long>(rep.nonlocal_analytic.total),
              static_cast<unsigned long long>(rep.nonlocal_measured.attention),
              static_cast<unsigned long long>(rep.nonlocal_analytic.attention), rep.nonlocal_median_ms);
  std::printf("%-10s %16llu %16llu %16llu %16llu %12.3f\n", "eagr", static_cast<unsigned long long>(rep.eagr_measured.total),
              static_cast<unsigned long long>(rep.eagr_analytic.total),
              static_cast<unsigned long long>(rep.eagr_measured.attention),
              static_cast<unsigned long long>(rep.eagr_analytic.attention), rep.eagr_median_ms);
  std::printf("attention_mac_ratio=%llu/%llu (%.6g)  analytic HW/Nv=%llu/%llu (%.6g)\n",
              static_cast<unsigned long long>(rep.attention_ratio.num),
              static_cast<unsigned long long>(rep.attention_ratio.den), rep.attention_ratio.value(),
              static_cast<unsigned long long>(rep.attention_ratio_analytic.num),
              static_cast<unsigned long long>(rep.attention_ratio_analytic.den), rep.attention_ratio_analytic.value());
  std::printf("total_mac_ratio=%.6g  wall_clock_ratio=%.3g  (runs=%zu, medians)\n",
              static_cast<double>(rep.nonlocal_measured.total) / static_cast<double>(rep.eagr_measured.total),
              rep.nonlocal_median_ms / std::max(rep.eagr_median_ms, 1e-9), opt.runs);
  return kOk;
}

int cmd_respmap(const std::string& ckpt, const std::string& image, std::size_t vertex, const std::string& out,
                const std::string& config) {
  eagr::NetConfig cfg = config_or_default(config);
  auto params = eagr::params_from_checkpoint(eagr::Checkpoint::load(ckpt), cfg);
  auto m = eagr::response_map(params, cfg, eagr::read_ppm(image), vertex);
  std::printf("vertex %zu  grid %zux%zu  row_sum %.15f\n", vertex, m.height, m.width, m.row_sum);
  eagr::detail::write_file(out, eagr::encode_pnm(m.image));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge-aware graph reasoning toolkit"};
  app.require_subcommand(1);

  std::string out, data, config, ckpt, ablate, eval_data, log_path, image, format = "text";
  std::string synth_size = "32x32", bench_size = "48x48", grid = "6x6", sel = "4x4";
  std::size_t count = 0, seeds = 20, channels = 64, t = 32, k = 0, runs = 5, vertex = 0;
  std::uint64_t seed = 0;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic face-parsing dataset");
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--count", count, "Number of samples")->required();
  synth->add_option("--seed", seed, "Generator seed");
  synth->add_option("--size", synth_size, "Canvas size HxW");

  auto* train = app.add_subcommand("train", "Train the parsing network");
  train->add_option("--data", data, "Dataset directory")->required();
  train->add_option("--config", config, "key=value config file")->required();
  train->add_option("--out", out, "Checkpoint path")->required();
  train->add_option("--ablate", ablate, "baseline|no-edge|no-reasoning|no-ba")
      ->check(CLI::IsMember({"baseline", "no-edge", "no-reasoning", "no-ba"}));
  train->add_option("--eval-data", eval_data, "Dataset scored after every epoch");
  train->add_option("--log", log_path, "Run log path (default CKPT.log)");

  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a dataset");
  eval->add_option("--data", data, "Dataset directory")->required();
  eval->add_option("--ckpt", ckpt, "Checkpoint")->required();
  eval->add_option("--config", config, "Config used for training (default built-in)");
  eval->add_option("--format", format, "text|json")->check(CLI::IsMember({"text", "json"}));

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gradcheck->add_option("--seed", seed, "First seed");
  gradcheck->add_option("--seeds", seeds, "Number of consecutive seeds")->check(CLI::Range(1, 100000));

  auto* bench = app.add_subcommand("bench", "MAC counts and timing: non-local vs graph block");
  bench->add_option("--size", bench_size, "Feature map HxW");
  bench->add_option("--channels", channels, "Input channels C");
  bench->add_option("--t", t, "Reduced channels T");
  bench->add_option("--k", k, "Vertex channels K (default 2T)");
  bench->add_option("--grid", grid, "Pooling grid PhxPw");
  bench->add_option("--sel", sel, "Central selection ShxSw");
  bench->add_option("--runs", runs, "Timed repetitions (at least 5)");
  bench->add_option("--seed", seed, "Input seed");

  auto* respmap = app.add_subcommand("respmap", "Export one projection row as a PGM (darker = higher)");
  respmap->add_option("--ckpt", ckpt, "Checkpoint")->required();
  respmap->add_option("--image", image, "Input PPM")->required();
  respmap->add_option("--vertex", vertex, "Vertex index")->required();
  respmap->add_option("--out", out, "Output PGM")->required();
  respmap->add_option("--config", config, "Config used for training (default built-in)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  try {
    if (synth->parsed()) return cmd_synth(out, count, seed, synth_size);
    if (train->parsed()) return cmd_train(data, config, out, ablate, eval_data, log_path);
    if (eval->parsed()) return cmd_eval(data, ckpt, config, format);
    if (gradcheck->parsed()) return cmd_gradcheck(seed, seeds);
    if (bench->parsed()) return cmd_bench(bench_size, channels, t, k, grid, sel, runs, seed);
    if (respmap->parsed()) return cmd_respmap(ckpt, image, vertex, out, config);
  } catch (const eagr::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kIoOrParse;
  } catch (const eagr::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIoOrParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
