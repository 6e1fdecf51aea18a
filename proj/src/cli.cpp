// SPDX-License-Identifier: Apache-2.0
#include "csinas/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "csinas/data.hpp"
#include "csinas/stats.hpp"

namespace csinas {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kToolName = "csinas";
constexpr const char* kToolVersion = "0.1.0";

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw std::runtime_error("config: " + where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end()) {
      throw std::runtime_error("config: unknown key " + where + "." + key);
    }
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::vector<OpKind> op_set_from_json(const json& arr) {
  if (!arr.is_array() || arr.empty()) {
    throw std::runtime_error("config: search.op_set must be a non-empty array of op names");
  }
  std::vector<OpKind> out;
  for (const auto& el : arr) {
    const std::string name = el.get<std::string>();
    auto k = op_from_name(name);
    if (!k) throw std::runtime_error("config: unknown operator name \"" + name + "\"");
    out.push_back(*k);
  }
  return out;
}

RunConfig run_config_from_json(json j) {
  if (j.contains("config")) j = j.at("config");  // accept a manifest as a config
  RunConfig cfg;
  check_keys(j, "<root>",
             {"out_dir", "jobs", "seed", "dataset", "codec", "scenario", "search", "eval"});
  read_field(j, "out_dir", cfg.out_dir);
  read_field(j, "jobs", cfg.jobs);
  read_field(j, "seed", cfg.seed);
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    check_keys(d, "dataset", {"count"});
    read_field(d, "count", cfg.count);
  }
  if (j.contains("codec")) {
    const json& c = j.at("codec");
    check_keys(c, "codec", {"cr", "bits"});
    read_field(c, "cr", cfg.cr);
    read_field(c, "bits", cfg.bits);
  }
  if (j.contains("scenario")) {
    const json& s = j.at("scenario");
    check_keys(s, "scenario",
               {"id", "n_t", "n_f", "n_c", "paths", "carrier_hz", "bandwidth_hz", "spacing_m",
                "angle_spread_deg", "max_delay_s"});
    read_field(s, "id", cfg.scenario.id);
    read_field(s, "n_t", cfg.scenario.n_t);
    read_field(s, "n_f", cfg.scenario.n_f);
    read_field(s, "n_c", cfg.scenario.n_c);
    read_field(s, "paths", cfg.scenario.paths);
    read_field(s, "carrier_hz", cfg.scenario.carrier_hz);
    read_field(s, "bandwidth_hz", cfg.scenario.bandwidth_hz);
    read_field(s, "spacing_m", cfg.scenario.spacing_m);
    read_field(s, "angle_spread_deg", cfg.scenario.angle_spread_deg);
    read_field(s, "max_delay_s", cfg.scenario.max_delay_s);
  }
  if (j.contains("search")) {
    const json& s = j.at("search");
    check_keys(s, "search",
               {"n_cell", "nodes", "width", "split", "e_warm_up", "e_search", "op_set", "arch_lr",
                "param_lr", "param_lr_decay", "weight_decay", "e_start_record", "m_record",
                "k_partial", "batch", "patience", "op_relu"});
    read_field(s, "n_cell", cfg.search.n_cell);
    read_field(s, "nodes", cfg.search.nodes);
    read_field(s, "width", cfg.search.width);
    if (s.contains("split")) {
      auto v = s.at("split").get<std::vector<double>>();
      if (v.size() != 3) throw std::runtime_error("config: search.split needs 3 ratios");
      std::copy(v.begin(), v.end(), cfg.search.split.begin());
    }
    read_field(s, "e_warm_up", cfg.search.e_warm_up);
    read_field(s, "e_search", cfg.search.e_search);
    if (s.contains("op_set")) cfg.search.op_set = op_set_from_json(s.at("op_set"));
    read_field(s, "arch_lr", cfg.search.arch_lr);
    read_field(s, "param_lr", cfg.search.param_lr);
    read_field(s, "param_lr_decay", cfg.search.param_lr_decay);
    read_field(s, "weight_decay", cfg.search.weight_decay);
    read_field(s, "e_start_record", cfg.search.e_start_record);
    read_field(s, "m_record", cfg.search.m_record);
    read_field(s, "k_partial", cfg.search.k_partial);
    read_field(s, "batch", cfg.search.batch);
    read_field(s, "patience", cfg.search.patience);
    read_field(s, "op_relu", cfg.search.op_relu);
  }
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    check_keys(e, "eval",
               {"n_cell", "width", "residual", "lr", "lr_decay", "e_train", "batch", "op_relu"});
    read_field(e, "n_cell", cfg.eval.n_cell);
    read_field(e, "width", cfg.eval.width);
    read_field(e, "residual", cfg.eval.residual);
    read_field(e, "lr", cfg.eval.lr);
    read_field(e, "lr_decay", cfg.eval.lr_decay);
    read_field(e, "e_train", cfg.eval.e_train);
    read_field(e, "batch", cfg.eval.batch);
    read_field(e, "op_relu", cfg.eval.op_relu);
  }
  // The codec settings are authoritative at the top level and mirrored into
  // the stage configs the library consumes.
  cfg.search.cr = cfg.cr;
  cfg.search.bits = cfg.bits;
  cfg.eval.cr = cfg.cr;
  cfg.eval.bits = cfg.bits;
  return cfg;
}

json run_config_as_json(const RunConfig& cfg) {
  json s;
  s["id"] = cfg.scenario.id;
  s["n_t"] = cfg.scenario.n_t;
  s["n_f"] = cfg.scenario.n_f;
  s["n_c"] = cfg.scenario.n_c;
  s["paths"] = cfg.scenario.paths;
  s["carrier_hz"] = cfg.scenario.carrier_hz;
  s["bandwidth_hz"] = cfg.scenario.bandwidth_hz;
  s["spacing_m"] = cfg.scenario.spacing_m;
  s["angle_spread_deg"] = cfg.scenario.angle_spread_deg;
  s["max_delay_s"] = cfg.scenario.max_delay_s;
  json se;
  se["n_cell"] = cfg.search.n_cell;
  se["nodes"] = cfg.search.nodes;
  se["width"] = cfg.search.width;
  se["split"] = cfg.search.split;
  se["e_warm_up"] = cfg.search.e_warm_up;
  se["e_search"] = cfg.search.e_search;
  json ops = json::array();
  for (OpKind k : cfg.search.op_set) ops.push_back(op_name(k));
  se["op_set"] = ops;
  se["arch_lr"] = cfg.search.arch_lr;
  se["param_lr"] = cfg.search.param_lr;
  se["param_lr_decay"] = cfg.search.param_lr_decay;
  se["weight_decay"] = cfg.search.weight_decay;
  se["e_start_record"] = cfg.search.e_start_record;
  se["m_record"] = cfg.search.m_record;
  se["k_partial"] = cfg.search.k_partial;
  se["batch"] = cfg.search.batch;
  se["patience"] = cfg.search.patience;
  se["op_relu"] = cfg.search.op_relu;
  json ev;
  ev["n_cell"] = cfg.eval.n_cell;
  ev["width"] = cfg.eval.width;
  ev["residual"] = cfg.eval.residual;
  ev["lr"] = cfg.eval.lr;
  ev["lr_decay"] = cfg.eval.lr_decay;
  ev["e_train"] = cfg.eval.e_train;
  ev["batch"] = cfg.eval.batch;
  ev["op_relu"] = cfg.eval.op_relu;
  json root;
  root["out_dir"] = cfg.out_dir;
  root["jobs"] = cfg.jobs;
  root["seed"] = cfg.seed;
  root["dataset"] = json{{"count", cfg.count}};
  root["codec"] = json{{"cr", cfg.cr}, {"bits", cfg.bits}};
  root["scenario"] = s;
  root["search"] = se;
  root["eval"] = ev;
  return root;
}

void require_out_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("output directory " + dir + " does not exist");
  }
}

void require_writable(const std::string& path, bool force) {
  fs::path p(path);
  if (p.has_parent_path() && !fs::is_directory(p.parent_path())) {
    throw std::runtime_error("output directory " + p.parent_path().string() + " does not exist");
  }
  if (!force && fs::exists(p)) {
    throw std::runtime_error(path + " already exists (use --force to overwrite)");
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path);
}

void write_manifest(const RunConfig& cfg, const std::string& command, const std::string& path) {
  json m;
  m["tool"] = json{{"name", kToolName}, {"version", kToolVersion}};
  m["formats"] = json{{"dataset", 1}, {"codec", 1}, {"genotype", 1}, {"weights", 1}};
  m["command"] = command;
  m["config"] = run_config_as_json(cfg);
  write_text(path, m.dump(2) + "\n");
}

std::string dataset_path(const RunConfig& cfg) { return cfg.out_dir + "/dataset.csid"; }

CsiDataset load_pipeline_dataset(const RunConfig& cfg) {
  const std::string path = dataset_path(cfg);
  if (!fs::exists(path)) {
    throw std::runtime_error("dataset not found at " + path + "; run gen first");
  }
  return load_dataset(path);
}

ProjectionCodec build_codec(const RunConfig& cfg, const CsiDataset& ds) {
  ProjectionCodec codec = ProjectionCodec::make_projection(static_cast<int>(ds.sample_len()),
                                                           cfg.cr, cfg.bits,
                                                           hash_str(cfg.seed, "codec"));
  calibrate_codec(codec, ds);
  return codec;
}

int cmd_gen(const RunConfig& cfg, bool force) {
  require_out_dir(cfg.out_dir);
  const std::string path = dataset_path(cfg);
  require_writable(path, force);
  ScenarioConfig scenario = cfg.scenario;
  scenario.seed = hash_str(cfg.seed, "scene");
  CsiDataset ds = generate_dataset(scenario, cfg.count);
  save_dataset(ds, path);
  write_manifest(cfg, "gen", cfg.out_dir + "/manifest_gen.json");
  std::cout << "wrote " << path << ": id=" << ds.scenario_id << " count=" << ds.count
            << " grid=" << ds.n_t << "x" << ds.n_c << "\n";
  return 0;
}

int cmd_stats(const std::vector<std::string>& files, const std::string& out_override, bool force) {
  struct Entry {
    std::string file, id;
    double mean_pse;
  };
  std::vector<Entry> entries;
  for (const std::string& file : files) {
    CsiDataset ds = load_dataset(file);
    if (ds.count == 0) throw std::runtime_error("dataset " + file + " is empty");
    const std::string out_dir =
        out_override.empty() ? fs::path(file).parent_path().string() : out_override;
    const std::string stem = fs::path(file).stem().string();
    const std::string base = (out_dir.empty() ? std::string(".") : out_dir) + "/" + stem;

    std::vector<double> pse(ds.count);
    for (uint64_t i = 0; i < ds.count; ++i) pse[i] = sample_pse(ds, i);
    double mean = 0.0, mn = pse[0], mx = pse[0];
    for (double v : pse) {
      mean += v;
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
    mean /= static_cast<double>(ds.count);
    double var = 0.0;
    for (double v : pse) var += (v - mean) * (v - mean);
    var /= static_cast<double>(ds.count);

    std::vector<double> mean_pas(static_cast<size_t>(ds.n_t), 0.0);
    std::vector<double> mean_pdp(static_cast<size_t>(ds.n_c), 0.0);
    for (uint64_t i = 0; i < ds.count; ++i) {
      auto [pas, pdp] = pas_pdp(ds.sample_complex(i), ds.n_t, ds.n_c);
      for (size_t k = 0; k < pas.size(); ++k) mean_pas[k] += pas[k];
      for (size_t d = 0; d < pdp.size(); ++d) mean_pdp[d] += pdp[d];
    }
    for (double& v : mean_pas) v /= static_cast<double>(ds.count);
    for (double& v : mean_pdp) v /= static_cast<double>(ds.count);

    const int bins = 50;
    Histogram h = histogram(pse, bins, 0.0, 1.0);

    const std::string f_summary = base + "_pse_summary.csv";
    const std::string f_hist = base + "_pse_histogram.csv";
    const std::string f_pas = base + "_mean_pas.csv";
    const std::string f_pdp = base + "_mean_pdp.csv";
    for (const auto& p : {f_summary, f_hist, f_pas, f_pdp}) require_writable(p, force);

    std::ostringstream sum;
    sum << "id,count,mean_pse,std_pse,min_pse,max_pse\n"
        << ds.scenario_id << "," << ds.count << "," << fmt17(mean) << ","
        << fmt17(std::sqrt(var)) << "," << fmt17(mn) << "," << fmt17(mx) << "\n";
    write_text(f_summary, sum.str());

    std::ostringstream hist;
    hist << "bin_lo,bin_hi,count\n";
    const double width = (h.hi - h.lo) / bins;
    for (int b = 0; b < bins; ++b) {
      hist << fmt17(h.lo + b * width) << "," << fmt17(h.lo + (b + 1) * width) << ","
           << h.counts[static_cast<size_t>(b)] << "\n";
    }
    write_text(f_hist, hist.str());

    std::ostringstream pas;
    pas << "antenna,mean_power\n";
    for (size_t k = 0; k < mean_pas.size(); ++k) pas << k << "," << fmt17(mean_pas[k]) << "\n";
    write_text(f_pas, pas.str());

    std::ostringstream pdp;
    pdp << "delay,mean_power\n";
    for (size_t d = 0; d < mean_pdp.size(); ++d) pdp << d << "," << fmt17(mean_pdp[d]) << "\n";
    write_text(f_pdp, pdp.str());

    std::cout << "dataset=" << file << " id=" << ds.scenario_id << " count=" << ds.count
              << " mean_pse=" << mean << "\n";
    entries.push_back({file, ds.scenario_id, mean});
  }
  if (entries.size() > 1) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return a.mean_pse > b.mean_pse; });
    std::cout << "pse_order:";
    for (size_t i = 0; i < entries.size(); ++i) {
      std::cout << (i == 0 ? " " : " > ") << entries[i].id;
    }
    std::cout << "\n";
  }
  return 0;
}

json genotype_as_json(const Genotype& g) { return json::parse(g.to_json()); }

int cmd_search(const RunConfig& cfg, bool force) {
  require_out_dir(cfg.out_dir);
  const std::string log_path = cfg.out_dir + "/search_log.csv";
  const std::string cand_path = cfg.out_dir + "/candidates.json";
  require_writable(log_path, force);
  require_writable(cand_path, force);
  CsiDataset ds = load_pipeline_dataset(cfg);
  ProjectionCodec codec = build_codec(cfg, ds);
  SplitIndices split = split_dataset(ds.count, cfg.search.split, hash_str(cfg.seed, "split"));
  SearchConfig scfg = cfg.search;
  scfg.seed = hash_str(cfg.seed, "search");
  SearchResult result = run_search(scfg, ds, codec, split);
  save_search_log(result.log, log_path);
  json c;
  c["version"] = 1;
  c["epochs_run"] = result.epochs_run;
  c["best_supernet_nmse_db"] = result.best_nmse_db;
  c["final_genotype"] = genotype_as_json(result.final_genotype);
  json arr = json::array();
  for (const auto& rec : result.candidates) {
    arr.push_back(json{{"epoch", rec.epoch},
                       {"supernet_nmse_db", rec.nmse_db},
                       {"genotype", genotype_as_json(rec.genotype)}});
  }
  c["candidates"] = arr;
  write_text(cand_path, c.dump(2) + "\n");
  write_manifest(cfg, "search", cfg.out_dir + "/manifest_search.json");
  std::cout << "search finished: epochs=" << result.epochs_run
            << " candidates=" << result.candidates.size()
            << " best_supernet_nmse_db=" << format_db(result.best_nmse_db) << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, bool force) {
  require_out_dir(cfg.out_dir);
  const std::string cand_path = cfg.out_dir + "/candidates.json";
  if (!fs::exists(cand_path)) {
    throw std::runtime_error("no candidates at " + cand_path + "; run search first");
  }
  std::ifstream cf(cand_path);
  json c = json::parse(cf, nullptr, true);
  if (!c.contains("version") || c.at("version").get<int>() != 1) {
    throw std::runtime_error(cand_path + ": unsupported candidates file version");
  }
  std::vector<Genotype> candidates;
  for (const auto& el : c.at("candidates")) {
    candidates.push_back(Genotype::from_json(el.at("genotype").dump()));
  }
  if (candidates.empty()) {
    throw std::runtime_error(cand_path + " holds no recorded candidates; nothing to evaluate");
  }
  const std::string report_path = cfg.out_dir + "/eval_report.csv";
  const std::string best_path = cfg.out_dir + "/best_genotype.json";
  require_writable(report_path, force);
  require_writable(best_path, force);
  const std::string weights_dir = cfg.out_dir + "/weights";
  fs::create_directories(weights_dir);

  CsiDataset ds = load_pipeline_dataset(cfg);
  ProjectionCodec codec = build_codec(cfg, ds);
  SplitIndices split = split_dataset(ds.count, cfg.search.split, hash_str(cfg.seed, "split"));
  std::vector<uint64_t> train = split.train_omega;
  train.insert(train.end(), split.train_alpha.begin(), split.train_alpha.end());

  ArchitectureConfig base = cfg.eval;
  base.seed = hash_str(cfg.seed, "eval");
  SelectionResult sel =
      select_best(candidates, ds, codec, base, train, split.test, cfg.jobs, weights_dir);
  save_eval_report(sel, report_path);
  for (size_t i = 0; i < sel.rows.size(); ++i) {
    std::ostringstream curve;
    curve << "epoch,train_loss\n";
    const auto& cv = sel.rows[i].outcome.curve;
    for (size_t e = 0; e < cv.size(); ++e) curve << e << "," << fmt17(cv[e]) << "\n";
    write_text(cfg.out_dir + "/cand" + std::to_string(i) + "_curve.csv", curve.str());
  }
  const auto& best = sel.rows[static_cast<size_t>(sel.best_index)];
  write_text(best_path, best.genotype.to_json());
  write_manifest(cfg, "eval", cfg.out_dir + "/manifest_eval.json");
  std::cout << "best candidate " << sel.best_index << ": nmse_db="
            << format_db(best.outcome.nmse_db) << " cell_flops=" << best.cell_flops
            << " cell_params=" << best.cell_params << " weights=" << weights_dir << "/cand"
            << sel.best_index << ".cswt\n";
  return 0;
}

int cmd_space(int num_ops, int nodes) {
  BigUint cell = cell_space_size(num_ops, nodes);
  BigUint global = global_space_size(num_ops, nodes);
  std::cout << "cell_space_size(" << num_ops << ", " << nodes << ") = " << cell.to_string()
            << " (approx " << cell.to_double() << ")\n";
  std::cout << "global_space_size(" << num_ops << ", " << nodes << ") = " << global.to_string()
            << " (approx " << global.to_double() << ")\n";
  return 0;
}

int cmd_report(const RunConfig& cfg, bool force) {
  require_out_dir(cfg.out_dir);
  const std::string report_in = cfg.out_dir + "/eval_report.csv";
  const std::string cand_path = cfg.out_dir + "/candidates.json";
  const std::string best_path = cfg.out_dir + "/best_genotype.json";
  for (const auto& p : {report_in, cand_path, best_path}) {
    if (!fs::exists(p)) throw std::runtime_error(p + " not found; run search and eval first");
  }
  const std::string out_path = cfg.out_dir + "/report.csv";
  require_writable(out_path, force);

  CsiDataset ds = load_pipeline_dataset(cfg);
  std::ifstream cf(cand_path);
  json c = json::parse(cf, nullptr, true);
  std::ifstream bf(best_path);
  std::stringstream bss;
  bss << bf.rdbuf();
  Genotype best = Genotype::from_json(bss.str());
  const std::string best_key = best.key();

  // Pull the winner's row out of the evaluation report.
  std::ifstream rf(report_in);
  std::string line;
  std::getline(rf, line);  // header
  std::string best_linear, best_db, best_flops, best_params, best_epochs;
  while (std::getline(rf, line)) {
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string col;
    while (std::getline(ls, col, ',')) cols.push_back(col);
    if (cols.size() == 7 && cols[0] == best_key) {
      best_linear = cols[1];
      best_db = cols[2];
      best_flops = cols[3];
      best_params = cols[4];
      best_epochs = cols[5];
    }
  }
  if (best_linear.empty()) {
    throw std::runtime_error(report_in + " has no row for the selected genotype " + best_key);
  }

  std::ostringstream out;
  out << "key,value\n";
  out << "scenario_id," << ds.scenario_id << "\n";
  out << "grid," << ds.n_t << "x" << ds.n_c << "\n";
  out << "dataset_count," << ds.count << "\n";
  out << "cr," << fmt17(cfg.cr) << "\n";
  out << "bits," << cfg.bits << "\n";
  out << "search_epochs," << c.at("epochs_run").get<int>() << "\n";
  out << "candidates_recorded," << c.at("candidates").size() << "\n";
  out << "best_supernet_nmse_db," << format_db(c.at("best_supernet_nmse_db").get<double>())
      << "\n";
  out << "best_genotype," << best_key << "\n";
  out << "best_nmse_linear," << best_linear << "\n";
  out << "best_nmse_db," << best_db << "\n";
  out << "best_cell_flops," << best_flops << "\n";
  out << "best_cell_params," << best_params << "\n";
  out << "best_train_epochs," << best_epochs << "\n";
  write_text(out_path, out.str());
  std::cout << "wrote " << out_path << ": best=" << best_key << " nmse_db=" << best_db << "\n";
  return 0;
}

struct CommonArgs {
  std::string config;
  std::optional<std::string> out;
  std::optional<uint64_t> seed;
  std::optional<int> jobs;
  std::optional<uint64_t> count;
  bool force = false;
};

void add_common(CLI::App* sub, CommonArgs& a, bool with_jobs) {
  sub->add_option("--config", a.config, "JSON config file (or a manifest from a previous run)");
  sub->add_option("--seed", a.seed, "override the global seed");
  sub->add_option("--out", a.out, "override the output directory");
  if (with_jobs) sub->add_option("--jobs", a.jobs, "worker pool size for candidate retraining");
  sub->add_flag("--force", a.force, "overwrite existing outputs");
}

RunConfig resolve(const CommonArgs& a) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : load_run_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.out) cfg.out_dir = *a.out;
  if (a.jobs) cfg.jobs = *a.jobs;
  if (a.count) cfg.count = *a.count;
  return cfg;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file " + path);
  json j;
  try {
    j = json::parse(f, nullptr, true);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config file " + path + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(std::move(j));
}

std::string run_config_to_json(const RunConfig& cfg) { return run_config_as_json(cfg).dump(2) + "\n"; }

int cli_run(const std::vector<std::string>& args) {
  CLI::App app{"scenario-customized CSI feedback decoder generation"};
  app.require_subcommand(1);

  CommonArgs gen_a, search_a, eval_a, report_a;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic CSI dataset");
  add_common(gen, gen_a, false);
  gen->add_option("--count", gen_a.count, "number of samples");

  std::vector<std::string> stats_files;
  std::string stats_out;
  bool stats_force = false;
  CLI::App* stats = app.add_subcommand("stats", "profile datasets: PSE, PAS, PDP");
  stats->add_option("datasets", stats_files, "dataset files")->required()->expected(-1);
  stats->add_option("--out", stats_out, "directory for the CSV outputs (default: alongside)");
  stats->add_flag("--force", stats_force, "overwrite existing outputs");

  CLI::App* search = app.add_subcommand("search", "run the supernet architecture search");
  add_common(search, search_a, false);

  CLI::App* eval = app.add_subcommand("eval", "retrain recorded candidates and pick the best");
  add_common(eval, eval_a, true);

  int space_ops = 0, space_nodes = 0;
  CLI::App* space = app.add_subcommand("space", "print exact search-space sizes");
  space->add_option("ops", space_ops, "operator vocabulary size")->required();
  space->add_option("nodes", space_nodes, "intra-cell node count")->required();

  CLI::App* report = app.add_subcommand("report", "collate run artifacts into one summary");
  add_common(report, report_a, false);

  std::vector<std::string> argv_store = args;
  std::vector<const char*> argv;
  argv.push_back(kToolName);
  for (const auto& s : argv_store) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) return cmd_gen(resolve(gen_a), gen_a.force);
    if (stats->parsed()) return cmd_stats(stats_files, stats_out, stats_force);
    if (search->parsed()) return cmd_search(resolve(search_a), search_a.force);
    if (eval->parsed()) return cmd_eval(resolve(eval_a), eval_a.force);
    if (space->parsed()) return cmd_space(space_ops, space_nodes);
    if (report->parsed()) return cmd_report(resolve(report_a), report_a.force);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace csinas
