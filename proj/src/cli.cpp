#include "t3s/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "t3s/netpbm.hpp"
#include "t3s/shiftdiag.hpp"

namespace t3s {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const char* first = text.data();
  const char* last = first + text.size();
  if constexpr (std::is_unsigned_v<T>) {
    if (!text.empty() && text.front() == '-') return false;
  }
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool parse_bool(const std::string& text, bool& out) {
  std::string v = text;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "1" || v == "true" || v == "on" || v == "yes") return out = true, true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return out = false, true;
  return false;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::uint64_t v = 0;
    if (!parse_number(trim(item), v)) throw ConfigError("bad seed '" + trim(item) + "'");
    seeds.push_back(v);
  }
  if (seeds.empty()) throw ConfigError("seed list is empty");
  return seeds;
}

// Binds config keys to fields; each setter returns false on a bad value.
using Setter = std::function<bool(const std::string&, RunConfig&)>;

template <typename T, typename F>
Setter number_setter(F field) {
  return [field](const std::string& v, RunConfig& c) {
    T parsed{};
    if (!parse_number(v, parsed)) return false;
    field(c) = parsed;
    return true;
  };
}

template <typename F>
Setter bool_setter(F field) {
  return [field](const std::string& v, RunConfig& c) { return parse_bool(v, field(c)); };
}

const std::map<std::string, std::map<std::string, Setter>>& config_keys() {
  static const std::map<std::string, std::map<std::string, Setter>> keys = {
      {"train",
       {
           {"epochs", number_setter<std::size_t>([](RunConfig& c) -> auto& { return c.pipeline.train.epochs; })},
           {"batch_size", number_setter<std::size_t>([](RunConfig& c) -> auto& { return c.pipeline.train.batch_size; })},
           {"learning_rate", number_setter<double>([](RunConfig& c) -> auto& { return c.pipeline.train.learning_rate; })},
           {"weight_decay", number_setter<double>([](RunConfig& c) -> auto& { return c.pipeline.train.weight_decay; })},
           {"lambda_sty", number_setter<double>([](RunConfig& c) -> auto& { return c.pipeline.train.lambda_sty; })},
           {"mixup_prob", number_setter<double>([](RunConfig& c) -> auto& { return c.pipeline.train.mixup_prob; })},
           {"cross_domain_mixup", bool_setter([](RunConfig& c) -> auto& { return c.pipeline.train.cross_domain_mixup; })},
           {"n_bases", number_setter<std::size_t>([](RunConfig& c) -> auto& { return c.pipeline.train.n_bases; })},
           {"channels", number_setter<std::size_t>([](RunConfig& c) -> auto& { return c.pipeline.train.channels; })},
           {"validation_limit", number_setter<std::size_t>([](RunConfig& c) -> auto& { return c.pipeline.train.validation_limit; })},
           {"pretrain_epochs", number_setter<std::size_t>([](RunConfig& c) -> auto& { return c.pipeline.pretrain_epochs; })},
           {"lora_rank", number_setter<std::size_t>([](RunConfig& c) -> auto& { return c.pipeline.lora_rank; })},
           {"lora_alpha", number_setter<double>([](RunConfig& c) -> auto& { return c.pipeline.lora_alpha; })},
           {"timing", bool_setter([](RunConfig& c) -> auto& { return c.timing; })},
           {"jobs", number_setter<std::size_t>([](RunConfig& c) -> auto& { return c.jobs; })},
       }},
      {"data",
       {
           {"dir", [](const std::string& v, RunConfig& c) { c.data_dir = v; return !v.empty(); }},
           {"out", [](const std::string& v, RunConfig& c) { c.out_dir = v; return !v.empty(); }},
           {"seed", number_setter<std::uint64_t>([](RunConfig& c) -> auto& { return c.layout.seed; })},
           {"size", number_setter<std::size_t>([](RunConfig& c) -> auto& { return c.layout.size; })},
           {"source_count", number_setter<std::size_t>([](RunConfig& c) -> auto& { return c.layout.source_count; })},
           {"target_count", number_setter<std::size_t>([](RunConfig& c) -> auto& { return c.layout.target_count; })},
       }},
      {"ablation",
       {
           {"fm", bool_setter([](RunConfig& c) -> auto& { return c.fm_analogue; })},
           {"mixup", bool_setter([](RunConfig& c) -> auto& { return c.mixup; })},
           {"csdm", bool_setter([](RunConfig& c) -> auto& { return c.csdm; })},
           {"seeds",
            [](const std::string& v, RunConfig& c) {
              try {
                c.seeds = parse_seed_list(v);
              } catch (const ConfigError&) {
                return false;
              }
              return true;
            }},
       }},
  };
  return keys;
}

void validate_run_config(const RunConfig& cfg) {
  if (cfg.seeds.empty()) throw ConfigError("config: at least one seed is required");
  if (cfg.data_dir.empty() || cfg.out_dir.empty()) throw ConfigError("config: empty directory");
  if (cfg.jobs == 0) throw ConfigError("config: jobs must be positive");
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw, section = "train";
  std::size_t line_no = 0;
  const auto& keys = config_keys();
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!keys.count(section)) {
        cfg.warnings.push_back(where + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto sec = keys.find(section);
    if (sec == keys.end()) continue;
    auto it = sec->second.find(key);
    if (it == sec->second.end()) {
      cfg.warnings.push_back(where + ": unknown key '" + key + "' in [" + section + "]");
      continue;
    }
    if (!it->second(value, cfg)) {
      throw ConfigError(where + ": invalid value '" + value + "' for " + key);
    }
  }
  validate_run_config(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

PipelineConfig arm_pipeline(const RunConfig& cfg, bool fm, bool mixup, bool csdm,
                            std::uint64_t seed) {
  PipelineConfig p = cfg.pipeline;
  p.fm = fm;
  p.train.seed = seed;
  if (!mixup) p.train.mixup_prob = 0.0;
  if (!csdm) {
    p.train.style_mode = StyleMode::kOff;
    p.train.lambda_sty = 0.0;
  } else {
    p.train.style_mode = StyleMode::kAlways;
  }
  return p;
}

ArmResult run_arm(const RunConfig& cfg, const std::vector<DomainDataset>& domains, bool fm,
                  bool mixup, bool csdm, std::uint64_t seed) {
  const auto sources = select_split(domains, Split::kSource);
  const TrainResult tr = train_pipeline(sources, arm_pipeline(cfg, fm, mixup, csdm, seed));
  ArmResult r{fm, mixup, csdm, seed, {}, {}, tr.params.checksum()};
  r.unseen = evaluate_model(tr.params, select_split(domains, Split::kTargetUnseen));
  r.seen = evaluate_model(tr.params, select_split(domains, Split::kTargetSeen));
  return r;
}

std::vector<ArmResult> run_ablation(const RunConfig& cfg, const std::vector<DomainDataset>& domains) {
  struct Job {
    bool fm, mixup, csdm;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (int arm = 0; arm < 8; ++arm) {
    for (std::uint64_t seed : cfg.seeds) {
      jobs.push_back({(arm & 4) != 0, (arm & 2) != 0, (arm & 1) != 0, seed});
    }
  }
  std::vector<ArmResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& j = jobs[i];
      try {
        results[i] = run_arm(cfg, domains, j.fm, j.mixup, j.csdm, j.seed);
      } catch (...) {
        std::lock_guard lock(log_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
      std::lock_guard lock(log_mutex);
      std::cerr << "ablate: fm=" << j.fm << " mixup=" << j.mixup << " csdm=" << j.csdm
                << " seed=" << j.seed << " unseen dice=" << results[i].unseen.dice << "\n";
    }
  };
  const std::size_t workers = std::min(cfg.jobs, jobs.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

void write_ablation_csv(const std::vector<ArmResult>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "fm,mixup,csdm,seed,iou,dice,seen_iou,seen_dice\n";
  for (const auto& r : rows) {
    out << r.fm << ',' << r.mixup << ',' << r.csdm << ',' << r.seed << ',' << fmt(r.unseen.iou)
        << ',' << fmt(r.unseen.dice) << ',' << fmt(r.seen.iou) << ',' << fmt(r.seen.dice) << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> data, out, checkpoint, input, predictions;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> seeds;
  std::optional<std::size_t> epochs, pretrain_epochs, batch_size, jobs, limit;
  std::optional<double> learning_rate, lambda_sty;
  std::optional<bool> fm, mixup, csdm, timing;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("-c,--config", o.config, "INI config file");
  app->add_option("--data", o.data, "dataset layout directory");
  app->add_option("--out", o.out, "output directory");
  app->add_option("--seed", o.seed, "experiment seed (layout seed for gen)");
}

void add_training(CLI::App* app, Overrides& o) {
  app->add_option("--epochs", o.epochs);
  app->add_option("--pretrain-epochs", o.pretrain_epochs);
  app->add_option("--batch-size", o.batch_size);
  app->add_option("--lr", o.learning_rate);
  app->add_option("--lambda-sty", o.lambda_sty);
  app->add_option("--fm", o.fm, "foundation-model analogue (pretrain + adapters)");
  app->add_option("--mixup", o.mixup);
  app->add_option("--csdm", o.csdm, "style projection and orthogonality loss");
  app->add_option("--timing", o.timing, "write wall-clock seconds into reports");
}

RunConfig resolve(const Overrides& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << "\n";
  if (o.data) cfg.data_dir = *o.data;
  if (o.out) cfg.out_dir = *o.out;
  if (o.seeds) cfg.seeds = parse_seed_list(*o.seeds);
  if (o.epochs) cfg.pipeline.train.epochs = *o.epochs;
  if (o.pretrain_epochs) cfg.pipeline.pretrain_epochs = *o.pretrain_epochs;
  if (o.batch_size) cfg.pipeline.train.batch_size = *o.batch_size;
  if (o.learning_rate) cfg.pipeline.train.learning_rate = *o.learning_rate;
  if (o.lambda_sty) cfg.pipeline.train.lambda_sty = *o.lambda_sty;
  if (o.fm) cfg.fm_analogue = *o.fm;
  if (o.mixup) cfg.mixup = *o.mixup;
  if (o.csdm) cfg.csdm = *o.csdm;
  if (o.timing) cfg.timing = *o.timing;
  if (o.jobs) cfg.jobs = *o.jobs;
  validate_run_config(cfg);
  return cfg;
}

std::filesystem::path checkpoint_path(const Overrides& o, const RunConfig& cfg) {
  return o.checkpoint ? std::filesystem::path(*o.checkpoint) : cfg.out_dir / "model.t3s";
}

int cmd_gen(const Overrides& o) {
  RunConfig cfg = resolve(o);
  if (o.seed) cfg.layout.seed = *o.seed;
  const auto domains = default_layout(cfg.layout);
  write_layout(domains, cfg.out_dir);
  std::cerr << "gen: wrote " << domains.size() << " domains to " << cfg.out_dir << "\n";
  return 0;
}

int cmd_train(const Overrides& o) {
  RunConfig cfg = resolve(o);
  const std::uint64_t seed = o.seed ? *o.seed : cfg.seeds.front();
  const auto domains = read_layout(cfg.data_dir);
  PipelineConfig p = arm_pipeline(cfg, cfg.fm_analogue, cfg.mixup, cfg.csdm, seed);
  std::cerr << "train: fm=" << p.fm << " mixup_prob=" << p.train.mixup_prob
            << " style=" << style_mode_name(p.train.style_mode) << " seed=" << seed << "\n";
  const TrainResult tr = train_pipeline(select_split(domains, Split::kSource), p,
                                        select_split(domains, Split::kTargetSeen));
  std::filesystem::create_directories(cfg.out_dir);
  save_checkpoint(tr.params, checkpoint_path(o, cfg));
  write_report_csv(tr.report, cfg.out_dir / "train_report.csv", cfg.timing);
  for (const auto& e : tr.report.epochs) {
    std::cerr << "epoch " << e.epoch << " l_seg=" << e.l_seg << " l_sty=" << e.l_sty
              << " dice=" << e.dice << "\n";
  }
  return 0;
}

std::string mask_name(std::size_t index) {
  std::ostringstream os;
  os << std::setw(4) << std::setfill('0') << index << "_mask.pgm";
  return os.str();
}

int cmd_eval(const Overrides& o) {
  const RunConfig cfg = resolve(o);
  const auto domains = read_layout(cfg.data_dir);
  const auto dirs = layout_dirs(cfg.data_dir);
  std::optional<ModelParams> params;
  if (!o.predictions) params = load_checkpoint(checkpoint_path(o, cfg));

  std::filesystem::create_directories(cfg.out_dir);
  const auto path = cfg.out_dir / "eval.csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "domain,split,images,iou,dice\n";
  std::map<std::string, ScoreAccumulator> per_split;
  for (std::size_t d = 0; d < domains.size(); ++d) {
    ScoreAccumulator acc;
    auto& split_acc = per_split[std::string(split_name(domains[d].split))];
    for (std::size_t i = 0; i < domains[d].samples.size(); ++i) {
      const Sample& s = domains[d].samples[i];
      std::vector<std::uint8_t> pred;
      if (o.predictions) {
        const Raster r = read_netpbm(std::filesystem::path(*o.predictions) / dirs[d] / mask_name(i));
        if (r.channels != 1) throw Error("eval: prediction for " + dirs[d] + " is not a PGM");
        pred = r.pixels;
      } else {
        pred = infer_test_time(s, *params).mask;
      }
      acc.add(pred, s.mask, s.classes);
      split_acc.add(pred, s.mask, s.classes);
    }
    const SegScores m = acc.mean();
    out << domains[d].name << ',' << split_name(domains[d].split) << ',' << acc.count() << ','
        << fmt(m.iou) << ',' << fmt(m.dice) << '\n';
  }
  for (const auto& [split, acc] : per_split) {
    const SegScores m = acc.mean();
    out << "all," << split << ',' << acc.count() << ',' << fmt(m.iou) << ',' << fmt(m.dice) << '\n';
    std::cout << split << ": iou=" << fmt(m.iou) << " dice=" << fmt(m.dice) << "\n";
  }
  if (!out) throw Error("write failed for " + path.string());
  return 0;
}

int cmd_ablate(const Overrides& o) {
  RunConfig cfg = resolve(o);
  if (o.seed) cfg.seeds = {*o.seed};
  const auto domains = read_layout(cfg.data_dir);
  const auto rows = run_ablation(cfg, domains);
  std::filesystem::create_directories(cfg.out_dir);
  write_ablation_csv(rows, cfg.out_dir / "ablation.csv");

  // Per-arm means over seeds, in the same arm order.
  std::ofstream out(cfg.out_dir / "ablation_summary.csv", std::ios::binary);
  out << "fm,mixup,csdm,seeds,iou,dice,seen_iou,seen_dice\n";
  const std::size_t per_arm = cfg.seeds.size();
  for (std::size_t a = 0; a < rows.size(); a += per_arm) {
    double iou = 0, dc = 0, siou = 0, sdc = 0;
    for (std::size_t k = a; k < a + per_arm; ++k) {
      iou += rows[k].unseen.iou;
      dc += rows[k].unseen.dice;
      siou += rows[k].seen.iou;
      sdc += rows[k].seen.dice;
    }
    const double n = static_cast<double>(per_arm);
    out << rows[a].fm << ',' << rows[a].mixup << ',' << rows[a].csdm << ',' << per_arm << ','
        << fmt(iou / n) << ',' << fmt(dc / n) << ',' << fmt(siou / n) << ',' << fmt(sdc / n) << '\n';
    std::cout << "fm=" << rows[a].fm << " mixup=" << rows[a].mixup << " csdm=" << rows[a].csdm
              << "  unseen iou=" << fmt(iou / n) << " dice=" << fmt(dc / n) << "\n";
  }
  if (!out) throw Error("write failed for ablation summary");
  return 0;
}

int cmd_diagnose(const Overrides& o) {
  const RunConfig cfg = resolve(o);
  const auto domains = read_layout(cfg.data_dir);
  const ModelParams params = load_checkpoint(checkpoint_path(o, cfg));
  std::vector<const DomainDataset*> all;
  for (const auto& d : domains) all.push_back(&d);
  std::filesystem::create_directories(cfg.out_dir);
  const auto rows = export_styles(all, params, cfg.out_dir / "styles.csv");

  for (const std::string phase : {"pre", "post"}) {
    std::vector<DomainStyleSummary> sources, targets;
    for (const auto& d : domains) {
      std::vector<std::vector<double>> pts;
      for (const auto& r : rows) {
        if (r.domain == d.name && r.phase == phase) pts.push_back(r.coords);
      }
      if (pts.empty()) continue;
      (d.split == Split::kSource ? sources : targets).push_back(summarize_domain(d.name, pts));
    }
    if (sources.empty()) throw Error("diagnose: layout has no source domains");
    const ShiftReport report = shift_report(sources, targets);
    write_shift_csv(report, cfg.out_dir / ("shift_" + phase + ".csv"));
    std::ofstream txt(cfg.out_dir / ("shift_" + phase + ".txt"), std::ios::binary);
    txt << "phase " << phase << "\n" << format_shift_report(report);
    std::cout << "phase " << phase << "\n" << format_shift_report(report);
  }

  std::vector<std::vector<double>> pts;
  for (const auto& r : rows) pts.push_back(r.coords);
  const Pca2d pca = pca2d(pts);
  std::ofstream proj(cfg.out_dir / "projection.csv", std::ios::binary);
  proj << "domain,split,phase,pc1,pc2\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    proj << rows[i].domain << ',' << rows[i].split << ',' << rows[i].phase << ','
         << fmt(pca.coords[i][0]) << ',' << fmt(pca.coords[i][1]) << '\n';
  }
  if (!proj) throw Error("write failed for projection.csv");
  return 0;
}

int cmd_project(const Overrides& o) {
  const RunConfig cfg = resolve(o);
  const ModelParams params = load_checkpoint(checkpoint_path(o, cfg));
  const std::filesystem::path input(*o.input);
  std::vector<std::filesystem::path> images;
  for (const auto& entry : std::filesystem::directory_iterator(input)) {
    if (entry.path().extension() == ".ppm") images.push_back(entry.path());
  }
  std::sort(images.begin(), images.end());
  if (images.empty()) throw Error("project: no .ppm images in " + input.string());
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream weights(cfg.out_dir / "projection_weights.csv", std::ios::binary);
  weights << "image";
  for (std::size_t i = 0; i < params.config.bases; ++i) weights << ",w_mu" << i;
  for (std::size_t i = 0; i < params.config.bases; ++i) weights << ",w_sigma" << i;
  weights << '\n';
  for (const auto& path : images) {
    const Raster r = read_netpbm(path);
    if (r.channels != 3) throw Error("project: " + path.string() + " is not an RGB image");
    const std::size_t px = r.width * r.height;
    std::vector<double> chw(3 * px);
    for (std::size_t p = 0; p < px; ++p)
      for (std::size_t c = 0; c < 3; ++c)
        chw[c * px + p] = static_cast<double>(r.pixels[3 * p + c]) / static_cast<double>(r.maxval);
    const Sample s = make_sample(r.height, r.width, params.config.classes, std::move(chw),
                                 std::vector<std::uint8_t>(px, 0), input.filename().string());
    const Inference inf = infer_test_time(s, params);
    write_pgm(cfg.out_dir / (path.stem().string() + "_mask.pgm"),
              Raster{r.width, r.height, 1, 255, inf.mask});
    weights << path.filename().string();
    if (inf.weights.w_mu.defined()) {
      for (double w : inf.weights.w_mu.data()) weights << ',' << fmt(w);
      for (double w : inf.weights.w_sigma.data()) weights << ',' << fmt(w);
    }
    weights << '\n';
  }
  if (!weights) throw Error("write failed for projection_weights.csv");
  std::cerr << "project: " << images.size() << " images\n";
  return 0;
}

}  // namespace

int dispatch(int argc, char** argv) {
  CLI::App app{"t3s: test-time style projection for segmentation"};
  app.require_subcommand(1);
  Overrides o;

  auto* gen = app.add_subcommand("gen", "write the default synthetic layout");
  add_common(gen, o);
  auto* tr = app.add_subcommand("train", "train one pipeline and save a checkpoint");
  add_common(tr, o);
  add_training(tr, o);
  auto* ev = app.add_subcommand("eval", "IoU/Dice per domain and split");
  add_common(ev, o);
  ev->add_option("--checkpoint", o.checkpoint);
  ev->add_option("--predictions", o.predictions, "score PGM masks from this layout-shaped tree");
  auto* ab = app.add_subcommand("ablate", "all 8 (fm, mixup, csdm) arms across seeds");
  add_common(ab, o);
  add_training(ab, o);
  ab->add_option("--seeds", o.seeds, "comma-separated seed list");
  ab->add_option("-j,--jobs", o.jobs, "parallel arm workers");
  auto* dg = app.add_subcommand("diagnose", "shift proxies, style CSV and 2-D projection");
  add_common(dg, o);
  dg->add_option("--checkpoint", o.checkpoint);
  auto* pj = app.add_subcommand("project", "test-time inference on a directory of PPM images");
  add_common(pj, o);
  pj->add_option("--checkpoint", o.checkpoint);
  pj->add_option("--input", o.input, "directory of .ppm images")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return e.get_exit_code() == 0 ? code : 2;
  }

  try {
    if (gen->parsed()) return cmd_gen(o);
    if (tr->parsed()) return cmd_train(o);
    if (ev->parsed()) return cmd_eval(o);
    if (ab->parsed()) return cmd_ablate(o);
    if (dg->parsed()) return cmd_diagnose(o);
    if (pj->parsed()) return cmd_project(o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace t3s
