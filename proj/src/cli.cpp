#include "partfuse/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "io_util.hpp"
#include "json_config.hpp"
#include "partfuse/autolabel_monitor.hpp"
#include "partfuse/autolabel_rgbd.hpp"
#include "partfuse/error.hpp"
#include "partfuse/fusion.hpp"
#include "partfuse/metrics.hpp"
#include "partfuse/overlay.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace partfuse {

namespace {

struct Globals {
  std::string taxonomy;
  std::string config;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  bool keep_going = false;
  bool percent = false;
  CLI::Option* seed_opt = nullptr;
};

std::shared_ptr<spdlog::logger> logger() {
  if (auto l = spdlog::get("partfuse")) return l;
  auto l = spdlog::stderr_logger_st("partfuse");
  l->set_pattern("%l: %v");
  return l;
}

void configure_logging() {
  auto level = spdlog::level::warn;
  if (const char* env = std::getenv("PARTFUSE_LOG")) {
    const std::string v = env;
    if (v == "error") level = spdlog::level::err;
    else if (v == "warn") level = spdlog::level::warn;
    else if (v == "info") level = spdlog::level::info;
    else if (v == "debug") level = spdlog::level::debug;
    else throw ValidationError("bad-log-level", "PARTFUSE_LOG must be error, warn, info or debug");
  }
  logger()->set_level(level);
}

ClassTaxonomy taxonomy_of(const Globals& g) {
  if (g.taxonomy.empty()) throw ValidationError("missing-taxonomy", "--taxonomy is required");
  return load_taxonomy(g.taxonomy);
}

json config_of(const Globals& g) {
  if (g.config.empty()) return json::object();
  const auto bytes = detail::read_file(g.config);
  auto j = json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ValidationError("malformed-config", "config is not a JSON object");
  return j;
}

json section(const json& config, const char* name) {
  if (!config.contains(name)) return json::object();
  const auto& s = config.at(name);
  if (!s.is_object()) throw ValidationError("malformed-config", std::string("config section '") + name + "' is not an object");
  return s;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Failures are reported
/// in index order once every worker has finished; without keep_going the
/// first one is rethrown and no new items start after a failure.
void run_items(const std::vector<std::string>& names, unsigned jobs, bool keep_going,
               const std::function<void(std::size_t)>& fn) {
  const auto n = names.size();
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  auto worker = [&] {
    for (;;) {
      if (stop.load()) return;
      const auto i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        if (!keep_going) stop = true;
      }
    }
  };
  const auto threads = std::max<std::size_t>(1, std::min<std::size_t>(jobs, n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::size_t failed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    if (!keep_going) std::rethrow_exception(errors[i]);
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      logger()->warn("skipping {}: {}: {}", names[i], e.code(), e.what());
    } catch (const std::exception& e) {
      logger()->warn("skipping {}: {}", names[i], e.what());
    }
    ++failed;
  }
  if (failed > 0) logger()->warn("{} of {} items skipped", failed, n);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// Names `<x>` of files `<dir>/<x><suffix>`, sorted.
std::vector<std::string> stems_in(const fs::path& dir, const std::string& suffix) {
  if (!fs::is_directory(dir)) throw IoError("missing-file", "not a directory: " + dir.string());
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && ends_with(name, suffix)) out.push_back(name.substr(0, name.size() - suffix.size()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> subdirs_in(const fs::path& dir, const std::string& prefix) {
  if (!fs::is_directory(dir)) throw IoError("missing-file", "not a directory: " + dir.string());
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_directory() && name.rfind(prefix, 0) == 0) out.push_back(name);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// "name=path" or "path" (name = last path component).
std::pair<std::string, fs::path> named_path(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq != std::string::npos) return {arg.substr(0, eq), arg.substr(eq + 1)};
  fs::path p(arg);
  auto name = (p.has_filename() ? p : p.parent_path()).filename().string();
  return {name, p};
}

void write_json(const json& j, const fs::path& path) { detail::write_text(path, j.dump(2) + "\n"); }

json class_arg(const std::string& s) {
  if (!s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) {
    return std::stoul(s);
  }
  return s;
}

// ---------------------------------------------------------------- fuse

struct FuseArgs {
  std::vector<std::string> inputs;
  std::string output;
  std::string strategy = "partpanoptic";
  double confidence_min = 0, overlap_discard_ratio = 0, mask_logit_threshold = 0;
  std::size_t min_instance_area = 0;
  CLI::Option *strategy_opt, *conf_opt, *overlap_opt, *area_opt, *thr_opt;
};

int cmd_fuse(const Globals& g, const FuseArgs& a) {
  const auto taxonomy = taxonomy_of(g);
  const auto config = config_of(g);
  const auto fc = section(config, "fusion");

  FusionParams params;
  std::string strategy_name_arg = config.value("strategy", std::string("partpanoptic"));
  try {
    params.confidence_min = fc.value("confidence_min", params.confidence_min);
    params.overlap_discard_ratio = fc.value("overlap_discard_ratio", params.overlap_discard_ratio);
    params.min_instance_area = fc.value("min_instance_area", params.min_instance_area);
    params.mask_logit_threshold = fc.value("mask_logit_threshold", params.mask_logit_threshold);
  } catch (const json::exception& e) {
    throw ValidationError("malformed-config", std::string("fusion config: ") + e.what());
  }
  if (a.strategy_opt->count()) strategy_name_arg = a.strategy;
  if (a.conf_opt->count()) params.confidence_min = a.confidence_min;
  if (a.overlap_opt->count()) params.overlap_discard_ratio = a.overlap_discard_ratio;
  if (a.area_opt->count()) params.min_instance_area = a.min_instance_area;
  if (a.thr_opt->count()) params.mask_logit_threshold = a.mask_logit_threshold;
  params.validate();
  const auto strategy = parse_strategy(strategy_name_arg);

  std::vector<fs::path> stems;
  for (const auto& in : a.inputs) {
    if (fs::is_directory(in)) {
      for (const auto& s : stems_in(in, ".sem.ppt")) stems.push_back(fs::path(in) / s);
    } else {
      std::string s = in;
      if (ends_with(s, ".sem.ppt")) s.resize(s.size() - 8);
      stems.push_back(s);
    }
  }
  std::vector<std::string> names;
  for (const auto& s : stems) names.push_back(s.filename().string());
  if (std::set<std::string>(names.begin(), names.end()).size() != names.size()) {
    throw ValidationError("duplicate-input", "two inputs share an output name");
  }
  fs::create_directories(a.output);
  logger()->info("fusing {} inputs with strategy {}", stems.size(), strategy_name(strategy));

  run_items(names, g.jobs, g.keep_going, [&](std::size_t i) {
    const auto stack = load_stack(stack_files_for_stem(stems[i]), taxonomy);
    const auto triple = fuse(stack, taxonomy, params, strategy);
    write_label_triple(triple, fs::path(a.output) / names[i]);
    logger()->debug("fused {}", names[i]);
  });
  return 0;
}

// ---------------------------------------------------------------- eval / report

struct EvalArgs {
  std::string gt;
  std::vector<std::string> preds;
  std::string output;
};

int cmd_eval(const Globals& g, const EvalArgs& a) {
  const auto taxonomy = taxonomy_of(g);
  const auto stems = stems_in(a.gt, ".sem.pgm");
  if (stems.empty()) throw ValidationError("empty-dataset", "no ground-truth triples in " + a.gt);

  std::vector<NamedReport> rows;
  for (const auto& arg : a.preds) {
    const auto [name, dir] = named_path(arg);
    std::vector<std::map<ClassId, ClassTally>> per_image(stems.size());
    // Evaluation errors are never skipped: a partial dataset changes the scores.
    run_items(stems, g.jobs, false, [&, dir = dir](std::size_t i) {
      const auto gt = read_label_triple(fs::path(a.gt) / stems[i]);
      const auto pred = read_label_triple(dir / stems[i]);
      validate_triple(gt, taxonomy);
      validate_triple(pred, taxonomy);
      per_image[i] = tally(match_segments(pred, gt, taxonomy));
    });
    std::map<ClassId, ClassTally> total;
    for (const auto& m : per_image) {
      for (const auto& [id, t] : m) total[id] += t;
    }
    rows.push_back({name, report_from_tallies(total, taxonomy)});
  }

  const auto table = report_table(rows, taxonomy, g.percent);
  if (!a.output.empty()) {
    fs::create_directories(a.output);
    for (const auto& row : rows) detail::write_text(fs::path(a.output) / (row.name + ".tsv"), report_tsv(row.report));
    detail::write_text(fs::path(a.output) / "table.txt", table);
  }
  std::cout << table;
  return 0;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, '\t')) out.push_back(cell);
  return out;
}

std::optional<double> parse_cell(const std::string& s) {
  if (s == "-") return std::nullopt;
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw ValidationError("malformed-tsv", "bad number '" + s + "'");
  return v;
}

/// Reads a TSV written by report_tsv() back into a report. Tallies keep
/// only the counts; IoU sums are not stored in the file.
MetricReport read_report_tsv(const fs::path& path, const ClassTaxonomy& taxonomy) {
  const auto bytes = detail::read_file(path);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::string line;
  if (!std::getline(in, line) || line != "class\tpq\tpart_pq\ttp\tfp\tfn") {
    throw ValidationError("malformed-tsv", path.string() + ": unexpected header");
  }
  std::map<std::string, std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_tabs(line);
    if (cells.size() != 6) throw ValidationError("malformed-tsv", path.string() + ": expected 6 columns");
    rows[cells[0]] = std::move(cells);
  }
  auto counts = [](const std::vector<std::string>& cells, ClassTally& t) {
    try {
      t.tp = std::stoull(cells[3]);
      t.fp = std::stoull(cells[4]);
      t.fn = std::stoull(cells[5]);
    } catch (const std::exception&) {
      throw ValidationError("malformed-tsv", "bad count in row " + cells[0]);
    }
  };
  MetricReport report;
  for (const auto& c : taxonomy.semantic_classes()) {
    ClassScore score;
    score.class_id = c.id;
    score.name = c.name;
    if (auto it = rows.find(c.name); it != rows.end()) {
      score.pq = parse_cell(it->second[1]);
      score.part_pq = parse_cell(it->second[2]);
      score.tally.in_gt = score.pq.has_value();
      counts(it->second, score.tally);
    }
    report.classes.push_back(std::move(score));
  }
  if (auto it = rows.find("total"); it != rows.end()) {
    report.pq = parse_cell(it->second[1]);
    report.part_pq = parse_cell(it->second[2]);
  } else {
    throw ValidationError("malformed-tsv", path.string() + ": missing total row");
  }
  return report;
}

struct ReportArgs {
  std::vector<std::string> tsvs;
  std::string output;
};

int cmd_report(const Globals& g, const ReportArgs& a) {
  const auto taxonomy = taxonomy_of(g);
  std::vector<NamedReport> rows;
  for (const auto& arg : a.tsvs) {
    auto [name, path] = named_path(arg);
    if (arg.find('=') == std::string::npos) name = path.stem().string();
    rows.push_back({name, read_report_tsv(path, taxonomy)});
  }
  const auto table = report_table(rows, taxonomy, g.percent);
  if (!a.output.empty()) detail::write_text(a.output, table);
  std::cout << table;
  return 0;
}

// ---------------------------------------------------------------- label

struct LabelArgs {
  std::string input;
  std::string output;
  std::string object_class;
  std::string backgrounds;
  std::size_t synthetic = 0;
  std::vector<CLI::Option*> object_opts;
  CLI::Option* synthetic_opt;

  bool object_given() const {
    return std::any_of(object_opts.begin(), object_opts.end(), [](auto* o) { return o->count() > 0; });
  }
};

int cmd_label_rgbd(const Globals& g, const LabelArgs& a) {
  const auto taxonomy = taxonomy_of(g);
  const auto config = config_of(g);
  auto cfg = rgbd_config_from_json(section(config, "rgbd"), taxonomy);
  if (a.object_given()) cfg.object_class_id = detail::semantic_ref(class_arg(a.object_class), taxonomy);
  if (g.seed_opt->count()) cfg.ransac.seed = g.seed;
  cfg.validate(taxonomy);

  const auto scenes = subdirs_in(a.input, "scene_");
  fs::create_directories(a.output);
  run_items(scenes, g.jobs, g.keep_going, [&](std::size_t i) {
    const auto dir = fs::path(a.input) / scenes[i];
    const auto rgb = read_pnm(dir / "rgb.ppm");
    const auto cloud = read_ply(dir / "cloud.ply");
    const auto camera = read_camera(dir / "camera.json");
    const auto sample = generate_rgbd_sample(rgb, cloud, camera, taxonomy, cfg);

    const auto out = fs::path(a.output) / scenes[i];
    write_pnm(sample.image, out.string() + ".ppm");
    write_label_triple(sample.labels, out);
    std::size_t object_points = 0;
    for (bool f : sample.cloud.object_flag) object_points += f;
    json prov = {{"variant", "rgbd"},
                 {"scene", scenes[i]},
                 {"seed", cfg.ransac.seed},
                 {"params", rgbd_config_to_json(cfg)},
                 {"counts",
                  {{"points", cloud.size()},
                   {"object_points", object_points},
                   {"instances", sample.cloud.instance_count()},
                   {"in_frame_points", sample.stats.in_frame_points},
                   {"labelled_pixels", sample.stats.labelled_pixels}}}};
    write_json(prov, out.string() + ".json");
    logger()->info("{}: {} instances", scenes[i], sample.cloud.instance_count());
  });
  return 0;
}

int cmd_label_monitor(const Globals& g, const LabelArgs& a) {
  const auto taxonomy = taxonomy_of(g);
  const auto config = config_of(g);
  const auto mc = section(config, "monitor");
  auto cfg = monitor_config_from_json(mc, taxonomy);
  if (a.object_given()) cfg.object_class_id = detail::semantic_ref(class_arg(a.object_class), taxonomy);
  cfg.validate(taxonomy);
  std::size_t synthetic = a.synthetic;
  if (!a.synthetic_opt->count() && mc.contains("synthetic")) synthetic = mc.at("synthetic").get<std::size_t>();

  std::vector<fs::path> backgrounds;
  if (!a.backgrounds.empty()) {
    for (const auto& s : stems_in(a.backgrounds, ".ppm")) backgrounds.push_back(fs::path(a.backgrounds) / (s + ".ppm"));
  }
  if (synthetic > 0 && backgrounds.empty()) {
    throw ValidationError("no-backgrounds", "--synthetic needs a --backgrounds directory with PPM files");
  }

  const auto scenes = subdirs_in(a.input, "scene_");
  fs::create_directories(a.output);
  run_items(scenes, g.jobs, g.keep_going, [&](std::size_t i) {
    const auto dir = fs::path(a.input) / scenes[i];
    const auto blue = read_pnm(dir / "blue.ppm");
    const auto black = read_pnm(dir / "black.ppm");
    const auto mask = extract_reference_mask(blue, black, cfg);
    const auto ref = extract_part_masks(blue, black, mask, cfg);

    const auto out_base = fs::path(a.output) / scenes[i];
    json outputs = json::array();
    for (const auto& t : stems_in(dir, ".ppm")) {
      if (t.rfind("target_", 0) != 0) continue;
      const auto labeled = transfer_labels(ref, read_pnm(dir / (t + ".ppm")), taxonomy);
      const auto stem = out_base.string() + "_" + t;
      write_pnm(labeled.image, stem + ".ppm");
      write_label_triple(labeled.labels, stem);
      outputs.push_back({{"sample", fs::path(stem).filename().string()}, {"source", t}});
    }
    for (std::size_t k = 0; k < synthetic; ++k) {
      const auto index = (static_cast<std::uint64_t>(i) << 32) | k;
      const auto b = choose_background(g.seed, index, backgrounds.size());
      const auto labeled = composite_synthetic(black, ref, read_pnm(backgrounds[b]));
      const auto stem = out_base.string() + "_synth_" + std::to_string(k);
      write_pnm(labeled.image, stem + ".ppm");
      write_label_triple(labeled.labels, stem);
      outputs.push_back(
          {{"sample", fs::path(stem).filename().string()}, {"background", backgrounds[b].filename().string()}});
    }

    json parts = json::object();
    for (const auto& pm : ref.parts) parts[std::to_string(pm.part_id)] = pm.mask.count();
    std::size_t instances = 0;
    for (auto id : ref.instances.ids) instances = std::max<std::size_t>(instances, id);
    json prov = {{"variant", "monitor"},
                 {"scene", scenes[i]},
                 {"seed", g.seed},
                 {"params", monitor_config_to_json(cfg)},
                 {"counts", {{"object_pixels", mask.count()}, {"instances", instances}, {"part_pixels", parts}}},
                 {"outputs", outputs}};
    write_json(prov, out_base.string() + ".json");
    logger()->info("{}: {} samples", scenes[i], outputs.size());
  });
  return 0;
}

// ---------------------------------------------------------------- overlay / augment

struct OverlayArgs {
  std::string image, labels, output;
  double alpha = 0.5;
  bool no_boxes = false;
  CLI::Option* alpha_opt;
};

int cmd_overlay(const Globals& g, const OverlayArgs& a) {
  const auto taxonomy = taxonomy_of(g);
  const auto oc = section(config_of(g), "overlay");
  auto spec = default_overlay_spec(taxonomy);
  try {
    spec.alpha = oc.value("alpha", spec.alpha);
    spec.draw_boxes = oc.value("boxes", spec.draw_boxes);
    if (oc.contains("colors")) {
      for (const auto& [name, rgb] : oc.at("colors").items()) {
        spec.class_colors[detail::semantic_ref(class_arg(name), taxonomy)] = rgb.get<Rgb>();
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError("malformed-config", std::string("overlay config: ") + e.what());
  }
  if (a.alpha_opt->count()) spec.alpha = a.alpha;
  if (a.no_boxes) spec.draw_boxes = false;

  const auto image = read_pnm(a.image);
  const auto triple = read_label_triple(a.labels);
  validate_triple(triple, taxonomy);
  write_pnm(render_overlay(image, triple, spec), a.output);
  return 0;
}

struct AugmentArgs {
  std::string input, output;
};

int cmd_augment(const Globals& g, const AugmentArgs& a) {
  const auto stems = stems_in(a.input, ".sem.pgm");
  fs::create_directories(a.output);
  run_items(stems, g.jobs, g.keep_going, [&](std::size_t i) {
    const auto src = fs::path(a.input) / stems[i];
    const auto image = read_pnm(src.string() + ".ppm");
    const auto triple = read_label_triple(src);
    for (const auto& [flip, sample] : augment_flips(image, triple)) {
      const auto stem = (fs::path(a.output) / stems[i]).string() + flip_suffix(flip);
      write_pnm(sample.image, stem + ".ppm");
      write_label_triple(sample.labels, stem);
    }
  });
  return 0;
}

int report_error(const char* kind, const std::string& code, const char* what, int exit_code) {
  std::cerr << "partfuse: " << kind << " error [" << code << "]: " << what << "\n";
  return exit_code;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Part-panoptic label fusion, evaluation and automatic labelling"};
  app.name("partfuse");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--taxonomy", g.taxonomy, "Taxonomy JSON");
  app.add_option("--config", g.config, "Config JSON (flags override it)");
  g.seed_opt = app.add_option("--seed", g.seed, "Seed for every random choice");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::Range(1u, 1024u));
  app.add_flag("--keep-going", g.keep_going, "Skip failing items instead of stopping");
  app.add_flag("--percent", g.percent, "Show scores as percentages");

  FuseArgs fa;
  auto* fuse = app.add_subcommand("fuse", "Fuse logit stacks into label triples");
  fuse->add_option("--input", fa.inputs, "Stems or directories of *.sem.ppt")->required();
  fuse->add_option("--output", fa.output, "Output directory")->required();
  fa.strategy_opt = fuse->add_option("--strategy", fa.strategy, "partpanoptic | none | consensus | topdown");
  fa.conf_opt = fuse->add_option("--confidence-min", fa.confidence_min);
  fa.overlap_opt = fuse->add_option("--overlap-discard-ratio", fa.overlap_discard_ratio);
  fa.area_opt = fuse->add_option("--min-instance-area", fa.min_instance_area);
  fa.thr_opt = fuse->add_option("--mask-logit-threshold", fa.mask_logit_threshold);

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "PQ / PartPQ of predictions against ground truth");
  eval->add_option("--gt", ea.gt, "Ground-truth directory")->required();
  eval->add_option("--pred", ea.preds, "Prediction directory, optionally name=dir")->required();
  eval->add_option("--output", ea.output, "Directory for <name>.tsv and table.txt");

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Table from TSV files written by eval");
  report->add_option("--tsv", ra.tsvs, "TSV file, optionally name=file")->required();
  report->add_option("--output", ra.output, "Write the table to this file");

  LabelArgs la;
  auto* label = app.add_subcommand("label", "Automatic labelling");
  label->require_subcommand(1);
  label->fallthrough();
  auto* rgbd = label->add_subcommand("rgbd", "scene_*/{rgb.ppm,cloud.ply,camera.json}");
  auto* monitor = label->add_subcommand("monitor", "scene_*/{blue.ppm,black.ppm,target_*.ppm}");
  for (auto* sub : {rgbd, monitor}) {
    sub->fallthrough();
    sub->add_option("--input", la.input, "Dataset directory")->required();
    sub->add_option("--output", la.output, "Output directory")->required();
    la.object_opts.push_back(sub->add_option("--object-class", la.object_class, "Object class name or id"));
  }
  monitor->add_option("--backgrounds", la.backgrounds, "Directory of background PPMs");
  la.synthetic_opt = monitor->add_option("--synthetic", la.synthetic, "Composited samples per scene");

  OverlayArgs oa;
  auto* overlay = app.add_subcommand("overlay", "Render labels over an image");
  overlay->add_option("--image", oa.image)->required();
  overlay->add_option("--labels", oa.labels, "Label triple stem")->required();
  overlay->add_option("--output", oa.output, "Output PPM")->required();
  oa.alpha_opt = overlay->add_option("--alpha", oa.alpha);
  overlay->add_flag("--no-boxes", oa.no_boxes);

  AugmentArgs aa;
  auto* augment = app.add_subcommand("augment", "Write flipped copies of every sample");
  augment->add_option("--input", aa.input, "Directory of <stem>.ppm + triple")->required();
  augment->add_option("--output", aa.output)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e);
      return 0;
    }
    return report_error("usage", e.get_name(), e.what(), 3);
  }

  try {
    configure_logging();
    if (*fuse) return cmd_fuse(g, fa);
    if (*eval) return cmd_eval(g, ea);
    if (*report) return cmd_report(g, ra);
    if (*rgbd) return cmd_label_rgbd(g, la);
    if (*monitor) return cmd_label_monitor(g, la);
    if (*overlay) return cmd_overlay(g, oa);
    if (*augment) return cmd_augment(g, aa);
  } catch (const IoError& e) {
    return report_error("I/O", e.code(), e.what(), 2);
  } catch (const ValidationError& e) {
    return report_error("validation", e.code(), e.what(), 3);
  } catch (const fs::filesystem_error& e) {
    return report_error("I/O", "filesystem", e.what(), 2);
  } catch (const json::exception& e) {
    return report_error("validation", "malformed-json", e.what(), 3);
  } catch (const std::exception& e) {
    return report_error("validation", "internal", e.what(), 3);
  }
  return 3;
}

}  // namespace partfuse
