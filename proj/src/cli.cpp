#include "crowdflow/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "crowdflow/errors.hpp"

namespace crowdflow {

namespace {

std::string annotation_filename(std::size_t index) {
  std::string name = frame_filename(index);
  name.replace(name.size() - 4, 4, ".txt");
  return name;
}

std::string slurp(const fs::path& path) {
  const Bytes bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir.string() + ": cannot create directory: " + ec.message());
}

std::size_t parse_frame_filename(const std::string& name) {
  const std::string prefix = "frame_";
  const std::string suffix = ".pgm";
  if (name.size() <= prefix.size() + suffix.size() || name.compare(0, prefix.size(), prefix) != 0 ||
      name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) {
    throw ValidationError("manifest", "unexpected entry '" + name + "'");
  }
  const char* first = name.data() + prefix.size();
  const char* last = name.data() + name.size() - suffix.size();
  std::size_t index = 0;
  const auto [ptr, ec] = std::from_chars(first, last, index);
  if (ec != std::errc() || ptr != last) throw ValidationError("manifest", "unexpected entry '" + name + "'");
  return index;
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream in(line);
  std::string field;
  while (std::getline(in, field, ',')) fields.push_back(field);
  return fields;
}

template <class T>
T field_number(const std::string& text, const std::string& what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError(what, "cannot parse '" + text + "'");
  }
  return value;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

HeadAnnotations rescale(const HeadAnnotations& points, int from_w, int from_h, int to_w, int to_h) {
  if (from_w == to_w && from_h == to_h) return points;
  const double sx = static_cast<double>(to_w) / from_w;
  const double sy = static_cast<double>(to_h) / from_h;
  HeadAnnotations out;
  out.reserve(points.size());
  for (const HeadPoint& p : points) {
    out.push_back({std::clamp((p.x + 0.5) * sx - 0.5, 0.0, to_w - 1.0),
                   std::clamp((p.y + 0.5) * sy - 0.5, 0.0, to_h - 1.0)});
  }
  return out;
}

double blob_tau(const PipelineConfig& config) { return config.blob_tau_relative * kernel_peak(config.kernel); }

std::string join_names(const std::set<std::string>& names) {
  std::string out;
  for (const std::string& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

}  // namespace

std::vector<VideoInput> discover_videos(const fs::path& input) {
  if (input.empty()) throw ValidationError("input", "no input given");
  std::error_code ec;
  if (fs::is_regular_file(input, ec)) {
    if (input.extension() != ".y4m") throw IoError(input.string() + ": expected a .y4m file or a directory");
    return {{input.stem().string(), input.parent_path(), input, true}};
  }
  if (!fs::is_directory(input, ec)) throw IoError(input.string() + ": no such file or directory");

  auto as_video = [](const fs::path& dir) -> std::optional<VideoInput> {
    std::error_code e;
    if (fs::is_directory(dir / "frames", e)) return VideoInput{dir.filename().string(), dir, dir / "frames", false};
    return std::nullopt;
  };
  if (auto v = as_video(input)) return {*v};

  std::vector<VideoInput> videos;
  bool has_frames = false;
  for (const auto& entry : fs::directory_iterator(input)) {
    const fs::path& p = entry.path();
    if (entry.is_directory()) {
      if (auto v = as_video(p)) videos.push_back(*v);
    } else if (entry.is_regular_file()) {
      if (p.extension() == ".y4m") videos.push_back({p.stem().string(), input, p, true});
      if (p.extension() == ".pgm") has_frames = true;
    }
  }
  if (videos.empty() && has_frames) {
    videos.push_back({fs::absolute(input).lexically_normal().filename().string(), input, input, false});
  }
  if (videos.empty()) throw IoError(input.string() + ": no frames or videos found");
  std::sort(videos.begin(), videos.end(), [](const VideoInput& a, const VideoInput& b) { return a.name < b.name; });
  return videos;
}

std::unique_ptr<FrameSource> open_video(const VideoInput& video) {
  if (video.y4m) return Y4mSource::open(video.frames);
  auto source = std::make_unique<PgmDirectorySource>(video.frames);
  if (source->files().empty()) throw IoError(video.frames.string() + ": empty frame directory");
  return source;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = n;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

void write_synth_video(const SynthSpec& spec, const fs::path& dir) {
  ensure_dir(dir / "frames");
  ensure_dir(dir / "annotations");
  SynthVideo video(spec);
  std::string manifest;
  std::size_t index = 0;
  while (auto frame = video.next()) {
    const std::string name = frame_filename(index);
    write_pgm(dir / "frames" / name, *frame);
    write_text_atomic(dir / "annotations" / annotation_filename(index), format_annotations(video.annotations()));
    manifest += "frames/" + name + " annotations/" + annotation_filename(index) + "\n";
    ++index;
  }
  write_text_atomic(dir / "labels.txt", format_labels(spec.labels()));
  write_text_atomic(dir / "manifest.txt", manifest);
}

std::vector<std::string> cmd_synth(const PipelineConfig& config) {
  config.validate();
  const std::vector<SynthSpec> specs = corpus_specs(config.synth);
  std::vector<std::string> names;
  for (std::size_t v = 0; v < specs.size(); ++v) {
    char name[32];
    std::snprintf(name, sizeof name, "video_%02zu", v);
    names.emplace_back(name);
  }
  ensure_dir(config.output_dir);
  parallel_for(specs.size(), config.workers,
               [&](std::size_t v) { write_synth_video(specs[v], config.output_dir / names[v]); });
  return names;
}

SamplingRun sample_video(FrameSource& source, const PipelineConfig& config, const fs::path& out_dir) {
  // Motion is measured at the working resolution; edges come after sampling.
  MappedSource working(source, [&](const GrayFrame& f) {
    return resize_bilinear(f, config.frame.width, config.frame.height);
  });
  SamplingRun run = run_sampler(working, config.sampler, config.flow);
  ensure_dir(out_dir / "frames");
  std::string manifest;
  source.rewind();
  std::size_t index = 0;
  auto saved = run.saved_indices.begin();
  while (saved != run.saved_indices.end()) {
    auto frame = source.next();
    if (!frame) throw std::logic_error("source ended before the last saved frame");
    if (index == *saved) {
      const std::string name = frame_filename(index);
      write_pgm(out_dir / "frames" / name, preprocess(*frame, config.frame));
      manifest += name + "\n";
      ++saved;
    }
    ++index;
  }
  write_text_atomic(out_dir / "run.csv", run_to_csv(run));
  write_text_atomic(out_dir / "manifest.txt", manifest);
  if (run.threshold) write_text_atomic(out_dir / "threshold.txt", format_double(*run.threshold) + "\n");
  return run;
}

std::vector<SamplingRun> cmd_sample(const PipelineConfig& config) {
  config.validate();
  const auto videos = discover_videos(config.input);
  std::vector<SamplingRun> runs(videos.size());
  parallel_for(videos.size(), config.workers, [&](std::size_t i) {
    auto source = open_video(videos[i]);
    runs[i] = sample_video(*source, config, config.output_dir / videos[i].name);
  });
  return runs;
}

SamplingRun load_run(const fs::path& dir) {
  SamplingRun run;
  try {
    run = run_from_csv(slurp(dir / "run.csv"));
  } catch (const DecodeError& e) {
    throw DecodeError((dir / "run.csv").string() + ": " + e.message(), e.offset());
  }
  std::vector<std::size_t> indices;
  for (const std::string& line : lines_of(slurp(dir / "manifest.txt"))) {
    indices.push_back(parse_frame_filename(line));
  }
  if (indices != run.saved_indices) {
    throw ValidationError((dir / "manifest.txt").string(), "saved frames disagree with run.csv");
  }
  std::error_code ec;
  if (fs::is_regular_file(dir / "threshold.txt", ec)) {
    const auto text = lines_of(slurp(dir / "threshold.txt"));
    if (text.size() != 1) throw ValidationError((dir / "threshold.txt").string(), "expected one number");
    run.threshold = field_number<double>(text[0], (dir / "threshold.txt").string());
  }
  run.validate();
  return run;
}

DensityOutput cmd_density(const PipelineConfig& config, const fs::path& frame_path, const fs::path& annotations,
                          const fs::path& out_dir) {
  config.validate();
  const GrayFrame frame = read_pgm(frame_path);
  HeadAnnotations points;
  try {
    points = parse_annotations(slurp(annotations));
  } catch (const ArgumentError& e) {
    throw ValidationError(annotations.string(), e.what());
  }
  DensityOutput out;
  out.map = render_density(points, frame.width(), frame.height(), config.kernel);
  out.blob_count = estimate_count(out.map, blob_tau(config));
  ensure_dir(out_dir);
  write_dmp1(out_dir / "map.dmp1", out.map);
  write_pgm(out_dir / "overlay.pgm", overlay(frame, out.map));
  return out;
}

DensityMap cmd_fuse(const PipelineConfig& config, const std::vector<fs::path>& realizations, const fs::path& out_file) {
  config.validate();
  if (realizations.empty()) throw ValidationError("fuse", "no DMP1 realizations given");
  std::vector<DensityMap> maps;
  for (const fs::path& p : realizations) maps.push_back(read_dmp1(p));
  for (const DensityMap& m : maps) {
    if (!m.same_shape(maps.front())) throw ValidationError("fuse", "realizations differ in size");
  }
  DensityMap fused = fuse_maps(maps, config.fusion);
  if (out_file.has_parent_path()) ensure_dir(out_file.parent_path());
  write_dmp1(out_file, fused);
  return fused;
}

std::string cmd_count(const PipelineConfig& config, const std::vector<fs::path>& maps) {
  config.validate();
  const double tau = blob_tau(config);
  std::string csv = "file,blob_count,integral_count\n";
  for (const fs::path& p : maps) {
    const DensityMap map = read_dmp1(p);
    csv += p.string() + "," + std::to_string(estimate_count(map, tau)) + "," + format_double(map.integral()) + "\n";
  }
  return csv;
}

std::vector<MetricsReport> cmd_eval(const fs::path& runs, const fs::path& labels, std::size_t slack) {
  std::map<std::string, fs::path> run_dirs;
  std::error_code ec;
  if (fs::is_regular_file(runs / "run.csv", ec)) {
    run_dirs[fs::absolute(runs).lexically_normal().filename().string()] = runs;
  } else if (fs::is_directory(runs, ec)) {
    for (const auto& entry : fs::directory_iterator(runs)) {
      if (entry.is_directory() && fs::is_regular_file(entry.path() / "run.csv")) {
        run_dirs[entry.path().filename().string()] = entry.path();
      }
    }
  } else {
    throw IoError(runs.string() + ": no such directory");
  }

  std::map<std::string, fs::path> label_files;
  if (fs::is_regular_file(labels, ec)) {
    const std::string name = run_dirs.size() == 1 ? run_dirs.begin()->first : labels.stem().string();
    label_files[name] = labels;
  } else if (fs::is_directory(labels, ec)) {
    for (const auto& entry : fs::directory_iterator(labels)) {
      const fs::path& p = entry.path();
      if (entry.is_directory() && fs::is_regular_file(p / "labels.txt")) {
        label_files[p.filename().string()] = p / "labels.txt";
      } else if (entry.is_regular_file() && p.extension() == ".txt") {
        label_files[p.stem().string()] = p;
      }
    }
  } else {
    throw IoError(labels.string() + ": no such file or directory");
  }

  std::set<std::string> unpaired;
  for (const auto& [name, dir] : run_dirs) {
    if (!label_files.count(name)) unpaired.insert(name);
  }
  for (const auto& [name, file] : label_files) {
    if (!run_dirs.count(name)) unpaired.insert(name);
  }
  if (!unpaired.empty()) throw ValidationError("videos", "runs and labels do not pair up: " + join_names(unpaired));
  if (run_dirs.empty()) throw ValidationError("videos", "no runs found under " + runs.string());

  std::vector<MetricsReport> reports;
  for (const auto& [name, dir] : run_dirs) {
    EventLabels lab;
    try {
      lab = parse_labels(slurp(label_files[name]));
    } catch (const ArgumentError& e) {
      throw ValidationError(label_files[name].string(), e.what());
    }
    reports.push_back(evaluate(name, load_run(dir), lab, slack));
  }
  reports.push_back(aggregate(reports));
  return reports;
}

std::string triples_table(std::string_view text) {
  std::vector<MetricsReport> reports;
  for (const std::string& line : lines_of(text)) {
    if (line.front() == '#') continue;
    const auto f = split_commas(line);
    if (f.size() != 4) throw ValidationError("triples", "expected name,tp,fp,fn in '" + line + "'");
    MetricsReport r;
    r.name = f[0];
    r.counts.tp = field_number<std::size_t>(f[1], "tp");
    r.counts.fp = field_number<std::size_t>(f[2], "fp");
    r.counts.fn = field_number<std::size_t>(f[3], "fn");
    r.counts.correct = r.counts.tp;
    r.saved_frames = r.counts.tp + r.counts.fp;
    r.scores = precision_recall_f1(r.counts.tp, r.counts.fp, r.counts.fn);
    reports.push_back(r);
  }
  return metrics_table(reports);
}

double counts_mae(std::string_view text) {
  std::vector<double> predicted;
  std::vector<double> actual;
  for (const std::string& line : lines_of(text)) {
    if (line.front() == '#') continue;
    const auto f = split_commas(line);
    if (f.size() != 2) throw ValidationError("counts", "expected predicted,actual in '" + line + "'");
    predicted.push_back(field_number<double>(f[0], "predicted"));
    actual.push_back(field_number<double>(f[1], "actual"));
  }
  return mae(predicted, actual);
}

PipelineSummary cmd_pipeline(const PipelineConfig& config) {
  config.validate();
  const auto videos = discover_videos(config.input);
  std::vector<std::optional<MetricsReport>> reports(videos.size());
  std::vector<std::vector<std::pair<double, double>>> counts(videos.size());
  const double tau = blob_tau(config);

  parallel_for(videos.size(), config.workers, [&](std::size_t i) {
    const VideoInput& video = videos[i];
    const fs::path out = config.output_dir / video.name;
    auto source = open_video(video);
    const SamplingRun run = sample_video(*source, config, out);

    std::error_code ec;
    if (fs::is_directory(video.annotations_dir(), ec)) {
      source->rewind();
      const auto first = source->next();
      const int src_w = first->width();
      const int src_h = first->height();
      ensure_dir(out / "density");
      ensure_dir(out / "overlay");
      std::string csv = "frame_index,blob_count,integral_count,annotated_count\n";
      for (std::size_t index : run.saved_indices) {
        const fs::path ann = video.annotations_dir() / annotation_filename(index);
        if (!fs::is_regular_file(ann, ec)) continue;
        const GrayFrame frame = read_pgm(out / "frames" / frame_filename(index));
        const HeadAnnotations heads = parse_annotations(slurp(ann));
        const DensityMap map = render_density(rescale(heads, src_w, src_h, frame.width(), frame.height()),
                                              frame.width(), frame.height(), config.kernel);
        const int blobs = estimate_count(map, tau);
        std::string stem = frame_filename(index);
        stem.resize(stem.size() - 4);
        write_dmp1(out / "density" / (stem + ".dmp1"), map);
        write_pgm(out / "overlay" / (stem + ".pgm"), overlay(frame, map));
        csv += std::to_string(index) + "," + std::to_string(blobs) + "," + format_double(map.integral()) + "," +
               std::to_string(heads.size()) + "\n";
        counts[i].emplace_back(blobs, static_cast<double>(heads.size()));
      }
      write_text_atomic(out / "counts.csv", csv);
    }
    if (fs::is_regular_file(video.labels_file(), ec)) {
      reports[i] = evaluate(video.name, run, parse_labels(slurp(video.labels_file())), config.eval_slack);
    }
  });

  PipelineSummary summary;
  for (auto& r : reports) {
    if (r) summary.reports.push_back(std::move(*r));
  }
  if (!summary.reports.empty()) summary.reports.push_back(aggregate(summary.reports));
  std::vector<double> predicted;
  std::vector<double> actual;
  for (const auto& per_video : counts) {
    for (const auto& [p, a] : per_video) {
      predicted.push_back(p);
      actual.push_back(a);
    }
  }
  if (!predicted.empty()) summary.count_mae = mae(predicted, actual);

  write_text_atomic(config.output_dir / "config.txt", serialize_config(config));
  if (!summary.reports.empty()) {
    write_text_atomic(config.output_dir / "metrics.csv", reports_to_csv(summary.reports));
    std::string table = metrics_table(summary.reports);
    if (summary.count_mae) table += "count MAE over saved frames: " + format_double(*summary.count_mae) + "\n";
    write_text_atomic(config.output_dir / "metrics.txt", table);
  }
  return summary;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Event-driven frame sampling and density-map crowd counting"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string output;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "flat dotted.key = value config file")->check(CLI::ExistingFile);
  app.add_option("--output", output, "output directory (or file for density --fuse)");
  app.add_option("--workers", workers, "videos processed in parallel")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "overrides synth.seed and sampler.seed");

  auto* synth = app.add_subcommand("synth", "write the synthetic corpus");

  auto* sample = app.add_subcommand("sample", "sample frames from one video or a corpus");
  std::string input;
  std::string strategy;
  sample->add_option("input", input, "frame directory, .y4m file or corpus directory");
  sample->add_option("--strategy", strategy, "event, uniform, random, stratified, keyframe or adaptive");

  auto* density = app.add_subcommand("density", "render density maps and overlays, or fuse realizations");
  std::string frame_path;
  std::string annotations_path;
  std::vector<std::string> fuse_paths;
  density->add_option("--frame", frame_path, "PGM frame the overlay is drawn on");
  density->add_option("--annotations", annotations_path, "head annotations, one x,y per line");
  density->add_option("--fuse", fuse_paths, "DMP1 realizations to fuse");

  auto* count = app.add_subcommand("count", "count blobs in DMP1 maps");
  std::vector<std::string> map_paths;
  count->add_option("maps", map_paths, "DMP1 files")->required();

  auto* eval = app.add_subcommand("eval", "score sampling runs against event labels");
  std::string runs_path;
  std::string labels_path;
  std::string triples_path;
  std::string counts_path;
  eval->add_option("--runs", runs_path, "run directory or directory of runs");
  eval->add_option("--labels", labels_path, "labels file or directory");
  eval->add_option("--triples", triples_path, "name,tp,fp,fn lines");
  eval->add_option("--counts", counts_path, "predicted,actual lines for MAE");

  auto* pipeline = app.add_subcommand("pipeline", "sample, preprocess, render, count and evaluate");
  pipeline->add_option("input", input, "frame directory, .y4m file or corpus directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_validation;
  }

  try {
    PipelineConfig config = config_path.empty() ? PipelineConfig{} : load_config(config_path);
    if (!output.empty()) config.output_dir = output;
    if (workers) config.workers = *workers;
    if (seed) {
      config.synth.seed = *seed;
      config.sampler.params.seed = *seed;
    }
    if (!input.empty()) config.input = input;
    if (!strategy.empty()) {
      try {
        config.sampler.strategy = parse_strategy(strategy);
      } catch (const ArgumentError& e) {
        throw ValidationError("sampler.strategy", e.what());
      }
    }
    config.validate();

    if (synth->parsed()) {
      for (const std::string& name : cmd_synth(config)) std::cout << (config.output_dir / name).string() << "\n";
    } else if (sample->parsed()) {
      const auto runs = cmd_sample(config);
      const auto videos = discover_videos(config.input);
      for (std::size_t i = 0; i < runs.size(); ++i) {
        std::cout << videos[i].name << ": saved " << runs[i].saved_indices.size() << " of " << runs[i].total_frames
                  << "\n";
      }
    } else if (density->parsed()) {
      if (!fuse_paths.empty()) {
        std::vector<fs::path> paths(fuse_paths.begin(), fuse_paths.end());
        const fs::path out = output.empty() ? fs::path("fused.dmp1") : fs::path(output);
        const DensityMap fused = cmd_fuse(config, paths, out);
        std::cout << out.string() << ": integral " << format_double(fused.integral()) << "\n";
      } else {
        if (frame_path.empty()) throw ValidationError("density", "missing --frame");
        if (annotations_path.empty()) throw ValidationError("density", "missing --annotations (or --fuse)");
        const auto result = cmd_density(config, frame_path, annotations_path, config.output_dir);
        std::cout << "blobs " << result.blob_count << ", integral " << format_double(result.map.integral()) << "\n";
      }
    } else if (count->parsed()) {
      std::vector<fs::path> paths(map_paths.begin(), map_paths.end());
      const std::string csv = cmd_count(config, paths);
      std::cout << csv;
      if (!output.empty()) {
        ensure_dir(config.output_dir);
        write_text_atomic(config.output_dir / "counts.csv", csv);
      }
    } else if (eval->parsed()) {
      if (!triples_path.empty()) {
        std::cout << triples_table(slurp(triples_path));
      } else {
        if (runs_path.empty() || labels_path.empty()) {
          throw ValidationError("eval", "need --runs and --labels, or --triples");
        }
        const auto reports = cmd_eval(runs_path, labels_path, config.eval_slack);
        std::cout << metrics_table(reports);
        if (!output.empty()) {
          ensure_dir(config.output_dir);
          write_text_atomic(config.output_dir / "metrics.csv", reports_to_csv(reports));
        }
      }
      if (!counts_path.empty()) std::cout << "MAE " << format_double(counts_mae(slurp(counts_path))) << "\n";
    } else if (pipeline->parsed()) {
      const PipelineSummary summary = cmd_pipeline(config);
      if (!summary.reports.empty()) std::cout << metrics_table(summary.reports);
      if (summary.count_mae) std::cout << "count MAE over saved frames: " << format_double(*summary.count_mae) << "\n";
    }
    return exit_ok;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_validation;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_validation;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_io;
  } catch (const DecodeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_io;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_io;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return exit_internal;
  }
}

}  // namespace crowdflow
