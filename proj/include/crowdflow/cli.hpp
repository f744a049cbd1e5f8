#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "crowdflow/config.hpp"
#include "crowdflow/eval.hpp"

namespace crowdflow {

namespace fs = std::filesystem;

enum ExitCode : int { exit_ok = 0, exit_validation = 1, exit_io = 2, exit_internal = 3 };

/// One video found under an input path. Either a frames/ directory of PGMs
/// (with optional annotations/ and labels.txt siblings) or a .y4m file.
struct VideoInput {
  std::string name;
  fs::path root;
  fs::path frames;  // frames directory or .y4m file
  bool y4m = false;

  fs::path annotations_dir() const { return root / "annotations"; }
  fs::path labels_file() const { return root / "labels.txt"; }
};

/// Accepts a .y4m file, a video directory (containing frames/ or frames
/// directly), or a corpus directory whose subdirectories are videos.
std::vector<VideoInput> discover_videos(const fs::path& input);
std::unique_ptr<FrameSource> open_video(const VideoInput& video);

/// Runs fn(0..n-1) on up to `workers` threads; rethrows the first failure.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

// Layout of a synthesized video: frames/frame_NNNNNN.pgm,
// annotations/frame_NNNNNN.txt, labels.txt, manifest.txt.
void write_synth_video(const SynthSpec& spec, const fs::path& dir);
std::vector<std::string> cmd_synth(const PipelineConfig& config);

/// Runs the configured sampler on frames resized to the working resolution
/// and writes run.csv, manifest.txt, the gate threshold (event runs) and the
/// preprocessed saved frames under out_dir/frames.
SamplingRun sample_video(FrameSource& source, const PipelineConfig& config, const fs::path& out_dir);
std::vector<SamplingRun> cmd_sample(const PipelineConfig& config);

/// Rebuilds a run from run.csv, manifest.txt and threshold.txt. The manifest
/// must list exactly the saved indices of run.csv.
SamplingRun load_run(const fs::path& dir);

struct DensityOutput {
  DensityMap map;
  int blob_count = 0;
};

/// Renders annotations at the frame's resolution and writes map.dmp1 plus an
/// overlay PGM.
DensityOutput cmd_density(const PipelineConfig& config, const fs::path& frame, const fs::path& annotations,
                          const fs::path& out_dir);
/// Fuses external DMP1 realizations into out_file.
DensityMap cmd_fuse(const PipelineConfig& config, const std::vector<fs::path>& realizations, const fs::path& out_file);

/// CSV "file,blob_count,integral_count".
std::string cmd_count(const PipelineConfig& config, const std::vector<fs::path>& maps);

/// Pairs run directories (each holding run.csv and manifest.txt) with label
/// files by name. Throws ValidationError listing any unpaired names.
std::vector<MetricsReport> cmd_eval(const fs::path& runs, const fs::path& labels, std::size_t slack);

/// Lines of "name,tp,fp,fn" rendered as a metrics table.
std::string triples_table(std::string_view text);
/// Lines of "predicted,actual".
double counts_mae(std::string_view text);

struct PipelineSummary {
  std::vector<MetricsReport> reports;  // per video, then the aggregate
  std::optional<double> count_mae;
};

/// sample -> resize + edge overlay -> density -> count -> evaluate, one video per worker.
PipelineSummary cmd_pipeline(const PipelineConfig& config);

/// Entry point of the crowdflow tool; returns an ExitCode.
int run_cli(int argc, char** argv);

}  // namespace crowdflow
