#include "crowdflow/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <system_error>

#include "crowdflow/errors.hpp"

namespace crowdflow {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError(std::string(key), "cannot parse '" + std::string(text) + "' as a number");
  }
  return value;
}

template <class T>
std::string format_number(T value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

struct Entry {
  std::string key;
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, std::string_view)> set;
};

template <class T, class F>
Entry numeric(std::string key, F field) {
  return {key,
          [field](const PipelineConfig& c) { return format_number<T>(field(c)); },
          [field, key](PipelineConfig& c, std::string_view v) { field(c) = parse_number<T>(key, v); }};
}

template <class E, class F, class ToString, class Parse>
Entry enumerated(std::string key, F field, ToString to_str, Parse parse) {
  return {key,
          [field, to_str](const PipelineConfig& c) { return std::string(to_str(field(c))); },
          [field, parse, key](PipelineConfig& c, std::string_view v) {
            try {
              field(c) = parse(v);
            } catch (const ArgumentError& e) {
              throw ValidationError(key, e.what());
            }
          }};
}

std::string_view edge_order_name(EdgeOrder o) {
  return o == EdgeOrder::resize_then_edge ? "resize_then_edge" : "edge_then_resize";
}

EdgeOrder parse_edge_order(std::string_view v) {
  if (v == "resize_then_edge") return EdgeOrder::resize_then_edge;
  if (v == "edge_then_resize") return EdgeOrder::edge_then_resize;
  throw ArgumentError("expected resize_then_edge or edge_then_resize, got '" + std::string(v) + "'");
}

const std::vector<Entry>& entries() {
  using C = PipelineConfig;
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t;
    t.push_back({"input", [](const C& c) { return c.input; }, [](C& c, std::string_view v) { c.input = v; }});
    t.push_back({"output_dir", [](const C& c) { return c.output_dir.string(); },
                 [](C& c, std::string_view v) { c.output_dir = std::string(v); }});

    t.push_back(numeric<int>("frame.width", [](auto& c) -> auto& { return c.frame.width; }));
    t.push_back(numeric<int>("frame.height", [](auto& c) -> auto& { return c.frame.height; }));
    t.push_back(numeric<double>("frame.edge_alpha", [](auto& c) -> auto& { return c.frame.edge_alpha; }));
    t.push_back(enumerated<EdgeOrder>("frame.edge_order", [](auto& c) -> auto& { return c.frame.order; },
                                      edge_order_name, parse_edge_order));

    t.push_back(enumerated<Strategy>("sampler.strategy", [](auto& c) -> auto& { return c.sampler.strategy; },
                                     [](Strategy s) { return to_string(s); }, parse_strategy));
    t.push_back(numeric<double>("sampler.motion_threshold", [](auto& c) -> auto& { return c.sampler.motion_threshold; }));
    t.push_back(numeric<std::size_t>("sampler.min_gap", [](auto& c) -> auto& { return c.sampler.min_gap; }));
    t.push_back(enumerated<ReferencePolicy>(
        "sampler.reference", [](auto& c) -> auto& { return c.sampler.reference; },
        [](ReferencePolicy p) { return to_string(p); }, parse_reference_policy));
    t.push_back({"sampler.calibration_percentile",
                 [](const C& c) {
                   return c.sampler.calibration_percentile ? format_number(*c.sampler.calibration_percentile)
                                                           : std::string("none");
                 },
                 [](C& c, std::string_view v) {
                   if (v == "none") {
                     c.sampler.calibration_percentile.reset();
                   } else {
                     c.sampler.calibration_percentile = parse_number<double>("sampler.calibration_percentile", v);
                   }
                 }});
    t.push_back(numeric<std::size_t>("sampler.stride", [](auto& c) -> auto& { return c.sampler.params.stride; }));
    t.push_back(numeric<std::size_t>("sampler.count", [](auto& c) -> auto& { return c.sampler.params.count; }));
    t.push_back(numeric<std::size_t>("sampler.segments", [](auto& c) -> auto& { return c.sampler.params.segments; }));
    t.push_back(
        numeric<std::size_t>("sampler.per_segment", [](auto& c) -> auto& { return c.sampler.params.per_segment; }));
    t.push_back(numeric<std::uint64_t>("sampler.seed", [](auto& c) -> auto& { return c.sampler.params.seed; }));
    t.push_back(numeric<std::size_t>("sampler.window", [](auto& c) -> auto& { return c.sampler.params.window; }));
    t.push_back(numeric<double>("sampler.sensitivity", [](auto& c) -> auto& { return c.sampler.params.sensitivity; }));

    t.push_back(numeric<int>("flow.pyramid_levels", [](auto& c) -> auto& { return c.flow.pyramid_levels; }));
    t.push_back(numeric<double>("flow.pyramid_scale", [](auto& c) -> auto& { return c.flow.pyramid_scale; }));
    t.push_back(numeric<int>("flow.window_radius", [](auto& c) -> auto& { return c.flow.window_radius; }));
    t.push_back(numeric<int>("flow.iterations_per_level", [](auto& c) -> auto& { return c.flow.iterations_per_level; }));
    t.push_back(numeric<int>("flow.poly_radius", [](auto& c) -> auto& { return c.flow.poly_radius; }));
    t.push_back(numeric<double>("flow.poly_sigma", [](auto& c) -> auto& { return c.flow.poly_sigma; }));

    t.push_back(numeric<double>("density.sigma", [](auto& c) -> auto& { return c.kernel.sigma; }));
    t.push_back(numeric<double>("density.truncation_radius", [](auto& c) -> auto& { return c.kernel.truncation_radius; }));
    t.push_back(numeric<double>("density.blob_tau_relative", [](auto& c) -> auto& { return c.blob_tau_relative; }));
    t.push_back(numeric<double>("fusion.accept_gamma", [](auto& c) -> auto& { return c.fusion.accept_gamma; }));
    t.push_back(numeric<std::size_t>("eval.slack", [](auto& c) -> auto& { return c.eval_slack; }));

    t.push_back(numeric<std::size_t>("synth.videos", [](auto& c) -> auto& { return c.synth.videos; }));
    t.push_back(numeric<int>("synth.width", [](auto& c) -> auto& { return c.synth.base.width; }));
    t.push_back(numeric<int>("synth.height", [](auto& c) -> auto& { return c.synth.base.height; }));
    t.push_back(numeric<std::size_t>("synth.frames", [](auto& c) -> auto& { return c.synth.base.frames; }));
    t.push_back(numeric<int>("synth.fps_num", [](auto& c) -> auto& { return c.synth.base.fps.num; }));
    t.push_back(numeric<int>("synth.fps_den", [](auto& c) -> auto& { return c.synth.base.fps.den; }));
    t.push_back(numeric<int>("synth.n_people", [](auto& c) -> auto& { return c.synth.base.n_people; }));
    t.push_back(numeric<double>("synth.base_speed", [](auto& c) -> auto& { return c.synth.base.base_speed; }));
    t.push_back(numeric<double>("synth.dot_sigma", [](auto& c) -> auto& { return c.synth.base.dot_sigma; }));
    t.push_back(numeric<std::size_t>("synth.min_bursts", [](auto& c) -> auto& { return c.synth.min_bursts; }));
    t.push_back(numeric<std::size_t>("synth.max_bursts", [](auto& c) -> auto& { return c.synth.max_bursts; }));
    t.push_back(numeric<double>("synth.burst_fraction", [](auto& c) -> auto& { return c.synth.burst_fraction; }));
    t.push_back(numeric<double>("synth.min_multiplier", [](auto& c) -> auto& { return c.synth.min_multiplier; }));
    t.push_back(numeric<double>("synth.max_multiplier", [](auto& c) -> auto& { return c.synth.max_multiplier; }));
    t.push_back(numeric<std::uint64_t>("synth.seed", [](auto& c) -> auto& { return c.synth.seed; }));

    t.push_back(numeric<std::size_t>("run.workers", [](auto& c) -> auto& { return c.workers; }));
    return t;
  }();
  return table;
}

template <class Fn>
void rethrow_as(const std::string& field, Fn&& fn) {
  try {
    fn();
  } catch (const ArgumentError& e) {
    throw ValidationError(field, e.what());
  }
}

}  // namespace

PipelineConfig::PipelineConfig() { sampler.calibration_percentile = 85.0; }

void PipelineConfig::validate() const {
  if (frame.width < 1) throw ValidationError("frame.width", "must be >= 1");
  if (frame.height < 1) throw ValidationError("frame.height", "must be >= 1");
  if (!(frame.edge_alpha >= 0.0 && frame.edge_alpha <= 1.0)) throw ValidationError("frame.edge_alpha", "must be in [0,1]");
  rethrow_as("sampler", [&] { sampler.validate(); });
  rethrow_as("flow", [&] { flow.validate(); });
  rethrow_as("density", [&] { kernel.validate(); });
  if (!(blob_tau_relative > 0.0 && blob_tau_relative < 1.0)) {
    throw ValidationError("density.blob_tau_relative", "must be in (0,1)");
  }
  rethrow_as("fusion.accept_gamma", [&] { fusion.validate(); });
  synth.validate();
  if (workers < 1) throw ValidationError("run.workers", "must be >= 1");
}

PipelineConfig parse_config(std::string_view text) {
  std::map<std::string, const Entry*, std::less<>> by_key;
  for (const Entry& e : entries()) by_key.emplace(e.key, &e);

  PipelineConfig config;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view raw = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("line " + std::to_string(line_no), "expected 'key = value'");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = by_key.find(key);
    if (it == by_key.end()) throw ValidationError(std::string(key), "unknown key");
    if (!seen.emplace(key).second) throw ValidationError(std::string(key), "duplicate key");
    it->second->set(config, value);
  }
  config.validate();
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  return parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string serialize_config(const PipelineConfig& config) {
  std::string out;
  for (const Entry& e : entries()) {
    out += e.key;
    out += " = ";
    out += e.get(config);
    out += '\n';
  }
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Entry& e : entries()) keys.push_back(e.key);
  return keys;
}

}  // namespace crowdflow
