#include "crowdflow/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace crowdflow {

void EventLabels::validate() const {
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].start > windows[i].end) throw ArgumentError("event window start exceeds end");
    if (i > 0 && windows[i].start <= windows[i - 1].end) {
      throw ArgumentError("event windows must be sorted and non-overlapping");
    }
  }
}

EventLabels parse_labels(std::string_view text) {
  EventLabels labels;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (!line.empty()) {
      const auto comma = line.find(',');
      EventWindow w;
      bool ok = comma != std::string_view::npos;
      if (ok) {
        auto r1 = std::from_chars(line.data(), line.data() + comma, w.start);
        auto r2 = std::from_chars(line.data() + comma + 1, line.data() + line.size(), w.end);
        ok = r1.ec == std::errc{} && r1.ptr == line.data() + comma && r2.ec == std::errc{} &&
             r2.ptr == line.data() + line.size();
      }
      if (!ok) throw DecodeError("labels: line " + std::to_string(line_no) + " is not \"start,end\"", pos);
      labels.windows.push_back(w);
    }
    pos = end + 1;
  }
  labels.validate();
  return labels;
}

std::string format_labels(const EventLabels& labels) {
  std::string out;
  for (const auto& w : labels.windows) out += std::to_string(w.start) + "," + std::to_string(w.end) + "\n";
  return out;
}

MatchCounts match_events(const SamplingRun& run, const EventLabels& labels, std::size_t slack) {
  labels.validate();
  const auto& windows = labels.windows;
  std::vector<bool> matched(windows.size(), false);
  MatchCounts c;
  for (std::size_t frame : run.saved_indices) {
    bool inside_any = false;
    bool hit = false;
    for (std::size_t w = 0; w < windows.size(); ++w) {
      const std::size_t lo = windows[w].start > slack ? windows[w].start - slack : 0;
      const std::size_t hi = windows[w].end + slack;
      if (frame < lo || frame > hi) continue;
      inside_any = true;
      if (!matched[w]) {
        matched[w] = true;
        hit = true;
        break;
      }
    }
    if (hit) ++c.tp;
    if (inside_any) {
      ++c.correct;
    } else {
      ++c.fp;
    }
  }
  c.fn = static_cast<std::size_t>(std::count(matched.begin(), matched.end(), false));
  return c;
}

namespace {

GuardedRatio guarded(double num, double den) {
  if (den == 0.0) return {0.0, false};
  return {num / den, true};
}

GuardedRatio harmonic(const GuardedRatio& p, const GuardedRatio& r) {
  if (!p.defined || !r.defined) return {0.0, false};
  return guarded(2.0 * p.value * r.value, p.value + r.value);
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

double round_to(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

PrfScores precision_recall_f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  PrfScores s;
  s.precision = guarded(static_cast<double>(tp), static_cast<double>(tp + fp));
  s.recall = guarded(static_cast<double>(tp), static_cast<double>(tp + fn));
  s.f1 = harmonic(s.precision, s.recall);
  return s;
}

PrfScores tabulated_prf(std::size_t tp, std::size_t fp, std::size_t fn, int decimals) {
  PrfScores s = precision_recall_f1(tp, fp, fn);
  s.precision.value = round_to(s.precision.value, decimals);
  s.recall.value = round_to(s.recall.value, decimals);
  s.f1 = harmonic(s.precision, s.recall);
  s.f1.value = round_to(s.f1.value, decimals);
  return s;
}

double reduction_ratio(std::size_t saved, std::size_t total) {
  if (total == 0) throw ArgumentError("reduction ratio: total frames must be >= 1");
  if (saved > total) throw ArgumentError("reduction ratio: saved exceeds total");
  return 1.0 - static_cast<double>(saved) / static_cast<double>(total);
}

GuardedRatio correct_frame_rate(std::size_t correct, std::size_t saved) {
  if (correct > saved) throw ArgumentError("correct frame rate: correct exceeds saved");
  return guarded(static_cast<double>(correct), static_cast<double>(saved));
}

double mae(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) throw ArgumentError("mae: length mismatch");
  if (predicted.empty()) throw ArgumentError("mae: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) sum += std::abs(predicted[i] - actual[i]);
  return sum / static_cast<double>(predicted.size());
}

MagnitudeSplit magnitude_split(const SamplingRun& run) {
  if (!run.has_magnitudes()) throw ArgumentError("magnitude split: run carries no per-frame magnitudes");
  if (run.per_frame_magnitude.size() != run.total_frames) {
    throw ArgumentError("magnitude split: magnitudes do not cover every frame");
  }
  MagnitudeSplit s;
  std::size_t next = 0;
  for (std::size_t i = 0; i < run.total_frames; ++i) {
    const bool saved = next < run.saved_indices.size() && run.saved_indices[next] == i;
    if (saved) ++next;
    const auto& m = run.per_frame_magnitude[i];
    if (!m) continue;
    if (saved) {
      s.sampled_sum += *m;
      ++s.sampled_count;
    } else {
      s.skipped_sum += *m;
      ++s.skipped_count;
    }
  }
  s.sampled = guarded(s.sampled_sum, static_cast<double>(s.sampled_count));
  s.skipped = guarded(s.skipped_sum, static_cast<double>(s.skipped_count));
  return s;
}

MetricsReport evaluate(std::string name, const SamplingRun& run, const EventLabels& labels, std::size_t slack) {
  run.validate();
  MetricsReport r;
  r.name = std::move(name);
  r.total_frames = run.total_frames;
  r.saved_frames = run.saved_indices.size();
  r.counts = match_events(run, labels, slack);
  r.scores = precision_recall_f1(r.counts.tp, r.counts.fp, r.counts.fn);
  r.reduction = reduction_ratio(r.saved_frames, r.total_frames);
  r.correct_rate = correct_frame_rate(r.counts.correct, r.saved_frames);
  if (run.has_magnitudes()) r.magnitudes = magnitude_split(run);
  r.threshold = run.threshold;
  return r;
}

MetricsReport aggregate(const std::vector<MetricsReport>& reports, std::string name) {
  MetricsReport a;
  a.name = std::move(name);
  bool all_magnitudes = !reports.empty();
  MagnitudeSplit split;
  for (const auto& r : reports) {
    a.total_frames += r.total_frames;
    a.saved_frames += r.saved_frames;
    a.counts.tp += r.counts.tp;
    a.counts.fp += r.counts.fp;
    a.counts.fn += r.counts.fn;
    a.counts.correct += r.counts.correct;
    if (r.magnitudes) {
      split.sampled_sum += r.magnitudes->sampled_sum;
      split.skipped_sum += r.magnitudes->skipped_sum;
      split.sampled_count += r.magnitudes->sampled_count;
      split.skipped_count += r.magnitudes->skipped_count;
    } else {
      all_magnitudes = false;
    }
  }
  a.scores = precision_recall_f1(a.counts.tp, a.counts.fp, a.counts.fn);
  a.reduction = a.total_frames > 0 ? reduction_ratio(a.saved_frames, a.total_frames) : 0.0;
  a.correct_rate = correct_frame_rate(a.counts.correct, a.saved_frames);
  if (all_magnitudes) {
    split.sampled = guarded(split.sampled_sum, static_cast<double>(split.sampled_count));
    split.skipped = guarded(split.skipped_sum, static_cast<double>(split.skipped_count));
    a.magnitudes = split;
  }
  return a;
}

std::string reports_to_csv(const std::vector<MetricsReport>& reports) {
  std::ostringstream out;
  out << "name,total,saved,tp,fp,fn,precision,recall,f1,reduction_ratio,correct_frame_rate,"
         "mean_magnitude_sampled,mean_magnitude_skipped,undefined\n";
  for (const auto& r : reports) {
    std::vector<std::string> undefined;
    auto flag = [&](const GuardedRatio& g, const char* what) {
      if (!g.defined) undefined.emplace_back(what);
    };
    flag(r.scores.precision, "precision");
    flag(r.scores.recall, "recall");
    flag(r.scores.f1, "f1");
    flag(r.correct_rate, "correct_frame_rate");
    out << r.name << ',' << r.total_frames << ',' << r.saved_frames << ',' << r.counts.tp << ',' << r.counts.fp
        << ',' << r.counts.fn << ',' << fixed(r.scores.precision.value, 6) << ','
        << fixed(r.scores.recall.value, 6) << ',' << fixed(r.scores.f1.value, 6) << ',' << fixed(r.reduction, 4)
        << ',' << fixed(r.correct_rate.value, 4) << ',';
    if (r.magnitudes) {
      flag(r.magnitudes->sampled, "mean_magnitude_sampled");
      flag(r.magnitudes->skipped, "mean_magnitude_skipped");
      out << fixed(r.magnitudes->sampled.value, 6) << ',' << fixed(r.magnitudes->skipped.value, 6);
    } else {
      out << ',';
    }
    out << ',';
    for (std::size_t i = 0; i < undefined.size(); ++i) out << (i ? ";" : "") << undefined[i];
    out << '\n';
  }
  return out.str();
}

namespace {

std::string render_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) widths[c] = header[c].size();
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == 0) {
        out << row[c] << std::string(widths[c] - row[c].size(), ' ');
      } else {
        out << "  " << std::string(widths[c] - row[c].size(), ' ') << row[c];
      }
    }
    out << '\n';
  };
  emit(header);
  std::size_t total = 0;
  for (std::size_t w : widths) total += w + 2;
  out << std::string(total - 2, '-') << '\n';
  for (const auto& row : rows) emit(row);
  return out.str();
}

std::string ratio_cell(const GuardedRatio& g, int decimals) { return g.defined ? fixed(g.value, decimals) : "n/a"; }

}  // namespace

std::string metrics_table(const std::vector<MetricsReport>& reports) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : reports) {
    const PrfScores t = tabulated_prf(r.counts.tp, r.counts.fp, r.counts.fn);
    std::vector<std::string> row{r.name,
                                 std::to_string(r.counts.tp),
                                 std::to_string(r.counts.fp),
                                 std::to_string(r.counts.fn),
                                 ratio_cell(t.precision, 3),
                                 ratio_cell(t.recall, 3),
                                 ratio_cell(t.f1, 3),
                                 r.total_frames > 0 ? fixed(r.reduction, 4) : std::string("-")};
    if (r.magnitudes) {
      row.push_back(ratio_cell(r.magnitudes->sampled, 4));
      row.push_back(ratio_cell(r.magnitudes->skipped, 4));
    } else {
      row.insert(row.end(), {"-", "-"});
    }
    rows.push_back(std::move(row));
  }
  return render_table({"Video", "TP", "FP", "FN", "Precision", "Recall", "F1", "Reduction", "MagSampled", "MagSkipped"},
                      rows);
}

std::string strategy_table(const std::vector<MetricsReport>& reports) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : reports) {
    rows.push_back({r.name, std::to_string(r.saved_frames), std::to_string(r.total_frames),
                    std::to_string(r.counts.correct),
                    r.correct_rate.defined ? fixed(100.0 * r.correct_rate.value, 1) + "%" : "n/a"});
  }
  return render_table({"Sampling Method", "Saved Frames", "Total Frames", "Correct Frames", "Correct Frame Rate"}, rows);
}

}  // namespace crowdflow
