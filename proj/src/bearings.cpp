#include "rulgn/bearings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace rulgn {

SplitTable default_split() {
  SplitTable t;
  auto add = [&](const char* id, SplitSet set, const char* cond, double failure, int obs) {
    t[id] = SplitEntry{set, cond, failure, obs};
  };
  add("1_2", SplitSet::Train, "A", 8700, 871);
  add("1_3", SplitSet::Train, "A", 23740, 2375);
  add("1_4", SplitSet::Train, "A", 14270, 1428);
  add("1_5", SplitSet::Train, "A", 24620, 2463);
  add("2_1", SplitSet::Train, "B", 9100, 911);
  add("2_5", SplitSet::Train, "B", 23100, 2311);
  add("2_6", SplitSet::Train, "B", 7000, 701);
  add("3_3", SplitSet::Train, "C", 4330, 434);

  add("1_1", SplitSet::Test, "A", 28072, 2803);
  add("1_6", SplitSet::Test, "A", 24470, 2448);
  add("1_7", SplitSet::Test, "A", 22580, 2259);
  add("2_2", SplitSet::Test, "B", 7960, 797);
  add("2_3", SplitSet::Test, "B", 19540, 1955);
  add("2_4", SplitSet::Test, "B", 7500, 751);
  add("2_7", SplitSet::Test, "B", 2290, 230);
  add("3_1", SplitSet::Test, "C", 5140, 515);
  add("3_2", SplitSet::Test, "C", 16360, 1637);
  return t;
}

namespace {

std::vector<double> parse_row(const std::string& line, const fs::path& file, int line_no) {
  std::vector<double> fields;
  const char* p = line.data();
  const char* end = p + line.size();
  while (p < end) {
    while (p < end && (*p == ',' || *p == ';' || *p == ' ' || *p == '\t' || *p == '\r')) ++p;
    if (p >= end) break;
    double v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc()) {
      throw std::runtime_error("femto: malformed row at " + file.string() + ":" +
                               std::to_string(line_no));
    }
    fields.push_back(v);
    p = next;
  }
  return fields;
}

struct ParsedSegment {
  Tensor tensor;            // [2 x samples]
  double clock = -1.0;      // seconds within the day, when rows carry clock fields
};

ParsedSegment parse_segment_file(const fs::path& file, int samples_per_segment) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("femto: cannot open " + file.string());
  const int n = samples_per_segment;
  Array values(2 * n);
  int rows = 0;
  double clock = -1.0;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> fields = parse_row(line, file, line_no);
    if (fields.size() < 2) {
      throw std::runtime_error("femto: malformed row at " + file.string() + ":" +
                               std::to_string(line_no));
    }
    if (rows >= n) {
      throw std::runtime_error("femto: " + file.string() + " has more than " + std::to_string(n) +
                               " samples");
    }
    // last two columns are horizontal/vertical acceleration; leading columns
    // (clock fields), if any, are ignored beyond the first row's timestamp
    values[rows] = fields[fields.size() - 2];
    values[n + rows] = fields[fields.size() - 1];
    if (rows == 0 && fields.size() >= 6) {
      clock = fields[0] * 3600.0 + fields[1] * 60.0 + fields[2] + fields[3] * 1e-6;
    }
    ++rows;
  }
  if (rows != n) {
    throw std::runtime_error("femto: " + file.string() + " has " + std::to_string(rows) +
                             " samples, expected " + std::to_string(n));
  }
  return ParsedSegment{Tensor({2, n}, std::move(values)), clock};
}

fs::path experiment_dir(const fs::path& root, const std::string& id) {
  for (const std::string& name : {id, "Bearing" + id}) {
    if (fs::is_directory(root / name)) return root / name;
  }
  throw std::runtime_error("femto: experiment " + id + " listed in the split is missing under " +
                           root.string());
}

Experiment load_experiment(const fs::path& root, const std::string& id, const SplitEntry& entry,
                           const FemtoOptions& opt) {
  const fs::path dir = experiment_dir(root, id);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (name.rfind("acc", 0) == 0) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("femto: no acc* segment files in " + dir.string());

  const int diff = std::abs(static_cast<int>(files.size()) - entry.expected_obs);
  if (diff > 0) {
    std::ostringstream msg;
    msg << "femto: experiment " << id << " has " << files.size() << " segments, split expects "
        << entry.expected_obs;
    if (diff > 2 || opt.strict_counts) throw std::runtime_error(msg.str());
    std::cerr << msg.str() << " (tolerated)\n";
  }

  std::vector<ParsedSegment> segments;
  segments.reserve(files.size());
  for (const fs::path& f : files) segments.push_back(parse_segment_file(f, opt.samples_per_segment));

  // in-file clocks override the nominal spacing when they are usable
  bool use_clock = std::all_of(segments.begin(), segments.end(),
                               [](const ParsedSegment& s) { return s.clock >= 0.0; });
  if (use_clock) {
    for (size_t k = 1; k < segments.size(); ++k) {
      if (segments[k].clock <= segments[k - 1].clock) {
        use_clock = false;
        break;
      }
    }
  }

  Experiment exp;
  exp.id = id;
  exp.condition = entry.condition;
  exp.failure_time = entry.failure_time;
  for (size_t k = 0; k < segments.size(); ++k) {
    const double t = use_clock ? segments[k].clock - segments[0].clock
                               : static_cast<double>(k) * opt.segment_spacing;
    if (t > entry.failure_time) {
      std::cerr << "femto: experiment " << id << " drops segment " << k
                << " recorded after the failure time\n";
      break;
    }
    exp.timestamps.push_back(t);
    exp.segments.push_back(segments[k].tensor);
  }
  exp.validate();
  return exp;
}

}  // namespace

FemtoDataset load_femto(const std::string& root, const SplitTable& split,
                        const FemtoOptions& options) {
  if (split.empty()) throw std::invalid_argument("femto: empty split table");
  if (!(options.segment_spacing > 0) || options.samples_per_segment < 1) {
    throw std::invalid_argument("femto: bad options");
  }
  FemtoDataset ds;
  for (const auto& [id, entry] : split) {
    Experiment exp = load_experiment(root, id, entry, options);
    (entry.set == SplitSet::Train ? ds.train : ds.test).push_back(std::move(exp));
  }
  return ds;
}

}  // namespace rulgn
