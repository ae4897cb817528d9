#include "rulgn/plot.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace rulgn {

namespace {

struct Axis {
  double lo, hi;
  double to_px(double v, double px_lo, double px_hi) const {
    const double f = hi > lo ? (v - lo) / (hi - lo) : 0.5;
    return px_lo + f * (px_hi - px_lo);
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void write_svg(const std::string& path, const std::string& experiment,
               std::vector<AnchorRow> rows) {
  std::sort(rows.begin(), rows.end(),
            [](const AnchorRow& a, const AnchorRow& b) { return a.timestamp < b.timestamp; });

  const double width = 820, height = 520;
  const double ml = 80, mr = 20, mt = 40, mb = 60;  // margins
  const double px0 = ml, px1 = width - mr, py0 = height - mb, py1 = mt;

  Axis x{rows.front().timestamp, rows.back().timestamp};
  if (x.hi == x.lo) x.hi = x.lo + 1.0;
  double ymax = 0;
  for (const AnchorRow& r : rows) ymax = std::max({ymax, r.q95, r.true_rul});
  Axis y{0.0, ymax * 1.05 + 1e-12};

  std::ofstream os(path);
  if (!os) throw std::runtime_error("plot: cannot write " + path);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
     << "experiment " << experiment << "</text>\n";

  // q05..q95 band
  std::ostringstream band;
  for (const AnchorRow& r : rows) {
    band << x.to_px(r.timestamp, px0, px1) << "," << y.to_px(r.q05, py0, py1) << " ";
  }
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
    band << x.to_px(it->timestamp, px0, px1) << "," << y.to_px(it->q95, py0, py1) << " ";
  }
  os << "<polygon points=\"" << band.str()
     << "\" fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\"/>\n";

  auto polyline = [&](auto getter, const char* color, const char* dash) {
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"";
    if (dash) os << " stroke-dasharray=\"" << dash << "\"";
    os << " points=\"";
    for (const AnchorRow& r : rows) {
      os << x.to_px(r.timestamp, px0, px1) << "," << y.to_px(getter(r), py0, py1) << " ";
    }
    os << "\"/>\n";
  };
  polyline([](const AnchorRow& r) { return r.q50; }, "#1f77b4", nullptr);
  polyline([](const AnchorRow& r) { return r.true_rul; }, "#d62728", "6,4");

  // axes
  os << "<line x1=\"" << px0 << "\" y1=\"" << py0 << "\" x2=\"" << px1 << "\" y2=\"" << py0
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << px0 << "\" y1=\"" << py0 << "\" x2=\"" << px0 << "\" y2=\"" << py1
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = x.lo + (x.hi - x.lo) * i / 5.0;
    const double px = x.to_px(fx, px0, px1);
    os << "<line x1=\"" << px << "\" y1=\"" << py0 << "\" x2=\"" << px << "\" y2=\"" << py0 + 5
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << px << "\" y=\"" << py0 + 20 << "\" text-anchor=\"middle\" font-size=\"11\">"
       << num(fx) << "</text>\n";
    const double fy = y.lo + (y.hi - y.lo) * i / 5.0;
    const double py = y.to_px(fy, py0, py1);
    os << "<line x1=\"" << px0 - 5 << "\" y1=\"" << py << "\" x2=\"" << px0 << "\" y2=\"" << py
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << px0 - 8 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
       << num(fy) << "</text>\n";
  }
  os << "<text x=\"" << (px0 + px1) / 2 << "\" y=\"" << height - 16
     << "\" text-anchor=\"middle\" font-size=\"13\">time [time units]</text>\n";
  os << "<text x=\"20\" y=\"" << (py0 + py1) / 2
     << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 20 "
     << (py0 + py1) / 2 << ")\">RUL [time units]</text>\n";

  // legend
  os << "<text x=\"" << px1 - 10 << "\" y=\"" << py1 + 16
     << "\" text-anchor=\"end\" font-size=\"12\" fill=\"#1f77b4\">median</text>\n";
  os << "<text x=\"" << px1 - 10 << "\" y=\"" << py1 + 32
     << "\" text-anchor=\"end\" font-size=\"12\" fill=\"#d62728\">true RUL</text>\n";
  os << "<text x=\"" << px1 - 10 << "\" y=\"" << py1 + 48
     << "\" text-anchor=\"end\" font-size=\"12\" fill=\"#6baed6\">q05-q95</text>\n";
  os << "</svg>\n";
}

}  // namespace

std::vector<std::string> write_rul_svgs(const std::string& out_dir,
                                        const std::vector<AnchorRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("plot: empty report");
  std::filesystem::create_directories(out_dir);
  std::map<std::string, std::vector<AnchorRow>> by_experiment;
  for (const AnchorRow& r : rows) by_experiment[r.experiment].push_back(r);
  std::vector<std::string> written;
  for (const auto& [id, group] : by_experiment) {
    const std::string path = out_dir + "/rul_" + id + ".svg";
    write_svg(path, id, group);
    written.push_back(path);
  }
  return written;
}

}  // namespace rulgn
