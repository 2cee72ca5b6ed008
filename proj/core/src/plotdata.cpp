#include "stratflow/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace stratflow {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct Series {
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  const char* key;
  const char* axis;
  const char* title;
};

constexpr PlotSpec kPlots[] = {
    {"f", "k", "f(x_k)"},
    {"tail_diameter", "k", "tail diameter diam(x_[k,K])"},
    {"window_ratio", "t", "window ratio s_t / (t+1)^(1/zeta)"},
    {"criticality", "k", "criticality distance"},
};

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing report " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    throw std::runtime_error("unreadable report " + path.string() + ": " + ex.what());
  }
}

// Expands summary files into the diagnostics reports they list.
std::vector<fs::path> expand(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> out;
  for (const auto& p : inputs) {
    const json j = read_json_file(p);
    if (j.contains("reports")) {
      for (const auto& name : j["reports"]) out.push_back(p.parent_path() / name.get<std::string>());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

Series load_series(const json& report, const PlotSpec& spec, const fs::path& path) {
  const auto it = report.find("series");
  if (it == report.end() || !it->contains(spec.key))
    throw std::runtime_error("report " + path.string() + " has no '" + spec.key + "' series");
  const auto& s = (*it)[spec.key];
  Series out;
  for (const auto& v : s.at(spec.axis)) out.x.push_back(v.get<double>());
  for (const auto& v : s.at("value")) out.y.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
  if (out.x.size() != out.y.size()) throw std::runtime_error("ragged series in " + path.string());
  return out;
}

struct Aggregate {
  std::vector<double> x, mean, lo, hi;
};

Aggregate aggregate(const std::vector<Series>& runs, const PlotSpec& spec) {
  // Rows present in every run (common prefix, as grids are shared by
  // construction unless K or thinning differ).
  std::size_t rows = runs.front().x.size();
  for (const auto& r : runs) rows = std::min(rows, r.x.size());
  Aggregate a;
  for (std::size_t i = 0; i < rows; ++i) {
    const double x = runs.front().x[i];
    double sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& r : runs) {
      if (r.x[i] != x) throw std::runtime_error(std::string("series '") + spec.key + "' grids differ across reports");
      sum += r.y[i];
      lo = std::min(lo, r.y[i]);
      hi = std::max(hi, r.y[i]);
    }
    a.x.push_back(x);
    a.mean.push_back(sum / static_cast<double>(runs.size()));
    a.lo.push_back(lo);
    a.hi.push_back(hi);
  }
  return a;
}

void write_csv(const fs::path& path, const PlotSpec& spec, const Aggregate& a, bool band) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << spec.axis << (band ? ",mean,min,max\n" : ",value\n");
  for (std::size_t i = 0; i < a.x.size(); ++i) {
    out << format_real(a.x[i]) << ',' << format_real(a.mean[i]);
    if (band) out << ',' << format_real(a.lo[i]) << ',' << format_real(a.hi[i]);
    out << '\n';
  }
}

// Minimal line chart: log axes when the data is positive over several
// decades, a shaded min/max band for aggregates.
void write_svg(const fs::path& path, const PlotSpec& spec, const Aggregate& a, bool band) {
  constexpr double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < a.x.size(); ++i)
    if (std::isfinite(a.mean[i]) && std::isfinite(a.lo[i]) && std::isfinite(a.hi[i])) rows.push_back(i);

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool logx = false, logy = false;
  if (!rows.empty()) {
    xmin = ymin = std::numeric_limits<double>::infinity();
    xmax = ymax = -xmin;
    for (auto i : rows) {
      xmin = std::min(xmin, a.x[i]);
      xmax = std::max(xmax, a.x[i]);
      ymin = std::min(ymin, a.lo[i]);
      ymax = std::max(ymax, a.hi[i]);
    }
    logx = xmin > 0 && xmax / xmin > 100;
    if (!logx && xmin >= 0 && xmax > 100) {
      // Shift k = 0 out of the way so the long tail can use a log axis.
      logx = true;
      xmin = std::max(xmin, 1.0);
    }
    logy = ymin > 0 && ymax / ymin > 100;
  }
  auto tx = [&](double x) {
    if (logx) x = std::log10(std::max(x, xmin));
    const double lo = logx ? std::log10(xmin) : xmin, hi = logx ? std::log10(xmax) : xmax;
    return L + (hi > lo ? (x - lo) / (hi - lo) : 0.5) * (W - L - R);
  };
  auto ty = [&](double y) {
    if (logy) y = std::log10(y);
    const double lo = logy ? std::log10(ymin) : ymin, hi = logy ? std::log10(ymax) : ymax;
    return H - B - (hi > lo ? (y - lo) / (hi - lo) : 0.5) * (H - T - B);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
      << spec.title << "</text>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  auto label = [&](double x, double y, const std::string& text, const char* anchor) {
    svg << "<text x=\"" << x << "\" y=\"" << y << "\" text-anchor=\"" << anchor
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << text << "</text>\n";
  };
  auto num = [](double v) {
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
  };
  label(W / 2, H - 12, std::string(spec.axis) + (logx ? " (log)" : ""), "middle");
  label(L - 6, H - B, num(ymin), "end");
  label(L - 6, T + 10, num(ymax), "end");
  label(L, H - B + 16, num(xmin), "middle");
  label(W - R, H - B + 16, num(xmax), "middle");
  if (logy) label(L - 6, (T + H - B) / 2, "log", "end");

  std::vector<std::size_t> drawn;
  for (auto i : rows)
    if ((!logx || a.x[i] >= xmin) && (!logy || (a.lo[i] > 0 && a.mean[i] > 0))) drawn.push_back(i);
  if (drawn.empty()) {
    label(W / 2, H / 2, "no data", "middle");
  } else {
    if (band) {
      svg << "<polygon fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\" points=\"";
      for (auto i : drawn) svg << tx(a.x[i]) << ',' << ty(a.hi[i]) << ' ';
      for (auto it = drawn.rbegin(); it != drawn.rend(); ++it) svg << tx(a.x[*it]) << ',' << ty(a.lo[*it]) << ' ';
      svg << "\"/>\n";
    }
    svg << "<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\" points=\"";
    for (auto i : drawn) svg << tx(a.x[i]) << ',' << ty(a.mean[i]) << ' ';
    svg << "\"/>\n";
  }
  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << svg.str();
}

}  // namespace

std::vector<fs::path> emit_plotdata(const std::vector<fs::path>& inputs, const fs::path& out_dir) {
  if (inputs.empty()) throw std::runtime_error("no reports given");
  const auto reports = expand(inputs);
  if (reports.empty()) throw std::runtime_error("empty seed set: no diagnostics reports to plot");
  std::vector<json> loaded;
  for (const auto& p : reports) loaded.push_back(read_json_file(p));

  fs::create_directories(out_dir);
  std::vector<fs::path> files;
  const bool band = loaded.size() > 1;
  for (const auto& spec : kPlots) {
    std::vector<Series> runs;
    for (std::size_t i = 0; i < loaded.size(); ++i) runs.push_back(load_series(loaded[i], spec, reports[i]));
    const auto agg = aggregate(runs, spec);
    const auto csv = out_dir / (std::string(spec.key) + ".csv");
    const auto svg = out_dir / (std::string(spec.key) + ".svg");
    write_csv(csv, spec, agg, band);
    write_svg(svg, spec, agg, band);
    files.push_back(csv);
    files.push_back(svg);
  }
  return files;
}

}  // namespace stratflow
