#include "emnh/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

namespace emnh::cli {

namespace {

const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

void panel(std::ostringstream& os, const std::vector<std::vector<Vector>>& fronts, int ix, int iy, double x0, double y0,
           double size) {
  double lo[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  double hi[2] = {-lo[0], -lo[1]};
  for (const auto& f : fronts)
    for (const auto& p : f) {
      lo[0] = std::min(lo[0], p(ix));
      hi[0] = std::max(hi[0], p(ix));
      lo[1] = std::min(lo[1], p(iy));
      hi[1] = std::max(hi[1], p(iy));
    }
  if (!(lo[0] <= hi[0])) lo[0] = lo[1] = 0.0, hi[0] = hi[1] = 1.0;
  for (int a = 0; a < 2; ++a)
    if (hi[a] - lo[a] < 1e-12) lo[a] -= 0.5, hi[a] += 0.5;
  const double pad = 40.0, inner = size - 2 * pad;
  auto sx = [&](double v) { return x0 + pad + (v - lo[0]) / (hi[0] - lo[0]) * inner; };
  auto sy = [&](double v) { return y0 + size - pad - (v - lo[1]) / (hi[1] - lo[1]) * inner; };
  os << "<rect x=\"" << x0 + pad << "\" y=\"" << y0 + pad << "\" width=\"" << inner << "\" height=\"" << inner
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  os << "<text x=\"" << x0 + size / 2 << "\" y=\"" << y0 + size - 8 << "\" text-anchor=\"middle\">f" << ix + 1 << "</text>\n";
  os << "<text x=\"" << x0 + 12 << "\" y=\"" << y0 + size / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 "
     << x0 + 12 << ' ' << y0 + size / 2 << ")\">f" << iy + 1 << "</text>\n";
  os << "<text x=\"" << x0 + pad << "\" y=\"" << y0 + size - pad + 14 << "\" font-size=\"10\">" << num(lo[0]) << "</text>\n";
  os << "<text x=\"" << x0 + size - pad << "\" y=\"" << y0 + size - pad + 14 << "\" font-size=\"10\" text-anchor=\"end\">"
     << num(hi[0]) << "</text>\n";
  os << "<text x=\"" << x0 + pad - 4 << "\" y=\"" << y0 + size - pad << "\" font-size=\"10\" text-anchor=\"end\">"
     << num(lo[1]) << "</text>\n";
  os << "<text x=\"" << x0 + pad - 4 << "\" y=\"" << y0 + pad + 8 << "\" font-size=\"10\" text-anchor=\"end\">"
     << num(hi[1]) << "</text>\n";
  for (std::size_t k = 0; k < fronts.size(); ++k)
    for (const auto& p : fronts[k])
      os << "<circle cx=\"" << num(sx(p(ix))) << "\" cy=\"" << num(sy(p(iy))) << "\" r=\"2.5\" fill=\"" << kColors[k % 8]
         << "\"/>\n";
}

}  // namespace

std::string svg_scatter(const std::vector<std::vector<Vector>>& fronts, const std::vector<std::string>& labels,
                        const std::string& title, const nlohmann::json& provenance) {
  Eigen::Index M = 2;
  for (const auto& f : fronts)
    if (!f.empty()) M = f.front().size();
  if (M != 2 && M != 3) throw UsageError("plots support 2 or 3 objectives, got " + std::to_string(M));
  const double size = 360.0;
  const int panels = M == 2 ? 1 : 3;
  const double width = size * panels, height = size + 70.0 + 16.0 * static_cast<double>(labels.size());
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<!-- version=" << provenance.value("version", "") << " config_hash=" << provenance.value("config_hash", "")
     << " seed=" << provenance.value("seed", 0ULL) << " -->\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << esc(title) << "</text>\n";
  if (M == 2) {
    panel(os, fronts, 0, 1, 0.0, 30.0, size);
  } else {
    const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    for (int p = 0; p < 3; ++p) panel(os, fronts, pairs[p][0], pairs[p][1], size * p, 30.0, size);
  }
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const double y = size + 50.0 + 16.0 * static_cast<double>(k);
    os << "<circle cx=\"50\" cy=\"" << y - 4 << "\" r=\"4\" fill=\"" << kColors[k % 8] << "\"/>\n";
    os << "<text x=\"60\" y=\"" << y << "\">" << esc(labels[k]) << " (" << fronts[k].size() << " points)</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace emnh::cli
