#include "distcma/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "distcma/reference_stats.hpp"

namespace distcma {

namespace {

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

const char* kLayerPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52",
                               "#8172b3", "#937860", "#da8bc3", "#8c8c8c"};

// Minimal deterministic SVG scatter/strip writer; no timestamps, fixed
// precision, fixed ordering.
class SvgCanvas {
 public:
  SvgCanvas(double width, double height, std::string title, std::string xlabel,
            std::string ylabel, double xmin, double xmax, double ymin, double ymax)
      : width_(width),
        height_(height),
        title_(std::move(title)),
        xlabel_(std::move(xlabel)),
        ylabel_(std::move(ylabel)),
        xmin_(xmin),
        xmax_(xmax),
        ymin_(ymin),
        ymax_(ymax) {
    if (xmax_ <= xmin_) xmax_ = xmin_ + 1.0;
    if (ymax_ <= ymin_) ymax_ = ymin_ + 1.0;
  }

  double sx(double x) const {
    return ml_ + (x - xmin_) / (xmax_ - xmin_) * (width_ - ml_ - mr_);
  }
  double sy(double y) const {
    return height_ - mb_ - (y - ymin_) / (ymax_ - ymin_) * (height_ - mt_ - mb_);
  }

  void circle(double x, double y, double r, const std::string& color) {
    body_ += "  <circle cx=\"" + fmt2(sx(x)) + "\" cy=\"" + fmt2(sy(y)) + "\" r=\"" +
             fmt2(r) + "\" fill=\"" + color + "\" fill-opacity=\"0.8\"/>\n";
  }

  void square(double x, double y, double half, const std::string& color) {
    body_ += "  <rect x=\"" + fmt2(sx(x) - half) + "\" y=\"" + fmt2(sy(y) - half) +
             "\" width=\"" + fmt2(2 * half) + "\" height=\"" + fmt2(2 * half) +
             "\" fill=\"" + color + "\"/>\n";
  }

  // Raw rectangle in data coordinates, for heat cells.
  void cell(double x0, double x1, double y0, double y1, const std::string& color) {
    body_ += "  <rect x=\"" + fmt2(sx(x0)) + "\" y=\"" + fmt2(sy(y1)) + "\" width=\"" +
             fmt2(sx(x1) - sx(x0)) + "\" height=\"" + fmt2(sy(y0) - sy(y1)) +
             "\" fill=\"" + color + "\" stroke=\"#ffffff\"/>\n";
  }

  void label(double px, double py, const std::string& text, int size = 11,
             const std::string& anchor = "middle") {
    body_ += "  <text x=\"" + fmt2(px) + "\" y=\"" + fmt2(py) + "\" font-size=\"" +
             std::to_string(size) + "\" text-anchor=\"" + anchor +
             "\" font-family=\"sans-serif\">" + text + "</text>\n";
  }

  void legend_entry(int slot, const std::string& color, const std::string& text) {
    const double x = width_ - mr_ - 110;
    const double y = mt_ + 14 + 16.0 * slot;
    body_ += "  <circle cx=\"" + fmt2(x) + "\" cy=\"" + fmt2(y - 4) +
             "\" r=\"4\" fill=\"" + color + "\"/>\n";
    label(x + 10, y, text, 10, "start");
  }

  std::string render() const {
    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_tick(width_) +
           "\" height=\"" + fmt_tick(height_) + "\" viewBox=\"0 0 " +
           fmt_tick(width_) + " " + fmt_tick(height_) + "\">\n";
    out += "  <rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    // Axes.
    out += axis_line(ml_, height_ - mb_, width_ - mr_, height_ - mb_);
    out += axis_line(ml_, mt_, ml_, height_ - mb_);
    // Ticks.
    std::string ticks;
    for (int i = 0; i <= 4; ++i) {
      const double xv = xmin_ + (xmax_ - xmin_) * i / 4.0;
      const double px = sx(xv);
      ticks += axis_line(px, height_ - mb_, px, height_ - mb_ + 4);
      ticks += "  <text x=\"" + fmt2(px) + "\" y=\"" + fmt2(height_ - mb_ + 16) +
               "\" font-size=\"10\" text-anchor=\"middle\" font-family=\"sans-serif\">" +
               fmt_tick(round3(xv)) + "</text>\n";
      const double yv = ymin_ + (ymax_ - ymin_) * i / 4.0;
      const double py = sy(yv);
      ticks += axis_line(ml_ - 4, py, ml_, py);
      ticks += "  <text x=\"" + fmt2(ml_ - 7) + "\" y=\"" + fmt2(py + 3) +
               "\" font-size=\"10\" text-anchor=\"end\" font-family=\"sans-serif\">" +
               fmt_tick(round3(yv)) + "</text>\n";
    }
    out += ticks;
    out += "  <text x=\"" + fmt2(width_ / 2) + "\" y=\"18\" font-size=\"13\" "
           "text-anchor=\"middle\" font-family=\"sans-serif\">" + title_ + "</text>\n";
    out += "  <text x=\"" + fmt2(width_ / 2) + "\" y=\"" + fmt2(height_ - 10) +
           "\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\">" +
           xlabel_ + "</text>\n";
    out += "  <text x=\"16\" y=\"" + fmt2(height_ / 2) +
           "\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "transform=\"rotate(-90 16 " + fmt2(height_ / 2) + ")\">" + ylabel_ +
           "</text>\n";
    out += body_;
    out += "</svg>\n";
    return out;
  }

 private:
  static std::string axis_line(double x1, double y1, double x2, double y2) {
    return "  <line x1=\"" + fmt2(x1) + "\" y1=\"" + fmt2(y1) + "\" x2=\"" + fmt2(x2) +
           "\" y2=\"" + fmt2(y2) + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  }
  static double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

  double width_, height_;
  double ml_ = 70, mr_ = 130, mt_ = 30, mb_ = 50;
  std::string title_, xlabel_, ylabel_;
  double xmin_, xmax_, ymin_, ymax_;
  std::string body_;
};

// Diverging blue-white-red map centered at zero.
std::string heat_color(double v, double vmax_abs) {
  double t = vmax_abs > 0 ? std::clamp(v / vmax_abs, -1.0, 1.0) : 0.0;
  int r, g, b;
  if (t >= 0) {
    r = 255;
    g = static_cast<int>(std::lround(255 * (1.0 - t)));
    b = g;
  } else {
    b = 255;
    g = static_cast<int>(std::lround(255 * (1.0 + t)));
    r = g;
  }
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& payload) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << payload;
  if (!out) throw std::runtime_error("write failure: " + path.string());
}

std::string bool_str(bool v) { return v ? "true" : "false"; }

}  // namespace

std::string neuron_table_csv(const NeuronEffectTable& table) {
  std::string out = "model,layer,neuron,mean_nie,sd_nie,n\n";
  for (const auto& e : table.entries) {
    out += table.model_name + ',' + std::to_string(e.coord.layer) + ',' +
           std::to_string(e.coord.neuron) + ',' + format_double(e.mean_nie) + ',' +
           format_double(e.sd_nie) + ',' + std::to_string(e.n) + '\n';
  }
  return out;
}

std::string layer_summaries_csv(const std::string& model_name,
                                const std::vector<LayerSummary>& summaries,
                                LayerMode mode) {
  std::string out =
      "model,layer,depth,depth_group,mode,n_selected,selected_neurons,mean_nie,"
      "sd_nie,n\n";
  for (const auto& s : summaries) {
    std::string neurons;
    for (const auto& c : s.selected_coords) {
      if (!neurons.empty()) neurons += ';';
      neurons += std::to_string(c.neuron);
    }
    out += model_name + ',' + std::to_string(s.layer) + ',' + format_double(s.depth) +
           ',' + to_string(s.group) + ',' + to_string(mode) + ',' +
           std::to_string(s.selected_coords.size()) + ',' + neurons + ',' +
           format_double(s.mean_nie) + ',' + format_double(s.sd_nie) + ',' +
           std::to_string(s.n) + '\n';
  }
  return out;
}

std::string ttest_csv(const std::string& model_name, const TTestResult& r) {
  std::string out = "model,n,mean,sd,t,p,p_formatted,reject_h0,alpha,degenerate\n";
  out += model_name + ',' + std::to_string(r.n) + ',' + format_double(r.mean) + ',' +
         format_double(r.sd) + ',' + format_double(r.t_statistic) + ',' +
         format_double(r.p_value_one_sided) + ',' + format_p_value(r.p_value_one_sided) +
         ',' + bool_str(r.reject_h0) + ',' + format_double(r.alpha) + ',' +
         bool_str(r.degenerate) + '\n';
  return out;
}

std::string accuracy_csv(const std::string& model_name, const GroupAccuracy& acc) {
  std::string out = "model,group,accuracy_pct,correct,total\n";
  out += model_name + ",control," + fmt2(acc.control_pct) + ',' +
         std::to_string(acc.control_correct) + ',' + std::to_string(acc.control_total) +
         '\n';
  out += model_name + ",intervention," + fmt2(acc.intervention_pct) + ',' +
         std::to_string(acc.intervention_correct) + ',' +
         std::to_string(acc.intervention_total) + '\n';
  return out;
}

namespace {

std::pair<std::string, std::string> render_neuron_scatter(
    const NeuronEffectTable& table) {
  double ymin = 0.0, ymax = 0.0;
  for (const auto& e : table.entries) {
    ymin = std::min(ymin, e.mean_nie);
    ymax = std::max(ymax, e.mean_nie);
  }
  const double pad = 0.05 * std::max(ymax - ymin, 1e-6);
  SvgCanvas svg(760, 420, "Per-neuron mean NIE (" + table.model_name + ")",
                "neuron index", "mean NIE", 0,
                static_cast<double>(table.hidden_size - 1), ymin - pad, ymax + pad);
  const int n_colors = static_cast<int>(std::size(kLayerPalette));
  for (const auto& e : table.entries) {
    svg.circle(e.coord.neuron, e.mean_nie, 3.0,
               kLayerPalette[e.coord.layer % n_colors]);
  }
  for (int layer = 0; layer < table.n_layers && layer < 16; ++layer) {
    svg.legend_entry(layer, kLayerPalette[layer % n_colors],
                     "layer " + std::to_string(layer));
  }

  std::string csv = "layer,neuron,mean_nie\n";
  for (const auto& e : table.entries) {
    csv += std::to_string(e.coord.layer) + ',' + std::to_string(e.coord.neuron) + ',' +
           format_double(e.mean_nie) + '\n';
  }
  return {svg.render(), csv};
}

std::pair<std::string, std::string> render_layer_strip(
    const std::string& model_name, const std::vector<LayerSummary>& summaries) {
  double vmax = 0.0;
  for (const auto& s : summaries) vmax = std::max(vmax, std::fabs(s.mean_nie));
  SvgCanvas svg(760, 220, "Layer-wise NIE (" + model_name + ")", "layer", "", -0.5,
                static_cast<double>(summaries.size()) - 0.5, 0, 1);
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const auto& s = summaries[i];
    svg.cell(static_cast<double>(i) - 0.45, static_cast<double>(i) + 0.45, 0.25, 0.75,
             heat_color(s.mean_nie, vmax));
    svg.label(svg.sx(static_cast<double>(i)), svg.sy(0.15),
              std::to_string(s.layer) + " (" + to_string(s.group) + ")", 9);
    svg.label(svg.sx(static_cast<double>(i)), svg.sy(0.85), fmt2(s.mean_nie), 9);
  }

  std::string csv = "layer,depth,depth_group,mean_nie\n";
  for (const auto& s : summaries) {
    csv += std::to_string(s.layer) + ',' + format_double(s.depth) + ',' +
           to_string(s.group) + ',' + format_double(s.mean_nie) + '\n';
  }
  return {svg.render(), csv};
}

struct ScatterPoint {
  std::string model;
  double x;
  double y;
  bool reference;
};

std::pair<std::string, std::string> render_te_scatter(
    const std::vector<ScatterPoint>& points, const std::string& title,
    const std::string& xlabel, const std::string& x_csv_column) {
  double xmin = points.front().x, xmax = points.front().x;
  double ymin = 0.0, ymax = 0.0;
  for (const auto& p : points) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const double xpad = 0.06 * std::max(xmax - xmin, 1e-6);
  const double ypad = 0.10 * std::max(ymax - ymin, 1e-6);
  SvgCanvas svg(640, 420, title, xlabel, "mean TE", xmin - xpad, xmax + xpad,
                ymin - ypad, ymax + ypad);
  int slot = 0;
  for (const auto& p : points) {
    if (p.reference) {
      svg.circle(p.x, p.y, 4.0, "#4c72b0");
    } else {
      svg.square(p.x, p.y, 4.5, "#c44e52");
    }
    svg.legend_entry(slot++, p.reference ? "#4c72b0" : "#c44e52", p.model);
  }

  std::string csv = "model," + x_csv_column + ",mean_te,source\n";
  for (const auto& p : points) {
    csv += p.model + ',' + format_double(p.x) + ',' + format_double(p.y) + ',' +
           (p.reference ? "reference" : "run") + '\n';
  }
  return {svg.render(), csv};
}

}  // namespace

std::vector<std::filesystem::path> emit_report(const ReportBundleInputs& inputs,
                                               const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory " + out_dir.string() +
                             ": " + ec.message());
  }

  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::filesystem::path& rel, const std::string& payload) {
    const auto full = out_dir / rel;
    if (rel.has_parent_path()) {
      std::filesystem::create_directories(full.parent_path(), ec);
      if (ec) {
        throw std::runtime_error("cannot create " + full.parent_path().string() +
                                 ": " + ec.message());
      }
    }
    write_file(full, payload);
    written.push_back(rel);
  };

  if (!inputs.te_records.empty()) {
    emit("te_table.csv", effect_records_csv(inputs.te_records));
  }
  if (inputs.ttest.has_value()) {
    emit("ttest.csv", ttest_csv(inputs.model_name, *inputs.ttest));
  }
  if (inputs.accuracy.has_value()) {
    emit("accuracy.csv", accuracy_csv(inputs.model_name, *inputs.accuracy));
  }
  if (inputs.neuron_table.has_value()) {
    emit("neuron_nie.csv", neuron_table_csv(*inputs.neuron_table));
    const auto [svg, csv] = render_neuron_scatter(*inputs.neuron_table);
    emit(std::filesystem::path("figures") / "neuron_nie_scatter.svg", svg);
    emit(std::filesystem::path("figures") / "neuron_nie_scatter.csv", csv);
  }
  if (!inputs.layer_summaries.empty()) {
    emit("layer_nie.csv", layer_summaries_csv(inputs.model_name,
                                              inputs.layer_summaries,
                                              inputs.layer_mode));
    const auto [svg, csv] =
        render_layer_strip(inputs.model_name, inputs.layer_summaries);
    emit(std::filesystem::path("figures") / "layer_nie_strip.svg", svg);
    emit(std::filesystem::path("figures") / "layer_nie_strip.csv", csv);
  }

  if (inputs.ttest.has_value() && inputs.meta.has_value()) {
    std::vector<ScatterPoint> params_points, vocab_points;
    for (const auto& ref : kReferenceModelStats) {
      params_points.push_back(
          {ref.name, static_cast<double>(ref.n_parameters) / 1e6, ref.mean_te, true});
      vocab_points.push_back(
          {ref.name, static_cast<double>(ref.vocab_size) / 1e3, ref.mean_te, true});
    }
    params_points.push_back({inputs.model_name,
                             static_cast<double>(inputs.meta->n_parameters) / 1e6,
                             inputs.ttest->mean, false});
    vocab_points.push_back({inputs.model_name,
                            static_cast<double>(inputs.meta->vocab_size) / 1e3,
                            inputs.ttest->mean, false});
    {
      const auto [svg, csv] =
          render_te_scatter(params_points, "Mean TE vs parameter count",
                            "parameters (millions)", "n_parameters_millions");
      emit(std::filesystem::path("figures") / "te_vs_params.svg", svg);
      emit(std::filesystem::path("figures") / "te_vs_params.csv", csv);
    }
    {
      const auto [svg, csv] =
          render_te_scatter(vocab_points, "Mean TE vs vocabulary size",
                            "vocabulary size (thousands)", "vocab_size_thousands");
      emit(std::filesystem::path("figures") / "te_vs_vocab.svg", svg);
      emit(std::filesystem::path("figures") / "te_vs_vocab.csv", csv);
    }
  }

  if (written.empty()) {
    throw std::invalid_argument("emit_report called with nothing to write");
  }
  return written;
}

}  // namespace distcma
