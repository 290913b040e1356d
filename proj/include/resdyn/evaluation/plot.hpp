// Copyright 2026 The resdyn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "resdyn/evaluation/evaluate.hpp"

namespace resdyn {

struct Traces {
  std::vector<double> t;
  std::vector<DynState> gt, base, corrected;
};

/// Per-step traces of one run. Steps without a full history keep the base estimate.
inline Traces compute_traces(const ResidualPredictor& predictor, const Run& run, std::size_t seq_len) {
  if (seq_len == 0) throw std::invalid_argument("compute_traces: seq_len must be >= 1");
  Traces tr;
  for (const auto& r : run.records) {
    tr.t.push_back(r.t);
    tr.gt.push_back(r.s_gt);
    tr.base.push_back(r.s_hat);
    tr.corrected.push_back(r.s_hat);
  }
  std::vector<Window> own;
  for (std::size_t t = seq_len - 1; t + 1 < run.records.size(); ++t) own.push_back({&run, t});
  const auto pred = predictor(own);
  for (std::size_t k = 0; k < own.size(); ++k) tr.corrected[own[k].t + 1] = run.records[own[k].t + 1].s_hat + pred[k];
  return tr;
}

/// Mean |a - b| per state over the whole trace.
inline std::array<double, kStateDim> mean_distance(const std::vector<DynState>& a, const std::vector<DynState>& b) {
  std::array<double, kStateDim> d{};
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (std::size_t i = 0; i < kStateDim; ++i) d[i] += std::abs(a[k][i] - b[k][i]);
  }
  for (auto& v : d) v /= static_cast<double>(std::max<std::size_t>(1, a.size()));
  return d;
}

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}
inline std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace detail

/// Three stacked panels (v_x, v_y, w_z) with GT, base and corrected curves.
inline std::string traces_svg(const Traces& tr, const std::string& title) {
  constexpr double kW = 900, kPanelH = 220, kLeft = 80, kRight = 20, kTop = 40, kGap = 30;
  constexpr std::array<const char*, kStateDim> kLabels{"v_x [m/s]", "v_y [m/s]", "w_z [rad/s]"};
  const double total_h = kTop + kStateDim * (kPanelH + kGap) + 30;
  const double t0 = tr.t.empty() ? 0.0 : tr.t.front();
  const double t1 = tr.t.empty() || tr.t.back() <= t0 ? t0 + 1.0 : tr.t.back();
  const double plot_w = kW - kLeft - kRight;

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << total_h << "\" viewBox=\"0 0 "
    << kW << ' ' << total_h << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";

  struct Curve {
    const std::vector<DynState>* data;
    const char* name;
    const char* color;
    const char* dash;
  };
  const std::array<Curve, 3> curves{{{&tr.gt, "ground truth", "#000000", ""},
                                     {&tr.base, "base model", "#d62728", "6,4"},
                                     {&tr.corrected, "corrected", "#1f77b4", ""}}};

  for (std::size_t i = 0; i < kStateDim; ++i) {
    const double top = kTop + static_cast<double>(i) * (kPanelH + kGap);
    double lo = 0, hi = 0;
    bool first = true;
    for (const auto& c : curves) {
      for (const auto& v : *c.data) {
        lo = first ? v[i] : std::min(lo, v[i]);
        hi = first ? v[i] : std::max(hi, v[i]);
        first = false;
      }
    }
    if (hi - lo < 1e-12) {
      lo -= 1.0;
      hi += 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    auto X = [&](double t) { return kLeft + (t - t0) / (t1 - t0) * plot_w; };
    auto Y = [&](double v) { return top + (hi - v) / (hi - lo) * kPanelH; };

    s << "<g>\n<rect x=\"" << kLeft << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\"" << kPanelH
      << "\" fill=\"none\" stroke=\"#888\"/>\n";
    s << "<text x=\"15\" y=\"" << top + kPanelH / 2 << "\" transform=\"rotate(-90 15 " << top + kPanelH / 2
      << ")\" text-anchor=\"middle\">" << kLabels[i] << "</text>\n";
    for (double v : {lo + pad, 0.5 * (lo + hi), hi - pad}) {
      s << "<text x=\"" << kLeft - 5 << "\" y=\"" << detail::fmt(Y(v) + 4) << "\" text-anchor=\"end\">" << detail::tick(v)
        << "</text>\n";
    }
    for (const auto& c : curves) {
      s << "<polyline fill=\"none\" stroke=\"" << c.color << "\" stroke-width=\"1.2\"";
      if (*c.dash) s << " stroke-dasharray=\"" << c.dash << '"';
      s << " points=\"";
      for (std::size_t k = 0; k < c.data->size(); ++k) s << detail::fmt(X(tr.t[k])) << ',' << detail::fmt(Y((*c.data)[k][i])) << ' ';
      s << "\"/>\n";
    }
    s << "</g>\n";
  }
  const double axis_y = kTop + kStateDim * (kPanelH + kGap) - kGap + 15;
  s << "<text x=\"" << kLeft << "\" y=\"" << axis_y << "\">" << detail::tick(t0) << "</text>\n"
    << "<text x=\"" << kW - kRight << "\" y=\"" << axis_y << "\" text-anchor=\"end\">" << detail::tick(t1) << "</text>\n"
    << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << axis_y + 15 << "\" text-anchor=\"middle\">t [s]</text>\n";
  double lx = kLeft + 10;
  for (const auto& c : curves) {
    s << "<line x1=\"" << lx << "\" y1=\"30\" x2=\"" << lx + 25 << "\" y2=\"30\" stroke=\"" << c.color << '"';
    if (*c.dash) s << " stroke-dasharray=\"" << c.dash << '"';
    s << "/><text x=\"" << lx + 30 << "\" y=\"34\">" << c.name << "</text>\n";
    lx += 140;
  }
  s << "</svg>\n";
  return s.str();
}

inline Traces plot_traces(const ResidualPredictor& predictor, const Run& run, std::size_t seq_len,
                          const std::filesystem::path& out_svg) {
  Traces tr = compute_traces(predictor, run, seq_len);
  std::ofstream out(out_svg, std::ios::binary);
  if (!out) throw DatasetIoError("cannot write " + out_svg.string());
  out << traces_svg(tr, run.condition_id + ", m = " + format_double(run.mass) + " kg");
  if (!out) throw DatasetIoError("write failed: " + out_svg.string());
  return tr;
}

inline Traces plot_traces(const Checkpoint& ckpt, const Run& run, const std::filesystem::path& out_svg) {
  return plot_traces(checkpoint_predictor(ckpt), run, ckpt.config.seq_len, out_svg);
}

}  // namespace resdyn
