#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cagerl/adversary.hpp"
#include "cagerl/ddpg.hpp"
#include "cagerl/harness.hpp"

// Static SVG line charts for training and adversarial curves.
namespace cagerl::plot {

struct Series {
  std::string label;
  std::vector<double> y;      // x is the index
  std::vector<double> spread;  // optional +/- band around y, same length
  std::string color = "#1f77b4";
  double opacity = 1.0;
};

struct Figure {
  std::string title;
  std::string x_label = "episode";
  std::string y_label;
  std::vector<Series> series;
  int width = 800;
  int height = 450;
};

std::string render_svg(const Figure& figure);
void write_svg(const Figure& figure, const std::filesystem::path& path);

// Raw episode returns with a moving-average overlay.
Figure reward_figure(const std::vector<ddpg::EpisodeRecord>& log, int window,
                     const std::string& title = "episode return");
// Mean minimum headway across runs with a one-std band.
Figure min_th_figure(const harness::AdversarialCurves& curves,
                     const std::string& title = "minimum headway per episode");
// Minimum headway of a single adversary log.
Figure adversary_log_figure(const std::vector<adversary::AdversaryEpisode>& log, int window,
                            const std::string& title = "minimum headway per episode");

}  // namespace cagerl::plot
