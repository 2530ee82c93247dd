#include "octa/report.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "octa/checkpoint.hpp"
#include "octa/config.hpp"

namespace fs = std::filesystem;

namespace octa {

namespace {

struct RunRow {
  bool is_seg = false;
  std::string method, loss, metric, schedule, aug, pretraining, mix;
  double val = 0.0;
};

double read_summary_mean(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("mean = ", 0) == 0) return std::stod(line.substr(7));
  }
  throw std::runtime_error("summary.txt has no mean line: " + path);
}

RunRow load_run(const std::string& dir) {
  fs::path cfg_path = fs::path(dir) / "config.echo.cfg";
  if (!fs::exists(cfg_path))
    throw std::runtime_error("run dir has no config.echo.cfg (missing logs): " + dir);
  Config cfg = Config::load(cfg_path.string());

  RunRow row;
  row.is_seg = cfg.get_or("run.task", "seg") == "seg";
  row.method = cfg.get_or("model.arch", "?");
  row.loss = cfg.get_or("run.loss", "-");
  row.metric = cfg.get_or("run.selection_metric", "-");
  row.schedule = cfg.get_or("run.schedule", "-");
  row.aug = cfg.get_bool("augment.color_jitter", true) ? "All" : "No CJ";
  row.pretraining = cfg.get_or("model.pretrained", "").empty() ? "-" : "checkpoint";
  row.mix = cfg.get_or("mix.mix_prob", "0");

  fs::path summary = fs::path(dir) / "summary.txt";
  if (fs::exists(summary)) {
    row.val = read_summary_mean(summary.string());
  } else {
    fs::path meta = fs::path(dir) / "checkpoint.meta";
    if (!fs::exists(meta))
      throw std::runtime_error("run dir has neither summary.txt nor checkpoint.meta: " + dir);
    row.val = read_checkpoint_meta(meta.string()).val_metric_value;
  }
  return row;
}

}  // namespace

std::string write_report(const std::vector<std::string>& run_dirs) {
  if (run_dirs.empty()) throw std::invalid_argument("no run directories given");

  std::vector<RunRow> rows;
  for (const auto& d : run_dirs) rows.push_back(load_run(d));

  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  bool any_seg = false, any_cls = false;
  for (const auto& r : rows) (r.is_seg ? any_seg : any_cls) = true;

  if (any_seg) {
    os << "ID  Method     Loss          Metric  Schedule  Aug    ValScore\n";
    int id = 1;
    for (const auto& r : rows) {
      if (!r.is_seg) continue;
      os << std::left << std::setw(4) << id++ << std::setw(11) << r.method << std::setw(14)
         << r.loss << std::setw(8) << r.metric << std::setw(10) << r.schedule << std::setw(7)
         << r.aug << r.val << "\n";
    }
  }
  if (any_cls) {
    if (any_seg) os << "\n";
    os << "ID  Method     Pre-training  Mix    ValKappa\n";
    int id = 1;
    for (const auto& r : rows) {
      if (r.is_seg) continue;
      os << std::left << std::setw(4) << id++ << std::setw(11) << r.method << std::setw(14)
         << r.pretraining << std::setw(7) << r.mix << r.val << "\n";
    }
  }
  return os.str();
}

}  // namespace octa
