#include "eegvc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "eegvc/montage.hpp"

namespace eegvc {

double mae(std::span<const double> f, std::span<const double> g) {
  if (f.size() != g.size() || f.empty()) {
    throw ShapeError("mae: lengths " + std::to_string(f.size()) + " vs " +
                     std::to_string(g.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += std::fabs(f[i] - g[i]);
  return acc / static_cast<double>(f.size());
}

double cc(std::span<const double> f, std::span<const double> g) {
  if (f.size() != g.size() || f.size() < 2) {
    throw ShapeError("cc: lengths " + std::to_string(f.size()) + " vs " +
                     std::to_string(g.size()));
  }
  const double n = static_cast<double>(f.size());
  double mf = 0.0, mg = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    mf += f[i];
    mg += g[i];
  }
  mf /= n;
  mg /= n;
  double sff = 0.0, sgg = 0.0, sfg = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double df = f[i] - mf;
    const double dg = g[i] - mg;
    sff += df * df;
    sgg += dg * dg;
    sfg += df * dg;
  }
  if (std::sqrt(sff / n) < 1e-12 || std::sqrt(sgg / n) < 1e-12) {
    throw Error("cc: degenerate (constant) signal");
  }
  return std::clamp(sfg / std::sqrt(sff * sgg), -1.0, 1.0);
}

namespace {

struct Moments {
  double mean = 0.0, sd = 0.0;
};

Moments aggregate(const std::vector<double>& v) {
  Moments m;
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - m.mean) * (x - m.mean);
  m.sd = std::sqrt(var / static_cast<double>(v.size()));
  return m;
}

}  // namespace

EvalSummary evaluate_channels(const std::vector<Mat>& gen,
                              const std::vector<Mat>& target) {
  const Montage& mon = montage();
  const std::size_t nch = mon.canonical.size();
  if (gen.size() != target.size() || gen.empty()) {
    throw ShapeError("evaluate_channels: " + std::to_string(gen.size()) +
                     " generated vs " + std::to_string(target.size()) +
                     " reference blocks");
  }
  for (std::size_t i = 0; i < gen.size(); ++i) {
    if (!gen[i].same_shape(target[i]) || gen[i].rows != nch) {
      throw ShapeError("evaluate_channels: block " + std::to_string(i) +
                       " is " + std::to_string(gen[i].rows) + "x" +
                       std::to_string(gen[i].cols) + " vs " +
                       std::to_string(target[i].rows) + "x" +
                       std::to_string(target[i].cols));
    }
  }

  EvalSummary s;
  s.channels.resize(nch);
  for (std::size_t ch = 0; ch < nch; ++ch) {
    std::vector<double> ccs, maes;
    std::size_t degenerate = 0;
    for (std::size_t b = 0; b < gen.size(); ++b) {
      std::span<const double> gRow(gen[b].row(ch), gen[b].cols);
      std::span<const double> tRow(target[b].row(ch), target[b].cols);
      try {
        const double c = cc(tRow, gRow);
        ccs.push_back(c);
        maes.push_back(mae(tRow, gRow));
      } catch (const Error&) {
        ++degenerate;
      }
    }
    ChannelReport& r = s.channels[ch];
    r.channel = mon.canonical[ch];
    const Moments mc = aggregate(ccs);
    const Moments mm = aggregate(maes);
    r.cc_mean = mc.mean;
    r.cc_std = mc.sd;
    r.mae_mean = mm.mean;
    r.mae_std = mm.sd;
    r.n_segments = ccs.size();
    r.n_degenerate = degenerate;
  }

  auto mean_over = [&](const std::vector<std::size_t>& idx, bool use_cc) {
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i : idx) {
      if (s.channels[i].n_segments == 0) continue;
      acc += use_cc ? s.channels[i].cc_mean : s.channels[i].mae_mean;
      ++n;
    }
    return n ? acc / static_cast<double>(n) : 0.0;
  };
  std::vector<std::size_t> all(nch);
  for (std::size_t i = 0; i < nch; ++i) all[i] = i;
  s.virtual_cc_mean = mean_over(mon.virtual_idx, true);
  s.virtual_mae_mean = mean_over(mon.virtual_idx, false);
  s.source_cc_mean = mean_over(mon.source_idx, true);
  s.source_mae_mean = mean_over(mon.source_idx, false);
  s.all_cc_mean = mean_over(all, true);
  s.all_mae_mean = mean_over(all, false);
  return s;
}

void write_channel_report_csv(const EvalSummary& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "channel,cc_mean,cc_std,mae_mean,mae_std,n_segments\n";
  char line[256];
  for (const ChannelReport& r : s.channels) {
    std::snprintf(line, sizeof(line), "%s,%.6f,%.6f,%.6f,%.6f,%zu\n",
                  r.channel.c_str(), r.cc_mean, r.cc_std, r.mae_mean, r.mae_std,
                  r.n_segments);
    out << line;
  }
}

}  // namespace eegvc
