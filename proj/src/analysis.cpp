// Copyright 2026 The hardpair Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hardpair/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "hardpair/error.hpp"
#include "hardpair/report_io.hpp"

namespace hardpair {

std::vector<CriteriaCurve> criteria_curve(const std::vector<LabeledReport>& reports) {
  std::vector<CriteriaCurve> curves;
  for (const auto& [label, report] : reports) {
    if (!report) throw Error(ErrorCode::invalid_argument, "null report for '" + label + "'");
    if (!curves.empty() && report->results.size() != reports.front().report->results.size()) {
      throw Error(ErrorCode::size_mismatch, "reports cover different target sets");
    }
    std::size_t k = 0;
    std::size_t used = 0;
    std::vector<double> sums;
    for (const auto& r : report->results) {
      if (r.noise) continue;
      if (used == 0) {
        k = r.ranked.size();
        sums.assign(k, 0.0);
      } else if (r.ranked.size() != k) {
        throw Error(ErrorCode::format, "report '" + label + "' mixes hard-pair list lengths");
      }
      for (std::size_t t = 0; t < k; ++t) sums[t] += r.ranked[t].score;
      ++used;
    }
    if (used == 0) {
      throw Error(ErrorCode::invalid_argument, "report '" + label + "' has no non-noise targets");
    }
    CriteriaCurve c;
    c.label = label;
    for (std::size_t t = 0; t < k; ++t) {
      c.rank.push_back(t + 1);
      c.mean_score.push_back(sums[t] / static_cast<double>(used));
    }
    curves.push_back(std::move(c));
  }
  return curves;
}

namespace {

// Counts pairs i < j with y[i] > y[j] while merge-sorting y.
std::uint64_t count_inversions(std::vector<std::size_t>& y, std::vector<std::size_t>& buf,
                               std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inv = count_inversions(y, buf, lo, mid) + count_inversions(y, buf, mid, hi);
  std::size_t a = lo, b = mid, o = lo;
  while (a < mid && b < hi) {
    if (y[a] <= y[b]) {
      buf[o++] = y[a++];
    } else {
      inv += mid - a;
      buf[o++] = y[b++];
    }
  }
  while (a < mid) buf[o++] = y[a++];
  while (b < hi) buf[o++] = y[b++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            y.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

// Sum of t(t-1)/2 over runs of equal values in a sorted range.
template <typename It, typename Eq>
std::uint64_t tied_pairs(It first, It last, Eq eq) {
  std::uint64_t total = 0;
  while (first != last) {
    It run = first;
    std::uint64_t t = 0;
    while (run != last && eq(*run, *first)) {
      ++run;
      ++t;
    }
    total += t * (t - 1) / 2;
    first = run;
  }
  return total;
}

std::unordered_map<std::size_t, std::size_t> positions(const std::vector<std::size_t>& ranking,
                                                       std::string_view which) {
  std::unordered_map<std::size_t, std::size_t> pos;
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    if (!pos.emplace(ranking[r], r + 1).second) {
      throw Error(ErrorCode::invalid_argument, "duplicate id " + std::to_string(ranking[r]) +
                                                   " in ranking " + std::string(which));
    }
  }
  return pos;
}

}  // namespace

double kendall_tau(const std::vector<std::size_t>& ranking_a,
                   const std::vector<std::size_t>& ranking_b) {
  if (ranking_a.empty() || ranking_b.empty()) {
    throw Error(ErrorCode::invalid_argument, "kendall_tau needs non-empty rankings");
  }
  auto pos_a = positions(ranking_a, "a");
  auto pos_b = positions(ranking_b, "b");

  std::vector<std::size_t> ids = ranking_a;
  for (std::size_t id : ranking_b) {
    if (!pos_a.contains(id)) ids.push_back(id);
  }
  const std::size_t n = ids.size();
  const std::size_t missing_a = ranking_a.size() + 1;
  const std::size_t missing_b = ranking_b.size() + 1;
  std::vector<std::pair<std::size_t, std::size_t>> xy(n);
  for (std::size_t t = 0; t < n; ++t) {
    auto ia = pos_a.find(ids[t]);
    auto ib = pos_b.find(ids[t]);
    xy[t] = {ia == pos_a.end() ? missing_a : ia->second, ib == pos_b.end() ? missing_b : ib->second};
  }

  // Knight's algorithm: sort by (x, y), then inversions of y are the
  // discordant pairs.
  std::sort(xy.begin(), xy.end());
  const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t ties_x =
      tied_pairs(xy.begin(), xy.end(), [](const auto& p, const auto& q) { return p.first == q.first; });
  const std::uint64_t ties_xy = tied_pairs(xy.begin(), xy.end(), [](const auto& p, const auto& q) { return p == q; });
  std::vector<std::size_t> y(n), buf(n);
  for (std::size_t t = 0; t < n; ++t) y[t] = xy[t].second;
  const std::uint64_t discordant = count_inversions(y, buf, 0, n);
  const std::uint64_t ties_y = tied_pairs(y.begin(), y.end(), std::equal_to<>{});

  const double denom = std::sqrt(static_cast<double>(n0 - ties_x) * static_cast<double>(n0 - ties_y));
  if (denom == 0.0) {
    bool same = std::all_of(xy.begin(), xy.end(), [](const auto& p) { return p.first == p.second; });
    return same ? 1.0 : 0.0;
  }
  const double numer = static_cast<double>(n0) - static_cast<double>(ties_x) -
                       static_cast<double>(ties_y) + static_cast<double>(ties_xy) -
                       2.0 * static_cast<double>(discordant);
  return std::clamp(numer / denom, -1.0, 1.0);
}

RankSimilarityMatrix tau_sensitivity(const PairDataset& dataset, const std::vector<double>& taus,
                                     std::size_t k, std::uint64_t seed,
                                     std::optional<std::size_t> pool_size, int workers) {
  if (taus.empty()) throw Error(ErrorCode::invalid_config, "tau grid is empty");
  for (double t : taus) check_threshold(t);
  std::vector<MiningReport> reports;
  for (double t : taus) {
    MiningConfig c;
    c.k = k;
    c.tau_image = t;
    c.tau_text = t;
    c.seed = seed;
    c.pool_size = pool_size;
    c.workers = workers;
    reports.push_back(pool_size ? mine_fast(dataset, c) : mine_hpm(dataset, c));
  }
  const std::size_t g = taus.size();
  RankSimilarityMatrix m;
  m.taus = taus;
  m.kendall = Matrix<double>(g, g, 1.0);
  m.compared = Matrix<double>(g, g, static_cast<double>(dataset.size()));
  auto ids = [](const HardPairResult& r) {
    std::vector<std::size_t> out;
    for (const auto& h : r.ranked) out.push_back(h.index);
    return out;
  };
  for (std::size_t a = 0; a < g; ++a) {
    for (std::size_t b = a + 1; b < g; ++b) {
      double sum = 0.0;
      std::size_t used = 0;
      for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& ra = reports[a].results[i];
        const auto& rb = reports[b].results[i];
        if (ra.noise || rb.noise) continue;
        sum += kendall_tau(ids(ra), ids(rb));
        ++used;
      }
      double v = used ? sum / static_cast<double>(used) : std::numeric_limits<double>::quiet_NaN();
      m.kendall(a, b) = m.kendall(b, a) = v;
      m.compared(a, b) = m.compared(b, a) = static_cast<double>(used);
    }
  }
  return m;
}

std::string format_curves_wide_csv(const std::vector<CriteriaCurve>& curves) {
  std::string out = "rank";
  std::size_t k = 0;
  for (const auto& c : curves) {
    out += "," + c.label;
    k = std::max(k, c.rank.size());
  }
  out += "\n";
  for (std::size_t r = 0; r < k; ++r) {
    out += std::to_string(r + 1);
    for (const auto& c : curves) {
      out += ",";
      if (r < c.mean_score.size()) out += format_double(c.mean_score[r]);
    }
    out += "\n";
  }
  return out;
}

std::string format_curves_long_csv(const std::vector<CriteriaCurve>& curves) {
  std::string out = "rank,pool,mean\n";
  for (const auto& c : curves) {
    for (std::size_t r = 0; r < c.rank.size(); ++r) {
      out += std::to_string(c.rank[r]) + "," + c.label + "," + format_double(c.mean_score[r]) + "\n";
    }
  }
  return out;
}

std::string format_rank_similarity_csv(const RankSimilarityMatrix& m) {
  std::string out = "# statistic=kendall_tau_b missing_ids=tied_rank_len_plus_1 aggregate=mean_over_non_noise_targets\n";
  out += "tau";
  for (double t : m.taus) out += "," + format_double(t);
  out += "\n";
  for (std::size_t a = 0; a < m.taus.size(); ++a) {
    out += format_double(m.taus[a]);
    for (std::size_t b = 0; b < m.taus.size(); ++b) out += "," + format_double(m.kendall(a, b));
    out += "\n";
  }
  return out;
}

}  // namespace hardpair
