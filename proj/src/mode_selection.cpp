#include "ssmsel/mode_selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ssmsel {

void SelectionConfig::validate() const {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0, 1)");
  if (N < 1) throw std::invalid_argument("N must be at least 1");
  if (!(linear_energy_threshold > 0.0 && linear_energy_threshold <= 1.0)) {
    throw std::invalid_argument("linear energy threshold must lie in (0, 1]");
  }
  if (linear_cap && *linear_cap < 1) throw std::invalid_argument("linear cap must be at least 1");
  if (initial && initial->empty()) throw std::invalid_argument("initial set is empty");
}

int SelectionConfig::effective_linear_cap() const {
  return linear_cap ? *linear_cap : (2 * N + 2) / 3;
}

LinearRanking rank_linear_participation(const ModalModel& modal, const ForcingSpec& forcing,
                                        int N, double threshold, std::optional<int> cap) {
  if (!(forcing.omega > 0.0)) throw std::invalid_argument("forcing frequency must be positive");
  if (N < 1) throw std::invalid_argument("N must be at least 1");
  const SecondOrderSystem& sys = *modal.system;
  if (forcing.load().isZero(0.0)) {
    throw std::invalid_argument("forcing is zero; linear participation is undefined");
  }
  const Eigen::VectorXcd x = linear_response_complex(sys, forcing, forcing.omega);
  const Eigen::VectorXcd z =
      modal.U.transpose().cast<std::complex<double>>() * (sys.M.cast<std::complex<double>>() * x);

  LinearRanking r;
  const int n = modal.size();
  r.participation.resize(n);
  for (int i = 0; i < n; ++i) r.participation[i] = std::abs(z[i]);
  r.total = std::accumulate(r.participation.begin(), r.participation.end(), 0.0);
  if (r.total == 0.0) throw std::invalid_argument("forcing does not excite any mode");

  const int limit = std::min(cap ? *cap : (2 * N + 2) / 3, n);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 1);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return r.participation[a - 1] > r.participation[b - 1];
  });
  for (int mode : order) {
    if (r.captured > threshold * r.total) break;
    if (static_cast<int>(r.selected.size()) >= limit) break;
    r.selected.push_back(mode);
    r.captured += r.participation[mode - 1];
  }
  return r;
}

MasterSplit initial_master_set(const ModalModel& modal, const ForcingSpec& forcing, int N,
                               double threshold, std::optional<int> cap) {
  return MasterSplit(rank_linear_participation(modal, forcing, N, threshold, cap).selected,
                     modal.size());
}

Recommendation recommend(const ModalModel& modal, const MasterSplit& split, double p,
                         const SolveOptions& solve) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0, 1)");
  Recommendation rec;
  rec.curvature = curvature_report(compute_ssm(modal, split, solve));
  const double total = rec.curvature.sum_abs();
  rec.target = (1.0 - p) * total;
  if (total == 0.0) return rec;
  for (const auto& e : rec.curvature.ranked()) {
    if (rec.accumulated >= rec.target) break;
    rec.added.push_back(e.mode);
    rec.accumulated += std::abs(e.curvature);
  }
  return rec;
}

std::vector<int> recommend_modes(const ModalModel& modal, const MasterSplit& split, double p) {
  return recommend(modal, split, p).added;
}

SelectionReport run_selection(const ModalModel& modal, const ForcingSpec& forcing,
                              const SelectionConfig& cfg) {
  cfg.validate();
  SelectionReport report;
  if (cfg.initial) {
    report.initial = MasterSplit(*cfg.initial, modal.size());
  } else {
    report.linear = rank_linear_participation(modal, forcing, cfg.N, cfg.linear_energy_threshold,
                                              cfg.effective_linear_cap());
    report.initial = MasterSplit(report.linear->selected, modal.size());
  }
  MasterSplit current = report.initial;
  if (current.m() >= cfg.N) {
    report.final_set = current;
    report.termination = "initial set already has N modes";
    return report;
  }
  while (true) {
    if (current.slaves().empty()) {
      report.termination = "no slave modes left";
      break;
    }
    SelectionRound round;
    round.split = current;
    round.recommendation = recommend(modal, current, cfg.p, cfg.solve);
    const int room = cfg.N - current.m();
    const auto& added = round.recommendation.added;
    round.accepted.assign(added.begin(), added.begin() + std::min<int>(room, added.size()));
    report.rounds.push_back(round);
    if (round.accepted.empty()) {
      report.termination = "no mode recommended";
      break;
    }
    current = current.with(round.accepted);
    if (!cfg.repeat) {
      report.termination = "single round requested";
      break;
    }
    if (current.m() >= cfg.N) {
      report.termination = "mode limit N reached";
      break;
    }
  }
  report.final_set = current;
  return report;
}

}  // namespace ssmsel
