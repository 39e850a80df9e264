#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ssmsel/curvature.hpp"
#include "ssmsel/periodic_response.hpp"

namespace ssmsel {

struct SelectionConfig {
  double p = 0.05;  // curvature tolerance, 0 < p < 1
  int N = 10;       // maximum number of master modes
  bool repeat = false;
  double linear_energy_threshold = 0.9;
  /// Cap on the size of the linear initial set; unset means ceil(2N/3).
  std::optional<int> linear_cap;
  /// Skips the linear ranking and starts from this set (1-based modes).
  std::optional<std::vector<int>> initial;
  SolveOptions solve;

  void validate() const;
  int effective_linear_cap() const;
};

/// Linear superposition ranking at the forcing frequency.
struct LinearRanking {
  std::vector<double> participation;  // n_i = |z_i|, index i-1 for mode i
  std::vector<int> selected;          // 1-based, in selection order
  double captured = 0.0;              // sum of n_i over selected
  double total = 0.0;
};

LinearRanking rank_linear_participation(const ModalModel& modal, const ForcingSpec& forcing,
                                        int N, double threshold = 0.9,
                                        std::optional<int> cap = std::nullopt);

/// Modes with the largest linear participation until their share exceeds
/// `threshold` or the cap (default ceil(2N/3)) is reached.
MasterSplit initial_master_set(const ModalModel& modal, const ForcingSpec& forcing, int N,
                               double threshold = 0.9, std::optional<int> cap = std::nullopt);

struct Recommendation {
  CurvatureReport curvature;
  std::vector<int> added;  // selection order, descending |curv_k|
  double accumulated = 0.0;
  double target = 0.0;     // (1 - p) sum_k |curv_k|
};

/// Smallest greedy prefix of slave modes, by descending |curv_k|, whose
/// curvature share reaches 1 - p.
Recommendation recommend(const ModalModel& modal, const MasterSplit& split, double p,
                         const SolveOptions& solve = {});
std::vector<int> recommend_modes(const ModalModel& modal, const MasterSplit& split, double p);

struct SelectionRound {
  MasterSplit split;  // set the curvatures were computed for
  Recommendation recommendation;
  std::vector<int> accepted;  // members of P kept after the cap
};

struct SelectionReport {
  MasterSplit initial;
  std::optional<LinearRanking> linear;
  std::vector<SelectionRound> rounds;
  MasterSplit final_set;
  std::string termination;
};

SelectionReport run_selection(const ModalModel& modal, const ForcingSpec& forcing,
                              const SelectionConfig& cfg);

}  // namespace ssmsel
