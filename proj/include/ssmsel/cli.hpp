#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssmsel/fe_models.hpp"
#include "ssmsel/system_model.hpp"

namespace ssmsel::cli {

/// Invalid or inconsistent command-line / config-file input. Exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;         // eig model ssm curvature select frc asweep reproduce
  std::string reproduce_case;  // for `reproduce`
  std::string model = "three-mass";  // three-mass, straight-beam, curved-beam, or a file path
  // Beam overrides.
  std::optional<int> n_elem;
  std::optional<std::string> support;
  std::string load = "consistent";
  // Forcing. `force` scales the built-in load pattern; `epsilon` multiplies any load.
  std::optional<double> force;
  double epsilon = 1.0;
  std::optional<double> omega;
  std::optional<double> omega_min, omega_max;  // absolute rad/s
  double eps_min = 0.005, eps_max = 1.0;       // fractions of the load for asweep
  int nh = 7;
  // Mode sets (1-based).
  std::vector<int> master;
  std::vector<int> initial;
  double p = 0.05;
  int N = 10;
  bool repeat = false;
  std::vector<int> dofs;  // 1-based DOFs reported in response CSVs
  double step = 0.0;      // continuation step, 0 for automatic
  std::string out_dir = ".";
  bool svg = false;

  void validate() const;
  /// Resolved configuration as `key = value` lines, valid config-file syntax.
  std::vector<std::string> describe() const;
};

struct LoadedModel {
  std::string name;
  std::shared_ptr<const SecondOrderSystem> system;
  ForcingSpec forcing;
  std::optional<BeamModel> beam;
  std::vector<std::string> dof_labels;  // one per DOF
  std::vector<int> default_dofs;        // 0-based
};

LoadedModel load_model(const RunConfig& cfg);

/// Runs one command. Returns the process exit status: 0 on success, 2 for
/// configuration and I/O errors, 3 for numerical failures, 1 otherwise. On
/// failure a one-line JSON error record is written to `err`.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Parses arguments (and an optional --config file), then calls run().
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ssmsel::cli
