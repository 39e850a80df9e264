#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>

#include "ssmsel/system_model.hpp"

namespace ssmsel {

class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelFile {
  SecondOrderSystem system;
  std::optional<ForcingSpec> forcing;
};

// Text model format. Blank lines and lines starting with '#' are ignored.
//
//   n <dof count>
//   M | C | K          followed by n*n row-major floats
//   QUAD               one "k i j value" tuple per line, 1-based
//   CUBIC              one "k i j l value" tuple per line, 1-based
//   FORCE              followed by "amplitude_vector v1 .. vn", "omega w", "epsilon e"
//
// A missing C section means zero damping. Tensor tuples are canonicalized on
// read, so permuted or repeated indices are summed.
ModelFile parse_model(std::istream& in);
ModelFile read_model(const std::filesystem::path& path);

void write_model(std::ostream& out, const SecondOrderSystem& sys,
                 const std::optional<ForcingSpec>& forcing = std::nullopt);
void write_model(const std::filesystem::path& path, const SecondOrderSystem& sys,
                 const std::optional<ForcingSpec>& forcing = std::nullopt);

}  // namespace ssmsel
